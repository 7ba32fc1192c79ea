fn main() {
    std::process::exit(ism_core::cli::run(std::env::args_os()));
}
