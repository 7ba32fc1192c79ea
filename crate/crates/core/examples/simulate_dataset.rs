//! Point sources through the forward model, with and without shot noise.

use ism_core::optics::{psf_stack, OpticalConfig, ScanGrid};
use ism_core::reconstruct::fingerprint_from_data;
use ism_core::simulate::{add_poisson, make_phantom, simulate_intensity, PhantomParams};

fn main() -> ism_core::Result<()> {
    let grid = ScanGrid::square(64, 40.0)?;
    let stack = psf_stack(&OpticalConfig::default(), &grid, true)?;
    let phantom = make_phantom(
        &PhantomParams::random_points(&grid, 10, 400.0, 7, 1e4),
        &grid,
    )?;

    let clean = simulate_intensity(&phantom, &stack, None)?;
    let noisy = add_poisson(&clean, 7)?;
    println!("phantom photons {:.0}", phantom.total_photons);
    println!(
        "expected counts {:.1}, drawn counts {:.0}",
        clean.total(),
        noisy.total()
    );

    let fp = fingerprint_from_data(&noisy);
    let central = fp.values[[2, 2]] / fp.total();
    println!(
        "central element collects {:.1}% of the signal",
        100.0 * central
    );
    Ok(())
}
