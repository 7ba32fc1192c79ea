//! Command-line front end. Every stage reads and writes `.ism` containers; tables go to
//! CSV with a header row naming columns and units. All lengths are in nm.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::analysis::{fit_gaussian_profile, radial_spectrum, GaussianFit, ProfileAxis};
use crate::container::{self, ContainerKind, IsmContainer};
use crate::error::{IsmError, Result};
use crate::optics::{
    fingerprint_from_psf, psf_stack, shift_vectors_from_psf, Fingerprint, OpticalConfig, PsfModel,
    ScanGrid, ShiftStatus, ShiftVectors, SubpixelMethod,
};
use crate::reconstruct::{
    apr, estimate_shifts, fingerprint_from_data, rl_deconvolve, sum_image, RlOptions, ShiftOptions,
};
use crate::resample::{
    check_sampling_condition, downsample, upsampled_reconstruct, UpsampleMethod, UpsampleOptions,
};
use crate::simulate::{
    add_poisson, make_phantom, simulate_intensity, BackgroundModel, IsmDataset, PhantomParams,
};

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "ism",
    version,
    about = "Image scanning microscopy simulation and reconstruction"
)]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Compute the complete PSF of every detector element.
    SimulatePsf(SimulatePsfArgs),
    /// Simulate a phantom imaged by the detector array.
    SimulateDataset(SimulateDatasetArgs),
    /// Sum all channels (confocal image with a large pinhole).
    Sum(InOut),
    /// Per-channel totals on the detector lattice, as CSV.
    Fingerprint(FingerprintArgs),
    /// Shift vectors from phase correlation (or from PSFs), as CSV.
    Shifts(ShiftsArgs),
    /// Adaptive pixel reassignment.
    Apr(AprArgs),
    /// Multi-image Richardson-Lucy deconvolution.
    Deconvolve(DeconvolveArgs),
    /// Keep every other scan pixel on both axes.
    Downsample(InOut),
    /// Central ring, zero-insertion and reconstruction on the twice-finer grid.
    UpsampleReconstruct(UpsampleArgs),
    /// Check that the scan step equals twice the neighbouring-element shift.
    CheckSampling(CheckSamplingArgs),
    /// Radial spectra of one or more images, as CSV.
    Spectrum(SpectrumArgs),
    /// Gaussian fit of a profile through the maximum, as CSV.
    FitPsf(FitPsfArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModelArg {
    Gaussian,
    Airy,
}

#[derive(Debug, Args, Serialize)]
struct OpticsArgs {
    /// Detector elements per side (odd).
    #[arg(long, default_value_t = 5)]
    array_side: usize,
    /// Side of one detector element, in nm on the detector plane.
    #[arg(long, default_value_t = 50_000.0)]
    element_size_nm: f64,
    /// Centre-to-centre element distance, in nm on the detector plane.
    #[arg(long, default_value_t = 75_000.0)]
    element_pitch_nm: f64,
    #[arg(long, default_value_t = 450.0)]
    magnification: f64,
    #[arg(long, default_value_t = 635.0)]
    lambda_exc_nm: f64,
    #[arg(long, default_value_t = 660.0)]
    lambda_em_nm: f64,
    #[arg(long, default_value_t = 1.4)]
    na: f64,
    /// Refractive index of the immersion medium.
    #[arg(long, default_value_t = 1.5)]
    refractive_index: f64,
    #[arg(long, value_enum, default_value_t = ModelArg::Gaussian)]
    psf_model: ModelArg,
}

impl OpticsArgs {
    fn config(&self) -> Result<OpticalConfig> {
        let cfg = OpticalConfig {
            lambda_exc_nm: self.lambda_exc_nm,
            lambda_em_nm: self.lambda_em_nm,
            numerical_aperture: self.na,
            refractive_index: self.refractive_index,
            magnification: self.magnification,
            array_side: self.array_side,
            element_size_um: self.element_size_nm * 1e-3,
            element_pitch_um: self.element_pitch_nm * 1e-3,
            psf_model: match self.psf_model {
                ModelArg::Gaussian => PsfModel::Gaussian,
                ModelArg::Airy => PsfModel::AiryScalar,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args, Serialize)]
struct GridArgs {
    /// Scan pixels per side.
    #[arg(long, default_value_t = 64)]
    pixels: usize,
    /// Scan step.
    #[arg(long, default_value_t = 40.0)]
    step_nm: f64,
}

impl GridArgs {
    fn grid(&self) -> Result<ScanGrid> {
        ScanGrid::square(self.pixels, self.step_nm)
    }
}

#[derive(Debug, Args, Serialize)]
struct SimulatePsfArgs {
    #[command(flatten)]
    optics: OpticsArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Keep the raw PSF amplitudes instead of scaling the stack to unit total.
    #[arg(long)]
    no_normalize: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PhantomArg {
    PointSources,
    LinePairs,
    SiemensStar,
    File,
}

#[derive(Debug, Args, Serialize)]
struct SimulateDatasetArgs {
    #[command(flatten)]
    optics: OpticsArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = PhantomArg::PointSources)]
    phantom: PhantomArg,
    /// Phantom image (.pgm or .csv) for `--phantom file`.
    #[arg(long)]
    phantom_file: Option<PathBuf>,
    /// Photons per emitter (point sources) or in total (other phantoms).
    #[arg(long, default_value_t = 1e4)]
    photons: f64,
    /// Number of randomly placed point sources.
    #[arg(long, default_value_t = 10)]
    emitters: usize,
    /// Minimum distance of point sources from the border.
    #[arg(long, default_value_t = 400.0)]
    margin_nm: f64,
    /// Line-pair spacing.
    #[arg(long, default_value_t = 200.0)]
    spacing_nm: f64,
    /// Line length.
    #[arg(long, default_value_t = 1000.0)]
    length_nm: f64,
    #[arg(long, default_value_t = 16)]
    spokes: usize,
    /// Siemens star radius.
    #[arg(long, default_value_t = 1000.0)]
    radius_nm: f64,
    /// Constant background per pixel and channel, in photons.
    #[arg(long, default_value_t = 0.0)]
    background: f64,
    /// Skip the Poisson draw and store noise-free intensities.
    #[arg(long)]
    no_noise: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct InOut {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct FingerprintArgs {
    /// Dataset or PSF container.
    #[arg(short, long)]
    input: PathBuf,
    /// CSV destination (stdout when absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ShiftsArgs {
    /// Dataset container (phase correlation) or PSF container (peak positions).
    #[arg(short, long)]
    input: PathBuf,
    /// Integer-pixel peaks only.
    #[arg(long)]
    no_subpixel: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AprArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Use the PSF peak positions instead of estimating shifts from the data.
    #[arg(long)]
    psf: Option<PathBuf>,
    #[arg(long)]
    no_subpixel: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct DeconvolveArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// PSF container on the dataset grid.
    #[arg(long)]
    psf: PathBuf,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// Known constant background per pixel and channel, in photons.
    #[arg(long)]
    background: Option<f64>,
    /// CSV with the negative log-likelihood and flux after every iteration.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    Apr,
    Rl,
}

#[derive(Debug, Args, Serialize)]
struct UpsampleArgs {
    /// Coarse dataset, sampled at the detector-element pitch.
    #[arg(short, long)]
    input: PathBuf,
    /// PSF container on the fine grid (required for rl).
    #[arg(long)]
    psf: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Rl)]
    method: MethodArg,
    #[arg(long, default_value_t = 30)]
    iterations: usize,
    /// Allowed |Δx_s − 2μ(Δx_d)| as a fraction of the scan step.
    #[arg(long, default_value_t = 0.1)]
    tolerance: f64,
    /// Use only the eight elements around the centre.
    #[arg(long)]
    exclude_center: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct CheckSamplingArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Take the shifts from this PSF container instead of the data.
    #[arg(long)]
    psf: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    tolerance: f64,
}

#[derive(Debug, Args, Serialize)]
struct SpectrumArgs {
    /// Image or dataset containers; datasets are summed over channels first.
    #[arg(short, long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum AxisArg {
    X,
    Y,
}

#[derive(Debug, Args, Serialize)]
struct FitPsfArgs {
    /// Image, PSF or dataset container.
    #[arg(short, long)]
    input: PathBuf,
    /// Channel to fit (PSF or dataset); all channels when absent.
    #[arg(long)]
    channel: Option<usize>,
    #[arg(long, value_enum, default_value_t = AxisArg::X)]
    axis: AxisArg,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(IsmError::InvalidParameter(format!("thread pool: {e}"))),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// The resolved command as provenance, plus the provenance of the primary input.
fn provenance(cli: &Cli, input: Option<&Map<String, Value>>) -> Map<String, Value> {
    let mut map = Map::new();
    map.insert(
        "tool".into(),
        Value::from(concat!("ism ", env!("CARGO_PKG_VERSION"))),
    );
    map.insert(
        "invocation".into(),
        serde_json::to_value(&cli.command).unwrap_or(Value::Null),
    );
    if let Some(prev) = input {
        if !prev.is_empty() {
            map.insert("input".into(), Value::Object(prev.clone()));
        }
    }
    map
}

fn load_dataset(path: &Path) -> Result<IsmDataset> {
    container::read(path)?.to_dataset()
}

fn load_psf(path: &Path) -> Result<crate::optics::PsfStack> {
    container::read(path)?.to_psf()
}

fn subpixel(no_subpixel: bool) -> SubpixelMethod {
    if no_subpixel {
        SubpixelMethod::None
    } else {
        SubpixelMethod::Parabolic
    }
}

fn csv_writer(output: Option<&PathBuf>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match output {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| IsmError::io(p, e))?),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn write_rows(output: Option<&PathBuf>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let target = output.map_or_else(|| PathBuf::from("<stdout>"), Clone::clone);
    let csv_err = |e: csv::Error| IsmError::import(&target, e);
    let mut w = csv_writer(output)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| IsmError::io(&target, e))
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::SimulatePsf(a) => {
            let cfg = a.optics.config()?;
            let stack = psf_stack(&cfg, &a.grid.grid()?, !a.no_normalize)?;
            let mut prov = provenance(cli, None);
            prov.insert(
                "optics".into(),
                serde_json::to_value(&cfg).unwrap_or(Value::Null),
            );
            container::write(&IsmContainer::from_psf(&stack, prov), &a.output)
        }
        Command::SimulateDataset(a) => simulate_dataset(cli, a),
        Command::Sum(a) => {
            let ds = load_dataset(&a.input)?;
            let out = sum_image(&ds);
            let prov = provenance(cli, Some(&ds.provenance));
            container::write(&IsmContainer::from_recon(&out, prov), &a.output)
        }
        Command::Fingerprint(a) => {
            let c = container::read(&a.input)?;
            let (fp, detector) = match c.header.kind {
                ContainerKind::Psf => {
                    let s = c.to_psf()?;
                    (fingerprint_from_psf(&s), s.detector)
                }
                _ => {
                    let d = c.to_dataset()?;
                    (fingerprint_from_data(&d), d.detector)
                }
            };
            write_fingerprint(a.output.as_ref(), &fp, &detector)
        }
        Command::Shifts(a) => {
            let c = container::read(&a.input)?;
            let shifts = match c.header.kind {
                ContainerKind::Psf => shift_vectors_from_psf(&c.to_psf()?),
                _ => estimate_shifts(
                    &c.to_dataset()?,
                    &ShiftOptions {
                        subpixel: subpixel(a.no_subpixel),
                        ..ShiftOptions::default()
                    },
                )?,
            };
            write_shifts(a.output.as_ref(), &shifts)
        }
        Command::Apr(a) => {
            let ds = load_dataset(&a.input)?;
            let shifts = match &a.psf {
                Some(p) => shift_vectors_from_psf(&load_psf(p)?),
                None => estimate_shifts(
                    &ds,
                    &ShiftOptions {
                        subpixel: subpixel(a.no_subpixel),
                        ..ShiftOptions::default()
                    },
                )?,
            };
            let out = apr(&ds, &shifts)?;
            let mut prov = provenance(cli, Some(&ds.provenance));
            prov.insert(
                "shifts_nm".into(),
                serde_json::to_value(&shifts).unwrap_or(Value::Null),
            );
            container::write(&IsmContainer::from_recon(&out, prov), &a.output)
        }
        Command::Deconvolve(a) => {
            let ds = load_dataset(&a.input)?;
            let stack = load_psf(&a.psf)?;
            let options = RlOptions {
                iterations: a.iterations,
                background: a
                    .background
                    .map(|b| BackgroundModel::PerChannel(vec![b; ds.n_channels()])),
                initial: None,
                track: a.log.is_some(),
            };
            let out = rl_deconvolve(&ds, &stack, &options)?;
            if let Some(log) = &a.log {
                let rows: Vec<Vec<String>> = out
                    .history
                    .iter()
                    .map(|r| {
                        vec![
                            r.iteration.to_string(),
                            format!("{:.17e}", r.nll),
                            format!("{:.17e}", r.flux),
                        ]
                    })
                    .collect();
                write_rows(Some(log), &["iteration", "nll", "flux_photons"], &rows)?;
            }
            let prov = provenance(cli, Some(&ds.provenance));
            container::write(&IsmContainer::from_recon(&out, prov), &a.output)
        }
        Command::Downsample(a) => {
            let ds = load_dataset(&a.input)?;
            let mut out = downsample(&ds);
            out.provenance = provenance(cli, Some(&out.provenance));
            container::write(&IsmContainer::from_dataset(&out), &a.output)
        }
        Command::UpsampleReconstruct(a) => {
            let ds = load_dataset(&a.input)?;
            let mut options = UpsampleOptions::new(match a.method {
                MethodArg::Apr => UpsampleMethod::Apr,
                MethodArg::Rl => UpsampleMethod::Rl,
            });
            options.iterations = a.iterations;
            options.tolerance_fraction = a.tolerance;
            options.include_center = !a.exclude_center;
            if let Some(p) = &a.psf {
                let stack = load_psf(p)?;
                if a.method == MethodArg::Apr {
                    options.shifts = Some(shift_vectors_from_psf(&stack));
                }
                options.psf = Some(stack);
            }
            let out = upsampled_reconstruct(&ds, &options)?;
            let mut prov = provenance(cli, Some(&ds.provenance));
            let shifts = match (&options.psf, &out.shifts_used) {
                (_, Some(s)) => Some(s.clone()),
                (Some(stack), None) => Some(shift_vectors_from_psf(stack)),
                _ => None,
            };
            if let Some(s) = shifts {
                if let Ok(report) = check_sampling_condition(&s, &ds.grid, a.tolerance) {
                    print!("{report}");
                    prov.insert("sampling_report".into(), report.to_json());
                }
            }
            container::write(&IsmContainer::from_recon(&out, prov), &a.output)
        }
        Command::CheckSampling(a) => {
            let ds = load_dataset(&a.input)?;
            let shifts = match &a.psf {
                Some(p) => {
                    let stack = load_psf(p)?;
                    shift_vectors_from_psf(&stack)
                }
                None => estimate_shifts(&ds, &ShiftOptions::default())?,
            };
            let report = check_sampling_condition(&shifts, &ds.grid, a.tolerance)?;
            print!("{report}");
            Ok(())
        }
        Command::Spectrum(a) => {
            let mut spectra = Vec::new();
            for path in &a.input {
                let c = container::read(path)?;
                let (image, grid) = match c.header.kind {
                    ContainerKind::Image => (c.to_image()?, c.header.grid),
                    ContainerKind::Dataset => {
                        let d = c.to_dataset()?;
                        (sum_image(&d).image, d.grid)
                    }
                    ContainerKind::Psf => {
                        let s = c.to_psf()?;
                        (s.data.sum_axis(ndarray::Axis(2)), s.grid)
                    }
                };
                spectra.push(radial_spectrum(&image, &grid));
            }
            let n = spectra.iter().map(|s| s.k_bins.len()).min().unwrap_or(0);
            let labels: Vec<String> = a
                .input
                .iter()
                .map(|p| {
                    let stem = p
                        .file_stem()
                        .map_or("image".into(), |s| s.to_string_lossy().into_owned());
                    format!("s_{stem}")
                })
                .collect();
            let mut header = vec!["k_per_nm"];
            header.extend(labels.iter().map(String::as_str));
            let rows: Vec<Vec<String>> = (0..n)
                .map(|b| {
                    let mut row = vec![format!("{:.9e}", spectra[0].k_bins[b])];
                    row.extend(spectra.iter().map(|s| format!("{:.9e}", s.values[b])));
                    row
                })
                .collect();
            write_rows(a.output.as_ref(), &header, &rows)
        }
        Command::FitPsf(a) => fit_psf(a),
    }
}

fn simulate_dataset(cli: &Cli, a: &SimulateDatasetArgs) -> Result<()> {
    let cfg = a.optics.config()?;
    let grid = a.grid.grid()?;
    let params = match a.phantom {
        PhantomArg::PointSources => {
            PhantomParams::random_points(&grid, a.emitters, a.margin_nm, a.seed, a.photons)
        }
        PhantomArg::LinePairs => PhantomParams::LinePairs {
            spacing_nm: a.spacing_nm,
            length_nm: a.length_nm,
            total_photons: a.photons,
        },
        PhantomArg::SiemensStar => PhantomParams::SiemensStar {
            spokes: a.spokes,
            radius_nm: a.radius_nm,
            total_photons: a.photons,
        },
        PhantomArg::File => {
            let path = a.phantom_file.as_ref().ok_or_else(|| {
                IsmError::MissingInput("--phantom file needs --phantom-file".into())
            })?;
            PhantomParams::Imported {
                image: container::import_phantom(path)?,
                total_photons: a.photons,
            }
        }
    };
    let phantom = make_phantom(&params, &grid)?;
    let stack = psf_stack(&cfg, &grid, true)?;
    let background = (a.background > 0.0)
        .then(|| BackgroundModel::PerChannel(vec![a.background; stack.n_channels()]));
    let intensity = simulate_intensity(&phantom, &stack, background.as_ref())?;
    let mut ds = if a.no_noise {
        intensity
    } else {
        add_poisson(&intensity, a.seed)?
    };
    let mut prov = provenance(cli, None);
    prov.insert(
        "optics".into(),
        serde_json::to_value(&cfg).unwrap_or(Value::Null),
    );
    prov.insert("seed".into(), Value::from(a.seed));
    prov.insert(
        "phantom".into(),
        serde_json::to_value(phantom.kind).unwrap_or(Value::Null),
    );
    prov.insert("phantom_photons".into(), Value::from(phantom.total_photons));
    ds.provenance = prov;
    container::write(&IsmContainer::from_dataset(&ds), &a.output)
}

fn write_fingerprint(
    output: Option<&PathBuf>,
    fp: &Fingerprint,
    detector: &crate::optics::DetectorMap,
) -> Result<()> {
    let rows: Vec<Vec<String>> = detector
        .lattice
        .iter()
        .enumerate()
        .map(|(c, &(r, col))| {
            let (x, y) = detector.position(c);
            vec![
                c.to_string(),
                r.to_string(),
                col.to_string(),
                format!("{x:.6}"),
                format!("{y:.6}"),
                format!("{:.12e}", fp.values[[r, col]]),
            ]
        })
        .collect();
    write_rows(
        output,
        &["channel", "row", "col", "x_d_nm", "y_d_nm", "total_photons"],
        &rows,
    )
}

fn write_shifts(output: Option<&PathBuf>, shifts: &ShiftVectors) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..shifts.len())
        .map(|c| {
            let (r, col) = shifts.detector.lattice[c];
            let (x, y) = shifts.detector.position(c);
            let v = shifts.vectors[c];
            let status = match shifts.status[c] {
                ShiftStatus::Ok => "ok",
                ShiftStatus::IllPosed => "ill_posed",
                ShiftStatus::Imputed => "imputed",
            };
            vec![
                c.to_string(),
                r.to_string(),
                col.to_string(),
                format!("{x:.6}"),
                format!("{y:.6}"),
                format!("{:.6}", v.x),
                format!("{:.6}", v.y),
                status.to_string(),
            ]
        })
        .collect();
    write_rows(
        output,
        &[
            "channel", "row", "col", "x_d_nm", "y_d_nm", "mu_x_nm", "mu_y_nm", "status",
        ],
        &rows,
    )
}

fn fit_psf(a: &FitPsfArgs) -> Result<()> {
    let c = container::read(&a.input)?;
    let grid = c.header.grid;
    let images: Vec<(String, ndarray::Array2<f64>)> = match c.header.kind {
        ContainerKind::Image => vec![("image".into(), c.to_image()?)],
        ContainerKind::Psf | ContainerKind::Dataset => {
            let data = if c.header.kind == ContainerKind::Psf {
                c.to_psf()?.data
            } else {
                c.to_dataset()?.data
            };
            let n = data.len_of(ndarray::Axis(2));
            let channels: Vec<usize> = match a.channel {
                Some(ch) if ch < n => vec![ch],
                Some(ch) => {
                    return Err(IsmError::InvalidParameter(format!("channel {ch} of {n}")));
                }
                None => (0..n).collect(),
            };
            channels
                .into_iter()
                .map(|ch| {
                    (
                        ch.to_string(),
                        data.index_axis(ndarray::Axis(2), ch).to_owned(),
                    )
                })
                .collect()
        }
    };
    let axis = match a.axis {
        AxisArg::X => ProfileAxis::X,
        AxisArg::Y => ProfileAxis::Y,
    };
    let mut rows = Vec::new();
    for (label, image) in &images {
        let f: GaussianFit = fit_gaussian_profile(image, &grid, axis)?;
        rows.push(vec![
            label.clone(),
            format!("{:.9e}", f.amplitude),
            format!("{:.6}", f.amplitude_err),
            format!("{:.6}", f.mean_nm),
            format!("{:.6}", f.mean_err),
            format!("{:.6}", f.sigma_nm),
            format!("{:.6}", f.sigma_err),
            format!("{:.6}", f.fwhm_nm),
            format!("{:.6}", f.fwhm_err),
        ]);
    }
    write_rows(
        a.output.as_ref(),
        &[
            "channel",
            "amplitude",
            "amplitude_err",
            "mean_nm",
            "mean_err_nm",
            "sigma_nm",
            "sigma_err_nm",
            "fwhm_nm",
            "fwhm_err_nm",
        ],
        &rows,
    )
}
