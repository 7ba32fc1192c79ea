//! Radial spectra of the sum, APR and RL reconstructions.

use ism_core::analysis::radial_spectrum;
use ism_core::optics::{psf_stack, OpticalConfig, ScanGrid};
use ism_core::reconstruct::{
    apr, estimate_shifts, rl_deconvolve, sum_image, RlOptions, ShiftOptions,
};
use ism_core::simulate::{add_poisson, forward, make_phantom, PhantomParams};

fn main() -> ism_core::Result<()> {
    let grid = ScanGrid::square(128, 40.0)?;
    let stack = psf_stack(&OpticalConfig::default(), &grid, true)?;
    let star = PhantomParams::SiemensStar {
        spokes: 24,
        radius_nm: 2000.0,
        total_photons: 5e6,
    };
    let ds = add_poisson(&forward(&make_phantom(&star, &grid)?.image, &stack)?, 2)?;
    let shifts = estimate_shifts(&ds, &ShiftOptions::default())?;

    let images = [
        ("sum", sum_image(&ds).image),
        ("apr", apr(&ds, &shifts)?.image),
        (
            "rl",
            rl_deconvolve(&ds, &stack, &RlOptions::default())?.image,
        ),
    ];
    let spectra: Vec<_> = images
        .iter()
        .map(|(_, img)| radial_spectrum(img, &grid))
        .collect();
    println!("k (1/um)   sum        apr        rl");
    for b in (0..spectra[0].k_bins.len()).step_by(4) {
        let row: Vec<String> = spectra
            .iter()
            .map(|s| format!("{:.3e}", s.values[b] / s.values[0]))
            .collect();
        println!("{:>8.2}   {}", spectra[0].k_bins[b] * 1e3, row.join("  "));
    }
    Ok(())
}
