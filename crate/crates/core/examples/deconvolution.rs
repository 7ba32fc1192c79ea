//! Multi-image Richardson-Lucy, with the likelihood and flux of every iterate.

use ism_core::optics::{psf_stack, OpticalConfig, ScanGrid};
use ism_core::reconstruct::{rl_deconvolve, RlOptions};
use ism_core::simulate::{
    add_poisson, forward_with_background, make_phantom, BackgroundModel, PhantomParams,
};

fn main() -> ism_core::Result<()> {
    let grid = ScanGrid::square(64, 40.0)?;
    let stack = psf_stack(&OpticalConfig::default(), &grid, true)?;
    let phantom = make_phantom(
        &PhantomParams::LinePairs {
            spacing_nm: 160.0,
            length_nm: 1200.0,
            total_photons: 2e5,
        },
        &grid,
    )?;
    let background = BackgroundModel::PerChannel(vec![0.5; 25]);
    let ds = add_poisson(
        &forward_with_background(&phantom.image, &stack, &background)?,
        3,
    )?;

    let plain = rl_deconvolve(
        &ds,
        &stack,
        &RlOptions {
            track: true,
            ..RlOptions::with_iterations(10)
        },
    )?;
    println!("iteration  nll              flux");
    for r in &plain.history {
        println!("{:>9}  {:<15.6e}  {:.1}", r.iteration, r.nll, r.flux);
    }

    let with_bg = rl_deconvolve(
        &ds,
        &stack,
        &RlOptions {
            background: Some(background),
            ..RlOptions::with_iterations(10)
        },
    )?;
    println!(
        "object photons {:.0}; plain estimate {:.0}; background-aware estimate {:.0}",
        phantom.total_photons, plain.flux_out, with_bg.flux_out
    );
    Ok(())
}
