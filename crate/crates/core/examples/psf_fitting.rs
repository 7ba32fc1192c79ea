//! Gaussian fits of PSF profiles: FWHM per channel and the shift of an off-axis element.

use ism_core::analysis::{fit_gaussian_profile, measure_shift, ProfileAxis};
use ism_core::optics::{psf_stack, OpticalConfig, ScanGrid};

fn main() -> ism_core::Result<()> {
    let grid = ScanGrid::square(96, 10.0)?;
    let stack = psf_stack(&OpticalConfig::default(), &grid, true)?;
    let centre = stack.detector.central_index().unwrap();
    let reference = fit_gaussian_profile(&stack.channel(centre), &grid, ProfileAxis::X)?;

    for c in [centre, centre + 1, centre + 2] {
        let fit = fit_gaussian_profile(&stack.channel(c), &grid, ProfileAxis::X)?;
        let shift = measure_shift(&reference, &fit);
        println!(
            "channel {c:>2}: FWHM {:.1} ± {:.2} nm, shift {:.1} ± {:.2} nm (x_d = {:.1} nm)",
            fit.fwhm_nm,
            fit.fwhm_err,
            shift.value_nm,
            shift.uncertainty_nm,
            stack.detector.position(c).0
        );
    }
    Ok(())
}
