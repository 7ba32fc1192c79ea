//! Quantitative evaluation: Gaussian profile fits and radial spectra.

mod fit;
mod spectrum;

pub use fit::{
    fit_gaussian, fit_gaussian_profile, measure_shift, GaussianFit, ProfileAxis, ShiftMeasurement,
};
pub use spectrum::{radial_spectrum, RadialSpectrum};
