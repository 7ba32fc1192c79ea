//! Reconstruction of a single image from an ISM dataset: plain sum, adaptive pixel
//! reassignment, and multi-image Richardson-Lucy deconvolution.

mod apr;
mod registration;
mod rl;

pub use apr::apr;
pub use registration::{
    correlogram, estimate_shifts, phase_correlation, Correlogram, ShiftOptions,
};
pub use rl::{negative_log_likelihood, rl_deconvolve, IterationRecord, RlOptions};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::fft;
use crate::optics::{Fingerprint, ScanGrid, ShiftVectors};
use crate::simulate::IsmDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconMethod {
    Sum,
    Apr,
    Rl,
    RlBackground,
}

/// A reconstructed image together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconOutput {
    pub image: Array2<f64>,
    pub grid: ScanGrid,
    pub method: ReconMethod,
    /// Zero for non-iterative methods.
    pub iterations: usize,
    pub shifts_used: Option<ShiftVectors>,
    pub flux_in: f64,
    pub flux_out: f64,
    /// Per-iteration likelihood and flux, when requested.
    pub history: Vec<IterationRecord>,
}

impl ReconOutput {
    pub(crate) fn non_iterative(
        image: Array2<f64>,
        grid: ScanGrid,
        method: ReconMethod,
        flux_in: f64,
        shifts_used: Option<ShiftVectors>,
    ) -> Self {
        let flux_out = fft::compensated_sum(image.iter());
        Self {
            image,
            grid,
            method,
            iterations: 0,
            shifts_used,
            flux_in,
            flux_out,
            history: Vec::new(),
        }
    }
}

/// Pixel-wise sum over channels: the confocal image with a pinhole as large as the array.
pub fn sum_image(dataset: &IsmDataset) -> ReconOutput {
    let image = dataset.data.sum_axis(Axis(2));
    ReconOutput::non_iterative(image, dataset.grid, ReconMethod::Sum, dataset.total(), None)
}

/// Per-channel totals on the detector lattice; proportional to the PSF fingerprint.
pub fn fingerprint_from_data(dataset: &IsmDataset) -> Fingerprint {
    Fingerprint::from_totals(&dataset.detector, &dataset.channel_totals())
}
