//! Image scanning microscopy: PSF modelling, dataset simulation, pixel reassignment,
//! multi-image deconvolution and sub-Nyquist reconstruction.
//!
//! Lengths are in nanometres unless a name says otherwise. Images are `[y, x]`;
//! datasets and PSF stacks are `[y, x, channel]`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod container;
pub mod error;
pub mod fft;
pub mod optics;
pub mod reconstruct;
pub mod resample;
pub mod simulate;

pub use error::{IsmError, Result};
