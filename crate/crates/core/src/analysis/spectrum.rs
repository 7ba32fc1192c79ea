use ndarray::Array2;
use rustfft::num_complex::Complex64;

use crate::fft::{frequency, ifftshift, Fft2};
use crate::optics::ScanGrid;

/// Modulus of the angular mean of the 2-D spectrum, per annulus one frequency pixel wide.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectrum {
    /// Bin centres in cycles per nm, from zero up to the Nyquist frequency.
    pub k_bins: Vec<f64>,
    pub values: Vec<f64>,
    /// Number of DFT samples averaged into each bin.
    pub counts: Vec<usize>,
}

impl RadialSpectrum {
    pub fn k_nyquist(&self) -> f64 {
        *self.k_bins.last().unwrap_or(&0.0)
    }
}

/// `S(k) = |⟨I(k, φ)⟩_φ|`.
///
/// The image origin is its centre pixel; the DFT is unitary (`1/√N`). The annulus width is
/// the coarser of the two frequency spacings and the last bin sits at the Nyquist frequency
/// of the coarser axis. Complex values are averaged before taking the modulus.
pub fn radial_spectrum(image: &Array2<f64>, grid: &ScanGrid) -> RadialSpectrum {
    let (ny, nx) = image.dim();
    let plan = Fft2::new(ny, nx);
    let norm = 1.0 / ((ny * nx) as f64).sqrt();
    let spec = plan.forward_real(&ifftshift(image));

    let dk = (1.0 / (ny as f64 * grid.step_y_nm)).max(1.0 / (nx as f64 * grid.step_x_nm));
    let k_nyq = (0.5 / grid.step_y_nm).min(0.5 / grid.step_x_nm);
    let n_bins = (k_nyq / dk + 1e-9).floor() as usize + 1;
    let mut sums = vec![Complex64::new(0.0, 0.0); n_bins];
    let mut counts = vec![0usize; n_bins];
    for ((i, j), &v) in spec.indexed_iter() {
        let ky = frequency(i, ny) / grid.step_y_nm;
        let kx = frequency(j, nx) / grid.step_x_nm;
        let b = (kx.hypot(ky) / dk).round() as usize;
        if b < n_bins {
            sums[b] += v * norm;
            counts[b] += 1;
        }
    }
    let k_bins = (0..n_bins).map(|b| b as f64 * dk).collect();
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| if n > 0 { s.norm() / n as f64 } else { 0.0 })
        .collect();
    RadialSpectrum {
        k_bins,
        values,
        counts,
    }
}
