//! Two-dimensional DFT helpers shared by the PSF model, the forward model and the
//! reconstruction routines.
//!
//! Convention: images are `Array2<f64>` indexed `[row (y), column (x)]`. A kernel is
//! "centered" when its origin sits at pixel `(ny / 2, nx / 2)`; `ifftshift` moves that
//! pixel to index `(0, 0)` so that a DFT product implements circular convolution.

use std::sync::Arc;

use ndarray::{Array2, Zip};
use rustfft::{num_complex::Complex64, Fft, FftPlanner};

/// Forward/inverse 2-D transform plans for a fixed shape.
#[derive(Clone)]
pub struct Fft2 {
    ny: usize,
    nx: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("ny", &self.ny)
            .field("nx", &self.nx)
            .finish()
    }
}

impl Fft2 {
    pub fn new(ny: usize, nx: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            ny,
            nx,
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }

    fn run(
        &self,
        data: &mut Array2<Complex64>,
        rows: &Arc<dyn Fft<f64>>,
        cols: &Arc<dyn Fft<f64>>,
    ) {
        assert_eq!(data.dim(), (self.ny, self.nx), "FFT plan shape mismatch");
        if !data.is_standard_layout() {
            *data = data.as_standard_layout().to_owned();
        }
        rows.process(data.as_slice_mut().expect("standard layout"));
        let mut t = data.t().as_standard_layout().to_owned();
        cols.process(t.as_slice_mut().expect("standard layout"));
        data.assign(&t.t());
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform including the 1/N factor, in place.
    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.ny * self.nx) as f64;
        data.mapv_inplace(|v| v * scale);
    }

    pub fn forward_real(&self, image: &Array2<f64>) -> Array2<Complex64> {
        let mut data = image.mapv(|v| Complex64::new(v, 0.0));
        self.forward(&mut data);
        data
    }

    /// Inverse transform keeping only the real part.
    pub fn inverse_real(&self, spectrum: &Array2<Complex64>) -> Array2<f64> {
        let mut data = spectrum.clone();
        self.inverse(&mut data);
        data.mapv(|v| v.re)
    }
}

/// Circularly rolls `image` so that output[(i + dy) mod ny, (j + dx) mod nx] = image[i, j].
pub fn roll(image: &Array2<f64>, dy: isize, dx: isize) -> Array2<f64> {
    let (ny, nx) = image.dim();
    if ny == 0 || nx == 0 {
        return image.clone();
    }
    let sy = dy.rem_euclid(ny as isize) as usize;
    let sx = dx.rem_euclid(nx as isize) as usize;
    Array2::from_shape_fn((ny, nx), |(i, j)| {
        image[((i + ny - sy) % ny, (j + nx - sx) % nx)]
    })
}

/// Moves the center pixel `(ny / 2, nx / 2)` to the origin.
pub fn ifftshift(image: &Array2<f64>) -> Array2<f64> {
    let (ny, nx) = image.dim();
    roll(image, -((ny / 2) as isize), -((nx / 2) as isize))
}

/// Inverse of [`ifftshift`].
pub fn fftshift(image: &Array2<f64>) -> Array2<f64> {
    let (ny, nx) = image.dim();
    roll(image, (ny / 2) as isize, (nx / 2) as isize)
}

/// Signed DFT frequency index of bin `j` for an axis of length `n`, in cycles per sample.
pub fn frequency(j: usize, n: usize) -> f64 {
    let j = j as isize;
    let n_i = n as isize;
    let signed = if j > (n_i - 1) / 2 { j - n_i } else { j };
    signed as f64 / n as f64
}

/// Transfer function of a centered kernel for circular convolution on its own grid.
pub fn kernel_spectrum(fft: &Fft2, centered_kernel: &Array2<f64>) -> Array2<Complex64> {
    fft.forward_real(&ifftshift(centered_kernel))
}

/// Circular convolution of `image` with a centered kernel of the same shape.
pub fn convolve_circular(image: &Array2<f64>, centered_kernel: &Array2<f64>) -> Array2<f64> {
    let (ny, nx) = image.dim();
    let fft = Fft2::new(ny, nx);
    let mut spec = fft.forward_real(image);
    let k = kernel_spectrum(&fft, centered_kernel);
    Zip::from(&mut spec).and(&k).for_each(|s, &k| *s *= k);
    fft.inverse_real(&spec)
}

/// Multiplies `spectrum` by the phase ramp that translates the image content by
/// `(dy, dx)` pixels (positive values move content toward larger indices).
pub fn apply_translation(spectrum: &mut Array2<Complex64>, dy: f64, dx: f64) {
    let (ny, nx) = spectrum.dim();
    let ramp_y: Vec<Complex64> = (0..ny)
        .map(|i| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * frequency(i, ny) * dy))
        .collect();
    let ramp_x: Vec<Complex64> = (0..nx)
        .map(|j| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * frequency(j, nx) * dx))
        .collect();
    for ((i, j), v) in spectrum.indexed_iter_mut() {
        *v *= ramp_y[i] * ramp_x[j];
    }
}

/// Translates `image` by `(dy, dx)` pixels with periodic boundaries. Integer shifts use an
/// exact roll; fractional shifts use the Fourier shift theorem (the DC term, hence the
/// total, is unchanged).
pub fn translate(image: &Array2<f64>, dy: f64, dx: f64) -> Array2<f64> {
    if dy.fract() == 0.0 && dx.fract() == 0.0 {
        return roll(image, dy as isize, dx as isize);
    }
    let (ny, nx) = image.dim();
    let fft = Fft2::new(ny, nx);
    let mut spec = fft.forward_real(image);
    apply_translation(&mut spec, dy, dx);
    fft.inverse_real(&spec)
}

/// Neumaier-compensated sum.
pub fn compensated_sum<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn roundtrip_transform() {
        let img = Array2::from_shape_fn((6, 5), |(i, j)| (i * 7 + j * 3) as f64 % 5.0);
        let fft = Fft2::new(6, 5);
        let back = fft.inverse_real(&fft.forward_real(&img));
        for (a, b) in img.iter().zip(back.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn shift_pair_is_identity() {
        for &(ny, nx) in &[(4, 4), (5, 7), (1, 3)] {
            let img = Array2::from_shape_fn((ny, nx), |(i, j)| (i * nx + j) as f64);
            assert_eq!(fftshift(&ifftshift(&img)), img);
        }
    }

    #[test]
    fn delta_at_center_reproduces_kernel() {
        let kernel = Array2::from_shape_fn((7, 8), |(i, j)| ((i + 1) * (j + 2)) as f64);
        let mut delta = Array2::zeros((7, 8));
        delta[[3, 4]] = 1.0;
        let out = convolve_circular(&delta, &kernel);
        for (a, b) in out.iter().zip(kernel.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn integer_translation_matches_fourier() {
        let img = Array2::from_shape_fn((8, 8), |(i, j)| ((i as f64) - 3.5).powi(2) + j as f64);
        let exact = roll(&img, 2, -3);
        let fft = Fft2::new(8, 8);
        let mut spec = fft.forward_real(&img);
        apply_translation(&mut spec, 2.0, -3.0);
        let via_fourier = fft.inverse_real(&spec);
        for (a, b) in exact.iter().zip(via_fourier.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn fractional_translation_preserves_total() {
        let img = Array2::from_shape_fn((9, 10), |(i, j)| ((i * 3 + j) % 4) as f64);
        let moved = translate(&img, 0.3, -1.7);
        assert_abs_diff_eq!(moved.sum(), img.sum(), epsilon = 1e-9);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v.iter()), 2.0);
    }
}
