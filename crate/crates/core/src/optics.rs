//! Point spread functions of the image scanning microscope.
//!
//! Every detector element `c` sees the complete PSF
//!
//! ```text
//! h(x_s | x_d) = h_exc(-x_s) · [h_em * p](x_s - x_d)
//! ```
//!
//! where `p` is the square active area of the element projected onto the sample plane.
//! Two analytic intensity models are available: a Gaussian whose FWHM is `0.51 λ / NA`
//! and the scalar Airy pattern `[2 J1(v) / v]²` with `v = 2π NA r / λ`.
//!
//! All lengths are in nanometres in the sample plane unless a field name says otherwise.

use ndarray::{Array2, Array3, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IsmError, Result};
use crate::fft::{self, Fft2};

/// Conversion factor between a Gaussian standard deviation and its FWHM.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Relative tolerance under which two PSF maxima are considered equal.
const ILL_POSED_RELATIVE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PsfModel {
    #[default]
    Gaussian,
    AiryScalar,
}

/// Wavelengths, objective and detector-array geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalConfig {
    pub lambda_exc_nm: f64,
    pub lambda_em_nm: f64,
    pub numerical_aperture: f64,
    pub refractive_index: f64,
    pub magnification: f64,
    /// Elements per side of the square detector array.
    pub array_side: usize,
    /// Physical side of one active element, in micrometres.
    pub element_size_um: f64,
    /// Physical centre-to-centre spacing of the elements, in micrometres.
    pub element_pitch_um: f64,
    pub psf_model: PsfModel,
}

impl Default for OpticalConfig {
    /// 5×5 SPAD array (50 µm elements, 75 µm pitch) behind a 450× relay, 1.4 NA oil objective.
    fn default() -> Self {
        Self {
            lambda_exc_nm: 635.0,
            lambda_em_nm: 660.0,
            numerical_aperture: 1.4,
            refractive_index: 1.5,
            magnification: 450.0,
            array_side: 5,
            element_size_um: 50.0,
            element_pitch_um: 75.0,
            psf_model: PsfModel::Gaussian,
        }
    }
}

impl OpticalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(IsmError::InvalidConfig(msg));
        if !(self.lambda_exc_nm > 0.0) {
            return bad(format!(
                "lambda_exc must be positive, got {}",
                self.lambda_exc_nm
            ));
        }
        if !(self.lambda_em_nm >= self.lambda_exc_nm) {
            return bad(format!(
                "lambda_em ({}) must not be shorter than lambda_exc ({})",
                self.lambda_em_nm, self.lambda_exc_nm
            ));
        }
        if !(self.numerical_aperture > 0.0 && self.numerical_aperture <= self.refractive_index) {
            return bad(format!(
                "numerical aperture {} must lie in (0, n = {}]",
                self.numerical_aperture, self.refractive_index
            ));
        }
        if !(self.magnification > 0.0) {
            return bad(format!(
                "magnification must be positive, got {}",
                self.magnification
            ));
        }
        if self.array_side == 0 || self.array_side.is_multiple_of(2) {
            return bad(format!("array side must be odd, got {}", self.array_side));
        }
        if !(self.element_pitch_um > 0.0) {
            return bad(format!(
                "element pitch must be positive, got {}",
                self.element_pitch_um
            ));
        }
        if !(self.element_size_um >= 0.0 && self.element_size_um <= self.element_pitch_um) {
            return bad(format!(
                "element size {} must lie in [0, pitch = {}]",
                self.element_size_um, self.element_pitch_um
            ));
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.array_side * self.array_side
    }

    /// Detector pitch projected onto the sample plane.
    pub fn pitch_nm(&self) -> f64 {
        self.element_pitch_um * 1e3 / self.magnification
    }

    /// Side of the square pinhole projected onto the sample plane.
    pub fn pinhole_side_nm(&self) -> f64 {
        self.element_size_um * 1e3 / self.magnification
    }

    /// Physical width `D` of the whole array, in micrometres.
    pub fn detector_width_um(&self) -> f64 {
        (self.array_side as f64 - 1.0) * self.element_pitch_um + self.element_size_um
    }

    pub fn excitation_fwhm_nm(&self) -> f64 {
        model_fwhm(self.psf_model, self.lambda_exc_nm, self.numerical_aperture)
    }

    pub fn emission_fwhm_nm(&self) -> f64 {
        model_fwhm(self.psf_model, self.lambda_em_nm, self.numerical_aperture)
    }

    /// Airy unit `1.22 λ_em / NA`.
    pub fn airy_unit_nm(&self) -> f64 {
        1.22 * self.lambda_em_nm / self.numerical_aperture
    }
}

fn model_fwhm(model: PsfModel, lambda: f64, na: f64) -> f64 {
    match model {
        PsfModel::Gaussian => 0.51 * lambda / na,
        // [2 J1(v)/v]^2 = 1/2 at v = 1.6163
        PsfModel::AiryScalar => 2.0 * 1.616_339_948 * lambda / (2.0 * std::f64::consts::PI * na),
    }
}

/// Regular scan raster. Pixel `(i, j)` sits at `((i - ny/2)·step_y, (j - nx/2)·step_x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub ny: usize,
    pub nx: usize,
    pub step_y_nm: f64,
    pub step_x_nm: f64,
}

impl ScanGrid {
    pub fn new(ny: usize, nx: usize, step_y_nm: f64, step_x_nm: f64) -> Result<Self> {
        let grid = Self {
            ny,
            nx,
            step_y_nm,
            step_x_nm,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn square(n: usize, step_nm: f64) -> Result<Self> {
        Self::new(n, n, step_nm, step_nm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ny == 0 || self.nx == 0 {
            return Err(IsmError::InvalidGrid(format!(
                "grid must have at least one pixel, got {}x{}",
                self.ny, self.nx
            )));
        }
        if !(self.step_y_nm > 0.0 && self.step_x_nm > 0.0) {
            return Err(IsmError::InvalidGrid(format!(
                "steps must be positive, got ({}, {})",
                self.step_y_nm, self.step_x_nm
            )));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }

    pub fn center(&self) -> (usize, usize) {
        (self.ny / 2, self.nx / 2)
    }

    pub fn y_nm(&self, i: usize) -> f64 {
        (i as f64 - (self.ny / 2) as f64) * self.step_y_nm
    }

    pub fn x_nm(&self, j: usize) -> f64 {
        (j as f64 - (self.nx / 2) as f64) * self.step_x_nm
    }

    /// Whether a point lies within the raster's extent.
    pub fn contains(&self, x_nm: f64, y_nm: f64) -> bool {
        let inside = |v: f64, n: usize, step: f64| {
            let lo = -((n / 2) as f64) * step;
            let hi = (n - 1 - n / 2) as f64 * step;
            v >= lo - 1e-9 * step && v <= hi + 1e-9 * step
        };
        inside(x_nm, self.nx, self.step_x_nm) && inside(y_nm, self.ny, self.step_y_nm)
    }

    pub fn with_steps_scaled(&self, factor: f64) -> Self {
        Self {
            step_y_nm: self.step_y_nm * factor,
            step_x_nm: self.step_x_nm * factor,
            ..*self
        }
    }
}

/// Positions of the detector channels in the sample plane.
///
/// Channel `c` occupies lattice cell `lattice[c] = (row, col)` of an `array_side`-wide
/// square lattice; channels are stored row-major starting top-left. A lattice may be
/// sparse (e.g. a ring without its centre).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorMap {
    pub array_side: usize,
    pub pitch_nm: f64,
    pub lattice: Vec<(usize, usize)>,
}

impl DetectorMap {
    pub fn full(array_side: usize, pitch_nm: f64) -> Self {
        let lattice = (0..array_side)
            .flat_map(|r| (0..array_side).map(move |c| (r, c)))
            .collect();
        Self {
            array_side,
            pitch_nm,
            lattice,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.lattice.len()
    }

    /// `(x_d, y_d)` of channel `c` in nm.
    pub fn position(&self, c: usize) -> (f64, f64) {
        let (r, col) = self.lattice[c];
        let mid = (self.array_side / 2) as f64;
        (
            (col as f64 - mid) * self.pitch_nm,
            (r as f64 - mid) * self.pitch_nm,
        )
    }

    pub fn positions(&self) -> Vec<(f64, f64)> {
        (0..self.n_channels()).map(|c| self.position(c)).collect()
    }

    pub fn central_index(&self) -> Option<usize> {
        let mid = self.array_side / 2;
        self.lattice.iter().position(|&rc| rc == (mid, mid))
    }

    pub fn validate(&self) -> Result<()> {
        if self.array_side == 0 || self.array_side.is_multiple_of(2) {
            return Err(IsmError::InvalidConfig(format!(
                "array side must be odd, got {}",
                self.array_side
            )));
        }
        if let Some(&(r, c)) = self
            .lattice
            .iter()
            .find(|&&(r, c)| r >= self.array_side || c >= self.array_side)
        {
            return Err(IsmError::InvalidConfig(format!(
                "lattice cell ({r}, {c}) outside a {0}x{0} array",
                self.array_side
            )));
        }
        Ok(())
    }
}

pub fn make_detector_map(config: &OpticalConfig) -> Result<DetectorMap> {
    config.validate()?;
    Ok(DetectorMap::full(config.array_side, config.pitch_nm()))
}

/// The `N_d` complete PSFs sampled on a scan grid, stored `(y, x, channel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsfStack {
    pub data: Array3<f64>,
    pub grid: ScanGrid,
    pub detector: DetectorMap,
    pub normalized: bool,
}

impl PsfStack {
    pub fn new(data: Array3<f64>, grid: ScanGrid, detector: DetectorMap) -> Result<Self> {
        let (ny, nx, nd) = data.dim();
        if (ny, nx) != grid.shape() || nd != detector.n_channels() {
            return Err(IsmError::ShapeMismatch(format!(
                "PSF data {:?} vs grid {}x{} with {} channels",
                data.dim(),
                grid.ny,
                grid.nx,
                detector.n_channels()
            )));
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(IsmError::NegativeValue { index, value });
        }
        let normalized = (fft::compensated_sum(data.iter()) - 1.0).abs() <= 1e-12;
        Ok(Self {
            data,
            grid,
            detector,
            normalized,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.data.len_of(Axis(2))
    }

    pub fn channel(&self, c: usize) -> Array2<f64> {
        self.data.index_axis(Axis(2), c).to_owned()
    }

    pub fn total(&self) -> f64 {
        fft::compensated_sum(self.data.iter())
    }

    /// Rescales the stack so that all channels together sum to one.
    pub fn normalize(&mut self) -> Result<()> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(IsmError::UnnormalizedStack { total });
        }
        self.data.mapv_inplace(|v| v / total);
        self.normalized = true;
        Ok(())
    }

    /// Keeps the listed channels, in order.
    pub fn select_channels(&self, channels: &[usize], detector: DetectorMap) -> Self {
        let data = self.data.select(Axis(2), channels);
        Self {
            data,
            grid: self.grid,
            detector,
            normalized: false,
        }
    }
}

/// Per-channel PSF (or data) totals arranged on the detector lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub values: Array2<f64>,
}

impl Fingerprint {
    pub fn from_totals(detector: &DetectorMap, totals: &[f64]) -> Self {
        let mut values = Array2::zeros((detector.array_side, detector.array_side));
        for (c, &(r, col)) in detector.lattice.iter().enumerate() {
            values[[r, col]] = totals[c];
        }
        Self { values }
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    /// Counter-clockwise quarter turn of the lattice.
    pub fn rotated90(&self) -> Array2<f64> {
        let n = self.values.nrows();
        Array2::from_shape_fn((n, n), |(r, c)| self.values[[c, n - 1 - r]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SubpixelMethod {
    /// Integer argmax only.
    None,
    /// Three-point parabola through the peak and its neighbours, per axis.
    #[default]
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftStatus {
    Ok,
    /// The PSF has several maxima of (almost) equal height.
    IllPosed,
    /// The correlogram peak was too weak; the vector was imputed from the linear trend.
    Imputed,
}

/// A shift vector in scan-plane nanometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub x: f64,
    pub y: f64,
}

impl Shift {
    pub const ZERO: Shift = Shift { x: 0.0, y: 0.0 };

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// One shift vector per detector channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftVectors {
    pub vectors: Vec<Shift>,
    pub status: Vec<ShiftStatus>,
    pub detector: DetectorMap,
    pub refinement: SubpixelMethod,
}

impl ShiftVectors {
    pub fn from_vectors(vectors: Vec<Shift>, detector: DetectorMap) -> Self {
        let status = vec![ShiftStatus::Ok; vectors.len()];
        Self {
            vectors,
            status,
            detector,
            refinement: SubpixelMethod::None,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_reliable(&self, c: usize) -> bool {
        self.status[c] == ShiftStatus::Ok
    }

    /// Vectors in fractional pixels of `grid`, as `(x, y)`.
    pub fn to_pixels(&self, grid: &ScanGrid) -> Vec<(f64, f64)> {
        self.vectors
            .iter()
            .map(|s| (s.x / grid.step_x_nm, s.y / grid.step_y_nm))
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vectors {
            v.x *= factor;
            v.y *= factor;
        }
        out
    }

    pub fn select_channels(&self, channels: &[usize], detector: DetectorMap) -> Self {
        Self {
            vectors: channels.iter().map(|&c| self.vectors[c]).collect(),
            status: channels.iter().map(|&c| self.status[c]).collect(),
            detector,
            refinement: self.refinement,
        }
    }
}

/// Bessel function of the first kind, order one (rational/asymptotic approximation,
/// absolute error below 1e-8).
pub(crate) fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let y = x * x;
        let num = x
            * (72_362_614_232.0
                + y * (-7_895_059_235.0
                    + y * (242_396_853.1
                        + y * (-2_972_611.439 + y * (15_704.482_60 + y * (-30.160_366_06))))));
        let den = 144_725_228_442.0
            + y * (2_300_535_178.0
                + y * (18_583_304.74 + y * (99_447.433_94 + y * (376.999_139_7 + y))));
        num / den
    } else {
        let z = 8.0 / ax;
        let y = z * z;
        let xx = ax - 2.356_194_491;
        let p = 1.0
            + y * (0.183_105e-2
                + y * (-0.351_639_649_6e-4 + y * (0.245_752_017_4e-5 + y * (-0.240_337_019e-6))));
        let q = 0.046_874_999_95
            + y * (-0.200_269_087_3e-3
                + y * (0.844_919_909_6e-5 + y * (-0.882_289_87e-6 + y * 0.105_787_412e-6)));
        let ans = (std::f64::consts::FRAC_2_PI / ax).sqrt() * (xx.cos() * p - z * xx.sin() * q);
        if x < 0.0 {
            -ans
        } else {
            ans
        }
    }
}

/// Peak-normalized intensity PSF at radius `r` (nm).
pub(crate) fn intensity_profile(model: PsfModel, lambda_nm: f64, na: f64, r: f64) -> f64 {
    match model {
        PsfModel::Gaussian => {
            let sigma = model_fwhm(model, lambda_nm, na) / FWHM_PER_SIGMA;
            (-0.5 * (r / sigma).powi(2)).exp()
        }
        PsfModel::AiryScalar => {
            let v = 2.0 * std::f64::consts::PI * na * r / lambda_nm;
            if v.abs() < 1e-8 {
                1.0
            } else {
                let a = 2.0 * bessel_j1(v) / v;
                a * a
            }
        }
    }
}

fn sample_psf(model: PsfModel, lambda_nm: f64, na: f64, grid: &ScanGrid) -> Array2<f64> {
    Array2::from_shape_fn(grid.shape(), |(i, j)| {
        intensity_profile(model, lambda_nm, na, grid.x_nm(j).hypot(grid.y_nm(i)))
    })
}

/// Fraction of the sampled PSF energy that falls inside `grid`, relative to a raster four
/// times wider with the same step.
pub fn energy_fraction_in_grid(model: PsfModel, lambda_nm: f64, na: f64, grid: &ScanGrid) -> f64 {
    let wide = ScanGrid {
        ny: 4 * grid.ny + 1,
        nx: 4 * grid.nx + 1,
        ..*grid
    };
    let inner = sample_psf(model, lambda_nm, na, grid).sum();
    let outer = sample_psf(model, lambda_nm, na, &wide).sum();
    inner / outer
}

/// Excitation PSF on `grid`, peak value one at the centre pixel.
pub fn excitation_psf(config: &OpticalConfig, grid: &ScanGrid) -> Result<Array2<f64>> {
    config.validate()?;
    grid.validate()?;
    let fraction = energy_fraction_in_grid(
        config.psf_model,
        config.lambda_exc_nm,
        config.numerical_aperture,
        grid,
    );
    if fraction < 0.99 {
        log::warn!(
            "scan grid {}x{} holds only {:.1}% of the excitation PSF energy",
            grid.ny,
            grid.nx,
            100.0 * fraction
        );
    }
    Ok(sample_psf(
        config.psf_model,
        config.lambda_exc_nm,
        config.numerical_aperture,
        grid,
    ))
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-12 {
        1.0
    } else {
        let a = std::f64::consts::PI * u;
        a.sin() / a
    }
}

/// Radius beyond which the emission PSF is negligible (below 1e-9 of the peak for the
/// Gaussian model).
fn tail_radius_nm(config: &OpticalConfig, grid: &ScanGrid) -> f64 {
    match config.psf_model {
        PsfModel::Gaussian => {
            let sigma = config.emission_fwhm_nm() / FWHM_PER_SIGMA;
            sigma * (2.0 * 1e9f64.ln()).sqrt()
        }
        // The Airy envelope decays as r^-3; pad by one full field of view instead.
        PsfModel::AiryScalar => {
            (grid.ny as f64 * grid.step_y_nm).max(grid.nx as f64 * grid.step_x_nm)
        }
    }
}

/// Detection PSF `h_em * p` centred on the detector position `x_d = (x, y)` nm.
///
/// The pinhole convolution and the (generally fractional) translation are applied in the
/// Fourier domain on a padded raster so that nothing wraps into the returned window.
pub fn detection_psf(
    config: &OpticalConfig,
    grid: &ScanGrid,
    x_d: (f64, f64),
) -> Result<Array2<f64>> {
    config.validate()?;
    grid.validate()?;
    if !grid.contains(x_d.0, x_d.1) {
        return Err(IsmError::OutsideGrid { x: x_d.0, y: x_d.1 });
    }
    let side = config.pinhole_side_nm();
    let reach = tail_radius_nm(config, grid) + side + x_d.0.hypot(x_d.1);
    let pad_y = (reach / grid.step_y_nm).ceil() as usize;
    let pad_x = (reach / grid.step_x_nm).ceil() as usize;
    let padded = ScanGrid {
        ny: grid.ny + 2 * pad_y,
        nx: grid.nx + 2 * pad_x,
        ..*grid
    };
    let emission = sample_psf(
        config.psf_model,
        config.lambda_em_nm,
        config.numerical_aperture,
        &padded,
    );

    let plan = Fft2::new(padded.ny, padded.nx);
    let mut spectrum = plan.forward_real(&fft::ifftshift(&emission));
    if side > 0.0 {
        let box_y: Vec<f64> = (0..padded.ny)
            .map(|i| sinc(side * fft::frequency(i, padded.ny) / grid.step_y_nm))
            .collect();
        let box_x: Vec<f64> = (0..padded.nx)
            .map(|j| sinc(side * fft::frequency(j, padded.nx) / grid.step_x_nm))
            .collect();
        for ((i, j), v) in spectrum.indexed_iter_mut() {
            *v *= box_y[i] * box_x[j];
        }
    }
    fft::apply_translation(
        &mut spectrum,
        x_d.1 / grid.step_y_nm,
        x_d.0 / grid.step_x_nm,
    );
    let full = fft::fftshift(&plan.inverse_real(&spectrum));
    Ok(Array2::from_shape_fn(grid.shape(), |(i, j)| {
        full[[i + pad_y, j + pad_x]].max(0.0)
    }))
}

/// Complete PSF of every detector channel.
pub fn psf_stack(config: &OpticalConfig, grid: &ScanGrid, normalize: bool) -> Result<PsfStack> {
    let detector = make_detector_map(config)?;
    // Both intensity models are even functions, so h_exc(-x_s) = h_exc(x_s) on the grid.
    let excitation = excitation_psf(config, grid)?;
    let channels: Vec<Array2<f64>> = detector
        .positions()
        .into_par_iter()
        .map(|x_d| detection_psf(config, grid, x_d).map(|det| &excitation * &det))
        .collect::<Result<_>>()?;

    let mut data = Array3::zeros((grid.ny, grid.nx, channels.len()));
    for (c, h) in channels.iter().enumerate() {
        data.index_axis_mut(Axis(2), c).assign(h);
    }
    let mut stack = PsfStack {
        data,
        grid: *grid,
        detector,
        normalized: false,
    };
    if normalize {
        stack.normalize()?;
    }
    Ok(stack)
}

/// `f(x_d) = Σ_{x_s} h(x_s | x_d)`.
pub fn fingerprint_from_psf(stack: &PsfStack) -> Fingerprint {
    let totals: Vec<f64> = stack
        .data
        .axis_iter(Axis(2))
        .map(|h| fft::compensated_sum(h.iter()))
        .collect();
    Fingerprint::from_totals(&stack.detector, &totals)
}

/// Vertex offset of the parabola through `(-1, a)`, `(0, b)`, `(1, c)`, clamped to ±0.5.
pub(crate) fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let denom = a - 2.0 * b + c;
    if denom.abs() < f64::MIN_POSITIVE || !denom.is_finite() {
        return 0.0;
    }
    (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
}

/// Integer argmax `(row, col)` of an image; the first one in row-major order on ties.
pub(crate) fn argmax(image: &Array2<f64>) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_value = f64::NEG_INFINITY;
    for ((i, j), &v) in image.indexed_iter() {
        if v > best_value {
            best_value = v;
            best = (i, j);
        }
    }
    best
}

/// Whether some other local maximum (not adjacent to `peak`) reaches the global maximum
/// within [`ILL_POSED_RELATIVE`].
fn has_competing_maximum(image: &Array2<f64>, peak: (usize, usize)) -> bool {
    let (ny, nx) = image.dim();
    let top = image[peak];
    if !(top > 0.0) {
        return true;
    }
    let threshold = top * (1.0 - ILL_POSED_RELATIVE);
    for ((i, j), &v) in image.indexed_iter() {
        if v < threshold || (i.abs_diff(peak.0) <= 1 && j.abs_diff(peak.1) <= 1) {
            continue;
        }
        let is_local_max = (i.saturating_sub(1)..=(i + 1).min(ny - 1))
            .flat_map(|a| (j.saturating_sub(1)..=(j + 1).min(nx - 1)).map(move |b| (a, b)))
            .all(|(a, b)| image[[a, b]] <= v);
        if is_local_max {
            return true;
        }
    }
    false
}

/// Sub-pixel peak position `(row, col)` of an image using per-axis parabolas (no wrap).
pub(crate) fn refined_peak(image: &Array2<f64>, peak: (usize, usize)) -> (f64, f64) {
    let (ny, nx) = image.dim();
    let (i, j) = peak;
    let dy = if i > 0 && i + 1 < ny {
        parabolic_offset(image[[i - 1, j]], image[[i, j]], image[[i + 1, j]])
    } else {
        0.0
    };
    let dx = if j > 0 && j + 1 < nx {
        parabolic_offset(image[[i, j - 1]], image[[i, j]], image[[i, j + 1]])
    } else {
        0.0
    };
    (i as f64 + dy, j as f64 + dx)
}

/// Theoretical shift vectors: the maximum position of every complete PSF.
pub fn shift_vectors_from_psf(stack: &PsfStack) -> ShiftVectors {
    let grid = stack.grid;
    let (cy, cx) = grid.center();
    let mut vectors = Vec::with_capacity(stack.n_channels());
    let mut status = Vec::with_capacity(stack.n_channels());
    for h in stack.data.axis_iter(Axis(2)) {
        let h = h.to_owned();
        let peak = argmax(&h);
        let (py, px) = refined_peak(&h, peak);
        vectors.push(Shift {
            x: (px - cx as f64) * grid.step_x_nm,
            y: (py - cy as f64) * grid.step_y_nm,
        });
        status.push(if has_competing_maximum(&h, peak) {
            ShiftStatus::IllPosed
        } else {
            ShiftStatus::Ok
        });
    }
    ShiftVectors {
        vectors,
        status,
        detector: stack.detector.clone(),
        refinement: SubpixelMethod::Parabolic,
    }
}

/// Overlap between neighbouring micro-images, `(D − M·Δx_s) / D`.
pub fn overlap_ratio(config: &OpticalConfig, step_nm: f64) -> f64 {
    let width_nm = config.detector_width_um() * 1e3;
    (width_nm - config.magnification * step_nm) / width_nm
}

/// Mirror of a centred image about its centre pixel, with periodic wrap for even sizes.
pub fn mirror(image: &Array2<f64>) -> Array2<f64> {
    let (ny, nx) = image.dim();
    let (cy, cx) = (ny / 2, nx / 2);
    Array2::from_shape_fn((ny, nx), |(i, j)| {
        image[[(2 * cy + ny - i) % ny, (2 * cx + nx - j) % nx]]
    })
}

/// Elementwise check that every pixel is finite and non-negative.
pub(crate) fn check_non_negative<'a>(values: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    for (index, &value) in values.into_iter().enumerate() {
        if !(value >= 0.0) {
            return Err(IsmError::NegativeValue { index, value });
        }
    }
    Ok(())
}
