//! Scan-grid resampling for the 2× sub-Nyquist scheme: decimation, zero-insertion,
//! central-ring selection and the check `Δx_s = 2·μ(Δx_d)`.

use std::fmt;

use ndarray::{s, Array3};
use serde_json::Value;

use crate::error::{IsmError, Result};
use crate::optics::{shift_vectors_from_psf, DetectorMap, PsfStack, ScanGrid, ShiftVectors};
use crate::reconstruct::{
    apr, estimate_shifts, rl_deconvolve, ReconOutput, RlOptions, ShiftOptions,
};
use crate::simulate::IsmDataset;

pub const DEFAULT_TOLERANCE: f64 = 0.1;
pub const DEFAULT_UPSAMPLED_ITERATIONS: usize = 30;

/// Outcome of the sampling-condition check, per axis `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingReport {
    pub shifts: ShiftVectors,
    /// `(Δx_s, Δy_s)` in nm.
    pub scan_step: (f64, f64),
    /// `μ(Δx_d)` per axis in nm.
    pub neighbor_shift: (f64, f64),
    /// `|Δx_s − 2·μ(Δx_d)|` per axis in nm.
    pub residual: (f64, f64),
    pub tolerance_fraction: f64,
    pub satisfied: bool,
}

impl SamplingReport {
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("scan_step_x_nm", format!("{:.6}", self.scan_step.0)),
            ("scan_step_y_nm", format!("{:.6}", self.scan_step.1)),
            (
                "neighbor_shift_x_nm",
                format!("{:.6}", self.neighbor_shift.0),
            ),
            (
                "neighbor_shift_y_nm",
                format!("{:.6}", self.neighbor_shift.1),
            ),
            ("residual_x_nm", format!("{:.6}", self.residual.0)),
            ("residual_y_nm", format!("{:.6}", self.residual.1)),
            ("tolerance_fraction", format!("{}", self.tolerance_fraction)),
            ("satisfied", format!("{}", self.satisfied)),
        ]
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "scan_step_nm": [self.scan_step.0, self.scan_step.1],
            "neighbor_shift_nm": [self.neighbor_shift.0, self.neighbor_shift.1],
            "residual_nm": [self.residual.0, self.residual.1],
            "tolerance_fraction": self.tolerance_fraction,
            "satisfied": self.satisfied,
        })
    }
}

impl fmt::Display for SamplingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.key_values() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Keeps every other scan pixel (even indices) on both axes; steps double.
pub fn downsample(dataset: &IsmDataset) -> IsmDataset {
    let data = dataset.data.slice(s![..;2, ..;2, ..]).to_owned();
    let (ny, nx, _) = data.dim();
    let grid = ScanGrid {
        ny,
        nx,
        step_y_nm: 2.0 * dataset.grid.step_y_nm,
        step_x_nm: 2.0 * dataset.grid.step_x_nm,
    };
    let mut provenance = dataset.provenance.clone();
    provenance.insert("downsampled".into(), Value::from(2));
    IsmDataset {
        data,
        dtype: dataset.dtype,
        grid,
        detector: dataset.detector.clone(),
        provenance,
    }
}

/// Expands each scan pixel into a 2×2 block holding the value top-left and zeros elsewhere.
pub fn zero_upsample(dataset: &IsmDataset) -> IsmDataset {
    let (ny, nx, nd) = dataset.data.dim();
    let mut data = Array3::zeros((2 * ny, 2 * nx, nd));
    data.slice_mut(s![..;2, ..;2, ..]).assign(&dataset.data);
    let grid = ScanGrid {
        ny: 2 * ny,
        nx: 2 * nx,
        step_y_nm: 0.5 * dataset.grid.step_y_nm,
        step_x_nm: 0.5 * dataset.grid.step_x_nm,
    };
    let mut provenance = dataset.provenance.clone();
    provenance.insert("zero_placement".into(), Value::from("top_left"));
    IsmDataset {
        data,
        dtype: dataset.dtype,
        grid,
        detector: dataset.detector.clone(),
        provenance,
    }
}

/// Channel indices of the central 3×3 block, row-major, and the re-indexed detector map.
pub fn central_ring(
    detector: &DetectorMap,
    include_center: bool,
) -> Result<(Vec<usize>, DetectorMap)> {
    if detector.array_side < 3 {
        return Err(IsmError::InvalidParameter(format!(
            "central ring needs a detector side of at least 3, got {}",
            detector.array_side
        )));
    }
    let mid = detector.array_side / 2;
    let mut channels = Vec::new();
    let mut lattice = Vec::new();
    for (c, &(r, col)) in detector.lattice.iter().enumerate() {
        if r.abs_diff(mid) <= 1 && col.abs_diff(mid) <= 1 {
            if !include_center && r == mid && col == mid {
                continue;
            }
            channels.push(c);
            lattice.push((r + 1 - mid, col + 1 - mid));
        }
    }
    Ok((
        channels,
        DetectorMap {
            array_side: 3,
            pitch_nm: detector.pitch_nm,
            lattice,
        },
    ))
}

/// The central 3×3 channels of a dataset, optionally without the central element.
pub fn select_central_ring(dataset: &IsmDataset, include_center: bool) -> Result<IsmDataset> {
    let (channels, detector) = central_ring(&dataset.detector, include_center)?;
    let mut provenance = dataset.provenance.clone();
    provenance.insert("ring_channels".into(), Value::from(channels.clone()));
    Ok(IsmDataset {
        data: dataset.data.select(ndarray::Axis(2), &channels),
        dtype: dataset.dtype,
        grid: dataset.grid,
        detector,
        provenance,
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Compares the scan step with twice the shift between neighbouring detector elements.
///
/// `μ(Δx_d)` is the median over all pairs of reliable, lattice-adjacent channels of the
/// difference of their shift components along that axis.
pub fn check_sampling_condition(
    shifts: &ShiftVectors,
    grid: &ScanGrid,
    tolerance_fraction: f64,
) -> Result<SamplingReport> {
    let lattice = &shifts.detector.lattice;
    let index_of = |pos: (usize, usize)| lattice.iter().position(|&p| p == pos);
    let (mut dx, mut dy) = (Vec::new(), Vec::new());
    for (a, &(r, c)) in lattice.iter().enumerate() {
        if !shifts.is_reliable(a) {
            continue;
        }
        if let Some(b) = index_of((r, c + 1)).filter(|&b| shifts.is_reliable(b)) {
            dx.push(shifts.vectors[b].x - shifts.vectors[a].x);
        }
        if let Some(b) = index_of((r + 1, c)).filter(|&b| shifts.is_reliable(b)) {
            dy.push(shifts.vectors[b].y - shifts.vectors[a].y);
        }
    }
    if dx.is_empty() {
        return Err(IsmError::InsufficientChannels { axis: "x" });
    }
    if dy.is_empty() {
        return Err(IsmError::InsufficientChannels { axis: "y" });
    }
    let mu = (median(dx), median(dy));
    let step = (grid.step_x_nm, grid.step_y_nm);
    let residual = ((step.0 - 2.0 * mu.0).abs(), (step.1 - 2.0 * mu.1).abs());
    let satisfied =
        residual.0 <= tolerance_fraction * step.0 && residual.1 <= tolerance_fraction * step.1;
    Ok(SamplingReport {
        shifts: shifts.clone(),
        scan_step: step,
        neighbor_shift: mu,
        residual,
        tolerance_fraction,
        satisfied,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpsampleMethod {
    Apr,
    Rl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpsampleOptions {
    pub method: UpsampleMethod,
    pub iterations: usize,
    pub include_center: bool,
    pub tolerance_fraction: f64,
    /// Shift vectors in nm, for the full detector or for the ring. Estimated from the
    /// coarse ring data when absent (APR only).
    pub shifts: Option<ShiftVectors>,
    /// PSFs sampled on the fine grid, for the full detector or for the ring (RL only).
    pub psf: Option<PsfStack>,
}

impl UpsampleOptions {
    pub fn new(method: UpsampleMethod) -> Self {
        Self {
            method,
            iterations: DEFAULT_UPSAMPLED_ITERATIONS,
            include_center: true,
            tolerance_fraction: DEFAULT_TOLERANCE,
            shifts: None,
            psf: None,
        }
    }
}

fn restrict_shifts(
    shifts: &ShiftVectors,
    full: &DetectorMap,
    channels: &[usize],
    ring: &DetectorMap,
) -> Result<ShiftVectors> {
    if shifts.len() == full.n_channels() {
        Ok(shifts.select_channels(channels, ring.clone()))
    } else if shifts.len() == ring.n_channels() {
        let mut s = shifts.clone();
        s.detector = ring.clone();
        Ok(s)
    } else {
        Err(IsmError::ShapeMismatch(format!(
            "{} shift vectors for a detector of {} (ring {})",
            shifts.len(),
            full.n_channels(),
            ring.n_channels()
        )))
    }
}

fn warn_if_unsatisfied(shifts: &ShiftVectors, coarse: &ScanGrid, tolerance: f64) {
    match check_sampling_condition(shifts, coarse, tolerance) {
        Ok(report) if !report.satisfied => log::warn!(
            "sampling condition not met (residual {:.2} / {:.2} nm); expect grid artifacts",
            report.residual.0,
            report.residual.1
        ),
        Ok(_) => {}
        Err(e) => log::warn!("sampling condition not checked: {e}"),
    }
}

/// Central ring → zero-insertion → APR or RL on the twice-finer grid.
pub fn upsampled_reconstruct(
    dataset: &IsmDataset,
    options: &UpsampleOptions,
) -> Result<ReconOutput> {
    let (channels, ring_detector) = central_ring(&dataset.detector, options.include_center)?;
    let ring = select_central_ring(dataset, options.include_center)?;
    let fine = zero_upsample(&ring);

    match options.method {
        UpsampleMethod::Apr => {
            let shifts = match &options.shifts {
                Some(s) => restrict_shifts(s, &dataset.detector, &channels, &ring_detector)?,
                None => {
                    // estimate against the central element even when it is not summed
                    let (with_center, det) = central_ring(&dataset.detector, true)?;
                    let full_ring = IsmDataset {
                        data: dataset.data.select(ndarray::Axis(2), &with_center),
                        detector: det.clone(),
                        ..dataset.clone()
                    };
                    let est = estimate_shifts(&full_ring, &ShiftOptions::default())?;
                    let keep: Vec<usize> = with_center
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| channels.contains(c))
                        .map(|(i, _)| i)
                        .collect();
                    est.select_channels(&keep, ring_detector.clone())
                }
            };
            warn_if_unsatisfied(&shifts, &dataset.grid, options.tolerance_fraction);
            apr(&fine, &shifts)
        }
        UpsampleMethod::Rl => {
            let psf = options.psf.as_ref().ok_or_else(|| {
                IsmError::MissingInput("upsampled RL needs a PSF stack on the fine grid".into())
            })?;
            let same = |a: f64, b: f64| (a - b).abs() <= 1e-6 * a.abs().max(b.abs());
            if psf.grid.shape() != fine.grid.shape()
                || !same(psf.grid.step_x_nm, fine.grid.step_x_nm)
                || !same(psf.grid.step_y_nm, fine.grid.step_y_nm)
            {
                return Err(IsmError::ShapeMismatch(format!(
                    "PSF grid {:?} does not match the upsampled grid {:?}",
                    psf.grid, fine.grid
                )));
            }
            let mut stack = if psf.n_channels() == dataset.n_channels() {
                psf.select_channels(&channels, ring_detector.clone())
            } else if psf.n_channels() == ring_detector.n_channels() {
                PsfStack {
                    detector: ring_detector.clone(),
                    ..psf.clone()
                }
            } else {
                return Err(IsmError::ShapeMismatch(format!(
                    "{} PSF channels for a detector of {} (ring {})",
                    psf.n_channels(),
                    dataset.n_channels(),
                    ring_detector.n_channels()
                )));
            };
            stack.normalize()?;
            stack.grid = fine.grid;
            if ring_detector.central_index().is_some() {
                let theory = shift_vectors_from_psf(&stack);
                warn_if_unsatisfied(&theory, &dataset.grid, options.tolerance_fraction);
            }
            rl_deconvolve(
                &fine,
                &stack,
                &RlOptions::with_iterations(options.iterations),
            )
        }
    }
}
