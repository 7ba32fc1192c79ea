//! Phase correlation and data-driven shift-vector estimation.

use ndarray::{Array2, Zip};
use rustfft::num_complex::Complex64;

use crate::error::{IsmError, Result};
use crate::fft::Fft2;
use crate::optics::{argmax, parabolic_offset, Shift, ShiftStatus, ShiftVectors, SubpixelMethod};
use crate::simulate::IsmDataset;

/// Bins whose cross-spectrum modulus falls below this fraction of the maximum are dropped.
const SPECTRAL_FLOOR: f64 = 1e-12;

/// Phase correlation `R` of one channel against a reference channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlogram {
    pub image: Array2<f64>,
    pub channel: usize,
    pub reference: usize,
}

/// Peak of a correlogram as a signed lag `(dy, dx)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationPeak {
    pub dy: f64,
    pub dx: f64,
    pub value: f64,
}

fn signed_lag(index: usize, n: usize) -> f64 {
    if index > n / 2 {
        index as f64 - n as f64
    } else {
        index as f64
    }
}

impl Correlogram {
    /// Location of the maximum, with periodic neighbours used for the parabola.
    pub fn peak(&self, subpixel: SubpixelMethod) -> CorrelationPeak {
        let r = &self.image;
        let (ny, nx) = r.dim();
        let (i, j) = argmax(r);
        let value = r[[i, j]];
        let (mut oy, mut ox) = (0.0, 0.0);
        if subpixel == SubpixelMethod::Parabolic {
            if ny >= 3 {
                oy = parabolic_offset(r[[(i + ny - 1) % ny, j]], value, r[[(i + 1) % ny, j]]);
            }
            if nx >= 3 {
                ox = parabolic_offset(r[[i, (j + nx - 1) % nx]], value, r[[i, (j + 1) % nx]]);
            }
        }
        CorrelationPeak {
            dy: signed_lag(i, ny) + oy,
            dx: signed_lag(j, nx) + ox,
            value,
        }
    }

    /// Median of |R| over all lags.
    pub fn median_abs(&self) -> f64 {
        let mut v: Vec<f64> = self.image.iter().map(|x| x.abs()).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
}

/// `F⁻¹{ F{a}·conj(F{b}) / |F{a}·conj(F{b})| }`, real part. If `a` is `b` translated by `d`,
/// the peak sits at lag `d`.
pub fn phase_correlation(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ny, nx) = a.dim();
    let plan = Fft2::new(ny, nx);
    let fa = plan.forward_real(a);
    let fb = plan.forward_real(b);
    let mut cross: Array2<Complex64> = Array2::zeros((ny, nx));
    Zip::from(&mut cross)
        .and(&fa)
        .and(&fb)
        .for_each(|c, &x, &y| *c = x * y.conj());
    let max = cross.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let floor = SPECTRAL_FLOOR * max;
    cross.mapv_inplace(|c| {
        let m = c.norm();
        if m < floor || m == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            c / m
        }
    });
    plan.inverse_real(&cross)
}

pub fn correlogram(dataset: &IsmDataset, channel: usize, reference: usize) -> Result<Correlogram> {
    let totals = dataset.channel_totals();
    for &c in &[channel, reference] {
        if c >= totals.len() {
            return Err(IsmError::InvalidParameter(format!(
                "channel {c} out of range ({} channels)",
                totals.len()
            )));
        }
        if !(totals[c] > 0.0) {
            return Err(IsmError::EmptyChannel(c));
        }
    }
    Ok(Correlogram {
        image: phase_correlation(&dataset.channel(channel), &dataset.channel(reference)),
        channel,
        reference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftOptions {
    pub subpixel: SubpixelMethod,
    /// A correlogram peak below this multiple of the median |R| marks the shift unreliable.
    pub reliability_factor: f64,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        Self {
            subpixel: SubpixelMethod::Parabolic,
            reliability_factor: 3.0,
        }
    }
}

/// Shift vectors of every channel relative to the central one, from the correlogram peaks.
///
/// Unreliable channels (weak peak or no signal) are imputed from `μ = s·x_d`, with `s`
/// fitted by least squares over the reliable channels.
pub fn estimate_shifts(dataset: &IsmDataset, options: &ShiftOptions) -> Result<ShiftVectors> {
    let reference = dataset
        .detector
        .central_index()
        .ok_or(IsmError::NoCentralChannel)?;
    let totals = dataset.channel_totals();
    if !(totals[reference] > 0.0) {
        return Err(IsmError::EmptyChannel(reference));
    }
    let grid = dataset.grid;
    let ref_image = dataset.channel(reference);
    let n = dataset.n_channels();
    let mut vectors = vec![Shift::ZERO; n];
    let mut status = vec![ShiftStatus::Ok; n];

    for c in 0..n {
        if c == reference {
            continue;
        }
        if !(totals[c] > 0.0) {
            status[c] = ShiftStatus::Imputed;
            continue;
        }
        let corr = Correlogram {
            image: phase_correlation(&dataset.channel(c), &ref_image),
            channel: c,
            reference,
        };
        let peak = corr.peak(options.subpixel);
        if peak.value < options.reliability_factor * corr.median_abs() {
            status[c] = ShiftStatus::Imputed;
            continue;
        }
        vectors[c] = Shift {
            x: peak.dx * grid.step_x_nm,
            y: peak.dy * grid.step_y_nm,
        };
    }

    if status.contains(&ShiftStatus::Imputed) {
        let (mut num, mut den) = (0.0, 0.0);
        for c in 0..n {
            let (x, y) = dataset.detector.position(c);
            if status[c] == ShiftStatus::Ok && c != reference {
                num += vectors[c].x * x + vectors[c].y * y;
                den += x * x + y * y;
            }
        }
        let slope = if den > 0.0 {
            num / den
        } else {
            log::warn!("no reliable channel to fit the shift trend; using mu = x_d / 2");
            0.5
        };
        for c in 0..n {
            if status[c] == ShiftStatus::Imputed {
                let (x, y) = dataset.detector.position(c);
                vectors[c] = Shift {
                    x: slope * x,
                    y: slope * y,
                };
            }
        }
    }

    Ok(ShiftVectors {
        vectors,
        status,
        detector: dataset.detector.clone(),
        refinement: options.subpixel,
    })
}
