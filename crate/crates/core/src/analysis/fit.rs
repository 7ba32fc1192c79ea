use ndarray::Array2;

use crate::error::{IsmError, Result};
use crate::optics::{argmax, ScanGrid, FWHM_PER_SIGMA};

const MAX_ITERATIONS: usize = 500;
const MIN_SAMPLES_ABOVE_HALF: usize = 5;
/// Initial σ from the half width at half maximum: HWHM / √(2 ln 2).
const HWHM_PER_SIGMA: f64 = 1.177_410_022_515_474_6;

/// Least-squares fit of `A·exp(−(x−μ)²/(2σ²))` with 1σ uncertainties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub mean_nm: f64,
    pub sigma_nm: f64,
    pub fwhm_nm: f64,
    pub amplitude_err: f64,
    pub mean_err: f64,
    pub sigma_err: f64,
    pub fwhm_err: f64,
    pub rss: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileAxis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftMeasurement {
    pub value_nm: f64,
    pub uncertainty_nm: f64,
}

fn model(p: &[f64; 3], x: f64) -> f64 {
    p[0] * (-(x - p[1]).powi(2) / (2.0 * p[2] * p[2])).exp()
}

fn jacobian_row(p: &[f64; 3], x: f64) -> [f64; 3] {
    let d = x - p[1];
    let e = (-d * d / (2.0 * p[2] * p[2])).exp();
    [
        e,
        p[0] * e * d / (p[2] * p[2]),
        p[0] * e * d * d / (p[2] * p[2] * p[2]),
    ]
}

fn rss(p: &[f64; 3], x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&x, &y)| (y - model(p, x)).powi(2))
        .sum()
}

fn normal_equations(p: &[f64; 3], x: &[f64], y: &[f64]) -> ([[f64; 3]; 3], [f64; 3]) {
    let mut jtj = [[0.0; 3]; 3];
    let mut jtr = [0.0; 3];
    for (&x, &y) in x.iter().zip(y) {
        let j = jacobian_row(p, x);
        let r = y - model(p, x);
        for a in 0..3 {
            jtr[a] += j[a] * r;
            for b in 0..3 {
                jtj[a][b] += j[a] * j[b];
            }
        }
    }
    (jtj, jtr)
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let c = |r: usize, k: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (k1, k2) = ((k + 1) % 3, (k + 2) % 3);
        m[r1][k1] * m[r2][k2] - m[r1][k2] * m[r2][k1]
    };
    let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
    if !det.is_finite() || det == 0.0 {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = c(k, r) / det;
        }
    }
    Some(inv)
}

/// Levenberg–Marquardt fit of a Gaussian to samples `(x, y)`.
///
/// Starts from `A = max(y)`, `μ = argmax`, `σ = HWHM / 1.177`. Needs at least five
/// samples at or above half the maximum.
pub fn fit_gaussian(x: &[f64], y: &[f64]) -> Result<GaussianFit> {
    if x.len() != y.len() {
        return Err(IsmError::ShapeMismatch(format!(
            "{} abscissae, {} samples",
            x.len(),
            y.len()
        )));
    }
    let (imax, &peak) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| IsmError::InvalidParameter("empty profile".into()))?;
    let above: Vec<usize> = (0..y.len()).filter(|&i| y[i] >= 0.5 * peak).collect();
    if !(peak > 0.0) || above.len() < MIN_SAMPLES_ABOVE_HALF {
        return Err(IsmError::InvalidParameter(format!(
            "profile has {} samples above half maximum, need {MIN_SAMPLES_ABOVE_HALF}",
            above.len()
        )));
    }
    let spacing = (x[x.len() - 1] - x[0]).abs() / (x.len() - 1) as f64;
    let hwhm = 0.5 * above.len() as f64 * spacing;
    let mut p = [peak, x[imax], hwhm / HWHM_PER_SIGMA];
    let mut current = rss(&p, x, y);
    let scale = y.iter().map(|v| v * v).sum::<f64>();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&p, x, y);
        let mut damped = jtj;
        for (a, row) in damped.iter_mut().enumerate() {
            row[a] += lambda * jtj[a][a];
        }
        let Some(inv) = invert3(&damped) else {
            lambda *= 10.0;
            continue;
        };
        let mut step = [0.0; 3];
        for a in 0..3 {
            step[a] = (0..3).map(|b| inv[a][b] * jtr[b]).sum();
        }
        let trial = [p[0] + step[0], p[1] + step[1], (p[2] + step[2]).abs()];
        let trial_rss = rss(&trial, x, y);
        if trial_rss.is_finite() && trial_rss <= current {
            let small_step = (0..3).all(|a| step[a].abs() <= 1e-12 * p[a].abs().max(spacing));
            let small_gain = current - trial_rss <= 1e-15 * current.max(1e-300 * scale);
            p = trial;
            current = trial_rss;
            lambda = (lambda / 10.0).max(1e-12);
            if small_step || small_gain || current <= 1e-30 * scale {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                // no downhill step left at machine precision
                converged = true;
                break;
            }
        }
    }

    if !converged || !(p[2] > 0.0) || !p.iter().all(|v| v.is_finite()) {
        return Err(IsmError::FitFailed {
            reason: if converged {
                "degenerate parameters".into()
            } else {
                "no convergence".into()
            },
            rss: current,
            iterations,
        });
    }

    let dof = (x.len() as f64 - 3.0).max(1.0);
    let s2 = current / dof;
    let (jtj, _) = normal_equations(&p, x, y);
    let cov = invert3(&jtj).ok_or_else(|| IsmError::FitFailed {
        reason: "singular normal matrix".into(),
        rss: current,
        iterations,
    })?;
    let err = |a: usize| (s2 * cov[a][a]).max(0.0).sqrt();
    Ok(GaussianFit {
        amplitude: p[0],
        mean_nm: p[1],
        sigma_nm: p[2],
        fwhm_nm: FWHM_PER_SIGMA * p[2],
        amplitude_err: err(0),
        mean_err: err(1),
        sigma_err: err(2),
        fwhm_err: FWHM_PER_SIGMA * err(2),
        rss: current,
        iterations,
    })
}

/// Fits the line through the brightest pixel along `axis`; abscissae are scan
/// coordinates in nm.
pub fn fit_gaussian_profile(
    image: &Array2<f64>,
    grid: &ScanGrid,
    axis: ProfileAxis,
) -> Result<GaussianFit> {
    if image.dim() != grid.shape() {
        return Err(IsmError::ShapeMismatch(format!(
            "image {:?} vs grid {:?}",
            image.dim(),
            grid.shape()
        )));
    }
    let (i, j) = argmax(image);
    let (x, y): (Vec<f64>, Vec<f64>) = match axis {
        ProfileAxis::X => (0..grid.nx).map(|c| (grid.x_nm(c), image[[i, c]])).unzip(),
        ProfileAxis::Y => (0..grid.ny).map(|r| (grid.y_nm(r), image[[r, j]])).unzip(),
    };
    fit_gaussian(&x, &y)
}

/// `μ_b − μ_a` with the uncertainties added in quadrature.
pub fn measure_shift(a: &GaussianFit, b: &GaussianFit) -> ShiftMeasurement {
    ShiftMeasurement {
        value_nm: b.mean_nm - a.mean_nm,
        uncertainty_nm: a.mean_err.hypot(b.mean_err),
    }
}
