//! Multi-image Richardson-Lucy deconvolution under Poisson statistics.
//!
//! The forward operator on the dataset grid is circular convolution with each centred PSF,
//! `m_c = o ⊛ h_c + b_c`; its adjoint is correlation, i.e. multiplication by the conjugate
//! transfer function. The update is
//!
//! `o ← o · Σ_c h_c ⋆ (i_c / m_c)`,
//!
//! which, for a stack summing to one and no background, preserves the total flux.

use ndarray::{Array2, Zip};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{IsmError, Result};
use crate::fft::{compensated_sum, kernel_spectrum, Fft2};
use crate::optics::{check_non_negative, PsfStack};
use crate::simulate::{BackgroundModel, IsmDataset};

use super::{ReconMethod, ReconOutput};

/// Relative floor of the model denominator, as a fraction of the largest datum.
const DIVISION_GUARD: f64 = 1e-12;
/// Tolerance on the total of a normalized stack.
const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RlOptions {
    pub iterations: usize,
    pub background: Option<BackgroundModel>,
    /// Starting estimate. When absent: flat, holding the data flux minus the background flux.
    pub initial: Option<Array2<f64>>,
    /// Record the negative log-likelihood and flux after every iteration.
    pub track: bool,
}

impl Default for RlOptions {
    fn default() -> Self {
        Self {
            iterations: 5,
            background: None,
            initial: None,
            track: false,
        }
    }
}

impl RlOptions {
    pub fn with_iterations(iterations: usize) -> Self {
        Self {
            iterations,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration after which the estimate was evaluated.
    pub iteration: usize,
    pub nll: f64,
    pub flux: f64,
}

struct Operator {
    plan: Fft2,
    transfer: Vec<Array2<Complex64>>,
    background: Option<Vec<Array2<f64>>>,
}

impl Operator {
    fn new(
        dataset: &IsmDataset,
        stack: &PsfStack,
        background: Option<&BackgroundModel>,
    ) -> Result<Self> {
        let shape = dataset.grid.shape();
        if stack.grid.shape() != shape {
            return Err(IsmError::ShapeMismatch(format!(
                "PSF grid {:?} vs dataset grid {:?}",
                stack.grid.shape(),
                shape
            )));
        }
        if stack.n_channels() != dataset.n_channels() {
            return Err(IsmError::ShapeMismatch(format!(
                "{} PSF channels for {} data channels",
                stack.n_channels(),
                dataset.n_channels()
            )));
        }
        let total = stack.total();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(IsmError::UnnormalizedStack { total });
        }
        let plan = Fft2::new(shape.0, shape.1);
        let transfer = (0..stack.n_channels())
            .into_par_iter()
            .map(|c| kernel_spectrum(&plan, &stack.channel(c)))
            .collect();
        let background = match background {
            Some(b) => {
                b.check(shape, dataset.n_channels())?;
                Some(
                    (0..dataset.n_channels())
                        .map(|c| b.channel(c, shape))
                        .collect(),
                )
            }
            None => None,
        };
        Ok(Self {
            plan,
            transfer,
            background,
        })
    }

    fn model(&self, object_spec: &Array2<Complex64>, c: usize) -> Array2<f64> {
        let mut spec = object_spec.clone();
        Zip::from(&mut spec)
            .and(&self.transfer[c])
            .for_each(|s, &h| *s *= h);
        let mut m = self.plan.inverse_real(&spec);
        if let Some(b) = &self.background {
            m += &b[c];
        }
        m
    }

    fn models(&self, object: &Array2<f64>) -> Vec<Array2<f64>> {
        let object_spec = self.plan.forward_real(object);
        (0..self.transfer.len())
            .into_par_iter()
            .map(|c| self.model(&object_spec, c))
            .collect()
    }
}

fn guard(data: &[Array2<f64>]) -> f64 {
    let max = data
        .iter()
        .flat_map(|d| d.iter())
        .fold(0.0f64, |a, &b| a.max(b));
    DIVISION_GUARD * max
}

/// Data below `eps` are treated as zero counts; the model inside the log is floored at `eps`.
fn nll_terms(data: &Array2<f64>, model: &Array2<f64>, eps: f64) -> f64 {
    let floor = eps.max(f64::MIN_POSITIVE);
    let terms: Vec<f64> = data
        .iter()
        .zip(model.iter())
        .map(|(&i, &m)| {
            if i > eps {
                m - i * m.max(floor).ln()
            } else {
                m
            }
        })
        .collect();
    compensated_sum(terms.iter())
}

/// `Σ_c Σ_x [m_c(x) - i_c(x)·ln m_c(x)]` for the model generated by `estimate`.
///
/// Data below `1e-12 · max(i)` count as zero.
pub fn negative_log_likelihood(
    dataset: &IsmDataset,
    stack: &PsfStack,
    estimate: &Array2<f64>,
    background: Option<&BackgroundModel>,
) -> Result<f64> {
    let op = Operator::new(dataset, stack, background)?;
    check_estimate(estimate, dataset)?;
    let models = op.models(estimate);
    let data = dataset.channels();
    let eps = guard(&data);
    let mut parts = Vec::with_capacity(models.len());
    for (c, (m, d)) in models.iter().zip(data.iter()).enumerate() {
        if let Some((&counts, &model)) = d
            .iter()
            .zip(m.iter())
            .find(|(&i, &m)| i > eps && !(m > 0.0))
        {
            return Err(IsmError::NonPositiveModel {
                channel: c,
                model,
                counts,
            });
        }
        parts.push(nll_terms(d, m, eps));
    }
    Ok(compensated_sum(parts.iter()))
}

fn check_estimate(estimate: &Array2<f64>, dataset: &IsmDataset) -> Result<()> {
    if estimate.dim() != dataset.grid.shape() {
        return Err(IsmError::ShapeMismatch(format!(
            "estimate {:?} vs dataset grid {:?}",
            estimate.dim(),
            dataset.grid.shape()
        )));
    }
    check_non_negative(estimate.iter())
}

/// Richardson-Lucy deconvolution of all channels jointly into one object estimate.
///
/// The stack must be normalized as a whole and share the dataset grid. The ratio
/// `i / m` uses a denominator floored at `1e-12 · max(i)`; where both are below the floor
/// the ratio is zero. Pixels that start at zero stay at zero.
pub fn rl_deconvolve(
    dataset: &IsmDataset,
    stack: &PsfStack,
    options: &RlOptions,
) -> Result<ReconOutput> {
    let op = Operator::new(dataset, stack, options.background.as_ref())?;
    let shape = dataset.grid.shape();
    let flux_in = dataset.total();
    let mut object = match &options.initial {
        Some(init) => {
            check_estimate(init, dataset)?;
            init.clone()
        }
        None => {
            let background_flux = match &op.background {
                Some(b) => compensated_sum(b.iter().flat_map(|x| x.iter())),
                None => 0.0,
            };
            let flux = (flux_in - background_flux).max(0.0);
            Array2::from_elem(shape, flux / (shape.0 * shape.1) as f64)
        }
    };

    let data = dataset.channels();
    let eps = guard(&data);
    let mut history = Vec::new();

    for k in 0..options.iterations {
        let object_spec = op.plan.forward_real(&object);
        let per_channel: Vec<(Array2<Complex64>, f64)> = (0..data.len())
            .into_par_iter()
            .map(|c| {
                let m = op.model(&object_spec, c);
                let nll = if options.track && k > 0 {
                    nll_terms(&data[c], &m, eps)
                } else {
                    0.0
                };
                let mut ratio = Array2::zeros(shape);
                Zip::from(&mut ratio)
                    .and(&data[c])
                    .and(&m)
                    .for_each(|r, &i, &m| {
                        *r = if m < eps && i < eps {
                            0.0
                        } else {
                            let d = m.max(eps);
                            if d > 0.0 {
                                i / d
                            } else {
                                0.0
                            }
                        };
                    });
                let mut spec = op.plan.forward_real(&ratio);
                Zip::from(&mut spec)
                    .and(&op.transfer[c])
                    .for_each(|s, &h| *s *= h.conj());
                (spec, nll)
            })
            .collect();

        if options.track && k > 0 {
            let parts: Vec<f64> = per_channel.iter().map(|(_, n)| *n).collect();
            history.push(IterationRecord {
                iteration: k,
                nll: compensated_sum(parts.iter()),
                flux: compensated_sum(object.iter()),
            });
        }

        let mut acc = Array2::<Complex64>::zeros(shape);
        for (spec, _) in &per_channel {
            acc += spec;
        }
        let correction = op.plan.inverse_real(&acc);
        Zip::from(&mut object)
            .and(&correction)
            .for_each(|o, &r| *o = (*o * r).max(0.0));
    }

    if options.track && options.iterations > 0 {
        let models = op.models(&object);
        let parts: Vec<f64> = models
            .iter()
            .zip(data.iter())
            .map(|(m, d)| nll_terms(d, m, eps))
            .collect();
        history.push(IterationRecord {
            iteration: options.iterations,
            nll: compensated_sum(parts.iter()),
            flux: compensated_sum(object.iter()),
        });
    }

    let flux_out = compensated_sum(object.iter());
    Ok(ReconOutput {
        image: object,
        grid: dataset.grid,
        method: if options.background.is_some() {
            ReconMethod::RlBackground
        } else {
            ReconMethod::Rl
        },
        iterations: options.iterations,
        shifts_used: None,
        flux_in,
        flux_out,
        history,
    })
}
