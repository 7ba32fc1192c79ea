//! Ground-truth phantoms and synthetic ISM datasets.

use ndarray::{Array2, Array3, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{IsmError, Result};
use crate::fft::{self, Fft2};
use crate::optics::{check_non_negative, DetectorMap, PsfStack, ScanGrid};

/// Default photon budget of a single point emitter.
pub const DEFAULT_PHOTONS_PER_EMITTER: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    PointSources,
    LinePairs,
    SiemensStar,
    Imported,
}

/// Parameters of each phantom family. Lengths in nm, relative to the grid centre.
#[derive(Debug, Clone, PartialEq)]
pub enum PhantomParams {
    PointSources {
        positions_nm: Vec<(f64, f64)>,
        photons_per_emitter: f64,
    },
    /// Two vertical lines at `x = ±spacing/2`, linearly split between neighbouring columns.
    LinePairs {
        spacing_nm: f64,
        length_nm: f64,
        total_photons: f64,
    },
    SiemensStar {
        spokes: usize,
        radius_nm: f64,
        total_photons: f64,
    },
    Imported {
        image: Array2<f64>,
        total_photons: f64,
    },
}

impl PhantomParams {
    /// `count` emitters drawn uniformly at least `margin_nm` away from the border, on pixel
    /// centres.
    pub fn random_points(
        grid: &ScanGrid,
        count: usize,
        margin_nm: f64,
        seed: u64,
        photons_per_emitter: f64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let my = ((margin_nm / grid.step_y_nm).ceil() as usize).min(grid.ny / 2);
        let mx = ((margin_nm / grid.step_x_nm).ceil() as usize).min(grid.nx / 2);
        let positions_nm = (0..count)
            .map(|_| {
                let i = rng.random_range(my..(grid.ny - my).max(my + 1));
                let j = rng.random_range(mx..(grid.nx - mx).max(mx + 1));
                (grid.x_nm(j), grid.y_nm(i))
            })
            .collect();
        PhantomParams::PointSources {
            positions_nm,
            photons_per_emitter,
        }
    }

    pub fn kind(&self) -> PhantomKind {
        match self {
            PhantomParams::PointSources { .. } => PhantomKind::PointSources,
            PhantomParams::LinePairs { .. } => PhantomKind::LinePairs,
            PhantomParams::SiemensStar { .. } => PhantomKind::SiemensStar,
            PhantomParams::Imported { .. } => PhantomKind::Imported,
        }
    }
}

/// Ground-truth object `o(x_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub image: Array2<f64>,
    pub grid: ScanGrid,
    pub kind: PhantomKind,
    pub total_photons: f64,
}

fn nearest_index(coord_nm: f64, step: f64, n: usize) -> Option<usize> {
    let idx = (coord_nm / step).round() + (n / 2) as f64;
    (idx >= 0.0 && idx < n as f64).then_some(idx as usize)
}

pub fn make_phantom(params: &PhantomParams, grid: &ScanGrid) -> Result<Phantom> {
    grid.validate()?;
    let mut image = Array2::<f64>::zeros(grid.shape());
    let total_photons = match params {
        PhantomParams::PointSources {
            positions_nm,
            photons_per_emitter,
        } => {
            if !(*photons_per_emitter > 0.0) {
                return Err(IsmError::InvalidParameter(
                    "photons per emitter must be positive".into(),
                ));
            }
            for &(x, y) in positions_nm {
                let (Some(i), Some(j)) = (
                    nearest_index(y, grid.step_y_nm, grid.ny),
                    nearest_index(x, grid.step_x_nm, grid.nx),
                ) else {
                    return Err(IsmError::InvalidParameter(format!(
                        "emitter at ({x}, {y}) nm lies outside the grid"
                    )));
                };
                image[[i, j]] += 1.0;
            }
            photons_per_emitter * positions_nm.len() as f64
        }
        PhantomParams::LinePairs {
            spacing_nm,
            length_nm,
            total_photons,
        } => {
            if !(*spacing_nm > 0.0 && *length_nm > 0.0) {
                return Err(IsmError::InvalidParameter(
                    "line spacing and length must be positive".into(),
                ));
            }
            let (cy, cx) = grid.center();
            for sign in [-1.0, 1.0] {
                let col = cx as f64 + sign * 0.5 * spacing_nm / grid.step_x_nm;
                let j0 = col.floor();
                let w1 = col - j0;
                for i in 0..grid.ny {
                    if (i as f64 - cy as f64).abs() * grid.step_y_nm > 0.5 * length_nm {
                        continue;
                    }
                    for (j, w) in [(j0, 1.0 - w1), (j0 + 1.0, w1)] {
                        if j >= 0.0 && (j as usize) < grid.nx && w > 0.0 {
                            image[[i, j as usize]] += w;
                        }
                    }
                }
            }
            *total_photons
        }
        PhantomParams::SiemensStar {
            spokes,
            radius_nm,
            total_photons,
        } => {
            if *spokes == 0 || !(*radius_nm > 0.0) {
                return Err(IsmError::InvalidParameter(
                    "a Siemens star needs at least one spoke and a positive radius".into(),
                ));
            }
            for ((i, j), v) in image.indexed_iter_mut() {
                let (x, y) = (grid.x_nm(j), grid.y_nm(i));
                let r = x.hypot(y);
                if r <= *radius_nm && (*spokes as f64 * y.atan2(x)).sin() > 1e-9 {
                    *v = 1.0;
                }
            }
            *total_photons
        }
        PhantomParams::Imported {
            image: imported,
            total_photons,
        } => {
            if imported.dim() != grid.shape() {
                return Err(IsmError::ShapeMismatch(format!(
                    "imported phantom {:?} vs grid {:?}",
                    imported.dim(),
                    grid.shape()
                )));
            }
            check_non_negative(imported.iter())?;
            image.assign(imported);
            *total_photons
        }
    };
    let sum = image.sum();
    if !(sum > 0.0) {
        return Err(IsmError::EmptyPhantom(format!("{:?}", params.kind())));
    }
    if !(total_photons > 0.0) {
        return Err(IsmError::InvalidParameter(
            "photon budget must be positive".into(),
        ));
    }
    image.mapv_inplace(|v| v * total_photons / sum);
    Ok(Phantom {
        image,
        grid: *grid,
        kind: params.kind(),
        total_photons,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataType {
    /// Non-negative integer photon counts.
    Counts,
    /// Non-negative real expected intensities.
    Intensity,
}

/// The measurement `i(x_s | x_d)`, stored `(y_s, x_s, channel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsmDataset {
    pub data: Array3<f64>,
    pub dtype: DataType,
    pub grid: ScanGrid,
    pub detector: DetectorMap,
    pub provenance: Map<String, Value>,
}

impl IsmDataset {
    pub fn new(
        data: Array3<f64>,
        dtype: DataType,
        grid: ScanGrid,
        detector: DetectorMap,
    ) -> Result<Self> {
        let ds = Self {
            data,
            dtype,
            grid,
            detector,
            provenance: Map::new(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.detector.validate()?;
        let (ny, nx, nd) = self.data.dim();
        if (ny, nx) != self.grid.shape() || nd != self.detector.n_channels() {
            return Err(IsmError::ShapeMismatch(format!(
                "data {:?} vs grid {}x{} with {} channels",
                self.data.dim(),
                self.grid.ny,
                self.grid.nx,
                self.detector.n_channels()
            )));
        }
        check_non_negative(self.data.iter())?;
        if self.dtype == DataType::Counts {
            if let Some((index, &value)) = self
                .data
                .iter()
                .enumerate()
                .find(|(_, v)| v.fract() != 0.0 || **v > u32::MAX as f64)
            {
                return Err(IsmError::InvalidParameter(format!(
                    "counts dataset holds non-integer value {value} at flat index {index}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.data.len_of(Axis(2))
    }

    pub fn channel(&self, c: usize) -> Array2<f64> {
        self.data.index_axis(Axis(2), c).to_owned()
    }

    pub fn channels(&self) -> Vec<Array2<f64>> {
        (0..self.n_channels()).map(|c| self.channel(c)).collect()
    }

    pub fn channel_totals(&self) -> Vec<f64> {
        self.data
            .axis_iter(Axis(2))
            .map(|ch| fft::compensated_sum(ch.iter()))
            .collect()
    }

    pub fn total(&self) -> f64 {
        fft::compensated_sum(self.data.iter())
    }

    pub(crate) fn from_channels(
        channels: &[Array2<f64>],
        dtype: DataType,
        grid: ScanGrid,
        detector: DetectorMap,
    ) -> Self {
        let mut data = Array3::zeros((grid.ny, grid.nx, channels.len()));
        for (c, ch) in channels.iter().enumerate() {
            data.index_axis_mut(Axis(2), c).assign(ch);
        }
        Self {
            data,
            dtype,
            grid,
            detector,
            provenance: Map::new(),
        }
    }
}

/// Additive background `b(x_s | x_d)`.
#[derive(Debug, Clone, PartialEq)]
pub enum BackgroundModel {
    PerChannel(Vec<f64>),
    Full(Array3<f64>),
}

impl BackgroundModel {
    /// Background of channel `c` expanded to a full image.
    pub fn channel(&self, c: usize, shape: (usize, usize)) -> Array2<f64> {
        match self {
            BackgroundModel::PerChannel(rates) => Array2::from_elem(shape, rates[c]),
            BackgroundModel::Full(b) => b.index_axis(Axis(2), c).to_owned(),
        }
    }

    pub fn check(&self, shape: (usize, usize), n_channels: usize) -> Result<()> {
        match self {
            BackgroundModel::PerChannel(rates) => {
                if rates.len() != n_channels {
                    return Err(IsmError::ShapeMismatch(format!(
                        "{} background rates for {} channels",
                        rates.len(),
                        n_channels
                    )));
                }
                check_non_negative(rates.iter())
            }
            BackgroundModel::Full(b) => {
                if b.dim() != (shape.0, shape.1, n_channels) {
                    return Err(IsmError::ShapeMismatch(format!(
                        "background {:?} vs dataset {:?}",
                        b.dim(),
                        (shape.0, shape.1, n_channels)
                    )));
                }
                check_non_negative(b.iter())
            }
        }
    }
}

/// Linear ("same"-size) convolution of `object` with each centred PSF. The DFT runs on a
/// raster padded to twice the size, so nothing wraps around; the padding is cropped.
pub fn forward(object: &Array2<f64>, stack: &PsfStack) -> Result<IsmDataset> {
    let (ny, nx) = stack.grid.shape();
    if object.dim() != (ny, nx) {
        return Err(IsmError::ShapeMismatch(format!(
            "object {:?} vs PSF grid {:?}",
            object.dim(),
            (ny, nx)
        )));
    }
    check_non_negative(object.iter())?;
    let (ly, lx) = (2 * ny, 2 * nx);
    let plan = Fft2::new(ly, lx);
    let mut padded = Array2::zeros((ly, lx));
    padded.slice_mut(ndarray::s![..ny, ..nx]).assign(object);
    let object_spec = plan.forward_real(&padded);
    let (cy, cx) = stack.grid.center();

    let channels: Vec<Array2<f64>> = (0..stack.n_channels())
        .into_par_iter()
        .map(|c| {
            let h = stack.data.index_axis(Axis(2), c);
            let mut kernel = Array2::zeros((ly, lx));
            for ((i, j), &v) in h.indexed_iter() {
                kernel[[(i + ly - cy) % ly, (j + lx - cx) % lx]] = v;
            }
            let mut spec = plan.forward_real(&kernel);
            Zip::from(&mut spec)
                .and(&object_spec)
                .for_each(|s, &o| *s *= o);
            let full = plan.inverse_real(&spec);
            full.slice(ndarray::s![..ny, ..nx]).mapv(|v| v.max(0.0))
        })
        .collect();
    Ok(IsmDataset::from_channels(
        &channels,
        DataType::Intensity,
        stack.grid,
        stack.detector.clone(),
    ))
}

pub fn forward_with_background(
    object: &Array2<f64>,
    stack: &PsfStack,
    background: &BackgroundModel,
) -> Result<IsmDataset> {
    let shape = stack.grid.shape();
    background.check(shape, stack.n_channels())?;
    let mut ds = forward(object, stack)?;
    for c in 0..ds.n_channels() {
        let b = background.channel(c, shape);
        let mut ch = ds.data.index_axis_mut(Axis(2), c);
        ch += &b;
    }
    Ok(ds)
}

/// Forward model of a phantom, checking that the phantom and the PSFs share a grid.
pub fn simulate_intensity(
    phantom: &Phantom,
    stack: &PsfStack,
    background: Option<&BackgroundModel>,
) -> Result<IsmDataset> {
    if phantom.grid != stack.grid {
        return Err(IsmError::ShapeMismatch(format!(
            "phantom grid {:?} vs PSF grid {:?}",
            phantom.grid, stack.grid
        )));
    }
    match background {
        Some(b) => forward_with_background(&phantom.image, stack, b),
        None => forward(&phantom.image, stack),
    }
}

/// Independent Poisson draw per pixel and channel. The generator for flat index `p` is the
/// ChaCha8 stream `p` of `seed`, so the result does not depend on scheduling.
pub fn add_poisson(dataset: &IsmDataset, seed: u64) -> Result<IsmDataset> {
    if dataset.dtype != DataType::Intensity {
        return Err(IsmError::InvalidParameter(
            "Poisson noise applies to intensity datasets only".into(),
        ));
    }
    check_non_negative(dataset.data.iter())?;
    let flat: Vec<f64> = dataset.data.iter().copied().collect();
    let counts: Vec<f64> = flat
        .par_iter()
        .enumerate()
        .map(|(p, &mean)| {
            if mean == 0.0 {
                return 0.0;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            Poisson::new(mean)
                .map(|d| d.sample(&mut rng))
                .unwrap_or(0.0)
        })
        .collect();
    let data = Array3::from_shape_vec(dataset.data.dim(), counts).expect("shape preserved");
    let mut out = dataset.clone();
    out.data = data;
    out.dtype = DataType::Counts;
    out.provenance
        .insert("poisson_seed".into(), Value::from(seed));
    Ok(out)
}
