//! Single-file container for datasets, PSF stacks and reconstructed images.
//!
//! Layout: the 8 magic bytes `ISMK0001`, the header length as a little-endian `u64`, a
//! UTF-8 JSON header, then the payload in little-endian row-major order over
//! `(y_s, x_s, channel)`: `f64` for intensities, PSFs and images, `u32` for counts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{IsmError, Result};
use crate::optics::{DetectorMap, PsfStack, ScanGrid};
use crate::reconstruct::ReconOutput;
use crate::simulate::{DataType, IsmDataset};

pub const MAGIC: &[u8; 8] = b"ISMK0001";
pub const FORMAT_VERSION: u32 = 1;
const MAGIC_PREFIX: &[u8; 4] = b"ISMK";
pub const AXIS_ORDER: [&str; 3] = ["y_s", "x_s", "channel"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainerKind {
    Dataset,
    Psf,
    Image,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "float64")]
    F64,
    #[serde(rename = "uint32")]
    U32,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F64 => 8,
            Dtype::U32 => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerHeader {
    pub format_version: u32,
    pub kind: ContainerKind,
    pub dims: Vec<usize>,
    pub axis_order: Vec<String>,
    pub dtype: Dtype,
    pub grid: ScanGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorMap>,
    #[serde(default)]
    pub provenance: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    F64(Vec<f64>),
    U32(Vec<u32>),
}

impl Payload {
    pub fn len(&self) -> usize {
        match self {
            Payload::F64(v) => v.len(),
            Payload::U32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            Payload::F64(_) => Dtype::F64,
            Payload::U32(_) => Dtype::U32,
        }
    }

    fn to_f64(&self) -> Vec<f64> {
        match self {
            Payload::F64(v) => v.clone(),
            Payload::U32(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsmContainer {
    pub header: ContainerHeader,
    pub payload: Payload,
}

fn seed_of(provenance: &Map<String, Value>) -> Option<u64> {
    provenance
        .get("seed")
        .or_else(|| provenance.get("poisson_seed"))
        .and_then(Value::as_u64)
}

impl IsmContainer {
    pub fn from_dataset(dataset: &IsmDataset) -> Self {
        let (ny, nx, nd) = dataset.data.dim();
        let payload = match dataset.dtype {
            DataType::Counts => Payload::U32(dataset.data.iter().map(|&v| v as u32).collect()),
            DataType::Intensity => Payload::F64(dataset.data.iter().copied().collect()),
        };
        Self {
            header: ContainerHeader {
                format_version: FORMAT_VERSION,
                kind: ContainerKind::Dataset,
                dims: vec![ny, nx, nd],
                axis_order: AXIS_ORDER.iter().map(|s| s.to_string()).collect(),
                dtype: payload.dtype(),
                grid: dataset.grid,
                detector: Some(dataset.detector.clone()),
                provenance: dataset.provenance.clone(),
                seed: seed_of(&dataset.provenance),
                method: None,
                iterations: None,
            },
            payload,
        }
    }

    pub fn from_psf(stack: &PsfStack, provenance: Map<String, Value>) -> Self {
        let (ny, nx, nd) = stack.data.dim();
        Self {
            header: ContainerHeader {
                format_version: FORMAT_VERSION,
                kind: ContainerKind::Psf,
                dims: vec![ny, nx, nd],
                axis_order: AXIS_ORDER.iter().map(|s| s.to_string()).collect(),
                dtype: Dtype::F64,
                grid: stack.grid,
                detector: Some(stack.detector.clone()),
                provenance,
                seed: None,
                method: None,
                iterations: None,
            },
            payload: Payload::F64(stack.data.iter().copied().collect()),
        }
    }

    pub fn from_image(
        image: &Array2<f64>,
        grid: ScanGrid,
        method: Option<String>,
        iterations: Option<usize>,
        provenance: Map<String, Value>,
    ) -> Self {
        let (ny, nx) = image.dim();
        Self {
            header: ContainerHeader {
                format_version: FORMAT_VERSION,
                kind: ContainerKind::Image,
                dims: vec![ny, nx, 1],
                axis_order: AXIS_ORDER.iter().map(|s| s.to_string()).collect(),
                dtype: Dtype::F64,
                grid,
                detector: None,
                seed: seed_of(&provenance),
                provenance,
                method,
                iterations,
            },
            payload: Payload::F64(image.iter().copied().collect()),
        }
    }

    pub fn from_recon(recon: &ReconOutput, provenance: Map<String, Value>) -> Self {
        let method = serde_json::to_value(recon.method)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string));
        Self::from_image(
            &recon.image,
            recon.grid,
            method,
            Some(recon.iterations),
            provenance,
        )
    }

    fn expect_kind(&self, kind: ContainerKind) -> Result<()> {
        if self.header.kind != kind {
            return Err(IsmError::InvalidParameter(format!(
                "expected a {kind:?} container, found {:?}",
                self.header.kind
            )));
        }
        Ok(())
    }

    fn array3(&self) -> Array3<f64> {
        let d = &self.header.dims;
        Array3::from_shape_vec((d[0], d[1], d[2]), self.payload.to_f64()).expect("validated dims")
    }

    pub fn to_dataset(&self) -> Result<IsmDataset> {
        self.expect_kind(ContainerKind::Dataset)?;
        let dtype = match self.header.dtype {
            Dtype::U32 => DataType::Counts,
            Dtype::F64 => DataType::Intensity,
        };
        let detector = self.header.detector.clone().ok_or_else(|| {
            IsmError::Header("dataset container without detector geometry".into())
        })?;
        let mut ds = IsmDataset::new(self.array3(), dtype, self.header.grid, detector)?;
        ds.provenance = self.header.provenance.clone();
        Ok(ds)
    }

    pub fn to_psf(&self) -> Result<PsfStack> {
        self.expect_kind(ContainerKind::Psf)?;
        let detector =
            self.header.detector.clone().ok_or_else(|| {
                IsmError::Header("PSF container without detector geometry".into())
            })?;
        PsfStack::new(self.array3(), self.header.grid, detector)
    }

    pub fn to_image(&self) -> Result<Array2<f64>> {
        self.expect_kind(ContainerKind::Image)?;
        Ok(self.array3().index_axis_move(Axis(2), 0))
    }

    /// Checks dims, dtype, grid and detector against each other and the payload.
    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        if h.format_version != FORMAT_VERSION {
            return Err(IsmError::UnsupportedVersion(h.format_version.to_string()));
        }
        if h.axis_order.iter().map(String::as_str).ne(AXIS_ORDER) {
            return Err(IsmError::Header(format!("axis order {:?}", h.axis_order)));
        }
        if h.dims.len() != 3 {
            return Err(IsmError::DimensionMismatch(format!(
                "expected 3 dims, found {:?}",
                h.dims
            )));
        }
        if h.dtype != self.payload.dtype() {
            return Err(IsmError::UnsupportedDtype(format!(
                "header {:?} vs payload {:?}",
                h.dtype,
                self.payload.dtype()
            )));
        }
        if h.dtype == Dtype::U32 && h.kind != ContainerKind::Dataset {
            return Err(IsmError::UnsupportedDtype(
                "uint32 is for count datasets only".into(),
            ));
        }
        let n: usize = h.dims.iter().product();
        if n != self.payload.len() {
            return Err(IsmError::PayloadLength {
                expected: n * h.dtype.size(),
                found: self.payload.len() * h.dtype.size(),
            });
        }
        if (h.dims[0], h.dims[1]) != h.grid.shape() {
            return Err(IsmError::DimensionMismatch(format!(
                "dims {:?} vs grid {}x{}",
                h.dims, h.grid.ny, h.grid.nx
            )));
        }
        h.grid.validate()?;
        match (&h.detector, h.kind) {
            (Some(d), _) => {
                d.validate()?;
                if d.n_channels() != h.dims[2] {
                    return Err(IsmError::DimensionMismatch(format!(
                        "{} channels in dims vs {} detector elements",
                        h.dims[2],
                        d.n_channels()
                    )));
                }
            }
            (None, ContainerKind::Image) => {
                if h.dims[2] != 1 {
                    return Err(IsmError::DimensionMismatch(format!(
                        "image container with {} channels",
                        h.dims[2]
                    )));
                }
            }
            (None, _) => return Err(IsmError::Header("missing detector geometry".into())),
        }
        if let Payload::F64(v) = &self.payload {
            if let Some((index, value)) = v.iter().enumerate().find(|(_, x)| !x.is_finite()) {
                return Err(IsmError::InvalidParameter(format!(
                    "non-finite payload value {value} at flat index {index}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let header =
            serde_json::to_vec(&self.header).map_err(|e| IsmError::Header(e.to_string()))?;
        let mut out =
            Vec::with_capacity(16 + header.len() + self.payload.len() * self.header.dtype.size());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        match &self.payload {
            Payload::F64(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Payload::U32(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        Ok(out)
    }

    /// Parses the magic and header only.
    pub fn read_header(bytes: &[u8]) -> Result<(ContainerHeader, usize)> {
        if bytes.len() < 8 {
            return Err(IsmError::BadMagic);
        }
        if &bytes[..8] != MAGIC {
            if &bytes[..4] == MAGIC_PREFIX {
                return Err(IsmError::UnsupportedVersion(
                    String::from_utf8_lossy(&bytes[4..8]).into_owned(),
                ));
            }
            return Err(IsmError::BadMagic);
        }
        let len_bytes: [u8; 8] = bytes
            .get(8..16)
            .ok_or_else(|| IsmError::Header("truncated header length".into()))?
            .try_into()
            .expect("eight bytes");
        let len = usize::try_from(u64::from_le_bytes(len_bytes))
            .map_err(|_| IsmError::Header("header length overflows".into()))?;
        let end = 16usize
            .checked_add(len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| IsmError::Header("truncated header".into()))?;
        let value: Value =
            serde_json::from_slice(&bytes[16..end]).map_err(|e| IsmError::Header(e.to_string()))?;
        if let Some(v) = value.get("format_version") {
            if v.as_u64() != Some(FORMAT_VERSION as u64) {
                return Err(IsmError::UnsupportedVersion(v.to_string()));
            }
        }
        let header: ContainerHeader =
            serde_json::from_value(value).map_err(|e| IsmError::Header(e.to_string()))?;
        Ok((header, end))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, offset) = Self::read_header(bytes)?;
        let body = &bytes[offset..];
        let n = header
            .dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| {
                IsmError::DimensionMismatch(format!("dims {:?} overflow", header.dims))
            })?;
        let expected = n * header.dtype.size();
        if body.len() != expected {
            return Err(IsmError::PayloadLength {
                expected,
                found: body.len(),
            });
        }
        let payload = match header.dtype {
            Dtype::F64 => Payload::F64(
                body.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
                    .collect(),
            ),
            Dtype::U32 => Payload::U32(
                body.chunks_exact(4)
                    .map(|c| u32::from_le_bytes(c.try_into().expect("four bytes")))
                    .collect(),
            ),
        };
        let container = Self { header, payload };
        container.validate()?;
        Ok(container)
    }
}

pub fn write(container: &IsmContainer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = container.to_bytes()?;
    let file = File::create(path).map_err(|e| IsmError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).map_err(|e| IsmError::io(path, e))?;
    w.flush().map_err(|e| IsmError::io(path, e))
}

pub fn read(path: impl AsRef<Path>) -> Result<IsmContainer> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| IsmError::io(path, e))?;
    IsmContainer::from_bytes(&bytes)
}

/// One TIFF page per channel, in detector order. Integer pages become counts (widened to
/// `u32`), floating-point pages become intensities.
pub fn import_tiff_stack(
    path: impl AsRef<Path>,
    grid: ScanGrid,
    detector: DetectorMap,
) -> Result<IsmContainer> {
    use tiff::decoder::{Decoder, DecodingResult};

    let path = path.as_ref();
    let err = |e: tiff::TiffError| IsmError::import(path, e);
    let file = File::open(path).map_err(|e| IsmError::io(path, e))?;
    let mut decoder = Decoder::new(BufReader::new(file)).map_err(err)?;
    let mut pages: Vec<Vec<f64>> = Vec::new();
    let mut integer = None;
    loop {
        let (w, h) = decoder.dimensions().map_err(err)?;
        if (h as usize, w as usize) != grid.shape() {
            return Err(IsmError::DimensionMismatch(format!(
                "page {} is {h}x{w}, grid is {}x{}",
                pages.len(),
                grid.ny,
                grid.nx
            )));
        }
        let (values, is_int): (Vec<f64>, bool) = match decoder.read_image().map_err(err)? {
            DecodingResult::U8(v) => (v.into_iter().map(f64::from).collect(), true),
            DecodingResult::U16(v) => (v.into_iter().map(f64::from).collect(), true),
            DecodingResult::U32(v) => (v.into_iter().map(f64::from).collect(), true),
            DecodingResult::F32(v) => (v.into_iter().map(f64::from).collect(), false),
            DecodingResult::F64(v) => (v, false),
            _ => return Err(IsmError::import(path, "unsupported sample format")),
        };
        if values.len() != grid.ny * grid.nx {
            return Err(IsmError::import(
                path,
                "multi-sample pixels are not supported",
            ));
        }
        if *integer.get_or_insert(is_int) != is_int {
            return Err(IsmError::import(
                path,
                "pages mix integer and floating-point samples",
            ));
        }
        pages.push(values);
        if !decoder.more_images() {
            break;
        }
        decoder.next_image().map_err(err)?;
    }
    if pages.len() != detector.n_channels() {
        return Err(IsmError::import(
            path,
            format!(
                "{} pages for {} detector elements",
                pages.len(),
                detector.n_channels()
            ),
        ));
    }
    let data = Array3::from_shape_fn((grid.ny, grid.nx, pages.len()), |(i, j, c)| {
        pages[c][i * grid.nx + j]
    });
    let dtype = if integer == Some(true) {
        DataType::Counts
    } else {
        DataType::Intensity
    };
    let mut ds = IsmDataset::new(data, dtype, grid, detector)?;
    ds.provenance.insert(
        "imported_from".into(),
        Value::from(path.display().to_string()),
    );
    Ok(IsmContainer::from_dataset(&ds))
}

/// Reads a phantom from a PGM/PNM image or a headerless numeric CSV grid.
pub fn import_phantom(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "csv" => import_csv(path),
        "pgm" | "pnm" | "ppm" | "pbm" => {
            let img = image::ImageReader::open(path)
                .map_err(|e| IsmError::io(path, e))?
                .with_guessed_format()
                .map_err(|e| IsmError::io(path, e))?
                .decode()
                .map_err(|e| IsmError::import(path, e))?
                .into_luma16();
            let (w, h) = img.dimensions();
            Ok(Array2::from_shape_fn((h as usize, w as usize), |(i, j)| {
                f64::from(img.get_pixel(j as u32, i as u32)[0])
            }))
        }
        _ => Err(IsmError::import(path, "phantom must be .pgm or .csv")),
    }
}

fn import_csv(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| IsmError::import(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IsmError::import(path, e))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| IsmError::import(path, format!("row {}: {e}", rows.len() + 1)))?;
        rows.push(row);
    }
    let nx = rows.first().map_or(0, Vec::len);
    if nx == 0 || rows.iter().any(|r| r.len() != nx) {
        return Err(IsmError::import(
            path,
            "rows must be non-empty and of equal length",
        ));
    }
    let ny = rows.len();
    Ok(Array2::from_shape_fn((ny, nx), |(i, j)| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn counts_2x2() -> IsmDataset {
        let data = Array3::from_shape_vec((2, 2, 1), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        IsmDataset::new(
            data,
            DataType::Counts,
            ScanGrid::square(2, 40.0).unwrap(),
            DetectorMap::full(1, 166.0),
        )
        .unwrap()
    }

    #[test]
    fn counts_payload_size() {
        let c = IsmContainer::from_dataset(&counts_2x2());
        let bytes = c.to_bytes().unwrap();
        let (_, offset) = IsmContainer::read_header(&bytes).unwrap();
        assert_eq!(bytes.len() - offset, 16);
        assert_eq!(&bytes[..8], b"ISMK0001");
        assert_eq!(&bytes[offset..offset + 4], &1u32.to_le_bytes());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.ism");
        let mut ds = counts_2x2();
        ds.provenance.insert("seed".into(), Value::from(7u64));
        let c = IsmContainer::from_dataset(&ds);
        assert_eq!(c.header.seed, Some(7));
        write(&c, &path).unwrap();
        let back = read(&path).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_dataset().unwrap(), ds);
        assert_eq!(std::fs::read(&path).unwrap(), back.to_bytes().unwrap());
    }

    #[test]
    fn read_errors() {
        let bytes = IsmContainer::from_dataset(&counts_2x2())
            .to_bytes()
            .unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            IsmContainer::from_bytes(&bad),
            Err(IsmError::BadMagic)
        ));

        let mut v2 = bytes.clone();
        v2[7] = b'2';
        let e = IsmContainer::from_bytes(&v2).unwrap_err();
        assert!(e.to_string().contains("unsupported version"));

        let short = &bytes[..bytes.len() - 3];
        let e = IsmContainer::from_bytes(short).unwrap_err();
        assert!(e.to_string().contains("payload length mismatch"));

        let (mut header, offset) = IsmContainer::read_header(&bytes).unwrap();
        header.dims = vec![1, 4, 1];
        let mut json = serde_json::to_vec(&header).unwrap();
        let mut forged = MAGIC.to_vec();
        forged.extend_from_slice(&(json.len() as u64).to_le_bytes());
        forged.append(&mut json);
        forged.extend_from_slice(&bytes[offset..]);
        let e = IsmContainer::from_bytes(&forged).unwrap_err();
        assert!(e.to_string().contains("dimension mismatch"), "{e}");

        let (mut header, _) = IsmContainer::read_header(&bytes).unwrap();
        header.format_version = 3;
        let json = serde_json::to_vec(&header).unwrap();
        let mut forged = MAGIC.to_vec();
        forged.extend_from_slice(&(json.len() as u64).to_le_bytes());
        forged.extend_from_slice(&json);
        forged.extend_from_slice(&bytes[offset..]);
        let e = IsmContainer::from_bytes(&forged).unwrap_err();
        assert!(e.to_string().contains("unsupported version"), "{e}");
    }

    #[test]
    fn image_and_psf_round_trip() {
        let grid = ScanGrid::new(3, 4, 20.0, 25.0).unwrap();
        let img = Array2::from_shape_fn((3, 4), |(i, j)| i as f64 * 0.1 + j as f64 / 3.0);
        let c = IsmContainer::from_image(&img, grid, Some("rl".into()), Some(5), Map::new());
        let back = IsmContainer::from_bytes(&c.to_bytes().unwrap()).unwrap();
        assert_eq!(back.to_image().unwrap(), img);
        assert_eq!(back.header.iterations, Some(5));
        assert!(back.to_dataset().is_err());

        let stack = crate::optics::psf_stack(
            &crate::optics::OpticalConfig::default(),
            &ScanGrid::square(16, 50.0).unwrap(),
            true,
        )
        .unwrap();
        let c = IsmContainer::from_psf(&stack, Map::new());
        let back = IsmContainer::from_bytes(&c.to_bytes().unwrap())
            .unwrap()
            .to_psf()
            .unwrap();
        assert_eq!(back.data, stack.data);
        assert!(back.normalized);
    }

    fn write_tiff(path: &Path, pages: usize, w: u32, h: u32) {
        use tiff::encoder::{colortype::Gray16, TiffEncoder};
        let file = File::create(path).unwrap();
        let mut enc = TiffEncoder::new(BufWriter::new(file)).unwrap();
        for p in 0..pages {
            let data: Vec<u16> = (0..w * h)
                .map(|i| (i as u16).wrapping_mul(7) + p as u16 * 1000)
                .collect();
            enc.write_image::<Gray16>(w, h, &data).unwrap();
        }
    }

    #[test]
    fn tiff_import() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("stack.tif");
        write_tiff(&path, 25, 12, 10);
        let grid = ScanGrid::new(10, 12, 40.0, 40.0).unwrap();
        let c = import_tiff_stack(&path, grid, DetectorMap::full(5, 166.0)).unwrap();
        assert_eq!(c.header.dims, vec![10, 12, 25]);
        assert_eq!(c.header.dtype, Dtype::U32);
        let ds = c.to_dataset().unwrap();
        assert_eq!(ds.data[[1, 2, 3]], ((14u16 * 7) + 3000) as f64);

        write_tiff(&path, 24, 12, 10);
        assert!(import_tiff_stack(&path, grid, DetectorMap::full(5, 166.0)).is_err());
    }

    #[test]
    fn phantom_import() {
        let dir = tempdir().unwrap();
        let csv_path = dir.path().join("p.csv");
        std::fs::write(&csv_path, "0, 1, 2\n3, 4.5, 5\n").unwrap();
        let p = import_phantom(&csv_path).unwrap();
        assert_eq!(p.dim(), (2, 3));
        assert_eq!(p[[1, 1]], 4.5);

        std::fs::write(&csv_path, "0,1\n2\n").unwrap();
        assert!(import_phantom(&csv_path).is_err());

        let pgm = dir.path().join("p.pgm");
        std::fs::write(&pgm, b"P2\n3 2\n255\n0 10 20\n30 40 255\n").unwrap();
        let p = import_phantom(&pgm).unwrap();
        assert_eq!(p.dim(), (2, 3));
        assert!(p[[1, 2]] > p[[1, 1]] && p[[0, 0]] == 0.0);
    }
}
