//! Raster files, histogram equalization and false-colour output.
//!
//! A raster is a pair of files: a UTF-8 header of `key: value` lines and a raw
//! little-endian payload holding the bands one after another, each band in
//! row-major order. Lines starting with `#` are comments.
//!
//! ```text
//! width: 303
//! height: 101
//! bands: 3
//! dtype: float64
//! byteorder: little
//! looks: 4
//! bands-names: HH, HV, VV
//! ```
//!
//! Pixels without a value (failed window fits) are stored as quiet NaN.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{Grid, IntensityChannel, Polarization};

/// Comment written into every header describing the sentinel.
pub const SENTINEL_NOTE: &str =
    "# NaN marks pixels without a value (failed fits); equalization maps them to level 0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DType {
    Float32,
    #[default]
    Float64,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::Float32 => 4,
            DType::Float64 => 8,
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DType::Float32 => "float32",
            DType::Float64 => "float64",
        })
    }
}

impl FromStr for DType {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "float32" => Ok(DType::Float32),
            "float64" => Ok(DType::Float64),
            other => Err(format!("unsupported dtype `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterHeader {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub dtype: DType,
    pub looks: f64,
    pub band_names: Vec<String>,
}

impl RasterHeader {
    pub fn payload_len(&self) -> u64 {
        (self.width * self.height * self.bands * self.dtype.size()) as u64
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason,
        };
        let (mut width, mut height, mut bands, mut dtype, mut looks, mut names) =
            (None, None, None, None, None, None);
        let mut byteorder = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| bad(format!("line {}: expected `key: value`", n + 1)))?;
            let value = value.trim();
            let count = |v: &str| {
                v.parse::<usize>().ok().filter(|&c| c > 0).ok_or_else(|| {
                    bad(format!(
                        "`{}` must be a positive integer, got `{v}`",
                        key.trim()
                    ))
                })
            };
            match key.trim() {
                "width" => width = Some(count(value)?),
                "height" => height = Some(count(value)?),
                "bands" => bands = Some(count(value)?),
                "dtype" => dtype = Some(value.parse::<DType>().map_err(bad)?),
                "byteorder" => match value {
                    "little" | "little-endian" => byteorder = true,
                    other => return Err(bad(format!("unsupported byte order `{other}`"))),
                },
                "looks" => {
                    looks = Some(
                        value
                            .parse::<f64>()
                            .ok()
                            .filter(|l| *l > 0.0 && l.is_finite())
                            .ok_or_else(|| bad(format!("looks must be positive, got `{value}`")))?,
                    )
                }
                "bands-names" | "band-names" => {
                    names = Some(
                        value
                            .split(',')
                            .map(|s| s.trim().to_string())
                            .collect::<Vec<_>>(),
                    )
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| bad(format!("missing `{k}`"));
        let width = width.ok_or_else(|| missing("width"))?;
        let height = height.ok_or_else(|| missing("height"))?;
        let bands = bands.ok_or_else(|| missing("bands"))?;
        let dtype = dtype.ok_or_else(|| missing("dtype"))?;
        if !byteorder {
            return Err(missing("byteorder"));
        }
        let looks = looks.ok_or_else(|| missing("looks"))?;
        let band_names = names.ok_or_else(|| missing("bands-names"))?;
        if band_names.len() != bands {
            return Err(bad(format!(
                "{} band names for {bands} bands",
                band_names.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bands,
            dtype,
            looks,
            band_names,
        })
    }

    pub fn render(&self) -> String {
        format!(
            "{SENTINEL_NOTE}\nwidth: {}\nheight: {}\nbands: {}\ndtype: {}\nbyteorder: little\nlooks: {}\nbands-names: {}\n",
            self.width,
            self.height,
            self.bands,
            self.dtype,
            self.looks,
            self.band_names.join(", ")
        )
    }
}

/// Named bands of equal size.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStack {
    names: Vec<String>,
    bands: Vec<Grid<f64>>,
}

impl BandStack {
    pub fn new(bands: Vec<(String, Grid<f64>)>) -> Result<Self> {
        let Some((_, first)) = bands.first() else {
            return Err(Error::Empty("a raster needs at least one band".into()));
        };
        let dims = first.dims();
        for (name, grid) in &bands {
            if grid.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}x{}", dims.0, dims.1),
                    found: format!("{}x{} in band {name}", grid.width(), grid.height()),
                });
            }
            if name.is_empty() || name.contains(',') || name.contains('\n') || name.trim() != name {
                return Err(Error::InvalidParameter(format!(
                    "band name `{name}` must be non-empty, trimmed and free of commas"
                )));
            }
        }
        let (names, bands) = bands.into_iter().unzip();
        Ok(Self { names, bands })
    }

    pub fn single(name: &str, grid: Grid<f64>) -> Result<Self> {
        Self::new(vec![(name.to_string(), grid)])
    }

    pub fn dims(&self) -> (usize, usize) {
        self.bands[0].dims()
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn bands(&self) -> &[Grid<f64>] {
        &self.bands
    }

    pub fn band(&self, index: usize) -> Option<&Grid<f64>> {
        self.bands.get(index)
    }

    pub fn find(&self, name: &str) -> Option<&Grid<f64>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.bands[i])
    }
}

/// Payload path paired with a header path: `scene.hdr` -> `scene.raw`.
pub fn payload_path(header: &Path) -> PathBuf {
    header.with_extension("raw")
}

pub fn read_raster(header_path: &Path, payload: &Path) -> Result<(RasterHeader, BandStack)> {
    let text = fs::read_to_string(header_path)?;
    let header = RasterHeader::parse(&text, header_path)?;
    let bytes = fs::read(payload)?;
    if bytes.len() as u64 != header.payload_len() {
        return Err(Error::SizeMismatch {
            path: payload.to_path_buf(),
            expected: header.payload_len(),
            actual: bytes.len() as u64,
        });
    }
    let values: Vec<f64> = match header.dtype {
        DType::Float32 => bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect(),
        DType::Float64 => bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
    };
    let n = header.width * header.height;
    let bands = header
        .band_names
        .iter()
        .zip(values.chunks_exact(n))
        .map(|(name, v)| {
            Ok((
                name.clone(),
                Grid::from_vec(header.width, header.height, v.to_vec())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, BandStack::new(bands)?))
}

/// Reads one band as an intensity channel.
///
/// The polarisation comes from the band name when it is `HH`, `HV` or `VV`,
/// otherwise from the band position.
pub fn read_channel(header_path: &Path, payload: &Path, band: usize) -> Result<IntensityChannel> {
    let (header, stack) = read_raster(header_path, payload)?;
    let grid = stack.band(band).cloned().ok_or_else(|| {
        Error::InvalidParameter(format!(
            "band {band} out of range for {} bands",
            header.bands
        ))
    })?;
    let polarization = header.band_names[band]
        .parse::<Polarization>()
        .unwrap_or(Polarization::ALL[band % 3]);
    IntensityChannel::new(grid, polarization, header.looks)
}

pub fn write_raster(
    stack: &BandStack,
    looks: f64,
    dtype: DType,
    header_path: &Path,
    payload: &Path,
) -> Result<RasterHeader> {
    let (width, height) = stack.dims();
    let header = RasterHeader {
        width,
        height,
        bands: stack.len(),
        dtype,
        looks,
        band_names: stack.names.clone(),
    };
    let mut out = BufWriter::new(fs::File::create(payload)?);
    for band in stack.bands() {
        for &v in band.as_slice() {
            match dtype {
                DType::Float32 => out.write_all(&(v as f32).to_le_bytes())?,
                DType::Float64 => out.write_all(&v.to_le_bytes())?,
            }
        }
    }
    out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    fs::write(header_path, header.render())?;
    Ok(header)
}

pub fn write_channel(
    channel: &IntensityChannel,
    dtype: DType,
    header_path: &Path,
    payload: &Path,
) -> Result<RasterHeader> {
    let stack = BandStack::single(channel.polarization().as_str(), channel.grid().clone())?;
    write_raster(&stack, channel.looks(), dtype, header_path, payload)
}

/// Rank-based histogram equalization to 8 bits.
///
/// Each finite value maps to `floor(255 * rank / (count - 1))`, where tied
/// values share the average of their ranks. Non-finite values map to 0 and a
/// grid with a single distinct finite value maps to 128.
pub fn equalize(grid: &Grid<f64>) -> Result<Grid<u8>> {
    let mut valid: Vec<f64> = grid
        .as_slice()
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    if valid.is_empty() {
        return Err(Error::Empty(
            "cannot equalize a grid without finite values".into(),
        ));
    }
    valid.sort_by(f64::total_cmp);
    let count = valid.len();
    if valid[0] == valid[count - 1] {
        return Ok(grid.map(|v| if v.is_finite() { 128 } else { 0 }));
    }
    let scale = 255.0 / (count - 1) as f64;
    Ok(grid.map(|&v| {
        if !v.is_finite() {
            return 0;
        }
        let first = valid.partition_point(|&u| u < v);
        let last = valid.partition_point(|&u| u <= v) - 1;
        let rank = 0.5 * (first + last) as f64;
        (scale * rank).floor().min(255.0) as u8
    }))
}

/// Interleaved 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Interleaved samples in row-major order.
    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    /// Rec. 601 luma of one pixel.
    pub fn luma(&self, x: usize, y: usize) -> f64 {
        let [r, g, b] = self.pixel(x, y);
        0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
    }
}

/// R = HH, G = HV, B = VV.
pub fn compose_rgb(hh: &Grid<u8>, hv: &Grid<u8>, vv: &Grid<u8>) -> Result<RgbImage> {
    for g in [hv, vv] {
        if g.dims() != hh.dims() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", hh.width(), hh.height()),
                found: format!("{}x{}", g.width(), g.height()),
            });
        }
    }
    let data = hh
        .as_slice()
        .iter()
        .zip(hv.as_slice())
        .zip(vv.as_slice())
        .flat_map(|((&r, &g), &b)| [r, g, b])
        .collect();
    Ok(RgbImage {
        width: hh.width(),
        height: hh.height(),
        data,
    })
}

/// Binary P6 encoding.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn write_ppm(img: &RgbImage, path: &Path) -> Result<()> {
    fs::write(path, encode_ppm(img))?;
    Ok(())
}
