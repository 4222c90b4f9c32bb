//! Sliding-window feature extraction.
//!
//! For every output pixel the window sample yields six features: the sample
//! mean, the G0 maximum-likelihood texture and scale, the entropy of the
//! fitted G0 law, its Hellinger distance to the Gamma law with the sample mean,
//! and their product (the statistical complexity).
//!
//! Output rows are computed in parallel on the current rayon pool and
//! assembled in row order, so results do not depend on the number of threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{G0Params, GammaParams};
use crate::error::{Error, Result};
use crate::estimation::{fit_g0_mle, Fallback, FitResult, SolverConfig};
use crate::information::{information_measures, EntropyConvention};
use crate::raster::BandStack;
use crate::specfun::QuadratureConfig;

/// Row-major 2-D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(data.len()) {
            return Err(Error::DimensionMismatch {
                expected: format!("{width}x{height} non-empty grid"),
                found: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Copy of the `w x h` block whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self>
    where
        T: Clone,
    {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::DimensionMismatch {
                expected: format!("rectangle inside {}x{}", self.width, self.height),
                found: format!("{w}x{h} at ({x0}, {y0})"),
            });
        }
        Ok(Grid::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y).clone()))
    }
}

/// Polarisation channel of an intensity band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    HH,
    HV,
    VV,
}

impl Polarization {
    pub const ALL: [Polarization; 3] = [Polarization::HH, Polarization::HV, Polarization::VV];

    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::HH => "HH",
            Polarization::HV => "HV",
            Polarization::VV => "VV",
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HH" => Ok(Polarization::HH),
            "HV" | "VH" => Ok(Polarization::HV),
            "VV" => Ok(Polarization::VV),
            other => Err(Error::InvalidParameter(format!(
                "unknown polarization `{other}`"
            ))),
        }
    }
}

/// One intensity band with its number of looks.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityChannel {
    grid: Grid<f64>,
    polarization: Polarization,
    looks: f64,
}

impl IntensityChannel {
    pub fn new(grid: Grid<f64>, polarization: Polarization, looks: f64) -> Result<Self> {
        if let Some((offset, &value)) = grid
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidSample { offset, value });
        }
        if !(looks > 0.0 && looks.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "looks must be positive, got {looks}"
            )));
        }
        Ok(Self {
            grid,
            polarization,
            looks,
        })
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.grid
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    pub fn looks(&self) -> f64 {
        self.looks
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Mirror the image about its edge pixels; output matches the input size.
    #[default]
    Reflect,
    /// Only windows fully inside the image.
    Valid,
}

impl FromStr for Boundary {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "reflect" => Ok(Boundary::Reflect),
            "valid" => Ok(Boundary::Valid),
            other => Err(format!(
                "unknown boundary `{other}` (expected `reflect` or `valid`)"
            )),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Reflect => "reflect",
            Boundary::Valid => "valid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct WindowSpec {
    pub side: usize,
    pub boundary: Boundary,
    pub stride: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            side: 7,
            boundary: Boundary::Reflect,
            stride: 1,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self, min_sample_size: usize) -> Result<()> {
        if self.side < 3 || self.side.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "window side must be odd and >= 3, got {}",
                self.side
            )));
        }
        if self.side * self.side < min_sample_size {
            return Err(Error::InvalidParameter(format!(
                "a {0}x{0} window holds fewer than {min_sample_size} samples",
                self.side
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Window centres along an axis of length `n`.
    fn centres(&self, n: usize) -> Result<Vec<usize>> {
        let half = self.side / 2;
        match self.boundary {
            Boundary::Reflect => Ok((0..n).step_by(self.stride).collect()),
            Boundary::Valid => {
                if self.side > n {
                    return Err(Error::InvalidParameter(format!(
                        "window side {} exceeds image extent {n}",
                        self.side
                    )));
                }
                Ok((half..n - half).step_by(self.stride).collect())
            }
        }
    }
}

/// Everything that controls feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct FeatureConfig {
    pub window: WindowSpec,
    pub solver: SolverConfig,
    pub quadrature: QuadratureConfig,
    pub entropy: EntropyConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Mean,
    Alpha,
    Gamma,
    Entropy,
    Distance,
    Complexity,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 6] = [
        FeatureKind::Mean,
        FeatureKind::Alpha,
        FeatureKind::Gamma,
        FeatureKind::Entropy,
        FeatureKind::Distance,
        FeatureKind::Complexity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Mean => "mean",
            FeatureKind::Alpha => "alpha",
            FeatureKind::Gamma => "gamma",
            FeatureKind::Entropy => "entropy",
            FeatureKind::Distance => "distance",
            FeatureKind::Complexity => "complexity",
        }
    }
}

impl FromStr for FeatureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown feature `{s}`")))
    }
}

/// The six feature grids of one channel plus per-pixel fit status.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMaps {
    pub polarization: Polarization,
    pub mean: Grid<f64>,
    pub alpha: Grid<f64>,
    pub gamma: Grid<f64>,
    pub entropy: Grid<f64>,
    pub distance: Grid<f64>,
    pub complexity: Grid<f64>,
    pub status: Grid<Fallback>,
}

impl FeatureMaps {
    pub fn dims(&self) -> (usize, usize) {
        self.mean.dims()
    }

    pub fn grid(&self, kind: FeatureKind) -> &Grid<f64> {
        match kind {
            FeatureKind::Mean => &self.mean,
            FeatureKind::Alpha => &self.alpha,
            FeatureKind::Gamma => &self.gamma,
            FeatureKind::Entropy => &self.entropy,
            FeatureKind::Distance => &self.distance,
            FeatureKind::Complexity => &self.complexity,
        }
    }
}

/// Features of a single sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFeatures {
    pub mean: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub entropy: f64,
    pub distance: f64,
    pub complexity: f64,
    pub status: Fallback,
    /// Solver diagnostics when the solver ran.
    pub fit: Option<FitResult>,
}

impl WindowFeatures {
    fn failed(mean: f64, fit: Option<FitResult>) -> Self {
        let (alpha, gamma) = fit
            .map(|f| (f.params.alpha(), f.params.gamma()))
            .unwrap_or((f64::NAN, f64::NAN));
        Self {
            mean,
            alpha,
            gamma,
            entropy: f64::NAN,
            distance: f64::NAN,
            complexity: f64::NAN,
            status: Fallback::Failed,
            fit,
        }
    }
}

/// Fits and evaluates one window sample. Never fails: problems show up as
/// `status == Fallback::Failed` with NaN in the affected features.
pub fn window_features(sample: &[f64], looks: f64, cfg: &FeatureConfig) -> WindowFeatures {
    let mean = sample.iter().sum::<f64>() / sample.len() as f64;
    let reference = match GammaParams::new(mean, looks) {
        Ok(r) => r,
        Err(_) => return WindowFeatures::failed(mean, None),
    };
    let constant = sample.iter().all(|&v| v == sample[0]);
    let (params, status, fit) = if constant {
        let cap = cfg.solver.texture_cap;
        match G0Params::new(-cap, (cap - 1.0) * mean, looks) {
            Ok(p) => (p, Fallback::TexturelessLimit, None),
            Err(_) => return WindowFeatures::failed(mean, None),
        }
    } else {
        match fit_g0_mle(sample, looks, &cfg.solver) {
            Ok(fit) if fit.is_usable() => (fit.params, fit.fallback, Some(fit)),
            Ok(fit) => return WindowFeatures::failed(mean, Some(fit)),
            Err(_) => return WindowFeatures::failed(mean, None),
        }
    };
    match information_measures(&params, &reference, cfg.entropy, &cfg.quadrature) {
        Ok(info) => WindowFeatures {
            mean,
            alpha: params.alpha(),
            gamma: params.gamma(),
            entropy: info.entropy,
            distance: info.distance,
            complexity: info.complexity,
            status,
            fit,
        },
        Err(_) => {
            let mut w = WindowFeatures::failed(mean, fit);
            w.alpha = params.alpha();
            w.gamma = params.gamma();
            w
        }
    }
}

/// Mirror index into `0..n` without repeating the edge sample.
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    (if m < n as isize { m } else { period - m }) as usize
}

/// Output dimensions for an input of `width x height`.
pub fn output_dims(width: usize, height: usize, window: &WindowSpec) -> Result<(usize, usize)> {
    Ok((window.centres(width)?.len(), window.centres(height)?.len()))
}

pub fn extract_features(channel: &IntensityChannel, cfg: &FeatureConfig) -> Result<FeatureMaps> {
    cfg.window.validate(cfg.solver.min_sample_size)?;
    cfg.solver.validate()?;
    cfg.quadrature.validate()?;
    let xs = cfg.window.centres(channel.width())?;
    let ys = cfg.window.centres(channel.height())?;
    let side = cfg.window.side;
    let half = (side / 2) as isize;
    let grid = channel.grid();
    let looks = channel.looks();

    let rows: Vec<Vec<WindowFeatures>> = ys
        .par_iter()
        .map_init(
            || Vec::with_capacity(side * side),
            |sample, &cy| {
                xs.iter()
                    .map(|&cx| {
                        sample.clear();
                        for dy in -half..=half {
                            let y = reflect(cy as isize + dy, grid.height());
                            let row = grid.row(y);
                            for dx in -half..=half {
                                sample.push(row[reflect(cx as isize + dx, grid.width())]);
                            }
                        }
                        window_features(sample, looks, cfg)
                    })
                    .collect()
            },
        )
        .collect();

    let (w, h) = (xs.len(), ys.len());
    let cells: Vec<WindowFeatures> = rows.into_iter().flatten().collect();
    let field = |f: fn(&WindowFeatures) -> f64| {
        Grid::from_vec(w, h, cells.iter().map(f).collect()).expect("dimensions match")
    };
    Ok(FeatureMaps {
        polarization: channel.polarization(),
        mean: field(|c| c.mean),
        alpha: field(|c| c.alpha),
        gamma: field(|c| c.gamma),
        entropy: field(|c| c.entropy),
        distance: field(|c| c.distance),
        complexity: field(|c| c.complexity),
        status: Grid::from_vec(w, h, cells.iter().map(|c| c.status).collect())
            .expect("dimensions match"),
    })
}

/// Stacks the complexity grids of three channels as bands HH, HV, VV.
pub fn vector_gsc(channels: [&FeatureMaps; 3]) -> Result<BandStack> {
    let dims = channels[0].dims();
    for c in &channels[1..] {
        if c.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", dims.0, dims.1),
                found: format!("{}x{}", c.dims().0, c.dims().1),
            });
        }
    }
    let mut ordered = channels;
    ordered.sort_by_key(|c| c.polarization as u8);
    let names: Vec<Polarization> = ordered.iter().map(|c| c.polarization).collect();
    if names != Polarization::ALL {
        return Err(Error::InvalidParameter(format!(
            "vector GSC needs one map per HH, HV, VV; got {names:?}"
        )));
    }
    BandStack::new(
        ordered
            .iter()
            .map(|c| (c.polarization.as_str().to_string(), c.complexity.clone()))
            .collect(),
    )
}
