//! Synthetic piecewise-homogeneous scenes.
//!
//! Every region draws its pixels from its own ChaCha stream, so changing one
//! region never perturbs another and rendering order does not matter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{stream_rng, G0Params, GammaParams, LogDensity};
use crate::error::{Error, Result};
use crate::features::{Grid, IntensityChannel, Polarization};
use crate::specfun::{integrate_interval, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }
}

/// Marginal law of a region; the number of looks belongs to the scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum RegionModel {
    Gamma { sigma2: f64 },
    G0 { alpha: f64, gamma: f64 },
}

impl RegionModel {
    fn sample_into(
        &self,
        looks: f64,
        rng: &mut rand_chacha::ChaCha8Rng,
        out: &mut [f64],
    ) -> Result<()> {
        match *self {
            RegionModel::Gamma { sigma2 } => GammaParams::new(sigma2, looks)?.sample_into(rng, out),
            RegionModel::G0 { alpha, gamma } => {
                G0Params::new(alpha, gamma, looks)?.sample_into(rng, out)
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub rect: Rect,
    pub model: RegionModel,
}

/// Single-channel synthetic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePhantom {
    pub width: usize,
    pub height: usize,
    pub regions: Vec<Region>,
    pub looks: f64,
    pub seed: u64,
    pub polarization: Polarization,
}

impl ScenePhantom {
    /// Checks that the regions tile the scene exactly once.
    pub fn validate(&self) -> Result<()> {
        validate_tiling(
            self.width,
            self.height,
            self.regions.iter().map(|r| (r.name.as_str(), &r.rect)),
        )?;
        if !(self.looks > 0.0 && self.looks.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "looks must be positive, got {}",
                self.looks
            )));
        }
        for r in &self.regions {
            match r.model {
                RegionModel::Gamma { sigma2 } => GammaParams::new(sigma2, self.looks).map(drop),
                RegionModel::G0 { alpha, gamma } => {
                    G0Params::new(alpha, gamma, self.looks).map(drop)
                }
            }
            .map_err(|e| Error::InvalidParameter(format!("region `{}`: {e}", r.name)))?;
        }
        Ok(())
    }

    /// Stream used for region `index`.
    pub fn stream(&self, index: usize) -> u64 {
        ((self.polarization as u64) << 32) | index as u64
    }
}

fn validate_tiling<'a>(
    width: usize,
    height: usize,
    regions: impl Iterator<Item = (&'a str, &'a Rect)> + Clone,
) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidTiling("scene must be non-empty".into()));
    }
    let mut covered = 0usize;
    for (i, (name, r)) in regions.clone().enumerate() {
        if r.area() == 0 {
            return Err(Error::InvalidTiling(format!("region `{name}` is empty")));
        }
        if r.x + r.width > width || r.y + r.height > height {
            return Err(Error::InvalidTiling(format!(
                "region `{name}` extends beyond the {width}x{height} scene"
            )));
        }
        if let Some((other, _)) = regions.clone().take(i).find(|(_, o)| o.intersects(r)) {
            return Err(Error::InvalidTiling(format!(
                "regions `{other}` and `{name}` overlap"
            )));
        }
        covered += r.area();
    }
    if covered != width * height {
        return Err(Error::InvalidTiling(format!(
            "regions cover {covered} of {} pixels",
            width * height
        )));
    }
    Ok(())
}

pub fn render_phantom(p: &ScenePhantom) -> Result<IntensityChannel> {
    p.validate()?;
    let samples: Vec<Vec<f64>> = p
        .regions
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = vec![0.0; r.rect.area()];
            r.model
                .sample_into(p.looks, &mut stream_rng(p.seed, p.stream(i)), &mut v)?;
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; p.width * p.height];
    for (r, v) in p.regions.iter().zip(&samples) {
        for (row, chunk) in v.chunks_exact(r.rect.width).enumerate() {
            let start = (r.rect.y + row) * p.width + r.rect.x;
            values[start..start + r.rect.width].copy_from_slice(chunk);
        }
    }
    IntensityChannel::new(
        Grid::from_vec(p.width, p.height, values)?,
        p.polarization,
        p.looks,
    )
}

/// Region of a three-channel scene with one model per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRegion {
    pub name: String,
    #[serde(flatten)]
    pub rect: Rect,
    pub hh: RegionModel,
    pub hv: RegionModel,
    pub vv: RegionModel,
}

/// Three-channel scene; channels are rendered independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub looks: f64,
    pub seed: u64,
    #[serde(rename = "region")]
    pub regions: Vec<SceneRegion>,
}

impl Scene {
    pub fn channel(&self, polarization: Polarization) -> ScenePhantom {
        ScenePhantom {
            width: self.width,
            height: self.height,
            looks: self.looks,
            seed: self.seed,
            polarization,
            regions: self
                .regions
                .iter()
                .map(|r| Region {
                    name: r.name.clone(),
                    rect: r.rect,
                    model: match polarization {
                        Polarization::HH => r.hh,
                        Polarization::HV => r.hv,
                        Polarization::VV => r.vv,
                    },
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in Polarization::ALL {
            self.channel(p).validate()?;
        }
        Ok(())
    }

    /// Rendered HH, HV and VV channels.
    pub fn render(&self) -> Result<[IntensityChannel; 3]> {
        self.validate()?;
        let [hh, hv, vv] = Polarization::ALL.map(|p| render_phantom(&self.channel(p)));
        Ok([hh?, hv?, vv?])
    }

    pub fn region(&self, name: &str) -> Option<&SceneRegion> {
        self.regions.iter().find(|r| r.name == name)
    }
}

/// Fitted G0 parameters of the large homogeneous sea, forest and urban samples.
pub const REFERENCE_CLASSES: [(&str, f64, f64); 3] = [
    ("sea", -11.870, 0.320),
    ("forest", -2.717, 0.179),
    ("urban", -2.051, 0.182),
];

/// 303x101 scene of three 101x101 tiles (sea, forest, urban from left to
/// right) with the same G0 laws in every channel and four looks.
pub fn default_scene(seed: u64) -> Scene {
    let regions = REFERENCE_CLASSES
        .iter()
        .enumerate()
        .map(|(i, &(name, alpha, gamma))| {
            let model = RegionModel::G0 { alpha, gamma };
            SceneRegion {
                name: name.to_string(),
                rect: Rect::new(101 * i, 0, 101, 101),
                hh: model,
                hv: model,
                vv: model,
            }
        })
        .collect();
    Scene {
        width: 303,
        height: 101,
        looks: 4.0,
        seed,
        regions,
    }
}

/// Kolmogorov-Smirnov statistic of `sample` against a density, with the CDF
/// obtained by integrating the density between consecutive order statistics.
pub fn ks_statistic<D: LogDensity + ?Sized>(
    sample: &[f64],
    density: &D,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Empty("KS statistic of an empty sample".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    if !(sorted[0] >= 0.0 && sorted[sorted.len() - 1].is_finite()) {
        return Err(Error::InvalidParameter(
            "KS sample must be finite and nonnegative".into(),
        ));
    }
    let pdf = |z: f64| density.ln_pdf(z).exp();
    let n = sorted.len() as f64;
    let (mut cdf, mut prev, mut d) = (0.0, 0.0, 0.0f64);
    for (i, &x) in sorted.iter().enumerate() {
        if x > prev {
            cdf += integrate_interval(pdf, prev, x, cfg)?.value;
            prev = x;
        }
        let c = cdf.min(1.0);
        d = d
            .max(((i + 1) as f64 / n - c).abs())
            .max((c - i as f64 / n).abs());
    }
    Ok(d)
}

/// Asymptotic critical value of the one-sample KS statistic at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}
