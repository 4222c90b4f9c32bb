//! Special functions and adaptive quadrature on finite intervals and on the
//! positive half-line.
//!
//! `digamma` and `ln_gamma` use the asymptotic (Stirling) expansions for
//! arguments of at least [`ASYMPTOTIC_THRESHOLD`] and shift smaller arguments
//! upward with the recurrences `psi(x + 1) = psi(x) + 1/x` and
//! `Gamma(x + 1) = x Gamma(x)`.
//!
//! Integration is adaptive bisection driven by the nested 10/21-point
//! Gauss-Kronrod pair. Half-line integrals are mapped to the unit interval
//! through `t = z / (z + s)`, where `s` is a caller-supplied scale hint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arguments below this value are shifted upward before the asymptotic series
/// is applied.
pub const ASYMPTOTIC_THRESHOLD: f64 = 6.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} / (2k (2k - 1)), k = 1..10
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

// B_{2k} / (2k), k = 1..10
const DIGAMMA_ASYMPTOTIC: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
    43867.0 / 14_364.0,
    -174_611.0 / 6600.0,
];

fn check_positive(function: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            value: x,
            expected: "x > 0 and finite",
        })
    }
}

/// The digamma function `psi(x) = d/dx ln Gamma(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < ASYMPTOTIC_THRESHOLD {
        shift += 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut series = 0.0;
    let mut power = inv2;
    for c in DIGAMMA_ASYMPTOTIC {
        series += c * power;
        power *= inv2;
    }
    x.ln() - 0.5 / x - series - shift
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive("ln_gamma", x)?;
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(mut x: f64) -> f64 {
    let mut product = 1.0;
    while x < ASYMPTOTIC_THRESHOLD {
        product *= x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut power = inv;
    for c in STIRLING {
        series += c * power;
        power *= inv2;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series - product.ln()
}

/// Logarithm of the complex multivariate gamma function
/// `Gamma_m(L) = pi^{m(m-1)/2} prod_{i=0}^{m-1} Gamma(L - i)`.
pub fn ln_multivariate_gamma(m: usize, looks: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "multivariate gamma needs m >= 1".into(),
        ));
    }
    let mf = m as f64;
    if !(looks > mf - 1.0) || !looks.is_finite() {
        return Err(Error::Domain {
            function: "ln_multivariate_gamma",
            value: looks,
            expected: "L > m - 1",
        });
    }
    let mut acc = 0.5 * mf * (mf - 1.0) * PI.ln();
    for i in 0..m {
        acc += ln_gamma(looks - i as f64)?;
    }
    Ok(acc)
}

/// Tolerances and work limit for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct QuadratureConfig {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-10,
            absolute_tolerance: 1e-12,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0) || !(self.absolute_tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "quadrature tolerances must be strictly positive".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter(
                "quadrature needs at least one subdivision".into(),
            ));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        (self.relative_tolerance * value.abs()).max(self.absolute_tolerance)
    }
}

/// An integral estimate together with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    /// Number of bisections performed.
    pub subdivisions: usize,
}

// 21-point Kronrod abscissae (positive half, centre last) and weights, with
// the embedded 10-point Gauss weights for the odd-indexed abscissae.
// Digits as published, beyond double precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_149_148_770,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Gauss-Kronrod panel with the QUADPACK error rescaling.
fn kronrod21<F>(f: &F, lo: f64, hi: f64) -> Result<Panel>
where
    F: Fn(f64) -> Result<f64>,
{
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre)?;
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut res_abs = kronrod.abs();
    let mut values = [(0.0, 0.0); 10];
    for (j, (&x, &w)) in XGK[..10].iter().zip(&WGK[..10]).enumerate() {
        let dx = half * x;
        let f1 = f(centre - dx)?;
        let f2 = f(centre + dx)?;
        values[j] = (f1, f2);
        kronrod += w * (f1 + f2);
        res_abs += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for (j, &(f1, f2)) in values.iter().enumerate() {
        res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel {
        lo,
        hi,
        value,
        error,
    })
}

fn adaptive<F>(f: &F, panels: &[(f64, f64)], cfg: &QuadratureConfig) -> Result<Integral>
where
    F: Fn(f64) -> Result<f64>,
{
    cfg.validate()?;
    let mut heap = BinaryHeap::with_capacity(cfg.max_subdivisions + panels.len() + 1);
    // Panels too narrow to split any further keep their error in `frozen_error`.
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    for &(lo, hi) in panels {
        heap.push(kronrod21(f, lo, hi)?);
    }
    let totals = |heap: &BinaryHeap<Panel>, fv: f64, fe: f64| {
        heap.iter()
            .fold((fv, fe), |(v, e), p| (v + p.value, e + p.error))
    };
    let mut subdivisions = 0;
    loop {
        let (value, error) = totals(&heap, frozen_value, frozen_error);
        if error <= cfg.target(value) {
            return Ok(Integral {
                value,
                error,
                subdivisions,
            });
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::QuadratureNotConverged {
                estimate: value,
                error,
                subdivisions,
            });
        };
        if subdivisions >= cfg.max_subdivisions {
            heap.push(worst);
            return Err(Error::QuadratureNotConverged {
                estimate: value,
                error,
                subdivisions,
            });
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        let scale = worst.lo.abs().max(worst.hi.abs()).max(f64::MIN_POSITIVE);
        if (worst.hi - worst.lo) <= 1000.0 * f64::EPSILON * scale
            || mid <= worst.lo
            || mid >= worst.hi
        {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        heap.push(kronrod21(f, worst.lo, mid)?);
        heap.push(kronrod21(f, mid, worst.hi)?);
        subdivisions += 1;
    }
}

fn finite_at(z: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteIntegrand { at: z })
    }
}

/// Integrates `f` over the finite interval `[lo, hi]`.
pub fn integrate_interval<F>(f: F, lo: f64, hi: f64, cfg: &QuadratureConfig) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::InvalidParameter(format!(
            "integration interval [{lo}, {hi}] is not a finite ordered interval"
        )));
    }
    if hi == lo {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    let g = |z: f64| finite_at(z, f(z));
    adaptive(&g, &[(lo, hi)], cfg)
}

/// Integrates `f` over `(0, inf)`.
///
/// `scale` should be close to where `f` carries its mass; it is the point
/// mapped to `t = 1/2`. Each half of the unit interval is parametrised from its
/// own endpoint (`t` near zero, `1 - t` near one) so both ends keep full
/// floating-point resolution.
pub fn integrate_half_line<F>(f: F, scale: f64, cfg: &QuadratureConfig) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "half-line scale hint must be positive and finite, got {scale}"
        )));
    }
    // v in (0, 1/2] encodes t = v; v in [-1/2, 0) encodes 1 - t = -v.
    let g = |v: f64| {
        let (z, jac) = if v > 0.0 {
            let w = 1.0 - v;
            (scale * v / w, scale / (w * w))
        } else {
            let r = -v;
            (scale * (1.0 - r) / r, scale / (r * r))
        };
        if !z.is_finite() || z <= 0.0 || !jac.is_finite() {
            return Ok(0.0);
        }
        let value = f(z);
        if value == 0.0 {
            return Ok(0.0);
        }
        finite_at(z, value * jac)
    };
    adaptive(&g, &[(0.0, 0.5), (-0.5, 0.0)], cfg)
}
