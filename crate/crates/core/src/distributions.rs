//! Intensity models for multilook SAR data.
//!
//! Densities are evaluated in log form. At `z = 0` the `z^{L-1}` factor makes
//! the log-density `-inf` for `L > 1`, finite for `L = 1` and `+inf` for
//! `L < 1`.
//!
//! Random streams come from [`stream_rng`]: a ChaCha8 generator seeded with
//! `seed` through `SeedableRng::seed_from_u64`, switched to stream `stream`.
//! The mapping `(seed, stream) -> sequence` is fixed by the pinned `rand_chacha`
//! version and does not depend on thread count.

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

pub use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::specfun::{ln_gamma_unchecked, ln_multivariate_gamma};

/// A density on `(0, inf)` that can be evaluated in log space.
pub trait LogDensity: Sync {
    /// Log-density at `z >= 0`. Callers guarantee `z` is not negative.
    fn ln_pdf(&self, z: f64) -> f64;

    /// Rough location of the mass, used to scale the half-line quadrature.
    fn scale_hint(&self) -> f64;
}

impl<T: LogDensity + ?Sized> LogDensity for &T {
    fn ln_pdf(&self, z: f64) -> f64 {
        (**self).ln_pdf(z)
    }

    fn scale_hint(&self) -> f64 {
        (**self).scale_hint()
    }
}

fn check_looks(looks: f64) -> Result<()> {
    if looks > 0.0 && looks.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "number of looks must be positive and finite, got {looks}"
        )))
    }
}

fn check_intensity(function: &'static str, z: f64) -> Result<()> {
    if z >= 0.0 && !z.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            value: z,
            expected: "z >= 0",
        })
    }
}

fn zero_intensity_ln_pdf(looks: f64, at_one_look: f64) -> f64 {
    if looks > 1.0 {
        f64::NEG_INFINITY
    } else if looks == 1.0 {
        at_one_look
    } else {
        f64::INFINITY
    }
}

/// Gamma law of a fully developed speckle intensity: mean `sigma2`, `looks` looks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaSpec", into = "GammaSpec")]
pub struct GammaParams {
    sigma2: f64,
    looks: f64,
    ln_norm: f64,
}

#[derive(Serialize, Deserialize)]
struct GammaSpec {
    sigma2: f64,
    looks: f64,
}

impl TryFrom<GammaSpec> for GammaParams {
    type Error = Error;
    fn try_from(s: GammaSpec) -> Result<Self> {
        GammaParams::new(s.sigma2, s.looks)
    }
}

impl From<GammaParams> for GammaSpec {
    fn from(p: GammaParams) -> Self {
        GammaSpec {
            sigma2: p.sigma2,
            looks: p.looks,
        }
    }
}

impl GammaParams {
    pub fn new(sigma2: f64, looks: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Gamma mean must be positive and finite, got {sigma2}"
            )));
        }
        check_looks(looks)?;
        let ln_norm = looks * looks.ln() - looks * sigma2.ln() - ln_gamma_unchecked(looks);
        Ok(Self {
            sigma2,
            looks,
            ln_norm,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn looks(&self) -> f64 {
        self.looks
    }

    pub fn mean(&self) -> f64 {
        self.sigma2
    }

    pub fn variance(&self) -> f64 {
        self.sigma2 * self.sigma2 / self.looks
    }

    /// Draws `out.len()` values from `rng`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let dist =
            Gamma::new(self.looks, self.sigma2 / self.looks).expect("validated Gamma parameters");
        for v in out {
            *v = dist.sample(rng);
        }
    }
}

impl LogDensity for GammaParams {
    fn ln_pdf(&self, z: f64) -> f64 {
        if z == 0.0 {
            return zero_intensity_ln_pdf(self.looks, self.ln_norm);
        }
        self.ln_norm + (self.looks - 1.0) * z.ln() - self.looks * z / self.sigma2
    }

    fn scale_hint(&self) -> f64 {
        self.sigma2
    }
}

/// G0 intensity law: texture `alpha < 0`, scale `gamma > 0`, `looks` looks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "G0Spec", into = "G0Spec")]
pub struct G0Params {
    alpha: f64,
    gamma: f64,
    looks: f64,
    ln_norm: f64,
}

#[derive(Serialize, Deserialize)]
struct G0Spec {
    alpha: f64,
    gamma: f64,
    looks: f64,
}

impl TryFrom<G0Spec> for G0Params {
    type Error = Error;
    fn try_from(s: G0Spec) -> Result<Self> {
        G0Params::new(s.alpha, s.gamma, s.looks)
    }
}

impl From<G0Params> for G0Spec {
    fn from(p: G0Params) -> Self {
        G0Spec {
            alpha: p.alpha,
            gamma: p.gamma,
            looks: p.looks,
        }
    }
}

impl G0Params {
    pub fn new(alpha: f64, gamma: f64, looks: f64) -> Result<Self> {
        if !(alpha < 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "G0 texture must be negative and finite, got {alpha}"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "G0 scale must be positive and finite, got {gamma}"
            )));
        }
        check_looks(looks)?;
        let ln_norm = looks * looks.ln() + ln_gamma_unchecked(looks - alpha)
            - alpha * gamma.ln()
            - ln_gamma_unchecked(-alpha)
            - ln_gamma_unchecked(looks);
        Ok(Self {
            alpha,
            gamma,
            looks,
            ln_norm,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn looks(&self) -> f64 {
        self.looks
    }

    /// `gamma / (-alpha - 1)`, defined only for `alpha < -1`.
    pub fn mean(&self) -> Option<f64> {
        (self.alpha < -1.0).then(|| self.gamma / (-self.alpha - 1.0))
    }

    /// Defined only for `alpha < -2`.
    pub fn variance(&self) -> Option<f64> {
        if self.alpha >= -2.0 {
            return None;
        }
        let a = -self.alpha;
        let m = self.gamma / (a - 1.0);
        let second =
            self.gamma * self.gamma * (self.looks + 1.0) / (self.looks * (a - 1.0) * (a - 2.0));
        Some(second - m * m)
    }

    /// Product construction: unit-mean Gamma speckle times `gamma / G`,
    /// `G ~ Gamma(-alpha, 1)`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let speckle = Gamma::new(self.looks, 1.0 / self.looks).expect("validated looks");
        let texture = Gamma::new(-self.alpha, 1.0).expect("validated texture");
        for v in out {
            let x = speckle.sample(rng);
            let g: f64 = texture.sample(rng);
            *v = x * self.gamma / g;
        }
    }
}

impl LogDensity for G0Params {
    fn ln_pdf(&self, z: f64) -> f64 {
        if z == 0.0 {
            let at_one = self.ln_norm + (self.alpha - self.looks) * self.gamma.ln();
            return zero_intensity_ln_pdf(self.looks, at_one);
        }
        self.ln_norm
            + (self.looks - 1.0) * z.ln()
            + (self.alpha - self.looks) * (self.gamma + self.looks * z).ln()
    }

    fn scale_hint(&self) -> f64 {
        self.gamma / -self.alpha
    }
}

pub fn gamma_log_density(z: f64, p: &GammaParams) -> Result<f64> {
    check_intensity("gamma_log_density", z)?;
    Ok(p.ln_pdf(z))
}

pub fn g0_log_density(z: f64, p: &G0Params) -> Result<f64> {
    check_intensity("g0_log_density", z)?;
    Ok(p.ln_pdf(z))
}

/// The Gamma law that G0 approaches as `alpha -> -inf`, `gamma -> inf` with
/// `-gamma / alpha` held at the limit mean.
pub fn gamma_limit_of_g0(p: &G0Params) -> Result<GammaParams> {
    if p.alpha >= -1.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha = {} >= -1 has no finite-mean Gamma limit",
            p.alpha
        )));
    }
    GammaParams::new(-p.gamma / p.alpha, p.looks)
}

/// Generator for `(seed, stream)`; see the module documentation.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter(
            "sample size must be at least 1".into(),
        ))
    } else {
        Ok(())
    }
}

/// `n` i.i.d. Gamma intensities from stream 0 of `seed`.
pub fn sample_gamma(p: &GammaParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    check_count(n)?;
    let mut out = vec![0.0; n];
    p.sample_into(&mut stream_rng(seed, 0), &mut out);
    Ok(out)
}

/// `n` i.i.d. G0 intensities from stream 0 of `seed`.
pub fn sample_g0(p: &G0Params, n: usize, seed: u64) -> Result<Vec<f64>> {
    check_count(n)?;
    let mut out = vec![0.0; n];
    p.sample_into(&mut stream_rng(seed, 0), &mut out);
    Ok(out)
}

pub type Complex64 = Complex<f64>;

/// Hermitian positive-definite `m x m` matrix: a covariance `Sigma` or an
/// observed multilook matrix `Z`.
#[derive(Debug, Clone)]
pub struct HermitianCovariance {
    matrix: DMatrix<Complex64>,
    cholesky: Cholesky<Complex64, nalgebra::Dyn>,
    ln_det: f64,
}

impl HermitianCovariance {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols || rows == 0 {
            return Err(Error::DimensionMismatch {
                expected: "non-empty square matrix".into(),
                found: format!("{rows}x{cols}"),
            });
        }
        let scale = matrix.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for i in 0..rows {
            for j in i..cols {
                let d = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if !(d <= 1e-12 * scale.max(f64::MIN_POSITIVE)) {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        let cholesky = Cholesky::new(matrix.clone()).ok_or(Error::NotPositiveDefinite)?;
        let mut ln_det = 0.0;
        for d in cholesky.l_dirty().diagonal().iter() {
            if !(d.re > 0.0) || d.im.abs() > 1e-12 * d.re {
                return Err(Error::NotPositiveDefinite);
            }
            ln_det += 2.0 * d.re.ln();
        }
        Ok(Self {
            matrix,
            cholesky,
            ln_det,
        })
    }

    /// Builds the matrix from the upper triangle given row by row:
    /// `I11, A12 + jB12, A13 + jB13, I22, A23 + jB23, I33` for `m = 3`.
    pub fn from_upper(m: usize, upper: &[Complex64]) -> Result<Self> {
        if upper.len() != m * (m + 1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: format!("{} upper-triangle entries", m * (m + 1) / 2),
                found: upper.len().to_string(),
            });
        }
        let mut mat = DMatrix::zeros(m, m);
        let mut it = upper.iter();
        for i in 0..m {
            for j in i..m {
                let v = *it.next().expect("length checked");
                mat[(i, j)] = v;
                mat[(j, i)] = v.conj();
            }
        }
        Self::new(mat)
    }

    pub fn diagonal(intensities: &[f64]) -> Result<Self> {
        let m = intensities.len();
        let mut mat = DMatrix::zeros(m, m);
        for (i, &v) in intensities.iter().enumerate() {
            mat[(i, i)] = Complex64::new(v, 0.0);
        }
        Self::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn ln_det(&self) -> f64 {
        self.ln_det
    }

    /// `tr(self^{-1} other)`, real for Hermitian arguments.
    pub fn trace_inverse_times(&self, other: &HermitianCovariance) -> f64 {
        self.cholesky.solve(&other.matrix).trace().re
    }
}

/// Log-density of the scaled complex Wishart law at `observed` given
/// covariance `sigma` and `looks` looks.
pub fn wishart_log_density(
    observed: &HermitianCovariance,
    sigma: &HermitianCovariance,
    looks: f64,
) -> Result<f64> {
    let m = observed.dim();
    if sigma.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: format!("{m}x{m}"),
            found: format!("{0}x{0}", sigma.dim()),
        });
    }
    check_looks(looks)?;
    let mf = m as f64;
    Ok(mf * looks * looks.ln() + (looks - mf) * observed.ln_det()
        - looks * sigma.ln_det()
        - ln_multivariate_gamma(m, looks)?
        - looks * sigma.trace_inverse_times(observed))
}
