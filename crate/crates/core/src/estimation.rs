//! Parameter estimation: sample mean for the Gamma reference and maximum
//! likelihood for the G0 law.
//!
//! The G0 likelihood equations are solved by damped Newton iteration in the
//! unconstrained coordinates `a = ln(-alpha)`, `g = ln(gamma)`. Once the
//! texture iterate passes the configured cap the fit is reported as the
//! textureless limit: `alpha = -cap`, `gamma = (cap - 1) * mean`, a G0 law
//! whose mean equals the sample mean.

use serde::{Deserialize, Serialize};

use crate::distributions::G0Params;
use crate::error::{Error, Result};
use crate::specfun::digamma_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SolverConfig {
    /// Bound on the max-norm of the likelihood residuals.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest admissible `|alpha|` before declaring the textureless limit.
    pub texture_cap: f64,
    pub min_sample_size: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
            texture_cap: 50.0,
            min_sample_size: 9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "solver tolerance must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "solver needs at least one iteration".into(),
            ));
        }
        if !(self.texture_cap > 2.0 && self.texture_cap.is_finite()) {
            return Err(Error::InvalidParameter(
                "texture cap must be finite and > 2".into(),
            ));
        }
        if self.min_sample_size < 2 {
            return Err(Error::InvalidParameter(
                "minimum sample size must be >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// How a fit ended when it did not converge to an interior root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fallback {
    None,
    TexturelessLimit,
    Failed,
}

impl Fallback {
    pub fn as_str(self) -> &'static str {
        match self {
            Fallback::None => "none",
            Fallback::TexturelessLimit => "textureless-limit",
            Fallback::Failed => "failed",
        }
    }

    /// Numeric code stored in fit-status rasters.
    pub fn code(self) -> u8 {
        match self {
            Fallback::None => 0,
            Fallback::TexturelessLimit => 1,
            Fallback::Failed => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub params: G0Params,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the raw likelihood residuals at `params`.
    pub residual_norm: f64,
    pub fallback: Fallback,
}

impl FitResult {
    /// Whether downstream information measures should be evaluated.
    pub fn is_usable(&self) -> bool {
        self.fallback != Fallback::Failed
    }
}

fn validate_sample(z: &[f64]) -> Result<()> {
    if z.is_empty() {
        return Err(Error::Empty("sample is empty".into()));
    }
    if let Some((offset, &value)) = z
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        return Err(Error::InvalidSample { offset, value });
    }
    Ok(())
}

/// Arithmetic mean; estimates the Gamma mean `sigma2`.
pub fn sample_mean(z: &[f64]) -> Result<f64> {
    validate_sample(z)?;
    Ok(z.iter().sum::<f64>() / z.len() as f64)
}

/// The two likelihood equations of the G0 law at `(alpha, gamma)`: the mean
/// score with respect to `alpha` and to `gamma`,
///
/// ```text
/// r1 = psi(-alpha) - psi(L - alpha) - ln gamma + mean ln(gamma + L z)
/// r2 = -alpha / gamma + (alpha - L) mean 1 / (gamma + L z)
/// ```
pub fn mle_residuals(alpha: f64, gamma: f64, z: &[f64], looks: f64) -> Result<(f64, f64)> {
    G0Params::new(alpha, gamma, looks)?;
    validate_sample(z)?;
    Ok(raw_residuals(alpha, gamma, z, looks))
}

fn raw_residuals(alpha: f64, gamma: f64, z: &[f64], looks: f64) -> (f64, f64) {
    let n = z.len() as f64;
    let (mut sum_ln, mut sum_inv) = (0.0, 0.0);
    for &v in z {
        let s = gamma + looks * v;
        sum_ln += s.ln();
        sum_inv += 1.0 / s;
    }
    let r1 = digamma_unchecked(-alpha) - digamma_unchecked(looks - alpha) - gamma.ln() + sum_ln / n;
    let r2 = -alpha / gamma + (alpha - looks) * sum_inv / n;
    (r1, r2)
}

/// Residuals in log coordinates with the second equation multiplied by
/// `gamma`, which makes both components dimensionless.
fn scaled(x: [f64; 2], z: &[f64], looks: f64) -> Option<[f64; 2]> {
    let alpha = -x[0].exp();
    let gamma = x[1].exp();
    if !(alpha < 0.0 && gamma > 0.0 && gamma.is_finite() && alpha.is_finite()) {
        return None;
    }
    let (r1, r2) = raw_residuals(alpha, gamma, z, looks);
    let out = [r1, r2 * gamma];
    out.iter().all(|v| v.is_finite()).then_some(out)
}

fn norm2(r: [f64; 2]) -> f64 {
    r[0].hypot(r[1])
}

/// Method-of-moments starting point `(alpha, gamma)`.
fn initial_guess(z: &[f64], looks: f64, cap: f64) -> (f64, f64) {
    let n = z.len() as f64;
    let m1 = z.iter().sum::<f64>() / n;
    let m2 = z.iter().map(|v| v * v).sum::<f64>() / n;
    // m2 / m1^2 = (L + 1)/L * (-alpha - 1)/(-alpha - 2)
    let ratio = m2 / (m1 * m1) * looks / (looks + 1.0);
    let beta = if ratio > 1.0 {
        ((2.0 * ratio - 1.0) / (ratio - 1.0)).min(0.8 * cap)
    } else {
        0.8 * cap
    };
    if -beta >= -2.2 {
        (-3.0, 2.0 * m1)
    } else {
        (-beta, m1 * (beta - 1.0))
    }
}

fn textureless(
    mean: f64,
    looks: f64,
    cfg: &SolverConfig,
    iterations: usize,
    z: &[f64],
) -> Result<FitResult> {
    let alpha = -cfg.texture_cap;
    let gamma = (cfg.texture_cap - 1.0) * mean;
    let (r1, r2) = raw_residuals(alpha, gamma, z, looks);
    Ok(FitResult {
        params: G0Params::new(alpha, gamma, looks)?,
        converged: false,
        iterations,
        residual_norm: r1.abs().max(r2.abs()),
        fallback: Fallback::TexturelessLimit,
    })
}

/// Maximum-likelihood fit of the G0 law with known number of looks.
///
/// Returns an error only for invalid input: too few values, negative or
/// non-finite values, or a sample without two distinct positive values.
/// Numerical trouble is reported through [`FitResult::fallback`].
pub fn fit_g0_mle(z: &[f64], looks: f64, cfg: &SolverConfig) -> Result<FitResult> {
    cfg.validate()?;
    if z.len() < cfg.min_sample_size {
        return Err(Error::SampleTooSmall {
            found: z.len(),
            required: cfg.min_sample_size,
        });
    }
    let mean = sample_mean(z)?;
    if !(looks > 0.0 && looks.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "looks must be positive, got {looks}"
        )));
    }
    let first_positive = z.iter().copied().find(|v| *v > 0.0);
    match first_positive {
        Some(p) if z.iter().any(|v| *v > 0.0 && *v != p) => {}
        _ => {
            return Err(Error::DegenerateSample(format!(
                "{} values with fewer than two distinct positive intensities",
                z.len()
            )))
        }
    }

    let (alpha0, gamma0) = initial_guess(z, looks, cfg.texture_cap);
    let mut x = [(-alpha0).ln(), gamma0.ln()];
    let Some(mut r) = scaled(x, z, looks) else {
        return failed(x, 0, z, looks);
    };
    let max_a = cfg.texture_cap.ln();
    // Log-coordinate step bound per iteration.
    const MAX_STEP: f64 = 1.0;
    const H: f64 = 1e-6;

    for iter in 1..=cfg.max_iterations {
        // Central-difference Jacobian in (a, g).
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += H;
            xm[k] -= H;
            let (Some(rp), Some(rm)) = (scaled(xp, z, looks), scaled(xm, z, looks)) else {
                return failed(x, iter, z, looks);
            };
            for i in 0..2 {
                jac[i][k] = (rp[i] - rm[i]) / (2.0 * H);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.is_finite() && det != 0.0) {
            return failed(x, iter, z, looks);
        }
        let mut step = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let len = step[0].abs().max(step[1].abs());
        if len > MAX_STEP {
            step = [step[0] * MAX_STEP / len, step[1] * MAX_STEP / len];
        }

        let current = norm2(r);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = [x[0] + lambda * step[0], x[1] + lambda * step[1]];
            if trial[0] > max_a {
                return textureless(mean, looks, cfg, iter, z);
            }
            if let Some(rt) = scaled(trial, z, looks) {
                if norm2(rt) < current {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, rt)) = accepted else {
            // no further decrease at floating-point resolution
            return match converged(x, iter, z, looks)? {
                Some(fit) if fit.residual_norm <= cfg.tolerance => Ok(fit),
                _ => failed(x, iter, z, looks),
            };
        };
        x = trial;
        r = rt;

        // Both the raw residuals and the dimensionless ones must be small;
        // the raw gamma score alone scales as 1 / gamma.
        if r[0].abs().max(r[1].abs()) <= cfg.tolerance {
            if let Some(fit) = converged(x, iter, z, looks)? {
                if fit.residual_norm <= cfg.tolerance {
                    return Ok(fit);
                }
            }
        }
    }
    failed(x, cfg.max_iterations, z, looks)
}

fn converged(x: [f64; 2], iterations: usize, z: &[f64], looks: f64) -> Result<Option<FitResult>> {
    let alpha = -x[0].exp();
    let gamma = x[1].exp();
    let (r1, r2) = raw_residuals(alpha, gamma, z, looks);
    let raw = r1.abs().max(r2.abs());
    if !raw.is_finite() {
        return Ok(None);
    }
    Ok(Some(FitResult {
        params: G0Params::new(alpha, gamma, looks)?,
        converged: true,
        iterations,
        residual_norm: raw,
        fallback: Fallback::None,
    }))
}

fn failed(x: [f64; 2], iterations: usize, z: &[f64], looks: f64) -> Result<FitResult> {
    let alpha = -x[0].exp().max(f64::MIN_POSITIVE);
    let gamma = x[1].exp().clamp(f64::MIN_POSITIVE, f64::MAX);
    let (r1, r2) = raw_residuals(alpha, gamma, z, looks);
    Ok(FitResult {
        params: G0Params::new(alpha, gamma, looks)?,
        converged: false,
        iterations,
        residual_norm: r1.abs().max(r2.abs()),
        fallback: Fallback::Failed,
    })
}
