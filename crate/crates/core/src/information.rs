//! Entropies, (h, phi)-divergences and the statistical complexity `C = H D`.
//!
//! Everything is evaluated by half-line quadrature of log-densities, so the
//! G0 and Gamma laws are handled through the same [`LogDensity`] interface.

use serde::{Deserialize, Serialize};

use crate::distributions::{G0Params, GammaParams, LogDensity};
use crate::error::{Error, Result};
use crate::specfun::{integrate_half_line, Integral, QuadratureConfig};

/// Sign convention for the entropy factor of the complexity.
///
/// `Differential` is the Shannon differential entropy `-int f ln f`.
/// `Negentropy` reports `int f ln f`; on intensity data with sub-unit means
/// this is positive and decreases as texture increases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyConvention {
    Differential,
    #[default]
    Negentropy,
}

impl EntropyConvention {
    pub fn apply(self, differential_entropy: f64) -> f64 {
        match self {
            EntropyConvention::Differential => differential_entropy,
            EntropyConvention::Negentropy => -differential_entropy,
        }
    }
}

impl std::str::FromStr for EntropyConvention {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "differential" => Ok(Self::Differential),
            "negentropy" => Ok(Self::Negentropy),
            other => Err(format!(
                "unknown entropy convention `{other}` (expected `differential` or `negentropy`)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationMeasures {
    pub entropy: f64,
    /// Hellinger distance, in `[0, 1]`.
    pub distance: f64,
    pub complexity: f64,
}

const NORMALIZATION_SLACK: f64 = 1e-6;
const ROUNDOFF_SLACK: f64 = 100.0 * f64::EPSILON;

/// Shannon differential entropy `-int f ln f` in nats.
///
/// The density is integrated alongside the entropy and must be normalised to
/// within `1e-6`.
pub fn shannon_entropy<D: LogDensity + ?Sized>(density: &D, cfg: &QuadratureConfig) -> Result<f64> {
    shannon_entropy_scaled(density, density.scale_hint(), cfg).map(|i| i.value)
}

fn shannon_entropy_scaled<D: LogDensity + ?Sized>(
    density: &D,
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    let mass = integrate_half_line(|z| density.ln_pdf(z).exp(), scale, cfg)?;
    if (mass.value - 1.0).abs() > NORMALIZATION_SLACK {
        return Err(Error::InvalidParameter(format!(
            "density integrates to {} rather than 1",
            mass.value
        )));
    }
    integrate_half_line(
        |z| {
            let lf = density.ln_pdf(z);
            let f = lf.exp();
            if f == 0.0 {
                0.0
            } else {
                -f * lf
            }
        },
        scale,
        cfg,
    )
}

fn bhattacharyya<P, Q>(p: &P, q: &Q, scale: f64, cfg: &QuadratureConfig) -> Result<Integral>
where
    P: LogDensity + ?Sized,
    Q: LogDensity + ?Sized,
{
    integrate_half_line(|z| (0.5 * (p.ln_pdf(z) + q.ln_pdf(z))).exp(), scale, cfg)
}

fn clamp_unit(what: &'static str, value: f64, error: f64) -> Result<f64> {
    // the error bound does not cover roundoff in summing an O(1) integral
    let slack = error + ROUNDOFF_SLACK;
    if value < 0.0 {
        if -value <= slack {
            Ok(0.0)
        } else {
            Err(Error::OutOfRange { what, value, error })
        }
    } else if value > 1.0 {
        if value - 1.0 <= slack {
            Ok(1.0)
        } else {
            Err(Error::OutOfRange { what, value, error })
        }
    } else {
        Ok(value)
    }
}

/// Hellinger distance `1 - int sqrt(f_p f_q)` between a G0 and a Gamma law.
pub fn hellinger_distance(p: &G0Params, q: &GammaParams, cfg: &QuadratureConfig) -> Result<f64> {
    hellinger_between(p, q, q.scale_hint(), cfg)
}

/// Hellinger distance between any two densities on `(0, inf)`.
pub fn hellinger_between<P, Q>(p: &P, q: &Q, scale: f64, cfg: &QuadratureConfig) -> Result<f64>
where
    P: LogDensity + ?Sized,
    Q: LogDensity + ?Sized,
{
    let bc = bhattacharyya(p, q, scale, cfg)?;
    clamp_unit("Hellinger distance", 1.0 - bc.value, bc.error)
}

/// A convex generator `phi` of an (h, phi)-divergence.
pub trait ConvexGenerator {
    fn phi(&self, x: f64) -> f64;

    /// `phi(x) / x` for `x > 1`, given `ln x`.
    fn phi_over_x(&self, ln_x: f64) -> f64 {
        let x = ln_x.exp();
        if x.is_finite() {
            self.phi(x) / x
        } else {
            self.slope_at_infinity()
        }
    }

    /// `lim_{x -> inf} phi(x) / x`, the value used for `0 phi(x / 0)`.
    fn slope_at_infinity(&self) -> f64;
}

/// `phi(x) = (sqrt(x) - 1)^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HellingerPhi;

impl ConvexGenerator for HellingerPhi {
    fn phi(&self, x: f64) -> f64 {
        let d = x.sqrt() - 1.0;
        d * d
    }

    fn slope_at_infinity(&self) -> f64 {
        1.0
    }
}

/// `phi(x) = x ln x`, giving the Kullback-Leibler divergence with `h(y) = y`.
#[derive(Debug, Clone, Copy, Default)]
pub struct KullbackLeiblerPhi;

impl ConvexGenerator for KullbackLeiblerPhi {
    fn phi(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x * x.ln()
        }
    }

    fn phi_over_x(&self, ln_x: f64) -> f64 {
        ln_x
    }

    fn slope_at_infinity(&self) -> f64 {
        f64::INFINITY
    }
}

/// `h(int phi(f_p / f_q) f_q)` over `(0, inf)`.
///
/// Points where both densities vanish contribute nothing; points where only
/// `f_q` vanishes contribute `f_p` times the generator's slope at infinity.
pub fn hphi_divergence<P, Q, G, H>(
    fp: &P,
    fq: &Q,
    h: H,
    generator: &G,
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    P: LogDensity + ?Sized,
    Q: LogDensity + ?Sized,
    G: ConvexGenerator + ?Sized,
    H: Fn(f64) -> f64,
{
    hphi_divergence_scaled(fp, fq, h, generator, fq.scale_hint(), cfg)
}

pub fn hphi_divergence_scaled<P, Q, G, H>(
    fp: &P,
    fq: &Q,
    h: H,
    generator: &G,
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    P: LogDensity + ?Sized,
    Q: LogDensity + ?Sized,
    G: ConvexGenerator + ?Sized,
    H: Fn(f64) -> f64,
{
    let integral = integrate_half_line(
        |z| {
            let lp = fp.ln_pdf(z);
            let lq = fq.ln_pdf(z);
            if lp == f64::NEG_INFINITY && lq == f64::NEG_INFINITY {
                return 0.0;
            }
            let ln_ratio = lp - lq;
            if ln_ratio <= 0.0 {
                return lq.exp() * generator.phi(ln_ratio.exp());
            }
            // f_q phi(f_p / f_q) = f_p phi(x) / x
            let p = lp.exp();
            if p == 0.0 {
                0.0
            } else if lq == f64::NEG_INFINITY {
                p * generator.slope_at_infinity()
            } else {
                p * generator.phi_over_x(ln_ratio)
            }
        },
        scale,
        cfg,
    )?;
    let value = h(integral.value);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteIntegrand { at: f64::NAN })
    }
}

/// `C = H D`.
pub fn complexity(entropy: f64, distance: f64) -> f64 {
    entropy * distance
}

/// Entropy of the G0 fit, its Hellinger distance to the Gamma reference and
/// their product. Both integrals use the reference mean as quadrature scale.
pub fn information_measures(
    fit: &G0Params,
    reference: &GammaParams,
    convention: EntropyConvention,
    cfg: &QuadratureConfig,
) -> Result<InformationMeasures> {
    let scale = reference.scale_hint();
    let entropy = convention.apply(shannon_entropy_scaled(fit, scale, cfg)?.value);
    let distance = hellinger_between(fit, reference, scale, cfg)?;
    Ok(InformationMeasures {
        entropy,
        distance,
        complexity: complexity(entropy, distance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{digamma, ln_gamma};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn gamma_entropy(sigma2: f64, looks: f64) -> f64 {
        looks
            + ln_gamma(looks).unwrap()
            + (1.0 - looks) * digamma(looks).unwrap()
            + (sigma2 / looks).ln()
    }

    #[test]
    fn exponential_entropy_is_one_nat() {
        let p = GammaParams::new(1.0, 1.0).unwrap();
        close(
            shannon_entropy(&p, &QuadratureConfig::default()).unwrap(),
            1.0,
            1e-10,
        );
    }

    #[test]
    fn gamma_entropy_closed_form() {
        let cfg = QuadratureConfig::default();
        for (s2, l) in [(0.0294, 4.0), (0.0983, 4.0), (1.0, 8.0), (3.0, 1.5)] {
            let p = GammaParams::new(s2, l).unwrap();
            close(
                shannon_entropy(&p, &cfg).unwrap(),
                gamma_entropy(s2, l),
                1e-8,
            );
        }
    }

    #[test]
    fn entropy_rejects_unnormalized() {
        struct Twice;
        impl LogDensity for Twice {
            fn ln_pdf(&self, z: f64) -> f64 {
                2f64.ln() - z
            }
            fn scale_hint(&self) -> f64 {
                1.0
            }
        }
        assert!(shannon_entropy(&Twice, &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn table_distances() {
        let cfg = QuadratureConfig::default();
        for (a, g, s2, d) in [
            (-11.870, 0.320, 0.0294, 0.0066),
            (-2.717, 0.179, 0.0983, 0.0669),
            (-2.051, 0.182, 0.1670, 0.110),
        ] {
            let p = G0Params::new(a, g, 4.0).unwrap();
            let q = GammaParams::new(s2, 4.0).unwrap();
            let got = hellinger_distance(&p, &q, &cfg).unwrap();
            assert!((got / d - 1.0).abs() < 0.1, "{got} vs {d}");
        }
    }

    #[test]
    fn generic_path_matches_direct_hellinger() {
        let cfg = QuadratureConfig {
            relative_tolerance: 1e-13,
            absolute_tolerance: 1e-15,
            max_subdivisions: 500,
        };
        for (a, g, s2) in [
            (-11.870, 0.320, 0.0294),
            (-2.717, 0.179, 0.0983),
            (-2.051, 0.182, 0.1670),
        ] {
            let p = G0Params::new(a, g, 4.0).unwrap();
            let q = GammaParams::new(s2, 4.0).unwrap();
            let direct = hellinger_distance(&p, &q, &cfg).unwrap();
            let generic =
                hphi_divergence_scaled(&p, &q, |y| y / 2.0, &HellingerPhi, s2, &cfg).unwrap();
            close(direct, generic, 1e-10);
        }
    }

    #[test]
    fn kl_identities() {
        let cfg = QuadratureConfig::default();
        let p = GammaParams::new(1.0, 1.0).unwrap();
        close(
            hphi_divergence(&p, &p, |y| y, &KullbackLeiblerPhi, &cfg).unwrap(),
            0.0,
            1e-12,
        );
        // KL(Gamma(k1, th1) || Gamma(k2, th2)) with shape L and scale sigma2 / L
        let kl = |s1: f64, l1: f64, s2: f64, l2: f64| {
            let (t1, t2) = (s1 / l1, s2 / l2);
            (l1 - l2) * digamma(l1).unwrap() - ln_gamma(l1).unwrap()
                + ln_gamma(l2).unwrap()
                + l2 * (t2.ln() - t1.ln())
                + l1 * (t1 - t2) / t2
        };
        for (s1, l1, s2, l2) in [
            (1.0, 1.0, 2.0, 1.0),
            (0.5, 4.0, 0.8, 3.0),
            (1.0, 2.0, 1.0, 5.0),
        ] {
            let p = GammaParams::new(s1, l1).unwrap();
            let q = GammaParams::new(s2, l2).unwrap();
            let got = hphi_divergence(&p, &q, |y| y, &KullbackLeiblerPhi, &cfg).unwrap();
            close(got, kl(s1, l1, s2, l2), 1e-9);
        }
        // Gamma(1,1) vs Gamma(2,1): ln 2 - 1/2
        close(kl(1.0, 1.0, 2.0, 1.0), 2f64.ln() - 0.5, 1e-14);
    }

    #[test]
    fn zero_conventions() {
        // f_q vanishes on z > 1 while f_p does not
        struct Uniform;
        impl LogDensity for Uniform {
            fn ln_pdf(&self, z: f64) -> f64 {
                if z <= 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            fn scale_hint(&self) -> f64 {
                1.0
            }
        }
        let e = GammaParams::new(1.0, 1.0).unwrap();
        let cfg = QuadratureConfig {
            max_subdivisions: 2000,
            relative_tolerance: 1e-9,
            ..Default::default()
        };
        // Hellinger: 1 - int_0^1 e^{-z/2} = 1 - 2 (1 - e^{-1/2})
        let d = hphi_divergence(&e, &Uniform, |y| y / 2.0, &HellingerPhi, &cfg).unwrap();
        close(d, 1.0 - 2.0 * (1.0 - (-0.5f64).exp()), 1e-7);
    }

    #[test]
    fn complexity_product() {
        close(complexity(2.790, 0.0066), 0.0184, 5e-4);
        close(complexity(1.400, 0.0669), 0.0936, 5e-4);
        assert_eq!(complexity(3.7, 0.0), 0.0);
    }

    #[test]
    fn negentropy_reproduces_table_magnitudes() {
        let cfg = QuadratureConfig::default();
        for (a, g, s2, h) in [
            (-11.870, 0.320, 0.0294, 2.790),
            (-2.717, 0.179, 0.0983, 1.400),
            (-2.051, 0.182, 0.1670, 0.928),
        ] {
            let p = G0Params::new(a, g, 4.0).unwrap();
            let q = GammaParams::new(s2, 4.0).unwrap();
            let m = information_measures(&p, &q, EntropyConvention::Negentropy, &cfg).unwrap();
            assert!((m.entropy / h - 1.0).abs() < 0.01, "{} vs {h}", m.entropy);
            assert_eq!(m.complexity, m.entropy * m.distance);
            let d = information_measures(&p, &q, EntropyConvention::Differential, &cfg).unwrap();
            assert_eq!(d.entropy, -m.entropy);
        }
    }
}
