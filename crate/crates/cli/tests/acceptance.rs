//! End-to-end acceptance checks. Runs without the libtest harness so that the
//! one PASS/FAIL line per criterion is always printed; exits non-zero if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gsc_core::distributions::{sample_g0, G0Params, GammaParams, LogDensity};
use gsc_core::estimation::{fit_g0_mle, SolverConfig};
use gsc_core::features::{extract_features, FeatureConfig};
use gsc_core::information::{complexity, hellinger_between, hellinger_distance, shannon_entropy};
use gsc_core::simulate::{default_scene, ks_critical_1pct, ks_statistic};
use gsc_core::specfun::{digamma, ln_gamma, QuadratureConfig};
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// (name, sigma, alpha, gamma, H, D, C) of the three homogeneous samples.
const CLASSES: [(&str, f64, f64, f64, f64, f64, f64); 3] = [
    ("sea", 0.0294, -11.870, 0.320, 2.790, 0.0066, 0.0184),
    ("forest", 0.0983, -2.717, 0.179, 1.400, 0.0669, 0.0936),
    ("urban", 0.1670, -2.051, 0.182, 0.928, 0.110, 0.102),
];
const LOOKS: f64 = 4.0;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn product_identity() -> Outcome {
    let worst = CLASSES
        .iter()
        .map(|&(_, _, _, _, h, d, c)| (c - complexity(h, d)).abs())
        .fold(0.0, f64::max);
    check(worst <= 5e-4, format!("max |C - H D| = {worst:.2e}"))
}

fn hellinger_reproduction() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut ds = Vec::new();
    let mut detail = Vec::new();
    let mut ok = true;
    for &(name, sigma, alpha, gamma, _, d_ref, _) in &CLASSES {
        let p = G0Params::new(alpha, gamma, LOOKS).map_err(|e| e.to_string())?;
        let q = GammaParams::new(sigma, LOOKS).map_err(|e| e.to_string())?;
        let d = hellinger_distance(&p, &q, &cfg).map_err(|e| e.to_string())?;
        let rel = (d / d_ref - 1.0).abs();
        ok &= rel <= 0.10;
        detail.push(format!(
            "{name} {d:.4} ({:+.1}%)",
            100.0 * (d / d_ref - 1.0)
        ));
        ds.push(d);
    }
    ok &= ds[0] < ds[1] && ds[1] < ds[2];
    check(ok, detail.join(", "))
}

fn gamma_entropy(sigma2: f64, looks: f64) -> f64 {
    looks
        + ln_gamma(looks).unwrap()
        + (1.0 - looks) * digamma(looks).unwrap()
        + (sigma2 / looks).ln()
}

fn entropy_oracles() -> Outcome {
    let cfg = QuadratureConfig::default();
    let n = 1_000_000;
    let mut worst_z = 0.0f64;
    let mut worst_gamma = 0.0f64;
    for (i, &(_, sigma, alpha, gamma, _, _, _)) in CLASSES.iter().enumerate() {
        let p = G0Params::new(alpha, gamma, LOOKS).unwrap();
        let h = shannon_entropy(&p, &cfg).map_err(|e| e.to_string())?;
        let z = sample_g0(&p, n, 1000 + i as u64).unwrap();
        let logs: Vec<f64> = z.iter().map(|&v| -p.ln_pdf(v)).collect();
        let mean = logs.iter().sum::<f64>() / n as f64;
        let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        worst_z = worst_z.max((h - mean).abs() / (var / n as f64).sqrt());

        let q = GammaParams::new(sigma, LOOKS).unwrap();
        let hq = shannon_entropy(&q, &cfg).map_err(|e| e.to_string())?;
        worst_gamma = worst_gamma.max((hq - gamma_entropy(sigma, LOOKS)).abs());
    }
    check(
        worst_z <= 3.0 && worst_gamma <= 1e-8,
        format!("max |quadrature - Monte Carlo| = {worst_z:.2} SE; max Gamma closed-form gap = {worst_gamma:.1e}"),
    )
}

fn limit_property() -> Outcome {
    let cfg = QuadratureConfig::default();
    let q = GammaParams::new(1.0, LOOKS).unwrap();
    let ds: Vec<f64> = [2.0, 5.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&k| hellinger_distance(&G0Params::new(-k, k, LOOKS).unwrap(), &q, &cfg))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let decreasing = ds.windows(2).all(|w| w[1] < w[0]);
    check(
        decreasing && ds[4] < 1e-3,
        format!(
            "D = {}",
            ds.iter()
                .map(|d| format!("{d:.3e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn mle_recovery() -> Outcome {
    let truth = G0Params::new(-2.717, 0.179, LOOKS).unwrap();
    let cfg = SolverConfig::default();
    let (mut converged, mut good, mut worst_residual) = (0, 0, 0.0f64);
    for seed in 0..100 {
        let z = sample_g0(&truth, 10_201, seed).unwrap();
        let fit = fit_g0_mle(&z, LOOKS, &cfg).map_err(|e| e.to_string())?;
        if !fit.converged {
            continue;
        }
        converged += 1;
        worst_residual = worst_residual.max(fit.residual_norm);
        let a = (fit.params.alpha() / truth.alpha() - 1.0).abs();
        let g = (fit.params.gamma() / truth.gamma() - 1.0).abs();
        if a <= 0.10 && g <= 0.15 {
            good += 1;
        }
    }
    check(
        good >= 90 && worst_residual <= 1e-8,
        format!("{good}/100 within tolerance ({converged} converged), max residual {worst_residual:.1e}"),
    )
}

fn scale_equivariance() -> Outcome {
    let truth = G0Params::new(-2.717, 0.179, LOOKS).unwrap();
    let cfg = SolverConfig::default();
    let (mut worst_g, mut worst_a) = (0.0f64, 0.0f64);
    for seed in 0..10 {
        let z = sample_g0(&truth, 10_201, 500 + seed).unwrap();
        let base = fit_g0_mle(&z, LOOKS, &cfg).map_err(|e| e.to_string())?;
        for c in [0.1, 10.0] {
            let scaled: Vec<f64> = z.iter().map(|v| c * v).collect();
            let fit = fit_g0_mle(&scaled, LOOKS, &cfg).map_err(|e| e.to_string())?;
            worst_g = worst_g.max((fit.params.gamma() / (c * base.params.gamma()) - 1.0).abs());
            worst_a = worst_a.max((fit.params.alpha() / base.params.alpha() - 1.0).abs());
        }
    }
    check(
        worst_g <= 1e-3 && worst_a < 1e-4,
        format!("max relative change: gamma/c {worst_g:.1e}, alpha {worst_a:.1e}"),
    )
}

fn phantom_pipeline() -> Outcome {
    let channels = default_scene(42).render().map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let mut detail = Vec::new();
    let mut ok = true;
    for ch in &channels {
        let maps = pool
            .install(|| extract_features(ch, &FeatureConfig::default()))
            .map_err(|e| e.to_string())?;
        let tile_mean = |x0: usize| {
            let (mut sum, mut n) = (0.0, 0);
            for y in 0..101 {
                for x in x0..x0 + 101 {
                    let c = *maps.complexity.get(x, y);
                    if c.is_finite() {
                        sum += c;
                        n += 1;
                    }
                }
            }
            sum / n as f64
        };
        let (sea, forest, urban) = (tile_mean(0), tile_mean(101), tile_mean(202));
        ok &= sea < forest && sea < urban;
        detail.push(format!(
            "{}: {sea:.4} / {forest:.4} / {urban:.4}",
            ch.polarization()
        ));
    }
    check(
        ok,
        format!("mean C sea / forest / urban; {}", detail.join("; ")),
    )
}

fn sha256(path: &Path) -> String {
    Sha256::digest(std::fs::read(path).unwrap())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn gsc(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gsc"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "gsc {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    gsc(&["simulate", "--seed", "7", "--out", &p("scene")])?;
    let mut digests = Vec::new();
    for threads in ["1", "4"] {
        let feat = p(&format!("feat{threads}"));
        gsc(&[
            "features",
            &p("scene/hh.hdr"),
            &p("scene/hv.hdr"),
            &p("scene/vv.hdr"),
            "--threads",
            threads,
            "--out",
            &feat,
        ])?;
        let ppm = p(&format!("gsc{threads}.ppm"));
        gsc(&[
            "render",
            &format!("{feat}/hh_complexity.hdr"),
            &format!("{feat}/hv_complexity.hdr"),
            &format!("{feat}/vv_complexity.hdr"),
            "--threads",
            threads,
            "--out",
            &ppm,
        ])?;
        let mut files: Vec<_> = std::fs::read_dir(&feat)
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .filter(|f| f.extension().is_some_and(|x| x == "raw" || x == "hdr"))
            .collect();
        files.sort();
        let mut set: Vec<(String, String)> = files
            .iter()
            .map(|f| {
                (
                    f.file_name().unwrap().to_string_lossy().into_owned(),
                    sha256(f),
                )
            })
            .collect();
        set.push(("ppm".into(), sha256(Path::new(&ppm))));
        digests.push(set);
    }
    let files = digests[0].len();
    check(
        digests[0] == digests[1] && files == 43,
        format!("{files} files compared between 1 and 4 threads"),
    )
}

fn distance_axioms() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut laws = Vec::new();
    for looks in [1.0, 4.0] {
        for alpha in [-1.5, -2.5, -4.0, -8.0, -20.0] {
            for gamma in [0.1, 0.5, 1.0, 3.0, 10.0] {
                laws.push(G0Params::new(alpha, gamma, looks).unwrap());
            }
        }
    }
    let (mut self_d, mut asym, mut in_range) = (0.0f64, 0.0f64, true);
    for (i, p) in laws.iter().enumerate() {
        let q = GammaParams::new(p.gamma() / (-p.alpha() - 1.0), p.looks()).unwrap();
        let neighbour = &laws[(i + 1) % laws.len()];
        let d = |a: &dyn LogDensity, b: &dyn LogDensity| {
            hellinger_between(a, b, a.scale_hint(), &cfg).map_err(|e| e.to_string())
        };
        self_d = self_d.max(d(p, p)?);
        for other in [&q as &dyn LogDensity, neighbour] {
            let (pq, qp) = (d(p, other)?, d(other, p)?);
            asym = asym.max((pq - qp).abs());
            in_range &= (0.0..=1.0).contains(&pq) && (0.0..=1.0).contains(&qp);
        }
    }
    check(
        self_d <= 1e-10 && asym <= 1e-9 && in_range,
        format!(
            "{} laws: max D(f,f) {self_d:.1e}, max asymmetry {asym:.1e}",
            laws.len()
        ),
    )
}

fn sampler_validity() -> Outcome {
    let cfg = QuadratureConfig::default();
    let n = 100_000;
    let crit = ks_critical_1pct(n);
    let mut detail = Vec::new();
    let mut ok = true;
    for (i, (alpha, gamma, looks)) in [(-11.87, 0.32, 4.0), (-2.717, 0.179, 4.0), (-1.5, 1.0, 1.0)]
        .into_iter()
        .enumerate()
    {
        let p = G0Params::new(alpha, gamma, looks).unwrap();
        let z = sample_g0(&p, n, 77 + i as u64).unwrap();
        let d = ks_statistic(&z, &p, &cfg).map_err(|e| e.to_string())?;
        ok &= d < crit;
        detail.push(format!("{d:.4}"));
    }
    check(
        ok,
        format!("KS = {} vs critical {crit:.4}", detail.join(", ")),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("product identity", product_identity),
        ("Hellinger reproduction", hellinger_reproduction),
        ("entropy oracles", entropy_oracles),
        ("Gamma limit", limit_property),
        ("MLE recovery", mle_recovery),
        ("scale equivariance", scale_equivariance),
        ("phantom pipeline", phantom_pipeline),
        ("determinism", determinism),
        ("distance axioms", distance_axioms),
        ("sampler validity", sampler_validity),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match &outcome {
            Ok(d) => println!("criterion {:>2} {name:<24} PASS  {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                println!("criterion {:>2} {name:<24} FAIL  {d} [{secs:.1}s]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
