use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gsc_core::features::window_features;
use gsc_core::raster::{self, payload_path, read_raster, write_raster};
use gsc_core::simulate::Rect;
use gsc_core::{
    default_scene, extract_features, BandStack, DType, Fallback, FeatureKind, Grid,
    IntensityChannel, Polarization, Scene,
};

use crate::config::{RunConfig, DEFAULT_LOOKS};
use crate::manifest::Manifest;
use crate::CliError;

pub fn parse_rect(s: &str) -> Result<Rect, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("expected `x,y,width,height`: {e}"))?;
    match parts[..] {
        [x, y, w, h] => Ok(Rect::new(x, y, w, h)),
        _ => Err(format!(
            "expected 4 comma-separated values, got {}",
            parts.len()
        )),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))
}

/// Writes one raster pair and returns both paths.
fn emit(stack: &BandStack, looks: f64, header: PathBuf) -> Result<Vec<PathBuf>, CliError> {
    let payload = payload_path(&header);
    write_raster(stack, looks, DType::Float64, &header, &payload)?;
    Ok(vec![header, payload])
}

fn with_payloads(headers: &[PathBuf]) -> Vec<PathBuf> {
    headers
        .iter()
        .flat_map(|h| [h.clone(), payload_path(h)])
        .collect()
}

pub fn simulate(cfg: &RunConfig, phantom: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let mut scene = match phantom {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<Scene>(&text)
                .map_err(|e| CliError::data(format!("invalid scene {}: {e}", path.display())))?
        }
        None => default_scene(cfg.seed()),
    };
    if let Some(seed) = cfg.seed {
        scene.seed = seed;
    }
    if let Some(looks) = cfg.looks {
        scene.looks = looks;
    }
    let channels = cfg.pool()?.install(|| scene.render())?;
    create_dir(out)?;
    let mut outputs = Vec::new();
    for ch in &channels {
        let name = ch.polarization().as_str();
        let stack = BandStack::single(name, ch.grid().clone())?;
        outputs.extend(emit(
            &stack,
            ch.looks(),
            out.join(format!("{}.hdr", name.to_lowercase())),
        )?);
    }
    let mut manifest = Manifest::new("simulate", cfg, scene.looks);
    manifest.seed = Some(scene.seed);
    manifest.scene = Some(serde_json::to_value(&scene).expect("scene serializes"));
    let inputs: Vec<PathBuf> = phantom.map(Path::to_path_buf).into_iter().collect();
    manifest
        .inputs(&inputs)?
        .write(&outputs, &out.join("manifest.json"))
}

fn channel(
    grid: Grid<f64>,
    name: &str,
    index: usize,
    looks: f64,
) -> Result<IntensityChannel, CliError> {
    let polarization = name
        .parse::<Polarization>()
        .unwrap_or(Polarization::ALL[index % 3]);
    IntensityChannel::new(grid, polarization, looks)
        .map_err(|e| CliError::data(format!("band {name}: {e}")))
}

pub fn summarize(
    cfg: &RunConfig,
    input: &Path,
    rect: Option<Rect>,
    band: Option<usize>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (header, stack) = read_raster(input, &payload_path(input))?;
    let looks = cfg.looks_or(header.looks);
    let rect = rect.unwrap_or(Rect::new(0, 0, header.width, header.height));
    if rect.area() == 0 {
        return Err(CliError::data("sample rectangle is empty"));
    }
    let bands: Vec<usize> = match band {
        Some(b) if b < header.bands => vec![b],
        Some(b) => {
            return Err(CliError::usage(format!(
                "band {b} out of range for {} bands",
                header.bands
            )))
        }
        None => (0..header.bands).collect(),
    };
    let fcfg = cfg.features();
    let mut rows = Vec::new();
    let mut failure = None;
    for &b in &bands {
        let name = &header.band_names[b];
        let grid = stack.bands()[b]
            .crop(rect.x, rect.y, rect.width, rect.height)
            .map_err(|e| CliError::data(format!("rectangle: {e}")))?;
        let ch = channel(grid, name, b, looks)?;
        let sample = ch.grid().as_slice();
        if sample.len() < cfg.solver.min_sample_size {
            return Err(CliError::data(format!(
                "sample of {} pixels is smaller than the minimum {}",
                sample.len(),
                cfg.solver.min_sample_size
            )));
        }
        let w = window_features(sample, looks, &fcfg);
        if w.status == Fallback::Failed && failure.is_none() {
            failure = Some(if w.alpha.is_nan() && w.fit.is_none() {
                CliError::data(format!("band {name}: sample cannot be fitted (degenerate)"))
            } else {
                CliError::numerical(format!(
                    "band {name}: estimation failed (fallback = failed)"
                ))
            });
        }
        rows.push((name.clone(), sample.len(), w));
    }

    let mut text = String::new();
    let cell = |f: &dyn Fn(&gsc_core::features::WindowFeatures) -> String| {
        rows.iter()
            .map(|(_, _, w)| format!("{:>20}", f(w)))
            .collect::<String>()
    };
    let _ = writeln!(
        text,
        "{:<16}{}",
        "",
        rows.iter()
            .map(|(n, _, _)| format!("{n:>20}"))
            .collect::<String>()
    );
    let _ = writeln!(
        text,
        "{:<16}{}",
        "sigma",
        cell(&|w| format!("{:.4}", w.mean))
    );
    let _ = writeln!(
        text,
        "{:<16}{}",
        "(alpha, gamma)",
        cell(&|w| format!("({:.3}, {:.3})", w.alpha, w.gamma))
    );
    let _ = writeln!(
        text,
        "{:<16}{}",
        "H",
        cell(&|w| format!("{:.3}", w.entropy))
    );
    let _ = writeln!(
        text,
        "{:<16}{}",
        "D",
        cell(&|w| format!("{:.4}", w.distance))
    );
    let _ = writeln!(
        text,
        "{:<16}{}",
        "C",
        cell(&|w| format!("{:.4}", w.complexity))
    );
    let _ = writeln!(
        text,
        "{:<16}{}",
        "fallback",
        cell(&|w| w.status.as_str().to_string())
    );
    text.push('\n');
    let _ = writeln!(text, "input = {}", input.display());
    let _ = writeln!(
        text,
        "rect = {},{},{},{}",
        rect.x, rect.y, rect.width, rect.height
    );
    let _ = writeln!(text, "looks = {looks}");
    let _ = writeln!(
        text,
        "entropy-convention = {}",
        match cfg.entropy {
            gsc_core::EntropyConvention::Differential => "differential",
            gsc_core::EntropyConvention::Negentropy => "negentropy",
        }
    );
    for (name, n, w) in &rows {
        let _ = writeln!(text, "{name}.n = {n}");
        let _ = writeln!(text, "{name}.mean = {}", w.mean);
        let _ = writeln!(text, "{name}.alpha = {}", w.alpha);
        let _ = writeln!(text, "{name}.gamma = {}", w.gamma);
        let _ = writeln!(text, "{name}.entropy = {}", w.entropy);
        let _ = writeln!(text, "{name}.distance = {}", w.distance);
        let _ = writeln!(text, "{name}.complexity = {}", w.complexity);
        let _ = writeln!(text, "{name}.fallback = {}", w.status.as_str());
        if let Some(fit) = &w.fit {
            let _ = writeln!(text, "{name}.converged = {}", fit.converged);
            let _ = writeln!(text, "{name}.iterations = {}", fit.iterations);
            let _ = writeln!(text, "{name}.residual-norm = {:e}", fit.residual_norm);
        }
    }
    print!("{text}");

    if let Some(out) = out {
        fs::write(out, &text)?;
        let manifest_path = PathBuf::from(format!("{}.manifest.json", out.display()));
        Manifest::new("summarize", cfg, looks)
            .inputs(&with_payloads(&[input.to_path_buf()]))?
            .write(&[out.to_path_buf()], &manifest_path)?;
    }
    failure.map_or(Ok(()), Err)
}

pub fn features(cfg: &RunConfig, inputs: &[PathBuf], out: &Path) -> Result<(), CliError> {
    let pool = cfg.pool()?;
    let fcfg = cfg.features();
    let mut jobs = Vec::new();
    for input in inputs {
        let (header, stack) = read_raster(input, &payload_path(input))?;
        let looks = cfg.looks_or(header.looks);
        for (b, (name, grid)) in header.band_names.iter().zip(stack.bands()).enumerate() {
            if jobs
                .iter()
                .any(|(n, _): &(String, IntensityChannel)| n == name)
            {
                return Err(CliError::data(format!(
                    "band name `{name}` appears in more than one input"
                )));
            }
            jobs.push((name.clone(), channel(grid.clone(), name, b, looks)?));
        }
    }
    create_dir(out)?;
    let mut outputs = Vec::new();
    let mut used_looks = DEFAULT_LOOKS;
    for (name, ch) in &jobs {
        used_looks = ch.looks();
        let maps = pool.install(|| extract_features(ch, &fcfg))?;
        let stem = name.to_lowercase();
        for kind in FeatureKind::ALL {
            let stack = BandStack::single(name, maps.grid(kind).clone())?;
            outputs.extend(emit(
                &stack,
                ch.looks(),
                out.join(format!("{stem}_{}.hdr", kind.name())),
            )?);
        }
        let status = maps.status.map(|s| f64::from(s.code()));
        let stack = BandStack::single(name, status)?;
        outputs.extend(emit(
            &stack,
            ch.looks(),
            out.join(format!("{stem}_status.hdr")),
        )?);
        let failed = maps
            .status
            .as_slice()
            .iter()
            .filter(|s| **s == Fallback::Failed)
            .count();
        if failed > 0 {
            eprintln!("gsc: band {name}: {failed} windows failed to fit (stored as NaN)");
        }
    }
    Manifest::new("features", cfg, used_looks)
        .inputs(&with_payloads(inputs))?
        .write(&outputs, &out.join("manifest.json"))
}

pub fn render(
    cfg: &RunConfig,
    inputs: &[PathBuf],
    band: usize,
    out: &Path,
) -> Result<(), CliError> {
    let mut planes = Vec::with_capacity(3);
    let mut looks = DEFAULT_LOOKS;
    for input in inputs {
        let (header, stack) = read_raster(input, &payload_path(input))?;
        looks = header.looks;
        let grid = stack.band(band).ok_or_else(|| {
            CliError::usage(format!("{}: band {band} out of range", input.display()))
        })?;
        planes.push(
            raster::equalize(grid)
                .map_err(|e| CliError::data(format!("{}: {e}", input.display())))?,
        );
    }
    let img = raster::compose_rgb(&planes[0], &planes[1], &planes[2])?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    raster::write_ppm(&img, out)?;
    let manifest_path = PathBuf::from(format!("{}.manifest.json", out.display()));
    Manifest::new("render", cfg, looks)
        .inputs(&with_payloads(inputs))?
        .write(&[out.to_path_buf()], &manifest_path)
}
