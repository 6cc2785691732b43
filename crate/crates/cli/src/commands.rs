//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use fireray_core::cloud::{
    default_planes, normalize_cloud, parse_xyz_ascii, partition_view, write_xyz_ascii, ViewPlane,
};
use fireray_core::fireworks::{optimize_plane, MutationConfig, SearchSettings};
use fireray_core::objective::l_sparks;
use fireray_core::predictor::predict_kappa;
use fireray_core::raster::{encode_ppm, pixel_owners, render_view};
use fireray_core::scenes::{parse_grid, preset, sweep_grid, synth_room, PRESETS};
use fireray_core::{
    ColorMode, Error, ImageSize, Palette, PointCloud, PredictorConfig, PredictorWeights, RayParams,
    RngStream, SceneSpec, SearchTrace, UtilizationReport,
};

use crate::report::{fmt_sig6, to_canonical_string};
use crate::{
    InitWeightsArgs, InputArgs, KappaArgs, ModeArg, OptimizeArgs, PredictArgs, PredictorArgs,
    ProjectArgs, SweepArgs, SynthArgs, ViewArgs,
};

/// Exit code for bad flags, unreadable or malformed input.
pub const EXIT_USAGE: u8 = 2;
/// Exit code for data that violates a contract (missing labels, bad weights).
pub const EXIT_DATA: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::MissingLabel { .. } | Error::Domain(_) | Error::Config { .. } => EXIT_DATA,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn io_context(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::usage(format!("{}: {e}", path.display()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

struct Loaded {
    cloud: PointCloud,
    digest: String,
    scene: String,
}

fn preset_spec(name: &str) -> CliResult<SceneSpec> {
    preset(name).ok_or_else(|| {
        Failure::usage(format!(
            "unknown preset `{name}` (available: {})",
            PRESETS.join(", ")
        ))
    })
}

/// Reads and normalizes the input cloud. A preset is generated and passed
/// through its xyz text, so it behaves exactly like the file `synth` writes.
fn load_input(args: &InputArgs) -> CliResult<Loaded> {
    let (text, default_scene) = match (&args.source.input, &args.source.preset) {
        (Some(path), _) => {
            let bytes = fs::read(path).map_err(io_context(path))?;
            let text = String::from_utf8(bytes)
                .map_err(|_| Failure::usage(format!("{}: not UTF-8 text", path.display())))?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scene".into());
            (text, stem)
        }
        (None, Some(name)) => {
            let raw = synth_room(&preset_spec(name)?)?;
            (write_xyz_ascii(&raw), name.clone())
        }
        (None, None) => return Err(Failure::usage("one of --input or --preset is required")),
    };
    let raw = parse_xyz_ascii(&text).map_err(|e| match &args.source.input {
        Some(path) => Failure::usage(format!("{}: {e}", path.display())),
        None => e.into(),
    })?;
    Ok(Loaded {
        cloud: normalize_cloud(&raw)?,
        digest: sha256_hex(text.as_bytes()),
        scene: args.scene.clone().unwrap_or(default_scene),
    })
}

fn thread_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::usage(format!("cannot start {threads} threads: {e}")))
}

fn check_finite_nonneg(name: &str, v: f64) -> CliResult {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "--{name} must be finite and >= 0, got {v}"
        )))
    }
}

struct View {
    planes: Vec<ViewPlane>,
    size: ImageSize,
    tau: f64,
    lambda: f64,
    bounds: (f64, f64),
    mode: ModeArg,
    out: PathBuf,
}

impl View {
    fn from_args(a: &ViewArgs) -> CliResult<Self> {
        check_finite_nonneg("tau", a.tau)?;
        check_finite_nonneg("lambda", a.lambda)?;
        MutationConfig::new(a.kappa_min, a.kappa_max, 0)?;
        Ok(View {
            planes: default_planes(a.planes)?,
            size: ImageSize::new(a.height, a.width)?,
            tau: a.tau,
            lambda: a.lambda,
            bounds: (a.kappa_min, a.kappa_max),
            mode: a.mode,
            out: a.out.clone(),
        })
    }
}

fn predictor_config(a: &PredictorArgs, bounds: (f64, f64)) -> CliResult<PredictorConfig> {
    if !(0.0..=1.0).contains(&a.omega) {
        return Err(Failure::usage(format!(
            "--omega must be in [0, 1], got {}",
            a.omega
        )));
    }
    if !(a.radius.is_finite() && a.radius > 0.0) {
        return Err(Failure::usage(format!(
            "--radius must be > 0, got {}",
            a.radius
        )));
    }
    if a.centers == 0 {
        return Err(Failure::usage("--centers must be at least 1"));
    }
    Ok(PredictorConfig {
        centers: a.centers,
        radius: a.radius,
        omega: a.omega,
        kappa_min: bounds.0,
        kappa_max: bounds.1,
    })
}

/// Ray per plane: the global `--kh/--kw` unless overridden by `--kappa ID:KH,KW`.
fn plane_rays(
    k: &KappaArgs,
    planes: &[ViewPlane],
    bounds: (f64, f64),
) -> CliResult<Vec<RayParams>> {
    let mut pairs: Vec<(f64, f64)> = vec![(k.kh, k.kw); planes.len()];
    for spec in &k.per_plane {
        let bad = || Failure::usage(format!("bad --kappa `{spec}`, expected ID:KH,KW"));
        let (id, rest) = spec.split_once(':').ok_or_else(bad)?;
        let (kh, kw) = rest.split_once(',').ok_or_else(bad)?;
        let id: usize = id.trim().parse().map_err(|_| bad())?;
        let kh: f64 = kh.trim().parse().map_err(|_| bad())?;
        let kw: f64 = kw.trim().parse().map_err(|_| bad())?;
        let slot = planes.iter().position(|p| p.id == id).ok_or_else(|| {
            Failure::usage(format!("--kappa names plane {id}, which is not rendered"))
        })?;
        pairs[slot] = (kh, kw);
    }
    pairs
        .into_iter()
        .map(|(kh, kw)| Ok(RayParams::new(kh, kw, bounds.0, bounds.1)?))
        .collect()
}

/// Renders one plane, writes the requested images and scores the coverage.
fn render_plane(
    loaded: &Loaded,
    view: &View,
    plane: &ViewPlane,
    ray: &RayParams,
    palette: &Palette,
) -> CliResult<UtilizationReport> {
    let cloud = &loaded.cloud;
    let subset = partition_view(cloud, plane);
    let modes: &[ColorMode] = match view.mode {
        ModeArg::Real => &[ColorMode::Real],
        ModeArg::Semantic => &[ColorMode::Semantic],
        ModeArg::Both => &[ColorMode::Real, ColorMode::Semantic],
    };
    for &mode in modes {
        let img = render_view(cloud, &subset, plane, ray, view.size, mode, palette)?;
        let path = view
            .out
            .join(format!("{}_{}_{}.ppm", loaded.scene, plane.id, mode));
        fs::write(&path, encode_ppm(&img)).map_err(io_context(&path))?;
    }
    // Palette colors are never black, so the semantic image is non-black
    // exactly where some point owns the pixel.
    let owners = pixel_owners(cloud, &subset, plane, ray, view.size)?;
    let covered = owners.iter().filter(|o| o.is_some()).count();
    let fraction = covered as f64 / view.size.pixel_count() as f64;
    Ok(UtilizationReport::new(plane.id, fraction, view.tau, *ray)?)
}

fn settings_json(view: &View, predictor: &PredictorArgs, seed: u64) -> Value {
    json!({
        "H": view.size.height,
        "W": view.size.width,
        "tau": view.tau,
        "lambda": view.lambda,
        "omega": predictor.omega,
        "S": predictor.centers,
        "r": predictor.radius,
        "bounds": [view.bounds.0, view.bounds.1],
        "seed": seed,
        "M": view.planes.len(),
    })
}

fn planes_json(reports: &[UtilizationReport]) -> Value {
    reports
        .iter()
        .map(|r| {
            json!({
                "id": r.plane_id,
                "kappa_h": r.kappa.kappa_h(),
                "kappa_w": r.kappa.kappa_w(),
                "semantic_fraction": r.semantic_fraction,
                "u_space": r.u_space,
                "reg_value": r.reg_value,
            })
        })
        .collect()
}

fn write_report(
    loaded: &Loaded,
    view: &View,
    settings: Value,
    reports: &[UtilizationReport],
    extra: Option<(&str, Value)>,
) -> CliResult {
    let mut doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "input_digest": loaded.digest,
        "settings": settings,
        "planes": planes_json(reports),
        "l_sparks": l_sparks(reports),
    });
    if let Some((key, value)) = extra {
        doc[key] = value;
    }
    let path = view.out.join("report.json");
    fs::write(&path, to_canonical_string(doc)).map_err(io_context(&path))
}

fn prepare_out(view: &View) -> CliResult {
    fs::create_dir_all(&view.out).map_err(io_context(&view.out))
}

pub fn project(a: &ProjectArgs) -> CliResult {
    let view = View::from_args(&a.view)?;
    predictor_config(&a.predictor, view.bounds)?;
    let rays = plane_rays(&a.kappa, &view.planes, view.bounds)?;
    let loaded = load_input(&a.input)?;
    prepare_out(&view)?;
    let palette = Palette::default();
    let reports: Vec<UtilizationReport> = thread_pool(a.view.threads)?.install(|| {
        view.planes
            .par_iter()
            .zip(&rays)
            .map(|(plane, ray)| render_plane(&loaded, &view, plane, ray, &palette))
            .collect::<CliResult<_>>()
    })?;
    write_report(
        &loaded,
        &view,
        settings_json(&view, &a.predictor, a.seed),
        &reports,
        None,
    )
}

pub fn optimize(a: &OptimizeArgs) -> CliResult {
    let view = View::from_args(&a.view)?;
    predictor_config(&a.predictor, view.bounds)?;
    if a.pop == 0 {
        return Err(Failure::usage("--pop must be at least 1"));
    }
    let inits = plane_rays(&a.kappa, &view.planes, view.bounds)?;
    let loaded = load_input(&a.input)?;
    prepare_out(&view)?;
    let palette = Palette::default();
    let settings = SearchSettings {
        size: view.size,
        tau: view.tau,
        population: a.pop,
        iterations: a.iters,
    };
    let cfg = MutationConfig::new(view.bounds.0, view.bounds.1, a.seed)?;
    let results: Vec<(UtilizationReport, SearchTrace)> =
        thread_pool(a.view.threads)?.install(|| {
            view.planes
                .par_iter()
                .zip(&inits)
                .map(|(plane, init)| {
                    let subset = partition_view(&loaded.cloud, plane);
                    let (best, trace) = optimize_plane(
                        &loaded.cloud,
                        &subset,
                        plane,
                        &settings,
                        &cfg,
                        init,
                        &palette,
                    )?;
                    let report = render_plane(&loaded, &view, plane, &best, &palette)?;
                    Ok((report, trace))
                })
                .collect::<CliResult<_>>()
        })?;
    let search = json!({
        "population": a.pop,
        "iterations": a.iters,
        "planes": results.iter().map(|(r, t)| json!({
            "id": r.plane_id,
            "best_scores": t.best_scores(),
            "evaluations": t.evaluations(),
            "empty_subset": t.empty_subset,
        })).collect::<Vec<_>>(),
    });
    let reports: Vec<UtilizationReport> = results.into_iter().map(|(r, _)| r).collect();
    write_report(
        &loaded,
        &view,
        settings_json(&view, &a.predictor, a.seed),
        &reports,
        Some(("search", search)),
    )
}

pub fn predict(a: &PredictArgs) -> CliResult {
    let view = View::from_args(&a.view)?;
    let cfg = predictor_config(&a.predictor, view.bounds)?;
    let weights = PredictorWeights::load(&a.weights).map_err(|e| match e {
        Error::Config { .. } => Failure {
            code: EXIT_DATA,
            message: format!("{}: {e}", a.weights.display()),
        },
        other => Failure::usage(format!("{}: {other}", a.weights.display())),
    })?;
    let loaded = load_input(&a.input)?;
    prepare_out(&view)?;
    let palette = Palette::default();
    let reports: Vec<UtilizationReport> = thread_pool(a.view.threads)?.install(|| {
        view.planes
            .par_iter()
            .map(|plane| {
                let mut stream = a
                    .mutate
                    .then(|| RngStream::derived(a.seed, &[plane.id as u64]));
                let ray = predict_kappa(&loaded.cloud, plane, &weights, &cfg, stream.as_mut())?;
                render_plane(&loaded, &view, plane, &ray, &palette)
            })
            .collect::<CliResult<_>>()
    })?;
    let extra = json!({ "mutate": a.mutate });
    write_report(
        &loaded,
        &view,
        settings_json(&view, &a.predictor, a.seed),
        &reports,
        Some(("prediction", extra)),
    )
}

fn parse_plane(s: &str) -> CliResult<ViewPlane> {
    let all = default_planes(6)?;
    if s.starts_with(['+', '-']) {
        let parsed = ViewPlane::parse_side(0, s)?;
        let found = all
            .into_iter()
            .find(|p| p.depth_axis == parsed.depth_axis && p.side == parsed.side)
            .expect("every signed axis is a default plane");
        return Ok(found);
    }
    let n: usize = s
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("bad --plane `{s}`, expected +X or 1..=6")))?;
    all.into_iter()
        .find(|p| p.id == n)
        .ok_or_else(|| Failure::usage(format!("--plane {n} is outside 1..=6")))
}

pub fn sweep(a: &SweepArgs) -> CliResult {
    check_finite_nonneg("tau", a.tau)?;
    MutationConfig::new(a.kappa_min, a.kappa_max, 0)?;
    let size = ImageSize::new(a.height, a.width)?;
    let plane = parse_plane(&a.plane)?;
    let hs = parse_grid(&a.grid)?;
    let ws = match &a.grid_w {
        Some(g) => parse_grid(g)?,
        None => hs.clone(),
    };
    let loaded = load_input(&a.input)?;
    let subset = partition_view(&loaded.cloud, &plane);
    let rows = thread_pool(a.threads)?.install(|| {
        sweep_grid(
            &loaded.cloud,
            &subset,
            &plane,
            &hs,
            &ws,
            (a.kappa_min, a.kappa_max),
            size,
            a.tau,
            &Palette::default(),
        )
    })?;
    let mut csv = String::from("kappa_h,kappa_w,fraction,u_space,reg,direction\n");
    for r in &rows {
        let reg = r.reg_value.map(fmt_sig6).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_sig6(r.kappa_h),
            fmt_sig6(r.kappa_w),
            fmt_sig6(r.semantic_fraction),
            fmt_sig6(r.u_space),
            reg,
            r.direction
        );
    }
    match &a.out {
        Some(path) => fs::write(path, csv).map_err(io_context(path)),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

pub fn synth(a: &SynthArgs) -> CliResult {
    let spec = match (&a.preset, &a.spec) {
        (Some(name), _) => preset_spec(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(io_context(path))?;
            SceneSpec::from_json(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        (None, None) => return Err(Failure::usage("one of --preset or --spec is required")),
    };
    let cloud = synth_room(&spec)?;
    fs::write(&a.out, write_xyz_ascii(&cloud)).map_err(io_context(&a.out))?;
    if let Some(path) = &a.dump_spec {
        fs::write(path, spec.to_json() + "\n").map_err(io_context(path))?;
    }
    Ok(())
}

pub fn init_weights(a: &InitWeightsArgs) -> CliResult {
    let weights = match a.seed {
        Some(seed) => PredictorWeights::random(seed, 1.0),
        None => PredictorWeights::zeros(),
    };
    fs::write(&a.out, weights.to_json() + "\n").map_err(io_context(&a.out))
}
