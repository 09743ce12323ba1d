//! `ic-mapper`: generate scenes, run the online mapper, evaluate, sweep the
//! smoothing parameter and render maps.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;

use ic_mapper::curvefit::{argmin, parse_grid, rows_to_tsv, sweep_smoothing, SmoothingFitParams, SweepFixture, SweepRow};
use ic_mapper::instance::MapClass;
use ic_mapper::mapstore::{load_map, save_map, GlobalMap};
use ic_mapper::metrics::{ApMatching, EvalConfig, LARGE_RANGE_THRESHOLDS, SMALL_RANGE_THRESHOLDS};
use ic_mapper::pipeline::{evaluate, run_scene, sweep_scene, EvalInput, PipelineConfig, Trace};
use ic_mapper::render::{render_maps, render_sweep_chart, Layer, LayerStyle};
use ic_mapper::synth::{build_scene, read_scene, write_scene, Curvature, PerceptionRange, Scene};

use config::{load_pipeline_config, load_scene_config, UsageError};

#[derive(Parser)]
#[command(name = "ic-mapper", version, about = "Online vectorized HD-map construction on synthetic scenes")]
struct Cli {
    /// Worker threads for commands that handle several scenes.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scene files.
    Synth(SynthArgs),
    /// Run the mapping pipeline over one scene.
    Run(RunArgs),
    /// Score maps and traces against scene ground truth.
    Eval(EvalArgs),
    /// Sweep the smoothing parameter s.
    #[command(name = "sweep-s")]
    SweepS(SweepArgs),
    /// Draw map files as SVG.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CurvatureArg {
    Straight,
    Arc,
    SCurve,
}

impl From<CurvatureArg> for Curvature {
    fn from(c: CurvatureArg) -> Self {
        match c {
            CurvatureArg::Straight => Curvature::Straight,
            CurvatureArg::Arc => Curvature::Arc,
            CurvatureArg::SCurve => Curvature::SCurve,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Scene config (TOML, keys of the scene config).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Perception range as LxW, e.g. 100x50 or 60x30.
    #[arg(long)]
    range: Option<PerceptionRange>,
    #[arg(long, value_enum)]
    curvature: Option<CurvatureArg>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    lanes: Option<usize>,
    /// Number of scenes, seeds counting up from --seed. With more than one
    /// scene --out names a directory.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Default)]
struct PipelineArgs {
    /// Pipeline config (TOML, flat keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Affinity threshold.
    #[arg(long)]
    theta: Option<f64>,
    /// Distance scale of the geometric affinity, meters.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    w_geo: Option<f64>,
    #[arg(long)]
    w_feat: Option<f64>,
    /// Frames an unmatched track survives.
    #[arg(long)]
    max_age: Option<u32>,
    /// History points sampled per instance.
    #[arg(long)]
    n_sample: Option<usize>,
    /// Patch expansion for history sampling, meters [default: 20].
    #[arg(long)]
    expand: Option<f64>,
    /// Smoothing parameter of the polyline fit.
    #[arg(long)]
    s: Option<f64>,
    /// Skip blending detections with sampled history.
    #[arg(long)]
    no_fusion: bool,
}

impl PipelineArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_pipeline_config(path)?,
            None => PipelineConfig::default(),
        };
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.theta, self.theta);
        set(&mut cfg.tau, self.tau);
        set(&mut cfg.w_geo, self.w_geo);
        set(&mut cfg.w_feat, self.w_feat);
        set(&mut cfg.expand, self.expand);
        set(&mut cfg.s, self.s);
        if let Some(v) = self.max_age {
            cfg.max_age = v;
        }
        if let Some(v) = self.n_sample {
            cfg.n_sample = v;
        }
        if self.no_fusion {
            cfg.fusion = false;
        }
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    scene: PathBuf,
    /// Output map file.
    #[arg(long)]
    map: PathBuf,
    /// Output per-frame trace file.
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatchingArg {
    Greedy,
    Hungarian,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth scene files.
    #[arg(long = "scene", required = true)]
    scenes: Vec<PathBuf>,
    /// Predicted maps, one per scene, in the same order.
    #[arg(long = "map")]
    maps: Vec<PathBuf>,
    /// Run traces, one per scene, in the same order.
    #[arg(long = "trace")]
    traces: Vec<PathBuf>,
    /// Comma-separated AP thresholds in meters; defaults follow the scene range.
    #[arg(long)]
    thresholds: Option<String>,
    /// Require tracking metrics (needs --trace).
    #[arg(long)]
    mot: bool,
    /// Gate for MOT correspondences, meters.
    #[arg(long, default_value_t = 1.5)]
    mot_threshold: f64,
    #[arg(long, value_enum, default_value = "greedy")]
    ap_matching: MatchingArg,
    /// Write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenes to sweep; without any, the built-in noisy sine fixture is used.
    scenes: Vec<PathBuf>,
    /// Grid of s values as start:stop:step.
    #[arg(long, default_value = "0:2:0.1")]
    grid: String,
    /// Fixture noise, meters.
    #[arg(long, default_value_t = 0.3)]
    sigma: f64,
    /// Fixture repetitions.
    #[arg(long, default_value_t = 50)]
    fixture_seeds: usize,
    /// First fixture seed.
    #[arg(long, default_value_t = 1000)]
    seed: u64,
    #[arg(long)]
    out_tsv: PathBuf,
    #[arg(long)]
    out_svg: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct RenderArgs {
    /// Map files to draw, one layer each.
    maps: Vec<PathBuf>,
    /// Ground truth overlay: a scene file or a map file.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn init_logging() {
    const LEVELS: [&str; 4] = ["error", "warn", "info", "debug"];
    let requested = std::env::var("IC_MAPPER_LOG").ok();
    let level = match requested.as_deref() {
        Some(l) if LEVELS.contains(&l) => l,
        _ => "warn",
    };
    env_logger::Builder::new().parse_filters(level).format_timestamp(None).target(env_logger::Target::Stderr).init();
    if let Some(bad) = requested.filter(|l| !LEVELS.contains(&l.as_str())) {
        warn!("IC_MAPPER_LOG={bad} is not one of {}; using warn", LEVELS.join(", "));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::SweepS(a) => cmd_sweep(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("run `ic-mapper --help` for usage");
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => load_scene_config(path)?,
        None => Default::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(r) = a.range {
        cfg.range = r;
    }
    if let Some(c) = a.curvature {
        cfg.curvature = c.into();
    }
    if let Some(f) = a.frames {
        cfg.frames = f;
    }
    if let Some(l) = a.lanes {
        cfg.lanes = l;
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    if a.count == 0 {
        bail!(UsageError("--count must be at least 1".into()));
    }
    if a.count == 1 {
        let scene = build_scene(&cfg)?;
        write_scene(&scene, &a.out)?;
        info!("wrote {} ({} frames)", a.out.display(), scene.frames.len());
        return Ok(());
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    (0..a.count as u64).into_par_iter().try_for_each(|k| -> Result<()> {
        let mut c = cfg;
        c.seed = cfg.seed + k;
        let scene = build_scene(&c)?;
        let path = a.out.join(format!("{}.json", scene.scene_id));
        write_scene(&scene, &path)?;
        info!("wrote {}", path.display());
        Ok(())
    })
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = a.pipeline.resolve()?;
    let scene = read_scene(&a.scene)?;
    let out = run_scene(&scene, &cfg)?;
    save_map(&out.map, &a.map)?;
    write(&a.trace, &out.trace.to_json())
}

fn parse_thresholds(spec: &str) -> Result<Vec<f64>> {
    let values: Result<Vec<f64>, _> = spec.split(',').map(|v| v.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if !v.is_empty() && v.iter().all(|t| *t > 0.0 && t.is_finite()) => Ok(v),
        _ => Err(UsageError(format!("thresholds must be positive numbers separated by commas, got `{spec}`")).into()),
    }
}

fn paired<T>(what: &str, items: Vec<T>, scenes: usize) -> Result<Vec<Option<T>>> {
    if items.is_empty() {
        return Ok((0..scenes).map(|_| None).collect());
    }
    if items.len() != scenes {
        bail!(UsageError(format!("got {} --{what} files for {scenes} scenes", items.len())));
    }
    Ok(items.into_iter().map(Some).collect())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    if a.mot && a.traces.is_empty() {
        bail!(UsageError("--mot needs a trace file per scene (--trace)".into()));
    }
    if a.maps.is_empty() && a.traces.is_empty() {
        bail!(UsageError("nothing to evaluate: pass --map and/or --trace".into()));
    }
    let n = a.scenes.len();
    let maps = paired("map", a.maps, n)?;
    let traces = paired("trace", a.traces, n)?;
    let thresholds = a.thresholds.as_deref().map(parse_thresholds).transpose()?;

    type Loaded = (Scene, Option<GlobalMap>, Option<Trace>);
    let loaded: Vec<Loaded> = a
        .scenes
        .par_iter()
        .zip(maps.par_iter())
        .zip(traces.par_iter())
        .map(|((scene, map), trace)| -> Result<Loaded> {
            let scene = read_scene(scene).with_context(|| format!("reading {}", scene.display()))?;
            let map = map.as_ref().map(|p| load_map(p).with_context(|| format!("reading {}", p.display()))).transpose()?;
            let trace = trace
                .as_ref()
                .map(|p| {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    Trace::from_json(&text).map_err(|e| anyhow!("{}: {e}", p.display()))
                })
                .transpose()?;
            Ok((scene, map, trace))
        })
        .collect::<Result<_>>()?;

    let thresholds = thresholds.unwrap_or_else(|| {
        if loaded.iter().all(|(s, _, _)| s.range == PerceptionRange::SMALL) {
            SMALL_RANGE_THRESHOLDS.to_vec()
        } else {
            LARGE_RANGE_THRESHOLDS.to_vec()
        }
    });
    let config = EvalConfig {
        thresholds,
        mot_threshold: a.mot_threshold,
        ap_matching: match a.ap_matching {
            MatchingArg::Greedy => ApMatching::Greedy,
            MatchingArg::Hungarian => ApMatching::Hungarian,
        },
        ..EvalConfig::default()
    };
    let inputs: Vec<EvalInput<'_>> =
        loaded.iter().map(|(scene, map, trace)| EvalInput { scene, map: map.as_ref(), trace: trace.as_ref() }).collect();
    let report = evaluate(&inputs, &config)?;
    print!("{}", report.table());
    if let Some(out) = &a.out {
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        write(out, &json)?;
    }
    Ok(())
}

/// Mean per class over the scenes that report that class.
fn average_rows(per_scene: &[Vec<SweepRow>]) -> Vec<SweepRow> {
    let Some(first) = per_scene.first() else { return Vec::new() };
    (0..first.len())
        .map(|k| {
            let mut acc: BTreeMap<MapClass, (f64, usize)> = BTreeMap::new();
            for rows in per_scene {
                for (c, e) in &rows[k].error {
                    let slot = acc.entry(*c).or_default();
                    slot.0 += e;
                    slot.1 += 1;
                }
            }
            SweepRow { s: first[k].s, error: acc.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect() }
        })
        .collect()
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let grid = parse_grid(&a.grid)
        .ok_or_else(|| UsageError(format!("grid must be start:stop:step with step > 0 and start <= stop, got `{}`", a.grid)))?;
    let cfg = a.pipeline.resolve()?;
    let rows = if a.scenes.is_empty() {
        if a.fixture_seeds == 0 || !(a.sigma >= 0.0) {
            bail!(UsageError("--fixture-seeds must be positive and --sigma non-negative".into()));
        }
        let fixture = SweepFixture::noisy_sine(a.sigma, a.fixture_seeds, a.seed);
        let params = SmoothingFitParams { s: cfg.s, ..cfg.fit() };
        sweep_smoothing(&fixture.cases, &grid, &params)
    } else {
        let per_scene: Vec<Vec<SweepRow>> = a
            .scenes
            .par_iter()
            .map(|p| -> Result<Vec<SweepRow>> {
                let scene = read_scene(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(sweep_scene(&scene, &grid, &cfg, EvalConfig::default().densify)?)
            })
            .collect::<Result<_>>()?;
        average_rows(&per_scene)
    };
    write(&a.out_tsv, &rows_to_tsv(&rows))?;
    if let Some(svg) = &a.out_svg {
        write(svg, &render_sweep_chart(&rows))?;
    }
    if let Some(best) = argmin(&rows) {
        println!("argmin s = {} (mean CD {:.4} m)", best.s, best.mean_error());
    }
    Ok(())
}

/// A ground-truth file may be either a map or a scene.
fn load_gt(path: &Path) -> Result<GlobalMap> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match GlobalMap::from_json(&text) {
        Ok(map) => Ok(map),
        Err(map_err) => Scene::from_json(&text)
            .map(|s| s.gt)
            .map_err(|scene_err| anyhow!("{}: not a map ({map_err}) nor a scene ({scene_err})", path.display())),
    }
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    let gt = a.gt.as_deref().map(load_gt).transpose()?;
    let maps: Vec<(String, GlobalMap)> = a
        .maps
        .iter()
        .map(|p| {
            let name = p.file_stem().map_or_else(|| "pred".to_string(), |s| s.to_string_lossy().into_owned());
            load_map(p).map(|m| (name, m)).with_context(|| format!("reading {}", p.display()))
        })
        .collect::<Result<_>>()?;
    let mut layers = Vec::new();
    if let Some(gt) = &gt {
        layers.push(Layer { name: "gt", map: gt, style: LayerStyle::Reference });
    }
    for (name, map) in &maps {
        layers.push(Layer { name, map, style: LayerStyle::Solid });
    }
    write(&a.out, &render_maps(&layers))
}
