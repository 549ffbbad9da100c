//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration or input error,
//! 3 runtime error. Outputs are rendered in memory first and then moved
//! into place, so a failed run never leaves partial files behind.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tempfile::NamedTempFile;

use crate::config::{parse_config, OutputFormat, ScenarioConfig, SweepAxis};
use crate::coverage::{
    coverage_ccdf, coverage_to_csv, reference_operator, run_cluster_scenario, Cluster, ClusterOverrides,
    ClusterPreset, LabeledCurve,
};
use crate::error::SimError;
use crate::linkrate::{operator_rate, sweep_distance, sweep_fmax, sweep_to_csv, SweepPoint};
use crate::plot::{chart_from_csv, detect_kind, render_svg, PlotKind};
use crate::spectrum::allocate_subbands;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "SBVSIM_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "sbvsim",
    version,
    about = "Multi-operator VDSL2 rate and coverage simulator (NV, SBV, full vectoring)",
    after_help = "Environment:\n  SBVSIM_SEED  overrides the configured coverage seed (--seed takes precedence)"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-operator rate at the configured distance
    Rate(RunArgs),
    /// Rate versus f_max or distance for each operator and mode
    Sweep(RunArgs),
    /// Coverage C-CDF by Monte Carlo over loop lengths
    Coverage(RunArgs),
    /// Extension-band block allocation
    Allocate(RunArgs),
    /// Render a sweep or coverage CSV as SVG
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario configuration file
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Cluster preset (A: 3 operators, B: 2 operators)
    #[arg(long, value_name = "A|B", value_parser = parse_cluster)]
    cluster: Option<Cluster>,
    /// Output directory (overrides [output] dir)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Coverage seed (overrides config and SBVSIM_SEED)
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Coverage sample count (overrides config)
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// CSV produced by `sweep`, `rate` or `coverage`
    #[arg(long, value_name = "CSV")]
    input: PathBuf,
    /// rate-vs-x or ccdf; detected from the header when omitted
    #[arg(long, value_parser = parse_kind)]
    kind: Option<PlotKind>,
    /// Output directory (defaults to the input's directory)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn parse_cluster(s: &str) -> Result<Cluster, String> {
    s.parse().map_err(|e: SimError| e.to_string())
}

fn parse_kind(s: &str) -> Result<PlotKind, String> {
    s.parse().map_err(|e: SimError| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Config(SimError),
    Runtime(SimError),
}

impl Failure {
    /// Classifies an error raised after configuration loading.
    fn from_run(e: SimError) -> Self {
        if e.is_config_error() {
            Failure::Config(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// `env_seed` is the value of [`SEED_ENV`], if set.
pub fn run<I, T>(args: I, env_seed: Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, env_seed) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            EXIT_OK
        }
        Err(Failure::Config(e)) => {
            eprintln!("sbvsim: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("sbvsim: {e}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(command: Command, env_seed: Option<String>) -> Result<Vec<PathBuf>, Failure> {
    let (args, kind) = match command {
        Command::Plot(p) => return cmd_plot(&p),
        Command::Rate(a) => (a, "rate"),
        Command::Sweep(a) => (a, "sweep"),
        Command::Coverage(a) => (a, "coverage"),
        Command::Allocate(a) => (a, "allocate"),
    };
    let preset = args.cluster.map(ClusterPreset::new);
    let cfg = load_config(&args, preset.as_ref(), env_seed).map_err(Failure::Config)?;
    let files = match kind {
        "rate" => cmd_rate(&cfg),
        "sweep" => cmd_sweep(&cfg),
        "coverage" => cmd_coverage(&cfg, preset.as_ref()),
        _ => cmd_allocate(&cfg),
    }
    .map_err(Failure::from_run)?;
    write_outputs(&cfg.output.dir, &files).map_err(Failure::Runtime)
}

fn load_config(args: &RunArgs, preset: Option<&ClusterPreset>, env_seed: Option<String>) -> crate::Result<ScenarioConfig> {
    let mut cfg = parse_config(&args.config, preset)?;
    if let Some(raw) = env_seed {
        cfg.coverage.seed = raw
            .trim()
            .parse()
            .map_err(|_| SimError::validation(SEED_ENV, format!("`{raw}` is not an unsigned integer")))?;
    }
    if let Some(seed) = args.seed {
        cfg.coverage.seed = seed;
    }
    if let Some(n) = args.samples {
        if n == 0 {
            return Err(SimError::validation("--samples", "must be >= 1"));
        }
        cfg.coverage.n_samples = n;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

/// `(file name, contents)` pairs.
type Outputs = Vec<(String, String)>;

fn with_formats(cfg: &ScenarioConfig, stem: &str, csv: String, kind: PlotKind) -> crate::Result<Outputs> {
    let mut files = Vec::new();
    if cfg.output.formats.contains(&OutputFormat::Svg) {
        let chart = chart_from_csv(stem, &csv, kind)?;
        files.push((format!("{stem}.svg"), render_svg(&chart)));
    }
    if cfg.output.formats.contains(&OutputFormat::Csv) {
        files.insert(0, (format!("{stem}.csv"), csv));
    }
    Ok(files)
}

pub fn rate_points(cfg: &ScenarioConfig) -> crate::Result<Vec<SweepPoint>> {
    let sc = cfg.scenario()?;
    (0..sc.n_op)
        .map(|op| {
            Ok(SweepPoint {
                x: cfg.distance_m,
                operator: op,
                mode: sc.mode,
                rate: operator_rate(&sc, op, cfg.distance_m)?,
            })
        })
        .collect()
}

fn cmd_rate(cfg: &ScenarioConfig) -> crate::Result<Outputs> {
    with_formats(cfg, "rate", sweep_to_csv(&rate_points(cfg)?), PlotKind::RateVsX)
}

pub fn sweep_points(cfg: &ScenarioConfig) -> crate::Result<Vec<SweepPoint>> {
    let template = cfg.scenario()?;
    match cfg.sweep.axis {
        SweepAxis::FMax => sweep_fmax(&template, cfg.distance_m, &cfg.sweep.f_max_list, &cfg.sweep.modes),
        SweepAxis::Distance => {
            let mut points = Vec::new();
            for &mode in &cfg.sweep.modes {
                let sc = template.with_mode(mode)?;
                for op in 0..sc.n_op {
                    points.extend(sweep_distance(&sc, op, &cfg.sweep.distances)?);
                }
            }
            Ok(points)
        }
    }
}

fn cmd_sweep(cfg: &ScenarioConfig) -> crate::Result<Outputs> {
    with_formats(cfg, "sweep", sweep_to_csv(&sweep_points(cfg)?), PlotKind::RateVsX)
}

/// Coverage curves: the full NV/SBV/17a set for a cluster preset, else the
/// configured mode for each `(n_us, f_max)` pair.
pub fn coverage_curves(cfg: &ScenarioConfig, preset: Option<&ClusterPreset>) -> crate::Result<Vec<LabeledCurve>> {
    let cov = &cfg.coverage;
    if let Some(preset) = preset {
        let ov = ClusterOverrides {
            n_op: Some(cfg.n_op),
            n_us: cov.n_us_list.clone(),
            f_max: cov.f_max_list.clone(),
            r_v_db: cfg.r_v_db,
            radio: cfg.radio,
            cable: cfg.cable,
            width_hz: cfg.width_hz,
            order: cfg.order,
            thresholds: cov.thresholds.clone(),
            n_samples: cov.n_samples,
            seed: cov.seed,
            operator: cfg.operator,
            loops: Some(cov.loops.clone()),
        };
        return run_cluster_scenario(preset, &ov);
    }
    let mut curves = Vec::new();
    for &n_us in &cov.n_us_list {
        for &f_max in &cov.f_max_list {
            let sc = cfg.link_scenario(cfg.mode, n_us, f_max)?;
            let op = reference_operator(&sc, cfg.operator)?;
            curves.push(LabeledCurve {
                mode: cfg.mode,
                n_op: cfg.n_op,
                n_us,
                f_max,
                operator: op,
                curve: coverage_ccdf(&sc, op, &cov.loops, &cov.thresholds, cov.n_samples, cov.seed)?,
            });
        }
    }
    Ok(curves)
}

fn cmd_coverage(cfg: &ScenarioConfig, preset: Option<&ClusterPreset>) -> crate::Result<Outputs> {
    with_formats(cfg, "coverage", coverage_to_csv(&coverage_curves(cfg, preset)?), PlotKind::Ccdf)
}

fn cmd_allocate(cfg: &ScenarioConfig) -> crate::Result<Outputs> {
    let alloc = allocate_subbands(cfg.n_op, cfg.f_max_hz, cfg.width_hz, cfg.order)?;
    Ok(vec![("allocation.csv".to_string(), alloc.to_csv())])
}

fn cmd_plot(args: &PlotArgs) -> Result<Vec<PathBuf>, Failure> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| Failure::Config(SimError::io(&args.input, e)))?;
    let source = args.input.display().to_string();
    let kind = match args.kind {
        Some(k) => k,
        None => detect_kind(&text).ok_or_else(|| {
            Failure::Config(SimError::validation(
                "kind",
                format!("cannot tell the CSV kind of {source} from its header; pass --kind"),
            ))
        })?,
    };
    let chart = chart_from_csv(&source, &text, kind).map_err(Failure::Config)?;
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => args.input.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    let stem = args
        .input
        .file_stem()
        .map_or_else(|| "plot".to_string(), |s| s.to_string_lossy().into_owned());
    write_outputs(&dir, &[(format!("{stem}.svg"), render_svg(&chart))]).map_err(Failure::Runtime)
}

/// Writes every file to a temporary sibling first and renames only once all
/// of them are complete.
pub fn write_outputs(dir: &Path, files: &[(String, String)]) -> crate::Result<Vec<PathBuf>> {
    let dir = if dir.as_os_str().is_empty() { Path::new(".") } else { dir };
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| SimError::io(dir, e))?;
        tmp.write_all(contents.as_bytes())
            .and_then(|()| tmp.flush())
            .map_err(|e| SimError::io(tmp.path(), e))?;
        staged.push((tmp, dir.join(name)));
    }
    staged
        .into_iter()
        .map(|(tmp, target)| {
            tmp.persist(&target).map_err(|e| SimError::io(&target, e.error))?;
            Ok(target)
        })
        .collect()
}
