//! Scenario configuration files.
//!
//! ```text
//! mode = SBV              # keys before any header belong to [scenario]
//! n_op = 2
//!
//! [radio]
//! b_max = 15
//!
//! [coverage]
//! n_samples = 100000
//! seed = 7
//! ```
//!
//! Sections: `[scenario]`, `[radio]`, `[coverage]`, `[sweep]`, `[output]`.
//! Unknown sections or keys are errors. Everything except `mode` and `n_op`
//! has a default; with a cluster preset those two default too (SBV and the
//! preset's operator count).

use std::path::{Path, PathBuf};

use crate::channel::CableModelParams;
use crate::coverage::{
    check_thresholds, default_thresholds, load_empirical_cdf, ClusterPreset, DistanceDistribution,
    DistanceRole, LoopModel, DEFAULT_CAB_TO_DP_MEDIAN_M, DEFAULT_DROP_M, DEFAULT_SAMPLES, DEFAULT_SEED,
};
use crate::error::{Result, SimError};
use crate::ini::Document;
use crate::linkrate::{LinkScenario, Mode, RadioParams};
use crate::spectrum::{AllocationOrder, ToneGrid, DEFAULT_BLOCK_WIDTH_HZ, LEGACY_EDGE_HZ};

const SECTIONS: [&str; 5] = ["scenario", "radio", "coverage", "sweep", "output"];
const SCENARIO_KEYS: [&str; 10] = [
    "mode", "n_op", "n_us", "r_v_db", "f_max_hz", "width_hz", "order", "distance_m", "operator",
    "cable_file",
];
const RADIO_KEYS: [&str; 8] = [
    "psd_tx_dbm_hz", "noise_bg_dbm_hz", "gamma_db", "margin_db", "coding_gain_db", "b_max",
    "f_sym_hz", "integer_bits",
];
const COVERAGE_KEYS: [&str; 11] = [
    "cab_to_dp", "cab_median_m", "cab_sigma", "cab_distance_m", "cdf_file", "drop_m", "n_samples",
    "seed", "thresholds_mbps", "n_us_list", "f_max_list_hz",
];
const SWEEP_KEYS: [&str; 4] = ["axis", "f_max_list_hz", "distances_m", "modes"];
const OUTPUT_KEYS: [&str; 2] = ["dir", "formats"];

pub const DEFAULT_N_US: u32 = 24;
pub const DEFAULT_R_V_DB: f64 = 10.0;
pub const DEFAULT_F_MAX_HZ: f64 = 35.2e6;
pub const DEFAULT_DISTANCE_M: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    FMax,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub loops: LoopModel,
    pub n_samples: usize,
    pub seed: u64,
    pub thresholds: Vec<f64>,
    pub n_us_list: Vec<u32>,
    pub f_max_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub f_max_list: Vec<f64>,
    pub distances: Vec<f64>,
    pub modes: Vec<Mode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub n_op: usize,
    pub n_us: u32,
    pub r_v_db: f64,
    pub f_max_hz: f64,
    pub width_hz: f64,
    pub order: AllocationOrder,
    /// Distance for the `rate` command, m.
    pub distance_m: f64,
    /// Reference operator for coverage; `None` picks the top-block owner.
    pub operator: Option<usize>,
    pub cable_file: Option<PathBuf>,
    pub cable: CableModelParams,
    pub radio: RadioParams,
    pub coverage: CoverageConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

impl ScenarioConfig {
    /// Link scenario for `mode` at `f_max`, everything else from the config.
    pub fn link_scenario(&self, mode: Mode, n_us: u32, f_max: f64) -> Result<LinkScenario> {
        let grid = ToneGrid::standard(f_max)?;
        LinkScenario::build(
            mode, self.n_op, n_us, self.r_v_db, self.radio, self.cable, grid, self.width_hz, self.order,
        )
    }

    pub fn scenario(&self) -> Result<LinkScenario> {
        self.link_scenario(self.mode, self.n_us, self.f_max_hz)
    }
}

/// Reads and validates a config file. Relative file references inside it
/// resolve against the file's own directory.
pub fn parse_config(path: &Path, preset: Option<&ClusterPreset>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&path.display().to_string(), &text, base, preset)
}

pub fn parse_config_str(
    source_name: &str,
    text: &str,
    base_dir: &Path,
    preset: Option<&ClusterPreset>,
) -> Result<ScenarioConfig> {
    let doc = Document::parse(source_name, text, Some("scenario"))?;
    doc.check_sections(&SECTIONS)?;
    doc.check_keys("scenario", &SCENARIO_KEYS)?;
    doc.check_keys("radio", &RADIO_KEYS)?;
    doc.check_keys("coverage", &COVERAGE_KEYS)?;
    doc.check_keys("sweep", &SWEEP_KEYS)?;
    doc.check_keys("output", &OUTPUT_KEYS)?;

    let s = "scenario";
    let mode: Mode = match (doc.parse_value::<String>(s, "mode")?, preset) {
        (Some(v), _) => v.parse()?,
        (None, Some(_)) => Mode::Sbv,
        (None, None) => return Err(SimError::validation("mode", "required")),
    };
    let n_op: usize = match (doc.parse_value(s, "n_op")?, preset) {
        (Some(v), _) => v,
        (None, Some(p)) => p.n_op,
        (None, None) => return Err(SimError::validation("n_op", "required")),
    };
    if n_op == 0 {
        return Err(SimError::validation("n_op", "must be >= 1"));
    }
    if mode == Mode::FullVector && n_op != 1 {
        return Err(SimError::validation(
            "mode",
            format!("FULL_VECTOR requires n_op = 1, got n_op = {n_op}"),
        ));
    }
    let n_us = doc.parse_value(s, "n_us")?.unwrap_or(DEFAULT_N_US);
    let f_max_hz = doc.parse_value(s, "f_max_hz")?.unwrap_or(DEFAULT_F_MAX_HZ);
    let distance_m: f64 = doc.parse_value(s, "distance_m")?.unwrap_or(DEFAULT_DISTANCE_M);
    if !(distance_m.is_finite() && distance_m >= 0.0) {
        return Err(SimError::validation("distance_m", "must be >= 0"));
    }
    let operator: Option<usize> = doc.parse_value(s, "operator")?;
    if let Some(op) = operator {
        if op >= n_op {
            return Err(SimError::validation("operator", format!("must be < n_op = {n_op}")));
        }
    }
    let order = match doc.parse_value::<String>(s, "order")? {
        Some(v) => v.parse()?,
        None => AllocationOrder::Snake,
    };
    let cable_file = doc.parse_value::<String>(s, "cable_file")?.map(|p| base_dir.join(p));
    let cable = match &cable_file {
        Some(p) => CableModelParams::load(p)?,
        None => CableModelParams::default(),
    };

    let r = "radio";
    let defaults = RadioParams::default();
    let radio = RadioParams {
        psd_tx_dbm_hz: doc.parse_value(r, "psd_tx_dbm_hz")?.unwrap_or(defaults.psd_tx_dbm_hz),
        noise_bg_dbm_hz: doc.parse_value(r, "noise_bg_dbm_hz")?.unwrap_or(defaults.noise_bg_dbm_hz),
        gamma_db: doc.parse_value(r, "gamma_db")?.unwrap_or(defaults.gamma_db),
        margin_db: doc.parse_value(r, "margin_db")?.unwrap_or(defaults.margin_db),
        coding_gain_db: doc.parse_value(r, "coding_gain_db")?.unwrap_or(defaults.coding_gain_db),
        b_max: doc.parse_value(r, "b_max")?.unwrap_or(defaults.b_max),
        f_sym: doc.parse_value(r, "f_sym_hz")?.unwrap_or(defaults.f_sym),
        integer_bits: doc.parse_value(r, "integer_bits")?.unwrap_or(defaults.integer_bits),
    };

    let mut cfg = ScenarioConfig {
        mode,
        n_op,
        n_us,
        r_v_db: doc.parse_value(s, "r_v_db")?.unwrap_or(DEFAULT_R_V_DB),
        f_max_hz,
        width_hz: doc.parse_value(s, "width_hz")?.unwrap_or(DEFAULT_BLOCK_WIDTH_HZ),
        order,
        distance_m,
        operator,
        cable_file,
        cable,
        radio,
        coverage: parse_coverage(&doc, base_dir, n_us, f_max_hz)?,
        sweep: parse_sweep(&doc, mode, n_op)?,
        output: parse_output(&doc)?,
    };
    if let Some(p) = preset {
        if doc.get("coverage", "cab_to_dp").is_none() && doc.get("coverage", "drop_m").is_none() {
            cfg.coverage.loops = p.loops.clone();
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn parse_coverage(doc: &Document, base_dir: &Path, n_us: u32, f_max_hz: f64) -> Result<CoverageConfig> {
    let c = "coverage";
    let kind = doc
        .parse_value::<String>(c, "cab_to_dp")?
        .unwrap_or_else(|| "lognormal".to_string())
        .to_ascii_lowercase();
    let only = |allowed: &[&str]| -> Result<()> {
        for key in ["cab_median_m", "cab_sigma", "cab_distance_m", "cdf_file"] {
            if !allowed.contains(&key) && doc.get(c, key).is_some() {
                return Err(SimError::validation(key, format!("not used when cab_to_dp = {kind}")));
            }
        }
        Ok(())
    };
    let defaults = LoopModel::default();
    let cab_to_dp = match kind.as_str() {
        "lognormal" => {
            only(&["cab_median_m", "cab_sigma"])?;
            let median = doc.parse_value(c, "cab_median_m")?.unwrap_or(DEFAULT_CAB_TO_DP_MEDIAN_M);
            let sigma = match doc.parse_value(c, "cab_sigma")? {
                Some(v) => v,
                None => match defaults.cab_to_dp.kind {
                    crate::coverage::DistanceKind::LogNormal { sigma, .. } => sigma,
                    _ => unreachable!("default segment is lognormal"),
                },
            };
            DistanceDistribution::lognormal_median(median, sigma, DistanceRole::CabToDp)?
        }
        "constant" => {
            only(&["cab_distance_m"])?;
            let d = doc
                .parse_value(c, "cab_distance_m")?
                .ok_or_else(|| SimError::validation("cab_distance_m", "required when cab_to_dp = constant"))?;
            DistanceDistribution::constant(d, DistanceRole::CabToDp)?
        }
        "empirical" => {
            only(&["cdf_file"])?;
            let file = doc
                .parse_value::<String>(c, "cdf_file")?
                .ok_or_else(|| SimError::validation("cdf_file", "required when cab_to_dp = empirical"))?;
            DistanceDistribution {
                role: DistanceRole::CabToDp,
                ..load_empirical_cdf(&base_dir.join(file))?
            }
        }
        other => {
            return Err(SimError::validation(
                "cab_to_dp",
                format!("expected lognormal, constant or empirical, got `{other}`"),
            ))
        }
    };
    let drop_m = doc.parse_value(c, "drop_m")?.unwrap_or(DEFAULT_DROP_M);
    let thresholds = doc.parse_list(c, "thresholds_mbps")?.unwrap_or_else(default_thresholds);
    check_thresholds(&thresholds).map_err(|e| SimError::validation("thresholds_mbps", e.to_string()))?;
    let n_samples = doc.parse_value(c, "n_samples")?.unwrap_or(DEFAULT_SAMPLES);
    if n_samples == 0 {
        return Err(SimError::validation("n_samples", "must be >= 1"));
    }
    Ok(CoverageConfig {
        loops: LoopModel {
            cab_to_dp,
            dp_to_home: DistanceDistribution::constant(drop_m, DistanceRole::DpToHome)?,
        },
        n_samples,
        seed: doc.parse_value(c, "seed")?.unwrap_or(DEFAULT_SEED),
        thresholds,
        n_us_list: doc.parse_list(c, "n_us_list")?.unwrap_or_else(|| vec![n_us]),
        f_max_list: doc.parse_list(c, "f_max_list_hz")?.unwrap_or_else(|| vec![f_max_hz]),
    })
}

fn parse_sweep(doc: &Document, mode: Mode, n_op: usize) -> Result<SweepConfig> {
    let w = "sweep";
    let axis = match doc.parse_value::<String>(w, "axis")?.as_deref() {
        None | Some("f_max") => SweepAxis::FMax,
        Some("distance") => SweepAxis::Distance,
        Some(other) => {
            return Err(SimError::validation("axis", format!("expected f_max or distance, got `{other}`")))
        }
    };
    let modes = match doc.parse_list::<Mode>(w, "modes")? {
        Some(m) => m,
        None if n_op == 1 => vec![mode],
        None => vec![Mode::Nv, Mode::Sbv],
    };
    if modes.is_empty() {
        return Err(SimError::validation("modes", "must not be empty"));
    }
    if n_op != 1 && modes.contains(&Mode::FullVector) {
        return Err(SimError::validation("modes", "FULL_VECTOR requires n_op = 1"));
    }
    Ok(SweepConfig {
        axis,
        f_max_list: doc
            .parse_list(w, "f_max_list_hz")?
            .unwrap_or_else(|| vec![LEGACY_EDGE_HZ, 35.2e6, 70.4e6, 105.6e6]),
        distances: doc
            .parse_list(w, "distances_m")?
            .unwrap_or_else(|| (1..=20).map(|i| f64::from(i) * 50.0).collect()),
        modes,
    })
}

fn parse_output(doc: &Document) -> Result<OutputConfig> {
    let formats = match doc.parse_list::<String>("output", "formats")? {
        None => vec![OutputFormat::Csv],
        Some(list) => list
            .iter()
            .map(|f| match f.to_ascii_lowercase().as_str() {
                "csv" => Ok(OutputFormat::Csv),
                "svg" => Ok(OutputFormat::Svg),
                other => Err(SimError::validation("formats", format!("expected csv or svg, got `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?,
    };
    if formats.is_empty() {
        return Err(SimError::validation("formats", "must not be empty"));
    }
    Ok(OutputConfig {
        dir: doc
            .parse_value::<String>("output", "dir")?
            .map_or_else(|| PathBuf::from("out"), PathBuf::from),
        formats,
    })
}

/// Cross-field checks: every scenario the config can launch must build.
fn validate(cfg: &ScenarioConfig) -> Result<()> {
    let as_validation = |key: &str, e: SimError| match e {
        e if e.is_config_error() => e,
        e => SimError::validation(key, e.to_string()),
    };
    cfg.scenario().map_err(|e| as_validation("f_max_hz", e))?;
    for &f in &cfg.coverage.f_max_list {
        cfg.link_scenario(Mode::Nv, cfg.n_us, f).map_err(|e| as_validation("f_max_list_hz", e))?;
    }
    if cfg.sweep.axis == SweepAxis::FMax {
        if cfg.sweep.f_max_list.is_empty() || cfg.sweep.f_max_list.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SimError::validation("f_max_list_hz", "must be a strictly ascending list"));
        }
        for &f in &cfg.sweep.f_max_list {
            cfg.link_scenario(Mode::Nv, cfg.n_us, f).map_err(|e| as_validation("f_max_list_hz", e))?;
        }
    }
    if cfg.sweep.distances.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(SimError::validation("distances_m", "distances must be >= 0"));
    }
    Ok(())
}
