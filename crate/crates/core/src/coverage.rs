//! Loop-length statistics and coverage (C-CDF) estimation.
//!
//! A subscriber's loop is the CAB-to-Dp length plus the Dp-to-home drop,
//! each drawn by inverse-CDF sampling. Coverage at a threshold is the
//! fraction of sampled loops whose achievable rate reaches it.
//!
//! Sample `i` takes its two variates from ChaCha8 stream `i` under the
//! run seed, so results do not depend on evaluation order or thread count.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::channel::CableModelParams;
use crate::error::{Result, SimError};
use crate::linkrate::{format_sig6, LinkScenario, Mode, OperatorLink, RadioParams};
use crate::spectrum::{AllocationOrder, ToneGrid, DEFAULT_BLOCK_WIDTH_HZ, LEGACY_EDGE_HZ};

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 1;
/// Median of the default CAB-to-Dp segment, m.
pub const DEFAULT_CAB_TO_DP_MEDIAN_M: f64 = 200.0;
/// Default Dp-to-home drop, m. Total median is 230 m.
pub const DEFAULT_DROP_M: f64 = 30.0;
/// Default total-length 90th percentile, m.
pub const DEFAULT_TOTAL_P90_M: f64 = 600.0;
/// Tolerance on the last CDF value of an empirical table.
pub const CDF_END_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceRole {
    CabToDp,
    DpToHome,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfPoint {
    pub distance_m: f64,
    pub cdf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistanceKind {
    /// Piecewise-linear CDF through tabulated points.
    Empirical(Vec<CdfPoint>),
    /// `ln(d)` is normal with mean `mu` and deviation `sigma`.
    LogNormal { mu: f64, sigma: f64 },
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceDistribution {
    pub kind: DistanceKind,
    pub role: DistanceRole,
}

fn row_error(row: usize, message: impl Into<String>) -> SimError {
    SimError::validation(format!("row {row}"), message)
}

impl DistanceDistribution {
    pub fn constant(d: f64, role: DistanceRole) -> Result<Self> {
        if !(d.is_finite() && d >= 0.0) {
            return Err(SimError::validation("distance_m", "constant distance must be >= 0"));
        }
        Ok(DistanceDistribution {
            kind: DistanceKind::Constant(d),
            role,
        })
    }

    pub fn lognormal(mu: f64, sigma: f64, role: DistanceRole) -> Result<Self> {
        if !mu.is_finite() {
            return Err(SimError::validation("mu", "must be finite"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(SimError::validation("sigma", "must be > 0"));
        }
        Ok(DistanceDistribution {
            kind: DistanceKind::LogNormal { mu, sigma },
            role,
        })
    }

    pub fn lognormal_median(median_m: f64, sigma: f64, role: DistanceRole) -> Result<Self> {
        if !(median_m.is_finite() && median_m > 0.0) {
            return Err(SimError::validation("median_m", "must be > 0"));
        }
        Self::lognormal(median_m.ln(), sigma, role)
    }

    /// Validates a tabulated CDF. Rows are numbered from 1.
    pub fn empirical(points: Vec<CdfPoint>, role: DistanceRole) -> Result<Self> {
        if points.is_empty() {
            return Err(SimError::validation("cdf", "empirical CDF has no rows"));
        }
        for (i, p) in points.iter().enumerate() {
            let row = i + 1;
            if !(p.distance_m.is_finite() && p.distance_m >= 0.0) {
                return Err(row_error(row, format!("distance {} m must be >= 0", p.distance_m)));
            }
            if !(p.cdf.is_finite() && (0.0..=1.0 + CDF_END_TOLERANCE).contains(&p.cdf)) {
                return Err(row_error(row, format!("CDF value {} outside [0, 1]", p.cdf)));
            }
            if i > 0 {
                let prev = points[i - 1];
                if !(p.distance_m > prev.distance_m) {
                    return Err(row_error(
                        row,
                        format!(
                            "distances must be strictly increasing ({} after {})",
                            p.distance_m, prev.distance_m
                        ),
                    ));
                }
                if p.cdf < prev.cdf {
                    return Err(row_error(
                        row,
                        format!("CDF must be nondecreasing ({} after {})", p.cdf, prev.cdf),
                    ));
                }
            }
        }
        let last = points.len();
        if (points[last - 1].cdf - 1.0).abs() > CDF_END_TOLERANCE {
            return Err(row_error(
                last,
                format!("CDF ends at {} instead of 1", points[last - 1].cdf),
            ));
        }
        Ok(DistanceDistribution {
            kind: DistanceKind::Empirical(points),
            role,
        })
    }

    /// Distance at cumulative probability `u`, `u` in [0, 1).
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(SimError::domain(format!("variate {u} outside [0, 1)")));
        }
        Ok(match &self.kind {
            DistanceKind::Constant(d) => *d,
            DistanceKind::LogNormal { mu, sigma } => {
                // u = 0 would give ln(d) = -inf regardless of sigma.
                let z = standard_normal().inverse_cdf(u.max(f64::MIN_POSITIVE));
                (mu + sigma * z).exp()
            }
            DistanceKind::Empirical(points) => {
                let j = points.partition_point(|p| p.cdf < u);
                if j == 0 {
                    points[0].distance_m
                } else if j == points.len() {
                    points[j - 1].distance_m
                } else {
                    let (a, b) = (points[j - 1], points[j]);
                    a.distance_m + (u - a.cdf) / (b.cdf - a.cdf) * (b.distance_m - a.distance_m)
                }
            }
        })
    }

    pub fn median(&self) -> f64 {
        self.inverse_cdf(0.5).expect("0.5 is a valid variate")
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// CAB-to-Dp segment plus Dp-to-home drop.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopModel {
    pub cab_to_dp: DistanceDistribution,
    pub dp_to_home: DistanceDistribution,
}

impl Default for LoopModel {
    /// Lognormal CAB-to-Dp segment (median 200 m) plus a 30 m drop: total
    /// median 230 m, total 90th percentile 600 m.
    fn default() -> Self {
        let z90 = standard_normal().inverse_cdf(0.9);
        let sigma = ((DEFAULT_TOTAL_P90_M - DEFAULT_DROP_M) / DEFAULT_CAB_TO_DP_MEDIAN_M).ln() / z90;
        LoopModel {
            cab_to_dp: DistanceDistribution::lognormal_median(
                DEFAULT_CAB_TO_DP_MEDIAN_M,
                sigma,
                DistanceRole::CabToDp,
            )
            .expect("valid default"),
            dp_to_home: DistanceDistribution::constant(DEFAULT_DROP_M, DistanceRole::DpToHome)
                .expect("valid default"),
        }
    }
}

impl LoopModel {
    /// Uses `total` for the whole loop with no separate drop.
    pub fn total_only(total: DistanceDistribution) -> Self {
        LoopModel {
            cab_to_dp: DistanceDistribution { role: DistanceRole::Total, ..total },
            dp_to_home: DistanceDistribution::constant(0.0, DistanceRole::DpToHome).expect("zero"),
        }
    }

    pub fn sample(&self, u1: f64, u2: f64) -> Result<f64> {
        sample_distance(&self.cab_to_dp, &self.dp_to_home, u1, u2)
    }
}

/// Total loop length from one variate per segment.
pub fn sample_distance(
    cab_to_dp: &DistanceDistribution,
    dp_to_home: &DistanceDistribution,
    u1: f64,
    u2: f64,
) -> Result<f64> {
    Ok(cab_to_dp.inverse_cdf(u1)? + dp_to_home.inverse_cdf(u2)?)
}

/// The two uniform variates of sample `index` under `seed`.
pub fn sample_variates(seed: u64, index: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (rng.gen::<f64>(), rng.gen::<f64>())
}

/// Empirical C-CDF of the achievable rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve {
    /// `(threshold Mbit/s, coverage probability)`.
    pub points: Vec<(f64, f64)>,
    pub n_samples: usize,
    pub seed: u64,
}

impl CoverageCurve {
    /// Coverage at exactly `threshold`, if it was evaluated.
    pub fn at(&self, threshold: f64) -> Option<f64> {
        self.points.iter().find(|(t, _)| *t == threshold).map(|(_, c)| *c)
    }
}

/// 0 to 300 Mbit/s in 5 Mbit/s steps.
pub fn default_thresholds() -> Vec<f64> {
    (0..=60).map(|i| f64::from(i) * 5.0).collect()
}

pub fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(SimError::domain("threshold list is empty"));
    }
    if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SimError::domain("thresholds must be finite and strictly increasing"));
    }
    Ok(())
}

/// Sampled loop lengths, in sample order.
pub fn sample_loops(loops: &LoopModel, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let (u1, u2) = sample_variates(seed, i);
            loops.sample(u1, u2)
        })
        .collect()
}

/// Fraction of `rates` at or above each threshold.
pub fn ccdf_from_rates(rates: &[f64], thresholds: &[f64], seed: u64) -> Result<CoverageCurve> {
    check_thresholds(thresholds)?;
    if rates.is_empty() {
        return Err(SimError::domain("no samples"));
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let points = thresholds
        .iter()
        .map(|&t| {
            let below = sorted.partition_point(|&r| r < t);
            (t, (n - below) as f64 / n as f64)
        })
        .collect();
    Ok(CoverageCurve {
        points,
        n_samples: n,
        seed,
    })
}

/// Coverage of `link` over sampled loop lengths.
///
/// Rate never increases with distance, so after sorting the loops the
/// covered set for each threshold is a prefix whose end is found by
/// bisection: about `log2(n)` rate evaluations per threshold instead of `n`.
/// Gives the same counts as evaluating every sample.
pub fn ccdf_over_distances(
    link: &OperatorLink,
    distances: &[f64],
    thresholds: &[f64],
    seed: u64,
) -> Result<CoverageCurve> {
    check_thresholds(thresholds)?;
    if distances.is_empty() {
        return Err(SimError::domain("no samples"));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut rate = |i: usize| -> Result<f64> {
        if let Some(&r) = cache.get(&i) {
            return Ok(r);
        }
        let r = link.rate_at(sorted[i])?.aggregate;
        cache.insert(i, r);
        Ok(r)
    };
    // Covered count only shrinks as the threshold rises.
    let mut hi = n;
    let mut points = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let mut lo = 0;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if rate(mid)? >= t {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        points.push((t, lo as f64 / n as f64));
    }
    Ok(CoverageCurve {
        points,
        n_samples: n,
        seed,
    })
}

/// Coverage C-CDF of operator `op` over `n_samples` sampled loops.
pub fn coverage_ccdf(
    sc: &LinkScenario,
    op: usize,
    loops: &LoopModel,
    thresholds: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<CoverageCurve> {
    check_thresholds(thresholds)?;
    if n_samples == 0 {
        return Err(SimError::domain("n_samples must be >= 1"));
    }
    let link = OperatorLink::new(sc, op)?;
    let distances = sample_loops(loops, n_samples, seed)?;
    ccdf_over_distances(&link, &distances, thresholds, seed)
}

/// Parses a `distance_m,cdf` table.
pub fn parse_empirical_cdf<R: Read>(source: &Path, reader: R) -> Result<DistanceDistribution> {
    let csv_err = |e| SimError::Csv {
        path: source.to_path_buf(),
        source: e,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["distance_m", "cdf"] {
        return Err(SimError::validation(
            "header",
            format!("expected `distance_m,cdf`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut points = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = i + 1;
        let field = |j: usize| -> Result<f64> {
            record
                .get(j)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| row_error(row, format!("cannot parse `{}`", record.get(j).unwrap_or(""))))
        };
        points.push(CdfPoint {
            distance_m: field(0)?,
            cdf: field(1)?,
        });
    }
    DistanceDistribution::empirical(points, DistanceRole::Total)
}

pub fn load_empirical_cdf(path: &Path) -> Result<DistanceDistribution> {
    let file = std::fs::File::open(path).map_err(|e| SimError::io(path, e))?;
    parse_empirical_cdf(path, file)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cluster {
    A,
    B,
}

impl FromStr for Cluster {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Cluster::A),
            "B" => Ok(Cluster::B),
            _ => Err(SimError::validation("cluster", format!("expected A or B, got `{s}`"))),
        }
    }
}

impl fmt::Display for Cluster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cluster::A => "A",
            Cluster::B => "B",
        })
    }
}

/// Market-area scenario. Population figures are descriptive only.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPreset {
    pub cluster: Cluster,
    pub n_op: usize,
    pub loops: LoopModel,
    pub municipalities: &'static str,
    pub population_millions: f64,
    pub population_share_pct: f64,
    pub households_millions: f64,
}

impl ClusterPreset {
    pub fn new(cluster: Cluster) -> Self {
        match cluster {
            Cluster::A => ClusterPreset {
                cluster,
                n_op: 3,
                loops: LoopModel::default(),
                municipalities: "15",
                population_millions: 9.4,
                population_share_pct: 15.0,
                households_millions: 3.9,
            },
            Cluster::B => ClusterPreset {
                cluster,
                n_op: 2,
                loops: LoopModel::default(),
                municipalities: "~1,120",
                population_millions: 27.0,
                population_share_pct: 45.0,
                households_millions: 11.2,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_op < 2 {
            return Err(SimError::validation("n_op", "cluster scenarios need at least 2 operators"));
        }
        Ok(())
    }
}

/// Knobs for [`run_cluster_scenario`]; `None` keeps the preset or default.
#[derive(Debug, Clone)]
pub struct ClusterOverrides {
    pub n_op: Option<usize>,
    pub n_us: Vec<u32>,
    pub f_max: Vec<f64>,
    pub r_v_db: f64,
    pub radio: RadioParams,
    pub cable: CableModelParams,
    pub width_hz: f64,
    pub order: AllocationOrder,
    pub thresholds: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    /// Operator whose subscribers are counted; defaults to the owner of the
    /// top extension block.
    pub operator: Option<usize>,
    pub loops: Option<LoopModel>,
}

impl Default for ClusterOverrides {
    fn default() -> Self {
        ClusterOverrides {
            n_op: None,
            n_us: vec![24],
            f_max: vec![35.2e6],
            r_v_db: 10.0,
            radio: RadioParams::default(),
            cable: CableModelParams::default(),
            width_hz: DEFAULT_BLOCK_WIDTH_HZ,
            order: AllocationOrder::Snake,
            thresholds: default_thresholds(),
            n_samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            operator: None,
            loops: None,
        }
    }
}

/// One coverage curve with the scenario it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCurve {
    pub mode: Mode,
    pub n_op: usize,
    pub n_us: u32,
    pub f_max: f64,
    pub operator: usize,
    pub curve: CoverageCurve,
}

/// Reference operator for a scenario: `requested`, or the owner of the top
/// extension block when unset.
pub fn reference_operator(sc: &LinkScenario, requested: Option<usize>) -> Result<usize> {
    match requested {
        Some(op) if op >= sc.n_op => Err(SimError::validation(
            "operator",
            format!("operator {op} out of range for {} operators", sc.n_op),
        )),
        Some(op) => Ok(op),
        None => Ok(sc.alloc.as_ref().map_or(0, |a| a.top_block_owner())),
    }
}

/// NV and SBV curves for each `(n_us, f_max)` pair, plus a non-vectored
/// 17a baseline per `n_us`.
pub fn run_cluster_scenario(preset: &ClusterPreset, ov: &ClusterOverrides) -> Result<Vec<LabeledCurve>> {
    preset.validate()?;
    let n_op = ov.n_op.unwrap_or(preset.n_op);
    let loops = ov.loops.clone().unwrap_or_else(|| preset.loops.clone());
    if ov.n_us.is_empty() || ov.f_max.is_empty() {
        return Err(SimError::domain("need at least one n_us and one f_max"));
    }
    let mut jobs: Vec<(Mode, u32, f64)> = Vec::new();
    for &n_us in &ov.n_us {
        for &f_max in &ov.f_max {
            jobs.push((Mode::Nv, n_us, f_max));
            jobs.push((Mode::Sbv, n_us, f_max));
        }
        jobs.push((Mode::Nv, n_us, LEGACY_EDGE_HZ));
    }
    let distances = sample_loops(&loops, ov.n_samples, ov.seed)?;
    jobs.into_iter()
        .map(|(mode, n_us, f_max)| {
            let grid = ToneGrid::standard(f_max)?;
            let sc = LinkScenario::build(
                mode, n_op, n_us, ov.r_v_db, ov.radio, ov.cable, grid, ov.width_hz, ov.order,
            )?;
            let op = reference_operator(&sc, ov.operator)?;
            let link = OperatorLink::new(&sc, op)?;
            Ok(LabeledCurve {
                mode,
                n_op,
                n_us,
                f_max,
                operator: op,
                curve: ccdf_over_distances(&link, &distances, &ov.thresholds, ov.seed)?,
            })
        })
        .collect()
}

/// CSV export, header
/// `threshold_mbps,coverage,mode,n_op,n_us,f_max_hz,seed,n_samples`.
pub fn coverage_to_csv(curves: &[LabeledCurve]) -> String {
    let mut out = String::from("threshold_mbps,coverage,mode,n_op,n_us,f_max_hz,seed,n_samples\n");
    for c in curves {
        for &(t, p) in &c.curve.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                format_sig6(t),
                format_sig6(p),
                c.mode,
                c.n_op,
                c.n_us,
                c.f_max,
                c.curve.seed,
                c.curve.n_samples
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pts(rows: &[(f64, f64)]) -> Vec<CdfPoint> {
        rows.iter()
            .map(|&(distance_m, cdf)| CdfPoint { distance_m, cdf })
            .collect()
    }

    #[test]
    fn constant_segments_add_up() {
        let a = DistanceDistribution::constant(150.0, DistanceRole::CabToDp).unwrap();
        let b = DistanceDistribution::constant(80.0, DistanceRole::DpToHome).unwrap();
        for (u1, u2) in [(0.0, 0.0), (0.3, 0.9), (0.999, 0.5)] {
            assert_eq!(sample_distance(&a, &b, u1, u2).unwrap(), 230.0);
        }
    }

    #[test]
    fn empirical_inverse_is_piecewise_linear() {
        let e = DistanceDistribution::empirical(pts(&[(0.0, 0.0), (400.0, 1.0)]), DistanceRole::CabToDp).unwrap();
        assert_relative_eq!(e.inverse_cdf(0.5).unwrap(), 200.0);
        assert_eq!(e.inverse_cdf(0.0).unwrap(), 0.0);

        let e = DistanceDistribution::empirical(
            pts(&[(50.0, 0.1), (100.0, 0.5), (300.0, 0.5), (500.0, 1.0)]),
            DistanceRole::Total,
        )
        .unwrap();
        assert_eq!(e.inverse_cdf(0.05).unwrap(), 50.0);
        assert_relative_eq!(e.inverse_cdf(0.3).unwrap(), 75.0);
        assert_relative_eq!(e.inverse_cdf(0.75).unwrap(), 400.0);
    }

    #[test]
    fn degenerate_lognormal_returns_its_median() {
        let ln = DistanceDistribution::lognormal(200f64.ln(), 1e-12, DistanceRole::CabToDp).unwrap();
        for u in [0.0, 1e-9, 0.25, 0.5, 0.9, 0.999_999] {
            assert_relative_eq!(ln.inverse_cdf(u).unwrap(), 200.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn variates_outside_unit_interval_are_rejected() {
        let c = DistanceDistribution::constant(10.0, DistanceRole::Total).unwrap();
        assert!(matches!(c.inverse_cdf(1.0), Err(SimError::Domain(_))));
        assert!(matches!(c.inverse_cdf(-0.1), Err(SimError::Domain(_))));
        assert!(sample_distance(&c, &c, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        assert!(DistanceDistribution::constant(-1.0, DistanceRole::Total).is_err());
        assert!(DistanceDistribution::lognormal(5.0, 0.0, DistanceRole::Total).is_err());
        let err = DistanceDistribution::empirical(pts(&[(0.0, 0.0), (100.0, 0.6), (90.0, 1.0)]), DistanceRole::Total)
            .unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
        let err = DistanceDistribution::empirical(pts(&[(0.0, 0.0), (100.0, 0.6), (200.0, 0.5), (300.0, 1.0)]), DistanceRole::Total)
            .unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
        let err = DistanceDistribution::empirical(pts(&[(-5.0, 0.0), (100.0, 1.0)]), DistanceRole::Total).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
        let err = DistanceDistribution::empirical(pts(&[(0.0, 0.0), (100.0, 0.99)]), DistanceRole::Total).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        assert!(DistanceDistribution::empirical(pts(&[(0.0, 0.0), (100.0, 1.0 - 5e-7)]), DistanceRole::Total).is_ok());
    }

    #[test]
    fn empirical_csv_parsing() {
        let d = parse_empirical_cdf(Path::new("t.csv"), "distance_m,cdf\n0,0\n400,1\n".as_bytes()).unwrap();
        assert_eq!(d.kind, DistanceKind::Empirical(pts(&[(0.0, 0.0), (400.0, 1.0)])));

        let err = parse_empirical_cdf(Path::new("t.csv"), "distance_m,cdf\n400,0.5\n0,1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        let err = parse_empirical_cdf(Path::new("t.csv"), "d,c\n0,0\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("distance_m,cdf"), "{err}");
        let err = parse_empirical_cdf(Path::new("t.csv"), "distance_m,cdf\n0,zero\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn default_loops_match_calibration_anchors() {
        let loops = LoopModel::default();
        // Constant drop shifts every quantile by 30 m.
        assert_relative_eq!(loops.cab_to_dp.median() + DEFAULT_DROP_M, 230.0, max_relative = 1e-12);
        let p90 = loops.cab_to_dp.inverse_cdf(0.9).unwrap() + DEFAULT_DROP_M;
        assert_relative_eq!(p90, 600.0, max_relative = 1e-9);
    }

    #[test]
    fn variates_are_reproducible_and_distinct() {
        assert_eq!(sample_variates(7, 3), sample_variates(7, 3));
        assert_ne!(sample_variates(7, 3), sample_variates(7, 4));
        assert_ne!(sample_variates(7, 3), sample_variates(8, 3));
        let (a, b) = sample_variates(0, 0);
        assert!((0.0..1.0).contains(&a) && (0.0..1.0).contains(&b));
    }

    #[test]
    fn ccdf_from_rates_counts_at_or_above() {
        let c = ccdf_from_rates(&[10.0, 20.0, 20.0, 40.0], &[0.0, 20.0, 25.0, 50.0], 1).unwrap();
        assert_eq!(c.points, vec![(0.0, 1.0), (20.0, 0.75), (25.0, 0.25), (50.0, 0.0)]);
        assert!(ccdf_from_rates(&[1.0], &[], 1).is_err());
        assert!(ccdf_from_rates(&[1.0], &[5.0, 5.0], 1).is_err());
        assert!(ccdf_from_rates(&[], &[5.0], 1).is_err());
    }

    #[test]
    fn constant_loop_gives_a_step() {
        let sc = LinkScenario::new(Mode::Sbv, 2, 24, 10.0, 35.2e6).unwrap();
        let loops = LoopModel::total_only(DistanceDistribution::constant(250.0, DistanceRole::Total).unwrap());
        let rate = crate::linkrate::operator_rate(&sc, 0, 250.0).unwrap().aggregate;
        let thresholds = [0.0, rate.floor(), rate, rate + 1e-6, rate + 10.0];
        let c = coverage_ccdf(&sc, 0, &loops, &thresholds, 50, 9).unwrap();
        let probs: Vec<f64> = c.points.iter().map(|p| p.1).collect();
        assert_eq!(probs, vec![1.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn bisection_matches_direct_evaluation() {
        let loops = LoopModel::default();
        let distances = sample_loops(&loops, 3000, 5).unwrap();
        let thresholds: Vec<f64> = (0..=150).map(|i| f64::from(i) * 2.0).collect();
        for (mode, n_op, f_max) in [(Mode::Sbv, 3, 35.2e6), (Mode::Nv, 2, 70.4e6), (Mode::Sbv, 2, 105.6e6)] {
            let sc = LinkScenario::new(mode, n_op, 24, 10.0, f_max).unwrap();
            let link = OperatorLink::new(&sc, n_op - 1).unwrap();
            let rates: Vec<f64> = distances.iter().map(|&d| link.rate_at(d).unwrap().aggregate).collect();
            assert_eq!(
                ccdf_over_distances(&link, &distances, &thresholds, 5).unwrap(),
                ccdf_from_rates(&rates, &thresholds, 5).unwrap()
            );
        }
    }

    #[test]
    fn coverage_argument_errors() {
        let sc = LinkScenario::new(Mode::Sbv, 2, 24, 10.0, 35.2e6).unwrap();
        let loops = LoopModel::default();
        assert!(coverage_ccdf(&sc, 0, &loops, &[], 10, 1).is_err());
        assert!(coverage_ccdf(&sc, 0, &loops, &[1.0], 0, 1).is_err());
        assert!(coverage_ccdf(&sc, 2, &loops, &[1.0], 10, 1).is_err());
    }

    #[test]
    fn reference_operator_defaults_to_top_block_owner() {
        let sc = LinkScenario::new(Mode::Sbv, 3, 24, 10.0, 35.2e6).unwrap();
        assert_eq!(reference_operator(&sc, None).unwrap(), 2);
        assert_eq!(reference_operator(&sc, Some(1)).unwrap(), 1);
        assert!(reference_operator(&sc, Some(3)).is_err());
        let sc = LinkScenario::new(Mode::Sbv, 2, 24, 10.0, 35.2e6).unwrap();
        assert_eq!(reference_operator(&sc, None).unwrap(), 0);
        let sc = LinkScenario::new(Mode::Nv, 2, 24, 10.0, LEGACY_EDGE_HZ).unwrap();
        assert_eq!(reference_operator(&sc, None).unwrap(), 0);
    }

    #[test]
    fn presets() {
        assert_eq!(ClusterPreset::new(Cluster::A).n_op, 3);
        assert_eq!(ClusterPreset::new(Cluster::B).n_op, 2);
        assert_eq!("b".parse::<Cluster>().unwrap(), Cluster::B);
        assert!("C".parse::<Cluster>().is_err());
        let mut bad = ClusterPreset::new(Cluster::A);
        bad.n_op = 1;
        assert!(run_cluster_scenario(&bad, &ClusterOverrides::default()).is_err());
    }

    #[test]
    fn cluster_run_emits_nv_sbv_and_baseline() {
        let ov = ClusterOverrides {
            n_us: vec![12, 24],
            f_max: vec![35.2e6, 105.6e6],
            n_samples: 200,
            ..Default::default()
        };
        let curves = run_cluster_scenario(&ClusterPreset::new(Cluster::B), &ov).unwrap();
        assert_eq!(curves.len(), 2 * (2 * 2 + 1));
        let baselines: Vec<&LabeledCurve> = curves.iter().filter(|c| c.f_max == LEGACY_EDGE_HZ).collect();
        assert_eq!(baselines.len(), 2);
        assert!(baselines.iter().all(|c| c.mode == Mode::Nv));
        let csv = coverage_to_csv(&curves);
        assert!(csv.starts_with("threshold_mbps,coverage,mode,n_op,n_us,f_max_hz,seed,n_samples\n"));
        assert!(csv.contains(",SBV,2,24,35200000,1,200\n"));
        assert_eq!(csv.lines().count(), 1 + curves.len() * default_thresholds().len());
    }
}
