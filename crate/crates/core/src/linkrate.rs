//! Per-tone SNR, gap-approximation bit loading and per-operator rates.
//!
//! Below the legacy edge every operator's line runs non-vectored against
//! `n_us` FEXT disturbers, and the resulting legacy rate is split evenly
//! across the `n_op` co-sited operators. Above it:
//!
//! * `NV`: every extension tone, non-vectored, split across operators;
//! * `SBV`: only the operator's own blocks, vectored, with the background
//!   noise lifted by `r_v_db` to account for residual crosstalk;
//! * `FULL_VECTOR`: a single operator vectoring every downstream tone.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::CableModelParams;
use crate::error::{Result, SimError};
use crate::spectrum::{
    allocate_subbands, extension_tones, legacy_downstream_tones, tones_for_operator,
    AllocationOrder, BandPlan, SubBandAllocation, ToneGrid, DEFAULT_BLOCK_WIDTH_HZ, LEGACY_EDGE_HZ,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Nv,
    Sbv,
    FullVector,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Nv => "NV",
            Mode::Sbv => "SBV",
            Mode::FullVector => "FULL_VECTOR",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NV" => Ok(Mode::Nv),
            "SBV" => Ok(Mode::Sbv),
            "FULL_VECTOR" => Ok(Mode::FullVector),
            _ => Err(SimError::validation(
                "mode",
                format!("expected NV, SBV or FULL_VECTOR, got `{s}`"),
            )),
        }
    }
}

/// Transmitter, noise and modulation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub psd_tx_dbm_hz: f64,
    pub noise_bg_dbm_hz: f64,
    /// Shannon gap, dB.
    pub gamma_db: f64,
    pub margin_db: f64,
    pub coding_gain_db: f64,
    /// Per-tone bit cap.
    pub b_max: f64,
    /// DMT symbol rate, Hz.
    pub f_sym: f64,
    /// Floor each tone's bit count to an integer.
    pub integer_bits: bool,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            psd_tx_dbm_hz: -60.0,
            noise_bg_dbm_hz: -140.0,
            gamma_db: 9.75,
            margin_db: 6.0,
            coding_gain_db: 3.0,
            b_max: 15.0,
            f_sym: 4000.0,
            integer_bits: false,
        }
    }
}

impl RadioParams {
    pub fn gap_eff_db(&self) -> f64 {
        self.gamma_db + self.margin_db - self.coding_gain_db
    }

    pub fn tx_psd_mw_hz(&self) -> f64 {
        10f64.powf(self.psd_tx_dbm_hz / 10.0)
    }

    pub fn noise_mw_hz(&self) -> f64 {
        10f64.powf(self.noise_bg_dbm_hz / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("psd_tx_dbm_hz", self.psd_tx_dbm_hz),
            ("noise_bg_dbm_hz", self.noise_bg_dbm_hz),
            ("gamma_db", self.gamma_db),
            ("margin_db", self.margin_db),
            ("coding_gain_db", self.coding_gain_db),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(SimError::validation(key, "must be finite"));
            }
        }
        if !(self.gap_eff_db() > 0.0) {
            return Err(SimError::validation(
                "gamma_db",
                format!(
                    "effective gap gamma + margin - coding gain must be > 0 dB, got {}",
                    self.gap_eff_db()
                ),
            ));
        }
        if !(self.b_max.is_finite() && self.b_max >= 1.0) {
            return Err(SimError::validation("b_max", "must be >= 1"));
        }
        if !(self.f_sym.is_finite() && self.f_sym > 0.0) {
            return Err(SimError::validation("f_sym_hz", "must be > 0"));
        }
        Ok(())
    }
}

/// Everything needed to compute one operator's rate at one distance.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkScenario {
    pub mode: Mode,
    pub n_op: usize,
    /// Interfering pairs in the binder.
    pub n_us: u32,
    /// Residual-vectoring noise lift, dB.
    pub r_v_db: f64,
    pub radio: RadioParams,
    pub cable: CableModelParams,
    pub grid: ToneGrid,
    pub plan: BandPlan,
    pub width_hz: f64,
    pub order: AllocationOrder,
    /// `None` when the grid stops at the legacy edge.
    pub alloc: Option<SubBandAllocation>,
}

/// Downstream rate of one operator's line, Mbit/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateResult {
    pub aggregate: f64,
    pub legacy: f64,
    pub extension: f64,
}

impl LinkScenario {
    /// Scenario on the standard grid, 17a plan and default block width.
    pub fn new(mode: Mode, n_op: usize, n_us: u32, r_v_db: f64, f_max: f64) -> Result<Self> {
        Self::build(
            mode,
            n_op,
            n_us,
            r_v_db,
            RadioParams::default(),
            CableModelParams::default(),
            ToneGrid::standard(f_max)?,
            DEFAULT_BLOCK_WIDTH_HZ,
            AllocationOrder::Snake,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn build(
        mode: Mode,
        n_op: usize,
        n_us: u32,
        r_v_db: f64,
        radio: RadioParams,
        cable: CableModelParams,
        grid: ToneGrid,
        width_hz: f64,
        order: AllocationOrder,
    ) -> Result<Self> {
        let mut sc = LinkScenario {
            mode,
            n_op,
            n_us,
            r_v_db,
            radio,
            cable,
            grid,
            plan: BandPlan::vdsl2_17a(),
            width_hz,
            order,
            alloc: None,
        };
        sc.reallocate()?;
        sc.validate()?;
        Ok(sc)
    }

    fn reallocate(&mut self) -> Result<()> {
        if self.n_op == 0 {
            return Err(SimError::validation("n_op", "must be >= 1"));
        }
        self.alloc = if self.grid.f_max > LEGACY_EDGE_HZ {
            Some(allocate_subbands(self.n_op, self.grid.f_max, self.width_hz, self.order)?)
        } else {
            None
        };
        Ok(())
    }

    /// Same scenario with a different top frequency; the grid and the
    /// block allocation follow.
    pub fn with_f_max(&self, f_max: f64) -> Result<Self> {
        let mut sc = self.clone();
        sc.grid = ToneGrid::new(self.grid.delta_f, self.grid.f_start, f_max)?;
        sc.reallocate()?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn with_mode(&self, mode: Mode) -> Result<Self> {
        let mut sc = self.clone();
        sc.mode = mode;
        sc.validate()?;
        Ok(sc)
    }

    pub fn with_n_us(&self, n_us: u32) -> Self {
        LinkScenario { n_us, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_op == 0 {
            return Err(SimError::validation("n_op", "must be >= 1"));
        }
        if !(self.r_v_db.is_finite() && self.r_v_db >= 0.0) {
            return Err(SimError::validation("r_v_db", "must be >= 0"));
        }
        self.radio.validate()?;
        self.cable.validate()?;
        if self.grid.f_max > self.cable.f_valid_max {
            return Err(SimError::validation(
                "f_max_hz",
                format!(
                    "{} Hz exceeds the cable model validity limit {} Hz",
                    self.grid.f_max, self.cable.f_valid_max
                ),
            ));
        }
        if self.mode == Mode::FullVector && self.n_op != 1 {
            return Err(SimError::scenario(format!(
                "FULL_VECTOR requires a single operator, got n_op = {}",
                self.n_op
            )));
        }
        match &self.alloc {
            Some(a) if a.n_op != self.n_op || a.f_max != self.grid.f_max => Err(SimError::scenario(
                "sub-band allocation does not match the scenario's operator count or f_max",
            )),
            None if self.grid.f_max > LEGACY_EDGE_HZ => {
                Err(SimError::scenario("grid extends past the legacy edge but has no allocation"))
            }
            _ => Ok(()),
        }
    }
}

/// SNR of one tone at `f` Hz on a loop of `d` metres.
///
/// Vectored tones see only background noise lifted by `r_v_db`;
/// non-vectored tones see background noise plus FEXT from `n_us` pairs.
pub fn tone_snr(sc: &LinkScenario, f: f64, d: f64, vectored: bool) -> Result<f64> {
    if !sc.grid.contains(f) {
        return Err(SimError::domain(format!(
            "frequency {f} Hz is outside the tone grid ({}, {}] Hz",
            sc.grid.f_start, sc.grid.f_max
        )));
    }
    let p_tx = sc.radio.tx_psd_mw_hz();
    let n_bg = sc.radio.noise_mw_hz();
    let signal = p_tx * sc.cable.direct_gain(f, d)?;
    let noise = if vectored {
        n_bg * 10f64.powf(sc.r_v_db / 10.0)
    } else {
        n_bg + p_tx * sc.cable.fext_gain(f, d, sc.n_us)?
    };
    Ok(signal / noise)
}

/// Gap-approximation loading: `min(b_max, log2(1 + snr / gap))`.
pub fn bits_per_tone(snr: f64, gap_eff_db: f64, b_max: f64) -> f64 {
    let gap = 10f64.powf(gap_eff_db / 10.0);
    (1.0 + snr.max(0.0) / gap).log2().min(b_max)
}

#[derive(Debug, Clone, Copy)]
struct ToneTerm {
    /// Natural-log power attenuation per metre.
    alpha_per_m: f64,
    /// FEXT coupling per metre of length; zero on vectored tones.
    fext_per_m: f64,
}

/// Rate evaluator for one operator, precomputed once per scenario.
///
/// Only the distance varies between calls, so all frequency-dependent
/// factors are hoisted out of the per-distance loop.
#[derive(Debug, Clone)]
pub struct OperatorLink {
    legacy: Vec<ToneTerm>,
    legacy_vectored: bool,
    legacy_share: f64,
    extension: Vec<ToneTerm>,
    extension_vectored: bool,
    extension_share: f64,
    p_tx: f64,
    noise_plain: f64,
    noise_vectored: f64,
    gap_lin: f64,
    b_max: f64,
    integer_bits: bool,
    mbps_per_bit: f64,
}

impl OperatorLink {
    pub fn new(sc: &LinkScenario, op: usize) -> Result<Self> {
        sc.validate()?;
        if op >= sc.n_op {
            return Err(SimError::domain(format!(
                "operator {op} out of range for {} operators",
                sc.n_op
            )));
        }
        let (legacy_tones, ext_tones) = match (&sc.alloc, sc.mode) {
            (Some(alloc), Mode::Sbv) => {
                let t = tones_for_operator(&sc.grid, &sc.plan, alloc, op)?;
                (t.legacy_ds_shared, t.extension_owned)
            }
            _ => (legacy_downstream_tones(&sc.grid, &sc.plan), extension_tones(&sc.grid)),
        };
        let n_op = sc.n_op as f64;
        let (legacy_vectored, legacy_share, extension_vectored, extension_share) = match sc.mode {
            Mode::Nv => (false, 1.0 / n_op, false, 1.0 / n_op),
            Mode::Sbv => (false, 1.0 / n_op, true, 1.0),
            Mode::FullVector => (true, 1.0, true, 1.0),
        };
        let terms = |tones: &[u64], vectored: bool| -> Result<Vec<ToneTerm>> {
            tones
                .iter()
                .map(|&k| {
                    let f = sc.grid.frequency(k);
                    sc.cable.check_frequency(f)?;
                    Ok(ToneTerm {
                        alpha_per_m: sc.cable.loss_db_per_m(f) * std::f64::consts::LN_10 / 10.0,
                        fext_per_m: if vectored {
                            0.0
                        } else {
                            sc.cable.fext_coupling_per_m(f, sc.n_us)
                        },
                    })
                })
                .collect()
        };
        let noise_plain = sc.radio.noise_mw_hz();
        Ok(OperatorLink {
            legacy: terms(&legacy_tones, legacy_vectored)?,
            legacy_vectored,
            legacy_share,
            extension: terms(&ext_tones, extension_vectored)?,
            extension_vectored,
            extension_share,
            p_tx: sc.radio.tx_psd_mw_hz(),
            noise_plain,
            noise_vectored: noise_plain * 10f64.powf(sc.r_v_db / 10.0),
            gap_lin: 10f64.powf(sc.radio.gap_eff_db() / 10.0),
            b_max: sc.radio.b_max,
            integer_bits: sc.radio.integer_bits,
            mbps_per_bit: sc.radio.f_sym / 1.0e6,
        })
    }

    fn band_bits(&self, terms: &[ToneTerm], vectored: bool, d: f64) -> f64 {
        let mut total = 0.0;
        for t in terms {
            let signal = self.p_tx * (-t.alpha_per_m * d).exp();
            let snr = if vectored {
                signal / self.noise_vectored
            } else {
                signal / (self.noise_plain + signal * t.fext_per_m * d)
            };
            let mut bits = (1.0 + snr / self.gap_lin).log2().min(self.b_max);
            if self.integer_bits {
                bits = bits.floor();
            }
            total += bits;
        }
        total
    }

    pub fn rate_at(&self, d: f64) -> Result<RateResult> {
        if !(d.is_finite() && d >= 0.0) {
            return Err(SimError::domain(format!("distance must be >= 0 m, got {d}")));
        }
        let legacy = self.band_bits(&self.legacy, self.legacy_vectored, d) * self.mbps_per_bit
            * self.legacy_share;
        let extension = self.band_bits(&self.extension, self.extension_vectored, d)
            * self.mbps_per_bit
            * self.extension_share;
        Ok(RateResult {
            aggregate: legacy + extension,
            legacy,
            extension,
        })
    }

    pub fn extension_tone_count(&self) -> usize {
        self.extension.len()
    }
}

/// Downstream rate of operator `op` at distance `d` metres.
pub fn operator_rate(sc: &LinkScenario, op: usize, d: f64) -> Result<RateResult> {
    OperatorLink::new(sc, op)?.rate_at(d)
}

/// One point of a rate sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Distance in metres or `f_max` in Hz, depending on the sweep.
    pub x: f64,
    pub operator: usize,
    pub mode: Mode,
    pub rate: RateResult,
}

/// Rate of every operator versus `f_max` at a fixed distance, for each
/// requested mode. Rows are ordered by mode, operator, then `f_max`.
pub fn sweep_fmax(template: &LinkScenario, d: f64, f_max_list: &[f64], modes: &[Mode]) -> Result<Vec<SweepPoint>> {
    if f_max_list.is_empty() {
        return Err(SimError::domain("f_max list is empty"));
    }
    if f_max_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SimError::domain("f_max list must be strictly ascending"));
    }
    let mut jobs = Vec::new();
    for &mode in modes {
        for op in 0..template.n_op {
            for &f_max in f_max_list {
                jobs.push((mode, op, f_max));
            }
        }
    }
    jobs.par_iter()
        .map(|&(mode, op, f_max)| {
            let sc = template.with_f_max(f_max)?.with_mode(mode)?;
            Ok(SweepPoint {
                x: f_max,
                operator: op,
                mode,
                rate: operator_rate(&sc, op, d)?,
            })
        })
        .collect()
}

/// Rate of operator `op` at each distance, in input order.
pub fn sweep_distance(sc: &LinkScenario, op: usize, distances: &[f64]) -> Result<Vec<SweepPoint>> {
    if distances.is_empty() {
        return Err(SimError::domain("distance list is empty"));
    }
    let link = OperatorLink::new(sc, op)?;
    distances
        .par_iter()
        .map(|&d| {
            Ok(SweepPoint {
                x: d,
                operator: op,
                mode: sc.mode,
                rate: link.rate_at(d)?,
            })
        })
        .collect()
}

/// Formats like C's `%.6g`.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV export, header `x,operator,mode,rate_mbps,legacy_mbps,extension_mbps`.
pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("x,operator,mode,rate_mbps,legacy_mbps,extension_mbps\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_sig6(p.x),
            p.operator,
            p.mode,
            format_sig6(p.rate.aggregate),
            format_sig6(p.rate.legacy),
            format_sig6(p.rate.extension),
        ));
    }
    out
}
