//! Independent reference implementation for the per-tone rate sum.
//!
//! Deliberately shares nothing with the library beyond plain numbers: the
//! band plan, the block allocation and every channel formula are written
//! out again here in the most literal form.

#![allow(dead_code)]

use rand::Rng;
use sbvsim::channel::CableModelParams;
use sbvsim::linkrate::{LinkScenario, Mode, RadioParams};
use sbvsim::spectrum::{AllocationOrder, ToneGrid};

pub const EDGE_HZ: f64 = 17.664e6;

/// Downstream intervals `(lo, hi]` of the 17a plan, Hz.
pub const DS_BANDS: [(f64, f64); 3] = [(0.138e6, 3.75e6), (5.2e6, 8.5e6), (12.0e6, 17.664e6)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OMode {
    Nv,
    Sbv,
    Full,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleCase {
    pub mode: OMode,
    pub n_op: usize,
    pub op: usize,
    pub n_us: u32,
    pub r_v_db: f64,
    pub d: f64,
    pub snake: bool,
    pub k1: f64,
    pub k2: f64,
    pub kx_db: f64,
    pub psd_dbm: f64,
    pub noise_dbm: f64,
    pub gap_db: f64,
    pub b_max: f64,
    pub f_sym: f64,
    pub delta_f: f64,
    pub f_start: f64,
    pub f_max: f64,
    pub width: f64,
}

fn owner(block: usize, n_op: usize, snake: bool) -> usize {
    let round = block / n_op;
    let pos = block % n_op;
    if snake && round % 2 == 1 {
        n_op - 1 - pos
    } else {
        pos
    }
}

fn block_of(f: f64, c: &OracleCase) -> usize {
    // Block i covers (EDGE + i*w, EDGE + (i+1)*w].
    let mut i = 0;
    while f > EDGE_HZ + (i as f64 + 1.0) * c.width {
        i += 1;
    }
    i
}

fn snr(f: f64, c: &OracleCase, vectored: bool) -> f64 {
    let f_mhz = f / 1e6;
    let il_db = (c.k1 * f_mhz.sqrt() + c.k2 * f_mhz) * c.d / 1000.0;
    let h2 = 10f64.powf(-il_db / 10.0);
    let p = 10f64.powf(c.psd_dbm / 10.0);
    let n = 10f64.powf(c.noise_dbm / 10.0);
    let s = p * h2;
    if vectored {
        s / (n * 10f64.powf(c.r_v_db / 10.0))
    } else {
        let x = h2
            * 10f64.powf(c.kx_db / 10.0)
            * (f64::from(c.n_us) / 49.0).powf(0.6)
            * (f / 1e6).powi(2)
            * (c.d / 1000.0);
        s / (n + p * x)
    }
}

fn bits(snr: f64, c: &OracleCase) -> f64 {
    let g = 10f64.powf(c.gap_db / 10.0);
    let b = (1.0 + snr / g).ln() / 2f64.ln();
    if b > c.b_max {
        c.b_max
    } else {
        b
    }
}

/// `(legacy, extension)` rates in Mbit/s.
pub fn oracle_rate(c: &OracleCase) -> (f64, f64) {
    let mut legacy = 0.0;
    let mut extension = 0.0;
    let mut k = 1u64;
    loop {
        let f = k as f64 * c.delta_f;
        if f > c.f_max * (1.0 + 1e-12) {
            break;
        }
        k += 1;
        if f <= c.f_start {
            continue;
        }
        let in_ds = DS_BANDS.iter().any(|&(lo, hi)| f > lo && f <= hi * (1.0 + 1e-12));
        if f <= EDGE_HZ * (1.0 + 1e-12) {
            if !in_ds {
                continue;
            }
            let vectored = c.mode == OMode::Full;
            let share = if c.mode == OMode::Full { 1.0 } else { c.n_op as f64 };
            legacy += bits(snr(f, c, vectored), c) / share;
        } else {
            match c.mode {
                OMode::Nv => extension += bits(snr(f, c, false), c) / c.n_op as f64,
                OMode::Full => extension += bits(snr(f, c, true), c),
                OMode::Sbv => {
                    if owner(block_of(f, c), c.n_op, c.snake) == c.op {
                        extension += bits(snr(f, c, true), c);
                    }
                }
            }
        }
    }
    (legacy * c.f_sym / 1e6, extension * c.f_sym / 1e6)
}

/// Random scenario on the 16-tone toy grid (2.2 MHz spacing up to 35.2 MHz).
pub fn random_toy_case<R: Rng>(rng: &mut R) -> OracleCase {
    let mode = [OMode::Nv, OMode::Sbv, OMode::Full][rng.gen_range(0..3)];
    let n_op = if mode == OMode::Full { 1 } else { rng.gen_range(1..=4) };
    OracleCase {
        mode,
        n_op,
        op: rng.gen_range(0..n_op),
        n_us: rng.gen_range(0..=48),
        r_v_db: rng.gen_range(0.0..20.0),
        d: rng.gen_range(0.0..1500.0),
        snake: rng.gen_bool(0.5),
        k1: rng.gen_range(5.0..20.0),
        k2: rng.gen_range(0.0..0.5),
        kx_db: rng.gen_range(-40.0..-10.0),
        psd_dbm: rng.gen_range(-80.0..-50.0),
        noise_dbm: rng.gen_range(-150.0..-120.0),
        gap_db: 12.75,
        b_max: rng.gen_range(8..=15) as f64,
        f_sym: 4000.0,
        delta_f: 2.2e6,
        f_start: 0.0,
        f_max: 35.2e6,
        width: 5e6,
    }
}

/// The same case expressed through the library's types.
pub fn to_scenario(c: &OracleCase) -> LinkScenario {
    let mode = match c.mode {
        OMode::Nv => Mode::Nv,
        OMode::Sbv => Mode::Sbv,
        OMode::Full => Mode::FullVector,
    };
    let radio = RadioParams {
        psd_tx_dbm_hz: c.psd_dbm,
        noise_bg_dbm_hz: c.noise_dbm,
        gamma_db: c.gap_db,
        margin_db: 0.0,
        coding_gain_db: 0.0,
        b_max: c.b_max,
        f_sym: c.f_sym,
        integer_bits: false,
    };
    let cable = CableModelParams::new(c.k1, c.k2, c.kx_db, 1e6, 1000.0, 200e6).unwrap();
    let grid = ToneGrid::new(c.delta_f, c.f_start, c.f_max).unwrap();
    let order = if c.snake { AllocationOrder::Snake } else { AllocationOrder::Linear };
    LinkScenario::build(mode, c.n_op, c.n_us, c.r_v_db, radio, cable, grid, c.width, order).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Worst relative error over `n` seeded random toy scenarios.
pub fn oracle_worst_error(n: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let c = random_toy_case(&mut rng);
        let sc = to_scenario(&c);
        let got = sbvsim::linkrate::operator_rate(&sc, c.op, c.d).unwrap();
        let (legacy, extension) = oracle_rate(&c);
        worst = worst
            .max(rel_err(got.legacy, legacy))
            .max(rel_err(got.extension, extension))
            .max(rel_err(got.aggregate, legacy + extension));
    }
    worst
}
