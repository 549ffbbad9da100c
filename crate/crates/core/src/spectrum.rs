//! Tone grid, legacy 17a band plan and the two-level sub-band partition.
//!
//! Tone `k` sits at `k·Δf` and belongs to a frequency interval `(lo, hi]`.
//! Everything at or below [`LEGACY_EDGE_HZ`] follows the 17a band plan and
//! is shared by all operators without vectoring. Above it the spectrum is
//! downstream-only and is cut into blocks, each owned by one operator.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, SimError};

/// Upper edge of the legacy 17a region (tone 4096 on the 4.3125 kHz grid).
pub const LEGACY_EDGE_HZ: f64 = 17.664e6;
pub const DEFAULT_TONE_SPACING_HZ: f64 = 4312.5;
pub const DEFAULT_BLOCK_WIDTH_HZ: f64 = 5.0e6;
/// Lower edge of the 17a plan (bottom of US0).
pub const DEFAULT_F_START_HZ: f64 = 25.0e3;

// Relative slack used when mapping frequencies onto tone indices.
const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Downstream,
    Upstream,
}

/// DMT tone grid between `f_start` (exclusive) and `f_max` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneGrid {
    pub delta_f: f64,
    pub f_start: f64,
    pub f_max: f64,
}

impl ToneGrid {
    pub fn new(delta_f: f64, f_start: f64, f_max: f64) -> Result<Self> {
        if !(delta_f.is_finite() && delta_f > 0.0) {
            return Err(SimError::validation("delta_f", "tone spacing must be > 0"));
        }
        if !(f_start.is_finite() && f_start >= 0.0 && f_max.is_finite() && f_start < f_max) {
            return Err(SimError::validation(
                "f_max_hz",
                format!("need 0 <= f_start < f_max, got f_start={f_start}, f_max={f_max}"),
            ));
        }
        let grid = ToneGrid {
            delta_f,
            f_start,
            f_max,
        };
        if grid.tone_count() == 0 {
            return Err(SimError::validation("f_max_hz", "grid contains no tones"));
        }
        Ok(grid)
    }

    /// Standard 4.3125 kHz grid from the bottom of the 17a plan up to `f_max`.
    pub fn standard(f_max: f64) -> Result<Self> {
        Self::new(DEFAULT_TONE_SPACING_HZ, DEFAULT_F_START_HZ, f_max)
    }

    /// Smallest tone index strictly above `f`.
    fn first_above(&self, f: f64) -> u64 {
        let x = f / self.delta_f;
        let fl = (x + GRID_EPS * x.abs().max(1.0)).floor();
        fl as u64 + 1
    }

    /// Largest tone index at or below `f`.
    fn last_at_or_below(&self, f: f64) -> Option<u64> {
        let x = f / self.delta_f;
        let fl = (x + GRID_EPS * x.abs().max(1.0)).floor();
        (fl >= 1.0).then_some(fl as u64)
    }

    /// Tone indices inside `(lo, hi]` clipped to the grid.
    pub fn tones_in(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<u64> {
        let lo = lo.max(self.f_start);
        let hi = hi.min(self.f_max);
        let first = self.first_above(lo);
        match self.last_at_or_below(hi) {
            Some(last) if last >= first => first..=last,
            #[allow(clippy::reversed_empty_ranges)]
            _ => 1..=0,
        }
    }

    pub fn tone_count(&self) -> usize {
        let r = self.tones_in(self.f_start, self.f_max);
        r.count()
    }

    pub fn frequency(&self, tone: u64) -> f64 {
        tone as f64 * self.delta_f
    }

    pub fn contains(&self, f: f64) -> bool {
        f > self.f_start && f <= self.f_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub f_lo: f64,
    pub f_hi: f64,
    pub direction: Direction,
}

/// Where a frequency falls in the two-level plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToneClass {
    Legacy(Direction),
    /// Above the legacy edge, downstream only.
    Extension,
}

/// Legacy band plan, sorted and gap-free up to [`LEGACY_EDGE_HZ`].
#[derive(Debug, Clone, PartialEq)]
pub struct BandPlan {
    bands: Vec<Band>,
}

impl BandPlan {
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        if bands.is_empty() {
            return Err(SimError::validation("band_plan", "no bands"));
        }
        for b in &bands {
            if !(b.f_lo < b.f_hi) {
                return Err(SimError::validation("band_plan", format!("empty band {b:?}")));
            }
        }
        for pair in bands.windows(2) {
            if pair[0].f_hi != pair[1].f_lo {
                return Err(SimError::validation(
                    "band_plan",
                    format!("bands must be sorted and contiguous, {:?} then {:?}", pair[0], pair[1]),
                ));
            }
        }
        if bands.last().map(|b| b.f_hi) != Some(LEGACY_EDGE_HZ) {
            return Err(SimError::validation("band_plan", "legacy plan must end at 17.664 MHz"));
        }
        Ok(BandPlan { bands })
    }

    /// 998ADE17-style 17a plan: US0, DS1, US1, DS2, US2, DS3.
    pub fn vdsl2_17a() -> Self {
        use Direction::*;
        let edges = [0.025e6, 0.138e6, 3.75e6, 5.2e6, 8.5e6, 12.0e6, LEGACY_EDGE_HZ];
        let dirs = [Upstream, Downstream, Upstream, Downstream, Upstream, Downstream];
        let bands = edges
            .windows(2)
            .zip(dirs)
            .map(|(e, direction)| Band {
                f_lo: e[0],
                f_hi: e[1],
                direction,
            })
            .collect();
        BandPlan::new(bands).expect("built-in plan is valid")
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn f_start(&self) -> f64 {
        self.bands[0].f_lo
    }

    pub fn downstream_bands(&self) -> impl Iterator<Item = &Band> {
        self.bands.iter().filter(|b| b.direction == Direction::Downstream)
    }

    /// Classifies `f` using `(lo, hi]` membership. `None` at or below the
    /// plan's lower edge.
    pub fn classify(&self, f: f64) -> Option<ToneClass> {
        if f > LEGACY_EDGE_HZ {
            return Some(ToneClass::Extension);
        }
        self.bands
            .iter()
            .find(|b| f > b.f_lo && f <= b.f_hi)
            .map(|b| ToneClass::Legacy(b.direction))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AllocationOrder {
    /// Block `i` goes to operator `i mod n`.
    Linear,
    /// Boustrophedon: 0..n-1, then n-1..0, and so on.
    Snake,
}

impl FromStr for AllocationOrder {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LINEAR" => Ok(AllocationOrder::Linear),
            "SNAKE" => Ok(AllocationOrder::Snake),
            _ => Err(SimError::validation("order", format!("expected LINEAR or SNAKE, got `{s}`"))),
        }
    }
}

impl fmt::Display for AllocationOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AllocationOrder::Linear => "LINEAR",
            AllocationOrder::Snake => "SNAKE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub f_lo: f64,
    pub f_hi: f64,
    pub owner: usize,
}

impl Block {
    pub fn width(&self) -> f64 {
        self.f_hi - self.f_lo
    }
}

/// Per-operator ownership of the extension band `(17.664 MHz, f_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBandAllocation {
    pub n_op: usize,
    pub f_max: f64,
    pub width_nominal: f64,
    pub order: AllocationOrder,
    pub blocks: Vec<Block>,
}

fn owner_of(index: usize, n_op: usize, order: AllocationOrder) -> usize {
    match order {
        AllocationOrder::Linear => index % n_op,
        AllocationOrder::Snake => {
            let (round, pos) = (index / n_op, index % n_op);
            if round % 2 == 0 {
                pos
            } else {
                n_op - 1 - pos
            }
        }
    }
}

/// Tiles `(17.664 MHz, f_max]` into `width`-wide blocks (the last one may be
/// shorter) and assigns owners in `order`.
pub fn allocate_subbands(
    n_op: usize,
    f_max: f64,
    width: f64,
    order: AllocationOrder,
) -> Result<SubBandAllocation> {
    if n_op == 0 {
        return Err(SimError::validation("n_op", "must be >= 1"));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(SimError::validation("width_hz", "must be > 0"));
    }
    if !(f_max.is_finite() && f_max > LEGACY_EDGE_HZ) {
        return Err(SimError::domain(format!(
            "f_max {f_max} Hz leaves no spectrum above {LEGACY_EDGE_HZ} Hz to allocate"
        )));
    }
    let span = f_max - LEGACY_EDGE_HZ;
    let count = ((span / width) - GRID_EPS).ceil().max(1.0) as usize;
    let blocks = (0..count)
        .map(|i| {
            let f_lo = LEGACY_EDGE_HZ + i as f64 * width;
            let f_hi = if i + 1 == count {
                f_max
            } else {
                LEGACY_EDGE_HZ + (i + 1) as f64 * width
            };
            Block {
                f_lo,
                f_hi,
                owner: owner_of(i, n_op, order),
            }
        })
        .collect();
    Ok(SubBandAllocation {
        n_op,
        f_max,
        width_nominal: width,
        order,
        blocks,
    })
}

impl SubBandAllocation {
    /// Total extension bandwidth owned by `op`, Hz.
    pub fn bandwidth_of(&self, op: usize) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.owner == op)
            .map(Block::width)
            .sum()
    }

    /// Owner of the highest-frequency block.
    pub fn top_block_owner(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.owner)
    }

    /// CSV export, header `block_index,f_lo_hz,f_hi_hz,owner`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("block_index,f_lo_hz,f_hi_hz,owner\n");
        for (i, b) in self.blocks.iter().enumerate() {
            out.push_str(&format!("{i},{},{},{}\n", b.f_lo, b.f_hi, b.owner));
        }
        out
    }
}

/// Tone indices an operator transmits on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorTones {
    /// Downstream tones at or below the legacy edge; identical for everyone.
    pub legacy_ds_shared: Vec<u64>,
    /// Extension tones inside the blocks this operator owns.
    pub extension_owned: Vec<u64>,
}

/// All downstream legacy tones on `grid`.
pub fn legacy_downstream_tones(grid: &ToneGrid, plan: &BandPlan) -> Vec<u64> {
    plan.downstream_bands()
        .flat_map(|b| grid.tones_in(b.f_lo, b.f_hi))
        .collect()
}

/// Every extension tone on `grid`, regardless of ownership.
pub fn extension_tones(grid: &ToneGrid) -> Vec<u64> {
    grid.tones_in(LEGACY_EDGE_HZ, grid.f_max).collect()
}

pub fn tones_for_operator(
    grid: &ToneGrid,
    plan: &BandPlan,
    alloc: &SubBandAllocation,
    op: usize,
) -> Result<OperatorTones> {
    if op >= alloc.n_op {
        return Err(SimError::domain(format!(
            "operator {op} out of range for {} operators",
            alloc.n_op
        )));
    }
    let extension_owned = alloc
        .blocks
        .iter()
        .filter(|b| b.owner == op)
        .flat_map(|b| grid.tones_in(b.f_lo, b.f_hi))
        .collect();
    Ok(OperatorTones {
        legacy_ds_shared: legacy_downstream_tones(grid, plan),
        extension_owned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::collections::HashSet;

    const MHZ: f64 = 1e6;

    #[test]
    fn plan_17a_edges_and_ds_width() {
        let plan = BandPlan::vdsl2_17a();
        assert_eq!(plan.bands().len(), 6);
        let ds: f64 = plan.downstream_bands().map(|b| b.f_hi - b.f_lo).sum();
        assert_relative_eq!(ds, 12.576 * MHZ, max_relative = 1e-12);
        assert_eq!(plan.f_start(), 0.025 * MHZ);
        assert_eq!(plan.bands().last().unwrap().f_hi, LEGACY_EDGE_HZ);
        for w in plan.bands().windows(2) {
            assert_eq!(w[0].f_hi, w[1].f_lo);
            assert_ne!(w[0].direction, w[1].direction);
        }
    }

    #[test]
    fn plan_classifies_frequencies() {
        let plan = BandPlan::vdsl2_17a();
        assert_eq!(plan.classify(0.1 * MHZ), Some(ToneClass::Legacy(Direction::Upstream)));
        assert_eq!(plan.classify(1.0 * MHZ), Some(ToneClass::Legacy(Direction::Downstream)));
        assert_eq!(plan.classify(10.0 * MHZ), Some(ToneClass::Legacy(Direction::Upstream)));
        assert_eq!(plan.classify(LEGACY_EDGE_HZ), Some(ToneClass::Legacy(Direction::Downstream)));
        for f in [17.7, 30.0, 105.6, 199.0] {
            assert_eq!(plan.classify(f * MHZ), Some(ToneClass::Extension));
        }
        assert_eq!(plan.classify(0.01 * MHZ), None);
    }

    #[test]
    fn malformed_plans_are_rejected() {
        let band = |lo: f64, hi: f64| Band {
            f_lo: lo * MHZ,
            f_hi: hi * MHZ,
            direction: Direction::Downstream,
        };
        assert!(BandPlan::new(vec![band(1.0, 5.0), band(6.0, 17.664)]).is_err());
        assert!(BandPlan::new(vec![band(1.0, 5.0)]).is_err());
        assert!(BandPlan::new(vec![band(1.0, 17.664)]).is_ok());
    }

    #[test]
    fn allocation_examples() {
        let a = allocate_subbands(1, 35.2 * MHZ, 5.0 * MHZ, AllocationOrder::Linear).unwrap();
        assert_eq!(a.blocks.len(), 4);
        assert!(a.blocks.iter().all(|b| b.owner == 0));
        let edges: Vec<(f64, f64)> = a.blocks.iter().map(|b| (b.f_lo / MHZ, b.f_hi / MHZ)).collect();
        let expected = [(17.664, 22.664), (22.664, 27.664), (27.664, 32.664), (32.664, 35.2)];
        for (got, want) in edges.iter().zip(expected) {
            assert_relative_eq!(got.0, want.0, max_relative = 1e-12);
            assert_relative_eq!(got.1, want.1, max_relative = 1e-12);
        }

        let a = allocate_subbands(2, 35.2 * MHZ, 5.0 * MHZ, AllocationOrder::Linear).unwrap();
        let owners: Vec<usize> = a.blocks.iter().map(|b| b.owner).collect();
        assert_eq!(owners, vec![0, 1, 0, 1]);
        assert_relative_eq!(a.bandwidth_of(0), 10.0 * MHZ, max_relative = 1e-12);
        assert_relative_eq!(a.bandwidth_of(1), 7.536 * MHZ, max_relative = 1e-9);

        let a = allocate_subbands(2, 35.2 * MHZ, 5.0 * MHZ, AllocationOrder::Snake).unwrap();
        let owners: Vec<usize> = a.blocks.iter().map(|b| b.owner).collect();
        assert_eq!(owners, vec![0, 1, 1, 0]);
        assert_eq!(a.top_block_owner(), 0);

        let a = allocate_subbands(3, 35.2 * MHZ, 5.0 * MHZ, AllocationOrder::Snake).unwrap();
        let owners: Vec<usize> = a.blocks.iter().map(|b| b.owner).collect();
        assert_eq!(owners, vec![0, 1, 2, 2]);
        assert_eq!(a.top_block_owner(), 2);
    }

    #[test]
    fn allocation_errors() {
        let err = allocate_subbands(2, LEGACY_EDGE_HZ, 5.0 * MHZ, AllocationOrder::Snake).unwrap_err();
        assert!(matches!(err, SimError::Domain(_)));
        assert!(allocate_subbands(0, 35.2 * MHZ, 5.0 * MHZ, AllocationOrder::Snake).is_err());
        assert!(allocate_subbands(2, 35.2 * MHZ, 0.0, AllocationOrder::Snake).is_err());
    }

    #[test]
    fn allocation_csv() {
        let a = allocate_subbands(2, 35.2 * MHZ, 5.0 * MHZ, AllocationOrder::Snake).unwrap();
        let csv = a.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "block_index,f_lo_hz,f_hi_hz,owner");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "0,17664000,22664000,0");
        assert_eq!(lines[4], "3,32664000,35200000,0");
    }

    #[test]
    fn single_operator_owns_4066_tones_up_to_35_2() {
        let grid = ToneGrid::standard(35.2 * MHZ).unwrap();
        let plan = BandPlan::vdsl2_17a();
        let alloc = allocate_subbands(1, 35.2 * MHZ, 5.0 * MHZ, AllocationOrder::Linear).unwrap();
        let t = tones_for_operator(&grid, &plan, &alloc, 0).unwrap();
        assert_eq!(t.extension_owned.len(), 4066);
        assert_eq!(t.extension_owned.len(), extension_tones(&grid).len());
        // DS1 837 + DS2 766 + DS3 1314 tones.
        assert_eq!(t.legacy_ds_shared.len(), 837 + 766 + 1314);
        assert_eq!(*t.legacy_ds_shared.last().unwrap(), 4096);
    }

    #[test]
    fn operators_share_legacy_and_split_extension() {
        let grid = ToneGrid::standard(105.6 * MHZ).unwrap();
        let plan = BandPlan::vdsl2_17a();
        for n in [2, 3] {
            let alloc = allocate_subbands(n, 105.6 * MHZ, 5.0 * MHZ, AllocationOrder::Snake).unwrap();
            let sets: Vec<OperatorTones> =
                (0..n).map(|op| tones_for_operator(&grid, &plan, &alloc, op).unwrap()).collect();
            let mut seen = HashSet::new();
            for s in &sets {
                assert_eq!(s.legacy_ds_shared, sets[0].legacy_ds_shared);
                for t in &s.extension_owned {
                    assert!(seen.insert(*t), "tone {t} owned twice");
                }
            }
            assert_eq!(seen.len(), extension_tones(&grid).len());
            assert!(tones_for_operator(&grid, &plan, &alloc, n).is_err());
        }
    }

    #[test]
    fn grid_validation() {
        assert!(ToneGrid::new(0.0, 0.0, 1e6).is_err());
        assert!(ToneGrid::new(4312.5, 2e6, 1e6).is_err());
        assert!(ToneGrid::new(4312.5, 0.0, 1000.0).is_err());
        let g = ToneGrid::new(2.2e6, 0.0, 35.2e6).unwrap();
        assert_eq!(g.tone_count(), 16);
        assert!(g.contains(35.2e6) && !g.contains(0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn order() -> impl Strategy<Value = AllocationOrder> {
            prop_oneof![Just(AllocationOrder::Linear), Just(AllocationOrder::Snake)]
        }

        proptest! {
            #[test]
            fn allocation_tiles_and_is_fair(
                n_op in 1usize..6,
                f_max in 17.7e6f64..200e6,
                width in 0.5e6f64..20e6,
                order in order(),
            ) {
                let a = allocate_subbands(n_op, f_max, width, order).unwrap();
                prop_assert_eq!(a.blocks.len(), ((f_max - LEGACY_EDGE_HZ) / width - 1e-9).ceil().max(1.0) as usize);
                prop_assert_eq!(a.blocks[0].f_lo, LEGACY_EDGE_HZ);
                prop_assert_eq!(a.blocks.last().unwrap().f_hi, f_max);
                for w in a.blocks.windows(2) {
                    prop_assert_eq!(w[0].f_hi, w[1].f_lo);
                }
                for b in &a.blocks {
                    prop_assert!(b.owner < n_op);
                    prop_assert!(b.width() > 0.0 && b.width() <= width * (1.0 + 1e-9));
                }
                let shares: Vec<f64> = (0..n_op).map(|op| a.bandwidth_of(op)).collect();
                let total: f64 = shares.iter().sum();
                prop_assert!((total - (f_max - LEGACY_EDGE_HZ)).abs() <= 1e-6 * f_max);
                let spread = shares.iter().cloned().fold(f64::MIN, f64::max)
                    - shares.iter().cloned().fold(f64::MAX, f64::min);
                prop_assert!(spread <= width * (1.0 + 1e-9));
                prop_assert_eq!(allocate_subbands(n_op, f_max, width, order).unwrap(), a);
            }

            #[test]
            fn snake_two_operators_mirror(pairs in 1usize..12) {
                // Even block count made of full-width blocks.
                let width = 5e6;
                let f_max = LEGACY_EDGE_HZ + (2 * pairs) as f64 * width;
                let a = allocate_subbands(2, f_max, width, AllocationOrder::Snake).unwrap();
                let n = a.blocks.len();
                prop_assert_eq!(n, 2 * pairs);
                // Mirroring operator 0's positions about the centre yields
                // either its own set (n = 0 mod 4) or operator 1's (n = 2 mod 4).
                let positions = |op: usize| -> Vec<usize> {
                    (0..n).filter(|&i| a.blocks[i].owner == op).collect()
                };
                let mut mirrored0: Vec<usize> = positions(0).iter().map(|i| n - 1 - i).collect();
                mirrored0.sort_unstable();
                let expected = if n.is_multiple_of(4) { positions(0) } else { positions(1) };
                prop_assert_eq!(mirrored0, expected);
                prop_assert_eq!(positions(0).len(), positions(1).len());
            }
        }
    }
}
