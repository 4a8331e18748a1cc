use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{ceil_log2, ceil_pow2, floor_pow2};
use crate::error::{invalid, Result};
use crate::tournaments::{bracketed_final_rounds, measure_depth, DepthMeasure, Semantics};

/// Closed-form depth figures for an `m`-elimination tournament over `k` labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthBounds {
    pub k: usize,
    pub m: usize,
    pub ceil_m2: usize,
    pub floor_m2: usize,
    /// First-phase bounds, cases 1 to 4.
    pub first_phase: [f64; 4],
    /// Whole-tournament importance-depth bounds, cases 1 to 4.
    pub importance: [f64; 4],
    /// Case 4 is only claimed for `m <= 4 log2 k`.
    pub case4_applicable: bool,
    pub chernoff_d: f64,
    /// Bracketed final phase of a classical `m`-elimination, for comparison.
    pub bracketed_final_rounds: usize,
}

impl DepthBounds {
    /// Smallest applicable importance-depth case.
    pub fn min_importance(&self) -> f64 {
        let n = if self.case4_applicable { 4 } else { 3 };
        self.importance[..n].iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_first_phase(&self) -> f64 {
        let n = if self.case4_applicable { 4 } else { 3 };
        self.first_phase[..n].iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `2(m-1) + ln k + sqrt(4(m-1) ln k + (ln k)^2)`.
pub fn chernoff_depth(k: usize, m: usize) -> f64 {
    let l = (k as f64).ln();
    let e = (m as f64) - 1.0;
    2.0 * e + l + (4.0 * e * l + l * l).sqrt()
}

pub fn depth_bounds(k: usize, m: usize) -> Result<DepthBounds> {
    if k < 2 || m < 1 {
        return invalid(format!("need k >= 2 and m >= 1, got k={k} m={m}"));
    }
    let lg = ceil_log2(k) as f64;
    let mf = m as f64;
    let ln = (k as f64).ln();
    let cm = ceil_pow2(m) as f64;
    let first_phase = [
        lg + mf * (lg + 1.0).log2().ceil(),
        1.5 * lg + 3.0 * mf + 1.0,
        k.div_ceil(2) as f64 + 2.0 * mf,
        2.0 * (mf - 1.0) + ln + ln.sqrt() * (ln + 4.0 * (mf - 1.0)).sqrt(),
    ];
    let importance = [
        first_phase[0] + cm,
        1.5 * lg + 3.0 * mf + cm,
        first_phase[2] + cm,
        2.0 * mf + cm + 2.0 * ln + 2.0 * (mf * ln).sqrt(),
    ];
    Ok(DepthBounds {
        k,
        m,
        ceil_m2: ceil_pow2(m),
        floor_m2: floor_pow2(m),
        first_phase,
        importance,
        case4_applicable: mf <= 4.0 * (k as f64).log2(),
        chernoff_d: chernoff_depth(k, m),
        bracketed_final_rounds: bracketed_final_rounds(m),
    })
}

/// What a group does once it is down to its last label and nobody else can
/// still enter it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackerMode {
    /// The survivor moves on to the next group in the same round.
    Promote,
    /// The survivor stays and the group is done.
    Stay,
}

impl TrackerMode {
    pub fn for_semantics(s: Semantics) -> Self {
        match s {
            Semantics::Complete => TrackerMode::Promote,
            Semantics::Pool => TrackerMode::Stay,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelTrace {
    pub k: usize,
    pub m: usize,
    pub mode: TrackerMode,
    pub rounds: usize,
    /// Labels present in each group at the start of each round.
    pub occupancy: Vec<Vec<u64>>,
    /// Matches played by each group in each round.
    pub matches: Vec<Vec<u64>>,
}

/// Counts-only simulation of the first phase. Each round every group pairs
/// off its labels (an odd one out sits), winners stay, losers enter the next
/// group a round later and leave after the last group. Runs until no group
/// can play.
pub fn level_tracker(k: u64, m: usize, mode: TrackerMode) -> Result<LevelTrace> {
    if k < 2 || m < 1 {
        return invalid(format!("need k >= 2 and m >= 1, got k={k} m={m}"));
    }
    let mut n = vec![0u64; m];
    let mut entered = vec![0u64; m];
    let mut done = vec![false; m];
    n[0] = k;
    entered[0] = k;
    let mut occupancy = Vec::new();
    let mut matches = Vec::new();
    loop {
        if mode == TrackerMode::Promote {
            for i in 0..m {
                if !done[i] && entered[i] == k && n[i] == 1 {
                    done[i] = true;
                    n[i] = 0;
                    if i + 1 < m {
                        n[i + 1] += 1;
                        entered[i + 1] += 1;
                    }
                }
            }
            if done[m - 1] {
                break;
            }
        }
        let pairs: Vec<u64> = n.iter().map(|x| x / 2).collect();
        if pairs.iter().all(|&p| p == 0) {
            break;
        }
        occupancy.push(n.clone());
        matches.push(pairs.clone());
        for i in 0..m {
            n[i] -= pairs[i];
            if i + 1 < m {
                n[i + 1] += pairs[i];
                entered[i + 1] += pairs[i];
            }
        }
    }
    Ok(LevelTrace {
        k: k as usize,
        m,
        mode,
        rounds: matches.len(),
        occupancy,
        matches,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub k: usize,
    pub m: usize,
    pub semantics: Semantics,
    pub measured: DepthMeasure,
    pub bounds: DepthBounds,
    pub within_importance: bool,
    pub within_first_phase: bool,
}

/// Measured schedules against the closed forms for every `(k, m)` pair.
pub fn depth_grid(ks: &[usize], ms: &[usize], semantics: Semantics) -> Result<Vec<DepthRow>> {
    let cells: Vec<(usize, usize)> = ks.iter().flat_map(|&k| ms.iter().map(move |&m| (k, m))).collect();
    cells
        .par_iter()
        .map(|&(k, m)| {
            let measured = measure_depth(k, m, semantics)?;
            let bounds = depth_bounds(k, m)?;
            Ok(DepthRow {
                k,
                m,
                semantics,
                within_importance: measured.importance_depth as f64 <= bounds.min_importance() + 1e-9,
                within_first_phase: measured.first_phase_rounds as f64 <= bounds.min_first_phase() + 1e-9,
                measured,
                bounds,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerRow {
    pub k: u64,
    pub m: usize,
    pub rounds: usize,
    /// Formula at the literal `k`.
    pub chernoff_d: f64,
    /// Formula at `2^(l-1) + 1` for `k = 2^l`, the smallest label count
    /// sharing this power-of-two bracket.
    pub pessimistic_d: f64,
    pub within: bool,
}

/// Tracker rounds at `k = 2^l` for `l` in `1..=max_log2`, every
/// `m <= 4 log2 k`, checked against both evaluations of the formula.
pub fn tracker_grid(max_log2: u32, mode: TrackerMode) -> Result<Vec<TrackerRow>> {
    let cells: Vec<(u32, usize)> = (1..=max_log2)
        .flat_map(|l| (1..=4 * l as usize).map(move |m| (l, m)))
        .collect();
    cells
        .par_iter()
        .map(|&(l, m)| {
            let k = 1u64 << l;
            let trace = level_tracker(k, m, mode)?;
            let lit = chernoff_depth(k as usize, m);
            let pess = chernoff_depth((1usize << (l - 1)) + 1, m);
            Ok(TrackerRow {
                k,
                m,
                rounds: trace.rounds,
                chernoff_d: lit,
                pessimistic_d: pess,
                within: trace.rounds as f64 <= lit.min(pess) + 1e-9,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tournaments::build_schedule;
    use approx::assert_relative_eq;

    #[test]
    fn worked_values_at_eight_three() {
        let b = depth_bounds(8, 3).unwrap();
        assert_eq!(b.ceil_m2, 4);
        assert_eq!(b.floor_m2, 2);
        assert_eq!(b.importance[0], 13.0);
        assert_eq!(b.importance[1], 17.5);
        assert_eq!(b.importance[2], 14.0);
        assert_relative_eq!(b.chernoff_d, 10.657608146195502, epsilon = 1e-12);
        assert_eq!(b.bracketed_final_rounds, 3);
        assert!(b.case4_applicable);
    }

    #[test]
    fn tracker_single_tournament() {
        let t = level_tracker(8, 1, TrackerMode::Promote).unwrap();
        assert_eq!(t.rounds, 3);
        assert_eq!(t.occupancy.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![8, 4, 2]);
        assert_eq!(t.matches.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![4, 2, 1]);
    }

    #[test]
    fn tracker_small_and_large() {
        for mode in [TrackerMode::Promote, TrackerMode::Stay] {
            assert!((level_tracker(8, 3, mode).unwrap().rounds as f64) <= chernoff_depth(8, 3));
            let big = level_tracker(1 << 16, 4, mode).unwrap();
            let l = (65536f64).ln();
            assert!((big.rounds as f64) <= 6.0 + l + l.sqrt() * (l + 12.0).sqrt());
        }
    }

    #[test]
    fn tracker_matches_engine_occupancy() {
        for sem in [Semantics::Complete, Semantics::Pool] {
            for k in [2usize, 3, 5, 8, 13, 16, 31] {
                for m in 1..=5 {
                    let t = level_tracker(k as u64, m, TrackerMode::for_semantics(sem)).unwrap();
                    let s = build_schedule(k, m, sem).unwrap();
                    let occ: Vec<Vec<u64>> = s
                        .occupancy()
                        .into_iter()
                        .map(|r| r.into_iter().map(|v| v as u64).collect())
                        .collect();
                    assert_eq!(t.matches, occ, "{sem:?} k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn small_grids_stay_within_bounds() {
        for row in depth_grid(&[4, 8, 16], &[1, 2, 3, 4], Semantics::Complete).unwrap() {
            assert!(row.within_importance && row.within_first_phase, "{row:?}");
        }
        for row in tracker_grid(8, TrackerMode::Promote).unwrap() {
            assert!(row.within, "{row:?}");
        }
    }
}
