use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{Engine, EngineState};
use super::TournamentConfig;
#[cfg(test)]
use super::Semantics;
use crate::domain::Side;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_SEARCH_CAP: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    /// Random outcome sequences; yields an upper bound only.
    Stochastic { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub mode: SearchMode,
    /// Exhaustive mode refuses once this many decision points were expanded.
    pub cap: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            mode: SearchMode::Exhaustive,
            cap: DEFAULT_SEARCH_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DethroneResult {
    /// Smallest weighted error total that makes a label other than the best win.
    pub cost: u32,
    /// Lowest best label achieving `cost`.
    pub best_label: usize,
    /// `false` for stochastic search, where `cost` is only an upper bound.
    pub exact: bool,
    /// Decision points expanded; depends on thread interleaving.
    pub explored: u64,
}

const INF: u32 = u32::MAX;

#[derive(Clone, Copy)]
enum Entry {
    Exact(u32),
    AtLeast(u32),
}

struct Ctx<'a> {
    best: usize,
    memo: HashMap<EngineState, Entry>,
    explored: &'a AtomicU64,
    cap: u64,
    aborted: &'a AtomicBool,
}

/// Minimum additional cost to make someone other than `best` win, if it is
/// below `budget`; `None` means at least `budget`.
fn dfs(engine: &Engine, budget: u32, ctx: &mut Ctx) -> Option<u32> {
    if budget == 0 || ctx.aborted.load(Ordering::Relaxed) {
        return None;
    }
    if engine.is_finished() {
        return (engine.champion() != Some(ctx.best)).then_some(0);
    }
    if engine.dethrone_lower_bound(ctx.best) >= budget {
        return None;
    }
    match ctx.memo.get(engine.state()) {
        Some(Entry::Exact(v)) => return (*v < budget).then_some(*v),
        Some(Entry::AtLeast(lb)) if *lb >= budget => return None,
        _ => {}
    }
    if ctx.explored.fetch_add(1, Ordering::Relaxed) >= ctx.cap {
        ctx.aborted.store(true, Ordering::Relaxed);
        return None;
    }
    let pm = engine.next_match().unwrap();
    // the free outcome first, so the bound tightens early
    let order = if pm.a == ctx.best { [Side::Left, Side::Right] } else { [Side::Right, Side::Left] };
    let mut limit = budget;
    let mut found = None;
    for side in order {
        let cost = if pm.loser(side) == ctx.best { pm.weight(side) } else { 0 };
        if cost >= limit {
            continue;
        }
        let mut child = engine.clone();
        child.resolve(side);
        if let Some(rest) = dfs(&child, limit - cost, ctx) {
            let total = cost + rest;
            limit = total;
            found = Some(total);
        }
    }
    if ctx.aborted.load(Ordering::Relaxed) {
        return None;
    }
    let entry = match found {
        Some(v) => Entry::Exact(v),
        None => Entry::AtLeast(budget),
    };
    ctx.memo.insert(engine.state().clone(), entry);
    found
}

/// Cheapest adversary, in weighted errors, that keeps the truly best label
/// from winning. The truth is one-hot, so only matches the best label loses
/// cost anything; the search minimizes over every choice of best label.
pub fn min_dethroning_cost(cfg: &TournamentConfig, opts: &SearchOptions) -> Result<DethroneResult> {
    let k = cfg.k;
    let root = cfg.engine()?;
    match opts.mode {
        SearchMode::Exhaustive => {
            let bound = AtomicU32::new(INF);
            let explored = AtomicU64::new(0);
            let aborted = AtomicBool::new(false);
            let per_label: Vec<Option<u32>> = (0..k)
                .into_par_iter()
                .map(|best| {
                    let mut ctx = Ctx {
                        best,
                        memo: HashMap::new(),
                        explored: &explored,
                        cap: opts.cap,
                        aborted: &aborted,
                    };
                    // +1 so labels tying the current best still report their value
                    let budget = bound.load(Ordering::SeqCst).saturating_add(1);
                    let v = dfs(&root, budget, &mut ctx);
                    if let Some(v) = v {
                        bound.fetch_min(v, Ordering::SeqCst);
                    }
                    v
                })
                .collect();
            let explored = explored.load(Ordering::SeqCst);
            if aborted.load(Ordering::SeqCst) {
                return Err(Error::SearchLimit { explored, cap: opts.cap });
            }
            let cost = bound.load(Ordering::SeqCst);
            if cost == INF {
                return invalid("no outcome sequence dethrones the best label");
            }
            let best_label = per_label.iter().position(|v| *v == Some(cost)).unwrap();
            Ok(DethroneResult {
                cost,
                best_label,
                exact: true,
                explored,
            })
        }
        SearchMode::Stochastic { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best = (INF, 0);
            for s in 0..samples {
                let label = (s % k as u64) as usize;
                let mut e = root.clone();
                let mut cost = 0u32;
                while let Some(pm) = e.next_match() {
                    let side = if rng.gen::<bool>() { Side::Left } else { Side::Right };
                    if pm.loser(side) == label {
                        cost += pm.weight(side);
                    }
                    e.resolve(side);
                }
                if e.champion() != Some(label) && (cost, label) < best {
                    best = (cost, label);
                }
            }
            if best.0 == INF {
                return invalid("no sampled outcome sequence dethroned the best label");
            }
            Ok(DethroneResult {
                cost: best.0,
                best_label: best.1,
                exact: false,
                explored: samples,
            })
        }
    }
}
