//! m-elimination error-correcting tournaments: first-phase scheduling under
//! two semantics, the charge-weighted final phase, adversarial comparators
//! and exhaustive adversary search.

mod adversary;
mod engine;
mod final_tree;
mod schedule;
mod search;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use adversary::{
    evaluate_regret_ratio, parity_adversary_run, run_tournament, write_transcript, AdversaryModel, MatchRecord,
    ParityReport, ParityTarget, Ratio, RatioOutcome, RunOutcome, Truth,
};
pub use engine::{Engine, EngineState, Phase, PendingMatch};
pub use final_tree::{bracketed_final_rounds, ChargedFinalTree};
pub use schedule::{build_schedule, build_schedule_with, measure_depth, DepthMeasure, ScheduledMatch, TournamentSchedule};
pub use search::{min_dethroning_cost, DethroneResult, SearchMode, SearchOptions, DEFAULT_SEARCH_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    Complete,
    Pool,
}

impl Semantics {
    pub fn name(self) -> &'static str {
        match self {
            Semantics::Complete => "complete",
            Semantics::Pool => "pool",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Semantics::Complete),
            "pool" => Ok(Semantics::Pool),
            other => invalid(format!("unknown semantics '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TournamentConfig {
    pub k: usize,
    pub m: usize,
    pub semantics: Semantics,
    /// Play final-phase comparisons as repeated unit-weight games.
    pub repeated: bool,
}

impl TournamentConfig {
    pub fn new(k: usize, m: usize, semantics: Semantics) -> Self {
        Self {
            k,
            m,
            semantics,
            repeated: false,
        }
    }

    pub fn repeated(mut self) -> Self {
        self.repeated = true;
        self
    }

    pub fn engine(&self) -> Result<Engine> {
        Engine::new(self.k, self.m, self.semantics, self.repeated)
    }
}
