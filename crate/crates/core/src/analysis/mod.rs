//! Executable checks for the regret inequalities, depth formulas and worked
//! examples, plus regret instrumentation.

mod depth;
mod inconsistency;
mod ratio;
mod regret;

pub use depth::{
    chernoff_depth, depth_bounds, depth_grid, level_tracker, tracker_grid, DepthBounds, DepthRow, LevelTrace,
    TrackerMode, TrackerRow,
};
pub use inconsistency::{inconsistency_demo, InconsistencyOutcome, Population};
pub use ratio::{default_adversaries, multi_bound_log, multi_bound_structural, ratio_report, AdversaryRow, RatioReport};
pub use regret::{
    check_filter_theorems, filter_sweep, lemma1_check, lemma1_check_on, lemma1_sweep, tightness_example, CheckSummary,
    CostDistribution, Counterexample, FilterCheck, FilterSweepConfig, FilterSweepReport, Lemma1Outcome, Lemma1Sweep,
    NodeRegret, RegretReport, Tightness, CHECK_TOLERANCE,
};
