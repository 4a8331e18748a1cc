use serde::{Deserialize, Serialize};

use crate::domain::ceil_pow2;
use crate::error::{Error, Result};
use crate::tournaments::{
    measure_depth, min_dethroning_cost, run_tournament, AdversaryModel, DethroneResult, Ratio, SearchOptions,
    Semantics, TournamentConfig, Truth,
};

/// `2 + ⌈m⌉₂/m + k/(2m)`.
pub fn multi_bound_structural(k: usize, m: usize) -> f64 {
    let m = m as f64;
    2.0 + ceil_pow2(m as usize) as f64 / m + k as f64 / (2.0 * m)
}

/// `4 + 2 ln k / m + 2 sqrt(ln k / m)`.
pub fn multi_bound_log(k: usize, m: usize) -> f64 {
    let r = (k as f64).ln() / m as f64;
    4.0 + 2.0 * r + 2.0 * r.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryRow {
    pub adversary: AdversaryModel,
    pub winner: usize,
    pub weighted_errors: u64,
    pub ratio: Ratio,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub k: usize,
    pub m: usize,
    pub semantics: Semantics,
    pub importance_depth: usize,
    /// `None` when the search refused the instance.
    pub search: Option<DethroneResult>,
    pub search_note: Option<String>,
    /// `depth / min dethroning cost`: the worst ratio over all outcome
    /// sequences under a one-hot truth.
    pub worst_ratio: Option<Ratio>,
    pub adversaries: Vec<AdversaryRow>,
    pub bound_structural: f64,
    pub bound_log: f64,
    /// For a single tournament the ratio bound is just its depth.
    pub single_tournament_bound: Option<f64>,
}

/// Standard sweep: no adversary, full lies up to `m`, half lies, staged,
/// and a few parity pairs.
pub fn default_adversaries(k: usize, m: usize) -> Vec<AdversaryModel> {
    let mut v = vec![AdversaryModel::None];
    for b in 1..=m as u32 {
        v.push(AdversaryModel::BudgetFullLie {
            budget: b,
            tournaments: None,
        });
    }
    v.push(AdversaryModel::BudgetHalfLie { budget: m as u32 });
    v.push(AdversaryModel::Staged);
    for j in 1..k.min(4) {
        v.push(AdversaryModel::Parity { i: 0, j });
    }
    v
}

/// Measures regret ratios and prints them next to both bounds. Nothing is
/// asserted here.
pub fn ratio_report(
    k: usize,
    m: usize,
    semantics: Semantics,
    adversaries: &[AdversaryModel],
    search: Option<&SearchOptions>,
) -> Result<RatioReport> {
    let cfg = TournamentConfig::new(k, m, semantics);
    let depth = measure_depth(k, m, semantics)?.importance_depth;
    let (found, note) = match search.map(|o| min_dethroning_cost(&cfg, o)) {
        None => (None, None),
        Some(Ok(r)) => (Some(r), None),
        Some(Err(e @ Error::SearchLimit { .. })) => (None, Some(e.to_string())),
        Some(Err(e)) => return Err(e),
    };
    let worst_ratio = found.as_ref().map(|r| {
        if r.cost == 0 {
            Ratio::Unbounded
        } else {
            Ratio::Finite(depth as f64 / f64::from(r.cost))
        }
    });
    let truth = Truth::ranked(k);
    let mut rows = Vec::new();
    for adv in adversaries {
        adv.validate(k)?;
        let run = run_tournament(&cfg, &truth, adv)?;
        rows.push(AdversaryRow {
            adversary: adv.clone(),
            winner: run.winner,
            weighted_errors: run.weighted_errors,
            ratio: run.ratio.ratio,
        });
    }
    Ok(RatioReport {
        k,
        m,
        semantics,
        importance_depth: depth,
        search: found,
        search_note: note,
        worst_ratio,
        adversaries: rows,
        bound_structural: multi_bound_structural(k, m),
        bound_log: multi_bound_log(k, m),
        single_tournament_bound: (m == 1).then_some(depth as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tournaments::SearchMode;

    #[test]
    fn log_bound_near_five_and_a_half() {
        let m = (4.0 * 16f64.ln()).ceil() as usize;
        let b = multi_bound_log(16, m);
        assert!((b - 5.5).abs() < 0.1, "{b}");
    }

    #[test]
    fn structural_bound_at_eight_three() {
        assert!((multi_bound_structural(8, 3) - (2.0 + 4.0 / 3.0 + 8.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn report_for_eight_three_complete() {
        let r = ratio_report(8, 3, Semantics::Complete, &default_adversaries(8, 3), Some(&SearchOptions::default()))
            .unwrap();
        let cost = r.search.as_ref().unwrap().cost;
        assert!(cost >= 3);
        assert_eq!(r.worst_ratio, Some(Ratio::Finite(r.importance_depth as f64 / f64::from(cost))));
        assert!(r.single_tournament_bound.is_none());
        assert_eq!(r.adversaries.len(), default_adversaries(8, 3).len());
    }

    #[test]
    fn single_tournament_defers_to_depth() {
        let r = ratio_report(8, 1, Semantics::Complete, &[], Some(&SearchOptions::default())).unwrap();
        assert_eq!(r.single_tournament_bound, Some(3.0));
        assert_eq!(r.worst_ratio, Some(Ratio::Finite(3.0)));
    }

    #[test]
    fn refusal_is_reported_not_raised() {
        let opts = SearchOptions {
            mode: SearchMode::Exhaustive,
            cap: 1,
        };
        let r = ratio_report(8, 3, Semantics::Complete, &[], Some(&opts)).unwrap();
        assert!(r.search.is_none() && r.search_note.is_some());
    }
}
