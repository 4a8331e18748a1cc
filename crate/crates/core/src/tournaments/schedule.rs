use serde::{Deserialize, Serialize};

use super::engine::{Engine, PendingMatch, Phase};
use super::{Semantics, TournamentConfig};
use crate::domain::Side;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledMatch {
    pub a: usize,
    pub b: usize,
    pub tournament: usize,
    pub node: usize,
    pub winner: usize,
}

/// First-phase play record for one outcome sequence. Round counts and the
/// per-round group sizes do not depend on who wins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TournamentSchedule {
    pub k: usize,
    pub m: usize,
    pub semantics: Semantics,
    pub rounds: Vec<Vec<ScheduledMatch>>,
    pub losses: Vec<usize>,
    pub winners: Vec<Option<usize>>,
}

impl TournamentSchedule {
    pub fn first_phase_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Matches played by each group in each round.
    pub fn occupancy(&self) -> Vec<Vec<usize>> {
        self.rounds
            .iter()
            .map(|round| {
                let mut per = vec![0; self.m];
                for mt in round {
                    per[mt.tournament - 1] += 1;
                }
                per
            })
            .collect()
    }

    /// Labels that appear twice in one round, as `(round, label)`.
    pub fn double_plays(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (r, round) in self.rounds.iter().enumerate() {
            let mut seen = vec![false; self.k];
            for mt in round {
                for l in [mt.a, mt.b] {
                    if seen[l] {
                        out.push((r, l));
                    }
                    seen[l] = true;
                }
            }
        }
        out
    }
}

/// Schedule in which the lower label always wins.
pub fn build_schedule(k: usize, m: usize, semantics: Semantics) -> Result<TournamentSchedule> {
    build_schedule_with(k, m, semantics, |pm| Ok(if pm.a < pm.b { Side::Left } else { Side::Right }))
}

pub fn build_schedule_with<F>(k: usize, m: usize, semantics: Semantics, mut decide: F) -> Result<TournamentSchedule>
where
    F: FnMut(&PendingMatch) -> Result<Side>,
{
    let mut engine = Engine::new(k, m, semantics, false)?;
    let mut rounds: Vec<Vec<ScheduledMatch>> = Vec::new();
    while let Some(pm) = engine.next_match() {
        let Phase::First { tournament } = pm.phase else { break };
        let side = decide(&pm)?;
        engine.resolve(side);
        if rounds.len() <= pm.round {
            rounds.resize_with(pm.round + 1, Vec::new);
        }
        rounds[pm.round].push(ScheduledMatch {
            a: pm.a,
            b: pm.b,
            tournament,
            node: pm.node,
            winner: pm.winner(side),
        });
    }
    // idle rounds still count
    rounds.resize_with(engine.first_phase_rounds().expect("first phase finished"), Vec::new);
    Ok(TournamentSchedule {
        k,
        m,
        semantics,
        rounds,
        losses: engine.losses(),
        winners: engine.first_phase_winners().expect("first phase finished"),
    })
}

/// Structural depth figures of a tournament.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthMeasure {
    pub first_phase_rounds: usize,
    /// Worst-case path importance through the final tree.
    pub final_importance: usize,
    pub importance_depth: usize,
    /// Worst-case games along a final-tree path in repeated mode.
    pub final_repeated: usize,
    pub repeated_depth: usize,
}

pub fn measure_depth(k: usize, m: usize, semantics: Semantics) -> Result<DepthMeasure> {
    let schedule = build_schedule(k, m, semantics)?;
    let engine = TournamentConfig::new(k, m, semantics).engine()?;
    let ft = engine.final_tree();
    let first = schedule.first_phase_rounds();
    let imp = ft.max_path_importance() as usize;
    let rep = ft.max_path_repeated() as usize;
    Ok(DepthMeasure {
        first_phase_rounds: first,
        final_importance: imp,
        importance_depth: first + imp,
        final_repeated: rep,
        repeated_depth: first + rep,
    })
}
