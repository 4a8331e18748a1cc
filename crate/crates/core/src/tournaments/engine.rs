use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::final_tree::ChargedFinalTree;
use super::Semantics;
use crate::domain::{Child, Side};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// First-phase tournament, numbered from 1.
    First { tournament: usize },
    Final,
}

/// A comparison waiting for an outcome. `a` is the left participant: the
/// lower label in the first phase, the left subtree's label in the final.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PendingMatch {
    pub round: usize,
    pub phase: Phase,
    /// Match counter within a first-phase tournament, or final-tree node id.
    pub node: usize,
    pub a: usize,
    pub b: usize,
    /// Importance charged if `a` advances.
    pub weight_a: u32,
    /// Importance charged if `b` advances.
    pub weight_b: u32,
    /// Game index inside a repeated-match series; 0 otherwise.
    pub game: u32,
}

impl PendingMatch {
    pub fn winner(&self, side: Side) -> usize {
        match side {
            Side::Left => self.a,
            Side::Right => self.b,
        }
    }

    pub fn loser(&self, side: Side) -> usize {
        self.winner(side.flip())
    }

    pub fn weight(&self, side: Side) -> u32 {
        match side {
            Side::Left => self.weight_a,
            Side::Right => self.weight_b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct LabelState {
    /// Tournament (complete) or loss pool (pool) the label currently plays in.
    group: Option<u16>,
    /// First round in which the label may play.
    avail: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Slot {
    Label(u32),
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct FinalState {
    slots: Vec<Option<u32>>,
    values: Vec<Option<u32>>,
    /// Next final-tree node to resolve; nodes are resolved in id order.
    next: usize,
    series: (u32, u32),
    /// Round after which each node's value is known.
    ready: Vec<u32>,
    /// First round in which each label is free again.
    busy: Vec<u32>,
}

/// Mutable part of an engine. Hashable so search can memoize on it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EngineState {
    round: u32,
    labels: Vec<LabelState>,
    losses: Vec<u16>,
    entered: Vec<u32>,
    winners: Vec<Option<Slot>>,
    matches: Vec<(u32, u32, u16, u32)>,
    cursor: usize,
    node_counter: Vec<u32>,
    first_rounds: Option<u32>,
    final_state: Option<FinalState>,
    champion: Option<Option<u32>>,
}

#[derive(Debug)]
struct Static {
    k: usize,
    m: usize,
    semantics: Semantics,
    repeated: bool,
    final_tree: ChargedFinalTree,
}

/// Round-by-round executor for an m-elimination tournament. The engine only
/// schedules; outcomes are fed back through [`Engine::resolve`].
///
/// First phase, both semantics: in every round each group pairs its
/// available labels in index order, and when the count is odd the lowest
/// index sits out. Under `complete` semantics group `i` is tournament `i`,
/// every label plays every tournament, a loser enters the next tournament
/// in the following round, and a tournament's last label is promoted into
/// the next one as soon as all k labels have entered it. Under `pool`
/// semantics group `j` holds the labels with `j` losses; a pool's last label
/// stays put as that pool's winner, and `m` losses eliminate a label.
#[derive(Clone, Debug)]
pub struct Engine {
    st: Arc<Static>,
    state: EngineState,
}

impl Engine {
    pub fn new(k: usize, m: usize, semantics: Semantics, repeated: bool) -> Result<Self> {
        if k < 2 {
            return invalid(format!("k must be at least 2, got {k}"));
        }
        if m < 1 {
            return invalid("m must be at least 1");
        }
        if m > u16::MAX as usize || k > u32::MAX as usize / 2 {
            return invalid("tournament too large");
        }
        let final_tree = ChargedFinalTree::new(m);
        let mut entered = vec![0; m];
        entered[0] = k as u32;
        let mut engine = Self {
            st: Arc::new(Static {
                k,
                m,
                semantics,
                repeated,
                final_tree,
            }),
            state: EngineState {
                round: 0,
                labels: vec![LabelState { group: Some(0), avail: 0 }; k],
                losses: vec![0; k],
                entered,
                winners: vec![None; m],
                matches: Vec::new(),
                cursor: 0,
                node_counter: vec![0; m],
                first_rounds: None,
                final_state: None,
                champion: None,
            },
        };
        engine.start_round();
        Ok(engine)
    }

    pub fn k(&self) -> usize {
        self.st.k
    }

    pub fn m(&self) -> usize {
        self.st.m
    }

    pub fn semantics(&self) -> Semantics {
        self.st.semantics
    }

    pub fn repeated(&self) -> bool {
        self.st.repeated
    }

    pub fn final_tree(&self) -> &ChargedFinalTree {
        &self.st.final_tree
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn losses(&self) -> Vec<usize> {
        self.state.losses.iter().map(|&l| l as usize).collect()
    }

    /// Number of first-phase rounds, once the first phase is over.
    pub fn first_phase_rounds(&self) -> Option<usize> {
        self.state.first_rounds.map(|r| r as usize)
    }

    /// First-phase winners `w_1..w_m`; `None` marks an empty pool.
    pub fn first_phase_winners(&self) -> Option<Vec<Option<usize>>> {
        self.state.first_rounds?;
        Some(
            self.state
                .winners
                .iter()
                .map(|w| match w.unwrap() {
                    Slot::Label(l) => Some(l as usize),
                    Slot::Empty => None,
                })
                .collect(),
        )
    }

    /// The tournament winner once every match is resolved.
    pub fn champion(&self) -> Option<usize> {
        self.state.champion.flatten().map(|c| c as usize)
    }

    pub fn is_finished(&self) -> bool {
        self.state.champion.is_some()
    }

    fn group_expected(&self, g: usize) -> u32 {
        match self.st.semantics {
            Semantics::Complete => self.st.k as u32,
            // winners of earlier pools never move down
            Semantics::Pool => self.st.k.saturating_sub(g) as u32,
        }
    }

    fn start_round(&mut self) {
        let k = self.st.k;
        let m = self.st.m;
        loop {
            let r = self.state.round;
            for g in 0..m {
                if self.state.winners[g].is_some() {
                    continue;
                }
                let expected = self.group_expected(g);
                if expected == 0 {
                    self.state.winners[g] = Some(Slot::Empty);
                    continue;
                }
                if self.state.entered[g] != expected {
                    continue;
                }
                let mut alive = (0..k).filter(|&l| self.state.labels[l].group == Some(g as u16));
                let (Some(last), None) = (alive.next(), alive.next()) else { continue };
                if self.state.labels[last].avail > r {
                    continue;
                }
                self.state.winners[g] = Some(Slot::Label(last as u32));
                let promote = self.st.semantics == Semantics::Complete && g + 1 < m;
                self.state.labels[last] = if promote {
                    self.state.entered[g + 1] += 1;
                    LabelState { group: Some(g as u16 + 1), avail: r }
                } else {
                    LabelState { group: None, avail: r }
                };
            }
            if self.state.winners.iter().all(Option::is_some) {
                self.state.first_rounds = Some(r);
                self.start_final();
                return;
            }
            let mut by_group: Vec<Vec<u32>> = vec![Vec::new(); m];
            for (l, s) in self.state.labels.iter().enumerate() {
                if let Some(g) = s.group {
                    if s.avail <= r {
                        by_group[g as usize].push(l as u32);
                    }
                }
            }
            self.state.matches.clear();
            self.state.cursor = 0;
            for (g, avail) in by_group.iter().enumerate() {
                let skip = avail.len() % 2;
                for pair in avail[skip..].chunks(2) {
                    let node = self.state.node_counter[g];
                    self.state.node_counter[g] += 1;
                    self.state.matches.push((pair[0], pair[1], g as u16, node));
                }
            }
            if !self.state.matches.is_empty() {
                return;
            }
            // idle round: someone is still in transit
            assert!(
                (r as usize) < 4 * (k + m) + 64,
                "first phase stalled at round {r}"
            );
            self.state.round += 1;
        }
    }

    fn start_final(&mut self) {
        let slots: Vec<Option<u32>> = self
            .state
            .winners
            .iter()
            .map(|w| match w.unwrap() {
                Slot::Label(l) => Some(l),
                Slot::Empty => None,
            })
            .collect();
        if self.st.m == 1 {
            self.state.champion = Some(slots[0]);
            return;
        }
        let first = self.state.first_rounds.unwrap();
        self.state.final_state = Some(FinalState {
            values: vec![None; self.st.m - 1],
            slots,
            next: 0,
            series: (0, 0),
            ready: vec![first; self.st.m - 1],
            busy: vec![first; self.st.k],
        });
        self.advance_final();
    }

    fn final_input(fs: &FinalState, c: Child) -> Option<u32> {
        match c {
            Child::Leaf(slot) => fs.slots[slot],
            Child::Node(n) => fs.values[n],
        }
    }

    fn inputs_ready(fs: &FinalState, left: Child, right: Child) -> u32 {
        let r = |c: Child| match c {
            Child::Leaf(_) => 0,
            Child::Node(n) => fs.ready[n],
        };
        r(left).max(r(right))
    }

    /// Earliest round for the next game at the current final node: both
    /// inputs known and both labels free. A label can fill several slots.
    fn final_round(fs: &FinalState, left: Child, right: Child, a: usize, b: usize) -> u32 {
        Self::inputs_ready(fs, left, right).max(fs.busy[a]).max(fs.busy[b])
    }

    /// Resolves final nodes that need no comparison.
    fn advance_final(&mut self) {
        let tree = self.st.final_tree.tree().unwrap();
        let fs = self.state.final_state.as_mut().unwrap();
        while fs.next < tree.num_internal() {
            let n = tree.node(fs.next);
            let a = Self::final_input(fs, n.left);
            let b = Self::final_input(fs, n.right);
            match (a, b) {
                (Some(x), Some(y)) if x != y => return,
                (Some(x), _) | (None, Some(x)) => fs.values[fs.next] = Some(x),
                (None, None) => fs.values[fs.next] = None,
            }
            fs.ready[fs.next] = Self::inputs_ready(fs, n.left, n.right);
            fs.next += 1;
            fs.series = (0, 0);
        }
        self.state.champion = Some(fs.values[tree.root()]);
    }

    /// Admissible lower bound on the weighted errors still needed to keep
    /// `best` from winning, when only matches `best` loses cost anything.
    ///
    /// Every group `best` has yet to leave ends with `best` either losing in
    /// it (cost 1) or holding a final slot. In the final phase, each resolved
    /// subtree held by `best` costs at least its charge to overturn.
    pub fn dethrone_lower_bound(&self, best: usize) -> u32 {
        if let Some(champion) = self.state.champion {
            return if champion == Some(best as u32) { u32::MAX } else { 0 };
        }
        let held = |w: &Option<Slot>| *w == Some(Slot::Label(best as u32));
        if let Some(fs) = &self.state.final_state {
            let tree = self.st.final_tree.tree().unwrap();
            let mut bound = 0;
            // frontier: resolved nodes or slots whose parent is unresolved
            for id in fs.next..tree.num_internal() {
                let n = tree.node(id);
                for c in [n.left, n.right] {
                    let (value, resolved) = match c {
                        Child::Leaf(slot) => (fs.slots[slot], true),
                        Child::Node(cid) => (fs.values[cid], cid < fs.next),
                    };
                    if resolved && value == Some(best as u32) {
                        bound += self.st.final_tree.charge_of(c);
                    }
                }
            }
            return bound;
        }
        let slots = self.state.winners.iter().filter(|w| held(w)).count() as u32;
        let pending = match self.state.labels[best].group {
            None => 0,
            Some(g) => match self.st.semantics {
                Semantics::Complete => (self.st.m - g as usize) as u32,
                Semantics::Pool => 1,
            },
        };
        slots + pending
    }

    /// The next comparison to decide, or `None` once the tournament is over.
    pub fn next_match(&self) -> Option<PendingMatch> {
        if self.state.champion.is_some() {
            return None;
        }
        if let Some(fs) = &self.state.final_state {
            let tree = self.st.final_tree.tree().unwrap();
            let id = fs.next;
            let n = tree.node(id);
            let a = Self::final_input(fs, n.left).unwrap() as usize;
            let b = Self::final_input(fs, n.right).unwrap() as usize;
            let round = Self::final_round(fs, n.left, n.right, a, b);
            let (weight_a, weight_b, game) = if self.st.repeated {
                (1, 1, fs.series.0 + fs.series.1)
            } else {
                (
                    self.st.final_tree.outcome_weight(id, Side::Left),
                    self.st.final_tree.outcome_weight(id, Side::Right),
                    0,
                )
            };
            return Some(PendingMatch {
                round: round as usize,
                phase: Phase::Final,
                node: id,
                a,
                b,
                weight_a,
                weight_b,
                game,
            });
        }
        let (a, b, g, node) = self.state.matches[self.state.cursor];
        Some(PendingMatch {
            round: self.state.round as usize,
            phase: Phase::First {
                tournament: g as usize + 1,
            },
            node: node as usize,
            a: a as usize,
            b: b as usize,
            weight_a: 1,
            weight_b: 1,
            game: 0,
        })
    }

    /// Applies the outcome of the match returned by [`Engine::next_match`].
    pub fn resolve(&mut self, winner: Side) {
        assert!(self.state.champion.is_none(), "tournament already decided");
        if let Some(fs) = self.state.final_state.as_mut() {
            let tree = self.st.final_tree.tree().unwrap();
            let id = fs.next;
            let n = tree.node(id);
            let a = Self::final_input(fs, n.left).unwrap();
            let b = Self::final_input(fs, n.right).unwrap();
            let round = Self::final_round(fs, n.left, n.right, a as usize, b as usize);
            fs.busy[a as usize] = round + 1;
            fs.busy[b as usize] = round + 1;
            let done = if self.st.repeated {
                match winner {
                    Side::Left => fs.series.0 += 1,
                    Side::Right => fs.series.1 += 1,
                }
                let (ca, cb) = self.st.final_tree.charges(id);
                if fs.series.0 == cb {
                    Some(a)
                } else if fs.series.1 == ca {
                    Some(b)
                } else {
                    None
                }
            } else {
                Some(if winner == Side::Left { a } else { b })
            };
            if let Some(v) = done {
                fs.values[id] = Some(v);
                fs.ready[id] = round + 1;
                fs.next += 1;
                fs.series = (0, 0);
                self.advance_final();
            }
            return;
        }
        let (a, b, g, _) = self.state.matches[self.state.cursor];
        let loser = if winner == Side::Left { b } else { a } as usize;
        self.state.losses[loser] += 1;
        let g = g as usize;
        let next = g + 1;
        self.state.labels[loser] = if next < self.st.m {
            self.state.entered[next] += 1;
            LabelState {
                group: Some(next as u16),
                avail: self.state.round + 1,
            }
        } else {
            LabelState {
                group: None,
                avail: self.state.round + 1,
            }
        };
        self.state.cursor += 1;
        if self.state.cursor == self.state.matches.len() {
            self.state.round += 1;
            self.start_round();
        }
    }

    /// Plays every remaining match with `decide`, returning the decided matches in order.
    pub fn play<F>(&mut self, mut decide: F) -> Result<Vec<(PendingMatch, Side)>>
    where
        F: FnMut(&PendingMatch) -> Result<Side>,
    {
        let mut log = Vec::new();
        while let Some(pm) = self.next_match() {
            let side = decide(&pm)?;
            self.resolve(side);
            log.push((pm, side));
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lowest_wins(pm: &PendingMatch) -> Result<Side> {
        Ok(if pm.a < pm.b { Side::Left } else { Side::Right })
    }

    #[test]
    fn single_elimination_eight() {
        let mut e = Engine::new(8, 1, Semantics::Complete, false).unwrap();
        let log = e.play(lowest_wins).unwrap();
        assert_eq!(log.len(), 7);
        assert_eq!(e.first_phase_rounds(), Some(3));
        assert_eq!(e.champion(), Some(0));
    }

    #[test]
    fn odd_round_lowest_sits_out() {
        let e = Engine::new(5, 1, Semantics::Complete, false).unwrap();
        let first = e.next_match().unwrap();
        assert_eq!((first.a, first.b), (1, 2));
    }

    #[test]
    fn complete_semantics_every_label_plays_every_tournament() {
        for k in 2..12 {
            for m in 1..5 {
                let mut e = Engine::new(k, m, Semantics::Complete, false).unwrap();
                let log = e.play(lowest_wins).unwrap();
                let first: Vec<_> = log.iter().filter(|(p, _)| matches!(p.phase, Phase::First { .. })).collect();
                assert_eq!(first.len(), m * (k - 1));
                for t in 1..=m {
                    let n = first
                        .iter()
                        .filter(|(p, _)| p.phase == Phase::First { tournament: t })
                        .count();
                    assert_eq!(n, k - 1);
                }
                // a perfect comparator wins everything, so the final is idle
                assert_eq!(e.first_phase_winners().unwrap(), vec![Some(0); m]);
                assert_eq!(log.len(), first.len());
                assert_eq!(e.champion(), Some(0));
            }
        }
    }

    #[test]
    fn pool_semantics_eliminates_at_m_losses() {
        for k in 2..12 {
            for m in 1..6 {
                let mut e = Engine::new(k, m, Semantics::Pool, false).unwrap();
                e.play(|pm| Ok(if (pm.a + pm.b + pm.round) % 3 == 0 { Side::Left } else { Side::Right }))
                    .unwrap();
                let winners = e.first_phase_winners().unwrap();
                let losses = e.losses();
                for l in 0..k {
                    if let Some(j) = winners.iter().position(|w| *w == Some(l)) {
                        assert_eq!(losses[l], j);
                    } else {
                        assert_eq!(losses[l], m);
                    }
                }
                assert_eq!(winners.iter().filter(|w| w.is_none()).count(), m.saturating_sub(k));
            }
        }
    }

    #[test]
    fn nobody_plays_twice_in_a_round() {
        for sem in [Semantics::Complete, Semantics::Pool] {
            for k in 2..20 {
                for m in 1..6 {
                    let mut e = Engine::new(k, m, sem, false).unwrap();
                    let log = e.play(|pm| Ok(if pm.node % 2 == 0 { Side::Left } else { Side::Right })).unwrap();
                    let mut seen = std::collections::HashSet::new();
                    for (pm, _) in &log {
                        assert!(seen.insert((pm.round, pm.a)), "{sem:?} k={k} m={m}");
                        assert!(seen.insert((pm.round, pm.b)), "{sem:?} k={k} m={m}");
                    }
                }
            }
        }
    }

    #[test]
    fn final_phase_weights_and_repeated_series() {
        // k=2, m=2: label 1 wins the first tournament, label 0 the second
        let mut e = Engine::new(2, 2, Semantics::Complete, true).unwrap();
        let pm = e.next_match().unwrap();
        assert_eq!((pm.a, pm.b), (0, 1));
        e.resolve(Side::Right);
        let pm = e.next_match().unwrap();
        assert_eq!(pm.phase, Phase::First { tournament: 2 });
        e.resolve(Side::Left);
        assert_eq!(e.first_phase_winners().unwrap(), vec![Some(1), Some(0)]);
        let pm = e.next_match().unwrap();
        assert_eq!(pm.phase, Phase::Final);
        assert_eq!((pm.a, pm.b), (1, 0));
        e.resolve(Side::Right);
        assert_eq!(e.champion(), Some(0));
    }

    #[test]
    fn repeated_series_is_a_race() {
        // m=3, final root charges (2,1): the left label needs 1 win, the right 2
        let mut e = Engine::new(4, 3, Semantics::Complete, true).unwrap();
        let log = e
            .play(|pm| {
                Ok(match pm.phase {
                    // make the three tournaments produce different winners
                    Phase::First { tournament } => {
                        if pm.a == tournament - 1 || pm.b == tournament - 1 {
                            if pm.a == tournament - 1 { Side::Left } else { Side::Right }
                        } else {
                            Side::Left
                        }
                    }
                    Phase::Final => Side::Right,
                })
            })
            .unwrap();
        let finals: Vec<_> = log.iter().filter(|(p, _)| p.phase == Phase::Final).collect();
        assert_eq!(e.first_phase_winners().unwrap(), vec![Some(0), Some(1), Some(2)]);
        // bottom: one game; root: right label needs 2 wins
        assert_eq!(finals.len(), 3);
        assert_eq!(e.champion(), Some(2));
    }
}
