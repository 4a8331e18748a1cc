use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::engine::{Engine, PendingMatch, Phase};
use super::{Semantics, TournamentConfig};
use crate::domain::Side;
use crate::error::{invalid, Error, Result};

/// True skill of each label; the higher skill should win. Equal skills
/// make no preference, and an honest comparator then favors the left label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    skills: Vec<f64>,
}

impl Truth {
    pub fn new(skills: Vec<f64>) -> Result<Self> {
        if skills.len() < 2 {
            return invalid("need at least two skills");
        }
        if skills.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("skills"));
        }
        Ok(Self { skills })
    }

    /// Label `best` has skill 1, everyone else 0.
    pub fn one_hot(k: usize, best: usize) -> Self {
        let mut skills = vec![0.0; k];
        skills[best] = 1.0;
        Self { skills }
    }

    /// Strict order with label 0 best.
    pub fn ranked(k: usize) -> Self {
        Self {
            skills: (0..k).map(|l| (k - l) as f64).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.skills.len()
    }

    pub fn skills(&self) -> &[f64] {
        &self.skills
    }

    pub fn best(&self) -> usize {
        let top = self.skills.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.skills.iter().position(|&s| s == top).unwrap()
    }

    pub fn honest(&self, pm: &PendingMatch) -> Side {
        if self.skills[pm.b] > self.skills[pm.a] {
            Side::Right
        } else {
            Side::Left
        }
    }

    pub fn contradicts(&self, winner: usize, loser: usize) -> bool {
        self.skills[winner] < self.skills[loser]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryModel {
    None,
    /// Flips matches of the best label while the weighted budget lasts,
    /// optionally only inside the listed first-phase tournaments.
    BudgetFullLie {
        budget: u32,
        #[serde(default)]
        tournaments: Option<Vec<usize>>,
    },
    /// May only withhold a verdict, which resolves to the left label; it
    /// can hurt the best label only when the best label stands on the right.
    BudgetHalfLie { budget: u32 },
    /// Each match independently flipped with probability `rate`.
    RateRandom {
        rate: f64,
        seed: u64,
        #[serde(default)]
        budget: Option<u32>,
    },
    /// `i` and `j` beat everybody else; their mutual matches alternate,
    /// starting with `i`.
    Parity { i: usize, j: usize },
    /// Favors label 0 for the first `q - r` rounds, then the label other
    /// than 0 with the fewest losses, where `r = qk/(3k-2)`.
    Staged,
}

impl AdversaryModel {
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryModel::None => "none",
            AdversaryModel::BudgetFullLie { .. } => "budget_full_lie",
            AdversaryModel::BudgetHalfLie { .. } => "budget_half_lie",
            AdversaryModel::RateRandom { .. } => "rate_random",
            AdversaryModel::Parity { .. } => "parity",
            AdversaryModel::Staged => "staged",
        }
    }

    pub fn declared_budget(&self) -> Option<u32> {
        match self {
            AdversaryModel::BudgetFullLie { budget, .. } | AdversaryModel::BudgetHalfLie { budget } => Some(*budget),
            AdversaryModel::RateRandom { budget, .. } => *budget,
            _ => None,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            AdversaryModel::RateRandom { rate, .. } if !(0.0..=1.0).contains(rate) => {
                invalid(format!("rate {rate} is outside [0, 1]"))
            }
            AdversaryModel::Parity { i, j } if i == j || *i >= k || *j >= k => {
                invalid(format!("parity pair ({i}, {j}) is not two distinct labels below {k}"))
            }
            _ => Ok(()),
        }
    }
}

/// One line of a match transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub round: usize,
    /// First-phase tournament number; 0 for the final phase.
    pub tournament: usize,
    pub node: usize,
    pub participants: [usize; 2],
    /// Importance charged for the outcome that happened.
    pub weight: u32,
    pub outcome: usize,
    pub contradicted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ratio {
    Finite(f64),
    /// The adversary pays nothing while the winner has regret.
    Unbounded,
}

impl Ratio {
    pub fn value(self) -> f64 {
        match self {
            Ratio::Finite(v) => v,
            Ratio::Unbounded => f64::INFINITY,
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ratio::Finite(v) => s.serialize_f64(*v),
            Ratio::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Ratio::Finite(v)),
            Repr::Text(t) if t == "unbounded" => Ok(Ratio::Unbounded),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad ratio '{t}'"))),
        }
    }
}

/// Worst regret ratio an adversary can claim after the fact by declaring
/// some label other than the winner to be the only good one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioOutcome {
    pub ratio: Ratio,
    pub truth_label: usize,
    pub adversary_regret: u64,
    pub depth: usize,
}

/// Loss weight each label took over a transcript.
fn lost_weight(records: &[MatchRecord], k: usize) -> Vec<u64> {
    let mut lost = vec![0u64; k];
    for r in records {
        let loser = if r.outcome == r.participants[0] {
            r.participants[1]
        } else {
            r.participants[0]
        };
        lost[loser] += u64::from(r.weight);
    }
    lost
}

/// Maximizes `depth / regret` over one-hot truths on labels other than the
/// winner. The multiclass regret of the winner is then 1, and the adversary
/// regret is the weight of the matches the declared label lost.
pub fn evaluate_regret_ratio(records: &[MatchRecord], winner: usize, k: usize, depth: usize) -> RatioOutcome {
    let lost = lost_weight(records, k);
    let (truth_label, regret) = (0..k)
        .filter(|&t| t != winner)
        .map(|t| (t, lost[t]))
        .min_by_key(|&(t, w)| (w, t))
        .expect("k >= 2");
    RatioOutcome {
        ratio: if regret == 0 {
            Ratio::Unbounded
        } else {
            Ratio::Finite(depth as f64 / regret as f64)
        },
        truth_label,
        adversary_regret: regret,
        depth,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub winner: usize,
    pub best: usize,
    pub first_phase_winners: Vec<Option<usize>>,
    pub transcript: Vec<MatchRecord>,
    pub contradictions: usize,
    /// Σ weight over contradicted matches.
    pub weighted_errors: u64,
    pub first_phase_rounds: usize,
    pub total_rounds: usize,
    /// Importance depth, or game depth in repeated mode.
    pub depth: usize,
    pub ratio: RatioOutcome,
}

struct Live<'a> {
    model: &'a AdversaryModel,
    truth: &'a Truth,
    best: usize,
    spent: u64,
    rng: Option<ChaCha8Rng>,
    parity_count: usize,
    staged: Option<Staged>,
    losses: Vec<u64>,
}

struct Staged {
    /// Rounds answered in favor of label 0.
    stage_one: usize,
    favorite: Option<usize>,
}

impl Live<'_> {
    fn decide(&mut self, pm: &PendingMatch) -> Side {
        let honest = self.truth.honest(pm);
        let involves = |l: usize| pm.a == l || pm.b == l;
        let favor = |l: usize| if pm.a == l { Side::Left } else { Side::Right };
        let remaining = |budget: u32, spent: u64| u64::from(budget).saturating_sub(spent);
        match self.model {
            AdversaryModel::None => honest,
            AdversaryModel::BudgetFullLie { budget, tournaments } => {
                let allowed = match (tournaments, pm.phase) {
                    (None, _) => true,
                    (Some(list), Phase::First { tournament }) => list.contains(&tournament),
                    (Some(_), Phase::Final) => false,
                };
                let flip = honest.flip();
                let lie = involves(self.best)
                    && pm.winner(honest) == self.best
                    && self.truth.contradicts(pm.winner(flip), self.best);
                if allowed && lie && u64::from(pm.weight(flip)) <= remaining(*budget, self.spent) {
                    flip
                } else {
                    honest
                }
            }
            AdversaryModel::BudgetHalfLie { budget } => {
                let refuse = pm.b == self.best
                    && honest == Side::Right
                    && self.truth.contradicts(pm.a, pm.b)
                    && u64::from(pm.weight_a) <= remaining(*budget, self.spent);
                if refuse {
                    Side::Left
                } else {
                    honest
                }
            }
            AdversaryModel::RateRandom { rate, .. } => {
                let u: f64 = self.rng.as_mut().unwrap().gen();
                if u < *rate {
                    honest.flip()
                } else {
                    honest
                }
            }
            AdversaryModel::Parity { i, j } => match (involves(*i), involves(*j)) {
                (true, true) => {
                    self.parity_count += 1;
                    if self.parity_count % 2 == 1 {
                        favor(*i)
                    } else {
                        favor(*j)
                    }
                }
                (true, false) => favor(*i),
                (false, true) => favor(*j),
                (false, false) => Side::Left,
            },
            AdversaryModel::Staged => {
                let st = self.staged.as_mut().unwrap();
                let target = if pm.round < st.stage_one {
                    0
                } else {
                    *st.favorite.get_or_insert_with(|| {
                        (1..self.losses.len())
                            .min_by_key(|&l| (self.losses[l], l))
                            .unwrap()
                    })
                };
                if involves(target) {
                    favor(target)
                } else {
                    Side::Left
                }
            }
        }
    }
}

/// Plays a tournament against an adversarial comparator.
pub fn run_tournament(cfg: &TournamentConfig, truth: &Truth, adversary: &AdversaryModel) -> Result<RunOutcome> {
    if truth.k() != cfg.k {
        return invalid(format!("truth has {} labels, tournament {}", truth.k(), cfg.k));
    }
    adversary.validate(cfg.k)?;
    let mut engine = cfg.engine()?;
    let total_rounds = total_rounds(&engine);
    let first_rounds = {
        let mut dry = engine.clone();
        while let Some(pm) = dry.next_match() {
            if pm.phase == Phase::Final {
                break;
            }
            dry.resolve(Side::Left);
        }
        dry.first_phase_rounds().unwrap()
    };
    let ft = engine.final_tree();
    let depth = first_rounds
        + if cfg.repeated {
            ft.max_path_repeated()
        } else {
            ft.max_path_importance()
        } as usize;

    let staged = matches!(adversary, AdversaryModel::Staged).then(|| {
        let q = total_rounds as f64;
        let k = cfg.k as f64;
        let r = q * k / (3.0 * k - 2.0);
        Staged {
            stage_one: (q - r).ceil() as usize,
            favorite: None,
        }
    });
    let mut live = Live {
        model: adversary,
        truth,
        best: truth.best(),
        spent: 0,
        rng: match adversary {
            AdversaryModel::RateRandom { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        },
        parity_count: 0,
        staged,
        losses: vec![0; cfg.k],
    };

    let mut transcript = Vec::new();
    let mut contradictions = 0;
    while let Some(pm) = engine.next_match() {
        let side = live.decide(&pm);
        let (winner, loser) = (pm.winner(side), pm.loser(side));
        let weight = pm.weight(side);
        let contradicted = truth.contradicts(winner, loser);
        if contradicted {
            contradictions += 1;
            live.spent += u64::from(weight);
        }
        live.losses[loser] += u64::from(weight);
        if let Some(budget) = adversary.declared_budget() {
            if live.spent > u64::from(budget) {
                return Err(Error::HarnessFault(format!(
                    "{} adversary spent {} against a budget of {budget}",
                    adversary.name(),
                    live.spent
                )));
            }
        }
        engine.resolve(side);
        transcript.push(MatchRecord {
            round: pm.round,
            tournament: match pm.phase {
                Phase::First { tournament } => tournament,
                Phase::Final => 0,
            },
            node: pm.node,
            participants: [pm.a, pm.b],
            weight,
            outcome: winner,
            contradicted,
        });
    }
    let winner = engine.champion().expect("tournament decided");
    let ratio = evaluate_regret_ratio(&transcript, winner, cfg.k, depth);
    Ok(RunOutcome {
        winner,
        best: live.best,
        first_phase_winners: engine.first_phase_winners().unwrap(),
        transcript,
        contradictions,
        weighted_errors: live.spent,
        first_phase_rounds: first_rounds,
        total_rounds,
        depth,
        ratio,
    })
}

/// Rounds until the tournament is decided; does not depend on outcomes.
fn total_rounds(engine: &Engine) -> usize {
    let mut dry = engine.clone();
    let mut last = None;
    while let Some(pm) = dry.next_match() {
        last = Some(pm.round);
        dry.resolve(Side::Left);
    }
    let first = dry.first_phase_rounds().unwrap();
    let final_rounds: u32 = dry.final_tree().level_durations(dry.repeated()).iter().sum();
    (first + final_rounds as usize).max(last.map_or(0, |r| r + 1))
}

/// JSON lines, one match per line.
pub fn write_transcript<W: Write>(records: &[MatchRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum ParityTarget {
    /// Single-elimination filter tree, i.e. a one-tournament run.
    FilterTree,
    Tournament { m: usize, semantics: Semantics, repeated: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityPairResult {
    pub i: usize,
    pub j: usize,
    pub winner: usize,
    pub ratio: Ratio,
    pub adversary_regret: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub k: usize,
    pub depth: usize,
    pub best: ParityPairResult,
    pub pairs: Vec<ParityPairResult>,
}

/// Runs the parity strategy for every ordered pair and keeps the pair with
/// the largest ratio of depth to adversary regret. If the winner is outside
/// the pair, or the other pair member lost nothing, the ratio is unbounded.
pub fn parity_adversary_run(target: ParityTarget, k: usize) -> Result<ParityReport> {
    if k < 3 {
        return invalid(format!("the parity adversary needs k >= 3, got {k}"));
    }
    let cfg = match target {
        ParityTarget::FilterTree => TournamentConfig::new(k, 1, Semantics::Complete),
        ParityTarget::Tournament { m, semantics, repeated } => TournamentConfig {
            k,
            m,
            semantics,
            repeated,
        },
    };
    let truth = Truth::ranked(k);
    let mut pairs = Vec::new();
    let mut depth = 0;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let run = run_tournament(&cfg, &truth, &AdversaryModel::Parity { i, j })?;
            depth = run.depth;
            let lost = lost_weight(&run.transcript, k);
            let (ratio, regret) = if run.winner == i || run.winner == j {
                let other = if run.winner == i { j } else { i };
                let regret = lost[other];
                let ratio = if regret == 0 {
                    Ratio::Unbounded
                } else {
                    Ratio::Finite(run.depth as f64 / regret as f64)
                };
                (ratio, regret)
            } else {
                (Ratio::Unbounded, 0)
            };
            pairs.push(ParityPairResult {
                i,
                j,
                winner: run.winner,
                ratio,
                adversary_regret: regret,
            });
        }
    }
    let best = pairs
        .iter()
        .max_by(|a, b| a.ratio.value().total_cmp(&b.ratio.value()))
        .cloned()
        .unwrap();
    Ok(ParityReport { k, depth, best, pairs })
}
