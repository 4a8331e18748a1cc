use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{ceil_pow2, AuditCounters, Child, ConditionalDistribution, CostVector, LabelTree, Side, PROB_TOLERANCE};
use crate::error::{invalid, Error, Result};

/// Slack below which an inequality counts as violated.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// Finite distribution over cost vectors for one fixed context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostDistribution {
    k: usize,
    support: Vec<(f64, CostVector)>,
}

impl CostDistribution {
    pub fn new(support: Vec<(f64, CostVector)>) -> Result<Self> {
        let Some(k) = support.first().map(|(_, c)| c.k()) else {
            return Err(Error::InvalidDistribution("empty support".into()));
        };
        if k < 2 || support.iter().any(|(_, c)| c.k() != k) {
            return Err(Error::InvalidDistribution("cost vectors must share a length of at least 2".into()));
        }
        if support.iter().any(|(p, _)| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution("support weights must be finite and nonnegative".into()));
        }
        let total: f64 = support.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("support weights sum to {total}")));
        }
        Ok(Self { k, support })
    }

    /// Multiclass distribution as costs: label `y` costs 0 and every other 1.
    pub fn from_labels(dist: &ConditionalDistribution) -> Self {
        let k = dist.k();
        Self {
            k,
            support: (0..k)
                .filter(|&y| dist.p(y) > 0.0)
                .map(|y| (dist.p(y), CostVector::one_hot_loss(k, y)))
                .collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn support(&self) -> &[(f64, CostVector)] {
        &self.support
    }

    pub fn expected_costs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for (p, c) in &self.support {
            for (o, v) in out.iter_mut().zip(c.costs()) {
                *o += p * v;
            }
        }
        out
    }

    /// Support size in `1..=max_support`, weights and costs uniform.
    pub fn random(k: usize, max_support: usize, rng: &mut impl Rng) -> Self {
        let n = rng.gen_range(1..=max_support.max(1));
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let support = raw
            .into_iter()
            .map(|w| {
                let c = (0..k).map(|_| rng.gen::<f64>()).collect();
                (w / total, CostVector::new(c).expect("uniform draws lie in [0, 1]"))
            })
            .collect();
        Self { k, support }
    }
}

/// Induced binary problem at one node of the tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRegret {
    pub node: usize,
    /// Labels arriving from the left and right child.
    pub inputs: [usize; 2],
    pub decision: u8,
    /// Mean importance `E|c_a - c_b|`.
    pub importance: f64,
    /// Importance-weighted regret normalized by `importance`; 0 when it is 0.
    pub regret: f64,
    /// Unnormalized regret `importance * regret`.
    pub weighted_regret: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub k: usize,
    pub winner: usize,
    pub nodes: Vec<NodeRegret>,
    /// Cost-sensitive regret of the decoded label.
    pub creg: f64,
    pub sum_importance: f64,
    /// `Σ regret·importance / Σ importance`; 0 when the total importance is 0.
    pub avg_regret: f64,
    /// `avg_regret · Σ importance`.
    pub main_bound: f64,
    /// `k · avg_regret / 2` with the literal label count.
    pub literal_bound: f64,
    /// The same with `k` rounded up to a power of two.
    pub padded_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterCheck {
    Main,
    Literal,
    Padded,
}

impl FilterCheck {
    pub const ALL: [FilterCheck; 3] = [FilterCheck::Main, FilterCheck::Literal, FilterCheck::Padded];

    pub fn name(self) -> &'static str {
        match self {
            FilterCheck::Main => "creg <= avg_regret * sum_importance",
            FilterCheck::Literal => "creg <= k * avg_regret / 2",
            FilterCheck::Padded => "creg <= pow2(k) * avg_regret / 2",
        }
    }
}

impl RegretReport {
    pub fn rhs(&self, check: FilterCheck) -> f64 {
        match check {
            FilterCheck::Main => self.main_bound,
            FilterCheck::Literal => self.literal_bound,
            FilterCheck::Padded => self.padded_bound,
        }
    }

    pub fn slack(&self, check: FilterCheck) -> f64 {
        self.rhs(check) - self.creg
    }

    pub fn holds(&self, check: FilterCheck) -> bool {
        self.slack(check) >= -CHECK_TOLERANCE
    }
}

fn decisions_from_mask(n: usize, mask: u64) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

/// Exact regrets of the filter tree whose node `i` always picks side
/// `decisions[i]`, against the cost distribution of one context.
pub fn check_filter_theorems(tree: &LabelTree, dist: &CostDistribution, decisions: &[u8]) -> Result<RegretReport> {
    let k = tree.k();
    if dist.k() != k {
        return invalid(format!("distribution has {} labels, tree has {k}", dist.k()));
    }
    if decisions.len() != tree.num_internal() || decisions.iter().any(|&d| d > 1) {
        return invalid(format!("need {} decision bits", tree.num_internal()));
    }
    let expected = dist.expected_costs();
    let mut winner_of = vec![0usize; tree.num_internal()];
    let mut nodes = Vec::with_capacity(tree.num_internal());
    let input = |c: Child, w: &[usize]| match c {
        Child::Leaf(y) => y,
        Child::Node(id) => w[id],
    };
    // ids increase towards the root
    for (id, n) in tree.nodes().iter().enumerate() {
        let a = input(n.left, &winner_of);
        let b = input(n.right, &winner_of);
        let importance: f64 = dist
            .support()
            .iter()
            .map(|(p, c)| p * (c.cost(a) - c.cost(b)).abs())
            .sum();
        // choosing a side costs E[w·1(other side cheaper)]; the gap between
        // the two choices is |E c_a - E c_b|
        let gap = expected[a] - expected[b];
        let picked_worse = match decisions[id] {
            0 => gap > 0.0,
            _ => gap < 0.0,
        };
        let weighted_regret = if picked_worse { gap.abs() } else { 0.0 };
        nodes.push(NodeRegret {
            node: id,
            inputs: [a, b],
            decision: decisions[id],
            importance,
            regret: if importance > 0.0 { weighted_regret / importance } else { 0.0 },
            weighted_regret,
        });
        winner_of[id] = if decisions[id] == 0 { a } else { b };
    }
    let winner = winner_of[tree.root()];
    let best = expected.iter().copied().fold(f64::INFINITY, f64::min);
    let sum_importance: f64 = nodes.iter().map(|n| n.importance).sum();
    let total_regret: f64 = nodes.iter().map(|n| n.weighted_regret).sum();
    let avg_regret = if sum_importance > 0.0 { total_regret / sum_importance } else { 0.0 };
    Ok(RegretReport {
        k,
        winner,
        nodes,
        creg: expected[winner] - best,
        sum_importance,
        avg_regret,
        main_bound: avg_regret * sum_importance,
        literal_bound: k as f64 * avg_regret / 2.0,
        padded_bound: ceil_pow2(k) as f64 * avg_regret / 2.0,
    })
}

/// A violated instance, complete enough to be re-run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub check: FilterCheck,
    pub k: usize,
    pub distribution: CostDistribution,
    pub decisions: Vec<u8>,
    pub lhs: f64,
    pub rhs: f64,
}

impl Counterexample {
    /// Recomputes the instance on a fresh balanced tree; `true` when both
    /// sides come out bit-identical.
    pub fn replay(&self) -> Result<bool> {
        let tree = LabelTree::balanced(self.k)?;
        let r = check_filter_theorems(&tree, &self.distribution, &self.decisions)?;
        Ok(r.creg.to_bits() == self.lhs.to_bits() && r.rhs(self.check).to_bits() == self.rhs.to_bits())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSweepConfig {
    pub ks: Vec<usize>,
    pub distributions_per_k: usize,
    pub max_support: usize,
    pub seed: u64,
    /// Counterexamples kept per check.
    pub keep: usize,
}

impl Default for FilterSweepConfig {
    fn default() -> Self {
        Self {
            ks: (2..=6).collect(),
            distributions_per_k: 256,
            max_support: 3,
            seed: 1,
            keep: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: FilterCheck,
    pub statement: String,
    pub instances: u64,
    pub violations: u64,
    pub worst_slack: f64,
    pub counterexamples: Vec<Counterexample>,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSweepReport {
    pub config: FilterSweepConfig,
    pub instances: u64,
    pub checks: Vec<CheckSummary>,
}

impl FilterSweepReport {
    pub fn check(&self, which: FilterCheck) -> &CheckSummary {
        self.checks.iter().find(|c| c.check == which).unwrap()
    }
}

/// Every node-decision assignment against seeded random cost distributions.
/// Distribution `i` of label count `k` comes from ChaCha stream `k` of the
/// seed, so results do not depend on the worker count.
pub fn filter_sweep(cfg: &FilterSweepConfig) -> Result<FilterSweepReport> {
    if cfg.ks.iter().any(|&k| !(2..=16).contains(&k)) {
        return invalid("exhaustive sweeps need 2 <= k <= 16");
    }
    let mut instances: Vec<(usize, CostDistribution)> = Vec::new();
    for &k in &cfg.ks {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64);
        instances.extend((0..cfg.distributions_per_k).map(|_| (k, CostDistribution::random(k, cfg.max_support, &mut rng))));
    }
    let reports: Vec<Vec<(Vec<u8>, RegretReport)>> = instances
        .par_iter()
        .map(|(k, dist)| {
            let tree = LabelTree::balanced(*k)?;
            let n = tree.num_internal();
            (0..1u64 << n)
                .map(|mask| {
                    let d = decisions_from_mask(n, mask);
                    check_filter_theorems(&tree, dist, &d).map(|r| (d, r))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut checks: Vec<CheckSummary> = FilterCheck::ALL
        .iter()
        .map(|&check| CheckSummary {
            check,
            statement: check.name().to_string(),
            instances: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            counterexamples: Vec::new(),
        })
        .collect();
    let mut total = 0;
    for ((k, dist), rows) in instances.iter().zip(&reports) {
        for (decisions, r) in rows {
            total += 1;
            for s in checks.iter_mut() {
                s.instances += 1;
                let slack = r.slack(s.check);
                s.worst_slack = s.worst_slack.min(slack);
                if !r.holds(s.check) {
                    s.violations += 1;
                    if s.counterexamples.len() < cfg.keep {
                        s.counterexamples.push(Counterexample {
                            check: s.check,
                            k: *k,
                            distribution: dist.clone(),
                            decisions: decisions.clone(),
                            lhs: r.creg,
                            rhs: r.rhs(s.check),
                        });
                    }
                }
            }
        }
    }
    Ok(FilterSweepReport {
        config: cfg.clone(),
        instances: total,
        checks,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Outcome {
    pub counters: AuditCounters,
    pub half_k: f64,
    /// `I_T + k/2 - S_T - c_T`.
    pub slack: f64,
    pub holds: bool,
}

/// Evaluates the balanced filter tree on one cost vector with fixed node
/// decisions and audits the importances along the way.
pub fn lemma1_check(costs: &CostVector, decisions: &[Side]) -> Result<Lemma1Outcome> {
    let tree = LabelTree::balanced(costs.k())?;
    lemma1_check_on(&tree, costs, decisions)
}

pub fn lemma1_check_on(tree: &LabelTree, costs: &CostVector, decisions: &[Side]) -> Result<Lemma1Outcome> {
    if costs.k() != tree.k() || decisions.len() != tree.num_internal() {
        return invalid("cost vector or decisions do not match the tree");
    }
    let mut winner_of = vec![0usize; tree.num_internal()];
    let (mut s_t, mut i_t) = (0.0, 0.0);
    for (id, n) in tree.nodes().iter().enumerate() {
        let get = |c: Child| match c {
            Child::Leaf(y) => y,
            Child::Node(i) => winner_of[i],
        };
        let (a, b) = (get(n.left), get(n.right));
        let w = (costs.cost(a) - costs.cost(b)).abs();
        let (won, lost) = match decisions[id] {
            Side::Left => (a, b),
            Side::Right => (b, a),
        };
        s_t += w;
        if costs.cost(won) > costs.cost(lost) {
            i_t += w;
        }
        winner_of[id] = won;
    }
    let c_t = costs.cost(winner_of[tree.root()]);
    let half_k = tree.k() as f64 / 2.0;
    let slack = i_t + half_k - s_t - c_t;
    Ok(Lemma1Outcome {
        counters: AuditCounters { s_t, i_t, c_t },
        half_k,
        slack,
        holds: slack >= -CHECK_TOLERANCE,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Sweep {
    pub k: usize,
    pub draws: u64,
    pub violations: u64,
    pub worst_slack: f64,
}

/// Random cost vectors and decisions. A quarter of the vectors use costs in
/// `{0, 1}` only, where the inequality is often tight.
pub fn lemma1_sweep(ks: &[usize], draws: u64, seed: u64) -> Result<Vec<Lemma1Sweep>> {
    ks.par_iter()
        .map(|&k| {
            let tree = LabelTree::balanced(k)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut out = Lemma1Sweep {
                k,
                draws,
                violations: 0,
                worst_slack: f64::INFINITY,
            };
            for _ in 0..draws {
                let binary = rng.gen_ratio(1, 4);
                let c: Vec<f64> = (0..k)
                    .map(|_| if binary { f64::from(u8::from(rng.gen::<bool>())) } else { rng.gen() })
                    .collect();
                let d: Vec<Side> = (0..k - 1).map(|_| Side::from_bit(u8::from(rng.gen::<bool>()))).collect();
                let r = lemma1_check_on(&tree, &CostVector::new(c)?, &d)?;
                out.worst_slack = out.worst_slack.min(r.slack);
                out.violations += u64::from(!r.holds);
            }
            Ok(out)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tightness {
    pub k: usize,
    pub reg_t: f64,
    pub s_t: f64,
    pub i_t: f64,
    /// `reg_t · s_t / i_t`.
    pub ratio: f64,
}

/// Near-tight instance for the `k/2` bound: even labels cost 0, odd labels
/// cost 1, every node decides correctly except that the last label wins all
/// of its games.
pub fn tightness_example(k: usize) -> Result<Tightness> {
    if k < 4 || !k.is_power_of_two() {
        return invalid(format!("tightness instance needs k = 2^j with j >= 2, got {k}"));
    }
    let tree = LabelTree::balanced(k)?;
    let costs = CostVector::new((0..k).map(|y| (y % 2) as f64).collect())?;
    let last = k - 1;
    let mut winner_of = vec![0usize; tree.num_internal()];
    let mut decisions = Vec::with_capacity(tree.num_internal());
    for (id, n) in tree.nodes().iter().enumerate() {
        let get = |c: Child| match c {
            Child::Leaf(y) => y,
            Child::Node(i) => winner_of[i],
        };
        let (a, b) = (get(n.left), get(n.right));
        let side = if b == last || (a != last && costs.cost(b) < costs.cost(a)) {
            Side::Right
        } else {
            Side::Left
        };
        winner_of[id] = if side == Side::Left { a } else { b };
        decisions.push(side);
    }
    let audit = lemma1_check_on(&tree, &costs, &decisions)?.counters;
    let reg_t = audit.c_t - costs.min();
    Ok(Tightness {
        k,
        reg_t,
        s_t: audit.s_t,
        i_t: audit.i_t,
        ratio: reg_t * audit.s_t / audit.i_t,
    })
}
