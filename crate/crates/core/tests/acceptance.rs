//! Acceptance criteria 1 to 12. Prints one PASS or FAIL line per criterion
//! and exits non-zero if any fails. Every tolerance is a named constant.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ect_core::analysis::{
    depth_grid, filter_sweep, inconsistency_demo, lemma1_sweep, tightness_example, tracker_grid, FilterCheck,
    FilterSweepConfig, Population, TrackerMode, CHECK_TOLERANCE,
};
use ect_core::bench::{run_bench, BenchConfig, DatasetSource};
use ect_core::domain::{Side, WeightedBinaryExample};
use ect_core::learners::{costing_resample, CostingConfig, LearnerSpec};
use ect_core::tournaments::{
    build_schedule, build_schedule_with, min_dethroning_cost, parity_adversary_run, ParityTarget, SearchOptions,
    Semantics, TournamentConfig,
};

const SWEEP_KS: [usize; 5] = [2, 3, 4, 5, 6];
const SWEEP_MIN_DISTRIBUTIONS: usize = 200;
const SWEEP_TIME_LIMIT: Duration = Duration::from_secs(60);
const LEMMA1_KS: [usize; 4] = [2, 4, 8, 16];
const LEMMA1_DRAWS: u64 = 10_000;
const TIGHTNESS_K: usize = 8;
const EPSILON: f64 = 0.05;
const ORACLE_TOLERANCE: f64 = 1e-12;
const LOGISTIC_SAMPLES: usize = 50_000;
const TREE_REGRET_TARGET: f64 = 0.10;
const TREE_REGRET_TOLERANCE: f64 = 0.02;
const FT_REGRET_MAX: f64 = 0.01;
const DEPTH_SLACK: f64 = 1e-9;
const TRACKER_MAX_LOG2: u32 = 20;
const COSTING_DRAWS: usize = 10_000;
const COSTING_REPETITIONS: u64 = 200;
const SIGMAS: f64 = 3.0;
const PARITY_MIN_RATIO: f64 = 2.0;
const BENCH_AP_GAP: f64 = 3.0;
const SEED: u64 = 1;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn sweep_instances() -> FilterSweepConfig {
    FilterSweepConfig {
        ks: SWEEP_KS.to_vec(),
        seed: SEED,
        ..FilterSweepConfig::default()
    }
}

fn c1_main_sweep() -> Outcome {
    let cfg = sweep_instances();
    assert!(cfg.distributions_per_k >= SWEEP_MIN_DISTRIBUTIONS);
    let t = Instant::now();
    let r = filter_sweep(&cfg).unwrap();
    let took = t.elapsed();
    let c = r.check(FilterCheck::Main);
    outcome(
        c.violations == 0 && c.worst_slack >= -CHECK_TOLERANCE && took < SWEEP_TIME_LIMIT,
        format!(
            "{} instances ({} distributions per k), {} violations, worst slack {:.3e}, {:.1}s",
            r.instances,
            cfg.distributions_per_k,
            c.violations,
            c.worst_slack,
            took.as_secs_f64()
        ),
    )
}

fn c2_literal_bound() -> Outcome {
    let r = filter_sweep(&sweep_instances()).unwrap();
    let c = r.check(FilterCheck::Literal);
    let example = c.counterexamples.first().map_or(String::new(), |cx| {
        let replayed = cx.replay().unwrap();
        format!(
            "; first: k={} support {:?} decisions {:?}, creg {:.6} > {:.6}, replays bit-exactly: {}",
            cx.k,
            cx.distribution.support(),
            cx.decisions,
            cx.lhs,
            cx.rhs,
            replayed
        )
    });
    let ks: std::collections::BTreeSet<usize> = c.counterexamples.iter().map(|cx| cx.k).collect();
    outcome(
        c.violations == 0,
        format!("{} of {} instances violate, at k in {ks:?}{example}", c.violations, c.instances),
    )
}

fn c3_lemma1() -> Outcome {
    let rows = lemma1_sweep(&LEMMA1_KS, LEMMA1_DRAWS, SEED).unwrap();
    let bad: u64 = rows.iter().map(|r| r.violations).sum();
    let worst = rows.iter().map(|r| r.worst_slack).fold(f64::INFINITY, f64::min);
    outcome(
        bad == 0,
        format!("{} draws per k in {LEMMA1_KS:?}, {bad} violations, worst slack {worst:.6}", LEMMA1_DRAWS),
    )
}

fn c4_tightness() -> Outcome {
    let t = tightness_example(TIGHTNESS_K).unwrap();
    outcome(
        (t.reg_t, t.s_t, t.i_t) == (1.0, 6.0, 3.0) && t.ratio == 2.0 && t.ratio <= TIGHTNESS_K as f64 / 2.0,
        format!("k={TIGHTNESS_K}: (reg, S, I) = ({}, {}, {}), ratio {}", t.reg_t, t.s_t, t.i_t, t.ratio),
    )
}

fn c5_inconsistency() -> Outcome {
    let exact = inconsistency_demo(EPSILON, Population::Exact, &LearnerSpec::bayes_oracle()).unwrap();
    let sampled = inconsistency_demo(
        EPSILON,
        Population::Sampled {
            n: LOGISTIC_SAMPLES,
            seed: SEED,
        },
        &LearnerSpec::default(),
    )
    .unwrap();
    let ok = (exact.tree_regret - 0.1).abs() <= ORACLE_TOLERANCE
        && exact.ft_regret == 0.0
        && (sampled.tree_regret - TREE_REGRET_TARGET).abs() <= TREE_REGRET_TOLERANCE
        && sampled.ft_regret <= FT_REGRET_MAX;
    outcome(
        ok,
        format!(
            "oracle: tree {:.4} ft {:.4}; logistic n={LOGISTIC_SAMPLES}: tree {:.4} ft {:.4}",
            exact.tree_regret, exact.ft_regret, sampled.tree_regret, sampled.ft_regret
        ),
    )
}

fn c6_error_correction() -> Outcome {
    let mut complete = Vec::new();
    let mut pool = Vec::new();
    let mut ok = true;
    for k in [4, 8] {
        for m in 1..=3 {
            let c = min_dethroning_cost(&TournamentConfig::new(k, m, Semantics::Complete), &SearchOptions::default())
                .unwrap();
            ok &= c.exact && c.cost as usize >= m;
            complete.push(format!("{k}/{m}:{}", c.cost));
            let p = min_dethroning_cost(&TournamentConfig::new(k, m, Semantics::Pool), &SearchOptions::default()).unwrap();
            pool.push(format!("{k}/{m}:{}", p.cost));
        }
    }
    outcome(ok, format!("complete k/m:cost {}; pool (reported) {}", complete.join(" "), pool.join(" ")))
}

fn c7_depth() -> Outcome {
    let ks: Vec<usize> = (2..=10).map(|l| 1usize << l).collect();
    let ms: Vec<usize> = (1..=10).collect();
    let mut over = 0;
    let mut worst: f64 = f64::NEG_INFINITY;
    for sem in [Semantics::Complete, Semantics::Pool] {
        for r in depth_grid(&ks, &ms, sem).unwrap() {
            let gap = r.measured.importance_depth as f64 - r.bounds.min_importance();
            worst = worst.max(gap);
            if gap > DEPTH_SLACK {
                over += 1;
            }
        }
    }
    let mut tracker_over = 0;
    let mut cells = 0;
    for mode in [TrackerMode::Promote, TrackerMode::Stay] {
        let rows = tracker_grid(TRACKER_MAX_LOG2, mode).unwrap();
        cells += rows.len();
        tracker_over += rows.iter().filter(|r| !r.within).count();
    }
    outcome(
        over == 0 && tracker_over == 0,
        format!(
            "grid 4..1024 x 1..10 both semantics: {over} over, max(measured - bound) {worst:.3}; tracker k <= 2^{TRACKER_MAX_LOG2}: {tracker_over} of {cells} over"
        ),
    )
}

fn c8_legality() -> Outcome {
    let mut double = 0;
    let mut pool_bad = 0;
    let mut schedules = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for l in 2..=10 {
        let k = 1usize << l;
        for m in 1..=10 {
            for sem in [Semantics::Complete, Semantics::Pool] {
                let honest = build_schedule(k, m, sem).unwrap();
                let seed: u64 = rng.gen();
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                let random = build_schedule_with(k, m, sem, |_| Ok(Side::from_bit(r.gen_range(0..2)))).unwrap();
                for s in [&honest, &random] {
                    schedules += 1;
                    double += s.double_plays().len();
                    if sem == Semantics::Pool {
                        pool_bad += (0..k)
                            .filter(|&x| s.losses[x] != s.winners.iter().position(|w| *w == Some(x)).unwrap_or(m))
                            .count();
                    }
                }
            }
        }
    }
    outcome(
        double == 0 && pool_bad == 0,
        format!("{schedules} schedules: {double} double plays, {pool_bad} pool labels not out at exactly m losses"),
    )
}

fn c9_costing() -> Outcome {
    // Acceptance by stratum.
    let mut data = Vec::new();
    for w in [1.0, 0.5, 0.0] {
        for i in 0..COSTING_DRAWS {
            data.push(WeightedBinaryExample::new(vec![w, i as f64], 1, w).unwrap());
        }
    }
    let out = costing_resample(&data, &CostingConfig { seed: SEED, ..CostingConfig::default() }).unwrap();
    let count = |w: f64| out.examples.iter().filter(|e| e.features[0] == w).count();
    let mid = count(0.5) as f64 / COSTING_DRAWS as f64;
    let sigma = (0.25 / COSTING_DRAWS as f64).sqrt();
    let strata_ok = count(1.0) == COSTING_DRAWS && count(0.0) == 0 && (mid - 0.5).abs() <= SIGMAS * sigma;

    // Translation: the expected number of accepted mistakes of a fixed
    // classifier is its importance-weighted error divided by the normalizer.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let set: Vec<WeightedBinaryExample> = (0..1000)
        .map(|_| {
            let x: f64 = rng.gen();
            let y = u8::from(rng.gen_bool(0.3 + 0.4 * x));
            WeightedBinaryExample::new(vec![x], y, rng.gen_range(0.0..2.0)).unwrap()
        })
        .collect();
    let wrong = |e: &WeightedBinaryExample| u8::from(e.features[0] > 0.5) != e.label;
    let z = set.iter().map(|e| e.weight).fold(0.0, f64::max);
    let expected: f64 = set.iter().filter(|e| wrong(e)).map(|e| e.weight / z).sum();
    let var: f64 = set.iter().filter(|e| wrong(e)).map(|e| (e.weight / z) * (1.0 - e.weight / z)).sum();
    let mean = (0..COSTING_REPETITIONS)
        .map(|r| {
            let s = costing_resample(&set, &CostingConfig { seed: SEED + 1000 + r, ..CostingConfig::default() }).unwrap();
            s.examples.iter().filter(|e| wrong(e)).count() as f64
        })
        .sum::<f64>()
        / COSTING_REPETITIONS as f64;
    let se = (var / COSTING_REPETITIONS as f64).sqrt();
    let translation_ok = (mean - expected).abs() <= SIGMAS * se;
    outcome(
        strata_ok && translation_ok,
        format!(
            "strata accepted {}/{}/{} of {COSTING_DRAWS}, middle {mid:.4} (3 sigma {:.4}); accepted mistakes mean {mean:.3} vs expected {expected:.3} (3 sigma {:.3})",
            count(1.0),
            count(0.5),
            count(0.0),
            SIGMAS * sigma,
            SIGMAS * se
        ),
    )
}

fn c10_parity() -> Outcome {
    let r = parity_adversary_run(ParityTarget::FilterTree, 3).unwrap();
    outcome(
        r.best.ratio.value() >= PARITY_MIN_RATIO,
        format!("k=3 pair ({}, {}): ratio {:.4}, adversary regret {}", r.best.i, r.best.j, r.best.ratio.value(), r.best.adversary_regret),
    )
}

fn c11_bench() -> Outcome {
    let sources: Vec<DatasetSource> = ["noise3", "blobs8", "ring6", "binary2"]
        .iter()
        .map(|g| DatasetSource::generator(g))
        .collect();
    let entries = run_bench(&sources, &BenchConfig::default());
    let rows: Vec<_> = entries.iter().filter_map(|e| e.row.as_ref()).collect();
    let ft_wins = rows.iter().filter(|r| r.mean_error[1] <= r.mean_error[0]).count();
    let close = rows.iter().filter(|r| (r.mean_error[3] - r.mean_error[2]).abs() <= BENCH_AP_GAP).count();
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{} [{:.2} {:.2} {:.2} {:.2}]", r.dataset, r.mean_error[0], r.mean_error[1], r.mean_error[2], r.mean_error[3]))
        .collect();
    outcome(
        rows.len() >= 3 && 2 * ft_wins > rows.len() && 2 * close > rows.len(),
        format!(
            "FT <= Tree on {ft_wins}/{n}, |APFT - AP| <= {BENCH_AP_GAP} on {close}/{n}; tree ft ap apft: {}",
            table.join(", "),
            n = rows.len()
        ),
    )
}

fn run_ect(args: &[&str], out: &Path, jobs: &str) -> (serde_json::Value, Vec<u8>) {
    let o = Command::new(env!("CARGO_BIN_EXE_ect"))
        .args(args)
        .args(["--format", "json", "--seed", "7", "--jobs", jobs, "--out"])
        .arg(out)
        .env_remove("ECT_SEED")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let name = v["metadata"]["command"].as_str().unwrap().replace(' ', "_");
    let csv = std::fs::read(out.join(format!("{name}.csv"))).unwrap();
    (v, csv)
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut same = true;
    let mut notes = Vec::new();
    for (label, args) in [
        ("verify filter", vec!["verify", "filter", "--distributions", "64"]),
        ("verify tournament", vec!["verify", "tournament"]),
        ("bench", vec!["bench", "--splits", "3"]),
    ] {
        let (a, ca) = run_ect(&args, &dir.path().join("a"), "1");
        let (b, cb) = run_ect(&args, &dir.path().join("b"), "4");
        let da = serde_json::to_string(&a["data"]).unwrap();
        let db = serde_json::to_string(&b["data"]).unwrap();
        let ok = da == db && ca == cb && a["metadata"]["seed"] == 7;
        same &= ok;
        notes.push(format!("{label}: {} data bytes, {}", da.len(), if ok { "identical" } else { "DIFFERENT" }));
    }
    outcome(same, format!("two runs (1 and 4 jobs), seed 7; {}", notes.join("; ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("filter regret main sweep", c1_main_sweep),
        ("filter regret k/2 bound", c2_literal_bound),
        ("importance audit sweep", c3_lemma1),
        ("tightness at k=8", c4_tightness),
        ("tree inconsistency", c5_inconsistency),
        ("error correction", c6_error_correction),
        ("depth bounds", c7_depth),
        ("scheduling legality", c8_legality),
        ("costing", c9_costing),
        ("parity lower bound", c10_parity),
        ("benchmark ordering", c11_bench),
        ("determinism", c12_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        println!(
            "{} criterion {:>2} {name}: {} [{:.1}s]",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
        if !o.passed {
            failed.push(i + 1);
        }
    }
    println!("acceptance: {} of 12 passed; failed {failed:?}", 12 - failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
