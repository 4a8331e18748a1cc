use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde_json::json;

use super::report::{f, Report, Table};
use super::{AdversaryName, BenchArgs, Context, DepthArgs, PredictArgs, SearchName, SimulateArgs, TrainArgs};
use crate::analysis::{depth_bounds, level_tracker, TrackerMode};
use crate::bench::{run_bench, BenchConfig, DatasetSource, METHODS};
use crate::data::{generate, load_csv, read_table, Dataset, DEFAULT_LABEL_COLUMN, DEFAULT_SPLITS, DEFAULT_TRAIN_FRACTION, GENERATORS};
use crate::domain::{CostVector, Example, LabelTree};
use crate::error::{Error, Result};
use crate::learners::CostingConfig;
use crate::reductions::{
    load_model, predict_label, save_model, train_all_pairs, train_apft, train_cs_filter_tree, train_filter_tree,
    train_tree, ReductionKind, ReductionModel, TrainOptions,
};
use crate::tournaments::{
    measure_depth, min_dethroning_cost, parity_adversary_run, run_tournament, write_transcript, AdversaryModel,
    ParityTarget, Ratio, SearchMode, SearchOptions, Semantics, TournamentConfig, Truth, DEFAULT_SEARCH_CAP,
};

fn ratio_text(r: Ratio) -> String {
    match r {
        Ratio::Finite(v) => f(v, 4),
        Ratio::Unbounded => "unbounded".into(),
    }
}

fn label_column(ctx: &Context, flag: &Option<String>) -> Result<String> {
    ctx.config.pick(flag.clone(), "data.label_column", DEFAULT_LABEL_COLUMN.to_string())
}

pub fn bench(ctx: &Context, a: &BenchArgs) -> Result<Report> {
    let cfg = &ctx.config;
    let column = label_column(ctx, &a.label_column)?;
    let mut sources: Vec<DatasetSource> = a
        .data
        .iter()
        .map(|p| DatasetSource::Csv {
            path: p.clone(),
            label_column: column.clone(),
        })
        .collect();
    sources.extend(a.generator.iter().map(|g| DatasetSource::generator(g)));
    if sources.is_empty() {
        sources = GENERATORS.iter().map(|(g, _)| DatasetSource::generator(g)).collect();
    }
    let bc = BenchConfig {
        master_seed: ctx.seed,
        splits: cfg.pick(a.splits, "data.splits", DEFAULT_SPLITS)?,
        train_fraction: cfg.pick(a.train_fraction, "data.train_fraction", DEFAULT_TRAIN_FRACTION)?,
        learner: a.learner.resolve(cfg)?,
    };
    if bc.splits == 0 || !(bc.train_fraction > 0.0 && bc.train_fraction < 1.0) {
        return Err(Error::InvalidArgument("need splits >= 1 and a train fraction in (0, 1)".into()));
    }
    let entries = run_bench(&sources, &bc);
    if entries.iter().all(|e| e.row.is_none()) {
        let why: Vec<String> = entries
            .iter()
            .map(|e| format!("{}: {}", e.source, e.error.as_deref().unwrap_or("?")))
            .collect();
        return Err(Error::Dataset(format!("every dataset failed; {}", why.join("; "))));
    }
    let mut t = Table::new("mean test error (%)", &["dataset", "k", "rows", "tree", "filter_tree", "all_pairs", "apft", "best"]);
    let mut failures = Table::new("failed datasets", &["source", "error"]);
    for e in &entries {
        match (&e.row, &e.error) {
            (Some(r), _) => {
                let mut row = vec![r.dataset.clone(), r.k.to_string(), r.rows.to_string()];
                row.extend(r.mean_error.iter().map(|v| f(*v, 2)));
                row.push(r.best.join(" "));
                t.push(row);
            }
            (None, msg) => failures.push(vec![e.source.clone(), msg.clone().unwrap_or_default()]),
        }
    }
    let mut rep = Report::new("bench", ctx.metadata());
    rep.text.push(format!(
        "{} splits, train fraction {:.4}, learner {}, master seed {}",
        bc.splits,
        bc.train_fraction,
        bc.learner.name(),
        bc.master_seed
    ));
    rep.data = json!({ "config": bc, "methods": METHODS, "entries": entries });
    rep.tables.push(t);
    if !failures.rows.is_empty() {
        rep.tables.push(failures);
    }
    Ok(rep)
}

fn semantics(ctx: &Context, flag: &Option<String>) -> Result<Semantics> {
    Semantics::parse(&ctx.config.pick(flag.clone(), "tournament.semantics", "complete".to_string())?)
}

fn adversary(a: &SimulateArgs, k: usize, seed: u64) -> Result<AdversaryModel> {
    let budget = || {
        a.budget
            .ok_or_else(|| Error::InvalidArgument("this adversary needs --budget".into()))
    };
    let model = match a.adversary {
        AdversaryName::None => AdversaryModel::None,
        AdversaryName::BudgetFullLie => AdversaryModel::BudgetFullLie {
            budget: budget()?,
            tournaments: a.tournaments.clone(),
        },
        AdversaryName::BudgetHalfLie => AdversaryModel::BudgetHalfLie { budget: budget()? },
        AdversaryName::RateRandom => AdversaryModel::RateRandom {
            rate: a
                .rate
                .ok_or_else(|| Error::InvalidArgument("rate_random needs --rate".into()))?,
            seed,
            budget: a.budget,
        },
        AdversaryName::Parity => {
            let p = a.pair.as_deref().unwrap_or(&[0, 1]);
            if p.len() != 2 {
                return Err(Error::InvalidArgument(format!("--pair takes two labels i,j, got {}", p.len())));
            }
            AdversaryModel::Parity { i: p[0], j: p[1] }
        }
        AdversaryName::Staged => AdversaryModel::Staged,
    };
    model.validate(k)?;
    Ok(model)
}

pub fn simulate(ctx: &Context, a: &SimulateArgs, out: Option<&Path>) -> Result<Report> {
    let cfg = &ctx.config;
    let k = cfg.pick(a.k, "tournament.k", 8usize)?;
    let m = cfg.pick(a.m, "tournament.m", 3usize)?;
    let sem = semantics(ctx, &a.semantics)?;
    let repeated = a.repeated || cfg.get::<bool>("tournament.repeated")?.unwrap_or(false);
    let tc = TournamentConfig {
        k,
        m,
        semantics: sem,
        repeated,
    };
    tc.engine()?;
    let mut model = adversary(a, k, ctx.seed)?;
    let mut meta = ctx.metadata();

    // Without an explicit pair the parity adversary tries all of them.
    let parity = if a.adversary == AdversaryName::Parity {
        let target = ParityTarget::Tournament { m, semantics: sem, repeated };
        let rep = parity_adversary_run(target, k)?;
        let chosen = match &a.pair {
            Some(p) => rep.pairs.iter().find(|r| r.i == p[0] && r.j == p[1]).cloned().expect("pair was validated"),
            None => rep.best.clone(),
        };
        model = AdversaryModel::Parity { i: chosen.i, j: chosen.j };
        Some((rep, chosen))
    } else {
        None
    };

    let run = run_tournament(&tc, &Truth::ranked(k), &model)?;
    let ratio = parity.as_ref().map_or(run.ratio.ratio, |(_, c)| c.ratio);

    let transcript_path = a
        .transcript
        .clone()
        .or_else(|| out.map(|d| d.join("simulate_transcript.jsonl")));
    if let Some(p) = &transcript_path {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        write_transcript(&run.transcript, BufWriter::new(File::create(p)?))?;
    }

    let search = match a.search.or(cfg.raw("search.mode").map(|s| match s {
        "exhaustive" => SearchName::Exhaustive,
        "stochastic" => SearchName::Stochastic,
        _ => SearchName::None,
    })) {
        None | Some(SearchName::None) => None,
        Some(mode) => {
            let opts = SearchOptions {
                mode: match mode {
                    SearchName::Stochastic => SearchMode::Stochastic {
                        samples: a.samples.unwrap_or(10_000),
                        seed: ctx.seed,
                    },
                    _ => SearchMode::Exhaustive,
                },
                cap: cfg.pick(a.cap, "search.cap", DEFAULT_SEARCH_CAP)?,
            };
            let r = min_dethroning_cost(&tc, &opts)?;
            meta.notes.insert("search_explored".into(), json!(r.explored));
            Some(r)
        }
    };

    let mut t = Table::new("summary", &["field", "value"]);
    let mut kv = |key: &str, v: String| t.push(vec![key.to_string(), v]);
    kv("k", k.to_string());
    kv("m", m.to_string());
    kv("semantics", sem.name().into());
    kv("repeated", repeated.to_string());
    kv("adversary", model.name().into());
    kv("winner", run.winner.to_string());
    kv("best", run.best.to_string());
    kv("contradictions", run.contradictions.to_string());
    kv("weighted_errors", run.weighted_errors.to_string());
    kv("first_phase_rounds", run.first_phase_rounds.to_string());
    kv("total_rounds", run.total_rounds.to_string());
    kv("importance_depth", run.depth.to_string());
    kv("ratio", ratio_text(ratio));
    if let AdversaryModel::Parity { i, j } = model {
        kv("parity_pair", format!("{i},{j}"));
    }
    if let Some(r) = &search {
        kv("min_dethroning_cost", r.cost.to_string());
        kv("search_exact", r.exact.to_string());
    }
    let mut rep = Report::new("simulate", meta);
    rep.data = json!({
        "config": tc,
        "adversary": model,
        "winner": run.winner,
        "best": run.best,
        "first_phase_winners": run.first_phase_winners,
        "contradictions": run.contradictions,
        "weighted_errors": run.weighted_errors,
        "first_phase_rounds": run.first_phase_rounds,
        "total_rounds": run.total_rounds,
        "importance_depth": run.depth,
        "ratio": ratio,
        "ratio_outcome": run.ratio,
        "parity": parity.as_ref().map(|(r, _)| r),
        "search": search.as_ref().map(|r| json!({ "cost": r.cost, "best_label": r.best_label, "exact": r.exact })),
        "matches": run.transcript.len(),
    });
    rep.tables.push(t);
    if let Some(p) = transcript_path {
        rep.text.push(format!("transcript: {} ({} matches)", p.display(), run.transcript.len()));
    }
    Ok(rep)
}

pub fn depth(ctx: &Context, a: &DepthArgs) -> Result<Report> {
    let k = ctx.config.pick(a.k, "tournament.k", 8usize)?;
    let m = ctx.config.pick(a.m, "tournament.m", 3usize)?;
    let b = depth_bounds(k, m)?;
    let mut cases = Table::new("bounds", &["case", "first_phase", "importance_depth", "applies"]);
    for c in 0..4 {
        cases.push(vec![
            (c + 1).to_string(),
            f(b.first_phase[c], 4),
            f(b.importance[c], 4),
            (c < 3 || b.case4_applicable).to_string(),
        ]);
    }
    let mut measured = Table::new(
        "measured",
        &["semantics", "first_phase_rounds", "second_phase_importance", "importance_depth", "repeated_depth", "tracker_rounds"],
    );
    let mut per = serde_json::Map::new();
    for sem in [Semantics::Complete, Semantics::Pool] {
        let d = measure_depth(k, m, sem)?;
        let tr = level_tracker(k as u64, m, TrackerMode::for_semantics(sem))?;
        measured.push(vec![
            sem.name().into(),
            d.first_phase_rounds.to_string(),
            d.final_importance.to_string(),
            d.importance_depth.to_string(),
            d.repeated_depth.to_string(),
            tr.rounds.to_string(),
        ]);
        per.insert(sem.name().into(), json!({ "measured": d, "tracker_rounds": tr.rounds }));
    }
    let mut rep = Report::new("depth", ctx.metadata());
    rep.text.push(format!("k = {k}, m = {m}, ceil2(m) = {}, floor2(m) = {}", b.ceil_m2, b.floor_m2));
    rep.text.push(format!(
        "chernoff first-phase depth {:.4}; plus second phase ceil2(m) = {:.4}",
        b.chernoff_d,
        b.chernoff_d + b.ceil_m2 as f64
    ));
    rep.text.push(format!("bracketed final-phase rounds: {}", b.bracketed_final_rounds));
    rep.data = json!({ "bounds": b, "semantics": per });
    rep.tables.push(cases);
    rep.tables.push(measured);
    Ok(rep)
}

fn load_dataset(ctx: &Context, data: &Option<std::path::PathBuf>, generator: &Option<String>, column: &Option<String>) -> Result<Dataset> {
    match (data, generator) {
        (Some(p), _) => load_csv(p, &label_column(ctx, column)?),
        (None, Some(g)) => generate(g),
        (None, None) => Err(Error::InvalidArgument("need --data or --generator".into())),
    }
}

pub fn train(ctx: &Context, a: &TrainArgs) -> Result<Report> {
    let cfg = &ctx.config;
    let data = load_dataset(ctx, &a.data, &a.generator, &a.label_column)?;
    let kind = ReductionKind::parse(&cfg.pick(a.kind.clone(), "reduction.kind", "filter_tree".to_string())?)?;
    let tree = match cfg.pick(a.tree.clone(), "reduction.tree", "balanced".to_string())?.as_str() {
        "balanced" => LabelTree::balanced(data.k())?,
        "paired" => LabelTree::paired(data.k())?,
        shape => LabelTree::parse(shape)?,
    };
    if tree.k() != data.k() {
        return Err(Error::InvalidArgument(format!("tree has {} leaves but the data has {} labels", tree.k(), data.k())));
    }
    let mut opts = TrainOptions::new(a.learner.resolve(cfg)?);
    if a.shared {
        opts = opts.shared();
    }
    if a.costing {
        opts = opts.with_costing(CostingConfig {
            seed: ctx.seed,
            ..CostingConfig::default()
        });
    }
    let rows: Vec<usize> = (0..data.len()).collect();
    let examples = data.examples(&rows);
    let mut model = match kind {
        ReductionKind::Tree => train_tree(&tree, &examples, &opts)?,
        ReductionKind::FilterTree => train_filter_tree(&tree, &examples, &opts)?,
        ReductionKind::CsFilterTree => {
            let costed: Vec<Example> = examples
                .into_iter()
                .zip(&data.labels)
                .map(|(e, &y)| Example::costed(e.features, CostVector::one_hot_loss(data.k(), y)))
                .collect();
            train_cs_filter_tree(&tree, &costed, &opts)?
        }
        ReductionKind::AllPairs => train_all_pairs(data.k(), &examples, &opts)?,
        ReductionKind::Apft => train_apft(&tree, &examples, &opts)?,
    };
    model.labels = Some(data.label_names.clone());
    model.feature_names = Some(data.feature_names.clone());
    save_model(&model, &a.model)?;
    let wrong = (0..data.len())
        .filter(|&i| predict_label(&model, &data.features[i]) != data.labels[i])
        .count();
    let train_error = 100.0 * wrong as f64 / data.len() as f64;
    let mut t = Table::new("model", &["field", "value"]);
    for (key, v) in [
        ("dataset", data.name.clone()),
        ("kind", kind.name().to_string()),
        ("k", data.k().to_string()),
        ("rows", data.len().to_string()),
        ("dropped_rows", data.dropped_rows.to_string()),
        ("classifiers", model.classifiers.len().to_string()),
        ("training_error_percent", f(train_error, 2)),
        ("warnings", model.warnings.len().to_string()),
        ("model", a.model.display().to_string()),
    ] {
        t.push(vec![key.into(), v]);
    }
    let mut rep = Report::new("train", ctx.metadata());
    rep.data = json!({
        "dataset": data.name,
        "kind": kind,
        "k": data.k(),
        "rows": data.len(),
        "dropped_rows": data.dropped_rows,
        "training_error_percent": train_error,
        "warnings": model.warnings,
    });
    rep.tables.push(t);
    Ok(rep)
}

fn check_features(model: &ReductionModel, names: &[String]) -> Result<()> {
    match &model.feature_names {
        Some(expected) if expected != names => Err(Error::Dataset(format!(
            "feature columns {names:?} do not match the model's {expected:?}"
        ))),
        _ => Ok(()),
    }
}

pub fn predict(ctx: &Context, a: &PredictArgs) -> Result<Report> {
    let model = load_model(&a.model)?;
    let table = read_table(&a.data, &label_column(ctx, &a.label_column)?, false)?;
    check_features(&model, &table.feature_names)?;
    let names = model.labels.clone().unwrap_or_else(|| (0..model.k).map(|i| i.to_string()).collect());
    let predicted: Vec<String> = table
        .features
        .iter()
        .map(|x| names[predict_label(&model, x)].clone())
        .collect();
    let mut t = Table::new("predictions", &["row", "prediction"]);
    for (i, p) in predicted.iter().enumerate() {
        t.push(vec![i.to_string(), p.clone()]);
    }
    if let Some(p) = &a.predictions {
        std::fs::write(p, t.to_csv()?)?;
    }
    let error = table.labels.as_ref().map(|truth| {
        let wrong = truth.iter().zip(&predicted).filter(|(a, b)| a != b).count();
        100.0 * wrong as f64 / truth.len().max(1) as f64
    });
    let mut rep = Report::new("predict", ctx.metadata());
    rep.text.push(format!(
        "{} rows ({} dropped), model kind {}",
        predicted.len(),
        table.dropped_rows,
        model.kind.name()
    ));
    if let Some(e) = error {
        rep.text.push(format!("error against the label column: {e:.2}%"));
    }
    rep.data = json!({ "rows": predicted.len(), "dropped_rows": table.dropped_rows, "error_percent": error, "predictions": predicted });
    rep.tables.push(t);
    Ok(rep)
}
