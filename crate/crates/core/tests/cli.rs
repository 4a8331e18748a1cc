use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ect"))
        .args(args)
        .env_remove("ECT_SEED")
        .output()
        .unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let o = ect(&a);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_honest_and_lying_runs() {
    let v = json(&["simulate", "-k", "8", "-m", "3", "--adversary", "none"]);
    assert_eq!(v["data"]["winner"], 0);
    assert_eq!(v["data"]["contradictions"], 0);

    let v = json(&["simulate", "-k", "8", "-m", "3", "--semantics", "complete", "--adversary", "budget_full_lie", "--budget", "2"]);
    assert_eq!(v["data"]["winner"], v["data"]["best"]);
    assert_eq!(v["data"]["weighted_errors"], 2);
}

#[test]
fn simulate_parity_reaches_two() {
    let v = json(&["simulate", "-k", "3", "-m", "1", "--adversary", "parity"]);
    assert!(v["data"]["ratio"].as_f64().unwrap() >= 2.0);
}

#[test]
fn simulate_parity_accepts_an_explicit_pair() {
    let v = json(&["simulate", "-k", "4", "-m", "1", "--adversary", "parity", "--pair", "0,2"]);
    assert!(v["data"]["parity"].is_object());
    assert_eq!(ect(&["simulate", "-k", "4", "--adversary", "parity", "--pair", "0,1,2"]).status.code(), Some(2));
    assert_eq!(ect(&["simulate", "-k", "4", "--adversary", "parity", "--pair", "0,9"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_a_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.jsonl");
    let v = json(&["simulate", "-k", "5", "-m", "2", "--transcript", t.to_str().unwrap()]);
    let lines: Vec<Value> = std::fs::read_to_string(&t)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len() as u64, v["data"]["matches"].as_u64().unwrap());
    assert!(lines.iter().all(|l| l.get("participants").is_some()));
}

#[test]
fn exit_codes() {
    assert_eq!(ect(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(ect(&["simulate", "-k", "1"]).status.code(), Some(2));
    assert_eq!(ect(&["simulate", "--adversary", "budget_full_lie"]).status.code(), Some(2));
    let refused = ect(&["simulate", "-k", "8", "-m", "3", "--search", "exhaustive", "--cap", "2"]);
    assert_eq!(refused.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("search limit"));
    assert_eq!(ect(&["bench", "--data", "/nonexistent.csv"]).status.code(), Some(2));
    assert_eq!(ect(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_tightness_prints_the_triple() {
    let o = ect(&["verify", "tightness"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("k=8: (reg_T, S_T, I_T) = (1, 6, 3)"));
}

#[test]
fn verify_filter_counts_and_reports_the_odd_k_gap() {
    let v = json(&["verify", "filter"]);
    assert!(v["data"]["instances"].as_u64().unwrap() >= 6400);
    let checks = v["checks"].as_array().unwrap();
    let literal = checks.iter().find(|c| c["name"].as_str().unwrap().contains("k * avg")).unwrap();
    assert_eq!(literal["asserted"], false);
}

#[test]
fn depth_table_values() {
    let o = ect(&["depth", "-k", "8", "-m", "3"]);
    let s = stdout(&o);
    assert!(s.contains("| 1 | 9.0000 | 13.0000 | true |"), "{s}");
    assert!(s.contains("| 2 | 14.5000 | 17.5000 | true |"));
    assert!(s.contains("| 3 | 10.0000 | 14.0000 | true |"));
    assert!(s.contains("chernoff first-phase depth 10.6576"));
    assert!(s.contains("bracketed final-phase rounds: 3"));
    let v = json(&["depth", "-k", "8", "-m", "1"]);
    assert_eq!(v["data"]["semantics"]["complete"]["measured"]["final_importance"], 0);
    assert_eq!(v["data"]["semantics"]["pool"]["measured"]["final_importance"], 0);
}

#[test]
fn seed_precedence_flag_env_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ect.conf");
    std::fs::write(&cfg, "# test\nseed = 5\ndata.splits = 2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let seed_of = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ect"));
        cmd.args(["--config", c, "--format", "json", "depth", "-k", "4", "-m", "1"]).args(extra);
        match env {
            Some(e) => cmd.env("ECT_SEED", e),
            None => cmd.env_remove("ECT_SEED"),
        };
        let v: Value = serde_json::from_slice(&cmd.output().unwrap().stdout).unwrap();
        v["metadata"]["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&[], None), 5);
    assert_eq!(seed_of(&[], Some("9")), 9);
    assert_eq!(seed_of(&["--seed", "11"], Some("9")), 11);

    let v = json(&["--config", c, "bench", "--generator", "binary2"]);
    assert_eq!(v["data"]["config"]["splits"], 2);
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(ect(&["--config", c, "depth"]).status.code(), Some(2));
}

#[test]
fn bench_mixes_failures_and_rows() {
    let v = json(&["bench", "--generator", "binary2", "--data", "/nonexistent.csv", "--splits", "2"]);
    let entries = v["data"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert!(entries[0]["error"].is_string() && entries[0].get("row").is_none());
    assert!(entries[1]["row"].is_object());
    let e = entries[1]["row"]["mean_error"].as_array().unwrap();
    assert!(e.iter().all(|x| x == &e[0]));
}

#[test]
fn out_dir_gets_all_three_formats() {
    let dir = tempfile::tempdir().unwrap();
    let o = ect(&["--out", dir.path().to_str().unwrap(), "verify", "lemma1", "--draws", "200"]);
    assert_eq!(o.status.code(), Some(0));
    for ext in ["json", "csv", "md"] {
        assert!(dir.path().join(format!("verify_lemma1.{ext}")).exists(), "{ext}");
    }
    let csv = std::fs::read_to_string(dir.path().join("verify_lemma1.csv")).unwrap();
    assert!(csv.starts_with("k,draws,violations,worst_slack\n"));
}

fn train_predict(kind: &str, dir: &Path) -> Value {
    let model = dir.join(format!("{kind}.json"));
    let data = dir.join("noise3.csv");
    if !data.exists() {
        let d = ect_core::data::generate("noise3").unwrap();
        ect_core::data::write_csv(&d, &data).unwrap();
    }
    let t = json(&["train", "--data", data.to_str().unwrap(), "--kind", kind, "--model", model.to_str().unwrap()]);
    assert_eq!(t["data"]["k"], 3);
    json(&["predict", "--model", model.to_str().unwrap(), "--data", data.to_str().unwrap()])
}

#[test]
fn train_then_predict_every_kind() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["tree", "filter_tree", "cs_filter_tree", "all_pairs", "apft"] {
        let p = train_predict(kind, dir.path());
        assert_eq!(p["data"]["rows"], 900, "{kind}");
        let err = p["data"]["error_percent"].as_f64().unwrap();
        assert!(err < 60.0, "{kind}: {err}");
        let preds = p["data"]["predictions"].as_array().unwrap();
        assert!(preds.iter().all(|l| ["0", "1", "2"].contains(&l.as_str().unwrap())));
    }
}

#[test]
fn predict_rejects_other_feature_columns() {
    let dir = tempfile::tempdir().unwrap();
    train_predict("filter_tree", dir.path());
    let other = dir.path().join("other.csv");
    std::fs::write(&other, "a,b,c\n1,2,3\n").unwrap();
    let model = dir.path().join("filter_tree.json");
    let o = ect(&["predict", "--model", model.to_str().unwrap(), "--data", other.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
