use std::path::{Path, PathBuf};

use clap::Parser;
use cdi_cli::{Cli, CliError, CliResult};
use serde_json::Value;

fn cdi(args: &[&str]) -> CliResult<String> {
    let cli = Cli::try_parse_from(std::iter::once("cdi").chain(args.iter().copied())).expect("valid arguments");
    cdi_cli::run(&cli)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, name: &str, n: usize, regime: &str, seed: u64) -> PathBuf {
    let out = dir.join(name);
    cdi(&["synth", "--out", s(&out), "--n", &n.to_string(), "--regime", regime, "--seed", &seed.to_string()]).unwrap();
    out
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let k = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[k].to_string()).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn plan_meets_budget_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "c.csv", 800, "informative", 1);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        cdi(&["plan", "--corpus", s(&corpus), "--out", s(out), "--n-human", "200", "--seed", "9"]).unwrap();
    }
    let total: f64 = column(&a, "pi").iter().map(|p| p.parse::<f64>().unwrap()).sum();
    assert!((total - 200.0).abs() < 1e-6, "{total}");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let c = dir.path().join("c.csv");
    cdi(&["plan", "--corpus", s(&corpus), "--out", s(&c), "--n-human", "200", "--seed", "10"]).unwrap();
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn infeasible_budget_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "c.csv", 100, "informative", 1);
    let out = dir.path().join("p.csv");
    let err = cdi(&["plan", "--corpus", s(&corpus), "--out", s(&out), "--n-human", "150"]).unwrap_err();
    assert_eq!(err.exit_code(), 1, "{err}");
}

/// Copies a simulation corpus with the human column blanked, plus a labels
/// file holding the removed values.
fn deployment_copy(dir: &Path, full: &Path) -> (PathBuf, PathBuf) {
    let mut r = csv::Reader::from_path(full).unwrap();
    let headers = r.headers().unwrap().clone();
    let h = headers.iter().position(|c| c == "human_annotation").unwrap();
    let (dep, labels) = (dir.join("dep.csv"), dir.join("labels.csv"));
    let mut w = csv::Writer::from_path(&dep).unwrap();
    let mut l = csv::Writer::from_path(&labels).unwrap();
    w.write_record(&headers).unwrap();
    l.write_record(["id", "human_annotation"]).unwrap();
    for rec in r.records() {
        let rec = rec.unwrap();
        l.write_record([&rec[0], &rec[h]]).unwrap();
        let blanked: Vec<&str> = rec.iter().enumerate().map(|(k, v)| if k == h { "" } else { v }).collect();
        w.write_record(&blanked).unwrap();
    }
    (dep, labels)
}

#[test]
fn resumable_plan_matches_one_shot_plan() {
    let dir = tempfile::tempdir().unwrap();
    let full = synth(dir.path(), "full.csv", 400, "informative", 3);
    let (dep, labels) = deployment_copy(dir.path(), &full);
    let (state, out) = (dir.path().join("state.json"), dir.path().join("resumed.csv"));
    let args = ["plan", "--corpus", s(&dep), "--out", s(&out), "--state", s(&state), "--n-human", "100", "--batch-size", "50", "--seed", "4"];

    let first = cdi(&args).unwrap();
    assert!(first.contains("awaiting_labels"), "{first}");
    let pending = dir.path().join("resumed.pending.csv");
    assert!(!column(&pending, "id").is_empty());
    // resuming without labels is refused and leaves the state untouched
    let before = std::fs::read(&state).unwrap();
    assert_eq!(cdi(&args).unwrap_err().exit_code(), 1);
    assert_eq!(std::fs::read(&state).unwrap(), before);

    let with_labels: Vec<&str> = args.iter().copied().chain(["--labels", s(&labels)]).collect();
    let mut rounds = 0;
    while !out.exists() {
        cdi(&with_labels).unwrap();
        rounds += 1;
        assert!(rounds < 20);
    }
    assert!(!pending.exists());

    let direct = dir.path().join("direct.csv");
    cdi(&["plan", "--corpus", s(&full), "--out", s(&direct), "--n-human", "100", "--batch-size", "50", "--seed", "4"]).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&direct).unwrap());

    // the finished plan estimates on the label-free corpus
    let report = cdi(&["estimate", "--corpus", s(&dep), "--plan", s(&out)]).unwrap();
    assert!(report.contains("confidence_driven"));
}

#[test]
fn edited_corpus_breaks_resume() {
    let dir = tempfile::tempdir().unwrap();
    let full = synth(dir.path(), "full.csv", 300, "informative", 3);
    let (dep, _) = deployment_copy(dir.path(), &full);
    let (state, out) = (dir.path().join("state.json"), dir.path().join("p.csv"));
    let args = ["plan", "--corpus", s(&dep), "--out", s(&out), "--state", s(&state), "--n-human", "60"];
    cdi(&args).unwrap();

    let text = std::fs::read_to_string(&dep).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[5].split(',').map(String::from).collect();
    let k = cells.len() - 2; // confidence
    cells[k] = if cells[k] == "0.5" { "0.25".into() } else { "0.5".into() };
    lines[5] = cells.join(",");
    std::fs::write(&dep, lines.join("\n") + "\n").unwrap();

    let err = cdi(&args).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("does not match the corpus"), "{err}");
}

fn four_row(dir: &Path) -> (PathBuf, PathBuf) {
    let corpus = dir.join("four.csv");
    std::fs::write(
        &corpus,
        "id,llm_annotation,confidence,human_annotation\na,1,0.5,1\nb,0,0.5,1\nc,1,0.5,\nd,0,0.5,\n",
    )
    .unwrap();
    let plan = dir.join("four_plan.csv");
    std::fs::write(&plan, "id,pi,xi,human_annotation\na,0.5,1,1\nb,0.5,1,1\nc,0.5,0,\nd,0.5,0,\n").unwrap();
    (corpus, plan)
}

#[test]
fn four_row_estimate_at_lambda_one() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, plan) = four_row(dir.path());
    let out = dir.path().join("r.json");
    let text = cdi(&["estimate", "--corpus", s(&corpus), "--plan", s(&plan), "--method", "non-adaptive", "--json", s(&out)])
        .unwrap();
    assert!(text.contains("at 90%"), "{text}");
    let r = json(&out);
    assert_eq!(r["estimate"].as_f64(), Some(1.0));
    assert_eq!(r["lambda"][0].as_f64(), Some(1.0));
    assert_eq!(r["lambda_unclamped"][0], Value::Null);
    assert_eq!(r["alpha"].as_f64(), Some(0.1));
    assert_eq!(r["n"].as_u64(), Some(4));
    assert_eq!(r["provenance"]["lambda_mode"], "fixed");
    let (lo, hi) = (r["ci_lower"].as_f64().unwrap(), r["ci_upper"].as_f64().unwrap());
    assert!(lo < 1.0 && 1.0 < hi);
}

#[test]
fn tuned_report_has_unclamped_lambda_and_gain() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "c.csv", 1000, "informative", 8);
    let plan = dir.path().join("p.csv");
    cdi(&["plan", "--corpus", s(&corpus), "--out", s(&plan), "--n-human", "250", "--seed", "2"]).unwrap();
    let out = dir.path().join("r.json");
    cdi(&["estimate", "--corpus", s(&corpus), "--plan", s(&plan), "--json", s(&out), "--alpha", "0.05"]).unwrap();
    let r = json(&out);
    let lambda = r["lambda"][0].as_f64().unwrap();
    let raw = r["lambda_unclamped"][0].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&lambda));
    assert!((lambda - raw.clamp(0.0, 1.0)).abs() < 1e-5);
    assert!(r["gain_pct"].as_f64().unwrap() > 0.0);
    assert_eq!(r["alpha"].as_f64(), Some(0.05));
    assert!(r["sigma_jj"].as_f64().unwrap() > 0.0);
    assert_eq!(r["provenance"]["corpus_hash"].as_str().unwrap().len(), 16);
}

#[test]
fn odds_ratio_degenerate_stratum() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.csv");
    let plan = dir.path().join("p.csv");
    let mut c = String::from("id,x_1,llm_annotation,confidence,human_annotation\n");
    let mut p = String::from("id,pi,xi,human_annotation\n");
    for i in 0..12 {
        let x = u8::from(i < 4);
        // only one annotated row in the x_1 = 1 stratum
        let selected = if x == 1 { i == 0 } else { i % 2 == 0 };
        let h = if selected { u8::from(i % 3 == 0).to_string() } else { String::new() };
        c.push_str(&format!("r{i},{x},{},0.7,{h}\n", i % 2));
        p.push_str(&format!("r{i},0.5,{},{h}\n", u8::from(selected)));
    }
    std::fs::write(&corpus, c).unwrap();
    std::fs::write(&plan, p).unwrap();
    let err = cdi(&["estimate", "--corpus", s(&corpus), "--plan", s(&plan), "--estimand", "odds_ratio", "--target", "x_1"])
        .unwrap_err();
    assert!(matches!(err, CliError::Computation(_)));
    let msg = err.to_string();
    assert!(msg.contains("4 instances, 1 annotated"), "{msg}");
}

#[test]
fn estimand_needs_a_target() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, plan) = four_row(dir.path());
    let err = cdi(&["estimate", "--corpus", s(&corpus), "--plan", s(&plan), "--estimand", "logistic_coef"]).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let err = cdi(&["estimate", "--corpus", s(&corpus), "--plan", s(&plan), "--alpha", "1.5"]).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, plan) = four_row(dir.path());
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "alpha = 0.2\n").unwrap();
    let out = dir.path().join("r.json");
    cdi(&["estimate", "--corpus", s(&corpus), "--plan", s(&plan), "--config", s(&cfg), "--json", s(&out)]).unwrap();
    assert_eq!(json(&out)["alpha"].as_f64(), Some(0.2));
    cdi(&["estimate", "--corpus", s(&corpus), "--plan", s(&plan), "--config", s(&cfg), "--alpha", "0.3", "--json", s(&out)])
        .unwrap();
    assert_eq!(json(&out)["alpha"].as_f64(), Some(0.3));
}

#[test]
fn simulate_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "c.csv", 600, "informative", 5);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let csv_out = dir.path().join("m.csv");
    let mut texts = Vec::new();
    for out in [&a, &b] {
        texts.push(
            cdi(&["simulate", "--corpus", s(&corpus), "--n-human", "100,200", "--trials", "12", "--json", s(out), "--csv", s(&csv_out)])
                .unwrap(),
        );
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let doc = json(&a);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    for r in rows {
        let llm = r["method"] == "llm_only";
        assert_eq!(r["n_effective"].is_null(), llm, "{r}");
        assert_eq!(r["trials"].as_u64(), Some(12));
    }
    let methods = column(&csv_out, "method");
    let neff = column(&csv_out, "n_effective");
    for (m, ne) in methods.iter().zip(&neff) {
        assert_eq!(m == "llm_only", ne.is_empty());
    }
    assert!(texts[0].contains("note:"));
}

#[test]
fn simulate_needs_complete_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, _) = four_row(dir.path());
    let err = cdi(&["simulate", "--corpus", s(&corpus), "--n-human", "2"]).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn calibrate_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "c.csv", 500, "informative", 6);
    let out = dir.path().join("cal.json");
    cdi(&[
        "calibrate", "--corpus", s(&corpus), "--bins", "8", "--json", s(&out),
        "--sigma2", "0,0.3", "--n-human", "100", "--trials", "5",
    ])
    .unwrap();
    let doc = json(&out);
    let total: u64 = doc["histogram"].as_array().unwrap().iter().map(|b| b["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 500);
    assert_eq!(doc["histogram"].as_array().unwrap().len(), 8);
    assert_eq!(doc["sweep"].as_array().unwrap().len(), 2);
    assert!(doc["welch"]["t"].as_f64().unwrap() > 0.0);

    let perfect = synth(dir.path(), "p.csv", 200, "perfect", 6);
    cdi(&["calibrate", "--corpus", s(&perfect), "--json", s(&out)]).unwrap();
    let doc = json(&out);
    assert_eq!(doc["kappa"].as_f64(), Some(1.0));
    assert!(doc["sweep"].is_null());
    // the perfect surrogate has no incorrect group to compare against
    assert!(doc["welch"].is_null());
}

#[test]
fn annotate_from_transcript() {
    use cdi_annotator::{write_transcript, ChatProvider, ChatRequest, PromptTemplate, ProviderError, RecordingProvider, Task};

    struct Scripted;
    impl ChatProvider for Scripted {
        fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
            let prompt = &request.messages[0].content;
            Ok(if prompt.contains("probability") {
                if prompt.contains("broken") { "no idea".into() } else { "0.85".into() }
            } else {
                "A".into()
            })
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("texts.csv");
    std::fs::write(&input, "id,text,source\nt1,Could you please help?,forum\nt2,broken reply,forum\nt3,Thanks a lot,mail\n").unwrap();

    // record a transcript with the scripted provider through the library
    let template = PromptTemplate::builtin(Task::Politeness).unwrap();
    let options = cdi_annotator::AnnotateOptions::new(cdi_annotator::RequestSettings::new("gpt-4o"));
    let rec = RecordingProvider::new(Scripted);
    let items: Vec<(String, String)> =
        [("t1", "Could you please help?"), ("t2", "broken reply"), ("t3", "Thanks a lot")].map(|(a, b)| (a.into(), b.into())).to_vec();
    cdi_annotator::annotate_corpus(&items, &template, &rec, &options, 2);
    let transcript = dir.path().join("t.jsonl");
    write_transcript(std::fs::File::create(&transcript).unwrap(), &rec.entries()).unwrap();

    let (out, failures) = (dir.path().join("out.csv"), dir.path().join("fail.jsonl"));
    let summary = cdi(&[
        "annotate", "--input", s(&input), "--out", s(&out), "--task", "politeness",
        "--transcript", s(&transcript), "--failures", s(&failures),
    ])
    .unwrap();
    assert!(summary.lines().any(|l| l.split_whitespace().eq(["failed", "1"])), "{summary}");
    assert_eq!(column(&out, "id"), vec!["t1", "t3"]);
    assert_eq!(column(&out, "source"), vec!["forum", "mail"]);
    assert_eq!(column(&out, "confidence"), vec!["0.85", "0.85"]);
    let fail_lines = std::fs::read_to_string(&failures).unwrap();
    assert_eq!(fail_lines.lines().count(), 1);
    assert!(fail_lines.contains("\"t2\"") && fail_lines.contains("no idea"));

    // the annotated file loads as a corpus
    let corpus = cdi_cli::io::load_corpus(&out).unwrap();
    assert_eq!(corpus.corpus.len(), 2);
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), "a.csv", 50, "stratum-flip", 3);
    let b = synth(dir.path(), "b.jsonl", 50, "stratum-flip", 3);
    let fa = cdi_cli::io::load_corpus(&a).unwrap();
    let fb = cdi_cli::io::load_corpus(&b).unwrap();
    assert_eq!(fa, fb);
    assert_eq!(fa.covariates, vec!["x_1", "x_2"]);
}

#[test]
fn binary_exit_codes() {
    use std::process::Command;
    let bin = env!("CARGO_BIN_EXE_cdi");
    let dir = tempfile::tempdir().unwrap();
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("plan"));
    assert_eq!(Command::new(bin).arg("frobnicate").output().unwrap().status.code(), Some(1));

    let missing = Command::new(bin)
        .args(["estimate", "--corpus", s(&dir.path().join("none.csv")), "--plan", "p.csv"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(missing.stdout.is_empty());
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let (corpus, _) = four_row(dir.path());
    let plan = dir.path().join("p.csv");
    std::fs::write(&plan, "id,pi,xi,human_annotation\na,0.5,1,1\nb,0.5,1,1\nc,0.5,0,\nd,0.5,0,\n").unwrap();
    let ok = Command::new(bin).args(["estimate", "--corpus", s(&corpus), "--plan", s(&plan)]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("estimate"));
}
