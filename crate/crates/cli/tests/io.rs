use std::path::Path;

use cdi_cli::io::{load_corpus, load_plan, read_table, write_corpus, write_plan, CorpusFile, IoError};
use cdi_core::sampling::{run_sampling_loop, SimulationOracle};
use cdi_core::losses::LossSpec;
use cdi_core::{Budget, Corpus, CorpusMode, Instance, RngSeed};
use proptest::prelude::*;

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const FOUR: &str = "id,x_1,llm_annotation,confidence,human_annotation,text\n\
a,1,1,0.9,1,\"first, quoted\"\n\
b,0,0,0.6,1,second\n\
c,1,1,0.8,0,third\n\
d,0,0,0.7,0,\n";

#[test]
fn four_row_simulation_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let f = load_corpus(&write(dir.path(), "c.csv", FOUR)).unwrap();
    assert_eq!(f.corpus.len(), 4);
    assert_eq!(f.corpus.mode(), CorpusMode::Simulation);
    assert_eq!(f.covariates, vec!["x_1"]);
    assert_eq!(f.texts[0].as_deref(), Some("first, quoted"));
    assert_eq!(f.texts[3], None);
    assert_eq!(f.corpus.instances()[2].human, Some(0.0));
}

#[test]
fn empty_human_field_means_deployment() {
    let dir = tempfile::tempdir().unwrap();
    let body = FOUR.replace("c,1,1,0.8,0,", "c,1,1,0.8,,");
    let f = load_corpus(&write(dir.path(), "c.csv", &body)).unwrap();
    assert_eq!(f.corpus.mode(), CorpusMode::Deployment);
    assert_eq!(f.corpus.instances()[2].human, None);
}

#[test]
fn bad_confidence_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("id,llm_annotation,confidence\n");
    for k in 0..6 {
        let conf = if k == 5 { "1.3" } else { "0.5" };
        body.push_str(&format!("r{k},1,{conf}\n"));
    }
    let err = load_corpus(&write(dir.path(), "c.csv", &body)).unwrap_err();
    assert!(matches!(err, IoError::Parse { line: 7, .. }), "{err}");
    assert!(err.to_string().contains("line 7"));

    let jsonl: String = (0..6)
        .map(|k| format!("{{\"id\":\"r{k}\",\"llm_annotation\":1,\"confidence\":{}}}\n", if k == 3 { 1.3 } else { 0.5 }))
        .collect();
    let err = load_corpus(&write(dir.path(), "c.jsonl", &jsonl)).unwrap_err();
    assert!(matches!(err, IoError::Parse { line: 4, .. }), "{err}");
}

#[test]
fn missing_column_is_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_corpus(&write(dir.path(), "c.csv", "id,confidence\na,0.5\n")).unwrap_err();
    match err {
        IoError::Schema { missing, .. } => assert_eq!(missing, vec!["llm_annotation"]),
        other => panic!("{other}"),
    }
}

#[test]
fn duplicate_ids_are_violations() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_corpus(&write(dir.path(), "c.csv", "id,llm_annotation,confidence\na,1,0.5\na,0,0.5\n")).unwrap_err();
    assert!(matches!(err, IoError::Invalid { .. }), "{err}");
}

#[test]
fn non_numeric_and_unknown_extension() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_corpus(&write(dir.path(), "c.csv", "id,llm_annotation,confidence\na,yes,0.5\n")).unwrap_err();
    assert!(matches!(err, IoError::Parse { line: 2, .. }), "{err}");
    let err = load_corpus(&write(dir.path(), "c.tsv", "id\n")).unwrap_err();
    assert!(matches!(err, IoError::Format { .. }));
}

#[test]
fn plan_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cdi_core::evaluation::SyntheticConfig::default().with_n(300);
    let corpus = cdi_core::evaluation::generate(&cfg, RngSeed(4)).unwrap();
    let ids: Vec<String> = corpus.instances().iter().map(|i| i.id.clone()).collect();
    let plan = run_sampling_loop(&corpus, &LossSpec::Mean, Budget::new(75.0), RngSeed(1), &mut SimulationOracle).unwrap();
    for name in ["p.csv", "p.jsonl"] {
        let path = dir.path().join(name);
        write_plan(&path, &ids, &plan).unwrap();
        let back = load_plan(&path, &corpus).unwrap();
        assert_eq!(back.pi(), plan.pi());
        assert_eq!(back.xi(), plan.xi());
        assert_eq!(back.labels(), plan.labels());
        assert_eq!(read_table(&path).unwrap().rows.len(), 300);
    }
}

fn arb_corpus() -> impl Strategy<Value = CorpusFile> {
    (0usize..3, 2usize..25).prop_flat_map(|(k, n)| {
        let row = (
            prop::collection::vec(-1e6f64..1e6, k),
            prop_oneof![Just(0.0), Just(1.0), -10.0f64..10.0],
            0.0f64..=1.0,
            prop::option::of(prop_oneof![Just(0.0), Just(1.0), -1e3f64..1e3]),
            prop::option::of("[a-zA-Z0-9 ,;\"']{1,16}"),
        );
        prop::collection::vec(row, n).prop_map(move |rows| {
            let mut instances = Vec::new();
            let mut texts = Vec::new();
            for (i, (x, s, c, h, t)) in rows.into_iter().enumerate() {
                let mut inst = Instance::new(format!("id{i}"), x, s, c);
                inst.human = h;
                instances.push(inst);
                texts.push(t);
            }
            let has_text = texts.iter().any(Option::is_some);
            CorpusFile {
                corpus: Corpus::new(instances),
                covariates: (1..=k).map(|j| format!("x_{j}")).collect(),
                texts: if has_text { texts } else { texts.into_iter().map(|_| None).collect() },
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_round_trips(file in arb_corpus(), jsonl in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(if jsonl { "c.jsonl" } else { "c.csv" });
        write_corpus(&path, &file).unwrap();
        let back = load_corpus(&path).unwrap();
        prop_assert_eq!(back, file);
    }
}
