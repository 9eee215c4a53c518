use std::io::Write;

use cdi_annotator::{
    annotate_corpus, write_transcript, AnnotateOptions, ChatProvider, HttpProvider, PromptTemplate, ProviderConfig,
    RecordingProvider, RequestSettings, Task, TranscriptProvider,
};
use serde_json::Value;

use crate::cli::{AnnotateArgs, TaskArg};
use crate::error::{CliError, CliResult};
use crate::format::render_pairs;
use crate::io::{exact, read_table, write_table, Table, CONFIDENCE, ID, LLM, TEXT};

const LABEL: &str = "llm_label";
const ANOMALY: &str = "confidence_anomaly";

pub fn run(args: &AnnotateArgs) -> CliResult<String> {
    let table = read_table(&args.input)?;
    let missing: Vec<String> = [ID, TEXT].iter().filter(|c| table.column(c).is_none()).map(|c| c.to_string()).collect();
    if !missing.is_empty() {
        return Err(crate::io::IoError::Schema { path: args.input.clone(), missing }.into());
    }
    let (id_col, text_col) = (table.column(ID).expect("checked"), table.column(TEXT).expect("checked"));
    let as_text = |v: &Value| match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    };
    let items: Vec<(String, String)> =
        table.rows.iter().map(|r| (as_text(&r.cells[id_col]), as_text(&r.cells[text_col]))).collect();

    let task = match args.task {
        TaskArg::Politeness => Task::Politeness,
        TaskArg::Stance => Task::Stance,
        TaskArg::Bias => Task::Bias,
    };
    let template = PromptTemplate::builtin(task).expect("built-in task");
    let request = RequestSettings::new(args.model.clone());
    let provider: Box<dyn ChatProvider + Send + Sync> = match (&args.transcript, &args.endpoint) {
        (Some(path), _) => Box::new(TranscriptProvider::load(path)?),
        (None, Some(endpoint)) => {
            let config = ProviderConfig {
                request: request.clone(),
                retries: args.retries,
                api_key_env: args.api_key_env.clone(),
                ..ProviderConfig::new(endpoint.clone(), args.model.clone())
            };
            Box::new(HttpProvider::from_env(config).map_err(|e| CliError::Validation(e.to_string()))?)
        }
        (None, None) => return Err(CliError::Validation("either --transcript or --endpoint is required".into())),
    };
    let options = AnnotateOptions::new(request);
    let recorder = RecordingProvider::new(&*provider);
    let outcomes = match &args.record {
        Some(_) => annotate_corpus(&items, &template, &recorder, &options, args.concurrency),
        None => annotate_corpus(&items, &template, &*provider, &options, args.concurrency),
    };
    if let Some(path) = &args.record {
        let file = std::fs::File::create(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        write_transcript(std::io::BufWriter::new(file), &recorder.entries())?;
    }

    let mut columns: Vec<String> =
        table.columns.iter().filter(|c| ![LLM, CONFIDENCE, LABEL, ANOMALY].contains(&c.as_str())).cloned().collect();
    let kept: Vec<usize> = columns.iter().map(|c| table.column(c).expect("from table")).collect();
    columns.extend([LLM, CONFIDENCE, LABEL, ANOMALY].map(String::from));
    let mut out = Table::new(columns);
    let mut failures = Vec::new();
    let mut anomalies = 0;
    for (row, outcome) in table.rows.iter().zip(outcomes) {
        match outcome {
            Ok(a) => {
                anomalies += usize::from(a.confidence_anomaly);
                let mut cells: Vec<Value> = kept.iter().map(|&k| row.cells[k].clone()).collect();
                cells.extend([exact(a.value), exact(a.confidence), Value::String(a.label), Value::from(u8::from(a.confidence_anomaly))]);
                out.push(cells);
            }
            Err(f) => failures.push(f),
        }
    }
    write_table(&args.out, &out)?;

    if let Some(path) = &args.failures {
        let io = |e: std::io::Error| CliError::Validation(format!("{}: {e}", path.display()));
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        for f in &failures {
            writeln!(w, "{}", serde_json::to_string(f).expect("failures serialize")).map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    if !failures.is_empty() {
        eprintln!("warning: {} row(s) could not be annotated; first: {}: {}", failures.len(), failures[0].id, failures[0].error);
    }
    Ok(render_pairs(&[
        ("rows", items.len().to_string()),
        ("annotated", out.rows.len().to_string()),
        ("failed", failures.len().to_string()),
        ("confidence_anomalies", anomalies.to_string()),
    ]))
}
