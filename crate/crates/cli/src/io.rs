//! Corpus, plan and label files in comma-separated or JSON-lines form.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use cdi_core::sampling::SamplingPlan;
use cdi_core::{Corpus, Error as CoreError, Instance, Violation};
use serde_json::{Map, Value};
use thiserror::Error;

pub const ID: &str = "id";
pub const LLM: &str = "llm_annotation";
pub const CONFIDENCE: &str = "confidence";
pub const HUMAN: &str = "human_annotation";
pub const TEXT: &str = "text";
pub const COVARIATE_PREFIX: &str = "x_";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}: missing required column(s): {}", path.display(), missing.join(", "))]
    Schema { path: PathBuf, missing: Vec<String> },
    #[error("{}: unsupported extension (use .csv or .jsonl)", path.display())]
    Format { path: PathBuf },
    #[error("{}: corpus failed validation: {}", path.display(), list(violations))]
    Invalid { path: PathBuf, violations: Vec<Violation> },
    #[error("{}: {message}", path.display())]
    Mismatch { path: PathBuf, message: String },
}

fn list(violations: &[Violation]) -> String {
    let shown: Vec<String> = violations.iter().take(5).map(ToString::to_string).collect();
    let more = violations.len().saturating_sub(5);
    if more > 0 {
        format!("{} (and {more} more)", shown.join("; "))
    } else {
        shown.join("; ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn of(path: &Path) -> Result<Self, IoError> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") => Ok(Format::Csv),
            Some("jsonl" | "ndjson") => Ok(Format::Jsonl),
            _ => Err(IoError::Format { path: path.to_path_buf() }),
        }
    }
}

/// Rows of loosely typed cells; CSV cells arrive as strings, empty ones as
/// `null`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// 1-based line in the source file.
    pub line: usize,
    pub cells: Vec<Value>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn push(&mut self, cells: Vec<Value>) {
        let line = self.rows.len() + 2;
        self.rows.push(Row { line, cells });
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

pub fn read_table(path: &Path) -> Result<Table, IoError> {
    let format = Format::of(path)?;
    let file = File::open(path).map_err(io_err(path))?;
    match format {
        Format::Csv => read_csv(path, file),
        Format::Jsonl => read_jsonl(path, BufReader::new(file)),
    }
}

fn read_csv(path: &Path, file: File) -> Result<Table, IoError> {
    let parse = |line: usize, message: String| IoError::Parse { path: path.to_path_buf(), line, message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    let columns: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    check_unique(&columns).map_err(|m| parse(1, m))?;
    let mut table = Table::new(columns);
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let cells = record
            .iter()
            .map(|c| if c.is_empty() { Value::Null } else { Value::String(c.to_string()) })
            .collect();
        table.rows.push(Row { line, cells });
    }
    Ok(table)
}

fn read_jsonl(path: &Path, reader: impl BufRead) -> Result<Table, IoError> {
    let parse = |line: usize, message: String| IoError::Parse { path: path.to_path_buf(), line, message };
    let mut columns: Vec<String> = Vec::new();
    let mut records: Vec<(usize, Map<String, Value>)> = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let text = line.map_err(io_err(path))?;
        if text.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| parse(k + 1, e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(parse(k + 1, "expected a JSON object".into()));
        };
        for key in map.keys() {
            if !columns.contains(key) {
                columns.push(key.clone());
            }
        }
        records.push((k + 1, map));
    }
    let mut table = Table::new(columns);
    for (line, mut map) in records {
        let cells = table.columns.iter().map(|c| map.remove(c).unwrap_or(Value::Null)).collect();
        table.rows.push(Row { line, cells });
    }
    Ok(table)
}

fn check_unique(columns: &[String]) -> Result<(), String> {
    let mut seen = std::collections::HashSet::new();
    match columns.iter().find(|c| !seen.insert(c.as_str())) {
        Some(dup) => Err(format!("duplicate column '{dup}'")),
        None => Ok(()),
    }
}

pub fn write_table(path: &Path, table: &Table) -> Result<(), IoError> {
    let format = Format::of(path)?;
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let csv_err = |e: csv::Error| IoError::Io { path: path.to_path_buf(), source: e.into() };
            w.write_record(&table.columns).map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row.cells.iter().map(csv_cell)).map_err(csv_err)?;
            }
            w.flush().map_err(io_err(path))?;
        }
        Format::Jsonl => {
            for row in &table.rows {
                let map: Map<String, Value> = table.columns.iter().cloned().zip(row.cells.iter().cloned()).collect();
                let line = serde_json::to_string(&Value::Object(map)).expect("tables serialize");
                writeln!(out, "{line}").map_err(io_err(path))?;
            }
        }
    }
    out.flush().map_err(io_err(path))
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Exact (shortest round-trip) JSON number.
pub fn exact(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn float(v: &Value) -> Result<Option<f64>, String> {
    let x = match v {
        Value::Null => return Ok(None),
        Value::Number(n) => n.as_f64().ok_or_else(|| format!("number {n} out of range"))?,
        Value::String(s) => s.trim().parse::<f64>().map_err(|_| format!("'{s}' is not a number"))?,
        Value::Bool(b) => return Err(format!("'{b}' is not a number")),
        other => return Err(format!("{other} is not a number")),
    };
    if x.is_finite() {
        Ok(Some(x))
    } else {
        Err(format!("'{}' is not a finite number", csv_cell(v)))
    }
}

fn text(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

/// A loaded corpus with the file-level metadata the core types do not keep.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFile {
    pub corpus: Corpus,
    /// Covariate column names, `x_` prefix included, in file order.
    pub covariates: Vec<String>,
    pub texts: Vec<Option<String>>,
}

impl CorpusFile {
    /// Position of a covariate given with or without its prefix.
    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariates
            .iter()
            .position(|c| c == name || c.strip_prefix(COVARIATE_PREFIX) == Some(name))
    }

    pub fn ids(&self) -> Vec<String> {
        self.corpus.instances().iter().map(|i| i.id.clone()).collect()
    }
}

pub fn load_corpus(path: &Path) -> Result<CorpusFile, IoError> {
    corpus_from_table(path, &read_table(path)?)
}

pub fn corpus_from_table(path: &Path, table: &Table) -> Result<CorpusFile, IoError> {
    let missing: Vec<String> = [ID, LLM, CONFIDENCE]
        .iter()
        .filter(|c| table.column(c).is_none())
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(IoError::Schema { path: path.to_path_buf(), missing });
    }
    let col = |name| table.column(name).expect("checked above");
    let (id_col, llm_col, conf_col) = (col(ID), col(LLM), col(CONFIDENCE));
    let (human_col, text_col) = (table.column(HUMAN), table.column(TEXT));
    let covariates: Vec<(usize, String)> = table
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.starts_with(COVARIATE_PREFIX))
        .map(|(k, c)| (k, c.clone()))
        .collect();

    let mut instances = Vec::with_capacity(table.rows.len());
    let mut texts = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let parse = |message: String| IoError::Parse { path: path.to_path_buf(), line: row.line, message };
        let cell = |k: usize| row.cells.get(k).unwrap_or(&Value::Null);
        let required = |k: usize, name: &str| -> Result<f64, IoError> {
            float(cell(k)).map_err(|m| parse(format!("{name}: {m}")))?.ok_or_else(|| parse(format!("{name} is empty")))
        };
        let id = text(cell(id_col)).filter(|s| !s.is_empty()).ok_or_else(|| parse("id is empty".into()))?;
        let surrogate = required(llm_col, LLM)?;
        let confidence = required(conf_col, CONFIDENCE)?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(parse(format!("confidence {} outside [0, 1]", csv_cell(cell(conf_col)))));
        }
        let x = covariates
            .iter()
            .map(|(k, name)| required(*k, name))
            .collect::<Result<Vec<f64>, _>>()?;
        let mut inst = Instance::new(id, x, surrogate, confidence);
        if let Some(k) = human_col {
            inst.human = float(cell(k)).map_err(|m| parse(format!("{HUMAN}: {m}")))?;
        }
        instances.push(inst);
        texts.push(text_col.and_then(|k| text(cell(k))));
    }
    let corpus = Corpus::validated(instances).map_err(|e| match e {
        CoreError::InvalidCorpus(violations) => IoError::Invalid { path: path.to_path_buf(), violations },
        other => IoError::Mismatch { path: path.to_path_buf(), message: other.to_string() },
    })?;
    Ok(CorpusFile { corpus, covariates: covariates.into_iter().map(|(_, c)| c).collect(), texts })
}

pub fn corpus_table(file: &CorpusFile) -> Table {
    let has_text = file.texts.iter().any(Option::is_some);
    let mut columns = vec![ID.to_string()];
    columns.extend(file.covariates.iter().cloned());
    columns.extend([LLM.to_string(), CONFIDENCE.to_string(), HUMAN.to_string()]);
    if has_text {
        columns.push(TEXT.to_string());
    }
    let mut table = Table::new(columns);
    for (inst, t) in file.corpus.instances().iter().zip(&file.texts) {
        let mut cells = vec![Value::String(inst.id.clone())];
        cells.extend(inst.covariates.iter().map(|&x| exact(x)));
        cells.extend([exact(inst.surrogate), exact(inst.confidence), inst.human.map_or(Value::Null, exact)]);
        if has_text {
            cells.push(t.clone().map_or(Value::Null, Value::String));
        }
        table.push(cells);
    }
    table
}

pub fn write_corpus(path: &Path, file: &CorpusFile) -> Result<(), IoError> {
    write_table(path, &corpus_table(file))
}

/// `id, pi, xi, human_annotation, batch` per instance.
pub fn plan_table(ids: &[String], plan: &SamplingPlan) -> Table {
    let mut batch_of = vec![0usize; plan.len()];
    for (b, range) in plan.batches().iter().enumerate() {
        for &i in &plan.order()[range.clone()] {
            batch_of[i] = b;
        }
    }
    let mut table = Table::new(["id", "pi", "xi", HUMAN, "batch"].map(String::from).to_vec());
    for (i, id) in ids.iter().enumerate() {
        table.push(vec![
            Value::String(id.clone()),
            exact(plan.pi()[i]),
            Value::from(u8::from(plan.xi()[i])),
            plan.label(i).map_or(Value::Null, exact),
            Value::from(batch_of[i]),
        ]);
    }
    table
}

pub fn write_plan(path: &Path, ids: &[String], plan: &SamplingPlan) -> Result<(), IoError> {
    write_table(path, &plan_table(ids, plan))
}

/// Reads a plan for `corpus`. Rows must list the corpus ids in order. A
/// selected row without a label falls back to the corpus's own human
/// annotation.
pub fn load_plan(path: &Path, corpus: &Corpus) -> Result<SamplingPlan, IoError> {
    let table = read_table(path)?;
    let missing: Vec<String> = ["id", "pi", "xi"]
        .iter()
        .filter(|c| table.column(c).is_none())
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(IoError::Schema { path: path.to_path_buf(), missing });
    }
    let (id_col, pi_col, xi_col) = (table.column("id").unwrap(), table.column("pi").unwrap(), table.column("xi").unwrap());
    let human_col = table.column(HUMAN);
    if table.rows.len() != corpus.len() {
        return Err(IoError::Mismatch {
            path: path.to_path_buf(),
            message: format!("plan has {} rows but the corpus has {}", table.rows.len(), corpus.len()),
        });
    }
    let (mut pi, mut xi, mut labels, mut ids) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (row, inst) in table.rows.iter().zip(corpus.instances()) {
        let parse = |message: String| IoError::Parse { path: path.to_path_buf(), line: row.line, message };
        let cell = |k: usize| row.cells.get(k).unwrap_or(&Value::Null);
        let id = text(cell(id_col)).unwrap_or_default();
        if id != inst.id {
            return Err(parse(format!("id '{id}' does not match corpus id '{}'", inst.id)));
        }
        let p = float(cell(pi_col)).map_err(|m| parse(format!("pi: {m}")))?.ok_or_else(|| parse("pi is empty".into()))?;
        let selected = match float(cell(xi_col)).map_err(|m| parse(format!("xi: {m}")))? {
            Some(1.0) => true,
            Some(0.0) => false,
            _ => return Err(parse("xi must be 0 or 1".into())),
        };
        let mut label = match human_col {
            Some(k) => float(cell(k)).map_err(|m| parse(format!("{HUMAN}: {m}")))?,
            None => None,
        };
        if selected && label.is_none() {
            label = inst.human;
        }
        pi.push(p);
        xi.push(selected);
        labels.push(if selected { label } else { None });
        ids.push(id);
    }
    SamplingPlan::from_parts(pi, xi, labels, &ids)
        .map_err(|e| IoError::Mismatch { path: path.to_path_buf(), message: e.to_string() })
}

/// `id → human_annotation` from a labels file; empty labels are skipped.
pub fn load_labels(path: &Path) -> Result<HashMap<String, f64>, IoError> {
    let table = read_table(path)?;
    let missing: Vec<String> = [ID, HUMAN].iter().filter(|c| table.column(c).is_none()).map(|c| c.to_string()).collect();
    if !missing.is_empty() {
        return Err(IoError::Schema { path: path.to_path_buf(), missing });
    }
    let (id_col, h_col) = (table.column(ID).unwrap(), table.column(HUMAN).unwrap());
    let mut out = HashMap::new();
    for row in &table.rows {
        let parse = |message: String| IoError::Parse { path: path.to_path_buf(), line: row.line, message };
        let id = row.cells.get(id_col).and_then(text).ok_or_else(|| parse("id is empty".into()))?;
        if let Some(h) = float(row.cells.get(h_col).unwrap_or(&Value::Null)).map_err(|m| parse(format!("{HUMAN}: {m}")))? {
            if out.insert(id.clone(), h).is_some() {
                return Err(parse(format!("id '{id}' listed twice")));
            }
        }
    }
    Ok(out)
}

/// Ids awaiting annotation, with an empty label column to fill in and the
/// text when the corpus has one.
pub fn write_pending(path: &Path, file: &CorpusFile, indices: &[usize]) -> Result<(), IoError> {
    let mut table = Table::new([ID, HUMAN, TEXT].map(String::from).to_vec());
    for &i in indices {
        table.push(vec![
            Value::String(file.corpus.instances()[i].id.clone()),
            Value::Null,
            file.texts[i].clone().map_or(Value::Null, Value::String),
        ]);
    }
    write_table(path, &table)
}
