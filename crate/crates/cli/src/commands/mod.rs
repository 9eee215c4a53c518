//! One module per subcommand. Each returns the text it prints on stdout.

pub mod annotate;
pub mod calibrate;
pub mod estimate;
pub mod plan;
pub mod simulate;
pub mod synth;

use std::path::Path;

use serde_json::Value;

use crate::error::{CliError, CliResult};

pub(crate) fn write_json(path: &Path, doc: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(doc).expect("reports serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub(crate) fn require_simulation(file: &crate::io::CorpusFile, what: &str) -> CliResult<()> {
    match file.corpus.full_labels() {
        Ok(_) => Ok(()),
        Err(_) => Err(CliError::Validation(format!(
            "{what} needs a simulation corpus with human_annotation on every row"
        ))),
    }
}
