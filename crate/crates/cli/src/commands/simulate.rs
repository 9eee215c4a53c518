use cdi_core::evaluation::{run_comparison, MethodId, TrialMetrics, TrialSettings};
use cdi_core::RngSeed;
use serde_json::{json, Value};

use crate::cli::SimulateArgs;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::format::{cell, num, opt_num, render_table, sig6};
use crate::io::{load_corpus, write_table, Table};

use super::estimate::describe;

const COLUMNS: [&str; 9] =
    ["method", "n_human", "n_effective", "gain_pct", "coverage", "mean_width", "failures", "trials", "flagged"];

pub const COVERAGE_NOTE: &str = "coverage is measured against the full-data estimate on this corpus, \
which shares the sampled labels, so it reads slightly high";

pub fn run(args: &SimulateArgs) -> CliResult<String> {
    let file = load_corpus(&args.corpus)?;
    super::require_simulation(&file, "simulate")?;
    let cfg = RunConfig::resolve(args.run.config.as_deref(), args.run.layer())?;
    let estimand = cfg.estimand_for(&file)?;
    if cfg.n_human.is_empty() {
        return Err(CliError::Validation("n_human is required (a comma-separated grid is allowed)".into()));
    }

    let mut metrics: Vec<TrialMetrics> = Vec::new();
    for &n_human in &cfg.n_human {
        let settings = TrialSettings {
            estimand,
            budget: cfg.budget_for(n_human, file.corpus.len())?,
            trials: cfg.trials,
            alpha: cfg.alpha,
            seed: RngSeed(cfg.seed),
        };
        metrics.extend(run_comparison(&file.corpus, &MethodId::ALL, &settings)?);
    }
    for m in metrics.iter().filter(|m| m.flagged) {
        eprintln!(
            "warning: {} at n_human {} failed {} of {} trials (first: {})",
            m.method.name(),
            sig6(m.n_human),
            m.failures,
            m.trials,
            m.first_failure.as_deref().unwrap_or("-")
        );
    }

    let target = metrics.first().map_or(f64::NAN, |m| m.target);
    if let Some(path) = &args.json {
        let doc = json!({
            "estimand": estimand.name(),
            "target": describe(estimand, &file),
            "full_data_value": num(target),
            "alpha": num(cfg.alpha),
            "trials": cfg.trials,
            "seed": cfg.seed,
            "coverage_note": COVERAGE_NOTE,
            "rows": metrics.iter().map(row_json).collect::<Vec<_>>(),
        });
        super::write_json(path, &doc)?;
    }
    if let Some(path) = &args.csv {
        let mut t = Table::new(COLUMNS.iter().map(|c| c.to_string()).collect());
        for m in &metrics {
            t.push(row_json(m).as_object().expect("object").values().cloned().collect());
        }
        write_table(path, &t)?;
    }

    let rows: Vec<Vec<String>> = metrics.iter().map(row_text).collect();
    Ok(format!(
        "{} ({}), full-data value {}, {} trials, alpha {}\n{}note: {COVERAGE_NOTE}\n",
        describe(estimand, &file),
        estimand.name(),
        sig6(target),
        cfg.trials,
        sig6(cfg.alpha),
        render_table(&COLUMNS, &rows)
    ))
}

fn row_json(m: &TrialMetrics) -> Value {
    json!({
        "method": m.method.name(),
        "n_human": num(m.n_human),
        "n_effective": opt_num(m.n_effective),
        "gain_pct": opt_num(m.gain_pct),
        "coverage": num(m.coverage),
        "mean_width": num(m.mean_width),
        "failures": m.failures,
        "trials": m.trials,
        "flagged": m.flagged,
    })
}

fn row_text(m: &TrialMetrics) -> Vec<String> {
    vec![
        m.method.name().to_string(),
        sig6(m.n_human),
        cell(m.n_effective),
        cell(m.gain_pct),
        sig6(m.coverage),
        sig6(m.mean_width),
        m.failures.to_string(),
        m.trials.to_string(),
        if m.flagged { "yes".into() } else { "no".into() },
    ]
}
