use cdi_core::evaluation::{
    calibration_curve, cohen_kappa, confidence_histogram, confidence_separation, sensitivity_sweep, TrialSettings,
};
use cdi_core::{Corpus, RngSeed};
use serde_json::{json, Value};

use crate::cli::CalibrateArgs;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::format::{cell, num, opt_num, render_pairs, render_table, sig6};
use crate::io::load_corpus;

pub fn run(args: &CalibrateArgs) -> CliResult<String> {
    let file = load_corpus(&args.corpus)?;
    let cfg = RunConfig::resolve(args.run.config.as_deref(), args.run.layer())?;

    let labeled = Corpus::new(file.corpus.instances().iter().filter(|i| i.human.is_some()).cloned().collect());
    if labeled.len() < 2 {
        return Err(CliError::Validation("calibration needs at least two rows with human_annotation".into()));
    }
    let curve = calibration_curve(&labeled, &args.thresholds)?;
    let surrogate: Vec<u64> = labeled.instances().iter().map(|i| i.surrogate.to_bits()).collect();
    let human: Vec<u64> = labeled.instances().iter().map(|i| i.human.expect("filtered").to_bits()).collect();
    let kappa = cohen_kappa(&surrogate, &human).ok();
    let welch = confidence_separation(&labeled).ok();
    let all_conf: Vec<f64> = file.corpus.instances().iter().map(|i| i.confidence).collect();
    let histogram = confidence_histogram(&all_conf, args.bins)?;

    let sweep = match &cfg.sigma2_grid {
        None => None,
        Some(grid) => {
            super::require_simulation(&file, "the sensitivity sweep")?;
            let settings = TrialSettings {
                estimand: cfg.estimand_for(&file)?,
                budget: cfg.budget(file.corpus.len())?,
                trials: cfg.trials,
                alpha: cfg.alpha,
                seed: RngSeed(cfg.seed),
            };
            Some(sensitivity_sweep(&file.corpus, grid, &settings)?)
        }
    };

    if let Some(path) = &args.json {
        let doc = json!({
            "labeled": labeled.len(),
            "kappa": opt_num(kappa),
            "welch": welch.map(|w| json!({"t": num(w.t), "df": num(w.df), "p": num(w.p)})),
            "curve": curve.thresholds.iter().zip(&curve.accuracy_above).zip(&curve.counts_above)
                .map(|((t, a), c)| json!({"threshold": num(*t), "accuracy": opt_num(*a), "count": c}))
                .collect::<Vec<_>>(),
            "histogram": histogram.iter()
                .map(|b| json!({"lo": num(b.lo), "hi": num(b.hi), "count": b.count}))
                .collect::<Vec<_>>(),
            "sweep": sweep.as_ref().map(|rows| rows.iter().map(|r| json!({
                "sigma2": num(r.sigma2), "t": num(r.t), "p": num(r.p),
                "gain_pct": opt_num(r.gain_pct), "coverage": num(r.coverage), "failures": r.failures,
            })).collect::<Vec<Value>>()),
        });
        super::write_json(path, &doc)?;
    }

    let mut out = render_pairs(&[
        ("labeled", labeled.len().to_string()),
        ("kappa", cell(kappa)),
        ("welch_t", cell(welch.map(|w| w.t))),
        ("welch_df", cell(welch.map(|w| w.df))),
        ("welch_p", cell(welch.map(|w| w.p))),
    ]);
    out.push('\n');
    let rows: Vec<Vec<String>> = curve
        .thresholds
        .iter()
        .zip(&curve.accuracy_above)
        .zip(&curve.counts_above)
        .map(|((t, a), c)| vec![format!("> {}", sig6(*t)), cell(*a), c.to_string()])
        .collect();
    out.push_str(&render_table(&["confidence", "accuracy", "count"], &rows));
    out.push('\n');
    let rows: Vec<Vec<String>> = histogram
        .iter()
        .map(|b| vec![format!("[{}, {})", sig6(b.lo), sig6(b.hi)), b.count.to_string()])
        .collect();
    out.push_str(&render_table(&["bin", "count"], &rows));
    if let Some(rows) = sweep {
        out.push('\n');
        let rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![sig6(r.sigma2), sig6(r.t), sig6(r.p), cell(r.gain_pct), sig6(r.coverage), r.failures.to_string()]
            })
            .collect();
        out.push_str(&render_table(&["sigma2", "t", "p", "gain_pct", "coverage", "failures"], &rows));
    }
    Ok(out)
}
