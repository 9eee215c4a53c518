use cdi_core::inference::{estimate_target, human_only_working_variance, observations, Estimand, EstimateReport, LambdaMode};
use serde_json::{json, Value};

use crate::cli::{EstimateArgs, MethodArg};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::format::{num, opt_num, render_pairs, sig6};
use crate::io::{load_corpus, load_plan, CorpusFile};

pub fn describe(estimand: Estimand, file: &CorpusFile) -> String {
    match estimand {
        Estimand::Mean => "mean annotation".into(),
        Estimand::LogisticCoef { index, .. } => format!("logistic coefficient of {}", file.covariates[index]),
        Estimand::OddsRatio { stratum } => format!("odds ratio, {0} = 1 vs {0} = 0", file.covariates[stratum]),
    }
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::ConfidenceDriven => "confidence_driven",
        MethodArg::NonAdaptive => "non_adaptive",
        MethodArg::HumanOnly => "human_only",
    }
}

pub fn run(args: &EstimateArgs) -> CliResult<String> {
    let file = load_corpus(&args.corpus)?;
    let cfg = RunConfig::resolve(args.run.config.as_deref(), args.run.layer())?;
    let estimand = cfg.estimand_for(&file)?;
    let plan = load_plan(&args.plan, &file.corpus)?;
    let obs = observations(&file.corpus, &plan)?;
    let mode = match args.method {
        MethodArg::ConfidenceDriven => LambdaMode::Tuned,
        MethodArg::NonAdaptive => LambdaMode::Fixed(1.0),
        MethodArg::HumanOnly => LambdaMode::Fixed(0.0),
    };
    let report = estimate_target(&obs, estimand, cfg.alpha, mode)?;
    let reference = human_only_working_variance(&obs, &report)?;
    let expected: f64 = plan.pi().iter().sum();
    let n_effective = (report.working_variance > 0.0).then(|| reference / report.working_variance * expected);
    let gain = n_effective.map(|ne| (ne - expected) / expected * 100.0);

    let doc = report_json(&file, &report, args.method, plan.realized_count(), expected, reference, n_effective, gain);
    if let Some(path) = &args.json {
        super::write_json(path, &doc)?;
    }
    Ok(report_text(&file, &report, args.method, plan.realized_count(), expected, n_effective, gain))
}

#[allow(clippy::too_many_arguments)]
fn report_json(
    file: &CorpusFile,
    r: &EstimateReport,
    method: MethodArg,
    realized: usize,
    expected: f64,
    reference: f64,
    n_effective: Option<f64>,
    gain: Option<f64>,
) -> Value {
    let strata = r.strata.map(|s| {
        s.iter()
            .map(|st| {
                json!({
                    "size": st.size, "annotated": st.annotated, "mean": num(st.mean),
                    "sigma_jj": num(st.variance), "lambda": num(st.lambda),
                })
            })
            .collect::<Vec<_>>()
    });
    json!({
        "estimand": r.estimand.name(),
        "target": describe(r.estimand, file),
        "method": method_name(method),
        "estimate": num(r.estimate),
        "ci_lower": num(r.interval.0),
        "ci_upper": num(r.interval.1),
        "alpha": num(r.alpha),
        "working_scale": if matches!(r.estimand, Estimand::OddsRatio { .. }) { "log" } else { "identity" },
        "working_estimate": num(r.working_estimate),
        "sigma_jj": num(r.working_variance),
        "lambda": r.lambda.iter().map(|&l| num(l)).collect::<Vec<_>>(),
        "lambda_unclamped": r.lambda_unclamped.iter().map(|&l| opt_num(l)).collect::<Vec<_>>(),
        "n": r.n,
        "annotated": realized,
        "expected_annotations": num(expected),
        "human_only_sigma_jj": num(reference),
        "n_effective": opt_num(n_effective),
        "gain_pct": opt_num(gain),
        "strata": strata,
        "provenance": {
            "tool": concat!("cdi ", env!("CARGO_PKG_VERSION")),
            "corpus_hash": format!("{:016x}", file.corpus.content_hash()),
            "lambda_mode": match method { MethodArg::ConfidenceDriven => "tuned", _ => "fixed" },
            "n_effective_reference": "human-only estimator under uniform sampling with the same expected annotations",
        },
    })
}

fn report_text(
    file: &CorpusFile,
    r: &EstimateReport,
    method: MethodArg,
    realized: usize,
    expected: f64,
    n_effective: Option<f64>,
    gain: Option<f64>,
) -> String {
    let list = |v: &[f64]| v.iter().map(|&x| sig6(x)).collect::<Vec<_>>().join(", ");
    let unclamped = r
        .lambda_unclamped
        .iter()
        .map(|l| l.map_or_else(|| "-".into(), sig6))
        .collect::<Vec<_>>()
        .join(", ");
    let mut pairs = vec![
        ("target", describe(r.estimand, file)),
        ("method", method_name(method).to_string()),
        ("estimate", sig6(r.estimate)),
        ("interval", format!("[{}, {}] at {}%", sig6(r.interval.0), sig6(r.interval.1), sig6((1.0 - r.alpha) * 100.0))),
        ("sigma_jj", sig6(r.working_variance)),
        ("lambda", list(&r.lambda)),
        ("lambda_unclamped", unclamped),
        ("n", r.n.to_string()),
        ("annotated", format!("{realized} (expected {})", sig6(expected))),
        ("n_effective", n_effective.map_or_else(|| "-".into(), sig6)),
        ("gain_pct", gain.map_or_else(|| "-".into(), sig6)),
    ];
    if let Some(s) = r.strata {
        for (name, st) in ["stratum_1", "stratum_0"].iter().zip(s) {
            pairs.push((name, format!("mean {} (size {}, annotated {}, lambda {})", sig6(st.mean), st.size, st.annotated, sig6(st.lambda))));
        }
    }
    render_pairs(&pairs)
}
