use cdi_core::evaluation::{generate, Regime, SyntheticConfig};
use cdi_core::RngSeed;

use crate::cli::{RegimeArg, SynthArgs};
use crate::error::CliResult;
use crate::format::{render_pairs, sig6};
use crate::io::{write_corpus, CorpusFile, COVARIATE_PREFIX};

pub fn run(args: &SynthArgs) -> CliResult<String> {
    let regime = match args.regime {
        RegimeArg::Informative => Regime::Informative,
        RegimeArg::ConstantFlip => Regime::ConstantFlip { q: args.q },
        RegimeArg::Perfect => Regime::Perfect,
        RegimeArg::Independent => Regime::Independent,
        RegimeArg::StratumFlip => Regime::StratumFlip { stratum: args.stratum, q: args.q },
        RegimeArg::Shift => Regime::Shift { shift: args.shift },
    };
    let config = SyntheticConfig::with_regime(regime).with_n(args.n);
    let corpus = generate(&config, RngSeed(args.seed))?;
    let covariates = (1..=config.coefficients.len()).map(|k| format!("{COVARIATE_PREFIX}{k}")).collect();
    let texts = vec![None; corpus.len()];
    let prevalence = corpus.full_labels()?.iter().sum::<f64>() / corpus.len().max(1) as f64;
    let file = CorpusFile { corpus, covariates, texts };
    write_corpus(&args.out, &file)?;
    Ok(render_pairs(&[
        ("instances", file.corpus.len().to_string()),
        ("human_prevalence", sig6(prevalence)),
        ("content_hash", format!("{:016x}", file.corpus.content_hash())),
    ]))
}
