use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ConfigLayer, EstimandKind};

#[derive(Debug, Parser)]
#[command(name = "cdi", version, about = "Confidence-driven inference with LLM and human annotations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide which instances get human annotation.
    ///
    /// A simulation corpus (every row has human_annotation) runs to
    /// completion. With --state the loop stops at each batch that needs
    /// labels, writes the pending ids, and resumes on the next call with
    /// --labels. The budget and seed are fixed when the state is created.
    Plan(PlanArgs),
    /// Estimate the target from a corpus and a plan.
    Estimate(EstimateArgs),
    /// Compare all methods over seeded trials on a simulation corpus.
    Simulate(SimulateArgs),
    /// Calibration of confidences against human labels, and the noise sweep.
    Calibrate(CalibrateArgs),
    /// Write a synthetic simulation corpus.
    Synth(SynthArgs),
    /// Collect LLM annotations and confidences for a table of texts.
    Annotate(AnnotateArgs),
}

/// Settings shared by the statistical commands; flags override --config.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with run settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub estimand: Option<EstimandKind>,
    /// Covariate for logistic_coef and odds_ratio (with or without the x_ prefix).
    #[arg(long)]
    pub target: Option<String>,
    /// Miscoverage level; the default 0.1 targets 90% intervals.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Expected number of human annotations (comma-separated grid for simulate).
    #[arg(long, value_delimiter = ',')]
    pub n_human: Option<Vec<f64>>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub pi_floor: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Confidence-noise variances for the sensitivity sweep.
    #[arg(long, value_delimiter = ',')]
    pub sigma2: Option<Vec<f64>>,
}

impl RunArgs {
    pub fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            estimand: self.estimand,
            target: self.target.clone(),
            alpha: self.alpha,
            n_human: self.n_human.clone(),
            batch_size: self.batch_size,
            pi_floor: self.pi_floor,
            trials: self.trials,
            seed: self.seed,
            sigma2_grid: self.sigma2.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Final plan file (.csv or .jsonl).
    #[arg(long)]
    pub out: PathBuf,
    /// Resumable state file (JSON).
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Where to write ids awaiting annotation [default: <out stem>.pending.csv].
    #[arg(long)]
    pub pending: Option<PathBuf>,
    /// Labels for the pending batch (id, human_annotation).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Tuned λ on the given plan.
    ConfidenceDriven,
    /// λ = 1.
    NonAdaptive,
    /// λ = 0.
    HumanOnly,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, value_enum, default_value = "confidence-driven")]
    pub method: MethodArg,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Also write the metrics as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Also write the metrics as a CSV table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Accuracy is reported above each threshold.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Informative,
    ConstantFlip,
    Perfect,
    Independent,
    StratumFlip,
    Shift,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "informative")]
    pub regime: RegimeArg,
    /// Flip probability for constant-flip and stratum-flip.
    #[arg(long, default_value_t = 0.3)]
    pub q: f64,
    /// Additive surrogate bias for shift.
    #[arg(long, default_value_t = 0.2)]
    pub shift: f64,
    /// Covariate index flipped by stratum-flip.
    #[arg(long, default_value_t = 0)]
    pub stratum: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Politeness,
    Stance,
    Bias,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    /// Table with id and text columns; other columns pass through.
    #[arg(long)]
    pub input: PathBuf,
    /// Input rows plus llm_annotation and confidence; failed rows are left out.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Replay replies from a transcript instead of calling an endpoint.
    #[arg(long, conflicts_with = "endpoint")]
    pub transcript: Option<PathBuf>,
    /// OpenAI-style chat-completions URL; the key is read from --api-key-env.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4o")]
    pub model: String,
    #[arg(long, default_value = "CDI_API_KEY")]
    pub api_key_env: String,
    /// Record every reply to this transcript file.
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// Failed rows with their errors and raw replies (JSON lines).
    #[arg(long)]
    pub failures: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
}
