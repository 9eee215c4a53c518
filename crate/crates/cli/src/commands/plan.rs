use std::path::{Path, PathBuf};

use cdi_core::corpus::CorpusMode;
use cdi_core::sampling::{run_sampling_loop, SamplingPlan, SamplingSession, SimulationOracle};
use cdi_core::RngSeed;
use serde::{Deserialize, Serialize};

use crate::cli::PlanArgs;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::format::{render_pairs, sig6};
use crate::io::{load_corpus, load_labels, write_pending, write_plan, CorpusFile};

const STATE_FORMAT: &str = "cdi-plan-state/1";

/// Resumable sampling state between invocations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanState {
    pub format: String,
    pub seed: u64,
    /// Content hash of the corpus the state was created for.
    pub corpus_hash: String,
    pub batch_cursor: usize,
    pub batch_count: usize,
    pub collected: Vec<CollectedLabel>,
    pub session: SamplingSession,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectedLabel {
    pub id: String,
    pub label: f64,
}

fn hash_hex(h: u64) -> String {
    format!("{h:016x}")
}

impl PlanState {
    fn new(file: &CorpusFile, seed: u64, session: SamplingSession) -> Self {
        let mut s = Self {
            format: STATE_FORMAT.into(),
            seed,
            corpus_hash: hash_hex(session.corpus_hash()),
            batch_cursor: 0,
            batch_count: 0,
            collected: Vec::new(),
            session,
        };
        s.refresh(file);
        s
    }

    fn refresh(&mut self, file: &CorpusFile) {
        self.batch_cursor = self.session.batch_cursor();
        self.batch_count = self.session.batch_count();
        self.collected = self
            .session
            .collected()
            .into_iter()
            .map(|(i, label)| CollectedLabel { id: file.corpus.instances()[i].id.clone(), label })
            .collect();
    }

    fn load(path: &Path, file: &CorpusFile) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let state: PlanState =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        if state.format != STATE_FORMAT {
            return Err(CliError::Validation(format!("{}: unknown state format '{}'", path.display(), state.format)));
        }
        let current = hash_hex(file.corpus.content_hash());
        if state.corpus_hash != current || state.corpus_hash != hash_hex(state.session.corpus_hash()) {
            return Err(CliError::Validation(format!(
                "{}: resume state does not match the corpus (state hash {}, corpus hash {current}); \
                 the corpus changed since planning started",
                path.display(),
                state.corpus_hash
            )));
        }
        Ok(state)
    }

    fn save(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).expect("state serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

fn default_pending(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("plan");
    out.with_file_name(format!("{stem}.pending.csv"))
}

fn summary(status: &str, plan: Option<&SamplingPlan>, extra: &[(&str, String)]) -> String {
    let mut pairs = vec![("status", status.to_string())];
    if let Some(p) = plan {
        pairs.push(("instances", p.len().to_string()));
        pairs.push(("expected_annotations", sig6(p.pi().iter().sum())));
        pairs.push(("realized_annotations", p.realized_count().to_string()));
        pairs.push(("batches", p.batches().len().to_string()));
        pairs.push(("unspent_budget", sig6(p.shortfall().iter().sum())));
    }
    pairs.extend(extra.iter().cloned());
    render_pairs(&pairs)
}

pub fn run(args: &PlanArgs) -> CliResult<String> {
    let file = load_corpus(&args.corpus)?;
    let cfg = RunConfig::resolve(args.run.config.as_deref(), args.run.layer())?;
    let estimand = cfg.estimand_for(&file)?;
    let loss = estimand.loss();
    let ids = file.ids();

    let Some(state_path) = &args.state else {
        if file.corpus.mode() != CorpusMode::Simulation {
            return Err(CliError::Validation(
                "the corpus lacks some human annotations; pass --state to plan batch by batch".into(),
            ));
        }
        if args.labels.is_some() {
            return Err(CliError::Validation("--labels only applies when resuming with --state".into()));
        }
        let budget = cfg.budget(file.corpus.len())?;
        let plan = run_sampling_loop(&file.corpus, &loss, budget, RngSeed(cfg.seed), &mut SimulationOracle)?;
        write_plan(&args.out, &ids, &plan)?;
        return Ok(summary("complete", Some(&plan), &[]));
    };

    let mut state = if state_path.exists() {
        PlanState::load(state_path, &file)?
    } else {
        let budget = cfg.budget(file.corpus.len())?;
        let session = SamplingSession::new(&file.corpus, &loss, budget, RngSeed(cfg.seed))?;
        PlanState::new(&file, cfg.seed, session)
    };
    let pending_path = args.pending.clone().unwrap_or_else(|| default_pending(&args.out));

    if let Some(pending) = state.session.pending().map(<[usize]>::to_vec) {
        let supplied = match &args.labels {
            Some(path) => Some((path, load_labels(path)?)),
            None => None,
        };
        let label_of = |i: usize| match &supplied {
            Some((_, labels)) => labels.get(&ids[i]).copied().or(file.corpus.instances()[i].human),
            None => file.corpus.instances()[i].human,
        };
        let missing: Vec<&str> = pending.iter().filter(|&&i| label_of(i).is_none()).map(|&i| ids[i].as_str()).collect();
        if !missing.is_empty() {
            let shown = missing.iter().take(10).copied().collect::<Vec<_>>().join(", ");
            return Err(CliError::Validation(match &supplied {
                Some((path, _)) => format!("{}: {} pending id(s) have no label: {shown}", path.display(), missing.len()),
                None => format!(
                    "{} labels are pending (listed in {}); supply them with --labels",
                    pending.len(),
                    pending_path.display()
                ),
            }));
        }
        let values: Vec<f64> = pending.iter().map(|&i| label_of(i).expect("checked")).collect();
        state.session.supply_labels(&values)?;
    } else if args.labels.is_some() && !state.session.is_finished() {
        return Err(CliError::Validation("no batch is awaiting labels".into()));
    }

    while let Some(selected) = state.session.next_batch(&file.corpus)? {
        // rows that already carry a human annotation need no round trip
        let known: Option<Vec<f64>> = selected.iter().map(|&i| file.corpus.instances()[i].human).collect();
        if let Some(values) = known {
            state.session.supply_labels(&values)?;
            continue;
        }
        write_pending(&pending_path, &file, &selected)?;
        state.refresh(&file);
        state.save(state_path)?;
        eprintln!("{} instance(s) await annotation; see {}", selected.len(), pending_path.display());
        return Ok(summary(
            "awaiting_labels",
            None,
            &[
                ("batch", format!("{} of {}", state.session.batch_cursor(), state.session.batch_count())),
                ("pending", selected.len().to_string()),
                ("collected", state.collected.len().to_string()),
            ],
        ));
    }

    state.refresh(&file);
    state.save(state_path)?;
    let plan = state.session.clone().into_plan()?;
    write_plan(&args.out, &ids, &plan)?;
    if pending_path.exists() {
        std::fs::remove_file(&pending_path).map_err(|e| CliError::Validation(format!("{}: {e}", pending_path.display())))?;
    }
    Ok(summary("complete", Some(&plan), &[]))
}
