use cdi_core::evaluation::{generate, SyntheticConfig};
use cdi_core::inference::{estimate, observations, LambdaMode};
use cdi_core::losses::{LossSpec, MeanLoss};
use cdi_core::sampling::{
    compute_pi, fit_error_predictor, run_sampling_loop, SamplingSession, SimulationOracle,
};
use cdi_core::stats::{mean, sample_variance, spearman};
use cdi_core::{Budget, Corpus, Error, RngSeed};

fn corpus(n: usize, seed: u64) -> Corpus {
    generate(&SyntheticConfig::default().with_n(n), RngSeed(seed)).unwrap()
}

fn small_budget(n_human: f64) -> Budget {
    Budget { batch_size: 100, ..Budget::new(n_human) }
}

#[test]
fn budget_holds_in_expectation() {
    let c = corpus(400, 1);
    let n_human = 80.0;
    let counts: Vec<f64> = (0..500)
        .map(|t| {
            let plan = run_sampling_loop(&c, &LossSpec::Mean, small_budget(n_human), RngSeed(t), &mut SimulationOracle).unwrap();
            plan.realized_count() as f64
        })
        .collect();
    let m = mean(&counts);
    assert!((m - n_human).abs() <= 4.0 * n_human.sqrt(), "mean realized count {m}");
}

#[test]
fn batch_sums_match_budget_share() {
    let c = corpus(1000, 2);
    let budget = small_budget(250.0);
    let plan = run_sampling_loop(&c, &LossSpec::Mean, budget, RngSeed(3), &mut SimulationOracle).unwrap();
    for (b, range) in plan.batches().iter().enumerate() {
        let members = &plan.order()[range.clone()];
        let total: f64 = members.iter().map(|&i| plan.pi()[i]).sum();
        let share = budget.n_human * members.len() as f64 / c.len() as f64;
        assert!((total + plan.shortfall()[b] - share).abs() < 1e-9, "batch {b}: {total} vs {share}");
    }
    let total: f64 = plan.pi().iter().sum();
    assert!((total - 250.0).abs() < 1e-6);
}

#[test]
fn probabilities_respect_floor_and_cap() {
    let c = corpus(600, 4);
    let budget = small_budget(60.0);
    let plan = run_sampling_loop(&c, &LossSpec::Mean, budget, RngSeed(5), &mut SimulationOracle).unwrap();
    assert!(plan.pi().iter().all(|&p| (budget.pi_floor..=1.0).contains(&p)));
    for (i, &x) in plan.xi().iter().enumerate() {
        assert_eq!(x, plan.label(i).is_some());
    }
}

#[test]
fn full_budget_samples_everything() {
    let c = corpus(300, 6);
    let plan = run_sampling_loop(&c, &LossSpec::Mean, small_budget(300.0), RngSeed(7), &mut SimulationOracle).unwrap();
    assert!(plan.pi().iter().all(|&p| p == 1.0));
    assert_eq!(plan.realized_count(), 300);
}

#[test]
fn deterministic_under_seed() {
    let c = corpus(500, 8);
    let run = |s| run_sampling_loop(&c, &LossSpec::Mean, small_budget(100.0), RngSeed(s), &mut SimulationOracle).unwrap();
    assert_eq!(run(9), run(9));
    assert_ne!(run(9).xi(), run(10).xi());
}

#[test]
fn low_confidence_gets_more_probability() {
    let c = corpus(1000, 11);
    let (mut low, mut high) = (Vec::new(), Vec::new());
    for t in 0..100 {
        let plan = run_sampling_loop(&c, &LossSpec::Mean, small_budget(200.0), RngSeed(t), &mut SimulationOracle).unwrap();
        for range in &plan.batches()[1..] {
            for &i in &plan.order()[range.clone()] {
                let conf = c.instances()[i].confidence;
                if conf < 0.5 {
                    low.push(plan.pi()[i]);
                } else if conf > 0.9 {
                    high.push(plan.pi()[i]);
                }
            }
        }
    }
    assert!(mean(&low) > mean(&high), "{} vs {}", mean(&low), mean(&high));
}

#[test]
fn probability_tracks_predicted_error() {
    let c = corpus(2000, 12);
    let pairs: Vec<(f64, f64)> = c.instances()[..300]
        .iter()
        .map(|i| (i.confidence, (i.surrogate - i.human.unwrap()).powi(2)))
        .collect();
    let predictor = fit_error_predictor(&pairs).unwrap();
    let batch: Vec<f64> = c.instances()[300..400].iter().map(|i| i.confidence).collect();
    let err = predictor.predict_many(&batch);
    let alloc = compute_pi(&err, &vec![1.0; err.len()], 20.0, 0.01).unwrap();
    // compare on entries the floor and cap leave untouched
    let (e, p): (Vec<f64>, Vec<f64>) = err
        .iter()
        .zip(&alloc.pi)
        .filter(|(_, &p)| p > 0.01 && p < 1.0)
        .map(|(&e, &p)| (e, p))
        .unzip();
    assert!(e.len() > 10);
    assert!(spearman(&e, &p) >= 0.99);
}

#[test]
fn allocation_examples() {
    let a = compute_pi(&[0.3; 8], &[2.0; 8], 2.0, 0.01).unwrap();
    assert!(a.pi.iter().all(|&p| (p - 0.25).abs() < 1e-12));
    assert!(matches!(compute_pi(&[1.0; 4], &[1.0; 4], 1.0, 0.3), Err(Error::InfeasibleBudget(_))));
}

#[test]
fn horvitz_thompson_is_unbiased() {
    let c = corpus(400, 13);
    let truth = mean(&c.full_labels().unwrap());
    let estimates: Vec<f64> = (0..2000)
        .map(|t| {
            let plan = run_sampling_loop(&c, &LossSpec::Mean, small_budget(80.0), RngSeed(1000 + t), &mut SimulationOracle).unwrap();
            let obs = observations(&c, &plan).unwrap();
            estimate(&obs, &MeanLoss, 0.1, LambdaMode::Fixed(0.0)).unwrap().target()
        })
        .collect();
    let se = (sample_variance(&estimates) / estimates.len() as f64).sqrt();
    assert!((mean(&estimates) - truth).abs() <= 4.0 * se, "{} vs {truth} (se {se})", mean(&estimates));
}

#[test]
fn resumed_session_matches_uninterrupted_run() {
    let c = corpus(500, 14);
    let budget = small_budget(100.0);
    let straight = run_sampling_loop(&c, &LossSpec::Mean, budget, RngSeed(15), &mut SimulationOracle).unwrap();

    let mut session = SamplingSession::new(&c, &LossSpec::Mean, budget, RngSeed(15)).unwrap();
    while let Some(selected) = session.next_batch(&c).unwrap() {
        // persist and reload between every batch, as a deployment would
        let saved = serde_json::to_string(&session).unwrap();
        session = serde_json::from_str(&saved).unwrap();
        let labels: Vec<f64> = selected.iter().map(|&i| c.instances()[i].human.unwrap()).collect();
        session.supply_labels(&labels).unwrap();
    }
    assert_eq!(session.into_plan().unwrap(), straight);
}

#[test]
fn edited_corpus_is_rejected_on_resume() {
    let c = corpus(300, 16);
    let mut session = SamplingSession::new(&c, &LossSpec::Mean, small_budget(60.0), RngSeed(17)).unwrap();
    let first = session.next_batch(&c).unwrap().unwrap();
    session.supply_labels(&vec![1.0; first.len()]).unwrap();
    let mut conf: Vec<f64> = c.instances().iter().map(|i| i.confidence).collect();
    conf[0] = 1.0 - conf[0];
    let edited = c.with_confidences(&conf).unwrap();
    assert!(session.next_batch(&edited).is_err());
    assert!(session.next_batch(&c).is_ok());
}

#[test]
fn pending_labels_block_the_next_batch() {
    let c = corpus(300, 18);
    let mut session = SamplingSession::new(&c, &LossSpec::Mean, small_budget(90.0), RngSeed(19)).unwrap();
    let first = session.next_batch(&c).unwrap().unwrap();
    assert!(!first.is_empty());
    assert!(session.next_batch(&c).is_err());
    assert!(session.supply_labels(&[1.0]).is_err() || first.len() == 1);
}
