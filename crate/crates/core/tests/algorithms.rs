use growing_experts::harness::{generate_scenario, run_algorithm, AlgorithmName, AlgorithmSpec, EntryPattern, ScenarioSpec, SignalFamily};
use growing_experts::{
    play_round, realize_priors, EntrySchedule, Error, Forecaster, Loss, GrowingForecaster, GrowingHedge, GrowingMarkovHedge,
    GrowingSleepingMarkovHedge, LossModel, Outcome, Prediction, PriorPreset, RateSequence, SleepingMarkovHedge,
};
use proptest::prelude::*;

fn scenario(seed: u64, horizon: usize, log_loss: bool) -> growing_experts::harness::Scenario {
    let family = if log_loss {
        SignalFamily::Bernoulli { segment_length: 7 }
    } else {
        SignalFamily::DriftingMean { drift: 0.1, noise: 0.2 }
    };
    generate_scenario(&ScenarioSpec {
        name: format!("s{seed}"),
        family,
        entry: EntryPattern::Random { initial: 1, rate: 0.3, max_experts: 12 },
        horizon,
        seed,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fresh_markov_hedge_coincides_with_growing_hedge(seed in 0u64..10_000, horizon in 1usize..60) {
        let s = scenario(seed, horizon, true);
        let prior = PriorPreset::NuSequence(RateSequence::InverseTLogSquared);
        let a = run_algorithm(&s, &AlgorithmSpec::new(AlgorithmName::GrowingHedge).with_prior(prior.clone())).unwrap();
        let b = run_algorithm(&s, &AlgorithmSpec::new(AlgorithmName::FreshMarkovHedge).with_prior(prior)).unwrap();
        for (x, y) in a.learner_losses.iter().zip(&b.learner_losses) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn growing_sleeping_matches_universe_sleeping(seed in 0u64..10_000, horizon in 1usize..40, log_loss: bool) {
        let s = scenario(seed, horizon, log_loss);
        let schedule = s.schedule();
        let priors = realize_priors(&PriorPreset::EntryTimeUniform, schedule).unwrap();
        let total: f64 = priors.iter().sum();
        let m = schedule.total_experts();
        let universe: Vec<f64> = priors.iter().map(|p| p / total).collect();
        let awake: Vec<f64> = (0..m).map(|i| if schedule.entry_time(i) == Some(1) { 0.5 } else { 0.0 }).collect();
        let model = s.loss_model();
        let mut growing = GrowingSleepingMarkovHedge::with_rates(model.eta(), RateSequence::Inverse, RateSequence::Inverse).unwrap();
        let mut uni = SleepingMarkovHedge::new(model.eta(), &universe, &awake).unwrap();
        for t in 1..=horizon {
            growing.admit(&priors[schedule.entrant_range(t)]).unwrap();
            let xs = s.predictions(t);
            let y = s.outcome(t);
            let x = growing.predict(xs).unwrap();
            // the universe learner sees every expert; those not yet entered
            // are asleep with certainty, so their forecasts are never read
            let mut all = xs.to_vec();
            all.resize(m, xs[0].clone());
            let xu = uni.predict(&all).unwrap();
            match (&x, &xu) {
                (Prediction::Point(a), Prediction::Point(b)) => prop_assert!((a - b).abs() <= 1e-12),
                (Prediction::Dist(a), Prediction::Dist(b)) => {
                    for (p, q) in a.iter().zip(b) {
                        prop_assert!((p - q).abs() <= 1e-12);
                    }
                }
                _ => prop_assert!(false),
            }
            let lt = growing_experts::evaluate_loss(model, &x, y).unwrap();
            let row: Vec<f64> = all.iter().map(|xi| growing_experts::evaluate_loss(model, xi, y).unwrap()).collect();
            growing.update(&row[..xs.len()], lt).unwrap();
            let kernels: Vec<_> = (0..m)
                .map(|i| {
                    let tau = schedule.entry_time(i).unwrap();
                    if t + 1 < tau {
                        growing_experts::WakeSleepKernel { fall_asleep: 1.0, wake_up: 0.0 }
                    } else if t + 1 == tau {
                        growing_experts::WakeSleepKernel { fall_asleep: 0.5, wake_up: 0.5 }
                    } else {
                        let r = 1.0 / (t + 1) as f64;
                        growing_experts::WakeSleepKernel { fall_asleep: r, wake_up: r }
                    }
                })
                .collect();
            uni.update_with_kernels(&row, lt, &kernels).unwrap();
        }
    }

    #[test]
    fn prior_scaling_leaves_predictions_unchanged(seed in 0u64..10_000, scale in 1e-3f64..1e3) {
        let s = scenario(seed, 30, seed % 2 == 0);
        let schedule = s.schedule();
        let priors = realize_priors(&PriorPreset::InverseIndex, schedule).unwrap();
        let model = s.loss_model();
        let mut a = GrowingMarkovHedge::new(model.eta(), RateSequence::Inverse).unwrap();
        let mut b = GrowingMarkovHedge::new(model.eta(), RateSequence::Inverse).unwrap();
        for t in 1..=s.horizon() {
            let r = schedule.entrant_range(t);
            a.admit(&priors[r.clone()]).unwrap();
            b.admit(&priors[r].iter().map(|p| p * scale).collect::<Vec<_>>()).unwrap();
            let ra = play_round(&mut a, model, s.predictions(t), s.outcome(t)).unwrap();
            let rb = play_round(&mut b, model, s.predictions(t), s.outcome(t)).unwrap();
            prop_assert!((ra.learner_loss - rb.learner_loss).abs() <= 1e-12 * ra.learner_loss.abs().max(1.0));
        }
    }
}

#[test]
fn every_algorithm_runs_on_a_fixed_set() {
    let s = generate_scenario(&ScenarioSpec {
        name: "fixed".into(),
        family: SignalFamily::Bernoulli { segment_length: 5 },
        entry: EntryPattern::Constant { experts: 4 },
        horizon: 25,
        seed: 2,
    })
    .unwrap();
    for name in AlgorithmName::ALL {
        let mut spec = AlgorithmSpec::new(name);
        if name == AlgorithmName::FixedShare {
            spec = spec.with_alpha(RateSequence::Constant(0.05));
        }
        let trace = run_algorithm(&s, &spec).unwrap();
        assert_eq!(trace.learner_losses.len(), 25, "{name}");
        assert!(trace.cumulative.iter().all(|c| c.is_finite()), "{name}");
    }
}

#[test]
fn infinite_log_loss_is_capped_and_keeps_weights_finite() {
    let model = LossModel::log_loss(2).unwrap();
    let mut f = GrowingHedge::new(1.0).unwrap();
    let xs = vec![Prediction::point_mass(1, 2).unwrap(), Prediction::bernoulli(0.5).unwrap()];
    f.admit(&[1.0, 1.0]).unwrap();
    let r = play_round(&mut f, &model, &xs, &Outcome::Symbol(0)).unwrap();
    assert_eq!(r.expert_losses[0], 700.0);
    assert!(model.is_clipped(r.expert_losses[0]));
    f.admit(&[]).unwrap();
    let w = f.mixing_weights().unwrap();
    assert!(w[0] > 0.0 && w[0] < 1e-300 && (w[1] - 1.0).abs() < 1e-12);
}

#[test]
fn growing_protocol_is_enforced() {
    let mut f = GrowingSleepingMarkovHedge::new(1.0).unwrap();
    let xs = [Prediction::Point(0.5)];
    assert!(matches!(f.predict(&xs), Err(Error::Protocol(_)) | Err(Error::InvalidInput(_))));
    f.admit(&[1.0]).unwrap();
    assert!(matches!(f.admit(&[1.0]), Err(Error::Protocol(_))));
    f.predict(&xs).unwrap();
    f.update(&[0.1], 0.1).unwrap();
    assert_eq!(f.round(), 2);
}

#[test]
fn schedule_with_empty_first_round_is_rejected() {
    assert!(EntrySchedule::from_counts(vec![0, 1]).is_err());
}
