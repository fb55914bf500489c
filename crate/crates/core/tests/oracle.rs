use growing_experts::harness::{generate_scenario, run_experiment, AlgorithmName, AlgorithmSpec, EntryPattern, ScenarioSpec, SignalFamily};
use growing_experts::oracle::bounds::{
    binary_entropy, bound_fixed_share, bound_fixed_share_tuned, bound_fixed_share_tuned_relaxed, bound_fresh,
    bound_growing_hedge, bound_growing_markov, bound_sleeping, display_admissible_uniform, display_entry_time_uniform,
    display_fresh_entry_uniform, display_inverse_index, kl_divergence,
};
use growing_experts::oracle::{best_comparator_loss, enumerate_comparators, ComparatorClass, ComparatorSequence, LossTable};
use growing_experts::{realize_priors, EntrySchedule, PriorPreset, RateSequence};
use proptest::prelude::*;

fn random_schedule() -> impl Strategy<Value = EntrySchedule> {
    (1usize..4, prop::collection::vec(0usize..3, 1..40)).prop_map(|(m1, rest)| {
        let mut counts = vec![m1];
        counts.extend(rest);
        EntrySchedule::from_counts(counts).unwrap()
    })
}

#[test]
fn kl_examples() {
    assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
    let m = 5;
    let d = kl_divergence(&[1.0, 0.0, 0.0, 0.0, 0.0], &vec![0.2; m]).unwrap();
    assert!((d - (m as f64).ln()).abs() < 1e-15);
    let d = kl_divergence(&[0.75, 0.25], &[0.5, 0.5]).unwrap();
    assert!((d - (0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln())).abs() < 1e-15);
}

#[test]
fn admissible_enumeration_count() {
    let s = EntrySchedule::from_counts(vec![2, 1]).unwrap();
    let all = enumerate_comparators(&ComparatorClass::Admissible { max_shifts: 1 }, &s, 2).unwrap();
    assert_eq!(all.len(), 6);
    let sparse_one = enumerate_comparators(&ComparatorClass::Sparse { pool: 1, max_shifts: 1 }, &s, 2).unwrap();
    assert!(sparse_one.iter().all(|c| c.num_shifts() == 0));
    assert_eq!(sparse_one.len(), 2);
}

#[test]
fn ties_go_to_the_lexicographically_first_comparator() {
    let s = EntrySchedule::fixed(3, 4).unwrap();
    let table = LossTable::new(vec![vec![1.0; 3]; 4]);
    let (c, l) = best_comparator_loss(&ComparatorClass::Admissible { max_shifts: 2 }, &s, &table).unwrap();
    assert_eq!(c.indices(), &[0, 0, 0, 0]);
    assert_eq!(l, 4.0);
}

#[test]
fn fixed_share_tuning_and_its_relaxation() {
    let (m, horizon, k) = (6, 51, 5);
    let tuned = bound_fixed_share_tuned(m, horizon, k, 1.0).unwrap();
    let h = (k + 1) as f64 * (m as f64).ln() + (horizon - 1) as f64 * binary_entropy(k as f64 / (horizon - 1) as f64);
    assert!((tuned - h).abs() < 1e-12);
    assert!(tuned <= bound_fixed_share_tuned_relaxed(m, horizon, k, 1.0).unwrap() + 1e-12);
    // the tuned rate minimizes the bound over α
    for a in [0.01, 0.05, 0.2, 0.5] {
        assert!(tuned <= bound_fixed_share(m, horizon, k, a, 1.0).unwrap() + 1e-12);
    }
    assert!((binary_entropy(0.5) - 2f64.ln()).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn entry_time_relaxation_dominates(s in random_schedule(), eta in 0.1f64..2.0) {
        let priors = realize_priors(&PriorPreset::EntryTimeUniform, &s).unwrap();
        let horizon = s.horizon();
        for i in 0..s.total_experts() {
            let exact = bound_growing_hedge(&priors, &s, i, horizon, eta).unwrap();
            prop_assert!(exact <= display_entry_time_uniform(&s, i, horizon, eta).unwrap() + 1e-12);
        }
        let inv = realize_priors(&PriorPreset::InverseIndex, &s).unwrap();
        for i in 0..s.total_experts() {
            let exact = bound_growing_hedge(&inv, &s, i, horizon, eta).unwrap();
            prop_assert!(exact <= display_inverse_index(&s, i, horizon, eta).unwrap() + 1e-12);
        }
        let uniform = vec![1.0; s.total_experts()];
        for i in 0..s.total_experts() {
            let exact = bound_growing_hedge(&uniform, &s, i, horizon, eta).unwrap();
            prop_assert!((exact - (s.total_experts() as f64).ln() / eta).abs() < 1e-12);
        }
    }

    #[test]
    fn shifting_forms_agree(s in random_schedule(), seed in 0u64..1000) {
        let horizon = s.horizon();
        let m = s.total_experts();
        // a fresh comparator: switch to each batch's first entrant when it arrives, keep every other one
        let mut path = Vec::with_capacity(horizon);
        let mut cur = 0;
        for t in 1..=horizon {
            let r = s.entrant_range(t);
            if t > 1 && !r.is_empty() && (seed >> (t % 60)) & 1 == 1 {
                cur = r.start;
            }
            path.push(cur);
        }
        let c = ComparatorSequence::from_indices(path).unwrap();
        prop_assert!(c.is_fresh(&s));
        let entry_uniform = realize_priors(&PriorPreset::EntryUniform, &s).unwrap();
        let fresh = bound_fresh(&entry_uniform, &s, &c, 1.0).unwrap();
        let display = display_fresh_entry_uniform(&s, &c, 1.0).unwrap();
        prop_assert!(fresh <= display + 1e-9);
        if c.num_shifts() == 0 && s.counts().iter().all(|&m| m > 0) {
            prop_assert!((fresh - display).abs() < 1e-9);
        }
        // no shift with α_t = 1/t: the Hedge bound plus ln T
        let k0 = ComparatorSequence::constant(0, horizon);
        let gm = bound_growing_markov(&entry_uniform, &s, &RateSequence::Inverse, &k0, 1.0).unwrap();
        let gh = bound_growing_hedge(&entry_uniform, &s, 0, horizon, 1.0).unwrap();
        prop_assert!((gm - gh - (horizon as f64).ln()).abs() < 1e-9);
        let uniform = vec![1.0; m];
        let gm = bound_growing_markov(&uniform, &s, &RateSequence::Inverse, &c, 1.0).unwrap();
        prop_assert!(gm <= display_admissible_uniform(&s, &c, 1.0).unwrap() + 1e-9);
        // a pool containing every expert still yields a finite bound
        let sl = bound_sleeping(&uniform, &s, &RateSequence::Inverse, &RateSequence::Inverse, &c, 1.0).unwrap();
        prop_assert!(sl.is_finite());
    }
}

#[test]
fn fixed_share_regret_matches_enumerated_optimum() {
    let s = generate_scenario(&ScenarioSpec {
        name: "fs".into(),
        family: SignalFamily::DriftingMean { drift: 0.2, noise: 0.1 },
        entry: EntryPattern::Constant { experts: 3 },
        horizon: 6,
        seed: 5,
    })
    .unwrap();
    let spec = AlgorithmSpec::new(AlgorithmName::FixedShare).with_alpha(RateSequence::Constant(0.2));
    let class = ComparatorClass::Admissible { max_shifts: 5 };
    let report = run_experiment(&s, &spec, std::slice::from_ref(&class)).unwrap();
    let (_, best) = best_comparator_loss(&class, s.schedule(), &s.loss_table().unwrap()).unwrap();
    let summary = &report.summary.classes[0];
    assert!((summary.best_loss.unwrap() - best).abs() < 1e-12);
    assert!((summary.regret.unwrap() - (report.summary.total_loss - best)).abs() < 1e-12);
    assert_eq!(summary.comparators_checked, 3u64.pow(6));
    assert!(summary.worst_slack.unwrap() >= -1e-9);
}
