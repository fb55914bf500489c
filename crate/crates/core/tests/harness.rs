use growing_experts::harness::output::{report_json, trace_csv, CSV_HEADER};
use growing_experts::harness::verify::{guarded_shifts, tightness_regret};
use growing_experts::harness::{
    generate_scenario, run_experiment, AlgorithmName, AlgorithmSpec, EntryPattern, EvalMode, ScenarioSpec, SignalFamily,
};
use growing_experts::oracle::ComparatorClass;
use growing_experts::EntrySchedule;

fn spec(entry: EntryPattern, horizon: usize, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        name: "h".into(),
        family: SignalFamily::Bernoulli { segment_length: 10 },
        entry,
        horizon,
        seed,
    }
}

#[test]
fn entry_patterns() {
    let s = generate_scenario(&spec(EntryPattern::Periodic { period: 5, batch: 1 }, 20, 0)).unwrap();
    let rounds: Vec<usize> = (1..=20).filter(|&t| s.schedule().entrants(t) > 0).collect();
    assert_eq!(rounds, [1, 6, 11, 16]);
    let s = generate_scenario(&spec(EntryPattern::Exponential { batch: 1 }, 20, 0)).unwrap();
    let rounds: Vec<usize> = (1..=20).filter(|&t| s.schedule().entrants(t) > 0).collect();
    assert_eq!(rounds, [1, 2, 4, 8, 16]);
}

#[test]
fn scenarios_replay() {
    let sp = spec(EntryPattern::Random { initial: 2, rate: 0.4, max_experts: 10 }, 50, 42);
    assert_eq!(generate_scenario(&sp).unwrap(), generate_scenario(&sp).unwrap());
    let other = ScenarioSpec { seed: 43, ..sp };
    assert_ne!(generate_scenario(&other).unwrap().outcomes(), generate_scenario(&spec(EntryPattern::Random { initial: 2, rate: 0.4, max_experts: 10 }, 50, 42)).unwrap().outcomes());
}

#[test]
fn tightness_examples() {
    for m in [1usize, 2, 8] {
        let s = EntrySchedule::fixed(m, 4).unwrap();
        let r = tightness_regret(&s).unwrap();
        assert!((r - (m as f64).ln()).abs() < 1e-6, "M_T = {m}: {r}");
    }
}

#[test]
fn lone_expert_has_zero_regret_and_tight_bound() {
    let s = generate_scenario(&spec(EntryPattern::Constant { experts: 1 }, 30, 1)).unwrap();
    let r = run_experiment(&s, &AlgorithmSpec::new(AlgorithmName::GrowingHedge), &[ComparatorClass::SinceEntry]).unwrap();
    let c = &r.summary.classes[0];
    assert!(c.regret.unwrap().abs() < 1e-12);
    assert!(c.bound.unwrap().abs() < 1e-12);
    assert!(c.slack.unwrap().abs() < 1e-12);
}

#[test]
fn reports_serialize() {
    let s = generate_scenario(&spec(EntryPattern::Periodic { period: 3, batch: 1 }, 24, 9)).unwrap();
    let r = run_experiment(
        &s,
        &AlgorithmSpec::new(AlgorithmName::GrowingHedge),
        &[ComparatorClass::SinceEntry, ComparatorClass::Fresh { max_shifts: 2 }],
    )
    .unwrap();
    let csv = trace_csv(&r);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 24);
    let json: serde_json::Value = serde_json::from_str(&report_json(&r).unwrap()).unwrap();
    assert_eq!(json["summary"]["classes"].as_array().unwrap().len(), 2);
    let total = json["summary"]["total_loss"].as_f64().unwrap();
    assert_eq!(total, r.summary.total_loss);
}

#[test]
fn large_classes_fall_back_to_dp() {
    let s = generate_scenario(&spec(EntryPattern::Periodic { period: 2, batch: 2 }, 40, 3)).unwrap();
    let r = run_experiment(
        &s,
        &AlgorithmSpec::new(AlgorithmName::FreshMarkovHedge),
        &[ComparatorClass::Fresh { max_shifts: 6 }],
    )
    .unwrap();
    assert_eq!(r.summary.classes[0].mode, EvalMode::Dp);
    assert!(r.summary.classes[0].worst_slack.unwrap() >= -1e-9);
    assert_eq!(guarded_shifts(8, 30, 3), 2);
    assert_eq!(guarded_shifts(4, 8, 3), 3);
}
