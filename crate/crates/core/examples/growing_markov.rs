//! GrowingMarkovHedge against shifting comparators, checked with the
//! dynamic-programming oracle: the best admissible sequence with at most
//! three switches, and the bound it must satisfy.

use growing_experts::harness::{generate_scenario, run_experiment, AlgorithmName, AlgorithmSpec, EntryPattern, ScenarioSpec, SignalFamily};
use growing_experts::oracle::ComparatorClass;
use growing_experts::{PriorPreset, RateSequence};

fn main() -> growing_experts::Result<()> {
    let scenario = generate_scenario(&ScenarioSpec {
        name: "drift".into(),
        family: SignalFamily::DriftingMean { drift: 0.05, noise: 0.1 },
        entry: EntryPattern::Periodic { period: 10, batch: 1 },
        horizon: 150,
        seed: 11,
    })?;
    let classes = [
        ComparatorClass::Fresh { max_shifts: 3 },
        ComparatorClass::Admissible { max_shifts: 3 },
    ];
    for (name, alpha) in [
        (AlgorithmName::FreshMarkovHedge, None),
        (AlgorithmName::GrowingMarkovHedge, Some(RateSequence::Inverse)),
    ] {
        let mut spec = AlgorithmSpec::new(name).with_prior(PriorPreset::EntryUniform);
        spec.alpha = alpha;
        let report = run_experiment(&scenario, &spec, &classes)?;
        println!("{name}: total loss {:.3}", report.summary.total_loss);
        for c in &report.summary.classes {
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
            println!(
                "  {:<17} {:?}  best loss {}  regret {}  bound {}",
                c.class.name(),
                c.mode,
                fmt(c.best_loss),
                fmt(c.regret),
                fmt(c.bound),
            );
        }
    }
    Ok(())
}
