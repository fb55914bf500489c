//! Builds a run configuration in code, prints it as TOML and writes the
//! reports it describes to a temporary directory.

use growing_experts::cli::{ConfigFormat, OutputConfig, RunConfig};
use growing_experts::harness::output::write_report;
use growing_experts::harness::{run_experiment, AlgorithmName, AlgorithmSpec, EntryPattern, ScenarioSpec, SignalFamily};
use growing_experts::oracle::ComparatorClass;
use growing_experts::PriorPreset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("growing-experts-example");
    let config = RunConfig {
        scenarios: vec![ScenarioSpec {
            name: "bursty".into(),
            family: SignalFamily::Bernoulli { segment_length: 25 },
            entry: EntryPattern::Burst { initial: 2, rounds: vec![30, 60], size: 4 },
            horizon: 100,
            seed: 1,
        }],
        algorithms: vec![
            AlgorithmSpec::new(AlgorithmName::GrowingHedge).with_prior(PriorPreset::EntryUniform),
            AlgorithmSpec::new(AlgorithmName::FreshMarkovHedge).with_prior(PriorPreset::EntryUniform),
        ],
        comparators: vec![ComparatorClass::SinceEntry, ComparatorClass::Fresh { max_shifts: 2 }],
        output: OutputConfig { dir: dir.clone() },
        seed: None,
    };
    println!("{}", config.to_string(ConfigFormat::Toml)?);

    let scenarios = config.validate()?;
    for scenario in &scenarios {
        for spec in &config.algorithms {
            let report = run_experiment(scenario, spec, &config.comparators)?;
            let (csv, json) = write_report(&config.output.dir, &report)?;
            println!("{} -> {} , {}", spec.label(), csv.display(), json.display());
        }
    }
    Ok(())
}
