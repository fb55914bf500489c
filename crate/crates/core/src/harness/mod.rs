//! Scenario generation, experiment execution and regret reporting.

pub mod experiment;
pub mod output;
pub mod scenario;
pub mod verify;

pub use experiment::{
    run_algorithm, run_experiment, AlgorithmName, AlgorithmSpec, ClassSummary, EvalMode, RegretReport, RoundRow,
    Trace,
};
pub use scenario::{adversarial_tightness_instance, generate_scenario, EntryPattern, Scenario, ScenarioSpec, SignalFamily};
