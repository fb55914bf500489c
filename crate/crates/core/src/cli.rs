//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a bound was violated, 2 invalid configuration,
//! 3 runtime failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::harness::experiment::{run_experiment, AlgorithmName, AlgorithmSpec, RegretReport, SLACK_TOLERANCE};
use crate::harness::output::{to_json, write_report};
use crate::harness::scenario::{generate_scenario, Scenario, ScenarioSpec};
use crate::harness::verify::{run_suite, Suite};
use crate::oracle::comparator::ComparatorClass;
use crate::prior::PriorPreset;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_INVALID_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

fn default_comparators() -> Vec<ComparatorClass> {
    vec![ComparatorClass::SinceEntry]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Where reports go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

/// A full experiment: every algorithm runs on every scenario and is measured
/// against every comparator class.
///
/// `seed`, when set, is added to each scenario's own seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenarios: Vec<ScenarioSpec>,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_comparators")]
    pub comparators: Vec<ComparatorClass>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Json,
    Toml,
}

impl ConfigFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "json" => Some(ConfigFormat::Json),
            "toml" => Some(ConfigFormat::Toml),
            _ => None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, format: ConfigFormat) -> Result<Self, String> {
        match format {
            ConfigFormat::Json => serde_json::from_str(text).map_err(|e| e.to_string()),
            ConfigFormat::Toml => toml::from_str(text).map_err(|e| e.to_string()),
        }
    }

    pub fn to_string(&self, format: ConfigFormat) -> Result<String, String> {
        match format {
            ConfigFormat::Json => serde_json::to_string_pretty(self).map_err(|e| e.to_string()),
            ConfigFormat::Toml => toml::to_string(self).map_err(|e| e.to_string()),
        }
    }

    /// Reads a config; the format follows the extension, JSON then TOML otherwise.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        match ConfigFormat::from_path(path) {
            Some(f) => Self::parse(&text, f),
            None => Self::parse(&text, ConfigFormat::Json).or_else(|json_err| {
                Self::parse(&text, ConfigFormat::Toml).map_err(|toml_err| format!("not JSON ({json_err}) nor TOML ({toml_err})"))
            }),
        }
    }

    /// Materializes every scenario and checks every algorithm against it.
    pub fn validate(&self) -> Result<Vec<Scenario>, String> {
        if self.scenarios.is_empty() {
            return Err("`scenarios` is empty".into());
        }
        if self.algorithms.is_empty() {
            return Err("`algorithms` is empty".into());
        }
        let mut names = std::collections::HashSet::new();
        for s in &self.scenarios {
            if !names.insert(&s.name) {
                return Err(format!("duplicate scenario name `{}`", s.name));
            }
        }
        let mut labels = std::collections::HashSet::new();
        for a in &self.algorithms {
            if !labels.insert(a.label()) {
                return Err(format!("duplicate algorithm label `{}`; set `label` to tell them apart", a.label()));
            }
        }
        let mut out = Vec::with_capacity(self.scenarios.len());
        for spec in &self.scenarios {
            let mut spec = spec.clone();
            if let Some(seed) = self.seed {
                spec.seed = spec.seed.wrapping_add(seed);
            }
            let scenario = generate_scenario(&spec).map_err(|e| format!("scenario `{}`: {e}", spec.name))?;
            for a in &self.algorithms {
                a.validate(scenario.schedule())
                    .map_err(|e| format!("algorithm `{}` on scenario `{}`: {e}", a.label(), spec.name))?;
            }
            out.push(scenario);
        }
        Ok(out)
    }
}

#[derive(Debug, Parser)]
#[command(name = "growing-experts", version, about = "Prediction with expert advice for growing expert sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiments of a config file and write CSV traces and JSON reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Also print every report as JSON on stdout.
        #[arg(long)]
        stdout: bool,
    },
    /// Run a verification suite against the brute-force oracle and the bounds.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        /// Number of seeded instances per check.
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Print the algorithm and prior presets.
    ListPresets,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Oracle,
    Bounds,
    Coincidence,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Oracle => Suite::Oracle,
            SuiteArg::Bounds => Suite::Bounds,
            SuiteArg::Coincidence => Suite::Coincidence,
            SuiteArg::All => Suite::All,
        }
    }
}

pub fn cmd_run(config: &Path, out_dir: Option<&Path>, seed: Option<u64>, stdout: bool) -> u8 {
    let mut cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid config {}: {e}", config.display());
            return EXIT_INVALID_CONFIG;
        }
    };
    if seed.is_some() {
        cfg.seed = seed;
    }
    let scenarios = match cfg.validate() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("invalid config {}: {e}", config.display());
            return EXIT_INVALID_CONFIG;
        }
    };
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());

    let pairs: Vec<(&Scenario, &AlgorithmSpec)> = scenarios
        .iter()
        .flat_map(|s| cfg.algorithms.iter().map(move |a| (s, a)))
        .collect();
    let results: Vec<crate::Result<RegretReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = pairs
            .iter()
            .map(|&(s, a)| {
                let classes = &cfg.comparators;
                scope.spawn(move || run_experiment(s, a, classes))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
    });

    let mut code = EXIT_OK;
    let mut reports = Vec::with_capacity(results.len());
    for ((s, a), res) in pairs.iter().zip(results) {
        let report = match res {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{} on {}: {e}", a.label(), s.name());
                return EXIT_RUNTIME;
            }
        };
        match write_report(&dir, &report) {
            Ok((csv, json)) => log::info!("wrote {} and {}", csv.display(), json.display()),
            Err(e) => {
                eprintln!("cannot write report for {} on {}: {e}", a.label(), s.name());
                return EXIT_RUNTIME;
            }
        }
        if let Some(w) = report.worst_slack() {
            if w < -SLACK_TOLERANCE {
                let spec_seed = cfg
                    .scenarios
                    .iter()
                    .find(|sp| sp.name == s.name())
                    .map(|sp| sp.seed.wrapping_add(cfg.seed.unwrap_or(0)));
                eprintln!(
                    "bound violated: {} on {} (seed {}), slack {w:.6e}",
                    a.label(),
                    s.name(),
                    spec_seed.unwrap_or_default()
                );
                code = EXIT_VIOLATION;
            }
        }
        eprintln!(
            "{} on {}: loss {:.6}, worst slack {}",
            a.label(),
            s.name(),
            report.summary.total_loss,
            report.worst_slack().map_or("n/a".into(), |w| format!("{w:.6e}"))
        );
        reports.push(report);
    }
    if stdout {
        match to_json(&reports) {
            Ok(s) => print!("{s}"),
            Err(e) => {
                eprintln!("cannot serialize reports: {e}");
                return EXIT_RUNTIME;
            }
        }
    }
    code
}

pub fn cmd_verify(suite: Suite, seeds: Option<u64>) -> u8 {
    let results = run_suite(suite, seeds);
    let mut code = EXIT_OK;
    for r in &results {
        println!("{r}");
        if !r.passed {
            code = EXIT_VIOLATION;
        }
    }
    code
}

/// Formula of each prior preset, in the order of [`PriorPreset::NAMES`].
pub const PRIOR_FORMULAS: [&str; 8] = [
    "π_i = 1",
    "π_i = 1/i (1-based index)",
    "π_i = 1/m_τ, uniform within the entry batch",
    "π_i = 1/(τ m_τ)",
    "π_i = ν_τ / m_τ for a rate sequence ν",
    "π_i = υ_τ for a rate sequence υ",
    "π_i = 1/(s(τ) m_τ), s(τ) the number of entry rounds up to τ",
    "explicit weights by expert index",
];

pub fn list_presets() -> String {
    let mut out = String::from("algorithms:\n");
    for a in AlgorithmName::ALL {
        out.push_str(&format!("  {:<32}{}\n", a.as_str(), a.description()));
    }
    out.push_str("priors:\n");
    for (name, formula) in PriorPreset::NAMES.iter().zip(PRIOR_FORMULAS) {
        out.push_str(&format!("  {name:<32}{formula}\n"));
    }
    out
}

pub fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Run {
            config,
            out_dir,
            seed,
            stdout,
        } => cmd_run(&config, out_dir.as_deref(), seed, stdout),
        Command::Verify { suite, seeds } => cmd_verify(suite.into(), seeds),
        Command::ListPresets => {
            print!("{}", list_presets());
            EXIT_OK
        }
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(cli))
}
