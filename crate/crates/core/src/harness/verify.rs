//! Seeded verification suites. Each suite checks one family of guarantees
//! against the oracle and reports its worst observed slack.

use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::forecaster::{Forecaster, GrowingForecaster};
use crate::growing::GrowingHedge;
use crate::growing_markov::GrowingMarkovHedge;
use crate::harness::experiment::{run_algorithm, run_experiment, AlgorithmName, AlgorithmSpec, SLACK_TOLERANCE};
use crate::harness::scenario::{adversarial_tightness_instance, generate_scenario, EntryPattern, Scenario, ScenarioSpec, SignalFamily};
use crate::loss::{evaluate_loss, mix_predictions, Loss, LossModel, Outcome, Prediction};
use crate::markov::{DenseKernel, MarkovHedge, TransitionKernel};
use crate::oracle::bounds::{self, kl_divergence, telescoping_sum};
use crate::oracle::brute::{brute_force_sequence_aggregation, brute_force_specialists};
use crate::oracle::comparator::{enumeration_estimate, for_each_comparator, ComparatorClass, ComparatorSequence, ENUMERATION_LIMIT};
use crate::oracle::dp::{self, DecreasingSharePenalty, FixedSharePenalty, ZeroPenalty};
use crate::prior::{realize_priors, PriorPreset, RateSequence};
use crate::schedule::EntrySchedule;
use crate::sleeping::{GrowingSleepingMarkovHedge, SleepingMarkovHedge, WakeSleepKernel};

/// Outcome of one suite.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub instances: usize,
    /// Name of the reported statistic (e.g. "worst slack").
    pub metric: &'static str,
    pub worst: f64,
    pub passed: bool,
    /// Offending instances, each naming its seed.
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub elapsed: Duration,
    pub time_limit: Option<Duration>,
}

impl CriterionResult {
    fn new(id: u8, title: &'static str, metric: &'static str, worst: f64) -> Self {
        Self {
            id,
            title,
            instances: 0,
            metric,
            worst,
            passed: true,
            failures: Vec::new(),
            notes: Vec::new(),
            elapsed: Duration::ZERO,
            time_limit: None,
        }
    }

    fn fail(&mut self, msg: String) {
        self.passed = false;
        if self.failures.len() < 20 {
            self.failures.push(msg);
        }
    }

    fn finish(mut self, start: Instant, limit: Option<Duration>) -> Self {
        self.elapsed = start.elapsed();
        self.time_limit = limit;
        if let Some(l) = limit {
            if self.elapsed > l {
                let msg = format!("runtime {:.2?} exceeds {:.0?}", self.elapsed, l);
                self.fail(msg);
            }
        }
        self
    }

    fn track_min(&mut self, v: f64) {
        if v < self.worst || self.worst.is_nan() {
            self.worst = v;
        }
    }

    fn track_max(&mut self, v: f64) {
        if v > self.worst || self.worst.is_nan() {
            self.worst = v;
        }
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {}: {} = {:.6e} over {} instances in {:.2?}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.metric,
            self.worst,
            self.instances,
            self.elapsed
        )?;
        for n in &self.notes {
            write!(f, "\n    note: {n}")?;
        }
        for e in &self.failures {
            write!(f, "\n    violation: {e}")?;
        }
        Ok(())
    }
}

fn rng_for(criterion: u64, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(criterion.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ seed)
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen_range(f64::EPSILON..1.0f64).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

fn prior_presets(rng: &mut ChaCha8Rng, m_total: usize) -> Vec<PriorPreset> {
    vec![
        PriorPreset::Uniform,
        PriorPreset::InverseIndex,
        PriorPreset::EntryUniform,
        PriorPreset::EntryTimeUniform,
        PriorPreset::NuSequence(RateSequence::InverseTLogSquared),
        PriorPreset::UpsilonSequence(RateSequence::InversePower { exponent: 2.0 }),
        PriorPreset::SparseRounds,
        PriorPreset::Custom((0..m_total).map(|_| rng.gen_range(0.01..10.0)).collect()),
    ]
}

fn random_entry(rng: &mut ChaCha8Rng, horizon: usize, max_experts: usize) -> EntryPattern {
    match rng.gen_range(0..4) {
        0 => {
            let batch = rng.gen_range(1..=2usize);
            let min_period = (horizon * batch).div_ceil(max_experts).max(1);
            EntryPattern::Periodic {
                period: rng.gen_range(min_period..=min_period + 8),
                batch,
            }
        }
        1 => EntryPattern::Exponential { batch: 1 },
        2 => {
            let initial = rng.gen_range(1..=3usize.min(max_experts));
            let bursts = rng.gen_range(0..=3usize);
            let size = ((max_experts - initial) / bursts.max(1)).clamp(0, 5);
            EntryPattern::Burst {
                initial,
                rounds: (0..bursts).map(|_| rng.gen_range(1..=horizon)).collect(),
                size,
            }
        }
        _ => EntryPattern::Random {
            initial: rng.gen_range(1..=2usize.min(max_experts)),
            rate: rng.gen_range(0.05..0.6),
            max_experts,
        },
    }
}

fn random_family(rng: &mut ChaCha8Rng, log_loss: bool) -> SignalFamily {
    if log_loss {
        SignalFamily::Bernoulli {
            segment_length: rng.gen_range(3..30),
        }
    } else {
        SignalFamily::DriftingMean {
            drift: rng.gen_range(0.0..0.2),
            noise: rng.gen_range(0.0..0.3),
        }
    }
}

fn growing_scenario(rng: &mut ChaCha8Rng, name: String, horizon: usize, max_experts: usize, log_loss: bool) -> Result<Scenario> {
    let entry = random_entry(rng, horizon, max_experts);
    let family = random_family(rng, log_loss);
    let seed = rng.gen();
    generate_scenario(&ScenarioSpec {
        name,
        family,
        entry,
        horizon,
        seed,
    })
}

/// MarkovHedge (and SleepingMarkovHedge) agree with brute-force
/// aggregation over whole sequences.
pub fn forward_vs_brute_force(instances: u64) -> CriterionResult {
    let start = Instant::now();
    let mut r = CriterionResult::new(1, "MarkovHedge equals brute-force sequence aggregation", "max relative error", 0.0);
    let specialist_max = std::cell::Cell::new(0.0f64);
    for seed in 0..instances {
        let mut rng = rng_for(1, seed);
        if let Err(e) = forward_instance(&mut rng, &mut r) {
            r.fail(format!("seed {seed}: {e}"));
        }
        if let Err(e) = specialist_instance(&mut rng, &specialist_max) {
            r.fail(format!("seed {seed} (specialists): {e}"));
        }
        r.instances += 1;
    }
    let s = specialist_max.get();
    r.notes.push(format!("sleeping specialists vs brute force: max relative error {s:.3e}"));
    r.track_max(s);
    if r.worst > 1e-9 {
        r.fail(format!("relative error {:.3e} above 1e-9", r.worst));
    }
    r.finish(start, Some(Duration::from_secs(10)))
}

fn rel_err(a: &Prediction, b: &Prediction) -> f64 {
    match (a, b) {
        (Prediction::Dist(x), Prediction::Dist(y)) => x
            .iter()
            .zip(y)
            .map(|(p, q)| (p - q).abs() / q.abs().max(1e-300))
            .fold(0.0, f64::max),
        (Prediction::Point(x), Prediction::Point(y)) => (x - y).abs() / y.abs().max(1e-300),
        _ => f64::INFINITY,
    }
}

fn forward_instance(rng: &mut ChaCha8Rng, r: &mut CriterionResult) -> Result<()> {
    let m = rng.gen_range(1..=3usize);
    let horizon = rng.gen_range(1..=6usize);
    let eta = rng.gen_range(0.3..2.0);
    let mut theta_1 = random_simplex(rng, m);
    if m > 1 && rng.gen_bool(0.2) {
        theta_1[rng.gen_range(0..m)] = 0.0;
        let s: f64 = theta_1.iter().sum();
        theta_1.iter_mut().for_each(|x| *x /= s);
    }
    let kernels: Vec<TransitionKernel> = (1..horizon)
        .map(|_| {
            let cols: Vec<Vec<f64>> = (0..m).map(|_| random_simplex(rng, m)).collect();
            DenseKernel::from_columns(&cols).map(TransitionKernel::Dense)
        })
        .collect::<Result<_>>()?;
    let preds: Vec<Vec<Prediction>> = (0..horizon)
        .map(|_| (0..m).map(|_| Prediction::Dist(random_simplex(rng, 3))).collect())
        .collect();
    let losses: Vec<Vec<f64>> = (0..horizon).map(|_| (0..m).map(|_| rng.gen_range(0.0..3.0)).collect()).collect();
    let brute = brute_force_sequence_aggregation(&theta_1, &kernels, &preds, &losses, eta)?;
    let mut mh = MarkovHedge::new(eta, &theta_1)?;
    for t in 0..horizon {
        let x = mh.predict(&preds[t])?;
        r.track_max(rel_err(&x, &brute[t]));
        if t + 1 < horizon {
            mh.update_with_kernel(&losses[t], 0.0, &kernels[t])?;
        }
    }
    Ok(())
}

fn specialist_instance(rng: &mut ChaCha8Rng, worst: &std::cell::Cell<f64>) -> Result<()> {
    let m = rng.gen_range(1..=3usize);
    let horizon = rng.gen_range(1..=6usize);
    let model = LossModel::log_loss(2)?;
    let prior = random_simplex(rng, m);
    let awake: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..0.9)).collect();
    let kernels: Vec<Vec<WakeSleepKernel>> = (1..horizon)
        .map(|_| {
            (0..m)
                .map(|_| WakeSleepKernel::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let preds: Vec<Vec<Prediction>> = (0..horizon)
        .map(|_| (0..m).map(|_| Prediction::bernoulli(rng.gen_range(0.05..0.95))).collect())
        .collect::<Result<_>>()?;
    let outcomes: Vec<Outcome> = (0..horizon).map(|_| Outcome::Symbol(rng.gen_range(0..2))).collect();
    let brute = brute_force_specialists(&prior, &awake, &kernels, &preds, &outcomes, &model, 1.0)?;
    let mut smh = SleepingMarkovHedge::new(1.0, &prior, &awake)?;
    for t in 0..horizon {
        let x = smh.predict(&preds[t])?;
        worst.set(worst.get().max(rel_err(&x, &brute[t].0)));
        let lt = model.loss(&x, &outcomes[t])?;
        let row = preds[t].iter().map(|xi| model.loss(xi, &outcomes[t])).collect::<Result<Vec<_>>>()?;
        if t + 1 < horizon {
            smh.update_with_kernels(&row, lt, &kernels[t])?;
        }
    }
    Ok(())
}

/// One scenario of the growing fuzz corpus together with its prior.
pub struct CorpusEntry {
    pub seed: u64,
    pub scenario: Scenario,
    pub prior: PriorPreset,
}

/// Seeded growing scenarios (T ≤ 200, M_T ≤ 50) cycling through every prior
/// preset and both loss models.
pub fn growing_corpus(count: u64) -> Result<Vec<CorpusEntry>> {
    (0..count)
        .map(|seed| {
            let mut rng = rng_for(2, seed);
            let horizon = rng.gen_range(1..=200usize);
            let log_loss = seed.is_multiple_of(2);
            let scenario = growing_scenario(&mut rng, format!("corpus-{seed}"), horizon, 50, log_loss)?;
            let presets = prior_presets(&mut rng, scenario.schedule().total_experts());
            let prior = presets[(seed as usize / 2) % presets.len()].clone();
            Ok(CorpusEntry { seed, scenario, prior })
        })
        .collect()
}

/// GrowingHedge against every expert over `[τ_i, t]`, for every prefix `t`.
pub fn since_entry_regret(instances: u64) -> CriterionResult {
    let start = Instant::now();
    let mut r = CriterionResult::new(2, "GrowingHedge regret per expert since entry", "worst slack", f64::INFINITY);
    let corpus = match growing_corpus(instances) {
        Ok(c) => c,
        Err(e) => {
            r.fail(format!("corpus generation failed: {e}"));
            return r.finish(start, None);
        }
    };
    let mut max_m = 0;
    for entry in &corpus {
        let spec = AlgorithmSpec::new(AlgorithmName::GrowingHedge).with_prior(entry.prior.clone());
        max_m = max_m.max(entry.scenario.schedule().total_experts());
        match run_experiment(&entry.scenario, &spec, &[ComparatorClass::SinceEntry]) {
            Ok(rep) => {
                let s = rep.summary.classes[0].worst_prefix_slack.unwrap_or(f64::NAN);
                r.track_min(s);
                if !(s >= -SLACK_TOLERANCE) {
                    r.fail(format!("seed {} prior {}: slack {s:.3e}", entry.seed, entry.prior.name()));
                }
            }
            Err(e) => r.fail(format!("seed {}: {e}", entry.seed)),
        }
        r.instances += 1;
    }
    r.notes.push(format!("largest expert set {max_m}"));
    r.finish(start, Some(Duration::from_secs(30)))
}

/// Largest `k ≤ k_max` whose enumeration fits the guard.
pub fn guarded_shifts(total_experts: usize, horizon: usize, k_max: usize) -> usize {
    (0..=k_max)
        .rev()
        .find(|&k| enumeration_estimate(total_experts, horizon, k) <= ENUMERATION_LIMIT)
        .unwrap_or(0)
}

/// FreshMarkovHedge and GrowingMarkovHedge against fresh and admissible
/// comparators, and GrowingHedge against fresh ones under log loss.
pub fn shifting_regret(instances: u64) -> CriterionResult {
    let start = Instant::now();
    let mut r = CriterionResult::new(3, "fresh and admissible shifting regret", "worst slack", f64::INFINITY);
    let mut enumerated = 0u64;
    let mut k_hist = [0usize; 4];
    for seed in 0..instances {
        let mut rng = rng_for(3, seed);
        let horizon = rng.gen_range(5..=30usize);
        let log_loss = seed.is_multiple_of(2);
        let scenario = match growing_scenario(&mut rng, format!("shifting-{seed}"), horizon, 8, log_loss) {
            Ok(s) => s,
            Err(e) => {
                r.fail(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let m = scenario.schedule().total_experts();
        let k = guarded_shifts(m, horizon, 3);
        k_hist[k] += 1;
        let presets = prior_presets(&mut rng, m);
        let prior = presets[seed as usize % presets.len()].clone();
        let mut runs = vec![
            (
                AlgorithmSpec::new(AlgorithmName::FreshMarkovHedge).with_prior(prior.clone()),
                vec![ComparatorClass::Fresh { max_shifts: k }, ComparatorClass::Fresh { max_shifts: 3 }],
            ),
            (
                AlgorithmSpec::new(AlgorithmName::GrowingMarkovHedge).with_prior(prior.clone()),
                vec![
                    ComparatorClass::Admissible { max_shifts: k },
                    ComparatorClass::Admissible { max_shifts: 3 },
                    ComparatorClass::Fresh { max_shifts: k },
                ],
            ),
        ];
        if log_loss {
            runs.push((
                AlgorithmSpec::new(AlgorithmName::GrowingHedge).with_prior(prior.clone()),
                vec![ComparatorClass::Fresh { max_shifts: k }],
            ));
        }
        for (spec, classes) in runs {
            match run_experiment(&scenario, &spec, &classes) {
                Ok(rep) => {
                    for c in &rep.summary.classes {
                        enumerated += c.comparators_checked;
                        for s in [c.worst_slack, c.worst_prefix_slack].into_iter().flatten() {
                            r.track_min(s);
                            if s < -SLACK_TOLERANCE {
                                r.fail(format!("seed {seed} {} {}: slack {s:.3e}", spec.name, c.class.name()));
                            }
                        }
                        if c.worst_slack.is_none() {
                            r.fail(format!("seed {seed} {} {}: no bound evaluated", spec.name, c.class.name()));
                        }
                    }
                }
                Err(e) => r.fail(format!("seed {seed} {}: {e}", spec.name)),
            }
        }
        r.instances += 1;
    }
    r.notes.push(format!(
        "{enumerated} comparators enumerated; enumeration depth k by scenario: k=0:{} k=1:{} k=2:{} k=3:{}; k=3 checked by DP everywhere",
        k_hist[0], k_hist[1], k_hist[2], k_hist[3]
    ));
    r.finish(start, Some(Duration::from_secs(60)))
}

fn universe_kernel(schedule: &EntrySchedule, alpha: &RateSequence, beta: &RateSequence, i: usize, t: usize) -> WakeSleepKernel {
    let tau = schedule.entry_time(i).unwrap_or(usize::MAX);
    if t < tau {
        WakeSleepKernel { fall_asleep: 1.0, wake_up: 0.0 }
    } else if t == tau {
        WakeSleepKernel { fall_asleep: 0.5, wake_up: 0.5 }
    } else {
        WakeSleepKernel {
            fall_asleep: alpha.at(t),
            wake_up: beta.at(t),
        }
    }
}

/// Sparse shifting regret: SleepingMarkovHedge with random kernels against
/// its general bound, GrowingSleepingMarkovHedge against its closed form,
/// and the simplified display on larger runs.
pub fn sparse_regret(instances: u64, display_runs: u64) -> CriterionResult {
    let start = Instant::now();
    let mut r = CriterionResult::new(4, "sparse shifting regret", "worst slack", f64::INFINITY);
    let mut checked = 0u64;
    for seed in 0..instances {
        let mut rng = rng_for(4, seed);
        match random_kernel_instance(&mut rng, &mut checked) {
            Ok(s) => {
                r.track_min(s);
                if s < -SLACK_TOLERANCE {
                    r.fail(format!("seed {seed} (random kernels): slack {s:.3e}"));
                }
            }
            Err(e) => r.fail(format!("seed {seed} (random kernels): {e}")),
        }
        match growing_sparse_instance(&mut rng, seed, &mut checked) {
            Ok(s) => {
                r.track_min(s);
                if s < -SLACK_TOLERANCE {
                    r.fail(format!("seed {seed} (growing): slack {s:.3e}"));
                }
            }
            Err(e) => r.fail(format!("seed {seed} (growing): {e}")),
        }
        r.instances += 1;
    }
    r.notes.push(format!("{checked} sparse comparators enumerated"));
    let mut display_worst = f64::INFINITY;
    let mut closed_worst = f64::INFINITY;
    for seed in 0..display_runs {
        let mut rng = rng_for(44, seed);
        match display_instance(&mut rng, seed) {
            Ok((d, c)) => {
                display_worst = display_worst.min(d);
                closed_worst = closed_worst.min(c);
                if d < -SLACK_TOLERANCE {
                    r.fail(format!("seed {seed} (display form): slack {d:.3e}"));
                }
            }
            Err(e) => r.fail(format!("seed {seed} (display form): {e}")),
        }
    }
    r.notes.push(format!(
        "display form on {display_runs} runs (T ≤ 100): worst slack {display_worst:.4e}; closed form on the same comparators {closed_worst:.4e}"
    ));
    r.track_min(display_worst);
    r.finish(start, Some(Duration::from_secs(60)))
}

fn random_kernel_instance(rng: &mut ChaCha8Rng, checked: &mut u64) -> Result<f64> {
    let m = rng.gen_range(1..=4usize);
    let horizon = rng.gen_range(1..=8usize);
    let eta = 1.0;
    let model = LossModel::log_loss(2)?;
    let prior = random_simplex(rng, m);
    let awake: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..0.95)).collect();
    let kernels: Vec<Vec<WakeSleepKernel>> = (0..horizon)
        .map(|_| {
            (0..m)
                .map(|_| WakeSleepKernel::new(rng.gen_range(0.02..0.98), rng.gen_range(0.02..0.98)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let preds: Vec<Vec<Prediction>> = (0..horizon)
        .map(|_| (0..m).map(|_| Prediction::bernoulli(rng.gen_range(0.02..0.98))).collect())
        .collect::<Result<_>>()?;
    let outcomes: Vec<Outcome> = (0..horizon).map(|_| Outcome::Symbol(rng.gen_range(0..2))).collect();
    let mut smh = SleepingMarkovHedge::new(eta, &prior, &awake)?;
    let mut lt_total = 0.0;
    let mut rows = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let x = smh.predict(&preds[t])?;
        let lt = model.loss(&x, &outcomes[t])?;
        let row = preds[t].iter().map(|xi| model.loss(xi, &outcomes[t])).collect::<Result<Vec<_>>>()?;
        // kernels[t] is the chain into round t + 2
        smh.update_with_kernels(&row, lt, &kernels[t])?;
        lt_total += lt;
        rows.push(row);
    }
    let schedule = EntrySchedule::fixed(m, horizon)?;
    let class = ComparatorClass::Sparse { pool: 3, max_shifts: 2 };
    let mut worst = f64::INFINITY;
    let mut failure = None;
    for_each_comparator(&class, &schedule, horizon, |path| {
        *checked += 1;
        let c = ComparatorSequence::from_indices(path.to_vec()).expect("non-empty");
        let lc: f64 = path.iter().enumerate().map(|(t, &i)| rows[t][i]).sum();
        match bounds::bound_sleeping_general(&prior, &awake, |i, t| kernels[t - 2][i], &c, eta) {
            Ok(b) => worst = worst.min(b - (lt_total - lc)),
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(worst),
    }
}

fn random_rates(rng: &mut ChaCha8Rng) -> RateSequence {
    match rng.gen_range(0..3) {
        0 => RateSequence::Inverse,
        1 => RateSequence::InverseTLogT,
        _ => RateSequence::Constant(rng.gen_range(0.05..0.5)),
    }
}

fn growing_sparse_instance(rng: &mut ChaCha8Rng, seed: u64, checked: &mut u64) -> Result<f64> {
    let horizon = rng.gen_range(1..=8usize);
    let scenario = growing_scenario(rng, format!("sparse-{seed}"), horizon, 4, seed.is_multiple_of(2))?;
    let schedule = scenario.schedule().clone();
    let m = schedule.total_experts();
    let presets = prior_presets(rng, m);
    let prior = presets[seed as usize % presets.len()].clone();
    let alpha = random_rates(rng);
    let beta = random_rates(rng);
    let spec = AlgorithmSpec::new(AlgorithmName::GrowingSleepingMarkovHedge)
        .with_prior(prior.clone())
        .with_alpha(alpha.clone())
        .with_beta(beta.clone());
    let class = ComparatorClass::Sparse { pool: 3, max_shifts: 2 };
    let rep = run_experiment(&scenario, &spec, &[class])?;
    let summary = &rep.summary.classes[0];
    let mut worst = summary.worst_slack.unwrap_or(f64::NEG_INFINITY);
    // the universe form of the same comparators sits between regret and the closed form
    let trace = run_algorithm(&scenario, &spec)?;
    let lt = trace.cumulative[horizon - 1];
    let table = scenario.loss_table()?;
    let priors = realize_priors(&prior, &schedule)?;
    let total: f64 = priors.iter().sum();
    let universe: Vec<f64> = priors.iter().map(|p| p / total).collect();
    let awake: Vec<f64> = (0..m).map(|i| if schedule.entry_time(i) == Some(1) { 0.5 } else { 0.0 }).collect();
    let eta = trace.eta;
    let mut failure = None;
    for_each_comparator(&class, &schedule, horizon, |path| {
        *checked += 1;
        let c = ComparatorSequence::from_indices(path.to_vec()).expect("non-empty");
        let general = bounds::bound_sleeping_general(
            &universe,
            &awake,
            |i, t| universe_kernel(&schedule, &alpha, &beta, i, t),
            &c,
            eta,
        );
        let closed = bounds::bound_sleeping(&priors, &schedule, &alpha, &beta, &c, eta);
        match (general, closed) {
            (Ok(g), Ok(cl)) => {
                let regret = lt - c.loss(&table);
                worst = worst.min(g - regret).min(cl - g);
            }
            (Err(e), _) | (_, Err(e)) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(worst),
    }
}

fn random_sparse_comparator(rng: &mut ChaCha8Rng, schedule: &EntrySchedule, horizon: usize) -> Option<ComparatorSequence> {
    let m = schedule.total(horizon);
    for _ in 0..50 {
        let n = rng.gen_range(1..=3usize.min(m));
        let mut pool: Vec<usize> = (0..m).collect();
        pool.shuffle(rng);
        pool.truncate(n);
        let k = rng.gen_range(0..=3usize.min(horizon - 1));
        let mut times: Vec<usize> = (2..=horizon).collect();
        times.shuffle(rng);
        times.truncate(k);
        times.sort_unstable();
        let mut seq = Vec::with_capacity(horizon);
        let mut current = *pool.choose(rng)?;
        for t in 1..=horizon {
            if times.contains(&t) {
                current = *pool.choose(rng)?;
            }
            seq.push(current);
        }
        let c = ComparatorSequence::from_indices(seq).ok()?;
        if c.is_admissible(schedule) {
            return Some(c);
        }
    }
    None
}

fn display_instance(rng: &mut ChaCha8Rng, seed: u64) -> Result<(f64, f64)> {
    let horizon = rng.gen_range(20..=100usize);
    let scenario = growing_scenario(rng, format!("display-{seed}"), horizon, 20, seed.is_multiple_of(2))?;
    let schedule = scenario.schedule();
    let spec = AlgorithmSpec::new(AlgorithmName::GrowingSleepingMarkovHedge)
        .with_prior(PriorPreset::EntryTimeUniform)
        .with_alpha(RateSequence::Inverse)
        .with_beta(RateSequence::Inverse);
    let trace = run_algorithm(&scenario, &spec)?;
    let lt = trace.cumulative[horizon - 1];
    let table = scenario.loss_table()?;
    let priors = realize_priors(&PriorPreset::EntryTimeUniform, schedule)?;
    let mut comparators: Vec<ComparatorSequence> = (0..200)
        .filter_map(|_| random_sparse_comparator(rng, schedule, horizon))
        .collect();
    let best = dp::solve(schedule, &table, &ZeroPenalty, trace.eta, 3, false)?;
    for k in 0..=3 {
        if let Some((_, i)) = best.best_exact(horizon, k) {
            let c = best.path(horizon, k, i)?;
            if c.pool().len() <= 3 {
                comparators.push(c);
            }
        }
    }
    let (mut d_worst, mut c_worst) = (f64::INFINITY, f64::INFINITY);
    for c in &comparators {
        let regret = lt - c.loss(&table);
        let d = bounds::display_sparse_entry_time(schedule, c, trace.eta)?;
        let cl = bounds::bound_sleeping(&priors, schedule, &RateSequence::Inverse, &RateSequence::Inverse, c, trace.eta)?;
        d_worst = d_worst.min(d - regret);
        c_worst = c_worst.min(cl - regret);
    }
    Ok((d_worst, c_worst))
}

/// GrowingHedge and FreshMarkovHedge produce the same losses under log loss.
pub fn coincidence(instances: u64) -> CriterionResult {
    let start = Instant::now();
    let mut r = CriterionResult::new(5, "GrowingHedge coincides with FreshMarkovHedge under log loss", "max loss difference", 0.0);
    for seed in 0..instances {
        let mut rng = rng_for(5, seed);
        let horizon = rng.gen_range(1..=100usize);
        let res = (|| -> Result<f64> {
            let scenario = growing_scenario(&mut rng, format!("coincide-{seed}"), horizon, 30, true)?;
            let presets = prior_presets(&mut rng, scenario.schedule().total_experts());
            let prior = presets[seed as usize % presets.len()].clone();
            let a = run_algorithm(&scenario, &AlgorithmSpec::new(AlgorithmName::GrowingHedge).with_prior(prior.clone()))?;
            let b = run_algorithm(&scenario, &AlgorithmSpec::new(AlgorithmName::FreshMarkovHedge).with_prior(prior))?;
            Ok(a.learner_losses
                .iter()
                .zip(&b.learner_losses)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max))
        })();
        match res {
            Ok(d) => {
                r.track_max(d);
                if !(d <= 1e-12) {
                    r.fail(format!("seed {seed}: losses differ by {d:.3e}"));
                }
            }
            Err(e) => r.fail(format!("seed {seed}: {e}")),
        }
        r.instances += 1;
    }
    r.finish(start, None)
}

/// Regret of GrowingHedge (uniform prior) on the adversarial instance.
pub fn tightness_regret(schedule: &EntrySchedule) -> Result<f64> {
    let scenario = adversarial_tightness_instance(schedule.total_experts(), schedule)?;
    let rep = run_experiment(&scenario, &AlgorithmSpec::new(AlgorithmName::GrowingHedge), &[ComparatorClass::SinceEntry])?;
    Ok(rep.summary.classes[0].regret.unwrap_or(f64::NAN))
}

pub fn tightness() -> CriterionResult {
    let start = Instant::now();
    let mut r = CriterionResult::new(6, "adversarial instance attains ln M_T", "max |regret − ln M_T|", 0.0);
    for &m in &[1usize, 2, 4, 8, 16] {
        let schedules = [
            EntrySchedule::fixed(m, 3),
            EntrySchedule::from_counts({
                let mut c = vec![1; m];
                c.extend([0, 0]);
                c
            }),
            EntrySchedule::from_counts({
                let mut c = vec![0; 6];
                c[0] = 1;
                c[3] = m - 1;
                c
            }),
        ];
        for sched in schedules.into_iter().filter_map(|s| s.ok()) {
            match tightness_regret(&sched) {
                Ok(reg) => {
                    let d = (reg - (m as f64).ln()).abs();
                    r.track_max(d);
                    if !(d <= 1e-6) {
                        r.fail(format!("M_T = {m}, counts {:?}: regret {reg}", sched.counts()));
                    }
                }
                Err(e) => r.fail(format!("M_T = {m}: {e}")),
            }
            r.instances += 1;
        }
    }
    r.finish(start, None)
}

/// Fixed Share and Decreasing Share (α_t = 1/t) against every comparator
/// with exactly `k ≤ 5` shifts, via DP; plus the telescoping identity.
pub fn share_regret(instances: u64) -> CriterionResult {
    let start = Instant::now();
    let mut r = CriterionResult::new(7, "Fixed Share and Decreasing Share shifting regret", "worst slack", f64::INFINITY);
    for seed in 0..instances {
        let mut rng = rng_for(7, seed);
        let res = (|| -> Result<f64> {
            let m = rng.gen_range(2..=8usize);
            let horizon = rng.gen_range(2..=100usize);
            let family = random_family(&mut rng, seed.is_multiple_of(2));
            let scenario = generate_scenario(&ScenarioSpec {
                name: format!("share-{seed}"),
                family,
                entry: EntryPattern::Constant { experts: m },
                horizon,
                seed: rng.gen(),
            })?;
            let table = scenario.loss_table()?;
            let alpha = rng.gen_range(0.005..0.3);
            let fs = AlgorithmSpec::new(AlgorithmName::FixedShare).with_alpha(RateSequence::Constant(alpha));
            let ds = AlgorithmSpec::new(AlgorithmName::DecreasingShare).with_alpha(RateSequence::Inverse);
            let fs_trace = run_algorithm(&scenario, &fs)?;
            let ds_trace = run_algorithm(&scenario, &ds)?;
            let eta = fs_trace.eta;
            let fs_dp = dp::solve(scenario.schedule(), &table, &FixedSharePenalty { m, alpha }, eta, 5, false)?;
            let ds_dp = dp::solve(
                scenario.schedule(),
                &table,
                &DecreasingSharePenalty {
                    m,
                    alpha: RateSequence::Inverse,
                },
                eta,
                5,
                false,
            )?;
            let mut worst = f64::INFINITY;
            for t in 1..=horizon {
                for k in 0..=5 {
                    if let Some((v, _)) = fs_dp.best_exact(t, k) {
                        worst = worst.min(v - fs_trace.cumulative[t - 1]);
                    }
                    if let Some((v, i)) = ds_dp.best_exact(t, k) {
                        worst = worst.min(v - ds_trace.cumulative[t - 1]);
                        if t == horizon {
                            // the DP penalty reproduces the closed form exactly
                            let c = ds_dp.path(t, k, i)?;
                            let closed = c.loss(&table) + bounds::bound_decreasing_share(m, &c, eta)?;
                            if (closed - v).abs() > 1e-9 * closed.abs().max(1.0) {
                                return Err(crate::error::invalid(format!("closed form {closed} differs from DP {v}")));
                            }
                        }
                    }
                }
            }
            Ok(worst)
        })();
        match res {
            Ok(s) => {
                r.track_min(s);
                if s < -SLACK_TOLERANCE {
                    r.fail(format!("seed {seed}: slack {s:.3e}"));
                }
            }
            Err(e) => r.fail(format!("seed {seed}: {e}")),
        }
        r.instances += 1;
    }
    let mut tele = 0.0f64;
    for t in (1..=1000).chain((1..=100).map(|j| j * 1000)) {
        tele = tele.max((telescoping_sum(t) - (t as f64).ln()).abs());
    }
    r.notes.push(format!("telescoping identity for T ≤ 1e5: max error {tele:.3e}"));
    if !(tele <= 1e-12) {
        r.fail(format!("telescoping identity off by {tele:.3e}"));
    }
    r.finish(start, None)
}

/// Per-round operation counts of one growing algorithm at the requested
/// expert counts, with one entrant per round up to `horizon`.
pub fn op_counts<F: GrowingForecaster>(mut f: F, horizon: usize, probes: &[usize]) -> Result<(Vec<u64>, Duration)> {
    let start = Instant::now();
    let model = LossModel::log_loss(2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut xs = Vec::with_capacity(horizon);
    let mut losses = vec![0.0; horizon];
    let mut out = Vec::new();
    for t in 1..=horizon {
        f.admit(&[1.0])?;
        xs.push(Prediction::bernoulli(rng.gen_range(0.05..0.95))?);
        let before = f.op_count();
        let x = f.predict(&xs)?;
        let y = Outcome::Symbol(usize::from(rng.gen_bool(0.5)));
        let lt = evaluate_loss(&model, &x, &y)?;
        for (l, xi) in losses.iter_mut().zip(&xs) {
            *l = evaluate_loss(&model, xi, &y)?;
        }
        f.update(&losses[..t], lt)?;
        if probes.contains(&t) {
            out.push(f.op_count() - before);
        }
    }
    Ok((out, start.elapsed()))
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// Linear per-round cost of the growing algorithms.
pub fn complexity() -> CriterionResult {
    let start = Instant::now();
    let mut r = CriterionResult::new(8, "per-round cost linear in M_t", "max log-log slope", 0.0);
    let probes = [100usize, 1000, 10_000];
    let horizon = 10_000;
    type Run = Result<(Vec<u64>, Duration)>;
    let runs: Vec<(&str, Run)> = vec![
        ("growing_hedge", GrowingHedge::new(1.0).and_then(|f| op_counts(f, horizon, &probes))),
        (
            "growing_markov_hedge",
            GrowingMarkovHedge::new(1.0, RateSequence::Inverse).and_then(|f| op_counts(f, horizon, &probes)),
        ),
        (
            "growing_sleeping_markov_hedge",
            GrowingSleepingMarkovHedge::new(1.0).and_then(|f| op_counts(f, horizon, &probes)),
        ),
    ];
    for (name, res) in runs {
        match res {
            Ok((counts, elapsed)) => {
                let xs: Vec<f64> = probes.iter().map(|&p| p as f64).collect();
                let ys: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
                let slope = loglog_slope(&xs, &ys);
                r.track_max(slope);
                r.notes.push(format!("{name}: ops {counts:?}, slope {slope:.4}, T = M_T = 1e4 in {elapsed:.2?}"));
                if !(slope <= 1.1) {
                    r.fail(format!("{name}: slope {slope:.4}"));
                }
                if elapsed > Duration::from_secs(10) {
                    r.fail(format!("{name}: {elapsed:.2?} for T = M_T = 1e4"));
                }
            }
            Err(e) => r.fail(format!("{name}: {e}")),
        }
        r.instances += 1;
    }
    r.finish(start, None)
}

/// The mixture inequality for both loss models, and the KL mixture bound of
/// GrowingHedge over the growing corpus.
pub fn mixability(triples: u64, corpus_size: u64, u_per_instance: usize) -> CriterionResult {
    let start = Instant::now();
    let mut r = CriterionResult::new(9, "exp-concavity and KL mixture bound", "worst slack", f64::INFINITY);
    let mut rng = rng_for(9, 0);
    let models = [LossModel::log_loss(3), LossModel::square_loss(-1.0, 2.0), LossModel::square_loss(0.0, 1.0)];
    for model in models.into_iter().filter_map(|m| m.ok()) {
        let mut worst = f64::INFINITY;
        for _ in 0..triples {
            let k = rng.gen_range(2..=4usize);
            let v = random_simplex(&mut rng, k);
            let (xs, y): (Vec<Prediction>, Outcome) = match model.kind() {
                crate::loss::LossKind::Log { alphabet } => (
                    (0..k).map(|_| Prediction::Dist(random_simplex(&mut rng, alphabet))).collect(),
                    Outcome::Symbol(rng.gen_range(0..alphabet)),
                ),
                crate::loss::LossKind::Square { lo, hi } => (
                    (0..k).map(|_| Prediction::Point(rng.gen_range(lo..=hi))).collect(),
                    Outcome::Real(rng.gen_range(lo..=hi)),
                ),
            };
            let res = (|| -> Result<f64> {
                let mix = mix_predictions(&v, &xs)?;
                let lhs = (-model.eta() * evaluate_loss(&model, &mix, &y)?).exp();
                let mut rhs = 0.0;
                for (w, x) in v.iter().zip(&xs) {
                    rhs += w * (-model.eta() * evaluate_loss(&model, x, &y)?).exp();
                }
                Ok(lhs - rhs)
            })();
            match res {
                Ok(s) => worst = worst.min(s),
                Err(e) => r.fail(format!("mixture inequality: {e}")),
            }
            r.instances += 1;
        }
        r.notes.push(format!("{:?}: worst mixture slack {worst:.3e} over {triples} triples", model.kind()));
        r.track_min(worst);
        if worst < -SLACK_TOLERANCE {
            r.fail(format!("{:?}: mixture slack {worst:.3e}", model.kind()));
        }
    }
    let corpus = match growing_corpus(corpus_size) {
        Ok(c) => c,
        Err(e) => {
            r.fail(format!("corpus generation failed: {e}"));
            return r.finish(start, None);
        }
    };
    let mut kl_worst = f64::INFINITY;
    for entry in &corpus {
        match kl_instance(entry, &mut rng, u_per_instance) {
            Ok(s) => {
                kl_worst = kl_worst.min(s);
                if s < -SLACK_TOLERANCE {
                    r.fail(format!("seed {} (KL mixture): slack {s:.3e}", entry.seed));
                }
            }
            Err(e) => r.fail(format!("seed {} (KL mixture): {e}", entry.seed)),
        }
    }
    r.notes.push(format!(
        "KL mixture bound: worst slack {kl_worst:.3e} over {} scenarios × {u_per_instance} mixtures",
        corpus.len()
    ));
    r.track_min(kl_worst);
    r.finish(start, None)
}

/// `KL(u‖π/Π_{M_T})/η − (L_T − Σ_i u_i L̃_i)` minimized over random `u`, where
/// `L̃_i = L_{τ_i−1} + Σ_{s≥τ_i} ℓ_{i,s}`.
fn kl_instance(entry: &CorpusEntry, rng: &mut ChaCha8Rng, count: usize) -> Result<f64> {
    let scenario = &entry.scenario;
    let schedule = scenario.schedule();
    let spec = AlgorithmSpec::new(AlgorithmName::GrowingHedge).with_prior(entry.prior.clone());
    let trace = run_algorithm(scenario, &spec)?;
    let table = scenario.loss_table()?;
    let horizon = scenario.horizon();
    let m = schedule.total_experts();
    let priors = realize_priors(&entry.prior, schedule)?;
    let total: f64 = priors.iter().sum();
    let pi: Vec<f64> = priors.iter().map(|p| p / total).collect();
    let mut extended = vec![0.0; m];
    for (i, e) in extended.iter_mut().enumerate() {
        let tau = schedule.entry_time(i).expect("entered");
        *e = if tau >= 2 { trace.cumulative[tau - 2] } else { 0.0 };
        for t in tau..=horizon {
            *e += table.get(t, i);
        }
    }
    let lt = trace.cumulative[horizon - 1];
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let mut u = random_simplex(rng, m);
        if m > 1 && rng.gen_bool(0.5) {
            let keep = rng.gen_range(1..=m);
            let mut idx: Vec<usize> = (0..m).collect();
            idx.shuffle(rng);
            for &i in &idx[keep..] {
                u[i] = 0.0;
            }
            let s: f64 = u.iter().sum();
            u.iter_mut().for_each(|x| *x /= s);
        }
        let mixed: f64 = u.iter().zip(&extended).map(|(a, b)| a * b).sum();
        let kl = kl_divergence(&u, &pi)?;
        worst = worst.min(kl / trace.eta - (lt - mixed));
    }
    Ok(worst)
}

/// Which suites a verification run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Oracle,
    Bounds,
    Coincidence,
    All,
}

/// Runs a suite; `seeds` overrides the number of seeded instances per check.
pub fn run_suite(suite: Suite, seeds: Option<u64>) -> Vec<CriterionResult> {
    let n = |default: u64| seeds.unwrap_or(default);
    match suite {
        Suite::Oracle => vec![forward_vs_brute_force(n(200))],
        Suite::Coincidence => vec![coincidence(n(100))],
        Suite::Bounds => vec![
            since_entry_regret(n(500)),
            shifting_regret(n(100)),
            sparse_regret(n(50), n(100)),
            tightness(),
            share_regret(n(200)),
        ],
        Suite::All => vec![
            forward_vs_brute_force(n(200)),
            since_entry_regret(n(500)),
            shifting_regret(n(100)),
            sparse_regret(n(50), n(100)),
            coincidence(n(100)),
            tightness(),
            share_regret(n(200)),
            complexity(),
            mixability(1000, n(500), 100),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for r in [forward_vs_brute_force(10), since_entry_regret(6), coincidence(5), tightness(), share_regret(5)] {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn seeded_suites_are_deterministic() {
        let a = shifting_regret(3);
        let b = shifting_regret(3);
        assert_eq!(a.worst, b.worst);
        assert_eq!(a.notes, b.notes);
    }

    #[test]
    fn slope_of_linear_counts_is_one() {
        let s = loglog_slope(&[1e2, 1e3, 1e4], &[3e2, 3e3, 3e4]);
        assert!((s - 1.0).abs() < 1e-12);
    }
}
