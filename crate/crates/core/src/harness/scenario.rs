//! Seeded scenario generation.
//!
//! All randomness comes from a ChaCha8 stream seeded with the scenario seed, so
//! a `ScenarioSpec` always produces the same scenario on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::growing::GrowingHedge;
use crate::forecaster::{Forecaster, GrowingForecaster};
use crate::loss::{evaluate_loss, Loss, LossModel, Outcome, Prediction};
use crate::oracle::LossTable;
use crate::schedule::EntrySchedule;

/// How experts arrive over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntryPattern {
    /// `experts` experts at round 1 and none after.
    Constant { experts: usize },
    /// `batch` experts at rounds `1, 1+period, 1+2·period, …`.
    Periodic {
        period: usize,
        #[serde(default = "one")]
        batch: usize,
    },
    /// `batch` experts at rounds `1, 2, 4, 8, …`.
    Exponential {
        #[serde(default = "one")]
        batch: usize,
    },
    /// `initial` experts at round 1, then `size` experts at each listed round.
    Burst {
        #[serde(default = "one")]
        initial: usize,
        rounds: Vec<usize>,
        size: usize,
    },
    /// `initial` experts at round 1, then one entrant per round with
    /// probability `rate`, until `max_experts` have entered.
    Random {
        #[serde(default = "one")]
        initial: usize,
        rate: f64,
        max_experts: usize,
    },
    /// Explicit entrant counts `m_1, …, m_T`.
    Counts { counts: Vec<usize> },
}

fn one() -> usize {
    1
}

/// The signal and the experts' behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalFamily {
    /// Binary outcomes whose success probability is redrawn every
    /// `segment_length` rounds. Experts are either fixed forecasters or
    /// frequency learners trained only on the outcomes seen since entry.
    /// Scored with log loss.
    Bernoulli {
        #[serde(default = "default_segment")]
        segment_length: usize,
    },
    /// Outcomes in `[0, 1]` around a random-walk mean. Each expert predicts
    /// a constant: the last outcome seen before it entered. Scored with
    /// square loss on `[0, 1]`.
    DriftingMean {
        #[serde(default = "default_drift")]
        drift: f64,
        #[serde(default = "default_noise")]
        noise: f64,
    },
}

fn default_segment() -> usize {
    20
}

fn default_drift() -> f64 {
    0.05
}

fn default_noise() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub family: SignalFamily,
    pub entry: EntryPattern,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
}

/// A fully materialized scenario: schedule, loss model, every entered
/// expert's prediction and every outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    schedule: EntrySchedule,
    loss: LossModel,
    predictions: Vec<Vec<Prediction>>,
    outcomes: Vec<Outcome>,
}

impl Scenario {
    /// `predictions[t−1]` must hold exactly `M_t` predictions.
    pub fn from_parts(
        name: impl Into<String>,
        schedule: EntrySchedule,
        loss: LossModel,
        predictions: Vec<Vec<Prediction>>,
        outcomes: Vec<Outcome>,
    ) -> Result<Self> {
        let horizon = schedule.horizon();
        if predictions.len() != horizon || outcomes.len() != horizon {
            return Err(invalid(format!(
                "{} prediction rows and {} outcomes for horizon {horizon}",
                predictions.len(),
                outcomes.len()
            )));
        }
        for (idx, row) in predictions.iter().enumerate() {
            if row.len() != schedule.total(idx + 1) {
                return Err(invalid(format!(
                    "round {}: {} predictions for {} entered experts",
                    idx + 1,
                    row.len(),
                    schedule.total(idx + 1)
                )));
            }
            for x in row {
                loss.check_prediction(x)?;
            }
        }
        Ok(Self {
            name: name.into(),
            schedule,
            loss,
            predictions,
            outcomes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schedule(&self) -> &EntrySchedule {
        &self.schedule
    }

    pub fn loss_model(&self) -> &LossModel {
        &self.loss
    }

    pub fn horizon(&self) -> usize {
        self.schedule.horizon()
    }

    /// Predictions of the `M_t` experts entered at round `t`.
    pub fn predictions(&self, t: usize) -> &[Prediction] {
        &self.predictions[t - 1]
    }

    pub fn outcome(&self, t: usize) -> &Outcome {
        &self.outcomes[t - 1]
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn expert_losses(&self, t: usize) -> Result<Vec<f64>> {
        let y = self.outcome(t);
        self.predictions(t).iter().map(|x| evaluate_loss(&self.loss, x, y)).collect()
    }

    pub fn loss_table(&self) -> Result<LossTable> {
        Ok(LossTable::new(
            (1..=self.horizon()).map(|t| self.expert_losses(t)).collect::<Result<_>>()?,
        ))
    }

    /// The same scenario scored with a different loss model (e.g. an η override).
    pub fn with_loss_model(mut self, loss: LossModel) -> Result<Self> {
        if std::mem::discriminant(&loss.kind()) != std::mem::discriminant(&self.loss.kind()) {
            return Err(invalid("replacement loss model has a different kind"));
        }
        self.loss = loss;
        Ok(self)
    }

    /// The first `horizon` rounds.
    pub fn truncate(&self, horizon: usize) -> Result<Self> {
        Self::from_parts(
            self.name.clone(),
            self.schedule.truncate(horizon)?,
            self.loss,
            self.predictions[..horizon].to_vec(),
            self.outcomes[..horizon].to_vec(),
        )
    }
}

impl EntryPattern {
    /// Entrant counts `m_1, …, m_T`.
    pub fn counts(&self, horizon: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        if horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        let mut counts = vec![0usize; horizon];
        match self {
            EntryPattern::Constant { experts } => counts[0] = *experts,
            EntryPattern::Periodic { period, batch } => {
                if *period == 0 {
                    return Err(invalid("entry period must be at least 1"));
                }
                for t in (1..=horizon).step_by(*period) {
                    counts[t - 1] = *batch;
                }
            }
            EntryPattern::Exponential { batch } => {
                let mut t = 1;
                while t <= horizon {
                    counts[t - 1] = *batch;
                    t *= 2;
                }
            }
            EntryPattern::Burst { initial, rounds, size } => {
                counts[0] = *initial;
                for &t in rounds {
                    if t == 0 || t > horizon {
                        return Err(invalid(format!("burst round {t} outside 1..={horizon}")));
                    }
                    counts[t - 1] += size;
                }
            }
            EntryPattern::Random {
                initial,
                rate,
                max_experts,
            } => {
                if !(0.0..=1.0).contains(rate) {
                    return Err(invalid(format!("entry rate {rate} outside [0, 1]")));
                }
                counts[0] = (*initial).min(*max_experts);
                let mut total = counts[0];
                for c in counts.iter_mut().skip(1) {
                    if total < *max_experts && rng.gen_bool(*rate) {
                        *c = 1;
                        total += 1;
                    }
                }
            }
            EntryPattern::Counts { counts: given } => {
                if given.len() != horizon {
                    return Err(invalid(format!(
                        "{} entrant counts for horizon {horizon}",
                        given.len()
                    )));
                }
                counts.clone_from(given);
            }
        }
        if counts[0] == 0 {
            return Err(invalid("no expert enters at round 1"));
        }
        Ok(counts)
    }
}

/// Materializes a scenario from its spec.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let schedule = EntrySchedule::from_counts(spec.entry.counts(spec.horizon, &mut rng)?)?;
    match &spec.family {
        SignalFamily::Bernoulli { segment_length } => bernoulli(spec, schedule, *segment_length, &mut rng),
        SignalFamily::DriftingMean { drift, noise } => drifting_mean(spec, schedule, *drift, *noise, &mut rng),
    }
}

enum BernoulliExpert {
    Fixed(f64),
    Frequency { ones: u64, seen: u64 },
}

fn bernoulli(spec: &ScenarioSpec, schedule: EntrySchedule, segment: usize, rng: &mut ChaCha8Rng) -> Result<Scenario> {
    if segment == 0 {
        return Err(invalid("segment length must be at least 1"));
    }
    let loss = LossModel::log_loss(2)?;
    let mut experts: Vec<BernoulliExpert> = Vec::new();
    let mut p_signal = 0.5;
    let mut predictions = Vec::with_capacity(spec.horizon);
    let mut outcomes = Vec::with_capacity(spec.horizon);
    for t in 1..=spec.horizon {
        if (t - 1) % segment == 0 {
            p_signal = rng.gen_range(0.1..0.9);
        }
        for i in schedule.entrant_range(t) {
            experts.push(if i % 2 == 0 {
                BernoulliExpert::Fixed(rng.gen_range(0.05..0.95))
            } else {
                BernoulliExpert::Frequency { ones: 0, seen: 0 }
            });
        }
        let row = experts
            .iter()
            .map(|e| {
                let p = match *e {
                    BernoulliExpert::Fixed(p) => p,
                    BernoulliExpert::Frequency { ones, seen } => {
                        ((ones as f64 + 1.0) / (seen as f64 + 2.0)).clamp(0.02, 0.98)
                    }
                };
                Prediction::bernoulli(p)
            })
            .collect::<Result<Vec<_>>>()?;
        let y = usize::from(rng.gen_bool(p_signal));
        for e in &mut experts {
            if let BernoulliExpert::Frequency { ones, seen } = e {
                *ones += y as u64;
                *seen += 1;
            }
        }
        predictions.push(row);
        outcomes.push(Outcome::Symbol(y));
    }
    Scenario::from_parts(spec.name.clone(), schedule, loss, predictions, outcomes)
}

fn drifting_mean(
    spec: &ScenarioSpec,
    schedule: EntrySchedule,
    drift: f64,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Scenario> {
    if !(drift >= 0.0 && noise >= 0.0) {
        return Err(invalid("drift and noise must be non-negative"));
    }
    let loss = LossModel::square_loss(0.0, 1.0)?;
    let mut mean: f64 = rng.gen_range(0.2..0.8);
    let mut last = mean;
    let mut constants: Vec<f64> = Vec::new();
    let mut predictions = Vec::with_capacity(spec.horizon);
    let mut outcomes = Vec::with_capacity(spec.horizon);
    for t in 1..=spec.horizon {
        for _ in schedule.entrant_range(t) {
            let c = if t == 1 { rng.gen_range(0.0..1.0) } else { last };
            constants.push(c);
        }
        predictions.push(constants.iter().map(|&c| Prediction::Point(c)).collect());
        mean = (mean + drift * rng.gen_range(-1.0..=1.0)).clamp(0.0, 1.0);
        let y = (mean + noise * rng.gen_range(-1.0..=1.0)).clamp(0.0, 1.0);
        outcomes.push(Outcome::Real(y));
        last = y;
    }
    Scenario::from_parts(spec.name.clone(), schedule, loss, predictions, outcomes)
}

/// Log-loss instance on which GrowingHedge with `π_i = 1` has regret
/// `ln M_T` against the best constant expert.
///
/// Before round `T` every expert puts all its mass on symbol 0 and the
/// outcome is 0. At round `T` expert `i` puts all its mass on symbol `i`
/// and the outcome is the symbol to which the learner assigns the least
/// probability (lowest index on ties).
pub fn adversarial_tightness_instance(total_experts: usize, schedule: &EntrySchedule) -> Result<Scenario> {
    if schedule.total_experts() != total_experts || total_experts == 0 {
        return Err(invalid(format!(
            "schedule admits {} experts, expected {total_experts}",
            schedule.total_experts()
        )));
    }
    let horizon = schedule.horizon();
    if schedule.total(horizon) != total_experts {
        return Err(invalid("every expert must have entered by the last round"));
    }
    let alphabet = total_experts.max(2);
    let loss = LossModel::log_loss(alphabet)?;
    let zero = Prediction::point_mass(0, alphabet)?;
    let mut predictions: Vec<Vec<Prediction>> = (1..horizon)
        .map(|t| vec![zero.clone(); schedule.total(t)])
        .collect();
    predictions.push(
        (0..total_experts)
            .map(|i| Prediction::point_mass(i, alphabet))
            .collect::<Result<_>>()?,
    );
    let mut learner = GrowingHedge::new(loss.eta())?;
    for t in 1..horizon {
        let priors = vec![1.0; schedule.entrants(t)];
        learner.admit(&priors)?;
        let x = learner.predict(&predictions[t - 1])?;
        let y = Outcome::Symbol(0);
        let lt = evaluate_loss(&loss, &x, &y)?;
        let losses = predictions[t - 1]
            .iter()
            .map(|xi| evaluate_loss(&loss, xi, &y))
            .collect::<Result<Vec<_>>>()?;
        learner.update(&losses, lt)?;
    }
    learner.admit(&vec![1.0; schedule.entrants(horizon)])?;
    let x = learner.predict(&predictions[horizon - 1])?;
    let mass = x.as_dist().expect("log loss predictions are distributions");
    let y = (0..total_experts)
        .min_by(|&a, &b| mass[a].total_cmp(&mass[b]))
        .expect("at least one expert");
    let mut outcomes = vec![Outcome::Symbol(0); horizon - 1];
    outcomes.push(Outcome::Symbol(y));
    Scenario::from_parts("adversarial_tightness", schedule.clone(), loss, predictions, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: SignalFamily, entry: EntryPattern, horizon: usize) -> ScenarioSpec {
        ScenarioSpec {
            name: "t".into(),
            family,
            entry,
            horizon,
            seed: 11,
        }
    }

    #[test]
    fn entry_patterns() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = EntryPattern::Periodic { period: 5, batch: 1 }.counts(20, &mut rng).unwrap();
        let rounds: Vec<usize> = (1..=20).filter(|&t| c[t - 1] == 1).collect();
        assert_eq!(rounds, vec![1, 6, 11, 16]);
        let c = EntryPattern::Exponential { batch: 1 }.counts(20, &mut rng).unwrap();
        let rounds: Vec<usize> = (1..=20).filter(|&t| c[t - 1] == 1).collect();
        assert_eq!(rounds, vec![1, 2, 4, 8, 16]);
        let c = EntryPattern::Burst {
            initial: 2,
            rounds: vec![3, 3, 5],
            size: 2,
        }
        .counts(5, &mut rng)
        .unwrap();
        assert_eq!(c, vec![2, 0, 4, 0, 2]);
        assert!(EntryPattern::Constant { experts: 0 }.counts(3, &mut rng).is_err());
    }

    #[test]
    fn seeded_scenarios_replay() {
        for family in [
            SignalFamily::Bernoulli { segment_length: 7 },
            SignalFamily::DriftingMean { drift: 0.1, noise: 0.2 },
        ] {
            let s = spec(
                family,
                EntryPattern::Random {
                    initial: 1,
                    rate: 0.3,
                    max_experts: 10,
                },
                60,
            );
            let a = generate_scenario(&s).unwrap();
            let b = generate_scenario(&s).unwrap();
            assert_eq!(a, b);
            let other = generate_scenario(&ScenarioSpec { seed: 12, ..s }).unwrap();
            assert_ne!(a, other);
        }
    }

    #[test]
    fn predictions_match_schedule() {
        let s = generate_scenario(&spec(
            SignalFamily::Bernoulli { segment_length: 5 },
            EntryPattern::Periodic { period: 3, batch: 2 },
            30,
        ))
        .unwrap();
        for t in 1..=30 {
            assert_eq!(s.predictions(t).len(), s.schedule().total(t));
        }
        assert_eq!(s.loss_table().unwrap().horizon(), 30);
    }

    #[test]
    fn tightness_instance_shape() {
        let sched = EntrySchedule::from_counts(vec![1, 2, 0, 1]).unwrap();
        let s = adversarial_tightness_instance(4, &sched).unwrap();
        assert_eq!(s.outcome(4), &Outcome::Symbol(0));
        assert!(adversarial_tightness_instance(5, &sched).is_err());
        let square = LossModel::square_loss(0.0, 1.0).unwrap();
        assert!(s.clone().with_loss_model(square).is_err());
    }
}
