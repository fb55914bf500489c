//! Prior weights assigned to experts at their entry time, and rate sequences.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::schedule::EntrySchedule;

/// A positive sequence indexed by rounds `t ≥ 1`.
///
/// Used both for the `ν_t` / `υ_t` sequences of the prior presets and for
/// switching rates `α_t`, `β_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSequence {
    Constant(f64),
    /// `1/t`
    Inverse,
    /// `t^{-exponent}`
    InversePower { exponent: f64 },
    /// `1/(t ln t)` for `t ≥ 2` and `1` at `t = 1`.
    InverseTLogT,
    /// `1/(t ln²(t+1))`
    InverseTLogSquared,
    /// Explicit values `x_1, x_2, …`; the last value repeats past the end.
    Explicit(Vec<f64>),
}

impl RateSequence {
    pub fn at(&self, t: usize) -> f64 {
        let tf = t.max(1) as f64;
        match self {
            RateSequence::Constant(c) => *c,
            RateSequence::Inverse => 1.0 / tf,
            RateSequence::InversePower { exponent } => tf.powf(-exponent),
            RateSequence::InverseTLogT => {
                if t >= 2 {
                    1.0 / (tf * tf.ln())
                } else {
                    1.0
                }
            }
            RateSequence::InverseTLogSquared => {
                let l = (tf + 1.0).ln();
                1.0 / (tf * l * l)
            }
            RateSequence::Explicit(v) => {
                let idx = (t.max(1) - 1).min(v.len().saturating_sub(1));
                v.get(idx).copied().unwrap_or(f64::NAN)
            }
        }
    }

    /// Checks `0 < x_t` (and `x_t < 1` when `open_unit` is set) for `t` in `from..=to`.
    pub fn validate(&self, from: usize, to: usize, open_unit: bool) -> Result<()> {
        if let RateSequence::Explicit(v) = self {
            if v.is_empty() {
                return Err(invalid("explicit rate sequence is empty"));
            }
        }
        for t in from..=to {
            let x = self.at(t);
            let ok = x > 0.0 && x.is_finite() && (!open_unit || x < 1.0);
            if !ok {
                let range = if open_unit { "(0, 1)" } else { "(0, ∞)" };
                return Err(invalid(format!("rate {x} at round {t} outside {range}")));
            }
        }
        Ok(())
    }
}

/// What is known about an expert when it enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryInfo {
    /// 0-based entry index.
    pub index: usize,
    /// `τ_i`
    pub entry_time: usize,
    /// `m_{τ_i}`
    pub entrants: usize,
    /// `s(τ_i)`
    pub active_rounds: usize,
}

impl EntryInfo {
    pub fn from_schedule(schedule: &EntrySchedule, i: usize) -> Result<Self> {
        let entry_time = schedule
            .entry_time(i)
            .ok_or_else(|| invalid(format!("expert {i} never enters")))?;
        Ok(Self {
            index: i,
            entry_time,
            entrants: schedule.entrants(entry_time),
            active_rounds: schedule.active_rounds(entry_time),
        })
    }
}

/// Rule turning entry information into a positive prior weight `π_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorPreset {
    /// `π_i = 1`
    Uniform,
    /// `π_i = 1/i` (1-based index)
    InverseIndex,
    /// `π_i = 1/m_{τ_i}`
    EntryUniform,
    /// `π_i = 1/(τ_i m_{τ_i})`
    EntryTimeUniform,
    /// `π_i = ν_{τ_i}/m_{τ_i}`
    NuSequence(RateSequence),
    /// `π_i = υ_{τ_i}`
    UpsilonSequence(RateSequence),
    /// `π_i = 1/(s(τ_i) m_{τ_i})`
    SparseRounds,
    /// Explicit weights by entry index; must cover every expert.
    Custom(Vec<f64>),
}

impl PriorPreset {
    pub const NAMES: [&'static str; 8] = [
        "uniform",
        "inverse_index",
        "entry_uniform",
        "entry_time_uniform",
        "nu_sequence",
        "upsilon_sequence",
        "sparse_rounds",
        "custom",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PriorPreset::Uniform => "uniform",
            PriorPreset::InverseIndex => "inverse_index",
            PriorPreset::EntryUniform => "entry_uniform",
            PriorPreset::EntryTimeUniform => "entry_time_uniform",
            PriorPreset::NuSequence(_) => "nu_sequence",
            PriorPreset::UpsilonSequence(_) => "upsilon_sequence",
            PriorPreset::SparseRounds => "sparse_rounds",
            PriorPreset::Custom(_) => "custom",
        }
    }

    pub fn weight(&self, info: &EntryInfo) -> Result<f64> {
        let m = info.entrants as f64;
        let w = match self {
            PriorPreset::Uniform => 1.0,
            PriorPreset::InverseIndex => 1.0 / (info.index + 1) as f64,
            PriorPreset::EntryUniform => 1.0 / m,
            PriorPreset::EntryTimeUniform => 1.0 / (info.entry_time as f64 * m),
            PriorPreset::NuSequence(nu) => nu.at(info.entry_time) / m,
            PriorPreset::UpsilonSequence(u) => u.at(info.entry_time),
            PriorPreset::SparseRounds => 1.0 / (info.active_rounds as f64 * m),
            PriorPreset::Custom(v) => *v
                .get(info.index)
                .ok_or_else(|| invalid(format!("custom prior has no weight for expert {}", info.index)))?,
        };
        if !(w > 0.0 && w.is_finite()) {
            return Err(invalid(format!("prior weight {w} for expert {} is not positive", info.index)));
        }
        Ok(w)
    }
}

/// `π_i` for expert `i` under `preset`.
pub fn make_prior(preset: &PriorPreset, schedule: &EntrySchedule, i: usize) -> Result<f64> {
    preset.weight(&EntryInfo::from_schedule(schedule, i)?)
}

/// Priors for every expert of the schedule, in entry order.
pub fn realize_priors(preset: &PriorPreset, schedule: &EntrySchedule) -> Result<Vec<f64>> {
    (0..schedule.total_experts())
        .map(|i| make_prior(preset, schedule, i))
        .collect()
}

/// Partial sums `Π_M = Σ_{i<M} π_i` for `M = 0..=len`.
pub fn partial_sums(priors: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(priors.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for p in priors {
        acc += p;
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn preset_examples() {
        let s = EntrySchedule::from_counts(vec![1, 0, 2, 1]).unwrap();
        // expert 1 enters at τ = 3 with m_3 = 2
        let p = make_prior(&PriorPreset::EntryTimeUniform, &s, 1).unwrap();
        assert!((p - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(make_prior(&PriorPreset::Uniform, &s, 3).unwrap(), 1.0);
        assert_eq!(make_prior(&PriorPreset::InverseIndex, &s, 3).unwrap(), 0.25);

        let s = EntrySchedule::from_counts(vec![1, 0, 0, 2, 1]).unwrap();
        assert_eq!(make_prior(&PriorPreset::SparseRounds, &s, 1).unwrap(), 0.25);
        assert_eq!(make_prior(&PriorPreset::SparseRounds, &s, 3).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn custom_prior_must_cover_every_expert() {
        let s = EntrySchedule::from_counts(vec![2]).unwrap();
        assert!(realize_priors(&PriorPreset::Custom(vec![1.0]), &s).is_err());
        assert!(realize_priors(&PriorPreset::Custom(vec![1.0, 0.0]), &s).is_err());
        assert_eq!(realize_priors(&PriorPreset::Custom(vec![1.0, 2.0]), &s).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn rate_sequences() {
        assert_eq!(RateSequence::Inverse.at(4), 0.25);
        assert_eq!(RateSequence::Explicit(vec![0.5, 0.25]).at(7), 0.25);
        assert!(RateSequence::Inverse.validate(2, 100, true).is_ok());
        assert!(RateSequence::Inverse.validate(1, 2, true).is_err());
        assert!(RateSequence::InverseTLogT.validate(2, 1000, true).is_ok());
    }

    #[test]
    fn preset_serde() {
        let p = PriorPreset::NuSequence(RateSequence::Inverse);
        let j = serde_json::to_string(&p).unwrap();
        assert_eq!(j, r#"{"nu_sequence":"inverse"}"#);
        assert_eq!(serde_json::from_str::<PriorPreset>(&j).unwrap(), p);
        assert_eq!(serde_json::to_string(&PriorPreset::Uniform).unwrap(), r#""uniform""#);
    }

    fn presets() -> Vec<PriorPreset> {
        vec![
            PriorPreset::Uniform,
            PriorPreset::InverseIndex,
            PriorPreset::EntryUniform,
            PriorPreset::EntryTimeUniform,
            PriorPreset::NuSequence(RateSequence::Inverse),
            PriorPreset::NuSequence(RateSequence::InverseTLogSquared),
            PriorPreset::UpsilonSequence(RateSequence::InversePower { exponent: 2.0 }),
            PriorPreset::SparseRounds,
        ]
    }

    proptest! {
        #[test]
        fn priors_positive_and_partial_sums_increasing(first in 1usize..4, rest in prop::collection::vec(0usize..4, 0..40)) {
            let mut counts = vec![first];
            counts.extend(rest);
            let s = EntrySchedule::from_counts(counts).unwrap();
            for preset in presets() {
                let pi = realize_priors(&preset, &s).unwrap();
                prop_assert!(pi.iter().all(|&p| p > 0.0));
                let sums = partial_sums(&pi);
                prop_assert!(sums.windows(2).all(|w| w[1] > w[0]));
            }
        }
    }
}
