//! FreshMarkovHedge and GrowingMarkovHedge.
//!
//! Both are MarkovHedge over the whole (unbounded) expert universe with
//! kernels that never move mass onto unentered experts, so only the `M_t`
//! entered weights are stored.

use crate::error::{invalid, Result};
use crate::forecaster::{check_priors, Forecaster, GrowingForecaster, OpCounter, Phase};
use crate::markov::posterior;
use crate::prior::RateSequence;

#[derive(Debug, Clone, PartialEq)]
pub enum GrowingMarkovMode {
    /// Shifts only towards newly entered experts.
    Fresh,
    /// Also shares a fraction `α_t` of the mass among all entered experts.
    Growing(RateSequence),
}

#[derive(Debug, Clone)]
pub struct GrowingMarkovHedge {
    eta: f64,
    mode: GrowingMarkovMode,
    v: Vec<f64>,
    priors: Vec<f64>,
    prior_sum: f64,
    round: usize,
    cum_loss: f64,
    phase: Phase,
    ops: OpCounter,
}

impl GrowingMarkovHedge {
    /// FreshMarkovHedge.
    pub fn fresh(eta: f64) -> Result<Self> {
        Self::with_mode(eta, GrowingMarkovMode::Fresh)
    }

    /// GrowingMarkovHedge with switching rates `α_t` (canonically `1/t`).
    pub fn new(eta: f64, alpha: RateSequence) -> Result<Self> {
        Self::with_mode(eta, GrowingMarkovMode::Growing(alpha))
    }

    pub fn with_mode(eta: f64, mode: GrowingMarkovMode) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("eta must be positive, got {eta}")));
        }
        Ok(Self {
            eta,
            mode,
            v: Vec::new(),
            priors: Vec::new(),
            prior_sum: 0.0,
            round: 1,
            cum_loss: 0.0,
            phase: Phase::AwaitingAdmission,
            ops: OpCounter::default(),
        })
    }

    pub fn mode(&self) -> &GrowingMarkovMode {
        &self.mode
    }

    /// Current weights `v_t` after admission, or the posterior `v^m_{t−1}` before it.
    pub fn weights(&self) -> &[f64] {
        &self.v
    }

    /// `Π_{M_t}`
    pub fn prior_sum(&self) -> f64 {
        self.prior_sum
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.cum_loss
    }

    /// Admission using an explicit switching rate `α_t ∈ (0, 1)` instead of the schedule.
    pub fn admit_with_alpha(&mut self, priors: &[f64], alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("switching rate {alpha} outside (0, 1)")));
        }
        self.transition(priors, Some(alpha))
    }

    fn transition(&mut self, priors: &[f64], alpha: Option<f64>) -> Result<()> {
        self.phase.require_awaiting(self.round)?;
        check_priors(priors)?;
        if self.v.is_empty() && priors.is_empty() {
            return Err(invalid("the first round must admit at least one expert"));
        }
        let old_sum = self.prior_sum;
        let new_sum = priors.iter().fold(old_sum, |acc, p| acc + p);
        let ratio = old_sum / new_sum;
        match alpha {
            _ if self.v.is_empty() => {}
            None => {
                for vi in self.v.iter_mut() {
                    *vi *= ratio;
                }
            }
            Some(a) => {
                for (vi, p) in self.v.iter_mut().zip(&self.priors) {
                    *vi = (1.0 - a) * (ratio * *vi) + a * (p / new_sum);
                }
            }
        }
        self.v.extend(priors.iter().map(|p| p / new_sum));
        self.priors.extend_from_slice(priors);
        self.prior_sum = new_sum;
        self.ops.add(self.v.len() as u64);
        self.phase = Phase::Admitted;
        Ok(())
    }
}

impl Forecaster for GrowingMarkovHedge {
    fn eta(&self) -> f64 {
        self.eta
    }

    fn num_experts(&self) -> usize {
        self.v.len()
    }

    fn mixing_weights(&self) -> Result<Vec<f64>> {
        self.phase.require_admitted(self.round)?;
        Ok(self.v.clone())
    }

    fn update(&mut self, expert_losses: &[f64], learner_loss: f64) -> Result<()> {
        self.phase.require_admitted(self.round)?;
        self.v = posterior(&self.v, expert_losses, self.eta)?;
        self.ops.add(self.v.len() as u64);
        self.cum_loss += learner_loss;
        self.round += 1;
        self.phase = Phase::AwaitingAdmission;
        Ok(())
    }

    fn round(&self) -> usize {
        self.round
    }

    fn op_count(&self) -> u64 {
        self.ops.get()
    }

    fn count_ops(&self, n: u64) {
        self.ops.add(n);
    }
}

impl GrowingForecaster for GrowingMarkovHedge {
    fn admit(&mut self, priors: &[f64]) -> Result<()> {
        let alpha = match &self.mode {
            GrowingMarkovMode::Fresh => None,
            GrowingMarkovMode::Growing(_) if self.round == 1 => None,
            GrowingMarkovMode::Growing(seq) => {
                let a = seq.at(self.round);
                if !(a > 0.0 && a < 1.0) {
                    return Err(invalid(format!("switching rate {a} at round {} outside (0, 1)", self.round)));
                }
                Some(a)
            }
        };
        self.transition(priors, alpha)
    }
}
