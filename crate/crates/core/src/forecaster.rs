//! The round protocol shared by every aggregation algorithm.
//!
//! A round is: (growing algorithms only) [`GrowingForecaster::admit`] the
//! round's entrants, [`Forecaster::predict`] from the entered experts'
//! forecasts, evaluate the losses, then [`Forecaster::update`].

use std::cell::Cell;

use crate::error::{invalid, Error, Result};
use crate::loss::{weighted_mean, Loss, Outcome, Prediction};

pub trait Forecaster {
    fn eta(&self) -> f64;

    /// Experts currently entered (the length `predict` and `update` expect).
    fn num_experts(&self) -> usize;

    /// Normalized weights used for the current round's prediction.
    fn mixing_weights(&self) -> Result<Vec<f64>>;

    /// Aggregated forecast. Experts with zero mixing weight are never read.
    fn predict(&self, xs: &[Prediction]) -> Result<Prediction> {
        if xs.len() != self.num_experts() {
            return Err(invalid(format!(
                "{} predictions for {} entered experts",
                xs.len(),
                self.num_experts()
            )));
        }
        let w = self.mixing_weights()?;
        self.count_ops(w.len() as u64);
        weighted_mean(&w, xs)
    }

    /// Consumes the round's expert losses and the learner's own loss.
    fn update(&mut self, expert_losses: &[f64], learner_loss: f64) -> Result<()>;

    /// The current (1-based) round.
    fn round(&self) -> usize;

    /// Elementary per-expert operations performed so far.
    fn op_count(&self) -> u64;

    #[doc(hidden)]
    fn count_ops(&self, _n: u64) {}
}

/// An algorithm whose expert set grows over time.
pub trait GrowingForecaster: Forecaster {
    /// Admits the round's entrants with their prior weights. Must be called
    /// exactly once per round, possibly with no entrants, before `predict`.
    fn admit(&mut self, priors: &[f64]) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub prediction: Prediction,
    pub learner_loss: f64,
    pub expert_losses: Vec<f64>,
}

/// Predicts, scores and updates for one round.
pub fn play_round<F: Forecaster + ?Sized, L: Loss + ?Sized>(
    forecaster: &mut F,
    loss: &L,
    xs: &[Prediction],
    y: &Outcome,
) -> Result<RoundResult> {
    let prediction = forecaster.predict(xs)?;
    let learner_loss = loss.loss(&prediction, y)?;
    let expert_losses = xs
        .iter()
        .map(|x| loss.loss(x, y))
        .collect::<Result<Vec<_>>>()?;
    forecaster.update(&expert_losses, learner_loss)?;
    Ok(RoundResult {
        prediction,
        learner_loss,
        expert_losses,
    })
}

/// Operation counter usable behind `&self`.
#[derive(Debug, Default, Clone)]
pub(crate) struct OpCounter(Cell<u64>);

impl OpCounter {
    pub fn add(&self, n: u64) {
        self.0.set(self.0.get() + n);
    }

    pub fn get(&self) -> u64 {
        self.0.get()
    }
}

/// Tracks the admit → predict → update order of growing algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    AwaitingAdmission,
    Admitted,
}

impl Phase {
    pub fn require_admitted(self, round: usize) -> Result<()> {
        match self {
            Phase::Admitted => Ok(()),
            Phase::AwaitingAdmission => Err(Error::Protocol(format!(
                "round {round}: admit must be called before predict/update"
            ))),
        }
    }

    pub fn require_awaiting(self, round: usize) -> Result<()> {
        match self {
            Phase::AwaitingAdmission => Ok(()),
            Phase::Admitted => Err(Error::Protocol(format!(
                "round {round}: entrants already admitted"
            ))),
        }
    }
}

pub(crate) fn check_losses(losses: &[f64], expected: usize) -> Result<()> {
    if losses.len() != expected {
        return Err(invalid(format!("{} losses for {expected} experts", losses.len())));
    }
    if losses.iter().any(|l| l.is_nan() || *l < 0.0 && l.is_infinite()) {
        return Err(invalid("losses must not be NaN or −∞"));
    }
    Ok(())
}

pub(crate) fn check_priors(priors: &[f64]) -> Result<()> {
    if let Some(p) = priors.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(invalid(format!("prior weight {p} is not positive and finite")));
    }
    Ok(())
}
