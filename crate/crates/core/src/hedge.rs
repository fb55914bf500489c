//! Exponential weights over a fixed expert set, and the specialist extension.

use crate::error::{invalid, Error, Result};
use crate::forecaster::{check_losses, check_priors, Forecaster, OpCounter};
use crate::loss::{weighted_mean, Loss, Outcome, Prediction};

/// Exponentially weighted average forecaster with log-domain weights.
///
/// `log_w_i = ln π_i − η L_{i,t−1}`, shifted so that the largest entry is 0.
#[derive(Debug, Clone)]
pub struct Hedge {
    eta: f64,
    log_w: Vec<f64>,
    round: usize,
    cum_loss: f64,
    ops: OpCounter,
}

impl Hedge {
    /// Starts from a positive, possibly unnormalized, prior.
    pub fn new(eta: f64, prior: &[f64]) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("eta must be positive, got {eta}")));
        }
        if prior.is_empty() {
            return Err(invalid("hedge needs at least one expert"));
        }
        check_priors(prior)?;
        let mut log_w: Vec<f64> = prior.iter().map(|p| p.ln()).collect();
        shift_to_max(&mut log_w)?;
        Ok(Self {
            eta,
            log_w,
            round: 1,
            cum_loss: 0.0,
            ops: OpCounter::default(),
        })
    }

    pub fn uniform(eta: f64, m: usize) -> Result<Self> {
        Self::new(eta, &vec![1.0; m])
    }

    /// Normalized weights `v_t`.
    pub fn weights(&self) -> Vec<f64> {
        normalize_log(&self.log_w)
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_w
    }

    /// Learner's cumulative loss `L_{t−1}`.
    pub fn cumulative_loss(&self) -> f64 {
        self.cum_loss
    }

    /// Bayesian posterior step `log w_i −= η ℓ_i`.
    pub fn update_losses(&mut self, losses: &[f64]) -> Result<()> {
        check_losses(losses, self.log_w.len())?;
        for (lw, l) in self.log_w.iter_mut().zip(losses) {
            *lw -= self.eta * l;
        }
        self.ops.add(losses.len() as u64);
        shift_to_max(&mut self.log_w)?;
        self.round += 1;
        Ok(())
    }

    /// Prediction from the active experts only; `xs` lists their forecasts in `active` order.
    pub fn predict_active(&self, active: &[usize], xs: &[Prediction]) -> Result<Prediction> {
        self.check_active(active)?;
        if xs.len() != active.len() {
            return Err(invalid(format!("{} predictions for {} active experts", xs.len(), active.len())));
        }
        let sub: Vec<f64> = active.iter().map(|&i| self.log_w[i]).collect();
        self.ops.add(active.len() as u64);
        weighted_mean(&normalize_log(&sub), xs)
    }

    /// Abstention-trick update: active experts pay their loss, inactive ones pay `learner_loss`.
    pub fn update_active(&mut self, active: &[usize], losses: &[f64], learner_loss: f64) -> Result<()> {
        self.check_active(active)?;
        check_losses(losses, active.len())?;
        let mut full = vec![learner_loss; self.log_w.len()];
        for (&i, &l) in active.iter().zip(losses) {
            full[i] = l;
        }
        let learner = learner_loss;
        self.update_losses(&full)?;
        self.cum_loss += learner;
        Ok(())
    }

    /// One full specialist round: predict from the active set, observe `y`, update.
    pub fn specialist_step<L: Loss + ?Sized>(
        &mut self,
        active: &[usize],
        xs: &[Prediction],
        y: &Outcome,
        loss: &L,
    ) -> Result<Prediction> {
        let x = self.predict_active(active, xs)?;
        let lt = loss.loss(&x, y)?;
        let losses = xs.iter().map(|xi| loss.loss(xi, y)).collect::<Result<Vec<_>>>()?;
        self.update_active(active, &losses, lt)?;
        Ok(x)
    }

    fn check_active(&self, active: &[usize]) -> Result<()> {
        if active.is_empty() {
            return Err(invalid("active set is empty"));
        }
        if active.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("active indices must be strictly increasing"));
        }
        if *active.last().unwrap() >= self.log_w.len() {
            return Err(invalid("active index outside the expert universe"));
        }
        Ok(())
    }
}

impl Forecaster for Hedge {
    fn eta(&self) -> f64 {
        self.eta
    }

    fn num_experts(&self) -> usize {
        self.log_w.len()
    }

    fn mixing_weights(&self) -> Result<Vec<f64>> {
        Ok(self.weights())
    }

    fn update(&mut self, expert_losses: &[f64], learner_loss: f64) -> Result<()> {
        self.update_losses(expert_losses)?;
        self.cum_loss += learner_loss;
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

fn shift_to_max(log_w: &mut [f64]) -> Result<()> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Degenerate("every weight vanished".into()));
    }
    for lw in log_w.iter_mut() {
        *lw -= max;
    }
    Ok(())
}

pub(crate) fn normalize_log(log_w: &[f64]) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}
