//! GrowingHedge: exponential weights over a growing expert set with
//! unnormalized priors chosen at entry.

use crate::error::{invalid, Result};
use crate::forecaster::{check_losses, check_priors, Forecaster, GrowingForecaster, OpCounter, Phase};
use crate::scaled::{max_exponent, Scaled};

/// Anytime aggregation of experts that enter over time.
///
/// Weights are kept relative to `e^{−η L_{t−1}}`, so an entrant is simply
/// assigned its prior: the stored mass of expert `i` is
/// `π_i exp(−η (L_{i,t−1} − L_{t−1}))` where `L_{i,t−1}` charges the
/// learner's loss for rounds before `τ_i`.
#[derive(Debug, Clone)]
pub struct GrowingHedge {
    eta: f64,
    mass: Vec<Scaled>,
    round: usize,
    cum_loss: f64,
    phase: Phase,
    ops: OpCounter,
}

impl GrowingHedge {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("eta must be positive, got {eta}")));
        }
        Ok(Self {
            eta,
            mass: Vec::new(),
            round: 1,
            cum_loss: 0.0,
            phase: Phase::AwaitingAdmission,
            ops: OpCounter::default(),
        })
    }

    /// Learner's cumulative loss `L_{t−1}`.
    pub fn cumulative_loss(&self) -> f64 {
        self.cum_loss
    }

    /// `ln w_{i,t} = ln π_i − η L_{i,t−1}` for expert `i`.
    pub fn log_weight(&self, i: usize) -> Option<f64> {
        self.mass.get(i).map(|m| m.ln() - self.eta * self.cum_loss)
    }

    fn normalized(&self) -> Vec<f64> {
        let Some(top) = max_exponent(self.mass.iter().copied()) else {
            return vec![0.0; self.mass.len()];
        };
        let w: Vec<f64> = self.mass.iter().map(|m| m.relative_to(top)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }
}

impl Forecaster for GrowingHedge {
    fn eta(&self) -> f64 {
        self.eta
    }

    fn num_experts(&self) -> usize {
        self.mass.len()
    }

    fn mixing_weights(&self) -> Result<Vec<f64>> {
        self.phase.require_admitted(self.round)?;
        Ok(self.normalized())
    }

    fn update(&mut self, expert_losses: &[f64], learner_loss: f64) -> Result<()> {
        self.phase.require_admitted(self.round)?;
        check_losses(expert_losses, self.mass.len())?;
        for (m, l) in self.mass.iter_mut().zip(expert_losses) {
            *m = m.mul_exp(-self.eta * (l - learner_loss));
        }
        self.ops.add(expert_losses.len() as u64);
        if self.mass.iter().all(|m| m.is_zero()) {
            return Err(crate::Error::Degenerate("every weight vanished".into()));
        }
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

impl GrowingForecaster for GrowingHedge {
    fn admit(&mut self, priors: &[f64]) -> Result<()> {
        self.phase.require_awaiting(self.round)?;
        check_priors(priors)?;
        if self.mass.is_empty() && priors.is_empty() {
            return Err(invalid("the first round must admit at least one expert"));
        }
        self.mass.extend(priors.iter().map(|&p| Scaled::new(p)));
        self.ops.add(priors.len() as u64);
        self.phase = Phase::Admitted;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hedge::Hedge;
    use crate::loss::{Loss, LossModel, Outcome, Prediction};
    use crate::forecaster::play_round;
    use std::f64::consts::LN_2;

    #[test]
    fn entrant_weight_examples() {
        let mut g = GrowingHedge::new(1.0).unwrap();
        g.admit(&[0.5]).unwrap();
        assert!((g.log_weight(0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        g.update(&[0.0], LN_2).unwrap();
        g.admit(&[1.0]).unwrap();
        assert!((g.log_weight(1).unwrap().exp() - 0.5).abs() < 1e-15);
        let n = g.num_experts();
        g.update(&[0.3, 0.3], 0.3).unwrap();
        g.admit(&[]).unwrap();
        assert_eq!(g.num_experts(), n);
    }

    #[test]
    fn protocol_is_enforced() {
        let mut g = GrowingHedge::new(1.0).unwrap();
        assert!(g.mixing_weights().is_err());
        assert!(g.admit(&[]).is_err());
        g.admit(&[1.0]).unwrap();
        assert!(g.admit(&[1.0]).is_err());
        assert!(g.update(&[0.1, 0.2], 0.1).is_err());
        g.update(&[0.1], 0.1).unwrap();
        assert!(g.update(&[0.1], 0.1).is_err());
    }

    #[test]
    fn lone_expert_is_copied() {
        let model = LossModel::square_loss(0.0, 1.0).unwrap();
        let mut g = GrowingHedge::new(model.eta()).unwrap();
        g.admit(&[0.7]).unwrap();
        let xs = [Prediction::Point(0.3)];
        let r = play_round(&mut g, &model, &xs, &Outcome::Real(1.0)).unwrap();
        assert_eq!(r.prediction, Prediction::Point(0.3));
    }

    #[test]
    fn constant_schedule_matches_hedge() {
        let model = LossModel::square_loss(0.0, 1.0).unwrap();
        let mut g = GrowingHedge::new(model.eta()).unwrap();
        let mut h = Hedge::uniform(model.eta(), 3).unwrap();
        let xs = [Prediction::Point(0.1), Prediction::Point(0.6), Prediction::Point(0.9)];
        for (t, y) in [0.2, 0.7, 0.65, 0.1, 0.9].into_iter().enumerate() {
            g.admit(if t == 0 { &[1.0, 1.0, 1.0] } else { &[] }).unwrap();
            let y = Outcome::Real(y);
            let pg = g.predict(&xs).unwrap();
            let ph = h.predict(&xs).unwrap();
            assert!((pg.as_point().unwrap() - ph.as_point().unwrap()).abs() < 1e-15);
            let ls: Vec<f64> = xs.iter().map(|x| model.loss(x, &y).unwrap()).collect();
            g.update(&ls, model.loss(&pg, &y).unwrap()).unwrap();
            h.update(&ls, model.loss(&ph, &y).unwrap()).unwrap();
        }
    }

    #[test]
    fn power_of_two_prior_scaling_is_bit_identical() {
        let model = LossModel::log_loss(2).unwrap();
        let run = |scale: f64| {
            let mut g = GrowingHedge::new(1.0).unwrap();
            let mut out = Vec::new();
            let ps = [0.2, 0.9, 0.35, 0.6, 0.05];
            for t in 0..5 {
                g.admit(&[scale / (t + 1) as f64]).unwrap();
                let xs: Vec<Prediction> = ps[..=t].iter().map(|&p| Prediction::bernoulli(p).unwrap()).collect();
                let r = play_round(&mut g, &model, &xs, &Outcome::Symbol(t % 2)).unwrap();
                out.push(r.prediction);
            }
            out
        };
        assert_eq!(run(1.0), run(1024.0));
        assert_eq!(run(1.0), run(2f64.powi(-40)));
    }

    #[test]
    fn no_underflow_over_long_runs() {
        // the learner beats both experts by a constant every round
        let model = LossModel::square_loss(0.0, 1.0).unwrap();
        let mut g = GrowingHedge::new(model.eta()).unwrap();
        let mut xs = Vec::new();
        for t in 0..20_000 {
            let entrants: &[f64] = if t % 1000 == 0 { &[1.0] } else { &[] };
            g.admit(entrants).unwrap();
            if !entrants.is_empty() {
                xs.push(Prediction::Point(if (t / 1000) % 2 == 0 { 0.0 } else { 1.0 }));
            }
            play_round(&mut g, &model, &xs, &Outcome::Real(0.5)).unwrap();
        }
        let w = g.mixing_weights();
        assert!(w.is_err());
        g.admit(&[1.0]).unwrap();
        let w = g.mixing_weights().unwrap();
        assert!(w.iter().all(|&x| x.is_finite()));
        assert!(*w.last().unwrap() > 0.0);
    }
}
