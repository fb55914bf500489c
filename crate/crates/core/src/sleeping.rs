//! Sleeping experts under a Markov prior: SleepingMarkovHedge for a fixed
//! expert set and GrowingSleepingMarkovHedge for a growing one.
//!
//! A sleeping expert is a pair `(i, a)` with `a = 1` awake and `a = 0`
//! asleep. Only awake pairs vote; asleep pairs are charged the learner's own
//! loss. Each base expert has its own 2×2 wake/sleep chain.

use crate::error::{invalid, Error, Result};
use crate::forecaster::{check_losses, check_priors, Forecaster, GrowingForecaster, OpCounter, Phase};
use crate::loss::check_simplex;
use crate::prior::RateSequence;
use crate::scaled::{max_exponent, Scaled};

const ASLEEP: usize = 0;
const AWAKE: usize = 1;

/// Per-expert wake/sleep transition `θ(a|b)` with `θ(0|1) = fall_asleep`, `θ(1|0) = wake_up`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WakeSleepKernel {
    pub fall_asleep: f64,
    pub wake_up: f64,
}

impl WakeSleepKernel {
    pub fn new(fall_asleep: f64, wake_up: f64) -> Result<Self> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(fall_asleep) || !unit(wake_up) {
            return Err(invalid(format!(
                "wake/sleep probabilities ({fall_asleep}, {wake_up}) outside [0, 1]"
            )));
        }
        Ok(Self { fall_asleep, wake_up })
    }

    pub fn identity() -> Self {
        Self { fall_asleep: 0.0, wake_up: 0.0 }
    }

    /// Every expert is awake next round regardless of its state.
    pub fn always_awake() -> Self {
        Self { fall_asleep: 0.0, wake_up: 1.0 }
    }

    /// `θ(a|b)`
    pub fn prob(&self, a: usize, b: usize) -> f64 {
        match (a, b) {
            (AWAKE, AWAKE) => 1.0 - self.fall_asleep,
            (ASLEEP, AWAKE) => self.fall_asleep,
            (AWAKE, _) => self.wake_up,
            _ => 1.0 - self.wake_up,
        }
    }

    /// Maps `[asleep, awake]` posterior mass to the next round's mass.
    pub fn apply(&self, vm: [f64; 2]) -> [f64; 2] {
        [
            self.fall_asleep * vm[AWAKE] + (1.0 - self.wake_up) * vm[ASLEEP],
            (1.0 - self.fall_asleep) * vm[AWAKE] + self.wake_up * vm[ASLEEP],
        ]
    }

    fn apply_scaled(&self, vm: [Scaled; 2]) -> [Scaled; 2] {
        [
            vm[AWAKE].mul(self.fall_asleep).add(vm[ASLEEP].mul(1.0 - self.wake_up)),
            vm[AWAKE].mul(1.0 - self.fall_asleep).add(vm[ASLEEP].mul(self.wake_up)),
        ]
    }
}

/// SleepingMarkovHedge over a fixed set of `M` experts.
#[derive(Debug, Clone)]
pub struct SleepingMarkovHedge {
    eta: f64,
    /// `v[i] = [v(i,0), v(i,1)]`, summing to 1 overall.
    v: Vec<[f64; 2]>,
    fall_asleep: RateSequence,
    wake_up: RateSequence,
    round: usize,
    cum_loss: f64,
    ops: OpCounter,
}

impl SleepingMarkovHedge {
    /// `prior` must be normalized; `awake[i] = θ_{i,1}(1)`.
    pub fn new(eta: f64, prior: &[f64], awake: &[f64]) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("eta must be positive, got {eta}")));
        }
        check_simplex(prior, 1e-9)?;
        if awake.len() != prior.len() || awake.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(invalid("initial awake probabilities must be one value in [0, 1] per expert"));
        }
        let v = prior
            .iter()
            .zip(awake)
            .map(|(&p, &a)| [p * (1.0 - a), p * a])
            .collect();
        Ok(Self {
            eta,
            v,
            fall_asleep: RateSequence::Inverse,
            wake_up: RateSequence::Inverse,
            round: 1,
            cum_loss: 0.0,
            ops: OpCounter::default(),
        })
    }

    /// Rates used by [`Forecaster::update`]; `α_t`, `β_t` for the transition into round `t`.
    pub fn with_rates(mut self, fall_asleep: RateSequence, wake_up: RateSequence) -> Self {
        self.fall_asleep = fall_asleep;
        self.wake_up = wake_up;
        self
    }

    /// `[v(i,0), v(i,1)]` per expert.
    pub fn pair_weights(&self) -> &[[f64; 2]] {
        &self.v
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.cum_loss
    }

    /// Posterior step followed by one wake/sleep kernel per expert.
    pub fn update_with_kernels(
        &mut self,
        expert_losses: &[f64],
        learner_loss: f64,
        kernels: &[WakeSleepKernel],
    ) -> Result<()> {
        check_losses(expert_losses, self.v.len())?;
        if kernels.len() != self.v.len() {
            return Err(invalid(format!("{} kernels for {} experts", kernels.len(), self.v.len())));
        }
        if learner_loss.is_nan() {
            return Err(invalid("learner loss is NaN"));
        }
        let min = expert_losses
            .iter()
            .copied()
            .chain(std::iter::once(learner_loss))
            .fold(f64::INFINITY, f64::min);
        let asleep_factor = (-self.eta * (learner_loss - min)).exp();
        let mut total = 0.0;
        for (vi, &l) in self.v.iter_mut().zip(expert_losses) {
            vi[AWAKE] *= (-self.eta * (l - min)).exp();
            vi[ASLEEP] *= asleep_factor;
            total += vi[AWAKE] + vi[ASLEEP];
        }
        if !(total > 0.0) {
            return Err(Error::Degenerate("posterior mass vanished".into()));
        }
        for (vi, k) in self.v.iter_mut().zip(kernels) {
            *vi = k.apply([vi[ASLEEP] / total, vi[AWAKE] / total]);
        }
        self.ops.add(2 * self.v.len() as u64);
        self.cum_loss += learner_loss;
        self.round += 1;
        Ok(())
    }
}

impl Forecaster for SleepingMarkovHedge {
    fn eta(&self) -> f64 {
        self.eta
    }

    fn num_experts(&self) -> usize {
        self.v.len()
    }

    fn mixing_weights(&self) -> Result<Vec<f64>> {
        let total: f64 = self.v.iter().map(|w| w[AWAKE]).sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("every expert is asleep".into()));
        }
        Ok(self.v.iter().map(|w| w[AWAKE] / total).collect())
    }

    fn update(&mut self, expert_losses: &[f64], learner_loss: f64) -> Result<()> {
        let t = self.round + 1;
        let k = WakeSleepKernel::new(self.fall_asleep.at(t), self.wake_up.at(t))?;
        let kernels = vec![k; self.v.len()];
        self.update_with_kernels(expert_losses, learner_loss, &kernels)
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

/// GrowingSleepingMarkovHedge: sparse shifting regret against growing experts.
///
/// Masses are unnormalized and kept relative to `e^{−η L_{t−1}}`: awake
/// pairs are multiplied by `e^{−η(ℓ_{i,t} − ℓ_t)}`, asleep pairs are left as
/// they are, and an entrant starts with `π_i/2` on each pair. Normalization
/// happens only inside the prediction ratio, so scaling every prior by the
/// same power of two changes no prediction bit.
#[derive(Debug, Clone)]
pub struct GrowingSleepingMarkovHedge {
    eta: f64,
    mass: Vec<[Scaled; 2]>,
    fall_asleep: RateSequence,
    wake_up: RateSequence,
    round: usize,
    cum_loss: f64,
    phase: Phase,
    ops: OpCounter,
}

impl GrowingSleepingMarkovHedge {
    /// Canonical rates `α_t = β_t = 1/t`.
    pub fn new(eta: f64) -> Result<Self> {
        Self::with_rates(eta, RateSequence::Inverse, RateSequence::Inverse)
    }

    pub fn with_rates(eta: f64, fall_asleep: RateSequence, wake_up: RateSequence) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("eta must be positive, got {eta}")));
        }
        Ok(Self {
            eta,
            mass: Vec::new(),
            fall_asleep,
            wake_up,
            round: 1,
            cum_loss: 0.0,
            phase: Phase::AwaitingAdmission,
            ops: OpCounter::default(),
        })
    }

    /// Unnormalized `[v(i,0), v(i,1)]` as plain floats, relative to the largest pair mass.
    pub fn pair_weights(&self) -> Vec<[f64; 2]> {
        let top = max_exponent(self.mass.iter().flatten().copied()).unwrap_or(0);
        self.mass
            .iter()
            .map(|m| [m[ASLEEP].relative_to(top), m[AWAKE].relative_to(top)])
            .collect()
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.cum_loss
    }

    /// Posterior step and transition with explicit rates `α_{t+1}, β_{t+1} ∈ (0, 1)`.
    pub fn update_with_rates(
        &mut self,
        expert_losses: &[f64],
        learner_loss: f64,
        fall_asleep: f64,
        wake_up: f64,
    ) -> Result<()> {
        self.phase.require_admitted(self.round)?;
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(fall_asleep) || !open(wake_up) {
            return Err(invalid(format!(
                "wake/sleep rates ({fall_asleep}, {wake_up}) outside (0, 1)"
            )));
        }
        check_losses(expert_losses, self.mass.len())?;
        if learner_loss.is_nan() {
            return Err(invalid("learner loss is NaN"));
        }
        let kernel = WakeSleepKernel { fall_asleep, wake_up };
        for (m, &l) in self.mass.iter_mut().zip(expert_losses) {
            let posterior = [m[ASLEEP], m[AWAKE].mul_exp(-self.eta * (l - learner_loss))];
            *m = kernel.apply_scaled(posterior);
        }
        self.ops.add(2 * self.mass.len() as u64);
        self.cum_loss += learner_loss;
        self.round += 1;
        self.phase = Phase::AwaitingAdmission;
        Ok(())
    }
}

impl Forecaster for GrowingSleepingMarkovHedge {
    fn eta(&self) -> f64 {
        self.eta
    }

    fn num_experts(&self) -> usize {
        self.mass.len()
    }

    fn mixing_weights(&self) -> Result<Vec<f64>> {
        self.phase.require_admitted(self.round)?;
        let top = max_exponent(self.mass.iter().map(|m| m[AWAKE]))
            .ok_or_else(|| Error::Degenerate("every expert is asleep".into()))?;
        let w: Vec<f64> = self.mass.iter().map(|m| m[AWAKE].relative_to(top)).collect();
        let total: f64 = w.iter().sum();
        Ok(w.into_iter().map(|x| x / total).collect())
    }

    fn update(&mut self, expert_losses: &[f64], learner_loss: f64) -> Result<()> {
        let t = self.round + 1;
        let (a, b) = (self.fall_asleep.at(t), self.wake_up.at(t));
        self.update_with_rates(expert_losses, learner_loss, a, b)
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

impl GrowingForecaster for GrowingSleepingMarkovHedge {
    fn admit(&mut self, priors: &[f64]) -> Result<()> {
        self.phase.require_awaiting(self.round)?;
        check_priors(priors)?;
        if self.mass.is_empty() && priors.is_empty() {
            return Err(invalid("the first round must admit at least one expert"));
        }
        self.mass.extend(priors.iter().map(|&p| {
            let half = Scaled::new(p).mul(0.5);
            [half, half]
        }));
        self.ops.add(2 * priors.len() as u64);
        self.phase = Phase::Admitted;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecaster::play_round;
    use crate::hedge::Hedge;
    use crate::loss::{Loss, LossModel, Outcome, Prediction};
    use std::f64::consts::LN_2;

    #[test]
    fn kernel_columns_are_stochastic() {
        let k = WakeSleepKernel::new(0.3, 0.1).unwrap();
        for b in 0..2 {
            assert!((k.prob(0, b) + k.prob(1, b) - 1.0).abs() < 1e-15);
        }
        assert!(WakeSleepKernel::new(1.2, 0.0).is_err());
    }

    #[test]
    fn always_awake_reduces_to_hedge() {
        let model = LossModel::square_loss(0.0, 1.0).unwrap();
        let prior = [0.5, 0.3, 0.2];
        let mut s = SleepingMarkovHedge::new(model.eta(), &prior, &[1.0; 3]).unwrap();
        let mut h = Hedge::new(model.eta(), &prior).unwrap();
        let xs = [Prediction::Point(0.2), Prediction::Point(0.5), Prediction::Point(0.9)];
        for y in [0.1, 0.8, 0.85, 0.3] {
            let y = Outcome::Real(y);
            let ps = s.predict(&xs).unwrap();
            let ph = h.predict(&xs).unwrap();
            assert!((ps.as_point().unwrap() - ph.as_point().unwrap()).abs() < 1e-14);
            let ls: Vec<f64> = xs.iter().map(|x| model.loss(x, &y).unwrap()).collect();
            s.update_with_kernels(&ls, model.loss(&ps, &y).unwrap(), &[WakeSleepKernel::always_awake(); 3])
                .unwrap();
            h.update(&ls, 0.0).unwrap();
        }
    }

    #[test]
    fn asleep_weights_fixed_under_log_loss_identity_kernels() {
        let model = LossModel::log_loss(2).unwrap();
        let mut s = SleepingMarkovHedge::new(1.0, &[0.6, 0.4], &[0.5, 0.5]).unwrap();
        let xs = [Prediction::bernoulli(0.8).unwrap(), Prediction::bernoulli(0.3).unwrap()];
        let before: Vec<f64> = s.pair_weights().iter().map(|w| w[0]).collect();
        let x = s.predict(&xs).unwrap();
        let y = Outcome::Symbol(1);
        let ls: Vec<f64> = xs.iter().map(|x| model.loss(x, &y).unwrap()).collect();
        s.update_with_kernels(&ls, model.loss(&x, &y).unwrap(), &[WakeSleepKernel::identity(); 2])
            .unwrap();
        for (w, b) in s.pair_weights().iter().zip(before) {
            assert!((w[0] - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_evaluated_posterior() {
        let mut s = SleepingMarkovHedge::new(1.0, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        let lt = 0.3;
        s.update_with_kernels(&[0.0, LN_2], lt, &[WakeSleepKernel::identity(); 2]).unwrap();
        let raw = [0.25, 0.25 * 0.5, 0.25 * (-lt).exp(), 0.25 * (-lt).exp()];
        let z: f64 = raw.iter().sum();
        let w = s.pair_weights();
        assert!((w[0][1] - raw[0] / z).abs() < 1e-15);
        assert!((w[1][1] - raw[1] / z).abs() < 1e-15);
        assert!((w[0][0] - raw[2] / z).abs() < 1e-15);
        assert!((w[1][0] - raw[3] / z).abs() < 1e-15);
    }

    #[test]
    fn all_asleep_is_degenerate() {
        let s = SleepingMarkovHedge::new(1.0, &[1.0], &[0.0]).unwrap();
        assert!(matches!(s.mixing_weights(), Err(Error::Degenerate(_))));
        assert!(SleepingMarkovHedge::new(1.0, &[0.5, 0.4], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn symmetric_expert_keeps_balance() {
        let mut g = GrowingSleepingMarkovHedge::with_rates(1.0, RateSequence::Constant(0.2), RateSequence::Constant(0.2)).unwrap();
        g.admit(&[1.0, 1.0]).unwrap();
        for _ in 0..5 {
            g.update(&[0.4, 0.1], 0.4).unwrap();
            g.admit(&[]).unwrap();
            let w = g.pair_weights();
            assert_eq!(w[0][0], w[0][1]);
        }
    }

    #[test]
    fn rates_are_validated() {
        let mut g = GrowingSleepingMarkovHedge::new(1.0).unwrap();
        g.admit(&[1.0]).unwrap();
        assert!(g.update_with_rates(&[0.1], 0.1, 1.0, 0.5).is_err());
        assert!(g.update_with_rates(&[0.1], 0.1, 0.5, 0.0).is_err());
        assert!(g.update_with_rates(&[0.1], 0.1, 0.5, 0.5).is_ok());
    }

    #[test]
    fn power_of_two_prior_scaling_is_bit_identical() {
        let model = LossModel::square_loss(0.0, 1.0).unwrap();
        let run = |scale: f64| {
            let mut g = GrowingSleepingMarkovHedge::new(model.eta()).unwrap();
            let mut xs = Vec::new();
            let mut out = Vec::new();
            for t in 0..12usize {
                let p = [scale / (t + 1) as f64];
                xs.push(Prediction::Point((t as f64 * 0.31) % 1.0));
                g.admit(&p).unwrap();
                let y = Outcome::Real(if t % 5 < 2 { 0.9 } else { 0.2 });
                out.push(play_round(&mut g, &model, &xs, &y).unwrap().prediction);
            }
            out
        };
        assert_eq!(run(1.0), run(8.0));
        assert_eq!(run(1.0), run(2f64.powi(-30)));
    }

    #[test]
    fn matches_universe_sleeping_markov_hedge() {
        // growing variant = fixed-set algorithm on all experts with priors π/Π_{M_T},
        // unentered experts asleep and woken with probability 1/2 on entry
        let model = LossModel::square_loss(0.0, 1.0).unwrap();
        let counts = [1usize, 0, 2, 1, 0, 0, 1];
        let priors = [1.0, 0.5, 0.25, 0.8, 0.4];
        let total: f64 = priors.iter().sum();
        let points = [0.1, 0.9, 0.4, 0.6, 0.2];
        let mut lazy = GrowingSleepingMarkovHedge::new(model.eta()).unwrap();
        let normalized: Vec<f64> = priors.iter().map(|p| p / total).collect();
        let awake: Vec<f64> = (0..5).map(|i| if i < counts[0] { 0.5 } else { 0.0 }).collect();
        let mut full = SleepingMarkovHedge::new(model.eta(), &normalized, &awake).unwrap();
        let mut entered = 0;
        for (t, &m) in counts.iter().enumerate() {
            lazy.admit(&priors[entered..entered + m]).unwrap();
            entered += m;
            let xs: Vec<Prediction> = points[..entered].iter().map(|&p| Prediction::Point(p)).collect();
            let mut xs_full = xs.clone();
            xs_full.resize(5, Prediction::Point(f64::NAN));
            let a = lazy.predict(&xs).unwrap().as_point().unwrap();
            let b = full.predict(&xs_full).unwrap().as_point().unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "round {}", t + 1);
            let y = Outcome::Real((t as f64 * 0.29) % 1.0);
            let lt = model.loss(&Prediction::Point(a), &y).unwrap();
            let ls: Vec<f64> = xs.iter().map(|x| model.loss(x, &y).unwrap()).collect();
            lazy.update(&ls, lt).unwrap();
            if t + 1 < counts.len() {
                let next = t + 2;
                let after = entered + counts[t + 1];
                let rate = 1.0 / next as f64;
                let kernels: Vec<WakeSleepKernel> = (0..5)
                    .map(|i| {
                        if i < entered {
                            WakeSleepKernel::new(rate, rate).unwrap()
                        } else if i < after {
                            WakeSleepKernel::new(0.5, 0.5).unwrap()
                        } else {
                            WakeSleepKernel::new(1.0, 0.0).unwrap()
                        }
                    })
                    .collect();
                let mut ls_full = ls.clone();
                ls_full.resize(5, 0.0);
                full.update_with_kernels(&ls_full, lt, &kernels).unwrap();
            }
        }
    }
}
