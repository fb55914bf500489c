//! MarkovHedge: exponential weights over expert sequences under a Markov
//! prior, collapsed to one weight per expert. Fixed Share and Decreasing
//! Share are the two classical kernels.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forecaster::{Forecaster, OpCounter};
use crate::loss::check_simplex;
use crate::prior::RateSequence;

/// Largest expert count for which dense kernels are accepted.
pub const MAX_DENSE: usize = 64;

const COLUMN_TOLERANCE: f64 = 1e-9;

/// A column-stochastic matrix `θ(i|j)`, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseKernel {
    n: usize,
    data: Vec<f64>,
}

impl DenseKernel {
    /// `columns[j][i] = θ(i|j)`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.len();
        if n == 0 || n > MAX_DENSE {
            return Err(invalid(format!("dense kernels need 1..={MAX_DENSE} experts, got {n}")));
        }
        let mut data = Vec::with_capacity(n * n);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(invalid(format!("column {j} has {} entries, expected {n}", col.len())));
            }
            check_simplex(col, COLUMN_TOLERANCE)
                .map_err(|e| invalid(format!("column {j} is not stochastic: {e}")))?;
            data.extend_from_slice(col);
        }
        Ok(Self { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }
}

/// A transition kernel `θ_{t+1}(i|j)` from round `t` to round `t+1`.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionKernel {
    Identity,
    /// `(1−α) 1{i=j} + α/M` over the `M` current experts, `α ∈ [0, 1]`.
    Share { alpha: f64 },
    Dense(DenseKernel),
    /// Fresh-expert kernel over a universe with priors `priors`, moving from
    /// `M_t = entered_before` to `M_{t+1} = entered_after` entered experts.
    /// Columns of unentered experts are the identity.
    Fresh {
        priors: Vec<f64>,
        entered_before: usize,
        entered_after: usize,
    },
    /// `α π_i/Π_{M_{t+1}} + (1−α) θ^{fresh}(i|j)` on entered columns.
    GrowingFresh {
        priors: Vec<f64>,
        entered_before: usize,
        entered_after: usize,
        alpha: f64,
    },
}

impl TransitionKernel {
    /// `θ(i|j)` for a universe of `m` experts.
    pub fn prob(&self, i: usize, j: usize, m: usize) -> f64 {
        let eq = if i == j { 1.0 } else { 0.0 };
        match self {
            TransitionKernel::Identity => eq,
            TransitionKernel::Share { alpha } => (1.0 - alpha) * eq + alpha * (1.0 / m as f64),
            TransitionKernel::Dense(k) => k.prob(i, j),
            TransitionKernel::Fresh {
                priors,
                entered_before,
                entered_after,
            } => fresh_prob(priors, *entered_before, *entered_after, i, j),
            TransitionKernel::GrowingFresh {
                priors,
                entered_before,
                entered_after,
                alpha,
            } => {
                let f = fresh_prob(priors, *entered_before, *entered_after, i, j);
                if j >= *entered_before {
                    return f;
                }
                let pi_next: f64 = priors[..*entered_after].iter().sum();
                let share = if i < *entered_after { priors[i] / pi_next } else { 0.0 };
                alpha * share + (1.0 - alpha) * f
            }
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let unit = |a: f64| (0.0..=1.0).contains(&a);
        match self {
            TransitionKernel::Identity => Ok(()),
            TransitionKernel::Share { alpha } if unit(*alpha) => Ok(()),
            TransitionKernel::Share { alpha } => Err(invalid(format!("share rate {alpha} outside [0, 1]"))),
            TransitionKernel::Dense(k) if k.size() == m => Ok(()),
            TransitionKernel::Dense(k) => Err(invalid(format!("dense kernel of size {} for {m} experts", k.size()))),
            TransitionKernel::Fresh {
                priors,
                entered_before,
                entered_after,
            }
            | TransitionKernel::GrowingFresh {
                priors,
                entered_before,
                entered_after,
                ..
            } => {
                if priors.len() != m || entered_before > entered_after || *entered_after > m || *entered_before == 0 {
                    return Err(invalid("fresh kernel does not fit the universe"));
                }
                crate::forecaster::check_priors(priors)?;
                if let TransitionKernel::GrowingFresh { alpha, .. } = self {
                    if !unit(*alpha) {
                        return Err(invalid(format!("share rate {alpha} outside [0, 1]")));
                    }
                }
                Ok(())
            }
        }
    }

    /// `v_{t+1} = θ_{t+1} v^m_t`.
    pub fn apply(&self, vm: &[f64]) -> Result<Vec<f64>> {
        let m = vm.len();
        self.validate(m)?;
        Ok(match self {
            TransitionKernel::Identity => vm.to_vec(),
            TransitionKernel::Share { alpha } => share_step(vm, *alpha),
            TransitionKernel::Dense(k) => (0..m)
                .map(|i| (0..m).map(|j| k.prob(i, j) * vm[j]).sum())
                .collect(),
            TransitionKernel::Fresh { .. } | TransitionKernel::GrowingFresh { .. } => {
                let (priors, before, after, alpha) = match self {
                    TransitionKernel::Fresh {
                        priors,
                        entered_before,
                        entered_after,
                    } => (priors, *entered_before, *entered_after, 0.0),
                    TransitionKernel::GrowingFresh {
                        priors,
                        entered_before,
                        entered_after,
                        alpha,
                    } => (priors, *entered_before, *entered_after, *alpha),
                    _ => unreachable!(),
                };
                let pi_t: f64 = priors[..before].iter().sum();
                let pi_next: f64 = priors[..after].iter().sum();
                let entered_mass: f64 = vm[..before].iter().sum();
                let mut out = vm.to_vec();
                for i in 0..after {
                    let shared = priors[i] / pi_next * (alpha * entered_mass);
                    let own = if i < before {
                        (1.0 - alpha) * (pi_t / pi_next) * vm[i]
                    } else {
                        (1.0 - alpha) * entered_mass * priors[i] / pi_next + vm[i]
                    };
                    out[i] = own + shared;
                }
                out
            }
        })
    }
}

fn fresh_prob(priors: &[f64], before: usize, after: usize, i: usize, j: usize) -> f64 {
    if j >= before {
        return if i == j { 1.0 } else { 0.0 };
    }
    let pi_next: f64 = priors[..after].iter().sum();
    if i < before {
        if i == j {
            priors[..before].iter().sum::<f64>() / pi_next
        } else {
            0.0
        }
    } else if i < after {
        priors[i] / pi_next
    } else {
        0.0
    }
}

/// Fixed Share kernel `θ(i|j) = (1−α) 1{i=j} + α/M`, `α ∈ (0, 1)`.
pub fn fixed_share_kernel(alpha: f64, m: usize) -> Result<TransitionKernel> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("fixed share rate {alpha} outside (0, 1)")));
    }
    if m == 0 {
        return Err(invalid("fixed share needs at least one expert"));
    }
    Ok(TransitionKernel::Share { alpha })
}

/// Decreasing Share kernel for the transition into round `t ≥ 2`, rate `α_t`.
pub fn decreasing_share_kernel(t: usize, schedule: &RateSequence, m: usize) -> Result<TransitionKernel> {
    if t < 2 {
        return Err(invalid("transitions start at round 2"));
    }
    fixed_share_kernel(schedule.at(t), m)
}

pub(crate) fn share_step(vm: &[f64], alpha: f64) -> Vec<f64> {
    let uniform = alpha * (1.0 / vm.len() as f64);
    vm.iter().map(|v| (1.0 - alpha) * v + uniform).collect()
}

/// How MarkovHedge picks its kernel when driven through [`Forecaster::update`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSchedule {
    Identity,
    FixedShare { alpha: f64 },
    DecreasingShare { alpha: RateSequence },
}

impl KernelSchedule {
    pub fn kernel(&self, t: usize, m: usize) -> Result<TransitionKernel> {
        match self {
            KernelSchedule::Identity => Ok(TransitionKernel::Identity),
            KernelSchedule::FixedShare { alpha } => fixed_share_kernel(*alpha, m),
            KernelSchedule::DecreasingShare { alpha } => decreasing_share_kernel(t, alpha, m),
        }
    }
}

/// Posterior `v^m_i ∝ v_i e^{−η ℓ_i}`. Zero-weight entries stay zero and
/// their losses are not read.
pub(crate) fn posterior(v: &[f64], losses: &[f64], eta: f64) -> Result<Vec<f64>> {
    if losses.len() != v.len() {
        return Err(invalid(format!("{} losses for {} experts", losses.len(), v.len())));
    }
    let mut min = f64::INFINITY;
    for (&vi, &l) in v.iter().zip(losses) {
        if vi > 0.0 {
            if l.is_nan() || l == f64::NEG_INFINITY {
                return Err(invalid("losses must not be NaN or −∞"));
            }
            min = min.min(l);
        }
    }
    if !min.is_finite() {
        return Err(Error::Degenerate("no expert with positive weight has a finite loss".into()));
    }
    let mut out: Vec<f64> = v
        .iter()
        .zip(losses)
        .map(|(&vi, &l)| if vi > 0.0 { vi * (-eta * (l - min)).exp() } else { 0.0 })
        .collect();
    let total: f64 = out.iter().sum();
    for x in &mut out {
        *x /= total;
    }
    Ok(out)
}

/// MarkovHedge over a fixed set of experts.
#[derive(Debug, Clone)]
pub struct MarkovHedge {
    eta: f64,
    v: Vec<f64>,
    schedule: KernelSchedule,
    round: usize,
    cum_loss: f64,
    ops: OpCounter,
}

impl MarkovHedge {
    /// Starts from `v_1 = θ_1` (a probability vector; zeros allowed).
    pub fn new(eta: f64, theta_1: &[f64]) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("eta must be positive, got {eta}")));
        }
        check_simplex(theta_1, COLUMN_TOLERANCE)?;
        Ok(Self {
            eta,
            v: theta_1.to_vec(),
            schedule: KernelSchedule::Identity,
            round: 1,
            cum_loss: 0.0,
            ops: OpCounter::default(),
        })
    }

    /// Fixed Share with `α ∈ (0, 1)` and a uniform start.
    pub fn fixed_share(eta: f64, m: usize, alpha: f64) -> Result<Self> {
        fixed_share_kernel(alpha, m)?;
        Self::new(eta, &vec![1.0 / m as f64; m]).map(|h| h.with_schedule(KernelSchedule::FixedShare { alpha }))
    }

    /// Decreasing Share with rates `α_t` (default `1/t`) and a uniform start.
    pub fn decreasing_share(eta: f64, m: usize, alpha: RateSequence) -> Result<Self> {
        if m == 0 {
            return Err(invalid("decreasing share needs at least one expert"));
        }
        Self::new(eta, &vec![1.0 / m as f64; m])
            .map(|h| h.with_schedule(KernelSchedule::DecreasingShare { alpha }))
    }

    pub fn with_schedule(mut self, schedule: KernelSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn weights(&self) -> &[f64] {
        &self.v
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.cum_loss
    }

    /// Posterior update followed by an explicit kernel `θ_{t+1}`.
    pub fn update_with_kernel(&mut self, losses: &[f64], learner_loss: f64, kernel: &TransitionKernel) -> Result<()> {
        let vm = posterior(&self.v, losses, self.eta)?;
        let next = kernel.apply(&vm)?;
        let cost = match kernel {
            TransitionKernel::Dense(_) => (vm.len() * vm.len()) as u64,
            _ => vm.len() as u64,
        };
        self.ops.add(vm.len() as u64 + cost);
        self.v = next;
        self.cum_loss += learner_loss;
        self.round += 1;
        Ok(())
    }
}

impl Forecaster for MarkovHedge {
    fn eta(&self) -> f64 {
        self.eta
    }

    fn num_experts(&self) -> usize {
        self.v.len()
    }

    fn mixing_weights(&self) -> Result<Vec<f64>> {
        Ok(self.v.clone())
    }

    fn update(&mut self, expert_losses: &[f64], learner_loss: f64) -> Result<()> {
        let kernel = self.schedule.kernel(self.round + 1, self.v.len())?;
        self.update_with_kernel(expert_losses, learner_loss, &kernel)
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
