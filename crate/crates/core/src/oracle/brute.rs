//! Literal exponential weights over whole expert sequences.
//!
//! Every prefix `i^t` is carried with its own log weight
//! `ln θ_1(i_1) + Σ ln θ_s(i_s|i_{s−1}) − η L_{t−1}(i^{t−1})`, and the
//! prediction is the weighted average of `x_{i_t,t}` over all prefixes. Cost
//! is exponential in `T`; these functions exist to check the collapsed
//! algorithms.

use crate::error::{invalid, Error, Result};
use crate::loss::{Loss, Outcome, Prediction};
use crate::markov::TransitionKernel;
use crate::sleeping::WakeSleepKernel;

/// Largest number of sequences a brute-force run may carry.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

struct Prefix {
    state: usize,
    log_w: f64,
}

fn guard(estimate: f64) -> Result<()> {
    if estimate > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded {
            estimate,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    Ok(())
}

#[derive(Default)]
struct Accumulator {
    total: f64,
    point: f64,
    dist: Vec<f64>,
    is_dist: Option<bool>,
}

impl Accumulator {
    fn add(&mut self, w: f64, x: &Prediction) -> Result<()> {
        match x {
            Prediction::Point(p) => {
                if self.is_dist == Some(true) {
                    return Err(invalid("mixed prediction kinds"));
                }
                self.is_dist = Some(false);
                self.point += w * p;
            }
            Prediction::Dist(d) => {
                if self.is_dist == Some(false) {
                    return Err(invalid("mixed prediction kinds"));
                }
                if self.is_dist.is_none() {
                    self.dist = vec![0.0; d.len()];
                }
                self.is_dist = Some(true);
                for (a, p) in self.dist.iter_mut().zip(d) {
                    *a += w * p;
                }
            }
        }
        self.total += w;
        Ok(())
    }

    fn finish(self) -> Result<Prediction> {
        if !(self.total > 0.0) {
            return Err(Error::Degenerate("no sequence carries weight".into()));
        }
        match self.is_dist {
            Some(true) => Ok(Prediction::Dist(self.dist.iter().map(|a| a / self.total).collect())),
            _ => Ok(Prediction::Point(self.point / self.total)),
        }
    }
}

/// Shared level-by-level enumeration: `vote(state)` names the expert a
/// sequence in `state` predicts with, `charge(t, state, learner_loss)` its loss.
fn enumerate<V, C, K>(
    initial: &[f64],
    horizon: usize,
    transition: K,
    predictions: &[Vec<Prediction>],
    eta: f64,
    vote: V,
    mut charge: C,
) -> Result<Vec<(Prediction, f64)>>
where
    V: Fn(usize) -> Option<usize>,
    C: FnMut(usize, usize, &Prediction) -> Result<(f64, f64)>,
    K: Fn(usize, usize) -> Vec<(usize, f64)>,
{
    let mut level: Vec<Prefix> = initial
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(state, &p)| Prefix { state, log_w: p.ln() })
        .collect();
    let mut out = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let reference = level.iter().map(|p| p.log_w).fold(f64::NEG_INFINITY, f64::max);
        let mut acc = Accumulator::default();
        for p in &level {
            if let Some(i) = vote(p.state) {
                acc.add((p.log_w - reference).exp(), &predictions[t - 1][i])?;
            }
        }
        let x = acc.finish()?;
        let mut learner_loss = f64::NAN;
        let mut state_loss = Vec::with_capacity(level.len());
        for p in &level {
            let (lt, l) = charge(t, p.state, &x)?;
            learner_loss = lt;
            state_loss.push(l);
        }
        if t < horizon {
            let mut next = Vec::new();
            for (p, l) in level.iter().zip(&state_loss) {
                for (s, prob) in transition(t + 1, p.state) {
                    if prob > 0.0 {
                        next.push(Prefix {
                            state: s,
                            log_w: p.log_w - eta * l + prob.ln(),
                        });
                    }
                }
            }
            level = next;
        }
        out.push((x, learner_loss));
    }
    Ok(out)
}

/// Brute-force predictions of exponential weights over sequences drawn from
/// the Markov prior `θ_1, θ_2, …, θ_T`.
///
/// `kernels[s]` is `θ_{s+2}`; `predictions[t−1][i]` and `expert_losses[t−1][i]`
/// are `x_{i,t}` and `ℓ_{i,t}`.
pub fn brute_force_sequence_aggregation(
    theta_1: &[f64],
    kernels: &[TransitionKernel],
    predictions: &[Vec<Prediction>],
    expert_losses: &[Vec<f64>],
    eta: f64,
) -> Result<Vec<Prediction>> {
    let m = theta_1.len();
    let horizon = predictions.len();
    if m == 0 || horizon == 0 {
        return Err(invalid("brute force needs at least one expert and one round"));
    }
    if kernels.len() + 1 < horizon || expert_losses.len() < horizon {
        return Err(invalid("kernels or losses do not cover the horizon"));
    }
    if predictions.iter().any(|r| r.len() != m) || expert_losses.iter().any(|r| r.len() != m) {
        return Err(invalid("every round needs one prediction and one loss per expert"));
    }
    for k in kernels {
        k.validate(m)?;
    }
    guard((m as f64).powi(horizon as i32))?;
    let out = enumerate(
        theta_1,
        horizon,
        |t, j| (0..m).map(|i| (i, kernels[t - 2].prob(i, j, m))).collect(),
        predictions,
        eta,
        Some,
        |t, i, _| Ok((f64::NAN, expert_losses[t - 1][i])),
    )?;
    Ok(out.into_iter().map(|(x, _)| x).collect())
}

/// Brute-force run of exponential weights over sleeping sequences
/// `(i_t, a_t)`, where the expert index stays fixed and `a_t` follows the
/// expert's wake/sleep chain. Only awake pairs vote and asleep pairs are
/// charged the learner's own loss.
///
/// `kernels[s][i]` is expert `i`'s chain `θ_{i,s+2}`. Returns the prediction
/// and learner loss of every round.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_specialists<L: Loss + ?Sized>(
    prior: &[f64],
    awake_init: &[f64],
    kernels: &[Vec<WakeSleepKernel>],
    predictions: &[Vec<Prediction>],
    outcomes: &[Outcome],
    loss: &L,
    eta: f64,
) -> Result<Vec<(Prediction, f64)>> {
    let m = prior.len();
    let horizon = predictions.len();
    if m == 0 || horizon == 0 || awake_init.len() != m {
        return Err(invalid("brute force needs matching priors and awake probabilities"));
    }
    if kernels.len() + 1 < horizon || outcomes.len() < horizon || kernels.iter().any(|k| k.len() != m) {
        return Err(invalid("kernels or outcomes do not cover the horizon"));
    }
    if predictions.iter().any(|r| r.len() != m) {
        return Err(invalid("every round needs one prediction per expert"));
    }
    guard(m as f64 * 2f64.powi(horizon as i32))?;
    let initial: Vec<f64> = (0..2 * m)
        .map(|s| {
            let (i, a) = (s / 2, s % 2);
            prior[i] * if a == 1 { awake_init[i] } else { 1.0 - awake_init[i] }
        })
        .collect();
    let mut cache: Option<(usize, f64, Vec<f64>)> = None;
    enumerate(
        &initial,
        horizon,
        |t, s| {
            let (i, a) = (s / 2, s % 2);
            let k = &kernels[t - 2][i];
            vec![(2 * i, k.prob(0, a)), (2 * i + 1, k.prob(1, a))]
        },
        predictions,
        eta,
        |s| (s % 2 == 1).then_some(s / 2),
        |t, s, x| {
            if cache.as_ref().is_none_or(|c| c.0 != t) {
                let lt = loss.loss(x, &outcomes[t - 1])?;
                let row = predictions[t - 1]
                    .iter()
                    .map(|xi| loss.loss(xi, &outcomes[t - 1]))
                    .collect::<Result<Vec<_>>>()?;
                cache = Some((t, lt, row));
            }
            let (_, lt, row) = cache.as_ref().expect("filled above");
            let l = if s % 2 == 1 { row[s / 2] } else { *lt };
            Ok((*lt, l))
        },
    )
}
