//! Closed-form regret bounds, evaluated for a given comparator.
//!
//! Every function returns a bound on `L_T − L_T(comparator)` in loss units,
//! i.e. already divided by `η`. `T` is the comparator's horizon, so the same
//! functions give prefix bounds when called on truncated comparators.

use crate::error::{invalid, Result};
use crate::oracle::comparator::{ComparatorSequence, ShiftKind};
use crate::prior::{partial_sums, RateSequence};
use crate::schedule::EntrySchedule;
use crate::sleeping::WakeSleepKernel;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in terms {
        let t = sum + x;
        if !t.is_finite() {
            return t;
        }
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `Σ_{t=2}^{T} ln(t/(t−1))`, which telescopes to `ln T`.
pub fn telescoping_sum(horizon: usize) -> f64 {
    compensated_sum((2..=horizon).map(|t| (1.0 / (t - 1) as f64).ln_1p()))
}

/// `ln(1/(1−x))` without cancellation for small `x`.
fn ln_inv_complement(x: f64) -> f64 {
    -(-x).ln_1p()
}

/// `KL(u‖π)` with `0 ln 0 = 0`; infinite when `u_i > 0 = π_i`.
pub fn kl_divergence(u: &[f64], pi: &[f64]) -> Result<f64> {
    if u.len() != pi.len() {
        return Err(invalid("KL divergence of vectors with different lengths"));
    }
    Ok(compensated_sum(u.iter().zip(pi).map(|(&a, &b)| {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    })))
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    h(p) + h(1.0 - p)
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("eta must be positive, got {eta}")))
    }
}

fn check_comparator(c: &ComparatorSequence, schedule: &EntrySchedule, priors: &[f64]) -> Result<()> {
    if c.horizon() > schedule.horizon() {
        return Err(invalid("comparator is longer than the schedule"));
    }
    if !c.is_admissible(schedule) {
        return Err(invalid("comparator uses an expert before it enters"));
    }
    if priors.len() < schedule.total(c.horizon()) {
        return Err(invalid("priors do not cover every entered expert"));
    }
    Ok(())
}

/// Hedge on a fixed set: `ln(Σ_j π_j / π_i)`.
pub fn bound_hedge(priors: &[f64], i: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let p = *priors.get(i).ok_or_else(|| invalid("expert outside the prior"))?;
    Ok((priors.iter().sum::<f64>() / p).ln() / eta)
}

/// GrowingHedge against expert `i` over `[τ_i, T]`: `ln(Π_{M_T}/π_i)`.
pub fn bound_growing_hedge(priors: &[f64], schedule: &EntrySchedule, i: usize, horizon: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let m = schedule.total(horizon);
    if i >= m || priors.len() < m {
        return Err(invalid(format!("expert {i} has not entered by round {horizon}")));
    }
    let pi_sum: f64 = priors[..m].iter().sum();
    Ok((pi_sum / priors[i]).ln() / eta)
}

/// Step-by-step form for fresh comparators: `ln(Π_{M_1}/π_{i_1})`, plus
/// `ln(Π_{M_t}/Π_{M_{t−1}})` at each non-shift round and `ln(Π_{M_t}/π_{i_t})`
/// at each shift.
pub fn bound_fresh(priors: &[f64], schedule: &EntrySchedule, c: &ComparatorSequence, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    check_comparator(c, schedule, priors)?;
    if !c.is_fresh(schedule) {
        return Err(invalid("comparator switches to an incumbent expert"));
    }
    let sums = partial_sums(&priors[..schedule.total(c.horizon())]);
    let pi_at = |t: usize| sums[schedule.total(t)];
    let mut terms = vec![(pi_at(1) / priors[c.at(1)]).ln()];
    for t in 2..=c.horizon() {
        if c.at(t) == c.at(t - 1) {
            terms.push((pi_at(t) / pi_at(t - 1)).ln());
        } else {
            terms.push((pi_at(t) / priors[c.at(t)]).ln());
        }
    }
    Ok(compensated_sum(terms) / eta)
}

/// Segment form of [`bound_fresh`]: `Σ_j ln(Π_{M_{σ_{j+1}−1}}/π_{e_j})`.
pub fn bound_fresh_segments(priors: &[f64], schedule: &EntrySchedule, c: &ComparatorSequence, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    check_comparator(c, schedule, priors)?;
    if !c.is_fresh(schedule) {
        return Err(invalid("comparator switches to an incumbent expert"));
    }
    let sums = partial_sums(&priors[..schedule.total(c.horizon())]);
    let segments = c.segments();
    let mut terms = Vec::with_capacity(segments.len());
    for (j, &(_, e)) in segments.iter().enumerate() {
        let end = segments.get(j + 1).map_or(c.horizon(), |s| s.0 - 1);
        terms.push((sums[schedule.total(end)] / priors[e]).ln());
    }
    Ok(compensated_sum(terms) / eta)
}

/// GrowingMarkovHedge with switching rates `α_t`: the fresh form plus
/// `ln 1/(1−α_t)` at each non-shift round and `ln 1/α_t` at each incumbent shift.
pub fn bound_growing_markov(
    priors: &[f64],
    schedule: &EntrySchedule,
    alpha: &RateSequence,
    c: &ComparatorSequence,
    eta: f64,
) -> Result<f64> {
    check_eta(eta)?;
    check_comparator(c, schedule, priors)?;
    alpha.validate(2, c.horizon().max(2), true)?;
    let sums = partial_sums(&priors[..schedule.total(c.horizon())]);
    let pi_at = |t: usize| sums[schedule.total(t)];
    let mut terms = vec![(pi_at(1) / priors[c.at(1)]).ln()];
    for t in 2..=c.horizon() {
        let a = alpha.at(t);
        let j = c.at(t);
        if j == c.at(t - 1) {
            terms.push((pi_at(t) / pi_at(t - 1)).ln());
            terms.push(ln_inv_complement(a));
        } else {
            terms.push((pi_at(t) / priors[j]).ln());
            if j < schedule.total(t - 1) {
                terms.push(-a.ln());
            }
        }
    }
    Ok(compensated_sum(terms) / eta)
}

/// Exact Markov-prior bound `−ln(θ_1(i_1) Π_t θ_t(i_t|i_{t−1}))` for an
/// arbitrary kernel sequence; `kernel(t, i, j)` is `θ_t(i|j)`.
pub fn bound_markov_sequence<K>(theta_1: &[f64], kernel: K, c: &ComparatorSequence, eta: f64) -> Result<f64>
where
    K: Fn(usize, usize, usize) -> f64,
{
    check_eta(eta)?;
    let p1 = *theta_1.get(c.at(1)).ok_or_else(|| invalid("comparator outside the initial distribution"))?;
    let mut terms = vec![-p1.ln()];
    for t in 2..=c.horizon() {
        terms.push(-kernel(t, c.at(t), c.at(t - 1)).ln());
    }
    Ok(compensated_sum(terms) / eta)
}

/// Sleeping-expert bound for a pool comparator under a general per-expert
/// wake/sleep prior:
/// `Σ_p [ln((1/n)/π_{e_p}) + ln 1/θ_{e_p,1}(a_{p,1}) + Σ_t ln 1/θ_{e_p,t}(a_{p,t}|a_{p,t−1})]`
/// with `a_{p,t} = 1{i_t = e_p}`. `prior` is normalized, `awake_init[i]` is
/// `θ_{i,1}(1)` and `kernel(i, t)` is expert `i`'s chain into round `t`.
pub fn bound_sleeping_general<K>(
    prior: &[f64],
    awake_init: &[f64],
    kernel: K,
    c: &ComparatorSequence,
    eta: f64,
) -> Result<f64>
where
    K: Fn(usize, usize) -> WakeSleepKernel,
{
    check_eta(eta)?;
    let pool = c.pool();
    let n = pool.len() as f64;
    let mut terms = Vec::new();
    for &e in &pool {
        let (p, a1) = match (prior.get(e), awake_init.get(e)) {
            (Some(&p), Some(&a)) => (p, a),
            _ => return Err(invalid("comparator outside the prior")),
        };
        terms.push((1.0 / n / p).ln());
        let state = |t: usize| usize::from(c.at(t) == e);
        terms.push(-(if state(1) == 1 { a1 } else { 1.0 - a1 }).ln());
        for t in 2..=c.horizon() {
            terms.push(-kernel(e, t).prob(state(t), state(t - 1)).ln());
        }
    }
    Ok(compensated_sum(terms) / eta)
}

/// GrowingSleepingMarkovHedge with rates `α_t` (fall asleep) and `β_t` (wake
/// up), for a comparator with pool `e_1, …, e_n`:
/// `Σ_p ln((Π_{M_T}/n)/π_{e_p}) + n ln 2 + Σ_{t≥2}[ln 1/(1−α_t) + (n−1) ln 1/(1−β_t)]
///  + Σ_j (ln 1/α_{σ_j} + ln 1/β_{σ_j})`.
pub fn bound_sleeping(
    priors: &[f64],
    schedule: &EntrySchedule,
    fall_asleep: &RateSequence,
    wake_up: &RateSequence,
    c: &ComparatorSequence,
    eta: f64,
) -> Result<f64> {
    check_eta(eta)?;
    check_comparator(c, schedule, priors)?;
    let horizon = c.horizon();
    fall_asleep.validate(2, horizon.max(2), true)?;
    wake_up.validate(2, horizon.max(2), true)?;
    let pool = c.pool();
    let n = pool.len() as f64;
    let pi_sum: f64 = priors[..schedule.total(horizon)].iter().sum();
    let mut terms: Vec<f64> = pool.iter().map(|&e| (pi_sum / n / priors[e]).ln()).collect();
    terms.push(n * std::f64::consts::LN_2);
    for t in 2..=horizon {
        terms.push(ln_inv_complement(fall_asleep.at(t)));
        terms.push((n - 1.0) * ln_inv_complement(wake_up.at(t)));
    }
    for t in c.shifts() {
        terms.push(-fall_asleep.at(t).ln());
        terms.push(-wake_up.at(t).ln());
    }
    Ok(compensated_sum(terms) / eta)
}

/// Fixed Share with rate `α` on `M` experts and `k` shifts over `T` rounds:
/// `(k+1) ln M + k ln 1/α + (T−1−k) ln 1/(1−α)`.
pub fn bound_fixed_share(m: usize, horizon: usize, shifts: usize, alpha: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if !(alpha > 0.0 && alpha < 1.0) || shifts >= horizon.max(1) || m == 0 {
        return Err(invalid("fixed share bound needs α ∈ (0,1), M ≥ 1 and k < T"));
    }
    let k = shifts as f64;
    let stays = (horizon - 1 - shifts) as f64;
    Ok(((k + 1.0) * (m as f64).ln() - k * alpha.ln() + stays * ln_inv_complement(alpha)) / eta)
}

/// Fixed Share tuned with `α = k/(T−1)`: `(k+1) ln M + (T−1) H(k/(T−1))`.
pub fn bound_fixed_share_tuned(m: usize, horizon: usize, shifts: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if horizon < 2 {
        return Ok((m as f64).ln() / eta);
    }
    let n = (horizon - 1) as f64;
    let k = shifts as f64;
    Ok(((k + 1.0) * (m as f64).ln() + n * binary_entropy(k / n)) / eta)
}

/// Relaxation `(k+1) ln M + k ln((T−1)/k) + k` of [`bound_fixed_share_tuned`].
pub fn bound_fixed_share_tuned_relaxed(m: usize, horizon: usize, shifts: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let k = shifts as f64;
    let extra = if shifts == 0 { 0.0 } else { k * ((horizon - 1) as f64 / k).ln() + k };
    Ok(((k + 1.0) * (m as f64).ln() + extra) / eta)
}

/// Decreasing Share with rates `α_t`:
/// `(k+1) ln M + Σ_j ln 1/α_{σ_j} + Σ_{t=2}^{T} ln 1/(1−α_t)`.
pub fn bound_decreasing_share_general(
    m: usize,
    alpha: &RateSequence,
    c: &ComparatorSequence,
    eta: f64,
) -> Result<f64> {
    check_eta(eta)?;
    let horizon = c.horizon();
    alpha.validate(2, horizon.max(2), true)?;
    let k = c.num_shifts() as f64;
    let mut terms = vec![(k + 1.0) * (m as f64).ln()];
    terms.extend(c.shifts().into_iter().map(|t| -alpha.at(t).ln()));
    terms.extend((2..=horizon).map(|t| ln_inv_complement(alpha.at(t))));
    Ok(compensated_sum(terms) / eta)
}

/// Decreasing Share with `α_t = 1/t`: `(k+1) ln M + Σ_j ln σ_j + ln T`.
pub fn bound_decreasing_share(m: usize, c: &ComparatorSequence, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let k = c.num_shifts() as f64;
    let mut terms = vec![(k + 1.0) * (m as f64).ln(), (c.horizon() as f64).ln()];
    terms.extend(c.shifts().into_iter().map(|t| (t as f64).ln()));
    Ok(compensated_sum(terms) / eta)
}

/// Display form for `π_i = 1/m_{τ_i}` and fresh comparators:
/// `ln m_1 + Σ_j (ln m_{σ_j} + ln σ_j) + ln T`.
pub fn display_fresh_entry_uniform(schedule: &EntrySchedule, c: &ComparatorSequence, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if !c.is_fresh(schedule) {
        return Err(invalid("comparator switches to an incumbent expert"));
    }
    let mut terms = vec![(schedule.entrants(1) as f64).ln(), (c.horizon() as f64).ln()];
    for t in c.shifts() {
        terms.push((schedule.entrants(t) as f64).ln());
        terms.push((t as f64).ln());
    }
    Ok(compensated_sum(terms) / eta)
}

/// Display form for `π_i = 1/(τ_i m_{τ_i})` against one expert since entry:
/// `ln m_{τ_i} + ln τ_i + ln(1 + ln T)`.
pub fn display_entry_time_uniform(schedule: &EntrySchedule, i: usize, horizon: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let tau = schedule.entry_time(i).ok_or_else(|| invalid("expert never enters"))?;
    let v = (schedule.entrants(tau) as f64).ln() + (tau as f64).ln() + (horizon as f64).ln().ln_1p();
    Ok(v / eta)
}

/// Display form for `π_i = 1/i` (1-based): `ln i + ln(1 + ln M_T)`.
pub fn display_inverse_index(schedule: &EntrySchedule, i: usize, horizon: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let m = schedule.total(horizon) as f64;
    Ok((((i + 1) as f64).ln() + m.ln().ln_1p()) / eta)
}

/// Display form for `π_i = 1`, `α_t = 1/t` and admissible comparators with
/// `k` shifts of which `k_1` are incumbent: `(k+1) ln M_T + (k_1+1) ln T`.
pub fn display_admissible_uniform(schedule: &EntrySchedule, c: &ComparatorSequence, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let kinds = c.classify(schedule);
    let k = kinds.len() as f64;
    let k1 = kinds.iter().filter(|(_, kind)| *kind == ShiftKind::Incumbent).count() as f64;
    let m = schedule.total(c.horizon()) as f64;
    Ok(((k + 1.0) * m.ln() + (k1 + 1.0) * (c.horizon() as f64).ln()) / eta)
}

/// Display form for sparse comparators with `π_i = 1/(τ_i m_{τ_i})` and
/// `α_t = β_t = 1/t`: `Σ_p (ln τ_{e_p} + ln(m_{τ_{e_p}}/n)) + n ln(2T) + 2 Σ_j ln σ_j`.
pub fn display_sparse_entry_time(schedule: &EntrySchedule, c: &ComparatorSequence, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let pool = c.pool();
    let n = pool.len() as f64;
    let mut terms = Vec::new();
    for &e in &pool {
        let tau = schedule.entry_time(e).ok_or_else(|| invalid("expert never enters"))?;
        terms.push((tau as f64).ln());
        terms.push((schedule.entrants(tau) as f64 / n).ln());
    }
    terms.push(n * (2.0 * c.horizon() as f64).ln());
    terms.extend(c.shifts().into_iter().map(|t| 2.0 * (t as f64).ln()));
    Ok(compensated_sum(terms) / eta)
}

/// Display form for `π_i = 1` and `α_t = β_t = 1/(t ln t)`:
/// `n ln(M_T/n) + n ln 2 + n Σ_{t≥2} ln 1/(1−α_t) + 2k ln T + 2k ln ln T`.
pub fn display_sparse_uniform(schedule: &EntrySchedule, c: &ComparatorSequence, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let horizon = c.horizon();
    let n = c.pool().len() as f64;
    let k = c.num_shifts() as f64;
    let m = schedule.total(horizon) as f64;
    let alpha = RateSequence::InverseTLogT;
    let stays = compensated_sum((2..=horizon).map(|t| ln_inv_complement(alpha.at(t))));
    let tf = horizon as f64;
    let shift_terms = if k > 0.0 { 2.0 * k * (tf.ln() + tf.ln().ln()) } else { 0.0 };
    Ok((n * (m / n).ln() + n * std::f64::consts::LN_2 + n * stays + shift_terms) / eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::{realize_priors, PriorPreset};

    fn seq(v: &[usize]) -> ComparatorSequence {
        ComparatorSequence::from_indices(v.to_vec()).unwrap()
    }

    #[test]
    fn telescoping_is_ln_t() {
        for t in [1usize, 2, 10, 1000, 100_000] {
            assert!((telescoping_sum(t) - (t as f64).ln()).abs() < 1e-12, "T = {t}");
        }
    }

    #[test]
    fn kl_conventions() {
        assert_eq!(kl_divergence(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        let v = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((binary_entropy(0.5) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn fresh_forms_agree() {
        let s = EntrySchedule::from_counts(vec![2, 0, 3, 1, 0, 2]).unwrap();
        let pi = realize_priors(&PriorPreset::EntryTimeUniform, &s).unwrap();
        let c = seq(&[1, 1, 4, 5, 5, 6]);
        let a = bound_fresh(&pi, &s, &c, 1.0).unwrap();
        let b = bound_fresh_segments(&pi, &s, &c, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);
        // a constant comparator reduces to ln(Π_{M_T}/π_i)
        let c = seq(&[0; 6]);
        let a = bound_fresh(&pi, &s, &c, 1.0).unwrap();
        assert!((a - bound_growing_hedge(&pi, &s, 0, 6, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn growing_markov_matches_path_probability() {
        let s = EntrySchedule::from_counts(vec![2, 1, 0, 2]).unwrap();
        let pi = realize_priors(&PriorPreset::InverseIndex, &s).unwrap();
        let alpha = RateSequence::Inverse;
        let c = seq(&[1, 2, 0, 0]);
        let sums = partial_sums(&pi);
        let v = bound_growing_markov(&pi, &s, &alpha, &c, 1.0).unwrap();
        let expected = (sums[2] / pi[1]).ln()
            + (sums[3] / pi[2]).ln()
            + (sums[3] / pi[0]).ln()
            + 3f64.ln()
            + (sums[5] / sums[3]).ln()
            + (4.0f64 / 3.0).ln();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn decreasing_share_forms_agree() {
        let c = seq(&[0, 0, 1, 1, 2, 0, 0, 0]);
        let a = bound_decreasing_share(3, &c, 0.5).unwrap();
        let b = bound_decreasing_share_general(3, &RateSequence::Inverse, &c, 0.5).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn tuned_fixed_share_relaxation_dominates() {
        for k in 0..6 {
            let h = bound_fixed_share_tuned(5, 100, k, 1.0).unwrap();
            let r = bound_fixed_share_tuned_relaxed(5, 100, k, 1.0).unwrap();
            assert!(h <= r + 1e-12);
            if k > 0 {
                let exact = bound_fixed_share(5, 100, k, k as f64 / 99.0, 1.0).unwrap();
                assert!((exact - h).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sleeping_general_matches_closed_form_on_universe() {
        // universe form: unentered experts asleep, entrants start at (1/2, 1/2)
        let s = EntrySchedule::from_counts(vec![1, 1, 0, 1, 0]).unwrap();
        let pi = realize_priors(&PriorPreset::EntryTimeUniform, &s).unwrap();
        let total: f64 = pi.iter().sum();
        let prior: Vec<f64> = pi.iter().map(|p| p / total).collect();
        let awake: Vec<f64> = (0..3).map(|i| if s.entry_time(i) == Some(1) { 0.5 } else { 0.0 }).collect();
        let alpha = RateSequence::Inverse;
        let kernel = |i: usize, t: usize| {
            let tau = s.entry_time(i).unwrap();
            if t < tau {
                WakeSleepKernel::new(1.0, 0.0).unwrap()
            } else if t == tau {
                WakeSleepKernel::new(0.5, 0.5).unwrap()
            } else {
                WakeSleepKernel::new(alpha.at(t), alpha.at(t)).unwrap()
            }
        };
        let c = seq(&[0, 1, 1, 2, 0]);
        let general = bound_sleeping_general(&prior, &awake, kernel, &c, 1.0).unwrap();
        let closed = bound_sleeping(&pi, &s, &alpha, &alpha, &c, 1.0).unwrap();
        assert!(general <= closed + 1e-12, "{general} > {closed}");
    }
}
