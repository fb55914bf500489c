//! Dynamic programming over admissible comparators.
//!
//! For a penalty that decomposes over rounds (an initial cost, a cost per
//! non-shift round and a cost per shift that depends only on the target),
//! the minimum of `L_t(i^t) + penalty(i^t)/η` over comparators with exactly
//! `k` shifts is computed for every prefix `t` and every `k ≤ K`. With a
//! bound's penalty this is the worst-case slack `L_t − min(...)` check; with
//! zero penalty it is the best comparator loss.

use crate::error::{invalid, Result};
use crate::oracle::comparator::{ComparatorSequence, LossTable, ShiftKind};
use crate::prior::{partial_sums, RateSequence};
use crate::schedule::EntrySchedule;

/// Additive decomposition of a regret bound, in nats.
pub trait StepPenalty {
    fn initial(&self, i: usize) -> f64;
    /// Cost of keeping expert `i` from round `t−1` to `t`.
    fn stay(&self, t: usize, i: usize) -> f64;
    /// Cost of moving to expert `j` at round `t`.
    fn shift(&self, t: usize, j: usize, kind: ShiftKind) -> f64;
}

/// No penalty: the DP returns plain comparator losses.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPenalty;

impl StepPenalty for ZeroPenalty {
    fn initial(&self, _: usize) -> f64 {
        0.0
    }
    fn stay(&self, _: usize, _: usize) -> f64 {
        0.0
    }
    fn shift(&self, _: usize, _: usize, _: ShiftKind) -> f64 {
        0.0
    }
}

/// Fixed Share: `ln M` initially, `ln 1/(1−α)` per stay, `ln M + ln 1/α` per shift.
#[derive(Debug, Clone, Copy)]
pub struct FixedSharePenalty {
    pub m: usize,
    pub alpha: f64,
}

impl StepPenalty for FixedSharePenalty {
    fn initial(&self, _: usize) -> f64 {
        (self.m as f64).ln()
    }
    fn stay(&self, _: usize, _: usize) -> f64 {
        -(-self.alpha).ln_1p()
    }
    fn shift(&self, _: usize, _: usize, _: ShiftKind) -> f64 {
        (self.m as f64).ln() - self.alpha.ln()
    }
}

/// Decreasing Share: `ln M` initially, `ln 1/(1−α_t)` every round `t ≥ 2`,
/// plus `ln M + ln 1/α_t` at each shift.
#[derive(Debug, Clone)]
pub struct DecreasingSharePenalty {
    pub m: usize,
    pub alpha: RateSequence,
}

impl StepPenalty for DecreasingSharePenalty {
    fn initial(&self, _: usize) -> f64 {
        (self.m as f64).ln()
    }
    fn stay(&self, t: usize, _: usize) -> f64 {
        -(-self.alpha.at(t)).ln_1p()
    }
    fn shift(&self, t: usize, _: usize, _: ShiftKind) -> f64 {
        let a = self.alpha.at(t);
        (self.m as f64).ln() - a.ln() - (-a).ln_1p()
    }
}

/// Growing-set penalty with priors `π`: `ln(Π_{M_1}/π_i)` initially,
/// `ln(Π_{M_t}/Π_{M_{t−1}})` per stay and `ln(Π_{M_t}/π_j)` per shift. With
/// rates `α_t` it adds `ln 1/(1−α_t)` per stay and `ln 1/α_t` per incumbent shift.
#[derive(Debug, Clone)]
pub struct GrowingPenalty {
    priors: Vec<f64>,
    sums_by_round: Vec<f64>,
    alpha: Option<RateSequence>,
}

impl GrowingPenalty {
    pub fn new(priors: &[f64], schedule: &EntrySchedule, alpha: Option<RateSequence>) -> Result<Self> {
        if priors.len() < schedule.total_experts() {
            return Err(invalid("priors do not cover the schedule"));
        }
        let sums = partial_sums(priors);
        let sums_by_round = (0..=schedule.horizon()).map(|t| sums[schedule.total(t)]).collect();
        Ok(Self {
            priors: priors.to_vec(),
            sums_by_round,
            alpha,
        })
    }
}

impl StepPenalty for GrowingPenalty {
    fn initial(&self, i: usize) -> f64 {
        (self.sums_by_round[1] / self.priors[i]).ln()
    }
    fn stay(&self, t: usize, _: usize) -> f64 {
        let base = (self.sums_by_round[t] / self.sums_by_round[t - 1]).ln();
        base + self.alpha.as_ref().map_or(0.0, |a| -(-a.at(t)).ln_1p())
    }
    fn shift(&self, t: usize, j: usize, kind: ShiftKind) -> f64 {
        let base = (self.sums_by_round[t] / self.priors[j]).ln();
        match (&self.alpha, kind) {
            (Some(a), ShiftKind::Incumbent) => base - a.at(t).ln(),
            _ => base,
        }
    }
}

const NONE: usize = usize::MAX;

/// DP tables for every prefix and shift count.
#[derive(Debug, Clone)]
pub struct DpSolution {
    max_shifts: usize,
    /// `cost[t−1][k][i]`
    cost: Vec<Vec<Vec<f64>>>,
    /// Predecessor expert of `(t, k, i)`; equal to `i` for a stay.
    back: Vec<Vec<Vec<usize>>>,
}

/// Runs the DP over the first `losses.horizon()` rounds of `schedule`,
/// allowing at most `max_shifts` shifts (fresh ones only if `fresh_only`).
pub fn solve<P: StepPenalty + ?Sized>(
    schedule: &EntrySchedule,
    losses: &LossTable,
    penalty: &P,
    eta: f64,
    max_shifts: usize,
    fresh_only: bool,
) -> Result<DpSolution> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid(format!("eta must be positive, got {eta}")));
    }
    let horizon = losses.horizon();
    if horizon == 0 || horizon > schedule.horizon() {
        return Err(invalid("loss table does not fit the schedule"));
    }
    losses.check_schedule(&schedule.truncate(horizon)?)?;
    let kk = max_shifts + 1;
    let m1 = schedule.total(1);
    let mut first = vec![vec![f64::INFINITY; m1]; kk];
    for (i, c) in first[0].iter_mut().enumerate() {
        *c = losses.get(1, i) + penalty.initial(i) / eta;
    }
    let mut cost = vec![first];
    let mut back = vec![vec![vec![NONE; m1]; kk]];
    for t in 2..=horizon {
        let prev = &cost[t - 2];
        let m_prev = schedule.total(t - 1);
        let m_t = schedule.total(t);
        let mut cur = vec![vec![f64::INFINITY; m_t]; kk];
        let mut arg = vec![vec![NONE; m_t]; kk];
        for k in 0..kk {
            // two smallest entries of the previous level k−1
            let top2 = if k > 0 { top_two(&prev[k - 1]) } else { [(f64::INFINITY, NONE); 2] };
            for j in 0..m_t {
                let mut best = f64::INFINITY;
                let mut from = NONE;
                if j < m_prev && prev[k][j].is_finite() {
                    best = prev[k][j] + penalty.stay(t, j) / eta;
                    from = j;
                }
                let kind = if j < m_prev { ShiftKind::Incumbent } else { ShiftKind::Fresh };
                if k > 0 && !(fresh_only && kind == ShiftKind::Incumbent) {
                    let (c, i) = if top2[0].1 != j { top2[0] } else { top2[1] };
                    if i != NONE && c.is_finite() {
                        let v = c + penalty.shift(t, j, kind) / eta;
                        if v < best {
                            best = v;
                            from = i;
                        }
                    }
                }
                if from != NONE {
                    cur[k][j] = best + losses.get(t, j);
                    arg[k][j] = from;
                }
            }
        }
        cost.push(cur);
        back.push(arg);
    }
    Ok(DpSolution { max_shifts, cost, back })
}

fn top_two(v: &[f64]) -> [(f64, usize); 2] {
    let mut best = [(f64::INFINITY, NONE); 2];
    for (i, &c) in v.iter().enumerate() {
        if c < best[0].0 {
            best[1] = best[0];
            best[0] = (c, i);
        } else if c < best[1].0 {
            best[1] = (c, i);
        }
    }
    best
}

impl DpSolution {
    pub fn horizon(&self) -> usize {
        self.cost.len()
    }

    pub fn max_shifts(&self) -> usize {
        self.max_shifts
    }

    /// Minimum over comparators with exactly `k` shifts on rounds `1..=t`,
    /// with the final expert; `None` when no such comparator exists.
    pub fn best_exact(&self, t: usize, k: usize) -> Option<(f64, usize)> {
        let row = self.cost.get(t - 1)?.get(k)?;
        let mut best: Option<(f64, usize)> = None;
        for (i, &c) in row.iter().enumerate() {
            if c.is_finite() && best.is_none_or(|b| c < b.0) {
                best = Some((c, i));
            }
        }
        best
    }

    /// Minimum over comparators with at most `k` shifts on rounds `1..=t`.
    pub fn best_upto(&self, t: usize, k: usize) -> Option<(f64, usize, usize)> {
        (0..=k.min(self.max_shifts))
            .filter_map(|kk| self.best_exact(t, kk).map(|(c, i)| (c, kk, i)))
            .fold(None, |acc: Option<(f64, usize, usize)>, x| match acc {
                Some(a) if a.0 <= x.0 => Some(a),
                _ => Some(x),
            })
    }

    /// Reconstructs the minimizing comparator ending at `(t, k, i)`.
    pub fn path(&self, t: usize, k: usize, i: usize) -> Result<ComparatorSequence> {
        if !self.cost[t - 1][k][i].is_finite() {
            return Err(invalid("no comparator reaches this state"));
        }
        let mut out = vec![i; t];
        let (mut k, mut i) = (k, i);
        for s in (2..=t).rev() {
            let from = self.back[s - 1][k][i];
            if from != i {
                k -= 1;
            }
            i = from;
            out[s - 2] = i;
        }
        ComparatorSequence::from_indices(out)
    }
}
