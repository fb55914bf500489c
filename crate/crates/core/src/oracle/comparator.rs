//! Comparator sequences and exhaustive enumeration of comparison classes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::schedule::EntrySchedule;

/// Default cap on the number of comparators an enumeration may visit.
pub const ENUMERATION_LIMIT: f64 = 1e6;

/// Whether a shift moves to an expert that entered at that very round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    Fresh,
    Incumbent,
}

/// A sequence of experts `i_1, …, i_T` (0-based expert indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComparatorSequence {
    indices: Vec<usize>,
}

impl ComparatorSequence {
    pub fn from_indices(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("comparator sequence is empty"));
        }
        Ok(Self { indices })
    }

    pub fn constant(expert: usize, horizon: usize) -> Self {
        Self {
            indices: vec![expert; horizon.max(1)],
        }
    }

    pub fn horizon(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `i_t` for a 1-based round `t`.
    pub fn at(&self, t: usize) -> usize {
        self.indices[t - 1]
    }

    /// Shift times `σ_1 < … < σ_k` (1-based rounds with `i_t ≠ i_{t−1}`).
    pub fn shifts(&self) -> Vec<usize> {
        (2..=self.indices.len())
            .filter(|&t| self.indices[t - 1] != self.indices[t - 2])
            .collect()
    }

    pub fn num_shifts(&self) -> usize {
        self.indices.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Segments as `(start round, expert)`; the first starts at round 1.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(1, self.indices[0])];
        out.extend(self.shifts().into_iter().map(|t| (t, self.indices[t - 1])));
        out
    }

    /// The distinct experts used, sorted.
    pub fn pool(&self) -> Vec<usize> {
        let mut p = self.indices.clone();
        p.sort_unstable();
        p.dedup();
        p
    }

    pub fn is_admissible(&self, schedule: &EntrySchedule) -> bool {
        self.indices
            .iter()
            .enumerate()
            .all(|(idx, &i)| i < schedule.total(idx + 1))
    }

    /// Each shift time with its kind (`σ⁰` fresh, `σ¹` incumbent).
    pub fn classify(&self, schedule: &EntrySchedule) -> Vec<(usize, ShiftKind)> {
        self.shifts()
            .into_iter()
            .map(|t| {
                let kind = if self.indices[t - 1] >= schedule.total(t - 1) {
                    ShiftKind::Fresh
                } else {
                    ShiftKind::Incumbent
                };
                (t, kind)
            })
            .collect()
    }

    /// Admissible and switching only to fresh experts.
    pub fn is_fresh(&self, schedule: &EntrySchedule) -> bool {
        self.is_admissible(schedule)
            && self
                .classify(schedule)
                .iter()
                .all(|(_, k)| *k == ShiftKind::Fresh)
    }

    /// `L_T(i^T) = Σ_t ℓ_{i_t,t}`, summed in round order.
    pub fn loss(&self, table: &LossTable) -> f64 {
        self.indices
            .iter()
            .enumerate()
            .map(|(idx, &i)| table.get(idx + 1, i))
            .sum()
    }
}

/// Per-round expert losses for the experts entered at that round.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    rows: Vec<Vec<f64>>,
}

impl LossTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    /// `ℓ_{i,t}` for a 1-based round.
    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.rows[t - 1][i]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t - 1]
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row);
    }

    pub fn check_schedule(&self, schedule: &EntrySchedule) -> Result<()> {
        for (idx, row) in self.rows.iter().enumerate() {
            if row.len() != schedule.total(idx + 1) {
                return Err(invalid(format!(
                    "round {}: {} losses for {} entered experts",
                    idx + 1,
                    row.len(),
                    schedule.total(idx + 1)
                )));
            }
        }
        Ok(())
    }
}

/// A comparison class of expert sequences over a given schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComparatorClass {
    /// Constant sequences available from round 1.
    Constant,
    /// Each expert over its own activity period `[τ_i, T]` (not a sequence class).
    SinceEntry,
    /// Admissible sequences switching only to fresh experts, at most `max_shifts` shifts.
    Fresh { max_shifts: usize },
    /// Admissible sequences with at most `max_shifts` shifts.
    Admissible { max_shifts: usize },
    /// Admissible sequences using at most `pool` distinct experts and `max_shifts` shifts.
    Sparse { pool: usize, max_shifts: usize },
}

impl ComparatorClass {
    pub fn name(&self) -> String {
        match self {
            ComparatorClass::Constant => "constant".into(),
            ComparatorClass::SinceEntry => "since_entry".into(),
            ComparatorClass::Fresh { max_shifts } => format!("fresh(k<={max_shifts})"),
            ComparatorClass::Admissible { max_shifts } => format!("admissible(k<={max_shifts})"),
            ComparatorClass::Sparse { pool, max_shifts } => format!("sparse(n<={pool},k<={max_shifts})"),
        }
    }

    fn limits(&self) -> Option<(usize, usize, bool)> {
        match *self {
            ComparatorClass::Constant => Some((0, 1, false)),
            ComparatorClass::SinceEntry => None,
            ComparatorClass::Fresh { max_shifts } => Some((max_shifts, usize::MAX, true)),
            ComparatorClass::Admissible { max_shifts } => Some((max_shifts, usize::MAX, false)),
            ComparatorClass::Sparse { pool, max_shifts } => Some((max_shifts, pool, false)),
        }
    }

    pub fn max_shifts(&self) -> usize {
        self.limits().map(|l| l.0).unwrap_or(0)
    }
}

/// The size estimate `M_T^{k+1} · C(T−1, k)` used to guard enumerations.
pub fn enumeration_estimate(total_experts: usize, horizon: usize, max_shifts: usize) -> f64 {
    let k = max_shifts.min(horizon.saturating_sub(1));
    let mut binom = 1.0;
    for j in 0..k {
        binom *= (horizon - 1 - j) as f64 / (j + 1) as f64;
    }
    (total_experts as f64).powi(k as i32 + 1) * binom
}

/// Checks the guard for enumerating `class` over the first `horizon` rounds.
pub fn check_guard(class: &ComparatorClass, schedule: &EntrySchedule, horizon: usize, limit: f64) -> Result<()> {
    let k = class.max_shifts();
    let estimate = enumeration_estimate(schedule.total(horizon), horizon, k);
    if estimate > limit {
        return Err(Error::GuardExceeded { estimate, limit });
    }
    Ok(())
}

/// Visits every comparator of the class over the first `horizon` rounds, in
/// lexicographic order. Refuses (without visiting anything) when the guard is exceeded.
pub fn for_each_comparator<F: FnMut(&[usize])>(
    class: &ComparatorClass,
    schedule: &EntrySchedule,
    horizon: usize,
    mut visit: F,
) -> Result<()> {
    let (max_shifts, max_pool, fresh_only) = class
        .limits()
        .ok_or_else(|| invalid("the since-entry class is not a class of sequences"))?;
    if horizon == 0 || horizon > schedule.horizon() {
        return Err(invalid(format!("horizon {horizon} outside 1..={}", schedule.horizon())));
    }
    check_guard(class, schedule, horizon, ENUMERATION_LIMIT)?;
    let ctx = Dfs {
        schedule,
        horizon,
        max_shifts,
        max_pool,
        fresh_only,
    };
    let mut path = Vec::with_capacity(horizon);
    let mut pool = Vec::new();
    for i in 0..schedule.total(1) {
        path.push(i);
        pool.push(i);
        ctx.run(&mut path, &mut pool, 0, &mut visit);
        pool.pop();
        path.pop();
    }
    Ok(())
}

struct Dfs<'a> {
    schedule: &'a EntrySchedule,
    horizon: usize,
    max_shifts: usize,
    max_pool: usize,
    fresh_only: bool,
}

impl Dfs<'_> {
    fn run<F: FnMut(&[usize])>(&self, path: &mut Vec<usize>, pool: &mut Vec<usize>, shifts: usize, visit: &mut F) {
        let t = path.len() + 1;
        if t > self.horizon {
            visit(path);
            return;
        }
        let current = *path.last().expect("non-empty path");
        let entered_before = self.schedule.total(t - 1);
        for j in 0..self.schedule.total(t) {
            if j == current {
                path.push(j);
                self.run(path, pool, shifts, visit);
                path.pop();
                continue;
            }
            if shifts == self.max_shifts || (self.fresh_only && j < entered_before) {
                continue;
            }
            let new_member = !pool.contains(&j);
            if new_member && pool.len() == self.max_pool {
                continue;
            }
            if new_member {
                pool.push(j);
            }
            path.push(j);
            self.run(path, pool, shifts + 1, visit);
            path.pop();
            if new_member {
                pool.pop();
            }
        }
    }
}

pub fn enumerate_comparators(
    class: &ComparatorClass,
    schedule: &EntrySchedule,
    horizon: usize,
) -> Result<Vec<ComparatorSequence>> {
    let mut out = Vec::new();
    for_each_comparator(class, schedule, horizon, |p| {
        out.push(ComparatorSequence { indices: p.to_vec() })
    })?;
    Ok(out)
}

/// The comparator of smallest cumulative loss; ties go to the lexicographically first.
pub fn best_comparator_loss(
    class: &ComparatorClass,
    schedule: &EntrySchedule,
    losses: &LossTable,
) -> Result<(ComparatorSequence, f64)> {
    let horizon = losses.horizon();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_comparator(class, schedule, horizon, |p| {
        let l: f64 = p.iter().enumerate().map(|(idx, &i)| losses.get(idx + 1, i)).sum();
        if best.as_ref().is_none_or(|(_, b)| l < *b) {
            best = Some((p.to_vec(), l));
        }
    })?;
    best.map(|(p, l)| (ComparatorSequence { indices: p }, l))
        .ok_or(Error::EmptyClass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn classification() {
        let s = EntrySchedule::from_counts(vec![2, 1, 0, 2]).unwrap();
        let c = ComparatorSequence::from_indices(vec![1, 2, 0, 4]).unwrap();
        assert!(c.is_admissible(&s));
        assert_eq!(c.shifts(), vec![2, 3, 4]);
        assert_eq!(
            c.classify(&s),
            vec![(2, ShiftKind::Fresh), (3, ShiftKind::Incumbent), (4, ShiftKind::Fresh)]
        );
        assert!(!c.is_fresh(&s));
        assert_eq!(c.pool(), vec![0, 1, 2, 4]);
        assert!(!ComparatorSequence::from_indices(vec![2, 2]).unwrap().is_admissible(&s));
    }

    #[test]
    fn enumeration_examples() {
        let s = EntrySchedule::from_counts(vec![2, 1]).unwrap();
        let all = enumerate_comparators(&ComparatorClass::Admissible { max_shifts: 1 }, &s, 2).unwrap();
        assert_eq!(all.len(), 6);
        let fresh = enumerate_comparators(&ComparatorClass::Fresh { max_shifts: 0 }, &s, 2).unwrap();
        assert_eq!(fresh.len(), 2);
        let sparse = enumerate_comparators(&ComparatorClass::Sparse { pool: 1, max_shifts: 3 }, &s, 2).unwrap();
        let constant = enumerate_comparators(&ComparatorClass::Constant, &s, 2).unwrap();
        assert_eq!(sparse, constant);
    }

    #[test]
    fn enumeration_is_exhaustive_and_sorted() {
        let s = EntrySchedule::from_counts(vec![1, 1, 0, 2, 0]).unwrap();
        for class in [
            ComparatorClass::Fresh { max_shifts: 2 },
            ComparatorClass::Admissible { max_shifts: 2 },
            ComparatorClass::Sparse { pool: 2, max_shifts: 3 },
        ] {
            let got = enumerate_comparators(&class, &s, 5).unwrap();
            let mut expected = Vec::new();
            // brute force over the full product space
            let mut idx = [0usize; 5];
            loop {
                let c = ComparatorSequence::from_indices(idx.to_vec()).unwrap();
                let keep = c.is_admissible(&s)
                    && match class {
                        ComparatorClass::Fresh { max_shifts } => c.is_fresh(&s) && c.num_shifts() <= max_shifts,
                        ComparatorClass::Admissible { max_shifts } => c.num_shifts() <= max_shifts,
                        ComparatorClass::Sparse { pool, max_shifts } => {
                            c.num_shifts() <= max_shifts && c.pool().len() <= pool
                        }
                        _ => unreachable!(),
                    };
                if keep {
                    expected.push(c);
                }
                let mut pos = 4;
                loop {
                    idx[pos] += 1;
                    if idx[pos] < 4 {
                        break;
                    }
                    idx[pos] = 0;
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                }
                if idx.iter().all(|&x| x == 0) {
                    break;
                }
            }
            assert_eq!(got, expected, "{class:?}");
            assert_eq!(got.iter().collect::<HashSet<_>>().len(), got.len());
        }
    }

    #[test]
    fn guard_refuses() {
        let s = EntrySchedule::fixed(10, 40).unwrap();
        let r = enumerate_comparators(&ComparatorClass::Admissible { max_shifts: 5 }, &s, 40);
        assert!(matches!(r, Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn best_comparator_examples() {
        let s = EntrySchedule::fixed(1, 3).unwrap();
        let t = LossTable::new(vec![vec![0.5]; 3]);
        let (c, l) = best_comparator_loss(&ComparatorClass::Constant, &s, &t).unwrap();
        assert_eq!(c.indices(), &[0, 0, 0]);
        assert_eq!(l, 1.5);

        let s = EntrySchedule::fixed(3, 3).unwrap();
        let t = LossTable::new(vec![vec![1.0; 3]; 3]);
        let (c, _) = best_comparator_loss(&ComparatorClass::Admissible { max_shifts: 2 }, &s, &t).unwrap();
        assert_eq!(c.indices(), &[0, 0, 0]);

        let t = LossTable::new(vec![vec![0.3, 0.1, 0.9], vec![0.8, 0.2, 0.0], vec![0.0, 0.6, 0.7]]);
        let class = ComparatorClass::Admissible { max_shifts: 2 };
        let (_, best) = best_comparator_loss(&class, &s, &t).unwrap();
        for c in enumerate_comparators(&class, &s, 3).unwrap() {
            assert!(best <= c.loss(&t));
        }
        assert!((best - 0.1).abs() < 1e-15);
    }
}
