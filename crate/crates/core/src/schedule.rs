//! The arrival process of experts.
//!
//! Rounds are 1-based (`t = 1..=T`), experts are 0-based in entry order, so
//! expert `i` is available at round `t` iff `i < total(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Per-round entrant counts `m_t` with cumulative totals `M_t` and entry times `τ_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct EntrySchedule {
    counts: Vec<usize>,
    totals: Vec<usize>,
    entry_times: Vec<usize>,
}

impl EntrySchedule {
    /// Builds a schedule from `m_1, …, m_T`; requires `T ≥ 1` and `m_1 ≥ 1`.
    pub fn from_counts(counts: Vec<usize>) -> Result<Self> {
        match counts.first() {
            None => return Err(invalid("entry schedule needs at least one round")),
            Some(0) => return Err(invalid("first round must admit at least one expert")),
            _ => {}
        }
        let mut totals = Vec::with_capacity(counts.len());
        let mut entry_times = Vec::new();
        let mut acc = 0usize;
        for (idx, &m) in counts.iter().enumerate() {
            acc = acc
                .checked_add(m)
                .ok_or_else(|| invalid("expert count overflows"))?;
            totals.push(acc);
            entry_times.extend(std::iter::repeat_n(idx + 1, m));
        }
        Ok(Self {
            counts,
            totals,
            entry_times,
        })
    }

    /// `M` experts present from the first round, horizon `T`.
    pub fn fixed(m: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon must be positive"));
        }
        let mut counts = vec![0; horizon];
        counts[0] = m;
        Self::from_counts(counts)
    }

    /// Rebuilds a schedule from non-decreasing entry times `τ_i` over `horizon` rounds.
    pub fn from_entry_times(entry_times: &[usize], horizon: usize) -> Result<Self> {
        let mut counts = vec![0; horizon];
        let mut prev = 1;
        for &tau in entry_times {
            if tau < prev || tau > horizon {
                return Err(invalid(format!("entry time {tau} out of order or past horizon")));
            }
            counts[tau - 1] += 1;
            prev = tau;
        }
        Self::from_counts(counts)
    }

    pub fn horizon(&self) -> usize {
        self.counts.len()
    }

    /// `m_t`; zero outside `1..=T`.
    pub fn entrants(&self, t: usize) -> usize {
        if t == 0 {
            0
        } else {
            self.counts.get(t - 1).copied().unwrap_or(0)
        }
    }

    /// `M_t`; `M_0 = 0` and `M_t = M_T` past the horizon.
    pub fn total(&self, t: usize) -> usize {
        if t == 0 {
            0
        } else {
            let idx = (t - 1).min(self.totals.len() - 1);
            self.totals[idx]
        }
    }

    pub fn total_experts(&self) -> usize {
        *self.totals.last().expect("non-empty")
    }

    /// Entry round `τ_i` of expert `i` (0-based index).
    pub fn entry_time(&self, i: usize) -> Option<usize> {
        self.entry_times.get(i).copied()
    }

    pub fn entry_times(&self) -> &[usize] {
        &self.entry_times
    }

    /// Range of expert indices entering at round `t`.
    pub fn entrant_range(&self, t: usize) -> std::ops::Range<usize> {
        self.total(t.saturating_sub(1))..self.total(t)
    }

    /// `s(t)`: number of rounds `t' ≤ t` with at least one entrant.
    pub fn active_rounds(&self, t: usize) -> usize {
        self.counts
            .iter()
            .take(t)
            .filter(|&&m| m > 0)
            .count()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// The schedule truncated to its first `horizon` rounds.
    pub fn truncate(&self, horizon: usize) -> Result<Self> {
        Self::from_counts(self.counts[..horizon.min(self.counts.len())].to_vec())
    }
}

impl TryFrom<Vec<usize>> for EntrySchedule {
    type Error = crate::Error;

    fn try_from(counts: Vec<usize>) -> Result<Self> {
        Self::from_counts(counts)
    }
}

impl From<EntrySchedule> for Vec<usize> {
    fn from(s: EntrySchedule) -> Self {
        s.counts
    }
}
