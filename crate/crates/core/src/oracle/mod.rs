//! Independent reference computations: comparator enumeration, brute-force
//! sequence aggregation, closed-form bounds and a shift-count DP.

pub mod bounds;
pub mod brute;
pub mod comparator;
pub mod dp;

pub use brute::{brute_force_sequence_aggregation, brute_force_specialists};
pub use comparator::{
    best_comparator_loss, enumerate_comparators, for_each_comparator, ComparatorClass, ComparatorSequence,
    LossTable, ShiftKind,
};
