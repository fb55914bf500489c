//! Anytime, parameter-free prediction with expert advice when the set of
//! experts grows over time.
//!
//! The crate provides the aggregation algorithms ([`GrowingHedge`],
//! [`GrowingMarkovHedge`], [`GrowingSleepingMarkovHedge`] and their fixed-set
//! counterparts), a brute-force [`oracle`] with regret-bound calculators, and
//! a seeded experiment [`harness`].

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod forecaster;
pub mod growing;
pub mod growing_markov;
pub mod harness;
pub mod hedge;
pub mod loss;
pub mod markov;
pub mod oracle;
pub mod prior;
pub mod schedule;
pub mod sleeping;

mod scaled;

pub use error::{Error, Result};
pub use forecaster::{play_round, Forecaster, GrowingForecaster, RoundResult};
pub use growing::GrowingHedge;
pub use growing_markov::{GrowingMarkovHedge, GrowingMarkovMode};
pub use hedge::Hedge;
pub use loss::{evaluate_loss, mix_predictions, Loss, LossKind, LossModel, Outcome, Prediction};
pub use prior::{make_prior, realize_priors, EntryInfo, PriorPreset, RateSequence};
pub use markov::{decreasing_share_kernel, fixed_share_kernel, DenseKernel, KernelSchedule, MarkovHedge, TransitionKernel};
pub use schedule::EntrySchedule;
pub use sleeping::{GrowingSleepingMarkovHedge, SleepingMarkovHedge, WakeSleepKernel};
