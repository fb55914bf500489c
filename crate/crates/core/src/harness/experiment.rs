//! Running algorithms on scenarios and measuring regret against comparator classes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forecaster::{Forecaster, GrowingForecaster};
use crate::harness::scenario::Scenario;
use crate::loss::{evaluate_loss, Loss, LossKind, LossModel, Prediction};
use crate::markov::MarkovHedge;
use crate::oracle::bounds;
use crate::oracle::comparator::{
    check_guard, for_each_comparator, ComparatorClass, ComparatorSequence, LossTable, ENUMERATION_LIMIT,
};
use crate::oracle::dp::{self, DecreasingSharePenalty, FixedSharePenalty, GrowingPenalty, StepPenalty, ZeroPenalty};
use crate::prior::{partial_sums, realize_priors, PriorPreset, RateSequence};
use crate::schedule::EntrySchedule;
use crate::sleeping::WakeSleepKernel;

/// Tolerance used when deciding whether a bound is violated.
pub const SLACK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    Hedge,
    GrowingHedge,
    FixedShare,
    DecreasingShare,
    FreshMarkovHedge,
    GrowingMarkovHedge,
    SleepingMarkovHedge,
    GrowingSleepingMarkovHedge,
}

impl AlgorithmName {
    pub const ALL: [AlgorithmName; 8] = [
        AlgorithmName::Hedge,
        AlgorithmName::GrowingHedge,
        AlgorithmName::FixedShare,
        AlgorithmName::DecreasingShare,
        AlgorithmName::FreshMarkovHedge,
        AlgorithmName::GrowingMarkovHedge,
        AlgorithmName::SleepingMarkovHedge,
        AlgorithmName::GrowingSleepingMarkovHedge,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmName::Hedge => "hedge",
            AlgorithmName::GrowingHedge => "growing_hedge",
            AlgorithmName::FixedShare => "fixed_share",
            AlgorithmName::DecreasingShare => "decreasing_share",
            AlgorithmName::FreshMarkovHedge => "fresh_markov_hedge",
            AlgorithmName::GrowingMarkovHedge => "growing_markov_hedge",
            AlgorithmName::SleepingMarkovHedge => "sleeping_markov_hedge",
            AlgorithmName::GrowingSleepingMarkovHedge => "growing_sleeping_markov_hedge",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            AlgorithmName::Hedge => "exponential weights on a fixed expert set; regret ln(Σπ/π_i) against constant experts",
            AlgorithmName::GrowingHedge => "specialist weights for a growing set; regret ln(Π_{M_T}/π_i) over [τ_i, T]",
            AlgorithmName::FixedShare => "Markov prior with constant switching rate α on a fixed set",
            AlgorithmName::DecreasingShare => "Markov prior with switching rates α_t (default 1/t) on a fixed set",
            AlgorithmName::FreshMarkovHedge => "growing set, comparator may switch to newly entered experts",
            AlgorithmName::GrowingMarkovHedge => "growing set, comparator may switch to any entered expert; rates α_t",
            AlgorithmName::SleepingMarkovHedge => "sleeping experts with wake/sleep rates α_t, β_t on a fixed set",
            AlgorithmName::GrowingSleepingMarkovHedge => {
                "growing set, comparator switches within a small pool; rates α_t, β_t"
            }
        }
    }

    pub fn is_growing(&self) -> bool {
        matches!(
            self,
            AlgorithmName::GrowingHedge
                | AlgorithmName::FreshMarkovHedge
                | AlgorithmName::GrowingMarkovHedge
                | AlgorithmName::GrowingSleepingMarkovHedge
        )
    }
}

impl std::fmt::Display for AlgorithmName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_prior() -> PriorPreset {
    PriorPreset::Uniform
}

fn is_uniform(p: &PriorPreset) -> bool {
    *p == PriorPreset::Uniform
}

/// An algorithm with its parameters.
///
/// `alpha` is the switching rate (Fixed/Decreasing Share, GrowingMarkovHedge)
/// or the fall-asleep rate (sleeping algorithms); `beta` is the wake-up rate.
/// `eta` overrides the loss model's canonical learning rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: AlgorithmName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "default_prior", skip_serializing_if = "is_uniform")]
    pub prior: PriorPreset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<RateSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<RateSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub awake_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl AlgorithmSpec {
    pub fn new(name: AlgorithmName) -> Self {
        Self {
            name,
            label: None,
            prior: PriorPreset::Uniform,
            alpha: None,
            beta: None,
            awake_init: None,
            eta: None,
        }
    }

    pub fn with_prior(mut self, prior: PriorPreset) -> Self {
        self.prior = prior;
        self
    }

    pub fn with_alpha(mut self, alpha: RateSequence) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_beta(mut self, beta: RateSequence) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.name.to_string())
    }

    fn alpha_or_inverse(&self) -> RateSequence {
        self.alpha.clone().unwrap_or(RateSequence::Inverse)
    }

    fn beta_or_inverse(&self) -> RateSequence {
        self.beta.clone().unwrap_or(RateSequence::Inverse)
    }

    /// Checks the parameters against each other and against the schedule.
    pub fn validate(&self, schedule: &EntrySchedule) -> Result<()> {
        use AlgorithmName::*;
        let name = self.name;
        let reject = |field: &str| invalid(format!("`{field}` is not a parameter of {name}"));
        let uses_alpha = matches!(
            name,
            FixedShare | DecreasingShare | GrowingMarkovHedge | SleepingMarkovHedge | GrowingSleepingMarkovHedge
        );
        let uses_beta = matches!(name, SleepingMarkovHedge | GrowingSleepingMarkovHedge);
        if self.alpha.is_some() && !uses_alpha {
            return Err(reject("alpha"));
        }
        if self.beta.is_some() && !uses_beta {
            return Err(reject("beta"));
        }
        if self.awake_init.is_some() && name != SleepingMarkovHedge {
            return Err(reject("awake_init"));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(invalid(format!("eta override must be positive, got {eta}")));
            }
        }
        if let Some(a) = self.awake_init {
            if !(0.0..=1.0).contains(&a) {
                return Err(invalid(format!("awake_init {a} outside [0, 1]")));
            }
        }
        if !name.is_growing() && schedule.total(1) != schedule.total_experts() {
            return Err(invalid(format!("{name} needs every expert to enter at round 1")));
        }
        if matches!(name, FixedShare | DecreasingShare) && !is_uniform(&self.prior) {
            return Err(invalid(format!("{name} uses a uniform initial distribution; drop `prior`")));
        }
        let horizon = schedule.horizon().max(2) + 1;
        match name {
            FixedShare => match &self.alpha {
                Some(RateSequence::Constant(a)) if *a > 0.0 && *a < 1.0 => {}
                Some(RateSequence::Constant(a)) => return Err(invalid(format!("alpha {a} outside (0, 1)"))),
                Some(_) => return Err(invalid("fixed_share needs a constant alpha, e.g. {constant = 0.05}")),
                None => return Err(invalid("fixed_share needs `alpha`")),
            },
            DecreasingShare | GrowingMarkovHedge => self.alpha_or_inverse().validate(2, horizon, true)?,
            SleepingMarkovHedge | GrowingSleepingMarkovHedge => {
                self.alpha_or_inverse().validate(2, horizon, true)?;
                self.beta_or_inverse().validate(2, horizon, true)?;
            }
            _ => {}
        }
        realize_priors(&self.prior, schedule)?;
        Ok(())
    }
}

enum Learner {
    Fixed(Box<dyn Forecaster>),
    Growing(Box<dyn GrowingForecaster>),
}

impl Learner {
    fn forecaster(&mut self) -> &mut dyn Forecaster {
        match self {
            Learner::Fixed(f) => f.as_mut(),
            Learner::Growing(f) => f.as_mut(),
        }
    }
}

fn build_learner(spec: &AlgorithmSpec, schedule: &EntrySchedule, priors: &[f64], eta: f64) -> Result<Learner> {
    use AlgorithmName::*;
    let m = schedule.total_experts();
    Ok(match spec.name {
        Hedge => Learner::Fixed(Box::new(crate::hedge::Hedge::new(eta, priors)?)),
        GrowingHedge => Learner::Growing(Box::new(crate::growing::GrowingHedge::new(eta)?)),
        FixedShare => {
            let a = match spec.alpha {
                Some(RateSequence::Constant(a)) => a,
                _ => return Err(invalid("fixed_share needs a constant alpha")),
            };
            Learner::Fixed(Box::new(MarkovHedge::fixed_share(eta, m, a)?))
        }
        DecreasingShare => Learner::Fixed(Box::new(MarkovHedge::decreasing_share(eta, m, spec.alpha_or_inverse())?)),
        FreshMarkovHedge => Learner::Growing(Box::new(crate::growing_markov::GrowingMarkovHedge::fresh(eta)?)),
        GrowingMarkovHedge => Learner::Growing(Box::new(crate::growing_markov::GrowingMarkovHedge::new(
            eta,
            spec.alpha_or_inverse(),
        )?)),
        SleepingMarkovHedge => {
            let total: f64 = priors.iter().sum();
            let prior: Vec<f64> = priors.iter().map(|p| p / total).collect();
            let awake = vec![spec.awake_init.unwrap_or(0.5); m];
            Learner::Fixed(Box::new(
                crate::sleeping::SleepingMarkovHedge::new(eta, &prior, &awake)?
                    .with_rates(spec.alpha_or_inverse(), spec.beta_or_inverse()),
            ))
        }
        GrowingSleepingMarkovHedge => Learner::Growing(Box::new(
            crate::sleeping::GrowingSleepingMarkovHedge::with_rates(eta, spec.alpha_or_inverse(), spec.beta_or_inverse())?,
        )),
    })
}

/// What happened when an algorithm was run on a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub predictions: Vec<Prediction>,
    pub learner_losses: Vec<f64>,
    /// `L_t` for `t = 1..=T`.
    pub cumulative: Vec<f64>,
    pub op_counts: Vec<u64>,
    pub loss_cap_triggered: bool,
    pub eta: f64,
    pub eta_overridden: bool,
}

fn effective_model(scenario: &Scenario, spec: &AlgorithmSpec) -> Result<LossModel> {
    match spec.eta {
        Some(eta) => scenario.loss_model().with_eta(eta),
        None => Ok(*scenario.loss_model()),
    }
}

/// Drives admit → predict → score → update for every round.
pub fn run_algorithm(scenario: &Scenario, spec: &AlgorithmSpec) -> Result<Trace> {
    let schedule = scenario.schedule();
    spec.validate(schedule)?;
    let model = effective_model(scenario, spec)?;
    let priors = realize_priors(&spec.prior, schedule)?;
    let mut learner = build_learner(spec, schedule, &priors, model.eta())?;
    let horizon = scenario.horizon();
    let mut trace = Trace {
        predictions: Vec::with_capacity(horizon),
        learner_losses: Vec::with_capacity(horizon),
        cumulative: Vec::with_capacity(horizon),
        op_counts: Vec::with_capacity(horizon),
        loss_cap_triggered: false,
        eta: model.eta(),
        eta_overridden: model.eta_overridden(),
    };
    let mut cum = 0.0;
    for t in 1..=horizon {
        if let Learner::Growing(g) = &mut learner {
            g.admit(&priors[schedule.entrant_range(t)])?;
        }
        let f = learner.forecaster();
        let xs: &[Prediction] = if spec.name.is_growing() {
            scenario.predictions(t)
        } else {
            &scenario.predictions(t)[..schedule.total_experts()]
        };
        let x = f.predict(xs)?;
        let y = scenario.outcome(t);
        let lt = evaluate_loss(&model, &x, y)?;
        let losses = scenario.expert_losses(t)?;
        trace.loss_cap_triggered |= model.is_clipped(lt) || losses.iter().any(|&l| model.is_clipped(l));
        f.update(&losses, lt)?;
        cum += lt;
        trace.predictions.push(x);
        trace.learner_losses.push(lt);
        trace.cumulative.push(cum);
        trace.op_counts.push(f.op_count());
    }
    Ok(trace)
}

/// The regret bound matched to an (algorithm, class) pair.
#[derive(Debug, Clone)]
enum BoundSpec {
    Hedge { priors: Vec<f64> },
    GrowingHedge { priors: Vec<f64> },
    Fresh { priors: Vec<f64> },
    GrowingMarkov { priors: Vec<f64>, alpha: RateSequence },
    FixedShare { m: usize, alpha: f64 },
    DecreasingShare { m: usize, alpha: RateSequence },
    Sleeping {
        prior: Vec<f64>,
        awake_init: f64,
        alpha: RateSequence,
        beta: RateSequence,
    },
    GrowingSleeping {
        priors: Vec<f64>,
        alpha: RateSequence,
        beta: RateSequence,
    },
}

impl BoundSpec {
    fn select(spec: &AlgorithmSpec, class: &ComparatorClass, model: &LossModel, priors: &[f64], m: usize) -> Option<Self> {
        use AlgorithmName as A;
        use ComparatorClass as C;
        let priors = priors.to_vec();
        let log_unit = matches!(model.kind(), LossKind::Log { .. }) && model.eta() == 1.0;
        match (spec.name, class) {
            (A::Hedge, C::Constant | C::SinceEntry) => Some(BoundSpec::Hedge { priors }),
            (A::GrowingHedge, C::Constant | C::SinceEntry) => Some(BoundSpec::GrowingHedge { priors }),
            // GrowingHedge and FreshMarkovHedge coincide only under log loss with η = 1
            (A::GrowingHedge, C::Fresh { .. }) if log_unit => Some(BoundSpec::Fresh { priors }),
            (A::FreshMarkovHedge, C::Constant | C::Fresh { .. }) => Some(BoundSpec::Fresh { priors }),
            (A::GrowingMarkovHedge, C::Constant | C::Fresh { .. } | C::Admissible { .. }) => {
                Some(BoundSpec::GrowingMarkov {
                    priors,
                    alpha: spec.alpha_or_inverse(),
                })
            }
            (A::FixedShare, C::Constant | C::Fresh { .. } | C::Admissible { .. }) => match spec.alpha {
                Some(RateSequence::Constant(alpha)) => Some(BoundSpec::FixedShare { m, alpha }),
                _ => None,
            },
            (A::DecreasingShare, C::Constant | C::Fresh { .. } | C::Admissible { .. }) => {
                Some(BoundSpec::DecreasingShare {
                    m,
                    alpha: spec.alpha_or_inverse(),
                })
            }
            (A::SleepingMarkovHedge, C::Constant | C::Fresh { .. } | C::Admissible { .. } | C::Sparse { .. }) => {
                let total: f64 = priors.iter().sum();
                Some(BoundSpec::Sleeping {
                    prior: priors.iter().map(|p| p / total).collect(),
                    awake_init: spec.awake_init.unwrap_or(0.5),
                    alpha: spec.alpha_or_inverse(),
                    beta: spec.beta_or_inverse(),
                })
            }
            (
                A::GrowingSleepingMarkovHedge,
                C::Constant | C::Fresh { .. } | C::Admissible { .. } | C::Sparse { .. },
            ) => Some(BoundSpec::GrowingSleeping {
                priors,
                alpha: spec.alpha_or_inverse(),
                beta: spec.beta_or_inverse(),
            }),
            _ => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            BoundSpec::Hedge { .. } => "hedge_prior",
            BoundSpec::GrowingHedge { .. } => "growing_hedge_prior",
            BoundSpec::Fresh { .. } => "fresh_sequences",
            BoundSpec::GrowingMarkov { .. } => "admissible_sequences",
            BoundSpec::FixedShare { .. } => "fixed_share",
            BoundSpec::DecreasingShare { .. } => "decreasing_share",
            BoundSpec::Sleeping { .. } => "sleeping_markov_prior",
            BoundSpec::GrowingSleeping { .. } => "sparse_sequences",
        }
    }

    fn value(&self, schedule: &EntrySchedule, c: &ComparatorSequence, eta: f64) -> Result<f64> {
        match self {
            BoundSpec::Hedge { priors } => bounds::bound_hedge(priors, c.at(1), eta),
            BoundSpec::GrowingHedge { priors } => {
                bounds::bound_growing_hedge(priors, schedule, c.at(1), c.horizon(), eta)
            }
            BoundSpec::Fresh { priors } => bounds::bound_fresh(priors, schedule, c, eta),
            BoundSpec::GrowingMarkov { priors, alpha } => bounds::bound_growing_markov(priors, schedule, alpha, c, eta),
            BoundSpec::FixedShare { m, alpha } => bounds::bound_fixed_share(*m, c.horizon(), c.num_shifts(), *alpha, eta),
            BoundSpec::DecreasingShare { m, alpha } => bounds::bound_decreasing_share_general(*m, alpha, c, eta),
            BoundSpec::Sleeping {
                prior,
                awake_init,
                alpha,
                beta,
            } => {
                let awake = vec![*awake_init; prior.len()];
                bounds::bound_sleeping_general(
                    prior,
                    &awake,
                    |_, t| WakeSleepKernel {
                        fall_asleep: alpha.at(t),
                        wake_up: beta.at(t),
                    },
                    c,
                    eta,
                )
            }
            BoundSpec::GrowingSleeping { priors, alpha, beta } => {
                bounds::bound_sleeping(priors, schedule, alpha, beta, c, eta)
            }
        }
    }

    /// Bound for one expert over its activity period `[τ_i, t]`.
    fn since_entry(&self, schedule: &EntrySchedule, i: usize, t: usize, eta: f64) -> Option<f64> {
        match self {
            BoundSpec::GrowingHedge { priors } => bounds::bound_growing_hedge(priors, schedule, i, t, eta).ok(),
            BoundSpec::Hedge { priors } => bounds::bound_hedge(priors, i, eta).ok(),
            _ => None,
        }
    }

    fn penalty(&self, schedule: &EntrySchedule) -> Option<(Box<dyn StepPenalty>, bool)> {
        match self {
            BoundSpec::Fresh { priors } => Some((Box::new(GrowingPenalty::new(priors, schedule, None).ok()?), true)),
            BoundSpec::GrowingMarkov { priors, alpha } => Some((
                Box::new(GrowingPenalty::new(priors, schedule, Some(alpha.clone())).ok()?),
                false,
            )),
            BoundSpec::FixedShare { m, alpha } => Some((Box::new(FixedSharePenalty { m: *m, alpha: *alpha }), false)),
            BoundSpec::DecreasingShare { m, alpha } => Some((
                Box::new(DecreasingSharePenalty {
                    m: *m,
                    alpha: alpha.clone(),
                }),
                false,
            )),
            _ => None,
        }
    }
}

/// How a class was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Every comparator (or every expert, for the since-entry class) was visited.
    Exhaustive,
    /// Best comparator and worst slack found by dynamic programming over shift counts.
    Dp,
    /// Enumeration refused by the guard; regret not measured.
    BoundOnly,
}

/// Per-round row against a class's best comparator so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: usize,
    pub loss: f64,
    pub cum_loss: f64,
    pub best_comp_loss: Option<f64>,
    pub regret: Option<f64>,
    pub bound: Option<f64>,
    pub slack: Option<f64>,
    pub expert_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: ComparatorClass,
    pub mode: EvalMode,
    pub bound_name: Option<String>,
    /// The best comparator at `T` (expert indices; a single index for since-entry).
    pub best_comparator: Option<Vec<usize>>,
    pub best_loss: Option<f64>,
    pub regret: Option<f64>,
    pub bound: Option<f64>,
    pub slack: Option<f64>,
    /// Smallest `bound − regret` over every comparator at `T`.
    pub worst_slack: Option<f64>,
    /// Smallest `bound − regret` over every comparator and every prefix, when measured.
    pub worst_prefix_slack: Option<f64>,
    pub comparators_checked: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub horizon: usize,
    pub total_experts: usize,
    pub total_loss: f64,
    pub eta: f64,
    pub op_count: u64,
    pub classes: Vec<ClassSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFlags {
    pub loss_cap_triggered: bool,
    pub eta_overridden: bool,
    pub bound_only: bool,
}

/// Regret measured for one (scenario, algorithm) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub scenario: String,
    pub algorithm: String,
    /// Rows against the first requested class.
    pub per_round: Vec<RoundRow>,
    pub summary: ReportSummary,
    pub flags: ReportFlags,
}

impl RegretReport {
    /// Smallest slack observed over every class, if any class had a bound.
    pub fn worst_slack(&self) -> Option<f64> {
        self.summary
            .classes
            .iter()
            .filter_map(|c| match (c.worst_slack, c.worst_prefix_slack) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            })
            .reduce(f64::min)
    }
}

struct ClassOutcome {
    summary: ClassSummary,
    /// `(best loss, bound of that comparator)` per prefix.
    rows: Vec<(Option<f64>, Option<f64>)>,
}

struct Ctx<'a> {
    schedule: &'a EntrySchedule,
    table: &'a LossTable,
    cumulative: &'a [f64],
    eta: f64,
}

fn since_entry(ctx: &Ctx, bound: Option<&BoundSpec>) -> ClassOutcome {
    let horizon = ctx.table.horizon();
    let m = ctx.schedule.total(horizon);
    let mut comp = vec![0.0; m];
    let mut rows = Vec::with_capacity(horizon);
    let mut worst_prefix: Option<f64> = None;
    let mut best_final = (f64::INFINITY, 0usize);
    for t in 1..=horizon {
        let prev = if t >= 2 { ctx.cumulative[t - 2] } else { 0.0 };
        for c in &mut comp[ctx.schedule.total(t - 1)..ctx.schedule.total(t)] {
            *c = prev;
        }
        let mut best = (f64::INFINITY, 0usize);
        for (i, c) in comp[..ctx.schedule.total(t)].iter_mut().enumerate() {
            *c += ctx.table.get(t, i);
            if *c < best.0 {
                best = (*c, i);
            }
            if let Some(b) = bound.and_then(|b| b.since_entry(ctx.schedule, i, t, ctx.eta)) {
                let slack = b - (ctx.cumulative[t - 1] - *c);
                worst_prefix = Some(worst_prefix.map_or(slack, |w: f64| w.min(slack)));
            }
        }
        let b = bound.and_then(|b| b.since_entry(ctx.schedule, best.1, t, ctx.eta));
        rows.push((Some(best.0), b));
        best_final = best;
    }
    let lt = ctx.cumulative[horizon - 1];
    let mut worst: Option<f64> = None;
    for (i, &c) in comp.iter().enumerate() {
        if let Some(b) = bound.and_then(|b| b.since_entry(ctx.schedule, i, horizon, ctx.eta)) {
            let s = b - (lt - c);
            worst = Some(worst.map_or(s, |w: f64| w.min(s)));
        }
    }
    let (best_loss, best_bound) = rows[horizon - 1];
    let regret = best_loss.map(|b| lt - b);
    ClassOutcome {
        summary: ClassSummary {
            class: ComparatorClass::SinceEntry,
            mode: EvalMode::Exhaustive,
            bound_name: bound.map(|b| b.name().to_string()),
            best_comparator: Some(vec![best_final.1]),
            best_loss,
            regret,
            bound: best_bound,
            slack: best_bound.zip(regret).map(|(b, r)| b - r),
            worst_slack: worst,
            worst_prefix_slack: worst_prefix,
            comparators_checked: m as u64,
        },
        rows,
    }
}

fn exhaustive(ctx: &Ctx, class: &ComparatorClass, bound: Option<&BoundSpec>) -> Result<ClassOutcome> {
    let horizon = ctx.table.horizon();
    let lt = ctx.cumulative[horizon - 1];
    let mut best: Vec<(f64, Vec<usize>)> = vec![(f64::INFINITY, Vec::new()); horizon];
    let mut worst: Option<(f64, Vec<usize>)> = None;
    let mut count = 0u64;
    let mut failure: Option<Error> = None;
    for_each_comparator(class, ctx.schedule, horizon, |path| {
        count += 1;
        let mut acc = 0.0;
        for t in 1..=horizon {
            acc += ctx.table.get(t, path[t - 1]);
            if acc < best[t - 1].0 {
                best[t - 1] = (acc, path[..t].to_vec());
            }
        }
        if let Some(b) = bound {
            let c = ComparatorSequence::from_indices(path.to_vec()).expect("non-empty");
            match b.value(ctx.schedule, &c, ctx.eta) {
                Ok(v) => {
                    let s = v - (lt - acc);
                    if worst.as_ref().is_none_or(|w| s < w.0) {
                        worst = Some((s, path.to_vec()));
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if count == 0 {
        return Err(Error::EmptyClass);
    }
    let mut rows = Vec::with_capacity(horizon);
    for (loss, path) in &best {
        let c = ComparatorSequence::from_indices(path.clone())?;
        let b = bound.map(|b| b.value(ctx.schedule, &c, ctx.eta)).transpose()?;
        rows.push((Some(*loss), b));
    }
    let (best_loss, best_bound) = rows[horizon - 1];
    let regret = best_loss.map(|b| lt - b);
    Ok(ClassOutcome {
        summary: ClassSummary {
            class: *class,
            mode: EvalMode::Exhaustive,
            bound_name: bound.map(|b| b.name().to_string()),
            best_comparator: Some(best[horizon - 1].1.clone()),
            best_loss,
            regret,
            bound: best_bound,
            slack: best_bound.zip(regret).map(|(b, r)| b - r),
            worst_slack: worst.map(|w| w.0),
            worst_prefix_slack: None,
            comparators_checked: count,
        },
        rows,
    })
}

fn class_shape(class: &ComparatorClass) -> Option<(usize, bool)> {
    match *class {
        ComparatorClass::Constant => Some((0, true)),
        ComparatorClass::Fresh { max_shifts } => Some((max_shifts, true)),
        ComparatorClass::Admissible { max_shifts } => Some((max_shifts, false)),
        ComparatorClass::Sparse { .. } | ComparatorClass::SinceEntry => None,
    }
}

fn with_dp(
    ctx: &Ctx,
    class: &ComparatorClass,
    bound: Option<&BoundSpec>,
    penalty: Option<(&dyn StepPenalty, bool)>,
) -> Result<ClassOutcome> {
    let horizon = ctx.table.horizon();
    let (k, fresh_only) = class_shape(class).ok_or_else(|| invalid("class has no DP form"))?;
    let best = dp::solve(ctx.schedule, ctx.table, &ZeroPenalty, ctx.eta, k, fresh_only)?;
    let slack_dp = match penalty {
        Some((p, needs_fresh)) if fresh_only || !needs_fresh => {
            Some(dp::solve(ctx.schedule, ctx.table, p, ctx.eta, k, fresh_only)?)
        }
        _ => None,
    };
    let mut rows = Vec::with_capacity(horizon);
    let mut worst_prefix: Option<f64> = None;
    let mut final_best = None;
    for t in 1..=horizon {
        let (loss, kk, i) = best.best_upto(t, k).ok_or(Error::EmptyClass)?;
        let c = best.path(t, kk, i)?;
        let b = bound.map(|b| b.value(ctx.schedule, &c, ctx.eta)).transpose()?;
        rows.push((Some(loss), b));
        if let Some(sd) = &slack_dp {
            if let Some((v, _, _)) = sd.best_upto(t, k) {
                let s = v - ctx.cumulative[t - 1];
                worst_prefix = Some(worst_prefix.map_or(s, |w: f64| w.min(s)));
            }
        }
        if t == horizon {
            final_best = Some(c);
        }
    }
    let lt = ctx.cumulative[horizon - 1];
    let worst = slack_dp
        .as_ref()
        .and_then(|sd| sd.best_upto(horizon, k))
        .map(|(v, _, _)| v - lt);
    let (best_loss, best_bound) = rows[horizon - 1];
    let regret = best_loss.map(|b| lt - b);
    Ok(ClassOutcome {
        summary: ClassSummary {
            class: *class,
            mode: EvalMode::Dp,
            bound_name: bound.map(|b| b.name().to_string()),
            best_comparator: final_best.map(|c| c.indices().to_vec()),
            best_loss,
            regret,
            bound: best_bound,
            slack: best_bound.zip(regret).map(|(b, r)| b - r),
            worst_slack: worst,
            worst_prefix_slack: worst_prefix,
            comparators_checked: 0,
        },
        rows,
    })
}

fn bound_only(ctx: &Ctx, class: &ComparatorClass, bound: Option<&BoundSpec>) -> ClassOutcome {
    ClassOutcome {
        summary: ClassSummary {
            class: *class,
            mode: EvalMode::BoundOnly,
            bound_name: bound.map(|b| b.name().to_string()),
            best_comparator: None,
            best_loss: None,
            regret: None,
            bound: None,
            slack: None,
            worst_slack: None,
            worst_prefix_slack: None,
            comparators_checked: 0,
        },
        rows: vec![(None, None); ctx.table.horizon()],
    }
}

/// Runs `spec` on `scenario` and measures regret against every class.
///
/// Each class is evaluated exhaustively when the enumeration guard allows,
/// by dynamic programming when the class has no pool constraint, and is
/// otherwise reported bound-only with a flag.
pub fn run_experiment(scenario: &Scenario, spec: &AlgorithmSpec, classes: &[ComparatorClass]) -> Result<RegretReport> {
    let trace = run_algorithm(scenario, spec)?;
    let schedule = scenario.schedule();
    let table = scenario.loss_table()?;
    let model = effective_model(scenario, spec)?;
    let priors = realize_priors(&spec.prior, schedule)?;
    let ctx = Ctx {
        schedule,
        table: &table,
        cumulative: &trace.cumulative,
        eta: trace.eta,
    };
    let horizon = scenario.horizon();
    let mut outcomes = Vec::with_capacity(classes.len());
    for class in classes {
        let bound = BoundSpec::select(spec, class, &model, &priors, schedule.total_experts());
        let outcome = match class {
            ComparatorClass::SinceEntry => since_entry(&ctx, bound.as_ref()),
            _ if check_guard(class, schedule, horizon, ENUMERATION_LIMIT).is_ok() => {
                exhaustive(&ctx, class, bound.as_ref())?
            }
            ComparatorClass::Sparse { .. } => {
                log::warn!("{}: enumeration guard exceeded; reporting bound only", class.name());
                bound_only(&ctx, class, bound.as_ref())
            }
            _ => {
                let pen = bound.as_ref().and_then(|b| b.penalty(schedule));
                with_dp(&ctx, class, bound.as_ref(), pen.as_ref().map(|(p, f)| (p.as_ref(), *f)))?
            }
        };
        outcomes.push(outcome);
    }
    let primary = outcomes.first().map(|o| &o.rows);
    let per_round = (1..=horizon)
        .map(|t| {
            let (best, bound) = primary.map_or((None, None), |r| r[t - 1]);
            let cum = trace.cumulative[t - 1];
            let regret = best.map(|b| cum - b);
            Ok(RoundRow {
                round: t,
                loss: trace.learner_losses[t - 1],
                cum_loss: cum,
                best_comp_loss: best,
                regret,
                bound,
                slack: bound.zip(regret).map(|(b, r)| b - r),
                expert_losses: table.row(t).to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bound_only = outcomes.iter().any(|o| o.summary.mode == EvalMode::BoundOnly);
    Ok(RegretReport {
        scenario: scenario.name().to_string(),
        algorithm: spec.label(),
        per_round,
        summary: ReportSummary {
            horizon,
            total_experts: schedule.total(horizon),
            total_loss: trace.cumulative[horizon - 1],
            eta: trace.eta,
            op_count: trace.op_counts.last().copied().unwrap_or(0),
            classes: outcomes.into_iter().map(|o| o.summary).collect(),
        },
        flags: ReportFlags {
            loss_cap_triggered: trace.loss_cap_triggered,
            eta_overridden: trace.eta_overridden,
            bound_only,
        },
    })
}

/// `Π_{M_t}` for every round, handy for custom bound checks.
pub fn prior_mass_by_round(priors: &[f64], schedule: &EntrySchedule) -> Vec<f64> {
    let sums = partial_sums(priors);
    (1..=schedule.horizon()).map(|t| sums[schedule.total(t)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::{generate_scenario, EntryPattern, ScenarioSpec, SignalFamily};
    use crate::loss::Outcome;

    fn scenario(entry: EntryPattern, horizon: usize, seed: u64) -> Scenario {
        generate_scenario(&ScenarioSpec {
            name: "s".into(),
            family: SignalFamily::Bernoulli { segment_length: 4 },
            entry,
            horizon,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn single_expert_has_zero_regret() {
        let s = scenario(EntryPattern::Constant { experts: 1 }, 10, 1);
        let r = run_experiment(&s, &AlgorithmSpec::new(AlgorithmName::GrowingHedge), &[ComparatorClass::SinceEntry]).unwrap();
        let c = &r.summary.classes[0];
        assert!(c.regret.unwrap().abs() < 1e-12);
        assert_eq!(c.bound.unwrap(), 0.0);
        assert!((c.slack.unwrap() - c.bound.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn fixed_share_exhaustive_matches_dp() {
        let s = scenario(EntryPattern::Constant { experts: 3 }, 6, 2);
        let spec = AlgorithmSpec::new(AlgorithmName::FixedShare).with_alpha(RateSequence::Constant(0.2));
        let class = ComparatorClass::Admissible { max_shifts: 2 };
        let r = run_experiment(&s, &spec, &[class]).unwrap();
        let ex = &r.summary.classes[0];
        assert_eq!(ex.mode, EvalMode::Exhaustive);
        let trace = run_algorithm(&s, &spec).unwrap();
        let table = s.loss_table().unwrap();
        let ctx = Ctx {
            schedule: s.schedule(),
            table: &table,
            cumulative: &trace.cumulative,
            eta: 1.0,
        };
        let bound = BoundSpec::FixedShare { m: 3, alpha: 0.2 };
        let pen = bound.penalty(s.schedule()).unwrap();
        let dp = with_dp(&ctx, &class, Some(&bound), Some((pen.0.as_ref(), pen.1))).unwrap();
        assert!((dp.summary.best_loss.unwrap() - ex.best_loss.unwrap()).abs() < 1e-12);
        assert!((dp.summary.worst_slack.unwrap() - ex.worst_slack.unwrap()).abs() < 1e-10);
        assert!(ex.worst_slack.unwrap() >= -SLACK_TOLERANCE);
    }

    #[test]
    fn rejects_mismatched_parameters() {
        let growing = EntrySchedule::from_counts(vec![1, 1]).unwrap();
        assert!(AlgorithmSpec::new(AlgorithmName::Hedge).validate(&growing).is_err());
        let fixed = EntrySchedule::fixed(2, 3).unwrap();
        assert!(AlgorithmSpec::new(AlgorithmName::FixedShare).validate(&fixed).is_err());
        assert!(AlgorithmSpec::new(AlgorithmName::GrowingHedge)
            .with_alpha(RateSequence::Inverse)
            .validate(&fixed)
            .is_err());
        assert!(AlgorithmSpec::new(AlgorithmName::GrowingMarkovHedge).validate(&growing).is_ok());
    }

    #[test]
    fn no_look_ahead() {
        let s = scenario(EntryPattern::Periodic { period: 3, batch: 1 }, 20, 5);
        let spec = AlgorithmSpec::new(AlgorithmName::GrowingMarkovHedge).with_prior(PriorPreset::EntryTimeUniform);
        let base = run_algorithm(&s, &spec).unwrap();
        let mut outcomes = s.outcomes().to_vec();
        outcomes[12..].reverse();
        for y in &mut outcomes[15..] {
            *y = Outcome::Symbol(1);
        }
        let predictions = (1..=20).map(|t| s.predictions(t).to_vec()).collect();
        let altered = Scenario::from_parts("s", s.schedule().clone(), *s.loss_model(), predictions, outcomes).unwrap();
        let other = run_algorithm(&altered, &spec).unwrap();
        assert_eq!(base.predictions[..13], other.predictions[..13]);
    }

    #[test]
    fn guard_degrades_to_bound_only() {
        let s = scenario(EntryPattern::Periodic { period: 2, batch: 3 }, 40, 3);
        let spec = AlgorithmSpec::new(AlgorithmName::GrowingSleepingMarkovHedge);
        let r = run_experiment(&s, &spec, &[ComparatorClass::Sparse { pool: 3, max_shifts: 5 }]).unwrap();
        assert!(r.flags.bound_only);
        assert!(r.per_round.iter().all(|row| row.regret.is_none()));
    }
}
