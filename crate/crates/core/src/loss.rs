//! Predictions, outcomes and exp-concave losses.
//!
//! Every algorithm in this crate relies on the mixture inequality
//!
//! ```text
//! ℓ(Σ v_i x_i, y) ≤ −(1/η) ln Σ v_i exp(−η ℓ(x_i, y))
//! ```
//!
//! which holds with `η = 1` (and with equality) for the logarithmic loss and
//! with `η = 1/(2(b−a)²)` for the square loss on `[a, b]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default cap on the logarithmic loss, i.e. a mass floor of `e^{-700}`.
pub const DEFAULT_LOSS_CAP: f64 = 700.0;

/// Tolerance on the total mass of a probability vector.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A forecast in a convex prediction space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    /// A real-valued point forecast (square loss).
    Point(f64),
    /// A probability vector over a finite outcome alphabet (log loss).
    Dist(Vec<f64>),
}

impl Prediction {
    /// A validated probability vector.
    pub fn dist(probs: Vec<f64>) -> Result<Self> {
        check_simplex(&probs, SIMPLEX_TOLERANCE)?;
        Ok(Prediction::Dist(probs))
    }

    /// Point mass on `symbol` in an alphabet of size `alphabet`.
    pub fn point_mass(symbol: usize, alphabet: usize) -> Result<Self> {
        if symbol >= alphabet {
            return Err(invalid(format!(
                "symbol {symbol} outside alphabet of size {alphabet}"
            )));
        }
        let mut probs = vec![0.0; alphabet];
        probs[symbol] = 1.0;
        Ok(Prediction::Dist(probs))
    }

    /// Distribution `(1 − p, p)` over the binary alphabet `{0, 1}`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("bernoulli parameter {p} outside [0, 1]")));
        }
        Ok(Prediction::Dist(vec![1.0 - p, p]))
    }

    pub fn as_point(&self) -> Option<f64> {
        match self {
            Prediction::Point(x) => Some(*x),
            Prediction::Dist(_) => None,
        }
    }

    pub fn as_dist(&self) -> Option<&[f64]> {
        match self {
            Prediction::Dist(p) => Some(p),
            Prediction::Point(_) => None,
        }
    }

    fn same_kind(&self, other: &Prediction) -> bool {
        match (self, other) {
            (Prediction::Point(_), Prediction::Point(_)) => true,
            (Prediction::Dist(a), Prediction::Dist(b)) => a.len() == b.len(),
            _ => false,
        }
    }
}

/// An observed signal value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Real(f64),
    Symbol(usize),
}

/// An η-exp-concave loss.
///
/// Implement this trait to plug a custom loss into the harness-free API
/// ([`crate::forecaster::play_round`]); the algorithms only see `η` and the
/// resulting loss values.
pub trait Loss {
    fn eta(&self) -> f64;

    fn loss(&self, x: &Prediction, y: &Outcome) -> Result<f64>;

    /// Whether a loss value was produced by clipping (only meaningful for capped losses).
    fn is_clipped(&self, _loss: f64) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossKind {
    /// `−ln x({y})` over the alphabet `{0, …, alphabet − 1}`.
    Log { alphabet: usize },
    /// `(x − y)²` on `[lo, hi]`.
    Square { lo: f64, hi: f64 },
}

/// A concrete loss together with its learning rate and log-loss cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    kind: LossKind,
    eta: f64,
    loss_cap: f64,
}

impl LossModel {
    pub fn log_loss(alphabet: usize) -> Result<Self> {
        if alphabet < 2 {
            return Err(invalid("log loss needs an alphabet of at least two symbols"));
        }
        Ok(Self {
            kind: LossKind::Log { alphabet },
            eta: 1.0,
            loss_cap: DEFAULT_LOSS_CAP,
        })
    }

    pub fn square_loss(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("square loss needs a bounded interval, got [{lo}, {hi}]")));
        }
        let kind = LossKind::Square { lo, hi };
        Ok(Self {
            kind,
            eta: canonical_eta(&kind),
            loss_cap: f64::INFINITY,
        })
    }

    pub fn from_kind(kind: LossKind) -> Result<Self> {
        match kind {
            LossKind::Log { alphabet } => Self::log_loss(alphabet),
            LossKind::Square { lo, hi } => Self::square_loss(lo, hi),
        }
    }

    /// Overrides the learning rate. Bounds are only guaranteed for η at most the canonical value.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("eta must be positive and finite, got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    /// Sets the log-loss cap; `f64::INFINITY` disables clipping.
    pub fn with_loss_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(invalid(format!("loss cap must be positive, got {cap}")));
        }
        self.loss_cap = cap;
        Ok(self)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn loss_cap(&self) -> f64 {
        self.loss_cap
    }

    pub fn canonical_eta(&self) -> f64 {
        canonical_eta(&self.kind)
    }

    pub fn eta_overridden(&self) -> bool {
        self.eta != self.canonical_eta()
    }

    /// Checks that a prediction belongs to this model's prediction space.
    pub fn check_prediction(&self, x: &Prediction) -> Result<()> {
        match (&self.kind, x) {
            (LossKind::Log { alphabet }, Prediction::Dist(p)) if p.len() == *alphabet => Ok(()),
            (LossKind::Square { .. }, Prediction::Point(v)) if v.is_finite() => Ok(()),
            _ => Err(invalid(format!("prediction {x:?} does not match loss {:?}", self.kind))),
        }
    }
}

fn canonical_eta(kind: &LossKind) -> f64 {
    match kind {
        LossKind::Log { .. } => 1.0,
        LossKind::Square { lo, hi } => 1.0 / (2.0 * (hi - lo) * (hi - lo)),
    }
}

impl Loss for LossModel {
    fn eta(&self) -> f64 {
        self.eta
    }

    fn loss(&self, x: &Prediction, y: &Outcome) -> Result<f64> {
        evaluate_loss(self, x, y)
    }

    fn is_clipped(&self, loss: f64) -> bool {
        matches!(self.kind, LossKind::Log { .. }) && loss >= self.loss_cap
    }
}

/// Evaluates `ℓ(x, y)` for a built-in loss model.
///
/// Log loss is clipped at the model's cap so that `exp(−η ℓ)` stays positive;
/// square-loss inputs outside `[lo, hi]` are clamped with a warning.
pub fn evaluate_loss(model: &LossModel, x: &Prediction, y: &Outcome) -> Result<f64> {
    match (&model.kind, x, y) {
        (LossKind::Log { alphabet }, Prediction::Dist(p), Outcome::Symbol(s)) => {
            if p.len() != *alphabet {
                return Err(invalid(format!(
                    "distribution over {} symbols, alphabet has {alphabet}",
                    p.len()
                )));
            }
            if *s >= *alphabet {
                return Err(invalid(format!("outcome {s} outside alphabet of size {alphabet}")));
            }
            let mass = p[*s];
            if mass.is_nan() || mass < 0.0 {
                return Err(invalid(format!("invalid probability mass {mass}")));
            }
            let raw = -mass.ln();
            Ok(raw.min(model.loss_cap))
        }
        (LossKind::Square { lo, hi }, Prediction::Point(v), Outcome::Real(r)) => {
            if !v.is_finite() || !r.is_finite() {
                return Err(invalid("square loss needs finite inputs"));
            }
            let v = clamp_with_warning(*v, *lo, *hi, "prediction");
            let r = clamp_with_warning(*r, *lo, *hi, "outcome");
            Ok((v - r) * (v - r))
        }
        _ => Err(invalid(format!(
            "prediction {x:?} / outcome {y:?} do not match loss {:?}",
            model.kind
        ))),
    }
}

fn clamp_with_warning(v: f64, lo: f64, hi: f64, what: &str) -> f64 {
    if v < lo || v > hi {
        log::warn!("square loss {what} {v} outside [{lo}, {hi}], clamping");
        v.clamp(lo, hi)
    } else {
        v
    }
}

/// Convex combination `Σ v_i x_i` for a probability vector `v`.
pub fn mix_predictions(v: &[f64], xs: &[Prediction]) -> Result<Prediction> {
    if xs.is_empty() {
        return Err(invalid("cannot mix an empty list of predictions"));
    }
    if v.len() != xs.len() {
        return Err(invalid(format!("{} weights for {} predictions", v.len(), xs.len())));
    }
    check_simplex(v, SIMPLEX_TOLERANCE)?;
    weighted_mean(v, xs)
}

/// `Σ w_i x_i / Σ w_i` for non-negative weights.
///
/// Entries with zero weight are skipped entirely, so their predictions are
/// never read (they may be NaN placeholders).
pub fn weighted_mean(weights: &[f64], xs: &[Prediction]) -> Result<Prediction> {
    if xs.is_empty() || weights.len() != xs.len() {
        return Err(invalid(format!(
            "{} weights for {} predictions",
            weights.len(),
            xs.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(crate::Error::Degenerate(format!("total mixing weight is {total}")));
    }
    let first = xs
        .iter()
        .zip(weights)
        .find(|(_, &w)| w > 0.0)
        .map(|(x, _)| x)
        .expect("positive total implies a positive weight");
    match first {
        Prediction::Point(_) => {
            let mut acc = 0.0;
            for (x, &w) in xs.iter().zip(weights) {
                if w == 0.0 {
                    continue;
                }
                match x {
                    Prediction::Point(p) => acc += w * p,
                    _ => return Err(invalid("mixed prediction kinds")),
                }
            }
            Ok(Prediction::Point(acc / total))
        }
        Prediction::Dist(d0) => {
            let mut acc = vec![0.0; d0.len()];
            for (x, &w) in xs.iter().zip(weights) {
                if w == 0.0 {
                    continue;
                }
                if !x.same_kind(first) {
                    return Err(invalid("mixed prediction kinds"));
                }
                if let Prediction::Dist(d) = x {
                    for (a, p) in acc.iter_mut().zip(d) {
                        *a += w * p;
                    }
                }
            }
            for a in &mut acc {
                *a /= total;
            }
            Ok(Prediction::Dist(acc))
        }
    }
}

pub(crate) fn check_simplex(v: &[f64], tol: f64) -> Result<()> {
    if v.is_empty() {
        return Err(invalid("empty probability vector"));
    }
    if v.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(invalid("probability vector has a negative or non-finite entry"));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(invalid(format!("probability vector sums to {total}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_loss_uniform_binary_is_ln2() {
        let m = LossModel::log_loss(2).unwrap();
        let l = m.loss(&Prediction::bernoulli(0.5).unwrap(), &Outcome::Symbol(0)).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn square_loss_zero_case() {
        let m = LossModel::square_loss(0.0, 1.0).unwrap();
        assert_eq!(m.loss(&Prediction::Point(0.5), &Outcome::Real(0.5)).unwrap(), 0.0);
        assert_eq!(m.eta(), 0.5);
    }

    #[test]
    fn zero_mass_is_capped() {
        let m = LossModel::log_loss(2).unwrap();
        let x = Prediction::point_mass(1, 2).unwrap();
        let l = m.loss(&x, &Outcome::Symbol(0)).unwrap();
        assert_eq!(l, DEFAULT_LOSS_CAP);
        assert!(m.is_clipped(l));
        // the update factor stays strictly positive
        assert!((-m.eta() * l).exp() > 0.0);

        let uncapped = m.with_loss_cap(f64::INFINITY).unwrap();
        assert!(uncapped.loss(&x, &Outcome::Symbol(0)).unwrap().is_infinite());
    }

    #[test]
    fn mismatched_kinds_are_rejected() {
        let m = LossModel::log_loss(2).unwrap();
        assert!(m.loss(&Prediction::Point(0.3), &Outcome::Symbol(0)).is_err());
        let sq = LossModel::square_loss(0.0, 1.0).unwrap();
        assert!(sq.loss(&Prediction::bernoulli(0.3).unwrap(), &Outcome::Real(0.0)).is_err());
        assert!(m.loss(&Prediction::bernoulli(0.3).unwrap(), &Outcome::Symbol(2)).is_err());
    }

    #[test]
    fn square_loss_clamps_out_of_range() {
        let sq = LossModel::square_loss(0.0, 1.0).unwrap();
        let l = sq.loss(&Prediction::Point(2.0), &Outcome::Real(0.0)).unwrap();
        assert_eq!(l, 1.0);
    }

    #[test]
    fn mixing_examples() {
        let p = Prediction::bernoulli(0.3).unwrap();
        assert_eq!(mix_predictions(&[1.0], std::slice::from_ref(&p)).unwrap(), p);

        let pts = [Prediction::Point(0.0), Prediction::Point(1.0)];
        assert_eq!(mix_predictions(&[0.5, 0.5], &pts).unwrap(), Prediction::Point(0.5));

        let deltas = [
            Prediction::point_mass(0, 2).unwrap(),
            Prediction::point_mass(1, 2).unwrap(),
        ];
        let mixed = mix_predictions(&[2.0 / 3.0, 1.0 / 3.0], &deltas).unwrap();
        let d = mixed.as_dist().unwrap();
        assert!((d[0] - 2.0 / 3.0).abs() < 1e-15 && (d[1] - 1.0 / 3.0).abs() < 1e-15);

        assert!(mix_predictions(&[], &[]).is_err());
        assert!(mix_predictions(&[0.5, 0.6], &pts).is_err());
    }

    #[test]
    fn zero_weights_are_never_read() {
        let xs = [Prediction::Point(0.25), Prediction::Point(f64::NAN)];
        assert_eq!(weighted_mean(&[3.0, 0.0], &xs).unwrap(), Prediction::Point(0.25));
    }

    #[test]
    fn eta_override_is_flagged() {
        let m = LossModel::square_loss(-1.0, 1.0).unwrap();
        assert_eq!(m.eta(), 0.125);
        assert!(!m.eta_overridden());
        assert!(m.with_eta(0.1).unwrap().eta_overridden());
        assert!(m.with_eta(0.0).is_err());
    }
}
