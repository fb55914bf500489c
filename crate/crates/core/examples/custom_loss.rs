//! Plugging a user-defined loss into the algorithms. Any loss that is
//! η-exp-concave for the η it reports works; here the square loss on [0, 1]
//! with a more conservative learning rate than the canonical 1/2.

use growing_experts::{play_round, GrowingForecaster, GrowingHedge, Loss, Outcome, Prediction};

/// Square loss on [0, 1] with η = 1/4, half the canonical rate.
struct Cautious;

impl Loss for Cautious {
    fn eta(&self) -> f64 {
        0.25
    }

    fn loss(&self, x: &Prediction, y: &Outcome) -> growing_experts::Result<f64> {
        match (x, y) {
            (Prediction::Point(p), Outcome::Real(v)) => Ok((p - v) * (p - v)),
            _ => Err(growing_experts::Error::InvalidInput("point forecasts and real outcomes only".into())),
        }
    }
}

fn main() -> growing_experts::Result<()> {
    let loss = Cautious;
    let mut learner = GrowingHedge::new(loss.eta())?;
    let mut xs = Vec::new();
    let mut total = 0.0;
    for t in 1..=60 {
        // every ten rounds an expert joins with a guess closer to 0.7
        if t % 10 == 1 {
            learner.admit(&[1.0])?;
            xs.push(Prediction::Point(0.7 - 0.5 / (xs.len() + 1) as f64));
        } else {
            learner.admit(&[])?;
        }
        let r = play_round(&mut learner, &loss, &xs, &Outcome::Real(0.7))?;
        total += r.learner_loss;
        if t % 10 == 0 {
            println!("round {t:>2}: prediction {:?}, cumulative loss {total:.4}", r.prediction);
        }
    }
    Ok(())
}
