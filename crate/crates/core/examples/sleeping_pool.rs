//! GrowingSleepingMarkovHedge when the best forecaster alternates between two
//! experts of a growing pool, including one that entered late.

use growing_experts::{play_round, GrowingForecaster, GrowingSleepingMarkovHedge, LossModel, Outcome, Prediction, RateSequence};
use growing_experts::{GrowingHedge, GrowingMarkovHedge};

fn main() -> growing_experts::Result<()> {
    let horizon = 400;
    let loss = LossModel::log_loss(2)?;
    let mut sleeping = GrowingSleepingMarkovHedge::with_rates(1.0, RateSequence::Inverse, RateSequence::Inverse)?;
    let mut markov = GrowingMarkovHedge::new(1.0, RateSequence::Inverse)?;
    let mut hedge = GrowingHedge::new(1.0)?;
    let mut totals = [0.0; 3];
    let mut xs: Vec<Prediction> = Vec::new();

    for t in 1..=horizon {
        // a new expert every 25 rounds; expert 0 predicts 0.9, the expert
        // entering at round 51 predicts 0.1, the rest hedge at 0.5
        let entrants = if t % 25 == 1 { 1 } else { 0 };
        for f in [&mut sleeping as &mut dyn GrowingForecaster, &mut markov, &mut hedge] {
            f.admit(&vec![1.0; entrants])?;
        }
        if entrants == 1 {
            let p = match xs.len() {
                0 => 0.9,
                2 => 0.1,
                _ => 0.5,
            };
            xs.push(Prediction::bernoulli(p)?);
        }
        // after round 50 the outcome alternates between the two regimes every 40 rounds
        let y = if t <= 50 || (t / 40) % 2 == 0 { 1 } else { 0 };
        let y = Outcome::Symbol(y);
        totals[0] += play_round(&mut sleeping, &loss, &xs, &y)?.learner_loss;
        totals[1] += play_round(&mut markov, &loss, &xs, &y)?.learner_loss;
        totals[2] += play_round(&mut hedge, &loss, &xs, &y)?.learner_loss;
    }
    println!("experts entered: {}", xs.len());
    println!("growing sleeping markov hedge {:.2}", totals[0]);
    println!("growing markov hedge          {:.2}", totals[1]);
    println!("growing hedge                 {:.2}", totals[2]);
    Ok(())
}
