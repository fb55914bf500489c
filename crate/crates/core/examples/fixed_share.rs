//! Fixed Share and Decreasing Share tracking a best expert that changes
//! twice, compared with plain Hedge.

use growing_experts::{play_round, Hedge, LossModel, MarkovHedge, Outcome, Prediction, RateSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> growing_experts::Result<()> {
    let m = 4;
    let horizon = 300;
    let loss = LossModel::square_loss(0.0, 1.0)?;
    let eta = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let mut hedge = Hedge::uniform(eta, m)?;
    let mut fixed = MarkovHedge::fixed_share(eta, m, 0.01)?;
    let mut decreasing = MarkovHedge::decreasing_share(eta, m, RateSequence::Inverse)?;
    let mut totals = [0.0; 3];

    let xs: Vec<Prediction> = (0..m).map(|i| Prediction::Point(i as f64 / (m - 1) as f64)).collect();
    for t in 1..=horizon {
        // the target sits on a different expert in each third of the run
        let target = [1.0, 0.0, 2.0 / 3.0][(t - 1) * 3 / horizon];
        let y = Outcome::Real((target + rng.gen_range(-0.05..0.05f64)).clamp(0.0, 1.0));
        totals[0] += play_round(&mut hedge, &loss, &xs, &y)?.learner_loss;
        totals[1] += play_round(&mut fixed, &loss, &xs, &y)?.learner_loss;
        totals[2] += play_round(&mut decreasing, &loss, &xs, &y)?.learner_loss;
    }
    println!("hedge            {:.3}", totals[0]);
    println!("fixed share      {:.3}", totals[1]);
    println!("decreasing share {:.3}", totals[2]);
    Ok(())
}
