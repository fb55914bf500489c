//! GrowingHedge on a stream where a new forecaster joins every few rounds.
//! One of the late entrants is well calibrated; the learner's regret against
//! it over its active window stays below ln(Π_{M_T}/π_i).

use growing_experts::{
    play_round, realize_priors, EntrySchedule, GrowingForecaster, GrowingHedge, LossModel, Outcome, Prediction,
    PriorPreset,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> growing_experts::Result<()> {
    let horizon = 200;
    // one entrant every 20 rounds
    let counts: Vec<usize> = (1..=horizon).map(|t| usize::from(t % 20 == 1)).collect();
    let schedule = EntrySchedule::from_counts(counts)?;
    let priors = realize_priors(&PriorPreset::EntryTimeUniform, &schedule)?;
    let loss = LossModel::log_loss(2)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = 0.8;
    // expert i predicts P(y = 1) = probs[i]; expert 3 knows the truth
    let probs: Vec<f64> = (0..schedule.total_experts())
        .map(|i| if i == 3 { truth } else { rng.gen_range(0.1..0.6) })
        .collect();

    let mut learner = GrowingHedge::new(1.0)?;
    let mut xs = Vec::new();
    let mut learner_since = 0.0;
    let mut expert_since = 0.0;
    let tau = schedule.entry_time(3).unwrap();
    for t in 1..=horizon {
        let entrants = schedule.entrant_range(t);
        learner.admit(&priors[entrants.clone()])?;
        for i in entrants {
            xs.push(Prediction::bernoulli(probs[i])?);
        }
        let y = Outcome::Symbol(usize::from(rng.gen_bool(truth)));
        let r = play_round(&mut learner, &loss, &xs, &y)?;
        if t >= tau {
            learner_since += r.learner_loss;
            expert_since += r.expert_losses[3];
        }
    }

    let total: f64 = priors.iter().sum();
    println!("experts entered: {}", schedule.total_experts());
    println!("expert 3 active from round {tau}");
    println!("regret against expert 3 since entry: {:.4}", learner_since - expert_since);
    println!("bound ln(Π/π_3):                     {:.4}", (total / priors[3]).ln());
    Ok(())
}
