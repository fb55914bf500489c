//! MarkovHedge versus explicit aggregation over every expert sequence.

use growing_experts::oracle::brute_force_sequence_aggregation;
use growing_experts::{DenseKernel, Forecaster, MarkovHedge, Prediction, TransitionKernel};

fn main() -> growing_experts::Result<()> {
    let theta_1 = [0.5, 0.3, 0.2];
    let kernels = vec![
        TransitionKernel::Dense(DenseKernel::from_columns(&[
            vec![0.8, 0.1, 0.1],
            vec![0.2, 0.7, 0.1],
            vec![0.3, 0.3, 0.4],
        ])?);
        3
    ];
    let preds: Vec<Vec<Prediction>> = (0..4)
        .map(|t| {
            (0..3)
                .map(|i| Prediction::Point((t * 3 + i) as f64 / 12.0))
                .collect()
        })
        .collect();
    let losses = vec![vec![0.2, 1.5, 0.7], vec![2.0, 0.1, 0.4], vec![0.3, 0.3, 2.8], vec![1.0, 0.0, 0.5]];

    let brute = brute_force_sequence_aggregation(&theta_1, &kernels, &preds, &losses, 1.0)?;
    let mut mh = MarkovHedge::new(1.0, &theta_1)?;
    for t in 0..4 {
        let x = mh.predict(&preds[t])?;
        println!("round {}: forward {:?}  brute force {:?}", t + 1, x, brute[t]);
        if t < 3 {
            mh.update_with_kernel(&losses[t], 0.0, &kernels[t])?;
        }
    }
    Ok(())
}
