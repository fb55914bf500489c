//! The adversarial instance on which GrowingHedge with a uniform prior
//! attains regret exactly ln M_T.

use growing_experts::harness::verify::tightness_regret;
use growing_experts::EntrySchedule;

fn main() -> growing_experts::Result<()> {
    for m in [2usize, 4, 8, 16, 32] {
        // one expert per round, then two quiet rounds
        let mut counts = vec![1; m];
        counts.extend([0, 0]);
        let schedule = EntrySchedule::from_counts(counts)?;
        let regret = tightness_regret(&schedule)?;
        println!("M_T = {m:>2}: regret {regret:.9}  ln M_T {:.9}", (m as f64).ln());
    }
    Ok(())
}
