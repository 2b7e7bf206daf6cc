//! Paired comparison of the lookahead rule and the variance-threshold rule:
//! both see identical observations for the same trial id.

use cascade_core::harness::{run_batch, BatchSummary};
use cascade_core::stopping::LookaheadParams;
use cascade_core::{ChannelPair, Experiment, StoppingRule, SumPath};

fn main() -> cascade_core::Result<()> {
    let ch = ChannelPair::gaussian(2.0)?;
    let t_plus = Experiment::new(1, 30, ch, StoppingRule::TPlus, 24, SumPath::Direct)?;
    let r = LookaheadParams::default_horizon(1, t_plus.n(), 6.0);
    let t_r = t_plus.with_rule(StoppingRule::TR(LookaheadParams::new(r, 200)?))?;
    let fixed = t_plus.with_rule(StoppingRule::FixedHorizon(5))?;

    let trials = 100;
    let runs = [
        ("T_+", run_batch(&t_plus, trials, 1)?),
        ("T_r", run_batch(&t_r, trials, 1)?),
        ("fixed 5", run_batch(&fixed, trials, 1)?),
    ];
    for (name, recs) in &runs {
        let s = BatchSummary::from_records(recs);
        println!(
            "{name:<8} mean T={:.2} mean sq error={:.3} mean loss={:.3}",
            s.mean_stop_time, s.mean_squared_error, s.mean_total_loss
        );
    }
    let earlier = runs[0]
        .1
        .iter()
        .zip(&runs[1].1)
        .filter(|(a, b)| b.stop_time <= a.stop_time)
        .count();
    println!("lookahead horizon r={r}; T_r <= T_+ in {earlier}/{trials} pairs");
    Ok(())
}
