//! One trial under the variance-threshold rule, printing the posterior after
//! every frame through an observer.

use cascade_core::lattice::sphere_size;
use cascade_core::{
    ChannelPair, Experiment, ObservationFrame, PosteriorState, StoppingRule, SumPath, TrialObserver,
};

struct Printer;

impl TrialObserver for Printer {
    fn on_step(&mut self, _: &ObservationFrame, p: &PosteriorState) -> cascade_core::Result<()> {
        let t = p.time() as u64;
        println!(
            "t={t} mean={:?} variance={:.4} threshold={} map={}",
            p.mean(),
            p.variance(),
            sphere_size(p.dim(), t),
            p.map_estimate()
        );
        Ok(())
    }
}

fn main() -> cascade_core::Result<()> {
    let ch = ChannelPair::gaussian(1.0)?;
    let exp = Experiment::new(2, 10, ch, StoppingRule::TPlus, 12, SumPath::Accelerated)?;
    let rec = exp.run_trial(0, 2024, Some(&mut Printer))?;
    println!(
        "source={} stopped at T={} squared_error={:.4} infected={} loss={:.4}",
        rec.source, rec.stop_time, rec.squared_error, rec.infection_cost, rec.total_loss
    );
    Ok(())
}
