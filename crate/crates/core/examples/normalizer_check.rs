//! How often the normalizer Z(t) strays from n by more than a fraction eps.

use cascade_core::harness::normalizer_concentration_check;
use cascade_core::{ChannelSpec, ExperimentConfig};

fn main() -> cascade_core::Result<()> {
    let cfg = ExperimentConfig::new(2, 40, ChannelSpec::Gaussian { mu: 0.5 });
    let exp = cfg.experiment()?;
    let rows = normalizer_concentration_check(&exp, 0.5, 3, 200, 9)?;
    println!("n = {}", exp.n());
    for r in &rows {
        println!(
            "t={} exceedance={:.3} bound={:.3} within={}",
            r.t, r.frequency, r.bound, r.within
        );
    }
    Ok(())
}
