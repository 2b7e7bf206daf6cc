//! Posterior variance across time under a fixed horizon: flat at first, then a
//! sharp collapse.

use cascade_core::harness::variance_transition_profile;
use cascade_core::{ChannelSpec, ExperimentConfig, StoppingRule};

fn main() -> cascade_core::Result<()> {
    let mut cfg = ExperimentConfig::new(2, 20, ChannelSpec::Gaussian { mu: 1.0 });
    cfg.t_max = Some(6);
    let exp = cfg.experiment()?.with_rule(StoppingRule::FixedHorizon(6))?;
    let rows = variance_transition_profile(&exp, 100, 3)?;
    for r in &rows {
        println!(
            "t={:>2} median={:>9.3} q10={:>9.3} q90={:>9.3} ({:.3} of prior)",
            r.t,
            r.median,
            r.q10,
            r.q90,
            r.median / r.prior_variance
        );
    }
    Ok(())
}
