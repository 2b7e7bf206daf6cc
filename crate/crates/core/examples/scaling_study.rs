//! Mean stop time of the variance-threshold rule against (log n)^{1/(d+1)}.

use cascade_core::harness::{ratio_band, scaling_study};
use cascade_core::{ChannelSpec, ExperimentConfig};

fn main() -> cascade_core::Result<()> {
    let cfg = ExperimentConfig::new(1, 50, ChannelSpec::Gaussian { mu: 2.0 });
    let rows = scaling_study(&cfg, &[50, 500, 5000], 100, 7)?;
    println!(
        "{:>6} {:>7} {:>7} {:>9} {:>7}",
        "k", "n", "mean T", "predicted", "ratio"
    );
    for r in &rows {
        println!(
            "{:>6} {:>7} {:>7.3} {:>9.3} {:>7.3}",
            r.k, r.n, r.mean_t, r.predicted_scale, r.ratio
        );
    }
    println!("ratio band (max/min): {:.3}", ratio_band(&rows));
    Ok(())
}
