//! Moment constants of Gaussian and discrete channel pairs.

use cascade_core::{ChannelPair, Signal};

fn main() -> cascade_core::Result<()> {
    let channels = [
        ("gaussian mu=0.5", ChannelPair::gaussian(0.5)?),
        ("gaussian mu=1", ChannelPair::gaussian(1.0)?),
        ("gaussian mu=2", ChannelPair::gaussian(2.0)?),
        (
            "discrete 3-symbol",
            ChannelPair::discrete(vec![0.6, 0.3, 0.1], vec![0.1, 0.3, 0.6])?,
        ),
    ];
    println!(
        "{:<18} {:>12} {:>12} {:>14} {:>8} {:>8}",
        "channel", "alpha", "lambda0", "lambda1", "KL01", "KL10"
    );
    for (name, ch) in &channels {
        let m = ch.moments();
        println!(
            "{name:<18} {:>12.5} {:>12.5} {:>14.5} {:>8.4} {:>8.4}",
            m.alpha, m.lambda0, m.lambda1, m.kl01, m.kl10
        );
    }
    let g = &channels[1].1;
    println!("llr(y = 1.5) under mu=1: {}", g.llr(Signal::Real(1.5))?);
    Ok(())
}
