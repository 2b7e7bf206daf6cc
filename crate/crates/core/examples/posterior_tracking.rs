//! Drives the simulator and the posterior by hand, comparing the direct and
//! accelerated neighborhood sums on the same frames.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cascade_core::{BallRegion, ChannelPair, PosteriorState, SumPath, Vertex, WorldState};

fn main() -> cascade_core::Result<()> {
    let (k, t_max) = (15, 6);
    let support = Arc::new(BallRegion::new(Vertex::origin(2), k));
    let window = Arc::new(BallRegion::new(Vertex::origin(2), k + t_max));
    let ch = ChannelPair::gaussian(0.8)?;
    let source = Vertex::new(vec![4, -7]);
    let mut world = WorldState::new(source.clone(), Arc::clone(&window))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let mut direct =
        PosteriorState::uniform(Arc::clone(&support), Arc::clone(&window), SumPath::Direct)?;
    let mut fast = PosteriorState::uniform(support, Arc::clone(&window), SumPath::Accelerated)?;
    println!("source {source}, n = {}", direct.probabilities().len());
    for _ in 0..=t_max {
        let frame = world.next_frame(&ch, &mut rng);
        direct.update(&frame, &ch)?;
        fast.update(&frame, &ch)?;
        let gap = direct
            .log_weights()
            .iter()
            .zip(fast.log_weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "t={} map={} mean=({:.2}, {:.2}) var={:.3} log Z={:.3} max path gap={gap:.1e}",
            frame.time(),
            direct.map_estimate(),
            direct.mean()[0],
            direct.mean()[1],
            direct.variance(),
            direct.log_normalizer()
        );
    }
    Ok(())
}
