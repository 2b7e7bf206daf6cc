mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cascade_core::{
    BallRegion, ChannelPair, ObservationFrame, PosteriorState, Signal, SumPath, Vertex, WorldState,
};
use common::batch_log_weights;

fn random_channel(rng: &mut ChaCha8Rng) -> ChannelPair {
    if rng.random_bool(0.5) {
        ChannelPair::gaussian(rng.random_range(0.3..2.0)).unwrap()
    } else {
        ChannelPair::discrete(vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]).unwrap()
    }
}

/// Incremental updates reproduce the batch recursion, and stay normalized.
#[test]
fn incremental_matches_batch_on_random_trials() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let d = rng.random_range(1..=2);
        let k = rng.random_range(0..=10);
        let t = rng.random_range(0..=8);
        let ch = random_channel(&mut rng);
        let center = Vertex::new((0..d).map(|_| rng.random_range(-3..=3)).collect());
        let support = Arc::new(BallRegion::new(center.clone(), k));
        let window = Arc::new(BallRegion::new(center, k + t));
        let src = support.vertex(rng.random_range(0..support.len()));
        let mut world = WorldState::new(src, Arc::clone(&window)).unwrap();
        let path = if trial % 2 == 0 {
            SumPath::Direct
        } else {
            SumPath::Accelerated
        };
        let mut post =
            PosteriorState::uniform(Arc::clone(&support), Arc::clone(&window), path).unwrap();
        let mut frames = Vec::new();
        for _ in 0..=t {
            frames.push(world.next_frame(&ch, &mut rng));
            post.update(frames.last().unwrap(), &ch).unwrap();
            let total: f64 = post.probabilities().iter().sum();
            assert!((total - 1.0).abs() <= 1e-12, "trial {trial}: sum {total}");
            let want = batch_log_weights(&support, &window, &frames, &ch);
            for (a, b) in post.log_weights().iter().zip(&want) {
                assert!((a - b).abs() <= 1e-9, "trial {trial}: {a} vs {b}");
            }
        }
    }
}

fn frames_for(window: &Arc<BallRegion>, steps: &[Vec<f64>]) -> Vec<ObservationFrame> {
    steps
        .iter()
        .enumerate()
        .map(|(s, ys)| {
            let values = (0..window.len())
                .map(|i| Signal::Real(ys[i % ys.len()]))
                .collect();
            ObservationFrame::new(s as u64, Arc::clone(window), values).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_equivariance(
        d in 1usize..=2,
        k in 0u64..=5,
        shift in prop::collection::vec(-20i64..=20, 2),
        steps in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 7), 1..=4),
    ) {
        let ch = ChannelPair::gaussian(1.0).unwrap();
        let t = steps.len() as u64 - 1;
        let shift = &shift[..d];
        let build = |center: Vertex| {
            let support = Arc::new(BallRegion::new(center.clone(), k));
            let window = Arc::new(BallRegion::new(center, k + t));
            let mut post = PosteriorState::uniform(support, Arc::clone(&window), SumPath::Direct).unwrap();
            for f in frames_for(&window, &steps) {
                post.update(&f, &ch).unwrap();
            }
            post
        };
        let a = build(Vertex::origin(d));
        let b = build(Vertex::new(shift.to_vec()));
        for ((ma, mb), s) in a.mean().iter().zip(b.mean()).zip(shift) {
            prop_assert_eq!(ma + *s as f64, *mb);
        }
        prop_assert_eq!(a.variance(), b.variance());
    }

    #[test]
    fn posterior_stays_normalized(
        k in 0u64..=8,
        mu in 0.1f64..4.0,
        steps in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 5), 1..=6),
    ) {
        let ch = ChannelPair::gaussian(mu).unwrap();
        let t = steps.len() as u64 - 1;
        let support = Arc::new(BallRegion::new(Vertex::origin(2), k));
        let window = Arc::new(BallRegion::new(Vertex::origin(2), k + t));
        let mut post = PosteriorState::uniform(support, Arc::clone(&window), SumPath::Accelerated).unwrap();
        for f in frames_for(&window, &steps) {
            post.update(&f, &ch).unwrap();
            let total: f64 = post.probabilities().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(post.probabilities().iter().all(|p| *p >= 0.0));
            prop_assert!(post.variance() >= 0.0);
        }
    }
}
