use cascade_core::harness::{run_batch, scaling_study, thread_pool};
use cascade_core::stopping::LookaheadParams;
use cascade_core::{ChannelPair, ChannelSpec, Experiment, ExperimentConfig, StoppingRule, SumPath};

fn lookahead_experiment() -> Experiment {
    Experiment::new(
        2,
        4,
        ChannelPair::gaussian(1.0).unwrap(),
        StoppingRule::TR(LookaheadParams::new(2, 50).unwrap()),
        8,
        SumPath::Accelerated,
    )
    .unwrap()
}

#[test]
fn batches_repeat_exactly() {
    let exp = lookahead_experiment();
    assert_eq!(
        run_batch(&exp, 12, 99).unwrap(),
        run_batch(&exp, 12, 99).unwrap()
    );
    assert_ne!(
        run_batch(&exp, 12, 99).unwrap(),
        run_batch(&exp, 12, 100).unwrap()
    );
}

#[test]
fn batches_ignore_thread_count() {
    let exp = lookahead_experiment();
    let one = thread_pool(1)
        .unwrap()
        .install(|| run_batch(&exp, 12, 5).unwrap());
    let four = thread_pool(4)
        .unwrap()
        .install(|| run_batch(&exp, 12, 5).unwrap());
    assert_eq!(one, four);
}

#[test]
fn trial_records_do_not_depend_on_batch_size() {
    let exp = lookahead_experiment();
    let small = run_batch(&exp, 5, 3).unwrap();
    let large = run_batch(&exp, 15, 3).unwrap();
    assert_eq!(small[..], large[..5]);
}

#[test]
fn scaling_rows_ignore_thread_count() {
    let mut cfg = ExperimentConfig::new(1, 10, ChannelSpec::Gaussian { mu: 2.0 });
    cfg.trials = 30;
    let grid = [5, 20, 80];
    let one = thread_pool(1)
        .unwrap()
        .install(|| scaling_study(&cfg, &grid, 30, 1).unwrap());
    let four = thread_pool(4)
        .unwrap()
        .install(|| scaling_study(&cfg, &grid, 30, 1).unwrap());
    assert_eq!(one, four);
    assert_eq!(one.len(), 3);
    assert!(scaling_study(&cfg, &[5, 5], 3, 1).is_err());
}
