//! Reduced-size Monte-Carlo checks; the acceptance target runs full sizes.

mod common;

use cascade_core::harness::{run_batch, BatchSummary};
use cascade_core::lattice::sphere_size;
use cascade_core::stopping::LookaheadParams;
use cascade_core::{ChannelPair, Experiment, StoppingRule, SumPath};
use common::{martingale_check, mean_se, orthogonality_residuals};

#[test]
fn conditional_mean_is_a_martingale() {
    let (m, avg, se) = martingale_check(7, 1, 2000);
    assert!((avg - m).abs() <= 3.0 * se, "{m} vs {avg} ± {se}");
}

#[test]
fn increments_are_orthogonal() {
    let (m, se) = mean_se(&orthogonality_residuals(300, 5, 11));
    assert!(m.abs() <= 3.0 * se, "{m} ± {se}");
}

#[test]
fn map_is_consistent_for_long_runs() {
    let exp = Experiment::new(
        1,
        20,
        ChannelPair::gaussian(1.0).unwrap(),
        StoppingRule::FixedHorizon(10),
        10,
        SumPath::Direct,
    )
    .unwrap();
    let s = BatchSummary::from_records(&run_batch(&exp, 400, 3).unwrap());
    assert!(s.map_accuracy >= 0.95, "map accuracy {}", s.map_accuracy);
}

#[test]
fn t_plus_error_is_below_mean_boundary() {
    let exp = Experiment::new(
        1,
        50,
        ChannelPair::gaussian(2.0).unwrap(),
        StoppingRule::TPlus,
        40,
        SumPath::Direct,
    )
    .unwrap();
    let recs = run_batch(&exp, 500, 5).unwrap();
    let s = BatchSummary::from_records(&recs);
    let boundary = recs
        .iter()
        .map(|r| sphere_size(1, r.stop_time) as f64)
        .sum::<f64>()
        / recs.len() as f64;
    assert_eq!(s.truncation_rate, 0.0);
    assert!(
        s.mean_squared_error <= boundary,
        "{} > {boundary}",
        s.mean_squared_error
    );
}

#[test]
fn lookahead_never_later_than_t_plus() {
    let base = Experiment::new(
        1,
        30,
        ChannelPair::gaussian(2.0).unwrap(),
        StoppingRule::TPlus,
        24,
        SumPath::Direct,
    )
    .unwrap();
    let r = LookaheadParams::default_horizon(1, base.n(), 6.0);
    let lookahead = base
        .with_rule(StoppingRule::TR(LookaheadParams::new(r, 100).unwrap()))
        .unwrap();
    let plus = run_batch(&base, 60, 8).unwrap();
    let tr = run_batch(&lookahead, 60, 8).unwrap();
    for (a, b) in plus.iter().zip(&tr) {
        assert_eq!(a.source, b.source);
        assert!(b.stop_time <= a.stop_time);
    }
}
