mod common;

use cascade_core::ChannelPair;
use common::{discrete_moments_by_sum, gaussian_moments_by_quadrature, rel_close};

pub const DISCRETE: [(&[f64], &[f64]); 3] = [
    (&[0.5, 0.5], &[0.2, 0.8]),
    (&[0.6, 0.3, 0.1], &[0.2, 0.3, 0.5]),
    (&[0.25, 0.25, 0.25, 0.0, 0.25], &[0.1, 0.2, 0.3, 0.0, 0.4]),
];

#[test]
fn gaussian_moments_match_quadrature() {
    for mu in [0.5, 1.0, 2.0] {
        let m = ChannelPair::gaussian(mu).unwrap().moments();
        let (alpha, l0, l1, kl01, kl10) = gaussian_moments_by_quadrature(mu);
        for (got, want) in [
            (m.alpha, alpha),
            (m.lambda0, l0),
            (m.lambda1, l1),
            (m.kl01, kl01),
            (m.kl10, kl10),
        ] {
            assert!(rel_close(got, want, 1e-6), "mu={mu}: {got} vs {want}");
        }
    }
}

#[test]
fn discrete_moments_match_summation() {
    for (q0, q1) in DISCRETE {
        let m = ChannelPair::discrete(q0.to_vec(), q1.to_vec())
            .unwrap()
            .moments();
        let (alpha, l0, l1, kl01, kl10) = discrete_moments_by_sum(q0, q1);
        for (got, want) in [
            (m.alpha, alpha),
            (m.lambda0, l0),
            (m.lambda1, l1),
            (m.kl01, kl01),
            (m.kl10, kl10),
        ] {
            assert!(rel_close(got, want, 1e-6), "{q0:?}/{q1:?}: {got} vs {want}");
        }
        assert!(rel_close(m.d_mean, (kl01 + kl10) / 2.0, 1e-12));
        assert!(rel_close(m.lambda(), l0 * l1, 1e-12));
    }
}
