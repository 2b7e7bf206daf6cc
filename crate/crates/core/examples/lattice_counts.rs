//! Sphere, ball and growth counts on Z^d, with the growth inverse and the
//! sphere-size bounds.

use cascade_core::lattice::{ball_size, growth, growth_inverse, sphere_bounds, sphere_size};

fn main() {
    for d in 1..=3 {
        println!("d = {d}");
        println!("  t  sphere    ball  growth  bounds");
        for t in 0..=6 {
            let bounds = sphere_bounds(d, t)
                .map(|(lo, hi)| format!("[{lo:.1}, {hi:.1}]"))
                .unwrap_or_default();
            println!(
                "{t:>3} {:>7} {:>7} {:>7}  {bounds}",
                sphere_size(d, t),
                ball_size(d, t),
                growth(d, t)
            );
        }
        let n = ball_size(d, 20);
        let z = 6.0 * (n as f64).ln();
        println!("  H(6 log n) for n = {n}: {}", growth_inverse(d, z));
    }
}
