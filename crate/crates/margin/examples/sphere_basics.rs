//! Points and angles on the unit hypersphere: normalization, geodesic
//! distances and uniform sampling.
//!
//! ```bash
//! cargo run --example sphere_basics
//! ```

use margin::sphere::{angular_distance, normalize, sample_uniform_sphere};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let a = normalize(&[3.0, 4.0]).unwrap();
    println!("normalize([3, 4])        = {:?}", a.coords());

    let b = normalize(&[-4.0, 3.0]).unwrap();
    println!(
        "angle to its perpendicular = {:.6} rad (pi/2 = {:.6})",
        angular_distance(&a, &b).unwrap(),
        std::f64::consts::FRAC_PI_2
    );

    let anti = normalize(&[-3.0, -4.0]).unwrap();
    println!(
        "angle to its antipode      = {:.6} rad (pi   = {:.6})",
        angular_distance(&a, &anti).unwrap(),
        std::f64::consts::PI
    );

    // uniform draws on S^4: empirical mean shrinks like 1/sqrt(n)
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let n = 20_000;
    let mut mean = [0.0; 5];
    for _ in 0..n {
        let u = sample_uniform_sphere(5, &mut rng);
        for (m, x) in mean.iter_mut().zip(u.coords()) {
            *m += x / n as f64;
        }
    }
    let mean_norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    println!("|mean of {n} uniform draws on S^4| = {mean_norm:.5} (should be near 0)");
}
