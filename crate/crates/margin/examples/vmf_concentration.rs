//! von Mises-Fisher round trip: sample at a known concentration,
//! re-estimate it, and compare the confidence-cone apex angle computed by
//! the closed-form approximation against the exact CDF inversion.
//!
//! ```bash
//! cargo run --example vmf_concentration
//! ```

use margin::sphere::sample_uniform_sphere;
use margin::vmf::{
    apex_angle_approx, apex_angle_exact, confidence_cone, estimate_kappa, log_density, sample,
    VmfParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let d = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mu = sample_uniform_sphere(d, &mut rng);

    println!("sample -> estimate round trip (d = {d}, n = 20000):");
    for &kappa in &[50.0, 200.0, 1000.0] {
        let params = VmfParams::new(mu.clone(), kappa).unwrap();
        let batch = sample(&params, 20_000, &mut rng);
        let (_, est) = estimate_kappa(batch.rows(), d).unwrap();
        println!("  kappa = {kappa:7.1}  estimated = {est:9.2}  ({:+.2}%)",
            (est / kappa - 1.0) * 100.0);
    }

    println!("\napex angles at alpha = 0.95:");
    println!("  d   kappa    approx     exact      rel.err");
    for &(d, kappa) in &[(16usize, 200.0), (16, 1000.0), (64, 650.0), (64, 1000.0)] {
        let approx = apex_angle_approx(kappa, d, 0.95);
        let exact = apex_angle_exact(kappa, d, 0.95).unwrap();
        println!(
            "  {d:<3} {kappa:<8} {approx:<10.6} {exact:<10.6} {:+.2}%",
            (approx / exact - 1.0) * 100.0
        );
    }

    // the log density at the mode dominates a random direction's
    let params = VmfParams::new(mu.clone(), 200.0).unwrap();
    let elsewhere = sample_uniform_sphere(d, &mut rng);
    println!(
        "\nlog density at mu = {:.2}, at a random direction = {:.2}",
        log_density(&mu, &params).unwrap(),
        log_density(&elsewhere, &params).unwrap()
    );

    let cone = confidence_cone(&params, 0.95);
    println!(
        "95% confidence cone around mu: apex angle {:.4} rad",
        cone.apex_angle
    );
}
