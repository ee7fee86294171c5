//! The two objectives side by side, plus the finite-difference harness
//! certifying every analytic gradient coordinate.
//!
//! ```bash
//! cargo run --example loss_landscape
//! ```

use margin::geometry::{ClassGeometry, GeometrySnapshot};
use margin::linalg::Matrix;
use margin::loss::{cosine_softmax_loss, finite_difference_check, margin_loss};
use margin::sphere::UnitVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn snapshot(margins: &[f64], scales: &[f64], s0: f64, d: usize) -> GeometrySnapshot {
    let classes = margins
        .iter()
        .zip(scales)
        .enumerate()
        .map(|(id, (&margin, &scale))| ClassGeometry {
            class_id: id,
            mu: UnitVector::new({
                let mut v = vec![0.0; d];
                v[0] = 1.0;
                v
            })
            .unwrap(),
            kappa: 1.0,
            theta_vmf: 1.0,
            margin,
            scale,
        })
        .collect();
    GeometrySnapshot {
        classes,
        theta_cell: 1.0,
        theta_vmf_min: 1.0,
        s0,
        alpha: 0.95,
    }
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (n, d, c) = (6, 8, 3);
    let mut embeddings = Matrix::zeros(n, d);
    for v in embeddings.data_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    let mut prototypes = Matrix::zeros(c, d);
    for v in prototypes.data_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    let labels: Vec<usize> = (0..n).map(|i| i % c).collect();

    let s0 = 10.0;
    let base = cosine_softmax_loss(&embeddings, &prototypes, &labels, s0).unwrap();
    println!("cosine softmax loss            = {:.6}", base.loss);

    // sweeping the margin of class 0 upward can only increase the loss
    println!("margin_0  margin loss");
    for mi in 0..=6 {
        let m0 = 0.25 * mi as f64;
        let snap = snapshot(&[m0, 0.0, 0.0], &[s0; 3], s0, d);
        let eval = margin_loss(&embeddings, &prototypes, &labels, &snap).unwrap();
        println!("{m0:<9.2} {:.6}", eval.loss);
    }

    // per-class scales shift which classes dominate the gradient
    let snap = snapshot(&[0.2, 0.1, 0.0], &[14.0, 10.0, 6.0], s0, d);
    let eval = margin_loss(&embeddings, &prototypes, &labels, &snap).unwrap();
    println!("\nadaptive loss (margins + scales) = {:.6}", eval.loss);

    let err = finite_difference_check(
        |e, p| margin_loss(e, p, &labels, &snap),
        &embeddings,
        &prototypes,
        1e-5,
    )
    .unwrap();
    println!("max relative gradient error vs central differences = {err:.3e}");
}
