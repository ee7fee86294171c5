//! Geometric-median prototypes: Weiszfeld iteration, robustness to
//! antipodal contamination, and nearest-prototype classification.
//!
//! ```bash
//! cargo run --example median_prototypes
//! ```

use margin::linalg::Matrix;
use margin::proto::{classify, geometric_median, weiszfeld};
use margin::sphere::{angular_distance, sample_uniform_sphere, UnitVector};
use margin::vmf::{estimate_kappa, sample, VmfParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    // Weiszfeld on five circle points: watch the objective fall
    let angles = [-0.9_f64, -0.3, 0.1, 0.4, 1.1];
    let rows: Vec<Vec<f64>> = angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
    let pts = Matrix::from_rows(&rows).unwrap();
    let run = weiszfeld(&pts, 1e-12, 1000).unwrap();
    println!(
        "Weiszfeld converged in {} iterations; objective {:.9} -> {:.9}",
        run.iterations,
        run.objectives.first().unwrap(),
        run.objectives.last().unwrap()
    );
    let med = geometric_median(&pts, 1e-12, 1000).unwrap();
    println!(
        "median direction at angle {:.6} rad",
        med.coords()[1].atan2(med.coords()[0])
    );

    // robustness: contaminate a tight cluster with antipodal outliers
    let d = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mu = sample_uniform_sphere(d, &mut rng);
    let inliers = sample(&VmfParams::new(mu.clone(), 200.0).unwrap(), 100, &mut rng);
    let antipode = UnitVector::new(mu.coords().iter().map(|x| -x).collect()).unwrap();
    let outliers = sample(&VmfParams::new(antipode, 20.0).unwrap(), 5, &mut rng);
    let mut all: Vec<Vec<f64>> = (0..100).map(|i| inliers.rows().row(i).to_vec()).collect();
    for i in 0..5 {
        all.push(outliers.rows().row(i).to_vec());
    }
    let contaminated = Matrix::from_rows(&all).unwrap();
    let med = geometric_median(&contaminated, 1e-11, 2000).unwrap();
    let (mean_dir, _) = estimate_kappa(&contaminated, d).unwrap();
    println!(
        "\nwith 5 antipodal outliers among 100 inliers:\n  mean   is {:.5} rad from the true center\n  median is {:.5} rad from the true center",
        angular_distance(&mean_dir, &mu).unwrap(),
        angular_distance(&med, &mu).unwrap()
    );

    // classification induces the angular Voronoi partition
    let protos = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let inv = 1.0 / 2.0_f64.sqrt();
    let queries = Matrix::from_rows(&[
        vec![0.99, 0.14],
        vec![0.14, 0.99],
        vec![inv, inv], // exact tie: smallest class id wins
    ])
    .unwrap();
    println!("\npredictions: {:?}", classify(&queries, &protos));
}
