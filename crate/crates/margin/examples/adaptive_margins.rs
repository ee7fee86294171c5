//! How per-class geometry turns into margins and logit scales: dispersed
//! classes (low kappa, wide confidence cone) receive larger margins and
//! larger scales than compact ones.
//!
//! ```bash
//! cargo run --example adaptive_margins
//! ```

use margin::geometry::{
    adaptive_margin, concentration_scales, etf_diagnostics, voronoi_apex_angle,
};
use margin::linalg::Matrix;
use margin::vmf::apex_angle_approx;

fn main() {
    let classes = 8;
    let d = 32;
    let s0 = 20.0;
    let theta_cell = voronoi_apex_angle(classes).unwrap();
    println!("C = {classes}: Voronoi apex angle = {theta_cell:.5} rad");

    // a long-tail-style concentration profile, head compact, tail diffuse
    let kappas: Vec<f64> = (0..classes)
        .map(|c| 80.0 + (5.0 - 80.0) * c as f64 / (classes as f64 - 1.0))
        .collect();
    let thetas: Vec<f64> = kappas
        .iter()
        .map(|&k| apex_angle_approx(k, d, 0.95))
        .collect();
    let theta_min = thetas.iter().cloned().fold(f64::INFINITY, f64::min);
    let scales = concentration_scales(&kappas, s0).unwrap();

    println!("class  kappa   theta_vmf  margin    scale");
    for c in 0..classes {
        let m = adaptive_margin(thetas[c], theta_cell, theta_min).unwrap();
        println!(
            "{c:<6} {:<7.1} {:<10.5} {:<9.5} {:.4}",
            kappas[c], thetas[c], m, scales[c]
        );
    }
    let mean_scale = scales.iter().sum::<f64>() / classes as f64;
    println!("mean(scale)/s0 = {:.12} (unit by construction)", mean_scale / s0);

    // ETF diagnostics: a perfect simplex against a collapsed pair
    let mut simplex = Vec::new();
    for i in 0..4usize {
        let mut v = vec![-0.25; 4];
        v[i] += 1.0;
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        simplex.push(v.into_iter().map(|x| x / n).collect::<Vec<_>>());
    }
    let simplex = Matrix::from_rows(&simplex).unwrap();
    let good = etf_diagnostics(&simplex);
    let collapsed = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let bad = etf_diagnostics(&collapsed);
    println!(
        "\nsimplex ETF:   offdiag deviation = {:.2e}, gram condition = {:.4}",
        good.max_offdiag_deviation, good.gram_condition
    );
    println!(
        "collapsed pair: offdiag deviation = {:.2}, gram condition = {:.4}",
        bad.max_offdiag_deviation, bad.gram_condition
    );
}
