//! Voronoi-cell geometry, adaptive angular margins, concentration-aware
//! logit scales and ETF diagnostics over a per-epoch snapshot.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Matrix};
use crate::sphere::UnitVector;

/// Margins are capped here so theta + margin stays inside the
/// monotone-decreasing region of the cosine for typical angles.
pub const MARGIN_CAP: f64 = std::f64::consts::FRAC_PI_2;

/// Per-class geometric state, refreshed once per epoch.
#[derive(Debug, Clone)]
pub struct ClassGeometry {
    pub class_id: usize,
    pub mu: UnitVector,
    pub kappa: f64,
    pub theta_vmf: f64,
    pub margin: f64,
    pub scale: f64,
}

/// Frozen geometry for one epoch: per-class state plus the shared cell
/// angle, minimum apex angle, base scale and confidence level.
#[derive(Debug, Clone)]
pub struct GeometrySnapshot {
    pub classes: Vec<ClassGeometry>,
    pub theta_cell: f64,
    pub theta_vmf_min: f64,
    pub s0: f64,
    pub alpha: f64,
}

impl GeometrySnapshot {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn margins(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.margin).collect()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.scale).collect()
    }

    /// A snapshot with zero margins and uniform scales: the cosine
    /// softmax baseline expressed in the same shape.
    pub fn baseline(&self) -> GeometrySnapshot {
        let mut out = self.clone();
        for c in out.classes.iter_mut() {
            c.margin = 0.0;
            c.scale = out.s0;
        }
        out
    }
}

/// Apex angle arccos(-1/(C-1)) of the cone over an equal-size Voronoi
/// cell under the symmetric prototype configuration.
pub fn voronoi_apex_angle(class_count: usize) -> Result<f64> {
    if class_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "voronoi apex angle needs at least 2 classes, got {class_count}"
        )));
    }
    Ok((-1.0 / (class_count as f64 - 1.0)).acos())
}

/// Adaptive margin m_i = max((theta_i - theta_cell)/2,
/// (theta_i - theta_min)/2), floored at zero and capped at
/// [`MARGIN_CAP`].
pub fn adaptive_margin(theta_vmf_i: f64, theta_cell: f64, theta_vmf_min: f64) -> Result<f64> {
    if theta_vmf_min > theta_vmf_i {
        return Err(Error::InvariantViolation(format!(
            "theta_vmf_min {theta_vmf_min} exceeds theta_vmf_i {theta_vmf_i}"
        )));
    }
    let cell_term = 0.5 * (theta_vmf_i - theta_cell);
    let min_term = 0.5 * (theta_vmf_i - theta_vmf_min);
    Ok(cell_term.max(min_term).max(0.0).min(MARGIN_CAP))
}

/// Concentration-aware logit scales: r_i = C softmax(log kappa_i / C),
/// then the multiset {r_i} is handed out in reverse concentration order
/// (ascending kappa, ties by class id, receives descending r), and
/// scaled by s0. The output keeps unit mean by construction.
pub fn concentration_scales(kappas: &[f64], s0: f64) -> Result<Vec<f64>> {
    let c = kappas.len();
    if c < 2 {
        return Err(Error::InvalidParameter(format!(
            "concentration scales need at least 2 classes, got {c}"
        )));
    }
    if s0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "base scale must be positive, got {s0}"
        )));
    }
    if let Some(bad) = kappas.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "concentrations must be positive, got {bad}"
        )));
    }

    let logits: Vec<f64> = kappas.iter().map(|k| k.ln() / c as f64).collect();
    let max_logit = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max_logit).exp()).collect();
    let total: f64 = exps.iter().sum();
    let r: Vec<f64> = exps.iter().map(|e| c as f64 * e / total).collect();

    // rank classes by ascending kappa (ties by class id) and hand the
    // sorted r values out in reverse
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| {
        kappas[a]
            .partial_cmp(&kappas[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut r_sorted = r.clone();
    r_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut scales = vec![0.0; c];
    for (rank, &class) in order.iter().enumerate() {
        scales[class] = s0 * r_sorted[c - 1 - rank];
    }
    Ok(scales)
}

/// ETF diagnostics of a prototype matrix.
#[derive(Debug, Clone, Copy)]
pub struct EtfDiagnostics {
    /// max over i != j of |w_i . w_j + 1/(C-1)|
    pub max_offdiag_deviation: f64,
    /// ratio of largest to smallest singular value above 1e-10
    pub gram_condition: f64,
}

/// Measures how far C unit-norm prototype rows sit from a simplex
/// equiangular tight frame. Rank-deficient directions (singular values
/// at or below 1e-10) are excluded from the condition number.
pub fn etf_diagnostics(prototypes: &Matrix) -> EtfDiagnostics {
    let c = prototypes.nrows();
    assert!(c >= 2, "ETF diagnostics need at least 2 prototypes");
    let gram = prototypes.gram();
    let target = -1.0 / (c as f64 - 1.0);
    let mut dev: f64 = 0.0;
    for i in 0..c {
        for j in 0..c {
            if i != j {
                dev = dev.max((gram.row(i)[j] - target).abs());
            }
        }
    }
    let eig = symmetric_eigenvalues(&gram);
    let singular: Vec<f64> = eig.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let retained: Vec<f64> = singular.iter().cloned().filter(|&s| s > 1e-10).collect();
    let gram_condition = match (retained.first(), retained.last()) {
        (Some(&min), Some(&max)) => max / min,
        _ => f64::INFINITY,
    };
    EtfDiagnostics {
        max_offdiag_deviation: dev,
        gram_condition,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn voronoi_angle_small_counts() {
        assert_abs_diff_eq!(
            voronoi_apex_angle(2).unwrap(),
            std::f64::consts::PI,
            epsilon = 1e-15
        );
        assert_relative_eq!(voronoi_apex_angle(11).unwrap(), 1.67096, max_relative = 1e-5);
        assert!(voronoi_apex_angle(1).is_err());
    }

    #[test]
    fn voronoi_angle_approaches_right_angle_from_above() {
        let mut last = voronoi_apex_angle(2).unwrap();
        for c in 3..200 {
            let a = voronoi_apex_angle(c).unwrap();
            assert!(a < last);
            assert!(a > std::f64::consts::FRAC_PI_2);
            last = a;
        }
    }

    #[test]
    fn adaptive_margin_examples() {
        // both terms non-positive
        assert_eq!(adaptive_margin(1.2, 1.67, 1.2).unwrap(), 0.0);
        // direct evaluations
        assert_abs_diff_eq!(
            adaptive_margin(1.9, 1.67096, 1.2).unwrap(),
            0.35,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            adaptive_margin(2.0, 1.8, 2.0).unwrap(),
            0.1,
            epsilon = 1e-12
        );
        // the cap bounds every margin reachable from valid apex angles
        for i in 1..=64 {
            let theta = std::f64::consts::PI * i as f64 / 64.0;
            let m = adaptive_margin(theta, 0.05, 0.01).unwrap();
            assert!(m <= MARGIN_CAP);
        }
        // invariant violation
        assert!(adaptive_margin(1.0, 1.5, 1.2).is_err());
    }

    #[test]
    fn adaptive_margin_monotone_in_theta() {
        let mut last = -1.0;
        for i in 0..100 {
            let theta = 0.5 + 2.0 * i as f64 / 100.0;
            let m = adaptive_margin(theta, 1.67, 0.5).unwrap();
            assert!(m >= last);
            last = m;
        }
    }

    #[test]
    fn scales_equal_kappas_give_base_scale() {
        let s = concentration_scales(&[7.0, 7.0, 7.0, 7.0], 20.0).unwrap();
        for v in s {
            assert_abs_diff_eq!(v, 20.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn scales_two_class_example() {
        // kappa = (e^2, 1): r = 2 softmax(1, 0), then reversed
        let e2 = std::f64::consts::E * std::f64::consts::E;
        let s = concentration_scales(&[e2, 1.0], 1.0).unwrap();
        let hi = 2.0 * std::f64::consts::E / (std::f64::consts::E + 1.0);
        let lo = 2.0 / (std::f64::consts::E + 1.0);
        assert_abs_diff_eq!(s[0], lo, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], hi, epsilon = 1e-12);
        assert_abs_diff_eq!(s[0], 0.53788, epsilon = 1e-5);
        assert_abs_diff_eq!(s[1], 1.46212, epsilon = 1e-5);
    }

    #[test]
    fn scales_reverse_the_concentration_order() {
        let kappas = [3.0, 800.0, 0.5, 42.0, 41.9];
        let s = concentration_scales(&kappas, 10.0).unwrap();
        // Spearman correlation of s against kappa must be exactly -1
        let rank = |xs: &[f64]| -> Vec<usize> {
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
            let mut r = vec![0; xs.len()];
            for (pos, &i) in idx.iter().enumerate() {
                r[i] = pos;
            }
            r
        };
        let rk = rank(&kappas);
        let rs = rank(&s);
        for i in 0..kappas.len() {
            assert_eq!(rk[i] + rs[i], kappas.len() - 1, "ranks must mirror");
        }
    }

    #[test]
    fn etf_diagnostics_exact_simplex() {
        // simplex ETF for C = 4 embedded in R^4: columns of the centered
        // identity, scaled to unit norm
        let c = 4usize;
        let mut rows = Vec::new();
        for i in 0..c {
            let mut v = vec![-1.0 / c as f64; c];
            v[i] += 1.0;
            let n = crate::linalg::norm(&v);
            rows.push(v.into_iter().map(|x| x / n).collect::<Vec<_>>());
        }
        let m = Matrix::from_rows(&rows).unwrap();
        let diag = etf_diagnostics(&m);
        assert_abs_diff_eq!(diag.max_offdiag_deviation, 0.0, epsilon = 1e-12);
        assert_relative_eq!(diag.gram_condition, 1.0, max_relative = 1e-10);
        // retained singular values all equal sqrt(C/(C-1))
        let eig = symmetric_eigenvalues(&m.gram());
        let expected = (c as f64 / (c as f64 - 1.0)).sqrt();
        for &l in eig.iter().filter(|&&l| l.max(0.0).sqrt() > 1e-10) {
            assert_relative_eq!(l.max(0.0).sqrt(), expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn etf_diagnostics_orthonormal_prototypes() {
        let m = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let diag = etf_diagnostics(&m);
        assert_abs_diff_eq!(diag.max_offdiag_deviation, 0.5, epsilon = 1e-12);
        assert_relative_eq!(diag.gram_condition, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn etf_diagnostics_collapsed_pair() {
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let diag = etf_diagnostics(&m);
        assert_abs_diff_eq!(diag.max_offdiag_deviation, 2.0, epsilon = 1e-12);
        assert_relative_eq!(diag.gram_condition, 1.0, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn scales_keep_unit_mean(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let c = rng.random_range(2usize..12);
            let kappas: Vec<f64> =
                (0..c).map(|_| 10f64.powf(rng.random_range(-3.0..6.0))).collect();
            let s0 = rng.random_range(0.5..40.0);
            let s = concentration_scales(&kappas, s0).unwrap();
            let mean = s.iter().sum::<f64>() / c as f64;
            prop_assert!((mean / s0 - 1.0).abs() < 1e-9);
        }

        #[test]
        fn lower_concentration_never_gets_smaller_margin(i in 0usize..30, j in 0usize..30) {
            // margins computed from apex angles move opposite to kappa
            let grid: Vec<f64> = (1..=30).map(|k| k as f64 * 30.0).collect();
            let theta = |k: f64| crate::vmf::apex_angle_approx(k, 32, 0.95);
            let cell = voronoi_apex_angle(8).unwrap();
            let tmin = theta(grid[grid.len() - 1]);
            let (ki, kj) = (grid[i], grid[j]);
            let (mi, mj) = (
                adaptive_margin(theta(ki), cell, tmin).unwrap(),
                adaptive_margin(theta(kj), cell, tmin).unwrap(),
            );
            if ki < kj {
                prop_assert!(mi >= mj);
            }
        }
    }
}
