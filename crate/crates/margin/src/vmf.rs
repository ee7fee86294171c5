//! von Mises-Fisher modeling on S^{d-1}: log density, exact sampling,
//! concentration estimation and confidence-cone apex angles.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::special::{adaptive_simpson, chi_square_quantile, log_bessel_i};
use crate::sphere::{EmbeddingBatch, UnitVector};

/// Concentrations are clamped into this range; a singleton or perfectly
/// collapsed class would otherwise send the estimator to infinity.
pub const KAPPA_MIN: f64 = 1e-3;
pub const KAPPA_MAX: f64 = 1e6;

/// Parameters of a vMF distribution on S^{d-1}.
#[derive(Debug, Clone)]
pub struct VmfParams {
    pub mu: UnitVector,
    pub kappa: f64,
}

impl VmfParams {
    /// Clamps kappa into [`KAPPA_MIN`, `KAPPA_MAX`].
    pub fn new(mu: UnitVector, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive and finite, got {kappa}"
            )));
        }
        Ok(VmfParams {
            mu,
            kappa: kappa.clamp(KAPPA_MIN, KAPPA_MAX),
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }
}

/// The spherical cap holding probability mass `confidence` of a class.
#[derive(Debug, Clone)]
pub struct ConfidenceCone {
    pub axis: UnitVector,
    pub apex_angle: f64,
    pub confidence: f64,
}

/// Cone holding mass `alpha` of the distribution, apex angle from the
/// closed-form approximation.
pub fn confidence_cone(params: &VmfParams, alpha: f64) -> ConfidenceCone {
    ConfidenceCone {
        axis: params.mu.clone(),
        apex_angle: apex_angle_approx(params.kappa, params.dim(), alpha),
        confidence: alpha,
    }
}

/// log C_d(kappa): the vMF normalizer against the surface measure,
/// evaluated through a stable log-Bessel.
pub fn log_normalizer(kappa: f64, d: usize) -> Result<f64> {
    if !(KAPPA_MIN..=KAPPA_MAX).contains(&kappa) {
        return Err(Error::InvalidParameter(format!(
            "kappa {kappa} outside [{KAPPA_MIN}, {KAPPA_MAX}]"
        )));
    }
    let half_d = d as f64 / 2.0;
    let nu = half_d - 1.0;
    Ok(nu * kappa.ln() - half_d * (2.0 * std::f64::consts::PI).ln() - log_bessel_i(nu, kappa))
}

/// log p(x | mu, kappa) = log C_d(kappa) + kappa mu^T x.
pub fn log_density(x: &UnitVector, params: &VmfParams) -> Result<f64> {
    if x.dim() != params.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("dimension {}", params.dim()),
            got: format!("dimension {}", x.dim()),
        });
    }
    let log_c = log_normalizer(params.kappa, params.dim())?;
    Ok(log_c + params.kappa * dot(x.coords(), params.mu.coords()))
}

/// Draws `n` samples by tangent-normal decomposition with Wood's
/// rejection sampler for the cosine component.
pub fn sample<R: Rng + ?Sized>(params: &VmfParams, n: usize, rng: &mut R) -> EmbeddingBatch {
    assert!(n >= 1, "sample count must be at least 1");
    let d = params.dim();
    let kappa = params.kappa;
    let mu = params.mu.coords();
    let dm1 = (d - 1) as f64;

    let b = (-2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt()) / dm1;
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(dm1 / 2.0, dm1 / 2.0).expect("valid beta shape");

    let mut rows = Matrix::zeros(n, d);
    for i in 0..n {
        let w = loop {
            let z: f64 = beta.sample(rng);
            let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
            let u: f64 = rng.random::<f64>();
            if kappa * w + dm1 * (1.0 - x0 * w).ln() - c >= u.max(1e-300).ln() {
                break w;
            }
        };
        // tangent direction orthogonal to mu
        let v = loop {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let along = dot(&v, mu);
            for (vk, mk) in v.iter_mut().zip(mu) {
                *vk -= along * mk;
            }
            let nv = norm(&v);
            if nv > 1e-12 {
                for vk in v.iter_mut() {
                    *vk /= nv;
                }
                break v;
            }
        };
        let sin_part = (1.0 - w * w).max(0.0).sqrt();
        let row = rows.row_mut(i);
        for k in 0..d {
            row[k] = w * mu[k] + sin_part * v[k];
        }
        let nr = norm(row);
        for x in row.iter_mut() {
            *x /= nr;
        }
    }
    let labels = vec![0; n];
    EmbeddingBatch::new(rows, labels).expect("sampler rows are unit-norm")
}

/// Maximum-likelihood mean direction and concentration from unit-norm
/// rows: mu is the normalized arithmetic mean, kappa the high-dimensional
/// closed-form estimate kappa = r (d - r^2) / (1 - r^2) on the mean
/// resultant length r, which is clamped to [1e-6, 1 - 1e-6] first.
pub fn estimate_kappa(rows: &Matrix, d: usize) -> Result<(UnitVector, f64)> {
    if rows.nrows() == 0 {
        return Err(Error::DegenerateInput(
            "cannot estimate concentration from an empty batch".into(),
        ));
    }
    let n = rows.nrows() as f64;
    let mut mean = vec![0.0; rows.ncols()];
    for i in 0..rows.nrows() {
        for (m, x) in mean.iter_mut().zip(rows.row(i)) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let r_raw = norm(&mean);
    let mu = UnitVector::new(mean)?;
    let r = r_raw.clamp(1e-6, 1.0 - 1e-6);
    let kappa = (r * (d as f64 - r * r) / (1.0 - r * r)).clamp(KAPPA_MIN, KAPPA_MAX);
    Ok((mu, kappa))
}

/// Closed-form apex angle sqrt(chi^2_alpha(d-1) / kappa) of the vMF
/// confidence cone, capped at pi. Valid as a high-concentration
/// approximation; see [`apex_angle_exact`] for the reference inversion.
pub fn apex_angle_approx(kappa: f64, d: usize, alpha: f64) -> f64 {
    assert!(kappa > 0.0, "kappa must be positive");
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    assert!(d >= 2, "dimension must be at least 2");
    let q = chi_square_quantile(alpha, (d - 1) as f64);
    (q / kappa).sqrt().min(std::f64::consts::PI)
}

/// Inverts the marginal angle CDF
/// F(theta) = int_0^theta sin^{d-2}(t) e^{kappa cos t} dt / Z
/// by scaled adaptive quadrature plus bisection to 1e-8 in theta.
pub fn apex_angle_exact(kappa: f64, d: usize, alpha: f64) -> Result<f64> {
    assert!(kappa > 0.0, "kappa must be positive");
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    assert!(d >= 2, "dimension must be at least 2");
    let pi = std::f64::consts::PI;
    let dm2 = (d - 2) as f64;

    // log integrand, shifted by its maximum so the quadrature never
    // underflows even at extreme concentration
    let mode = if d == 2 {
        0.0
    } else {
        let c = (-dm2 + (dm2 * dm2 + 4.0 * kappa * kappa).sqrt()) / (2.0 * kappa);
        c.clamp(-1.0, 1.0).acos()
    };
    let log_f = |t: f64| -> f64 {
        let s = t.sin();
        if s <= 0.0 && dm2 > 0.0 {
            return f64::NEG_INFINITY;
        }
        dm2 * if dm2 > 0.0 { s.ln() } else { 0.0 } + kappa * t.cos()
    };
    let peak = log_f(if d == 2 { 0.0 } else { mode });
    let g = move |t: f64| {
        let lf = log_f(t);
        if lf.is_finite() {
            (lf - peak).exp()
        } else {
            0.0
        }
    };

    // curvature-based width of the peak, used to seed the quadrature with
    // subintervals that resolve sharp concentration
    let width = {
        let h = if d == 2 {
            kappa
        } else {
            dm2 / mode.sin().powi(2) + kappa * mode.cos().abs()
        };
        (1.0 / h.max(1e-300)).sqrt().min(pi)
    };
    let mut cuts = vec![0.0, pi];
    for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
        let t = mode + k * width;
        if t > 0.0 && t < pi {
            cuts.push(t);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();

    let piecewise = |a: f64, b: f64| -> Result<f64> {
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            let lo = w[0].max(a);
            let hi = w[1].min(b);
            if lo < hi {
                acc += adaptive_simpson(&g, lo, hi, 1e-12)?;
            }
        }
        Ok(acc)
    };

    let total = piecewise(0.0, pi)?;
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Numerical(
            "vMF angle normalizer did not converge".into(),
        ));
    }

    let mut lo = 0.0;
    let mut hi = pi;
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if piecewise(0.0, mid)? / total < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{normalize, sample_uniform_sphere};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(v: &[f64]) -> UnitVector {
        normalize(v).unwrap()
    }

    #[test]
    fn log_density_uniform_limit_on_s2() {
        // kappa -> 0 on S^2 approaches the uniform density 1/(4 pi)
        let mu = unit(&[0.0, 0.0, 1.0]);
        let params = VmfParams::new(mu, KAPPA_MIN).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let expected = -(4.0 * std::f64::consts::PI).ln();
        for _ in 0..32 {
            let x = sample_uniform_sphere(3, &mut rng);
            let ld = log_density(&x, &params).unwrap();
            assert_abs_diff_eq!(ld, expected, epsilon = 1e-3);
        }
    }

    #[test]
    fn log_density_is_maximized_at_the_mean_direction() {
        let mu = unit(&[0.2, -0.4, 0.6, 0.1]);
        let params = VmfParams::new(mu.clone(), 7.5).unwrap();
        let at_mode = log_density(&mu, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = sample_uniform_sphere(4, &mut rng);
            assert!(log_density(&x, &params).unwrap() <= at_mode + 1e-12);
        }
    }

    #[test]
    fn log_density_matches_s2_closed_form() {
        // C_3(kappa) = kappa / (4 pi sinh kappa): oracle evaluated directly
        let kappa = 2.0;
        let mu = unit(&[1.0, 0.0, 0.0]);
        let params = VmfParams::new(mu.clone(), kappa).unwrap();
        let log_c3 = (kappa / (4.0 * std::f64::consts::PI * kappa.sinh())).ln();
        let ld = log_density(&mu, &params).unwrap();
        assert_abs_diff_eq!(ld, log_c3 + kappa, epsilon = 1e-10);
    }

    #[test]
    fn log_density_rejects_unclamped_kappa() {
        assert!(log_normalizer(0.0, 3).is_err());
        assert!(log_normalizer(1e7, 3).is_err());
    }

    #[test]
    fn sampler_near_uniform_limit_has_tiny_mean() {
        let mu = unit(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let params = VmfParams::new(mu, KAPPA_MIN).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let batch = sample(&params, 10_000, &mut rng);
        let mut mean = vec![0.0; 8];
        for i in 0..batch.len() {
            for (m, x) in mean.iter_mut().zip(batch.rows().row(i)) {
                *m += x / batch.len() as f64;
            }
        }
        assert!(norm(&mean) < 0.05, "mean norm {}", norm(&mean));
    }

    /// Solves r (d - r^2)/(1 - r^2) = kappa for r in (0, 1): the expected
    /// mean resultant length under the concentration relation.
    fn solve_resultant(kappa: f64, d: usize) -> f64 {
        let f = |r: f64| r * (d as f64 - r * r) / (1.0 - r * r) - kappa;
        let mut lo = 1e-9;
        let mut hi = 1.0 - 1e-12;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn sampler_resultant_length_matches_concentration() {
        let d = 64;
        let kappa = 200.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mu = sample_uniform_sphere(d, &mut rng);
        let params = VmfParams::new(mu.clone(), kappa).unwrap();
        let batch = sample(&params, 20_000, &mut rng);
        let mut mean = vec![0.0; d];
        for i in 0..batch.len() {
            for (m, x) in mean.iter_mut().zip(batch.rows().row(i)) {
                *m += x / batch.len() as f64;
            }
        }
        let r_emp = norm(&mean);
        let r_expected = solve_resultant(kappa, d);
        assert_relative_eq!(r_emp, r_expected, max_relative = 0.01);

        // law of large numbers: the sample mean direction tracks mu
        let mean_dir = unit(&mean);
        let angle = crate::sphere::angular_distance(&mean_dir, &mu).unwrap();
        assert!(angle < 0.05, "mean direction drifted {angle} rad");
    }

    #[test]
    fn estimate_kappa_closed_form_values() {
        // r = 0.5, d = 3 -> 0.5 (3 - 0.25) / 0.75
        let rows = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        // construct a batch with known mean resultant length instead:
        // two unit rows at angle theta have r = cos(theta/2)
        let _ = rows;
        let target_r = 0.5;
        let half = (target_r as f64).acos();
        let a = vec![half.cos(), half.sin(), 0.0];
        let b = vec![half.cos(), -half.sin(), 0.0];
        let rows = Matrix::from_rows(&[a, b]).unwrap();
        let (_, kappa) = estimate_kappa(&rows, 3).unwrap();
        assert_relative_eq!(kappa, 0.5 * (3.0 - 0.25) / 0.75, max_relative = 1e-10);
        assert_relative_eq!(kappa, 1.83333, max_relative = 1e-5);
    }

    #[test]
    fn estimate_kappa_high_dimensional_value() {
        // r = 0.9, d = 768 evaluated straight from the formula
        let r: f64 = 0.9;
        let expected = r * (768.0 - r * r) / (1.0 - r * r);
        assert_relative_eq!(expected, 3634.057_894_736_842, max_relative = 1e-9);
        let half = r.acos();
        let mut a = vec![0.0; 768];
        let mut b = vec![0.0; 768];
        a[0] = half.cos();
        a[1] = half.sin();
        b[0] = half.cos();
        b[1] = -half.sin();
        let rows = Matrix::from_rows(&[a, b]).unwrap();
        let (_, kappa) = estimate_kappa(&rows, 768).unwrap();
        assert_relative_eq!(kappa, expected, max_relative = 1e-9);
    }

    #[test]
    fn estimate_kappa_collapsed_batch_clamps() {
        let row = vec![0.0, 0.6, 0.8];
        let rows = Matrix::from_rows(&[row.clone(), row.clone(), row]).unwrap();
        let (mu, kappa) = estimate_kappa(&rows, 3).unwrap();
        assert_eq!(kappa, KAPPA_MAX);
        assert_abs_diff_eq!(mu.coords()[1], 0.6, epsilon = 1e-9);
    }

    #[test]
    fn estimate_kappa_rejects_empty() {
        let rows = Matrix::zeros(0, 4);
        assert!(estimate_kappa(&rows, 4).is_err());
    }

    #[test]
    fn estimate_kappa_is_monotone_in_resultant_length() {
        let mut last = 0.0;
        for i in 1..40 {
            let r = i as f64 / 40.0;
            let half = r.acos();
            let a = vec![half.cos(), half.sin(), 0.0, 0.0];
            let b = vec![half.cos(), -half.sin(), 0.0, 0.0];
            let rows = Matrix::from_rows(&[a, b]).unwrap();
            let (_, kappa) = estimate_kappa(&rows, 4).unwrap();
            assert!(kappa > last, "kappa not increasing at r={r}");
            last = kappa;
        }
    }

    #[test]
    fn apex_angle_approx_reference_points() {
        // sqrt(chi2_0.95(2)/100) and sqrt(chi2_0.95(63)/1000)
        assert_relative_eq!(
            apex_angle_approx(100.0, 3, 0.95),
            (5.991_464_547_107_979_f64 / 100.0).sqrt(),
            max_relative = 1e-9
        );
        assert_relative_eq!(apex_angle_approx(100.0, 3, 0.95), 0.24477, max_relative = 1e-4);
        assert_relative_eq!(
            apex_angle_approx(1000.0, 64, 0.95),
            0.287_278,
            max_relative = 1e-5
        );
        // tiny kappa caps at pi
        assert_eq!(apex_angle_approx(KAPPA_MIN, 16, 0.95), std::f64::consts::PI);
    }

    #[test]
    fn apex_angle_approx_monotonicity() {
        let mut last = f64::INFINITY;
        for &k in &[1.0, 5.0, 20.0, 100.0, 1000.0, 1e5] {
            let a = apex_angle_approx(k, 16, 0.95);
            assert!(a < last, "apex angle must decrease in kappa");
            last = a;
        }
        let mut last = 0.0;
        for &al in &[0.05, 0.25, 0.5, 0.9, 0.99] {
            let a = apex_angle_approx(50.0, 16, al);
            assert!(a >= last, "apex angle must not decrease in alpha");
            last = a;
        }
    }

    #[test]
    fn apex_angle_exact_round_trips_its_cdf() {
        let kappa = 50.0;
        let d = 16;
        let alpha = 0.95;
        let theta = apex_angle_exact(kappa, d, alpha).unwrap();
        // evaluate the defining CDF at theta with an independent fixed-grid
        // trapezoid rule on the scaled integrand
        let dm2 = (d - 2) as f64;
        let lf = |t: f64| dm2 * t.sin().max(1e-300).ln() + kappa * t.cos();
        let peak = (0..=4000)
            .map(|i| lf(1e-9 + i as f64 * (std::f64::consts::PI - 2e-9) / 4000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let grid = |a: f64, b: f64| -> f64 {
            let n = 200_000;
            let h = (b - a) / n as f64;
            let mut acc = 0.5 * ((lf(a.max(1e-12)) - peak).exp() + (lf(b) - peak).exp());
            for i in 1..n {
                acc += (lf(a + i as f64 * h) - peak).exp();
            }
            acc * h
        };
        let f_theta = grid(0.0, theta) / grid(0.0, std::f64::consts::PI);
        assert_abs_diff_eq!(f_theta, alpha, epsilon = 1e-6);
    }

    #[test]
    fn apex_angle_exact_is_median_on_the_near_uniform_circle() {
        let theta = apex_angle_exact(KAPPA_MIN, 2, 0.5).unwrap();
        assert_abs_diff_eq!(theta, std::f64::consts::FRAC_PI_2, epsilon = 5e-3);
    }

    #[test]
    fn apex_angles_agree_in_the_high_concentration_regime() {
        // agreement within 5% whenever kappa >= 10 d
        for &(d, kappa) in &[(16usize, 200.0), (16, 1000.0), (32, 400.0), (64, 1000.0)] {
            let exact = apex_angle_exact(kappa, d, 0.95).unwrap();
            let approx = apex_angle_approx(kappa, d, 0.95);
            let rel = (approx - exact).abs() / exact;
            assert!(
                rel < 0.05,
                "d={d} kappa={kappa}: exact={exact} approx={approx} rel={rel}"
            );
        }
    }

    #[test]
    fn confidence_cone_carries_mass_alpha() {
        // empirical check: the cone's cap holds roughly its stated mass
        let d = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mu = sample_uniform_sphere(d, &mut rng);
        let params = VmfParams::new(mu.clone(), 400.0).unwrap();
        let cone = confidence_cone(&params, 0.95);
        assert!(cone.apex_angle > 0.0);
        let batch = sample(&params, 4000, &mut rng);
        let inside = (0..batch.len())
            .filter(|&i| {
                crate::sphere::angle_between(batch.rows().row(i), cone.axis.coords())
                    <= cone.apex_angle
            })
            .count();
        let frac = inside as f64 / batch.len() as f64;
        assert!((frac - 0.95).abs() < 0.03, "cone holds {frac} of the mass");
    }

    #[test]
    fn sample_then_estimate_recovers_kappa() {
        let d = 64;
        for &kappa in &[50.0, 200.0, 1000.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(kappa as u64);
            let mu = sample_uniform_sphere(d, &mut rng);
            let params = VmfParams::new(mu, kappa).unwrap();
            let batch = sample(&params, 20_000, &mut rng);
            let (_, est) = estimate_kappa(batch.rows(), d).unwrap();
            assert_relative_eq!(est, kappa, max_relative = 0.05);
        }
    }
}
