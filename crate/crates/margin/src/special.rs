//! Scalar special functions backing the vMF machinery: log-gamma,
//! regularized incomplete gamma, chi-square quantiles, a stable
//! log-Bessel I, and adaptive Simpson quadrature.

use crate::error::{Error, Result};

/// Natural log of the gamma function for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    assert!(x > 0.0, "ln_gamma requires a positive argument");
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0.
/// Series for x < a + 1, continued fraction otherwise.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "invalid incomplete gamma arguments");
    if x == 0.0 {
        return 0.0;
    }
    let ln_pre = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // series representation
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (ln_pre.exp() * sum).min(1.0)
    } else {
        // Lentz continued fraction for Q(a, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (1.0 - ln_pre.exp() * h).clamp(0.0, 1.0)
    }
}

/// Quantile of the standard normal distribution (Acklam's rational
/// approximation); used only to seed quantile bisections.
pub fn standard_normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal quantile needs p in (0, 1)");
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.02425;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// alpha-quantile of the chi-square distribution with `k` degrees of
/// freedom: Wilson-Hilferty initial guess, then bisection on the
/// regularized incomplete gamma CDF.
pub fn chi_square_quantile(alpha: f64, k: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "quantile needs alpha in (0, 1)");
    assert!(k > 0.0, "degrees of freedom must be positive");
    let cdf = |x: f64| regularized_gamma_p(k / 2.0, x / 2.0);
    let z = standard_normal_quantile(alpha);
    let wh = {
        let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
        if t > 0.0 {
            k * t * t * t
        } else {
            k * 1e-3
        }
    };
    // bracket the root around the Wilson-Hilferty guess
    let mut lo = wh;
    let mut hi = wh.max(1e-12);
    while cdf(lo) > alpha && lo > 1e-290 {
        lo /= 2.0;
    }
    while cdf(hi) < alpha && hi < 1e290 {
        hi *= 2.0;
    }
    lo = lo.min(hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// log I_nu(x) for nu >= 0, x >= 0: power series for moderate arguments,
/// Hankel's fixed-order expansion for large x at small nu, and the
/// uniform (in x/nu) asymptotic expansion for large nu.
pub fn log_bessel_i(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x >= 0.0, "log_bessel_i domain is nu, x >= 0");
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if x < 500.0 {
        // all-positive power series; stable, overflow-free below x ~ 700
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..600 {
            let kf = k as f64;
            term *= q / ((kf + 1.0) * (nu + kf + 1.0));
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) + sum.ln()
    } else if nu < 15.0 {
        // Hankel's expansion around e^x / sqrt(2 pi x)
        let mu = 4.0 * nu * nu;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..16 {
            let kf = k as f64;
            term *= -(mu - (2.0 * kf + 1.0).powi(2)) / (8.0 * x * (kf + 1.0));
            sum += term;
        }
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln()
    } else {
        // uniform asymptotic expansion I_nu(nu z), z = x / nu
        let z = x / nu;
        let root = (1.0 + z * z).sqrt();
        let eta = root + (z / (1.0 + root)).ln();
        let t = 1.0 / root;
        let t2 = t * t;
        let u1 = t * (3.0 - 5.0 * t2) / 24.0;
        let u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0;
        let u3 = t * t2
            * (30375.0 - 369_603.0 * t2 + 765_765.0 * t2 * t2 - 425_425.0 * t2 * t2 * t2)
            / 414_720.0;
        let u4 = t2
            * t2
            * (4_465_125.0 - 94_121_676.0 * t2 + 349_922_430.0 * t2 * t2
                - 446_185_740.0 * t2 * t2 * t2
                + 185_910_725.0 * t2 * t2 * t2 * t2)
            / 39_813_120.0;
        let series = 1.0 + u1 / nu + u2 / (nu * nu) + u3 / nu.powi(3) + u4 / nu.powi(4);
        nu * eta - 0.5 * (2.0 * std::f64::consts::PI * nu).ln() - 0.25 * (1.0 + z * z).ln()
            + series.ln()
    }
}

/// Adaptive Simpson quadrature of `f` over [a, b] to absolute tolerance
/// `tol`. Errors if the recursion cannot reach the tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> Option<f64> {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        if depth == 0 {
            return None;
        }
        let l = recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)?;
        let r = recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)?;
        Some(l + r)
    }

    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 60).ok_or_else(|| {
        Error::Numerical(format!(
            "adaptive quadrature failed to converge on [{a}, {b}]"
        ))
    })
}
