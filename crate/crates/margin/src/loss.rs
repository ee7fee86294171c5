//! Forward and analytic-gradient evaluation of the cosine softmax
//! baseline and the adaptive-margin objective, plus the central-difference
//! harness that certifies the gradients.
//!
//! Both losses normalize their inputs internally; all gradients are taken
//! with respect to the *pre-normalization* embeddings and prototypes, so
//! they can be chained straight into an encoder.

use crate::error::{Error, Result};
use crate::geometry::GeometrySnapshot;
use crate::linalg::{dot, norm, Matrix};

/// Scalar loss plus gradients and the logits that produced it.
#[derive(Debug, Clone)]
pub struct LossEvaluation {
    /// mean cross-entropy over the batch
    pub loss: f64,
    /// n x d, w.r.t. pre-normalization embeddings
    pub grad_embeddings: Matrix,
    /// C x d, w.r.t. pre-normalization prototypes
    pub grad_prototypes: Matrix,
    /// n x C scaled logits
    pub logits: Matrix,
}

fn validate_inputs(embeddings: &Matrix, prototypes: &Matrix, labels: &[usize]) -> Result<()> {
    if embeddings.nrows() == 0 {
        return Err(Error::DegenerateInput("empty embedding batch".into()));
    }
    if embeddings.ncols() != prototypes.ncols() {
        return Err(Error::ShapeMismatch {
            expected: format!("embedding dimension {}", prototypes.ncols()),
            got: format!("{}", embeddings.ncols()),
        });
    }
    if labels.len() != embeddings.nrows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels", embeddings.nrows()),
            got: format!("{}", labels.len()),
        });
    }
    let c = prototypes.nrows();
    if let Some(bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::InvalidParameter(format!(
            "label {bad} outside [0, {c})"
        )));
    }
    Ok(())
}

/// Row-normalizes a copy of `m`; errors on zero rows.
fn normalize_rows(m: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let mut unit = m.clone();
    let mut norms = Vec::with_capacity(m.nrows());
    for i in 0..m.nrows() {
        let r = unit.row_mut(i);
        let n = norm(r);
        if !n.is_finite() || n <= 0.0 {
            return Err(Error::DegenerateInput(format!("row {i} has zero norm")));
        }
        for x in r.iter_mut() {
            *x /= n;
        }
        norms.push(n);
    }
    Ok((unit, norms))
}

/// Pulls a gradient w.r.t. unit rows back through v -> v / |v|:
/// grad_v = (g - (g . u) u) / |v|.
fn backprop_normalization(grad_unit: &Matrix, unit: &Matrix, norms: &[f64]) -> Matrix {
    let mut out = grad_unit.clone();
    for i in 0..out.nrows() {
        let u = unit.row(i);
        let g = out.row_mut(i);
        let along = dot(g, u);
        for (gk, uk) in g.iter_mut().zip(u) {
            *gk = (*gk - along * uk) / norms[i];
        }
    }
    out
}

/// Softmax cross-entropy over logit rows: returns (mean loss, dL/dz with
/// the 1/n factor folded in).
fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> (f64, Matrix) {
    let n = logits.nrows();
    let mut grad = logits.clone();
    let mut total = 0.0;
    for i in 0..n {
        let row = grad.row_mut(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for z in row.iter_mut() {
            *z = (*z - max).exp();
            denom += *z;
        }
        total += denom.ln() - (logits.row(i)[labels[i]] - max);
        for z in row.iter_mut() {
            *z /= denom * n as f64;
        }
        row[labels[i]] -= 1.0 / n as f64;
    }
    (total / n as f64, grad)
}

/// Cosine softmax loss: logits s0 cos(theta_j), mean cross-entropy,
/// gradients through the normalization of both inputs.
pub fn cosine_softmax_loss(
    embeddings: &Matrix,
    prototypes: &Matrix,
    labels: &[usize],
    s0: f64,
) -> Result<LossEvaluation> {
    validate_inputs(embeddings, prototypes, labels)?;
    if s0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "scale must be positive, got {s0}"
        )));
    }
    let c = prototypes.nrows();
    evaluate(
        embeddings,
        prototypes,
        labels,
        &vec![0.0; c],
        &vec![s0; c],
    )
}

/// Adaptive-margin loss: the target logit is s_y cos(theta_y + m_y) with
/// theta + m clamped to [0, pi] (zero gradient on the clamp); every
/// negative logit is s_j cos(theta_j) with its own class scale.
pub fn margin_loss(
    embeddings: &Matrix,
    prototypes: &Matrix,
    labels: &[usize],
    snapshot: &GeometrySnapshot,
) -> Result<LossEvaluation> {
    validate_inputs(embeddings, prototypes, labels)?;
    if snapshot.class_count() != prototypes.nrows() {
        return Err(Error::InvalidParameter(format!(
            "snapshot covers {} classes but there are {} prototypes",
            snapshot.class_count(),
            prototypes.nrows()
        )));
    }
    evaluate(
        embeddings,
        prototypes,
        labels,
        &snapshot.margins(),
        &snapshot.scales(),
    )
}

/// Shared forward/backward pass. A zero margin short-circuits the angular
/// transform, so the baseline is reproduced bit for bit by zero margins
/// and uniform scales.
fn evaluate(
    embeddings: &Matrix,
    prototypes: &Matrix,
    labels: &[usize],
    margins: &[f64],
    scales: &[f64],
) -> Result<LossEvaluation> {
    let n = embeddings.nrows();
    let c = prototypes.nrows();
    let (e_unit, e_norms) = normalize_rows(embeddings)?;
    let (w_unit, w_norms) = normalize_rows(prototypes)?;

    let cos = e_unit.matmul_nt(&w_unit);
    let mut logits = Matrix::zeros(n, c);
    // per-entry dz/dcos factors; negatives use their own class scale
    let mut dz = Matrix::zeros(n, c);
    for i in 0..n {
        let y = labels[i];
        let lrow = logits.row_mut(i);
        let drow = dz.row_mut(i);
        for j in 0..c {
            if j == y && margins[y] > 0.0 {
                let cij = cos.row(i)[j].clamp(-1.0, 1.0);
                let theta = cij.acos();
                let shifted = (theta + margins[y]).clamp(0.0, std::f64::consts::PI);
                lrow[j] = scales[y] * shifted.cos();
                drow[j] = if theta + margins[y] >= std::f64::consts::PI {
                    0.0 // clamp boundary: the logit is locally flat
                } else {
                    scales[y] * shifted.sin() / theta.sin().max(1e-12)
                };
            } else {
                lrow[j] = scales[j] * cos.row(i)[j];
                drow[j] = scales[j];
            }
        }
    }

    let (loss, mut grad_z) = softmax_cross_entropy(&logits, labels);
    if !loss.is_finite() {
        return Err(Error::Numerical("non-finite loss".into()));
    }
    // dL/dcos
    for i in 0..n {
        let d = dz.row(i);
        for (g, f) in grad_z.row_mut(i).iter_mut().zip(d) {
            *g *= f;
        }
    }
    let grad_e_unit = grad_z.matmul_nn(&w_unit);
    let grad_w_unit = grad_z.matmul_tn(&e_unit);
    let grad_embeddings = backprop_normalization(&grad_e_unit, &e_unit, &e_norms);
    let grad_prototypes = backprop_normalization(&grad_w_unit, &w_unit, &w_norms);

    Ok(LossEvaluation {
        loss,
        grad_embeddings,
        grad_prototypes,
        logits,
    })
}

/// Central-difference verification of the analytic gradients. Returns the
/// max over all coordinates (both inputs) of
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
pub fn finite_difference_check<F>(
    loss_fn: F,
    embeddings: &Matrix,
    prototypes: &Matrix,
    h: f64,
) -> Result<f64>
where
    F: Fn(&Matrix, &Matrix) -> Result<LossEvaluation>,
{
    assert!(
        (1e-7..=1e-3).contains(&h),
        "step size must lie in [1e-7, 1e-3]"
    );
    let base = loss_fn(embeddings, prototypes)?;
    let mut worst: f64 = 0.0;

    for which in 0..2 {
        let analytic = if which == 0 {
            &base.grad_embeddings
        } else {
            &base.grad_prototypes
        };
        for idx in 0..analytic.data().len() {
            let mut plus_e = embeddings.clone();
            let mut minus_e = embeddings.clone();
            let mut plus_p = prototypes.clone();
            let mut minus_p = prototypes.clone();
            if which == 0 {
                plus_e.data_mut()[idx] += h;
                minus_e.data_mut()[idx] -= h;
            } else {
                plus_p.data_mut()[idx] += h;
                minus_p.data_mut()[idx] -= h;
            }
            let up = loss_fn(&plus_e, &plus_p)?.loss;
            let down = loss_fn(&minus_e, &minus_p)?.loss;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.data()[idx];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
