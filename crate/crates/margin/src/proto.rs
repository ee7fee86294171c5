//! Data-driven geometric-median prototypes and nearest-prototype
//! classification in angular space.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::sphere::{EmbeddingBatch, UnitVector};

/// Trainable weight prototypes next to the data-driven medians used at
/// inference, both row-unit-norm.
#[derive(Debug, Clone)]
pub struct PrototypeSet {
    pub weight_prototypes: Matrix,
    pub median_prototypes: Matrix,
    /// per-class sample counts behind each median
    pub source_counts: Vec<usize>,
}

/// One Weiszfeld run before projection to the sphere: the raw Euclidean
/// median, the objective after every iterate, and whether the iteration
/// stopped on a data point (the classical anchor case).
#[derive(Debug, Clone)]
pub struct WeiszfeldRun {
    pub median: Vec<f64>,
    pub objectives: Vec<f64>,
    pub iterations: usize,
    pub anchored: bool,
}

fn objective(points: &Matrix, p: &[f64]) -> f64 {
    (0..points.nrows())
        .map(|i| {
            let mut s = 0.0;
            for (a, b) in points.row(i).iter().zip(p) {
                s += (a - b) * (a - b);
            }
            s.sqrt()
        })
        .sum()
}

/// Weiszfeld fixed-point iteration for the Euclidean geometric median of
/// the rows of `points`, initialized at the normalized mean. An iterate
/// landing within 1e-12 of a data point stops there (the plain update is
/// undefined at data points).
pub fn weiszfeld(points: &Matrix, tol: f64, max_iter: usize) -> Result<WeiszfeldRun> {
    if points.nrows() == 0 {
        return Err(Error::DegenerateInput(
            "geometric median of an empty set".into(),
        ));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let m = points.nrows();
    let d = points.ncols();
    if m == 1 {
        return Ok(WeiszfeldRun {
            median: points.row(0).to_vec(),
            objectives: vec![0.0],
            iterations: 0,
            anchored: true,
        });
    }

    let mut mean = vec![0.0; d];
    for i in 0..m {
        for (s, x) in mean.iter_mut().zip(points.row(i)) {
            *s += x / m as f64;
        }
    }
    let init_norm = norm(&mean);
    if init_norm <= 1e-12 {
        return Err(Error::DegenerateInput(
            "mean of the input points vanishes; the median direction is undefined".into(),
        ));
    }
    let mut p: Vec<f64> = mean.iter().map(|x| x / init_norm).collect();

    let mut objectives = vec![objective(points, &p)];
    let mut anchored = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        // distances to every point; stop on a coincident data point
        let mut weights = Vec::with_capacity(m);
        let mut hit = None;
        for i in 0..m {
            let mut s = 0.0;
            for (a, b) in points.row(i).iter().zip(&p) {
                s += (a - b) * (a - b);
            }
            let dist = s.sqrt();
            if dist <= 1e-12 {
                hit = Some(i);
                break;
            }
            weights.push(1.0 / dist);
        }
        if let Some(i) = hit {
            p = points.row(i).to_vec();
            objectives.push(objective(points, &p));
            anchored = true;
            break;
        }
        let wsum: f64 = weights.iter().sum();
        let mut next = vec![0.0; d];
        for i in 0..m {
            for (nx, x) in next.iter_mut().zip(points.row(i)) {
                *nx += weights[i] * x / wsum;
            }
        }
        iterations += 1;
        let step: f64 = next
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        p = next;
        objectives.push(objective(points, &p));
        if step < tol {
            break;
        }
    }
    Ok(WeiszfeldRun {
        median: p,
        objectives,
        iterations,
        anchored,
    })
}

/// Euclidean geometric median of unit rows, projected back to the sphere.
pub fn geometric_median(points: &Matrix, tol: f64, max_iter: usize) -> Result<UnitVector> {
    let run = weiszfeld(points, tol, max_iter)?;
    if norm(&run.median) <= 1e-12 {
        return Err(Error::DegenerateInput(
            "geometric median vanished before projection".into(),
        ));
    }
    UnitVector::new(run.median)
}

/// Per-class geometric-median prototypes (tol 1e-9, at most 1000
/// iterations each). Every class in [0, C) needs at least one sample.
pub fn build_prototypes(train: &EmbeddingBatch, class_count: usize) -> Result<Matrix> {
    let d = train.dim();
    let mut medians = Matrix::zeros(class_count, d);
    for c in 0..class_count {
        let idx = train.class_indices(c);
        if idx.is_empty() {
            return Err(Error::MissingClass(c));
        }
        let pts = train.rows().select_rows(&idx);
        let median = geometric_median(&pts, 1e-9, 1000)?;
        medians.row_mut(c).copy_from_slice(median.coords());
    }
    Ok(medians)
}

/// Nearest-prototype labels: per-row argmax of the dot products with the
/// prototype rows, ties broken by the smallest class id.
pub fn classify(rows: &Matrix, prototypes: &Matrix) -> Vec<usize> {
    assert_eq!(
        rows.ncols(),
        prototypes.ncols(),
        "dimension mismatch between rows and prototypes"
    );
    (0..rows.nrows())
        .map(|i| {
            let r = rows.row(i);
            let mut best = 0;
            let mut best_dot = dot(r, prototypes.row(0));
            for j in 1..prototypes.nrows() {
                let dj = dot(r, prototypes.row(j));
                if dj > best_dot {
                    best_dot = dj;
                    best = j;
                }
            }
            best
        })
        .collect()
}
