//! Numerically safe primitives for points and angles on the unit
//! hypersphere S^{d-1}. All learning in this crate happens on the sphere;
//! every angle below is a geodesic distance in radians.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};

/// Tolerance inside which a vector counts as unit-norm. Vectors further
/// out are re-normalized rather than rejected, which keeps values built
/// from drifting optimizer state usable.
pub const UNIT_TOL: f64 = 1e-9;

/// A point on S^{d-1}, d >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Builds a unit vector, re-normalizing when the input is off the
    /// sphere by more than [`UNIT_TOL`].
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "unit vector needs dimension >= 2, got {}",
                coords.len()
            )));
        }
        let n = norm(&coords);
        if !n.is_finite() || n <= 0.0 {
            return Err(Error::DegenerateInput(
                "cannot normalize a zero-norm vector".into(),
            ));
        }
        if (n - 1.0).abs() <= UNIT_TOL {
            return Ok(UnitVector { coords });
        }
        let coords = coords.iter().map(|x| x / n).collect();
        Ok(UnitVector { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Projects `v` onto the sphere. Errors on zero-norm input.
pub fn normalize(v: &[f64]) -> Result<UnitVector> {
    UnitVector::new(v.to_vec())
}

/// Geodesic angle between two unit vectors, in [0, pi]. The dot product
/// is clamped to [-1, 1] so rounding past the poles can never produce a
/// non-finite angle.
pub fn angular_distance(a: &UnitVector, b: &UnitVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("dimension {}", a.dim()),
            got: format!("dimension {}", b.dim()),
        });
    }
    Ok(angle_between(a.coords(), b.coords()))
}

/// Angle between two unit-norm slices; callers guarantee equal lengths.
pub(crate) fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

/// Draws a point uniformly on S^{d-1} by normalizing d independent
/// standard Gaussians.
pub fn sample_uniform_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> UnitVector {
    assert!(d >= 2, "sphere dimension must be at least 2");
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(u) = UnitVector::new(v) {
            return u;
        }
        // astronomically unlikely zero draw; try again
    }
}

/// A batch of unit-norm embedding rows with class labels.
#[derive(Debug, Clone)]
pub struct EmbeddingBatch {
    rows: Matrix,
    labels: Vec<usize>,
}

impl EmbeddingBatch {
    /// Re-normalizes every row; errors on an empty batch, a zero row or a
    /// label/row count mismatch.
    pub fn new(mut rows: Matrix, labels: Vec<usize>) -> Result<Self> {
        if rows.nrows() == 0 {
            return Err(Error::DegenerateInput("empty embedding batch".into()));
        }
        if labels.len() != rows.nrows() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} labels", rows.nrows()),
                got: format!("{}", labels.len()),
            });
        }
        if rows.ncols() < 2 {
            return Err(Error::InvalidParameter(format!(
                "embeddings need dimension >= 2, got {}",
                rows.ncols()
            )));
        }
        for i in 0..rows.nrows() {
            let r = rows.row_mut(i);
            let n = norm(r);
            if !n.is_finite() || n <= 0.0 {
                return Err(Error::DegenerateInput(format!(
                    "row {i} has zero norm"
                )));
            }
            if (n - 1.0).abs() > UNIT_TOL {
                for x in r.iter_mut() {
                    *x /= n;
                }
            }
        }
        Ok(EmbeddingBatch { rows, labels })
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Row indices belonging to class `c`.
    pub fn class_indices(&self, c: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == c).collect()
    }
}
