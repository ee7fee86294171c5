//! Synthetic long-tailed, difficulty-imbalanced classification problems.
//! Class frequency skew comes from a geometric count schedule; difficulty
//! skew comes from per-class vMF concentrations. Samples are lifted into
//! a higher-dimensional ambient space through a fixed random full-rank
//! map plus Gaussian noise, so an encoder has to learn the inverse map.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::voronoi_apex_angle;
use crate::linalg::Matrix;
use crate::sphere::{angle_between, sample_uniform_sphere};
use crate::vmf::{sample as sample_vmf, VmfParams, KAPPA_MAX, KAPPA_MIN};

/// Raw (not unit-norm) input rows with class labels: what an encoder
/// consumes and what dataset CSV files carry.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBatch {
    pub rows: Matrix,
    pub labels: Vec<usize>,
}

impl RawBatch {
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn class_indices(&self, c: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == c).collect()
    }
}

/// Full description of one synthetic benchmark problem.
#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub classes: usize,
    pub d_embed: usize,
    pub d_ambient: usize,
    /// per-class sample counts, head first
    pub counts: Vec<usize>,
    /// per-class true concentrations
    pub kappas: Vec<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Config(format!(
                "classes must be at least 2, got {}",
                self.classes
            )));
        }
        if self.d_embed < 2 {
            return Err(Error::Config(format!(
                "d_embed must be at least 2, got {}",
                self.d_embed
            )));
        }
        if self.d_ambient < self.d_embed {
            return Err(Error::Config(format!(
                "d_ambient {} must be at least d_embed {}",
                self.d_ambient, self.d_embed
            )));
        }
        if self.counts.len() != self.classes || self.kappas.len() != self.classes {
            return Err(Error::Config(format!(
                "counts/kappas must list all {} classes",
                self.classes
            )));
        }
        if let Some(bad) = self.counts.iter().find(|&&c| c < 2) {
            return Err(Error::Config(format!(
                "every class needs at least 2 samples, got {bad}"
            )));
        }
        if let Some(bad) = self
            .kappas
            .iter()
            .find(|k| !(KAPPA_MIN..=KAPPA_MAX).contains(*k))
        {
            return Err(Error::Config(format!(
                "kappa {bad} outside [{KAPPA_MIN}, {KAPPA_MAX}]"
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Declared imbalance ratio max(count) / min(count).
    pub fn imbalance_ratio(&self) -> f64 {
        let max = *self.counts.iter().max().unwrap() as f64;
        let min = *self.counts.iter().min().unwrap() as f64;
        max / min
    }
}

/// A generated problem: train/val/test raw splits plus the planted class
/// directions and concentrations.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: RawBatch,
    pub val: RawBatch,
    pub test: RawBatch,
    pub directions: Matrix,
    pub kappas: Vec<f64>,
    pub classes: usize,
    pub d_embed: usize,
}

/// Geometric long-tail schedule n_c = round(n_max * ratio^(-c/(C-1))),
/// floored at 2 samples per class.
pub fn count_schedule(classes: usize, n_max: usize, ratio: f64) -> Vec<usize> {
    assert!(ratio >= 1.0, "imbalance ratio must be at least 1");
    assert!(classes >= 1);
    (0..classes)
        .map(|c| {
            let exponent = if classes > 1 {
                -(c as f64) / (classes as f64 - 1.0)
            } else {
                0.0
            };
            ((n_max as f64 * ratio.powf(exponent)).round() as usize).max(2)
        })
        .collect()
}

/// Per-class 8:1:1 split sizes, rounding toward train.
pub fn split_sizes(count: usize) -> (usize, usize, usize) {
    let val = count / 10;
    let test = count / 10;
    (count - val - test, val, test)
}

pub fn generate(spec: &BenchSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let c = spec.classes;
    let de = spec.d_embed;
    let da = spec.d_ambient;

    // planted class directions with a pairwise separation floor
    let min_angle = 0.5 * voronoi_apex_angle(c)?;
    let mut directions = Matrix::zeros(c, de);
    let mut placed = 0;
    let mut tries = 0;
    while placed < c {
        if tries >= 10_000 {
            return Err(Error::Config(format!(
                "could not place {c} class directions at pairwise angle >= \
                 {min_angle:.3} rad in {de} dimensions; increase d_embed"
            )));
        }
        tries += 1;
        let candidate = sample_uniform_sphere(de, &mut rng);
        let ok = (0..placed)
            .all(|j| angle_between(candidate.coords(), directions.row(j)) >= min_angle);
        if ok {
            directions.row_mut(placed).copy_from_slice(candidate.coords());
            placed += 1;
        }
    }

    // fixed random full-rank lift; the identity when the dimensions match
    let lift = if da == de {
        None
    } else {
        let mut l = Matrix::zeros(da, de);
        for x in l.data_mut() {
            *x = rng.sample(StandardNormal);
        }
        Some(l)
    };

    let mut splits: [Vec<(Vec<f64>, usize)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for class in 0..c {
        let count = spec.counts[class];
        let mu = crate::sphere::normalize(directions.row(class))?;
        let params = VmfParams::new(mu, spec.kappas[class])?;
        let latent = sample_vmf(&params, count, &mut rng);
        let (n_train, n_val, _) = split_sizes(count);
        for i in 0..count {
            let z = latent.rows().row(i);
            let mut x = match &lift {
                Some(l) => (0..da)
                    .map(|r| crate::linalg::dot(l.row(r), z))
                    .collect::<Vec<f64>>(),
                None => z.to_vec(),
            };
            if spec.noise_sigma > 0.0 {
                for xv in x.iter_mut() {
                    let noise: f64 = rng.sample(StandardNormal);
                    *xv += spec.noise_sigma * noise;
                }
            }
            let bucket = if i < n_train {
                0
            } else if i < n_train + n_val {
                1
            } else {
                2
            };
            splits[bucket].push((x, class));
        }
    }

    let build = |part: &[(Vec<f64>, usize)]| -> Result<RawBatch> {
        let rows: Vec<Vec<f64>> = part.iter().map(|(x, _)| x.clone()).collect();
        let labels: Vec<usize> = part.iter().map(|(_, l)| *l).collect();
        Ok(RawBatch {
            rows: Matrix::from_rows(&rows)?,
            labels,
        })
    };

    Ok(Dataset {
        train: build(&splits[0])?,
        val: build(&splits[1])?,
        test: build(&splits[2])?,
        directions,
        kappas: spec.kappas.clone(),
        classes: c,
        d_embed: de,
    })
}
