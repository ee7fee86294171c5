//! Imbalance-aware metric learning on the unit hypersphere.
//!
//! The crate models per-class embedding concentration with von
//! Mises-Fisher distributions, turns the gap between each class's
//! confidence cone and its Voronoi cell into an adaptive angular margin,
//! reallocates logit scales by reverse concentration ranking, and
//! classifies with geometric-median prototypes. A synthetic long-tailed
//! benchmark, a small deterministic trainer and a metrics suite make the
//! geometric dynamics observable end to end.
//!
//! Start with the runnable programs under `examples/`; each one exercises
//! a single capability. The `margin` binary drives full experiments
//! (`gen`, `train`, `eval`, `kappa`).

pub mod cli;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod loss;
pub mod metrics;
pub mod proto;
pub mod sphere;
pub mod special;
pub mod synth;
pub mod trainer;
pub mod vmf;

pub use error::{Error, Result};
