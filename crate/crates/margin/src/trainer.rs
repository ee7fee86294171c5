//! Shallow-encoder training loop with an epoch-wise geometry refresh.
//! The geometry snapshot (concentrations, apex angles, margins, scales)
//! is computed from a full pass over the training set at the start of
//! every epoch and frozen for all of that epoch's batches; validation
//! metrics and prototype diagnostics are recorded after the epoch's
//! updates, using geometric-median prototypes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{
    adaptive_margin, concentration_scales, etf_diagnostics, voronoi_apex_angle, ClassGeometry,
    GeometrySnapshot,
};
use crate::linalg::{norm, Matrix};
use crate::loss::margin_loss;
use crate::metrics::{evaluate_all, MetricsRecord};
use crate::proto::{build_prototypes, classify, PrototypeSet};
use crate::sphere::{sample_uniform_sphere, EmbeddingBatch};
use crate::synth::{Dataset, RawBatch};
use crate::vmf::{apex_angle_approx, estimate_kappa};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
}

/// One affine layer, weights stored out x in.
#[derive(Debug, Clone)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// A small feed-forward encoder mapping raw ambient inputs to embedding
/// space. The default is a single affine layer (a linear probe); the
/// two-layer variant applies tanh between the layers.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub layers: Vec<Layer>,
    pub activation: Activation,
}

impl Encoder {
    pub fn in_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().weights.nrows()
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        self.forward_cached(x).1
    }

    /// Forward pass keeping each layer's input for backpropagation.
    fn forward_cached(&self, x: &Matrix) -> (Vec<Matrix>, Matrix) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for (li, layer) in self.layers.iter().enumerate() {
            inputs.push(cur.clone());
            let mut out = cur.matmul_nt(&layer.weights);
            for i in 0..out.nrows() {
                for (o, b) in out.row_mut(i).iter_mut().zip(&layer.bias) {
                    *o += b;
                }
            }
            let last = li + 1 == self.layers.len();
            if !last && self.activation == Activation::Tanh {
                for v in out.data_mut() {
                    *v = v.tanh();
                }
            }
            cur = out;
        }
        (inputs, cur)
    }

    /// Gradients (dW, db) per layer for a given output gradient. Hidden
    /// activations are recomputed from the cached layer inputs.
    fn backward(&self, inputs: &[Matrix], grad_out: &Matrix) -> Vec<(Matrix, Vec<f64>)> {
        let mut grads = vec![None; self.layers.len()];
        let mut g = grad_out.clone();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let x = &inputs[li];
            // activation output of this layer feeds layer li+1; its input
            // gradient must pass back through tanh when not the last layer
            let dw = g.matmul_tn(x);
            let db: Vec<f64> = (0..g.ncols())
                .map(|j| (0..g.nrows()).map(|i| g.row(i)[j]).sum())
                .collect();
            grads[li] = Some((dw, db));
            if li > 0 {
                let mut gx = g.matmul_nn(&layer.weights);
                if self.activation == Activation::Tanh {
                    // inputs[li] holds tanh(pre-activation) of layer li-1
                    for i in 0..gx.nrows() {
                        for (gv, hv) in gx.row_mut(i).iter_mut().zip(x.row(i)) {
                            *gv *= 1.0 - hv * hv;
                        }
                    }
                }
                g = gx;
            }
        }
        grads.into_iter().map(|g| g.unwrap()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    Margin,
    CosineBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Linear,
    Tanh { hidden: usize },
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub s0: f64,
    /// vMF confidence level for the apex angles
    pub alpha: f64,
    pub mode: TrainMode,
    pub seed: u64,
    pub encoder: EncoderKind,
}

impl TrainConfig {
    /// The defaults used throughout: SGD momentum 0.9, constant learning
    /// rate 0.05, batches of 64, alpha = 0.95, linear encoder.
    pub fn new(epochs: usize, s0: f64, mode: TrainMode, seed: u64) -> Self {
        TrainConfig {
            epochs,
            batch_size: 64,
            learning_rate: 0.05,
            momentum: 0.9,
            s0,
            alpha: 0.95,
            mode,
            seed,
            encoder: EncoderKind::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::Config(format!(
                "s0 must be positive, got {}",
                self.s0
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if let EncoderKind::Tanh { hidden } = self.encoder {
            if hidden < 2 {
                return Err(Error::Config(format!(
                    "hidden width must be at least 2, got {hidden}"
                )));
            }
        }
        Ok(())
    }
}

/// Borrowed view of the splits a training run consumes.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub train: &'a RawBatch,
    pub val: &'a RawBatch,
    pub classes: usize,
    pub d_embed: usize,
}

impl Dataset {
    pub fn train_data(&self) -> TrainData<'_> {
        TrainData {
            train: &self.train,
            val: &self.val,
            classes: self.classes,
            d_embed: self.d_embed,
        }
    }
}

/// Per-epoch record: the geometry frozen at the epoch start, the epoch's
/// mean training loss, and the post-epoch validation metrics and
/// median-prototype diagnostics.
#[derive(Debug, Clone)]
pub struct EpochTrace {
    pub epoch: usize,
    pub train_loss: f64,
    pub kappas: Vec<f64>,
    pub theta_vmfs: Vec<f64>,
    pub margins: Vec<f64>,
    pub scales: Vec<f64>,
    pub metrics: MetricsRecord,
    pub gram_condition: f64,
    pub etf_deviation: f64,
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub encoder: Encoder,
    pub prototypes: PrototypeSet,
    pub traces: Vec<EpochTrace>,
    /// geometry of the final trained state (margins/scales zeroed to the
    /// baseline in cosine mode, matching what the epoch used)
    pub final_snapshot: GeometrySnapshot,
}

/// Full forward pass over the training inputs, per-class concentration
/// estimation, apex angles, margins and scales, assembled into one
/// snapshot. Every class in [0, classes) must be present.
pub fn refresh_geometry(
    encoder: &Encoder,
    data: &RawBatch,
    classes: usize,
    s0: f64,
    alpha: f64,
) -> Result<GeometrySnapshot> {
    let embedded = encoder.forward(&data.rows);
    let batch = EmbeddingBatch::new(embedded, data.labels.clone())?;
    snapshot_from_embeddings(&batch, classes, s0, alpha)
}

/// Geometry snapshot straight from unit-norm embeddings.
pub fn snapshot_from_embeddings(
    batch: &EmbeddingBatch,
    classes: usize,
    s0: f64,
    alpha: f64,
) -> Result<GeometrySnapshot> {
    let d_embed = batch.dim();
    let theta_cell = voronoi_apex_angle(classes)?;
    let mut kappas = Vec::with_capacity(classes);
    let mut mus = Vec::with_capacity(classes);
    let mut thetas = Vec::with_capacity(classes);
    for c in 0..classes {
        let idx = batch.class_indices(c);
        if idx.is_empty() {
            return Err(Error::MissingClass(c));
        }
        let rows = batch.rows().select_rows(&idx);
        let (mu, kappa) = estimate_kappa(&rows, d_embed)?;
        thetas.push(apex_angle_approx(kappa, d_embed, alpha));
        kappas.push(kappa);
        mus.push(mu);
    }
    let theta_vmf_min = thetas.iter().cloned().fold(f64::INFINITY, f64::min);
    let scales = concentration_scales(&kappas, s0)?;
    let mut class_geometries = Vec::with_capacity(classes);
    for (c, mu) in mus.into_iter().enumerate() {
        class_geometries.push(ClassGeometry {
            class_id: c,
            mu,
            kappa: kappas[c],
            theta_vmf: thetas[c],
            margin: adaptive_margin(thetas[c], theta_cell, theta_vmf_min)?,
            scale: scales[c],
        });
    }
    Ok(GeometrySnapshot {
        classes: class_geometries,
        theta_cell,
        theta_vmf_min,
        s0,
        alpha,
    })
}

fn init_encoder(kind: EncoderKind, in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Encoder {
    let mut make_layer = |fan_in: usize, fan_out: usize| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut weights = Matrix::zeros(fan_out, fan_in);
        for w in weights.data_mut() {
            *w = rng.random_range(-bound..bound);
        }
        Layer {
            weights,
            bias: vec![0.0; fan_out],
        }
    };
    match kind {
        EncoderKind::Linear => Encoder {
            layers: vec![make_layer(in_dim, out_dim)],
            activation: Activation::Identity,
        },
        EncoderKind::Tanh { hidden } => Encoder {
            layers: vec![make_layer(in_dim, hidden), make_layer(hidden, out_dim)],
            activation: Activation::Tanh,
        },
    }
}

fn renormalize_rows(m: &mut Matrix) {
    for i in 0..m.nrows() {
        let r = m.row_mut(i);
        let n = norm(r);
        if n > 0.0 {
            for x in r.iter_mut() {
                *x /= n;
            }
        }
    }
}

/// Trains the encoder and weight prototypes with SGD plus momentum,
/// refreshing the geometry at every epoch start (margin mode) or holding
/// margins at zero and scales at s0 (cosine baseline). Weight prototype
/// rows are re-normalized after every optimizer step.
pub fn train(data: &TrainData<'_>, config: &TrainConfig) -> Result<TrainOutput> {
    config.validate()?;
    if data.classes < 2 {
        return Err(Error::Config(format!(
            "training needs at least 2 classes, got {}",
            data.classes
        )));
    }
    if data.train.is_empty() {
        return Err(Error::DegenerateInput("empty training split".into()));
    }
    for c in 0..data.classes {
        if data.train.class_indices(c).is_empty() {
            return Err(Error::MissingClass(c));
        }
    }
    if let Some(bad) = data.train.labels.iter().find(|&&l| l >= data.classes) {
        return Err(Error::InvalidParameter(format!(
            "label {bad} outside [0, {})",
            data.classes
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let in_dim = data.train.dim();
    let mut encoder = init_encoder(config.encoder, in_dim, data.d_embed, &mut rng);
    let mut prototypes = Matrix::zeros(data.classes, data.d_embed);
    for c in 0..data.classes {
        let u = sample_uniform_sphere(data.d_embed, &mut rng);
        prototypes.row_mut(c).copy_from_slice(u.coords());
    }

    let mut vel_layers: Vec<(Matrix, Vec<f64>)> = encoder
        .layers
        .iter()
        .map(|l| {
            (
                Matrix::zeros(l.weights.nrows(), l.weights.ncols()),
                vec![0.0; l.bias.len()],
            )
        })
        .collect();
    let mut vel_protos = Matrix::zeros(data.classes, data.d_embed);

    let n_train = data.train.len();
    let mut traces = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        // frozen geometry for this epoch
        let refreshed =
            refresh_geometry(&encoder, data.train, data.classes, config.s0, config.alpha)?;
        let snapshot = match config.mode {
            TrainMode::Margin => refreshed,
            TrainMode::CosineBaseline => refreshed.baseline(),
        };

        let mut order: Vec<usize> = (0..n_train).collect();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_no, chunk) in order.chunks(config.batch_size).enumerate() {
            let x = data.train.rows.select_rows(chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| data.train.labels[i]).collect();
            let (inputs, embedded) = encoder.forward_cached(&x);
            let eval = match margin_loss(&embedded, &prototypes, &labels, &snapshot) {
                Ok(e) => e,
                Err(Error::Numerical(_)) => {
                    return Err(Error::Divergence {
                        epoch,
                        batch: batch_no,
                    })
                }
                Err(e) => return Err(e),
            };
            loss_sum += eval.loss * chunk.len() as f64;

            let layer_grads = encoder.backward(&inputs, &eval.grad_embeddings);
            for (li, (dw, db)) in layer_grads.into_iter().enumerate() {
                let (vw, vb) = &mut vel_layers[li];
                for (v, g) in vw.data_mut().iter_mut().zip(dw.data()) {
                    *v = config.momentum * *v + g;
                }
                for (v, g) in vb.iter_mut().zip(&db) {
                    *v = config.momentum * *v + g;
                }
                let layer = &mut encoder.layers[li];
                for (w, v) in layer.weights.data_mut().iter_mut().zip(vw.data()) {
                    *w -= config.learning_rate * v;
                }
                for (b, v) in layer.bias.iter_mut().zip(vb.iter()) {
                    *b -= config.learning_rate * v;
                }
            }
            for (v, g) in vel_protos
                .data_mut()
                .iter_mut()
                .zip(eval.grad_prototypes.data())
            {
                *v = config.momentum * *v + g;
            }
            for (p, v) in prototypes.data_mut().iter_mut().zip(vel_protos.data()) {
                *p -= config.learning_rate * v;
            }
            renormalize_rows(&mut prototypes);
        }
        let train_loss = loss_sum / n_train as f64;

        // post-epoch evaluation with geometric-median prototypes
        let train_embedded = encoder.forward(&data.train.rows);
        let train_batch = EmbeddingBatch::new(train_embedded, data.train.labels.clone())?;
        let medians = build_prototypes(&train_batch, data.classes)?;
        let val_embedded = encoder.forward(&data.val.rows);
        let val_batch = EmbeddingBatch::new(val_embedded, data.val.labels.clone())?;
        let predictions = classify(val_batch.rows(), &medians);
        let metrics = evaluate_all(&val_batch, &predictions, data.classes)?;
        let diag = etf_diagnostics(&medians);

        traces.push(EpochTrace {
            epoch,
            train_loss,
            kappas: snapshot.classes.iter().map(|c| c.kappa).collect(),
            theta_vmfs: snapshot.classes.iter().map(|c| c.theta_vmf).collect(),
            margins: snapshot.margins(),
            scales: snapshot.scales(),
            metrics,
            gram_condition: diag.gram_condition,
            etf_deviation: diag.max_offdiag_deviation,
        });
    }

    // prototypes and geometry of the final trained state
    let train_embedded = encoder.forward(&data.train.rows);
    let train_batch = EmbeddingBatch::new(train_embedded, data.train.labels.clone())?;
    let medians = build_prototypes(&train_batch, data.classes)?;
    let source_counts = (0..data.classes)
        .map(|c| train_batch.class_indices(c).len())
        .collect();
    let refreshed = refresh_geometry(&encoder, data.train, data.classes, config.s0, config.alpha)?;
    let final_snapshot = match config.mode {
        TrainMode::Margin => refreshed,
        TrainMode::CosineBaseline => refreshed.baseline(),
    };

    Ok(TrainOutput {
        encoder,
        prototypes: PrototypeSet {
            weight_prototypes: prototypes,
            median_prototypes: medians,
            source_counts,
        },
        traces,
        final_snapshot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::synth::{generate, BenchSpec};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // keep the call sites below readable
    use super::train as train_run;

    fn toy_dataset(seed: u64) -> Dataset {
        generate(&BenchSpec {
            classes: 2,
            d_embed: 8,
            d_ambient: 8,
            counts: vec![300, 300],
            kappas: vec![100.0, 100.0],
            noise_sigma: 0.0,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn refresh_geometry_symmetric_classes_get_equal_margins_and_scales() {
        // every class carries the same embedding multiset up to a cyclic
        // coordinate shift, an exact isometry
        let base: Vec<Vec<f64>> = vec![
            vec![0.9, 0.1, 0.2, 0.1, 0.0, 0.3, 0.1, 0.1],
            vec![0.8, 0.2, 0.1, 0.3, 0.1, 0.2, 0.0, 0.2],
            vec![0.85, 0.15, 0.25, 0.2, 0.05, 0.25, 0.05, 0.15],
        ];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in 0..4usize {
            for r in &base {
                let mut shifted = vec![0.0; 8];
                for (i, v) in r.iter().enumerate() {
                    shifted[(i + 2 * class) % 8] = *v;
                }
                rows.push(shifted);
                labels.push(class);
            }
        }
        let batch =
            EmbeddingBatch::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap();
        let snap = snapshot_from_embeddings(&batch, 4, 20.0, 0.95).unwrap();
        for c in &snap.classes {
            assert_abs_diff_eq!(c.margin, snap.classes[0].margin, epsilon = 1e-6);
            assert_abs_diff_eq!(c.scale, 20.0, epsilon = 1e-6);
        }
        let mean_scale: f64 =
            snap.classes.iter().map(|c| c.scale).sum::<f64>() / snap.classes.len() as f64;
        assert_abs_diff_eq!(mean_scale / snap.s0, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn refresh_geometry_two_class_reference_values() {
        // kappa-hat = (400, 25), d = 32: theta = sqrt(chi2_0.95(31)/kappa)
        let q = crate::special::chi_square_quantile(0.95, 31.0);
        let t400 = (q / 400.0_f64).sqrt();
        let t25 = (q / 25.0_f64).sqrt();
        assert_abs_diff_eq!(t400, 0.3354, epsilon = 2e-4);
        assert_abs_diff_eq!(t25, 1.3415, epsilon = 2e-4);
        assert_abs_diff_eq!(
            apex_angle_approx(400.0, 32, 0.95),
            t400,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(apex_angle_approx(25.0, 32, 0.95), t25, epsilon = 1e-12);
        // margins per the adaptive rule with theta_cell = pi (two classes)
        let cell = voronoi_apex_angle(2).unwrap();
        let m400 = adaptive_margin(t400, cell, t400).unwrap();
        let m25 = adaptive_margin(t25, cell, t400).unwrap();
        assert_eq!(m400, 0.0);
        assert_abs_diff_eq!(m25, (t25 - t400) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn missing_class_is_reported() {
        let ds = toy_dataset(5);
        let mut train = ds.train.clone();
        for l in train.labels.iter_mut() {
            *l = 0;
        }
        let data = TrainData {
            train: &train,
            val: &ds.val,
            classes: 2,
            d_embed: 8,
        };
        let config = TrainConfig::new(1, 16.0, TrainMode::Margin, 0);
        match train_run(&data, &config) {
            Err(Error::MissingClass(1)) => {}
            other => panic!("expected MissingClass(1), got {other:?}"),
        }
    }

    #[test]
    fn zero_epochs_is_rejected_and_one_epoch_gives_one_trace() {
        let ds = toy_dataset(6);
        let data = ds.train_data();
        let mut config = TrainConfig::new(0, 16.0, TrainMode::Margin, 1);
        assert!(train_run(&data, &config).is_err());
        config.epochs = 1;
        let out = train_run(&data, &config).unwrap();
        assert_eq!(out.traces.len(), 1);
        assert_eq!(out.traces[0].epoch, 1);
    }

    #[test]
    fn fixed_seed_reproduces_the_final_loss_exactly() {
        let ds = toy_dataset(7);
        let data = ds.train_data();
        let config = TrainConfig::new(3, 16.0, TrainMode::Margin, 42);
        let a = train_run(&data, &config).unwrap();
        let b = train_run(&data, &config).unwrap();
        let la = a.traces.last().unwrap().train_loss;
        let lb = b.traces.last().unwrap().train_loss;
        assert_eq!(la.to_bits(), lb.to_bits());
    }

    #[test]
    fn separable_toy_problem_reaches_high_validation_accuracy() {
        let ds = toy_dataset(8);
        let data = ds.train_data();
        let mut config = TrainConfig::new(10, 16.0, TrainMode::Margin, 3);
        config.batch_size = 32;
        let out = train_run(&data, &config).unwrap();
        let val_embedded = out.encoder.forward(&ds.val.rows);
        let val_batch = EmbeddingBatch::new(val_embedded, ds.val.labels.clone()).unwrap();
        let pred = classify(val_batch.rows(), &out.prototypes.median_prototypes);
        let correct = pred
            .iter()
            .zip(&ds.val.labels)
            .filter(|(p, t)| p == t)
            .count();
        let accuracy = correct as f64 / pred.len() as f64;
        assert!(accuracy >= 0.99, "validation accuracy {accuracy}");
    }

    #[test]
    fn baseline_mode_holds_margins_at_zero_and_scales_at_s0() {
        let ds = toy_dataset(9);
        let data = ds.train_data();
        let config = TrainConfig::new(2, 12.0, TrainMode::CosineBaseline, 4);
        let out = train_run(&data, &config).unwrap();
        for trace in &out.traces {
            assert!(trace.margins.iter().all(|&m| m == 0.0));
            assert!(trace.scales.iter().all(|&s| s == 12.0));
            // concentrations are still the measured ones
            assert!(trace.kappas.iter().all(|&k| k > 0.0));
        }
    }

    #[test]
    fn prototype_rows_stay_unit_norm() {
        let ds = toy_dataset(10);
        let data = ds.train_data();
        let config = TrainConfig::new(3, 16.0, TrainMode::Margin, 5);
        let out = train_run(&data, &config).unwrap();
        for c in 0..2 {
            assert_abs_diff_eq!(
                norm(out.prototypes.weight_prototypes.row(c)),
                1.0,
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(
                norm(out.prototypes.median_prototypes.row(c)),
                1.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn tanh_encoder_trains_too() {
        let ds = toy_dataset(11);
        let data = ds.train_data();
        let mut config = TrainConfig::new(6, 16.0, TrainMode::Margin, 6);
        config.encoder = EncoderKind::Tanh { hidden: 16 };
        let out = train_run(&data, &config).unwrap();
        assert_eq!(out.encoder.layers.len(), 2);
        let first = out.traces.first().unwrap().train_loss;
        let last = out.traces.last().unwrap().train_loss;
        assert!(last < first, "loss did not improve: {first} -> {last}");
    }

    #[test]
    fn tanh_encoder_gradients_are_correct() {
        // finite differences through the full encoder + loss chain
        use crate::loss::LossEvaluation;
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut encoder = init_encoder(EncoderKind::Tanh { hidden: 5 }, 4, 3, &mut rng);
        let mut x = Matrix::zeros(6, 4);
        for v in x.data_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let mut protos = Matrix::zeros(2, 3);
        for v in protos.data_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let labels: Vec<usize> = (0..6).map(|i| i % 2).collect();

        let eval_loss = |enc: &Encoder| -> LossEvaluation {
            let e = enc.forward(&x);
            crate::loss::cosine_softmax_loss(&e, &protos, &labels, 4.0).unwrap()
        };
        let (inputs, embedded) = encoder.forward_cached(&x);
        let eval = crate::loss::cosine_softmax_loss(&embedded, &protos, &labels, 4.0).unwrap();
        let grads = encoder.backward(&inputs, &eval.grad_embeddings);

        let h = 1e-6;
        for li in 0..encoder.layers.len() {
            for idx in 0..encoder.layers[li].weights.data().len() {
                let orig = encoder.layers[li].weights.data()[idx];
                encoder.layers[li].weights.data_mut()[idx] = orig + h;
                let up = eval_loss(&encoder).loss;
                encoder.layers[li].weights.data_mut()[idx] = orig - h;
                let down = eval_loss(&encoder).loss;
                encoder.layers[li].weights.data_mut()[idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads[li].0.data()[idx];
                assert_abs_diff_eq!(analytic, numeric, epsilon = 5e-6);
            }
            for idx in 0..encoder.layers[li].bias.len() {
                let orig = encoder.layers[li].bias[idx];
                encoder.layers[li].bias[idx] = orig + h;
                let up = eval_loss(&encoder).loss;
                encoder.layers[li].bias[idx] = orig - h;
                let down = eval_loss(&encoder).loss;
                encoder.layers[li].bias[idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                assert_abs_diff_eq!(grads[li].1[idx], numeric, epsilon = 5e-6);
            }
        }
    }
}
