//! The four commands behind the `margin` binary. Each one is a plain
//! function over paths so tests can drive them in-process.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{adaptive_margin, voronoi_apex_angle};
use crate::linalg::norm;
use crate::proto::classify;
use crate::sphere::EmbeddingBatch;
use crate::synth::{generate, split_sizes, RawBatch};
use crate::trainer::{train, TrainData};
use crate::vmf::{apex_angle_approx, estimate_kappa};

use super::checkpoint::{Checkpoint, ClassScalars, GeometryScalars};
use super::config::RunConfig;
use super::csv_io::{fmt_f64, read_embeddings, write_embeddings, write_trace};
use super::report::EvalReport;

fn load_config(path: Option<&Path>, seed_override: Option<u64>) -> Result<RunConfig> {
    let path = path.ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut config = RunConfig::from_file(path)?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    Ok(config)
}

fn require_out(out: Option<&Path>) -> Result<&Path> {
    out.ok_or_else(|| Error::Config("--out is required".into()))
}

/// `gen`: write train/val/test embedding CSVs plus a manifest.
pub fn cmd_gen(config: Option<&Path>, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let config = load_config(config, seed)?;
    let out = require_out(out)?;
    let dataset = generate(&config.bench_spec())?;
    std::fs::create_dir_all(out)?;
    write_embeddings(&out.join("train.csv"), &dataset.train)?;
    write_embeddings(&out.join("val.csv"), &dataset.val)?;
    write_embeddings(&out.join("test.csv"), &dataset.test)?;

    let spec = config.bench_spec();
    let mut manifest = String::new();
    let _ = writeln!(manifest, "schema_version = {}", super::config::SCHEMA_VERSION);
    let _ = writeln!(manifest, "classes = {}", spec.classes);
    let _ = writeln!(manifest, "d_embed = {}", spec.d_embed);
    let _ = writeln!(manifest, "d_ambient = {}", spec.d_ambient);
    let _ = writeln!(manifest, "noise_sigma = {}", fmt_f64(spec.noise_sigma));
    let _ = writeln!(manifest, "seed = {}", spec.seed);
    let _ = writeln!(manifest, "imbalance_ratio = {}", fmt_f64(spec.imbalance_ratio()));
    for c in 0..spec.classes {
        let (tr, va, te) = split_sizes(spec.counts[c]);
        let _ = writeln!(
            manifest,
            "class_{c} = count {} kappa {} split {tr}/{va}/{te}",
            spec.counts[c],
            fmt_f64(spec.kappas[c]),
        );
    }
    std::fs::write(out.join("manifest.txt"), manifest)?;
    println!(
        "wrote {} train / {} val / {} test rows to {}",
        dataset.train.len(),
        dataset.val.len(),
        dataset.test.len(),
        out.display()
    );
    Ok(())
}

/// `train`: run the training loop on CSV splits, write checkpoint and
/// per-epoch trace.
pub fn cmd_train(
    config: Option<&Path>,
    seed: Option<u64>,
    data: &Path,
    out: Option<&Path>,
) -> Result<()> {
    let config = load_config(config, seed)?;
    let out = require_out(out)?;
    let train_batch = read_embeddings(&data.join("train.csv"))?;
    let val_batch = read_embeddings(&data.join("val.csv"))?;
    if train_batch.dim() != config.d_ambient {
        return Err(Error::ShapeMismatch {
            expected: format!("d_ambient {} columns", config.d_ambient),
            got: format!("{} columns in train.csv", train_batch.dim()),
        });
    }
    if val_batch.dim() != train_batch.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", train_batch.dim()),
            got: format!("{} columns in val.csv", val_batch.dim()),
        });
    }

    let data_view = TrainData {
        train: &train_batch,
        val: &val_batch,
        classes: config.classes,
        d_embed: config.d_embed,
    };
    let output = train(&data_view, &config.train_config())?;

    std::fs::create_dir_all(out)?;
    write_trace(&out.join("trace.csv"), &output.traces, config.classes)?;
    let snapshot = &output.final_snapshot;
    let checkpoint = Checkpoint {
        encoder: output.encoder,
        weight_prototypes: output.prototypes.weight_prototypes,
        median_prototypes: output.prototypes.median_prototypes,
        geometry: GeometryScalars {
            theta_cell: snapshot.theta_cell,
            theta_vmf_min: snapshot.theta_vmf_min,
            s0: snapshot.s0,
            alpha: snapshot.alpha,
            per_class: snapshot
                .classes
                .iter()
                .map(|c| ClassScalars {
                    kappa: c.kappa,
                    theta_vmf: c.theta_vmf,
                    margin: c.margin,
                    scale: c.scale,
                })
                .collect(),
        },
        seed: config.seed,
        epochs: config.epochs as u32,
    };
    checkpoint.save(&out.join("checkpoint.bin"))?;
    let last = output.traces.last().expect("at least one epoch");
    println!(
        "trained {} epochs: loss {:.4}, val macro FNR+FPR {:.4}; wrote {}",
        last.epoch,
        last.train_loss,
        last.metrics.macro_fnr_plus_fpr,
        out.display()
    );
    Ok(())
}

/// Classifies a raw batch with a checkpoint's encoder and median
/// prototypes, returning the normalized embeddings and predictions.
pub fn evaluate_with_checkpoint(
    checkpoint: &Checkpoint,
    batch: &RawBatch,
) -> Result<(EmbeddingBatch, Vec<usize>)> {
    if batch.dim() != checkpoint.encoder.in_dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} input columns", checkpoint.encoder.in_dim()),
            got: format!("{}", batch.dim()),
        });
    }
    let embedded = checkpoint.encoder.forward(&batch.rows);
    let unit = EmbeddingBatch::new(embedded, batch.labels.clone())?;
    let predictions = classify(unit.rows(), &checkpoint.median_prototypes);
    Ok((unit, predictions))
}

/// Builds the JSON report for a checkpoint against a data CSV.
pub fn eval_report(checkpoint: &Checkpoint, batch: &RawBatch) -> Result<EvalReport> {
    let classes = checkpoint.median_prototypes.nrows();
    if let Some(bad) = batch.labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidParameter(format!(
            "label {bad} outside [0, {classes})"
        )));
    }
    let (unit, predictions) = evaluate_with_checkpoint(checkpoint, batch)?;
    EvalReport::build(&unit, &predictions, classes)
}

/// `eval`: classify a CSV with a checkpoint's median prototypes, write
/// report.json and print the report.
pub fn cmd_eval(checkpoint_path: &Path, data: &Path, out: Option<&Path>) -> Result<()> {
    let out = require_out(out)?;
    let checkpoint = Checkpoint::load(checkpoint_path)?;
    let batch = read_embeddings(data)?;
    let report = eval_report(&checkpoint, &batch)?;
    let json = report.to_json();
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("report.json"), &json)?;
    print!("{json}");
    Ok(())
}

/// `kappa`: per-class concentration report for an embedding CSV. Rows
/// are normalized on load; concentrations use alpha = 0.95.
pub fn cmd_kappa(data: &Path) -> Result<()> {
    let batch = read_embeddings(data)?;
    let unit = EmbeddingBatch::new(batch.rows.clone(), batch.labels.clone())?;
    let d = unit.dim();
    let mut present: Vec<usize> = {
        let mut set: Vec<usize> = unit.labels().to_vec();
        set.sort_unstable();
        set.dedup();
        set
    };
    present.sort_unstable();

    struct ClassRow {
        class: usize,
        count: usize,
        r_bar: f64,
        kappa: f64,
        theta: f64,
    }
    let alpha = 0.95;
    let mut rows = Vec::new();
    for &c in &present {
        let idx = unit.class_indices(c);
        if idx.len() < 2 {
            eprintln!(
                "warning: class {c} has {} row(s); kappa is reported at the clamp",
                idx.len()
            );
        }
        let pts = unit.rows().select_rows(&idx);
        // raw mean resultant length before clamping
        let mut mean = vec![0.0; d];
        for &i in &idx {
            for (m, x) in mean.iter_mut().zip(unit.rows().row(i)) {
                *m += x / idx.len() as f64;
            }
        }
        let r_bar = norm(&mean);
        let (_, kappa) = estimate_kappa(&pts, d)?;
        rows.push(ClassRow {
            class: c,
            count: idx.len(),
            r_bar,
            kappa,
            theta: apex_angle_approx(kappa, d, alpha),
        });
    }

    println!("dimension: {d}, classes present: {}", present.len());
    if present.len() >= 2 {
        let theta_cell = voronoi_apex_angle(present.len())?;
        let theta_min = rows.iter().map(|r| r.theta).fold(f64::INFINITY, f64::min);
        println!("theta_cell (C = {}) = {theta_cell:.5}", present.len());
        println!("class  count  r_bar      kappa          theta_vmf  margin");
        for r in &rows {
            let margin = adaptive_margin(r.theta, theta_cell, theta_min)?;
            println!(
                "{:<6} {:<6} {:<10.6} {:<14.4} {:<10.5} {:.5}",
                r.class, r.count, r.r_bar, r.kappa, r.theta, margin
            );
        }
    } else {
        println!("single class: theta_cell is undefined for C = 1; margins omitted");
        println!("class  count  r_bar      kappa          theta_vmf");
        for r in &rows {
            println!(
                "{:<6} {:<6} {:<10.6} {:<14.4} {:.5}",
                r.class, r.count, r.r_bar, r.kappa, r.theta
            );
        }
    }
    Ok(())
}
