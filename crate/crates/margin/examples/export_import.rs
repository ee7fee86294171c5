//! File interchange without the CLI: write a dataset to embedding CSVs,
//! read it back bit-exactly, and inspect per-class geometry the way the
//! `kappa` subcommand does. The same CSV schema is the import path for
//! embeddings produced by any external encoder.
//!
//! ```bash
//! cargo run --example export_import
//! ```

use margin::cli::csv_io::{read_embeddings, write_embeddings};
use margin::sphere::EmbeddingBatch;
use margin::synth::{count_schedule, generate, BenchSpec};
use margin::vmf::estimate_kappa;

fn main() {
    let spec = BenchSpec {
        classes: 3,
        d_embed: 16,
        d_ambient: 16,
        counts: count_schedule(3, 400, 8.0),
        kappas: vec![120.0, 40.0, 12.0],
        noise_sigma: 0.0,
        seed: 9,
    };
    let ds = generate(&spec).unwrap();

    let dir = std::env::temp_dir().join("margin_export_import");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("train.csv");
    write_embeddings(&path, &ds.train).unwrap();
    let back = read_embeddings(&path).unwrap();
    println!(
        "wrote {} rows to {}; read back identical: {}",
        ds.train.len(),
        path.display(),
        back == ds.train
    );

    // normalized on load, per-class concentration like `margin kappa`
    let unit = EmbeddingBatch::new(back.rows.clone(), back.labels.clone()).unwrap();
    println!("\nclass  count  kappa_hat  (planted)");
    for c in 0..3 {
        let idx = unit.class_indices(c);
        let rows = unit.rows().select_rows(&idx);
        let (_, kappa) = estimate_kappa(&rows, unit.dim()).unwrap();
        println!(
            "{c:<6} {:<6} {kappa:<10.2} {:.1}",
            idx.len(),
            spec.kappas[c]
        );
    }
    std::fs::remove_file(&path).ok();
}
