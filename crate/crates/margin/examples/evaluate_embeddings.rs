//! The evaluation stack on its own: confusion matrix, binary collapse,
//! macro one-vs-all scores, the distortion proxy and clustering quality.
//! Useful as a template for scoring externally produced embeddings.
//!
//! ```bash
//! cargo run --example evaluate_embeddings
//! ```

use margin::linalg::Matrix;
use margin::metrics::{
    angular_silhouette, binary_metrics, clustering_scores, cwe_macro_metrics, macro_fnr_fpr,
    ConfusionMatrix,
};
use margin::proto::{build_prototypes, classify};
use margin::sphere::{sample_uniform_sphere, EmbeddingBatch};
use margin::vmf::{sample, VmfParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    // three classes on S^15 with different compactness
    let d = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, &kappa) in [60.0, 25.0, 8.0].iter().enumerate() {
        let mu = sample_uniform_sphere(d, &mut rng);
        let draws = sample(&VmfParams::new(mu, kappa).unwrap(), 120, &mut rng);
        for i in 0..draws.len() {
            rows.push(draws.rows().row(i).to_vec());
            labels.push(c);
        }
    }
    let batch = EmbeddingBatch::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap();

    // median prototypes from the batch itself, then self-classification
    let medians = build_prototypes(&batch, 3).unwrap();
    let predictions = classify(batch.rows(), &medians);
    let cm = ConfusionMatrix::from_labels(batch.labels(), &predictions, 3).unwrap();

    println!("confusion matrix (rows = truth):");
    for row in cm.rows() {
        println!("  {row:?}");
    }
    let binary = binary_metrics(&cm, 0).unwrap();
    let macros = cwe_macro_metrics(&cm, 0).unwrap();
    println!("\nbinary (class 0 = non-vulnerable):");
    println!(
        "  mcc {:.4}  f1 {:.4}  recall {:.4}  precision {:.4}",
        binary.mcc, binary.f1, binary.recall, binary.precision
    );
    println!("macro over the other classes:");
    println!(
        "  mcc {:.4}  f1 {:.4}  recall {:.4}  precision {:.4}",
        macros.mcc, macros.f1, macros.recall, macros.precision
    );
    println!("macro FNR + FPR (distortion proxy) = {:.4}", macro_fnr_fpr(&cm));

    let clustering = clustering_scores(batch.labels(), &predictions).unwrap();
    println!(
        "clustering: nmi {:.4}  ari {:.4}  angular silhouette {:.4}",
        clustering.nmi,
        clustering.ari,
        angular_silhouette(&batch).unwrap()
    );
}
