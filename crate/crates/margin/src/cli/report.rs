//! Structured JSON evaluation report.

use serde::Serialize;

use crate::error::Result;
use crate::metrics::{
    angular_silhouette, binary_metrics, clustering_scores, cwe_macro_metrics, macro_fnr_fpr,
    ConfusionMatrix, PrfScores,
};
use crate::sphere::EmbeddingBatch;

#[derive(Debug, Clone, Serialize)]
pub struct DistortionProxy {
    pub macro_fnr_plus_fpr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusteringReport {
    pub nmi: f64,
    pub ari: f64,
    pub angular_silhouette: f64,
}

/// Top-level keys are fixed: binary, cwe_macro, distortion_proxy,
/// clustering, confusion_matrix.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub binary: PrfScores,
    pub cwe_macro: PrfScores,
    pub distortion_proxy: DistortionProxy,
    pub clustering: ClusteringReport,
    pub confusion_matrix: Vec<Vec<u64>>,
}

impl EvalReport {
    /// Builds the report from normalized embeddings with true labels and
    /// the predicted labels. Class 0 plays the non-vulnerable head class.
    pub fn build(
        embeddings: &EmbeddingBatch,
        predicted: &[usize],
        class_count: usize,
    ) -> Result<EvalReport> {
        let cm = ConfusionMatrix::from_labels(embeddings.labels(), predicted, class_count)?;
        let clustering = clustering_scores(embeddings.labels(), predicted)?;
        Ok(EvalReport {
            binary: binary_metrics(&cm, 0)?,
            cwe_macro: cwe_macro_metrics(&cm, 0)?,
            distortion_proxy: DistortionProxy {
                macro_fnr_plus_fpr: macro_fnr_fpr(&cm),
            },
            clustering: ClusteringReport {
                nmi: clustering.nmi,
                ari: clustering.ari,
                angular_silhouette: angular_silhouette(embeddings)?,
            },
            confusion_matrix: cm.rows(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
