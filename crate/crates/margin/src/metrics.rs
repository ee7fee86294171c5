//! Classification, clustering and geometric evaluation metrics. All
//! rate-style metrics use the zero convention for empty denominators:
//! precision, recall, F1 and MCC collapse to 0 rather than NaN, which
//! matters when macro-averaging over rare classes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::{angle_between, EmbeddingBatch};

/// C x C counts; rows index the true class, columns the predicted class.
#[derive(Debug, Clone)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
    classes: usize,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![0; classes * classes],
            classes,
        }
    }

    pub fn from_counts(classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != classes * classes {
            return Err(Error::ShapeMismatch {
                expected: format!("{} counts", classes * classes),
                got: format!("{}", counts.len()),
            });
        }
        Ok(ConfusionMatrix { counts, classes })
    }

    pub fn from_labels(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} predictions", truth.len()),
                got: format!("{}", predicted.len()),
            });
        }
        let mut cm = ConfusionMatrix::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= classes || p >= classes {
                return Err(Error::InvalidParameter(format!(
                    "label pair ({t}, {p}) outside [0, {classes})"
                )));
            }
            cm.counts[t * classes + p] += 1;
        }
        Ok(cm)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        (0..self.classes)
            .map(|t| (0..self.classes).map(|p| self.get(t, p)).collect())
            .collect()
    }

    /// One-vs-all collapse of class `positive`: (tp, fn, fp, tn).
    fn one_vs_all(&self, positive: usize) -> (u64, u64, u64, u64) {
        let tp = self.get(positive, positive);
        let fn_: u64 = (0..self.classes)
            .filter(|&p| p != positive)
            .map(|p| self.get(positive, p))
            .sum();
        let fp: u64 = (0..self.classes)
            .filter(|&t| t != positive)
            .map(|t| self.get(t, positive))
            .sum();
        let tn = self.total() - tp - fn_ - fp;
        (tp, fn_, fp, tn)
    }
}

/// Precision/recall-family scores of one binary problem (or a macro
/// average of several).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrfScores {
    pub mcc: f64,
    pub f1: f64,
    pub recall: f64,
    pub precision: f64,
}

fn prf_from_counts(tp: u64, fn_: u64, fp: u64, tn: u64) -> PrfScores {
    let tp = tp as f64;
    let fn_ = fn_ as f64;
    let fp = fp as f64;
    let tn = tn as f64;
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if denom > 0.0 {
        (tp * tn - fp * fn_) / denom.sqrt()
    } else {
        0.0
    };
    PrfScores {
        mcc,
        f1,
        recall,
        precision,
    }
}

/// Binary detection scores after collapsing every class except
/// `nonvul_class` into a single positive class.
pub fn binary_metrics(cm: &ConfusionMatrix, nonvul_class: usize) -> Result<PrfScores> {
    if nonvul_class >= cm.classes() {
        return Err(Error::InvalidParameter(format!(
            "class {nonvul_class} outside [0, {})",
            cm.classes()
        )));
    }
    let mut tp = 0;
    let mut fn_ = 0;
    let mut fp = 0;
    let mut tn = 0;
    for t in 0..cm.classes() {
        for p in 0..cm.classes() {
            let v = cm.get(t, p);
            match (t != nonvul_class, p != nonvul_class) {
                (true, true) => tp += v,
                (true, false) => fn_ += v,
                (false, true) => fp += v,
                (false, false) => tn += v,
            }
        }
    }
    Ok(prf_from_counts(tp, fn_, fp, tn))
}

/// Macro-averaged one-vs-all scores over every class except
/// `nonvul_class`.
pub fn cwe_macro_metrics(cm: &ConfusionMatrix, nonvul_class: usize) -> Result<PrfScores> {
    if cm.classes() < 2 {
        return Err(Error::InvalidParameter(
            "macro metrics need at least 2 classes".into(),
        ));
    }
    if nonvul_class >= cm.classes() {
        return Err(Error::InvalidParameter(format!(
            "class {nonvul_class} outside [0, {})",
            cm.classes()
        )));
    }
    let mut acc = PrfScores {
        mcc: 0.0,
        f1: 0.0,
        recall: 0.0,
        precision: 0.0,
    };
    let mut considered = 0.0;
    for c in (0..cm.classes()).filter(|&c| c != nonvul_class) {
        let (tp, fn_, fp, tn) = cm.one_vs_all(c);
        let s = prf_from_counts(tp, fn_, fp, tn);
        acc.mcc += s.mcc;
        acc.f1 += s.f1;
        acc.recall += s.recall;
        acc.precision += s.precision;
        considered += 1.0;
    }
    acc.mcc /= considered;
    acc.f1 /= considered;
    acc.recall /= considered;
    acc.precision /= considered;
    Ok(acc)
}

/// Macro-averaged one-vs-all FNR plus macro-averaged FPR over all
/// classes: the measurable proxy for how much probability mass leaks
/// across Voronoi cells.
pub fn macro_fnr_fpr(cm: &ConfusionMatrix) -> f64 {
    let c = cm.classes();
    let mut fnr = 0.0;
    let mut fpr = 0.0;
    for class in 0..c {
        let (tp, fn_, fp, tn) = cm.one_vs_all(class);
        fnr += if tp + fn_ > 0 {
            fn_ as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        fpr += if fp + tn > 0 {
            fp as f64 / (fp + tn) as f64
        } else {
            0.0
        };
    }
    fnr / c as f64 + fpr / c as f64
}

/// NMI (arithmetic-mean normalization) and ARI between two labelings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusteringScores {
    pub nmi: f64,
    pub ari: f64,
}

pub fn clustering_scores(truth: &[usize], predicted: &[usize]) -> Result<ClusteringScores> {
    if truth.is_empty() || truth.len() != predicted.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} non-empty predictions", truth.len()),
            got: format!("{}", predicted.len()),
        });
    }
    let n = truth.len() as f64;
    let t_max = truth.iter().max().unwrap() + 1;
    let p_max = predicted.iter().max().unwrap() + 1;
    let mut contingency = vec![0u64; t_max * p_max];
    let mut t_counts = vec![0u64; t_max];
    let mut p_counts = vec![0u64; p_max];
    for (&t, &p) in truth.iter().zip(predicted) {
        contingency[t * p_max + p] += 1;
        t_counts[t] += 1;
        p_counts[p] += 1;
    }

    // mutual information and entropies
    let mut mi = 0.0;
    for t in 0..t_max {
        for p in 0..p_max {
            let c = contingency[t * p_max + p];
            if c > 0 {
                let pij = c as f64 / n;
                mi += pij * (pij / ((t_counts[t] as f64 / n) * (p_counts[p] as f64 / n))).ln();
            }
        }
    }
    let entropy = |counts: &[u64]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let q = c as f64 / n;
                -q * q.ln()
            })
            .sum()
    };
    let ht = entropy(&t_counts);
    let hp = entropy(&p_counts);
    let nmi = if ht + hp > 0.0 {
        (mi / (0.5 * (ht + hp))).clamp(0.0, 1.0)
    } else {
        1.0 // both labelings are single-cluster, hence identical
    };

    // adjusted Rand index under the permutation model
    let choose2 = |x: u64| -> f64 { (x as f64) * (x as f64 - 1.0) / 2.0 };
    let index: f64 = contingency.iter().map(|&c| choose2(c)).sum();
    let sum_t: f64 = t_counts.iter().map(|&c| choose2(c)).sum();
    let sum_p: f64 = p_counts.iter().map(|&c| choose2(c)).sum();
    let total_pairs = choose2(truth.len() as u64);
    let expected = if total_pairs > 0.0 {
        sum_t * sum_p / total_pairs
    } else {
        0.0
    };
    let max_index = 0.5 * (sum_t + sum_p);
    let ari = if (max_index - expected).abs() > 0.0 {
        (index - expected) / (max_index - expected)
    } else {
        1.0 // degenerate agreement (e.g. both partitions trivial)
    };
    Ok(ClusteringScores { nmi, ari })
}

/// Classical silhouette coefficient with angular dissimilarity. Samples
/// in singleton classes score 0; the result is the mean over samples.
pub fn angular_silhouette(batch: &EmbeddingBatch) -> Result<f64> {
    let n = batch.len();
    let labels = batch.labels();
    let classes: std::collections::BTreeSet<usize> = labels.iter().cloned().collect();
    if classes.len() < 2 {
        return Err(Error::DegenerateInput(
            "silhouette needs at least 2 classes present".into(),
        ));
    }
    let mut class_sizes = std::collections::BTreeMap::new();
    for &l in labels {
        *class_sizes.entry(l).or_insert(0usize) += 1;
    }

    let mut total = 0.0;
    for i in 0..n {
        let li = labels[i];
        if class_sizes[&li] == 1 {
            continue; // singleton contributes 0
        }
        // mean distance to own class (excluding self) and to each other class
        let mut sums: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = angle_between(batch.rows().row(i), batch.rows().row(j));
            *sums.entry(labels[j]).or_insert(0.0) += d;
        }
        let a = sums.get(&li).copied().unwrap_or(0.0) / (class_sizes[&li] - 1) as f64;
        let b = classes
            .iter()
            .filter(|&&c| c != li)
            .map(|&c| sums.get(&c).copied().unwrap_or(0.0) / class_sizes[&c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        total += if denom > 0.0 { (b - a) / denom } else { 0.0 };
    }
    Ok(total / n as f64)
}

/// The full per-evaluation metric record tracked along training.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRecord {
    pub binary: PrfScores,
    pub cwe_macro: PrfScores,
    pub macro_fnr_plus_fpr: f64,
    pub nmi: f64,
    pub ari: f64,
    pub angular_silhouette: f64,
}

/// Evaluates everything at once from embeddings, truth and predictions,
/// using class 0 as the designated non-vulnerable head class.
pub fn evaluate_all(
    embeddings: &EmbeddingBatch,
    predicted: &[usize],
    class_count: usize,
) -> Result<MetricsRecord> {
    let cm = ConfusionMatrix::from_labels(embeddings.labels(), predicted, class_count)?;
    let clustering = clustering_scores(embeddings.labels(), predicted)?;
    Ok(MetricsRecord {
        binary: binary_metrics(&cm, 0)?,
        cwe_macro: cwe_macro_metrics(&cm, 0)?,
        macro_fnr_plus_fpr: macro_fnr_fpr(&cm),
        nmi: clustering.nmi,
        ari: clustering.ari,
        angular_silhouette: angular_silhouette(embeddings)?,
    })
}
