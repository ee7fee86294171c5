//! Embedding CSV interchange: UTF-8, header `label,e0,...,e{D-1}`, one
//! sample per row with the integer label first. Floats are written with
//! 17 significant digits so a read-back reproduces the exact values.
//! This is also the import path for externally produced embeddings.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::synth::RawBatch;
use crate::trainer::EpochTrace;

/// 17 significant digits: enough to round-trip any f64 through decimal.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_embeddings(path: &Path, batch: &RawBatch) -> Result<()> {
    let mut out = String::new();
    out.push_str("label");
    for j in 0..batch.dim() {
        out.push_str(&format!(",e{j}"));
    }
    out.push('\n');
    for i in 0..batch.len() {
        out.push_str(&batch.labels[i].to_string());
        for v in batch.rows.row(i) {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

fn parse_error(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        column,
        message: message.into(),
    }
}

pub fn read_embeddings(path: &Path) -> Result<RawBatch> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, 1, "empty file, expected a header"))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.is_empty() || fields[0] != "label" {
        return Err(parse_error(path, 1, 1, "header must start with 'label'"));
    }
    let dim = fields.len() - 1;
    if dim == 0 {
        return Err(parse_error(path, 1, 2, "header lists no embedding columns"));
    }
    for (j, field) in fields.iter().enumerate().skip(1) {
        let expected = format!("e{}", j - 1);
        if *field != expected {
            return Err(parse_error(
                path,
                1,
                j + 1,
                format!("expected header column {expected:?}, got {field:?}"),
            ));
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(parse_error(
                path,
                line_no,
                fields.len().min(dim + 1),
                format!("expected {} fields, got {}", dim + 1, fields.len()),
            ));
        }
        let label: usize = fields[0]
            .parse()
            .map_err(|_| parse_error(path, line_no, 1, format!("invalid label {:?}", fields[0])))?;
        let mut row = Vec::with_capacity(dim);
        for (j, field) in fields.iter().enumerate().skip(1) {
            let value: f64 = field.parse().map_err(|_| {
                parse_error(path, line_no, j + 1, format!("invalid value {field:?}"))
            })?;
            if !value.is_finite() {
                return Err(parse_error(
                    path,
                    line_no,
                    j + 1,
                    format!("non-finite value {field:?}"),
                ));
            }
            row.push(value);
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(parse_error(path, 2, 1, "file contains no data rows"));
    }
    Ok(RawBatch {
        rows: Matrix::from_rows(&rows)?,
        labels,
    })
}

/// Per-epoch trace CSV with fixed columns: epoch, train_loss, the
/// validation metric block, the prototype diagnostics, then per-class
/// kappa/theta_vmf/margin/scale blocks.
pub fn write_trace(path: &Path, traces: &[EpochTrace], classes: usize) -> Result<()> {
    let mut out = String::new();
    out.push_str(
        "epoch,train_loss,val_binary_mcc,val_binary_f1,val_macro_mcc,val_macro_f1,\
         val_macro_fnr_fpr,nmi,ari,angular_silhouette,gram_condition,etf_deviation",
    );
    for block in ["kappa", "theta_vmf", "margin", "scale"] {
        for c in 0..classes {
            out.push_str(&format!(",{block}_{c}"));
        }
    }
    out.push('\n');
    for t in traces {
        out.push_str(&t.epoch.to_string());
        for v in [
            t.train_loss,
            t.metrics.binary.mcc,
            t.metrics.binary.f1,
            t.metrics.cwe_macro.mcc,
            t.metrics.cwe_macro.f1,
            t.metrics.macro_fnr_plus_fpr,
            t.metrics.nmi,
            t.metrics.ari,
            t.metrics.angular_silhouette,
            t.gram_condition,
            t.etf_deviation,
        ] {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        for block in [&t.kappas, &t.theta_vmfs, &t.margins, &t.scales] {
            for v in block.iter() {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
        }
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embeddings_round_trip_exactly() {
        let dir = std::env::temp_dir().join("margin_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.csv");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..17)
            .map(|_| (0..5).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..17).map(|i| i % 3).collect();
        let batch = RawBatch {
            rows: Matrix::from_rows(&rows).unwrap(),
            labels,
        };
        write_embeddings(&path, &batch).unwrap();
        let back = read_embeddings(&path).unwrap();
        assert_eq!(back, batch);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn parse_errors_carry_file_line_and_column() {
        let dir = std::env::temp_dir().join("margin_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "label,e0,e1\n0,1.0,2.0\n1,oops,3.0\n").unwrap();
        match read_embeddings(&path) {
            Err(Error::Parse {
                file,
                line,
                column,
                ..
            }) => {
                assert!(file.ends_with("bad.csv"));
                assert_eq!(line, 3);
                assert_eq!(column, 2);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn header_is_checked_strictly() {
        let dir = std::env::temp_dir().join("margin_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("badheader.csv");
        std::fs::write(&path, "label,e0,x1\n0,1.0,2.0\n").unwrap();
        match read_embeddings(&path) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(column, 3);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::remove_file(&path).unwrap();
    }
}
