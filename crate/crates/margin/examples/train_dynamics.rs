//! Train the adaptive-margin objective against the cosine baseline on
//! the dual-imbalance benchmark and watch the geometric dynamics: the
//! distortion proxy (macro FNR + FPR), the Gram condition number of the
//! median prototypes, and the worst pairwise deviation from the simplex
//! ETF target.
//!
//! ```bash
//! cargo run --release --example train_dynamics
//! ```

use margin::synth::{count_schedule, generate, BenchSpec};
use margin::trainer::{train, TrainConfig, TrainMode};

fn bench(seed: u64) -> BenchSpec {
    let classes = 8;
    BenchSpec {
        classes,
        d_embed: 32,
        d_ambient: 64,
        counts: count_schedule(classes, 2000, 50.0),
        kappas: (0..classes)
            .map(|c| 80.0 + (5.0 - 80.0) * c as f64 / (classes as f64 - 1.0))
            .collect(),
        noise_sigma: 0.1,
        seed,
    }
}

fn main() {
    let seed = 0;
    let dataset = generate(&bench(seed)).unwrap();
    let data = dataset.train_data();

    for mode in [TrainMode::Margin, TrainMode::CosineBaseline] {
        let label = match mode {
            TrainMode::Margin => "margin",
            TrainMode::CosineBaseline => "cosine",
        };
        let config = TrainConfig::new(30, 20.0, mode, seed);
        let start = std::time::Instant::now();
        let out = train(&data, &config).unwrap();
        println!("=== {label} mode ({:.1?}) ===", start.elapsed());
        println!("epoch  loss     fnr+fpr  gram_cond  etf_dev  min_margin max_margin");
        for t in out.traces.iter().step_by(5).chain(out.traces.last()) {
            let min_m = t.margins.iter().cloned().fold(f64::INFINITY, f64::min);
            let max_m = t.margins.iter().cloned().fold(0.0_f64, f64::max);
            println!(
                "{:<6} {:<8.4} {:<8.4} {:<10.2} {:<8.3} {:<10.4} {:.4}",
                t.epoch,
                t.train_loss,
                t.metrics.macro_fnr_plus_fpr,
                t.gram_condition,
                t.etf_deviation,
                min_m,
                max_m
            );
        }
    }
}
