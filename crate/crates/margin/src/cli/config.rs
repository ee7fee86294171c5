//! Flat key-value run configuration.
//!
//! The format is one `key = value` pair per line; `#` starts a comment.
//! Every key below is required except `hidden` (only read when
//! `encoder = tanh`, defaulting to `d_ambient`). Unknown and duplicate
//! keys are rejected.
//!
//! ```text
//! schema_version = 1
//! # benchmark
//! classes = 8
//! d_embed = 32
//! d_ambient = 64
//! n_max = 2000
//! imbalance_ratio = 50
//! kappa_head = 80
//! kappa_tail = 5
//! noise_sigma = 0.1
//! seed = 42
//! # training
//! epochs = 30
//! batch_size = 64
//! learning_rate = 0.05
//! momentum = 0.9
//! s0 = 20
//! alpha = 0.95
//! mode = margin
//! encoder = linear
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::synth::{count_schedule, BenchSpec};
use crate::trainer::{EncoderKind, TrainConfig, TrainMode};
use crate::vmf::{KAPPA_MAX, KAPPA_MIN};

pub const SCHEMA_VERSION: u64 = 1;

const KNOWN_KEYS: &[&str] = &[
    "schema_version",
    "classes",
    "d_embed",
    "d_ambient",
    "n_max",
    "imbalance_ratio",
    "kappa_head",
    "kappa_tail",
    "noise_sigma",
    "seed",
    "epochs",
    "batch_size",
    "learning_rate",
    "momentum",
    "s0",
    "alpha",
    "mode",
    "encoder",
    "hidden",
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub classes: usize,
    pub d_embed: usize,
    pub d_ambient: usize,
    pub n_max: usize,
    pub imbalance_ratio: f64,
    pub kappa_head: f64,
    pub kappa_tail: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub s0: f64,
    pub alpha: f64,
    pub mode: TrainMode,
    pub encoder: EncoderKind,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: BTreeMap<String, String> = BTreeMap::new();
        for raw_line in text.lines() {
            let line = match raw_line.split_once('#') {
                Some((head, _)) => head,
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("malformed line (expected key = value): {line:?}"))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key: {key}")));
            }
            if pairs.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("duplicate key: {key}")));
            }
        }

        let get = |key: &str| -> Result<&str> {
            pairs
                .get(key)
                .map(|s| s.as_str())
                .ok_or_else(|| Error::Config(format!("missing required key: {key}")))
        };
        fn parse_as<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse::<T>()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
        }

        let schema: u64 = parse_as("schema_version", get("schema_version")?)?;
        if schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {schema} does not match supported version {SCHEMA_VERSION}"
            )));
        }

        let mode = match get("mode")? {
            "margin" => TrainMode::Margin,
            "cosine_baseline" => TrainMode::CosineBaseline,
            other => {
                return Err(Error::Config(format!(
                    "mode must be margin or cosine_baseline, got {other:?}"
                )))
            }
        };
        let d_ambient: usize = parse_as("d_ambient", get("d_ambient")?)?;
        let encoder = match get("encoder")? {
            "linear" => {
                if pairs.contains_key("hidden") {
                    return Err(Error::Config(
                        "hidden is only valid with encoder = tanh".into(),
                    ));
                }
                EncoderKind::Linear
            }
            "tanh" => {
                let hidden = match pairs.get("hidden") {
                    Some(v) => parse_as("hidden", v)?,
                    None => d_ambient,
                };
                EncoderKind::Tanh { hidden }
            }
            other => {
                return Err(Error::Config(format!(
                    "encoder must be linear or tanh, got {other:?}"
                )))
            }
        };

        let config = RunConfig {
            classes: parse_as("classes", get("classes")?)?,
            d_embed: parse_as("d_embed", get("d_embed")?)?,
            d_ambient,
            n_max: parse_as("n_max", get("n_max")?)?,
            imbalance_ratio: parse_as("imbalance_ratio", get("imbalance_ratio")?)?,
            kappa_head: parse_as("kappa_head", get("kappa_head")?)?,
            kappa_tail: parse_as("kappa_tail", get("kappa_tail")?)?,
            noise_sigma: parse_as("noise_sigma", get("noise_sigma")?)?,
            seed: parse_as("seed", get("seed")?)?,
            epochs: parse_as("epochs", get("epochs")?)?,
            batch_size: parse_as("batch_size", get("batch_size")?)?,
            learning_rate: parse_as("learning_rate", get("learning_rate")?)?,
            momentum: parse_as("momentum", get("momentum")?)?,
            s0: parse_as("s0", get("s0")?)?,
            alpha: parse_as("alpha", get("alpha")?)?,
            mode,
            encoder,
        };
        config.validate()?;
        Ok(config)
    }

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
                "d_ambient must be at least d_embed, got {} < {}",
                self.d_ambient, self.d_embed
            )));
        }
        if self.imbalance_ratio < 1.0 {
            return Err(Error::Config(format!(
                "imbalance_ratio must be at least 1, got {}",
                self.imbalance_ratio
            )));
        }
        for (key, value) in [
            ("kappa_head", self.kappa_head),
            ("kappa_tail", self.kappa_tail),
        ] {
            if !(KAPPA_MIN..=KAPPA_MAX).contains(&value) {
                return Err(Error::Config(format!(
                    "{key} must lie in [{KAPPA_MIN}, {KAPPA_MAX}], got {value}"
                )));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        // training- and benchmark-side checks share the library validation
        self.train_config().validate()?;
        self.bench_spec().validate()?;
        Ok(())
    }

    /// Per-class concentrations, linear from `kappa_head` to `kappa_tail`.
    pub fn kappa_schedule(&self) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                let t = if self.classes > 1 {
                    c as f64 / (self.classes as f64 - 1.0)
                } else {
                    0.0
                };
                self.kappa_head + (self.kappa_tail - self.kappa_head) * t
            })
            .collect()
    }

    pub fn bench_spec(&self) -> BenchSpec {
        BenchSpec {
            classes: self.classes,
            d_embed: self.d_embed,
            d_ambient: self.d_ambient,
            counts: count_schedule(self.classes, self.n_max, self.imbalance_ratio),
            kappas: self.kappa_schedule(),
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            s0: self.s0,
            alpha: self.alpha,
            mode: self.mode,
            seed: self.seed,
            encoder: self.encoder,
        }
    }
}

/// A ready-to-edit configuration matching the dual-imbalance benchmark.
pub fn example_config() -> String {
    "\
schema_version = 1
# benchmark
classes = 8
d_embed = 32
d_ambient = 64
n_max = 2000
imbalance_ratio = 50
kappa_head = 80
kappa_tail = 5
noise_sigma = 0.1
seed = 42
# training
epochs = 30
batch_size = 64
learning_rate = 0.05
momentum = 0.9
s0 = 20
alpha = 0.95
mode = margin
encoder = linear
"
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_config_parses_and_expands() {
        let cfg = RunConfig::parse(&example_config()).unwrap();
        assert_eq!(cfg.classes, 8);
        let spec = cfg.bench_spec();
        assert_eq!(spec.counts[0], 2000);
        assert_eq!(spec.counts[7], 40);
        assert_eq!(cfg.kappa_schedule()[0], 80.0);
        assert_eq!(cfg.kappa_schedule()[7], 5.0);
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let mut text = example_config();
        text.push_str("bogus = 1\n");
        match RunConfig::parse(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("bogus")),
            other => panic!("expected config error, got {other:?}"),
        }
        let mut text = example_config();
        text.push_str("seed = 43\n");
        match RunConfig::parse(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("duplicate")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn missing_key_and_schema_mismatch_are_rejected() {
        let text: String = example_config()
            .lines()
            .filter(|l| !l.starts_with("epochs"))
            .map(|l| format!("{l}\n"))
            .collect();
        match RunConfig::parse(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("epochs")),
            other => panic!("expected config error, got {other:?}"),
        }
        let text = example_config().replace("schema_version = 1", "schema_version = 9");
        match RunConfig::parse(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("schema_version")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn sub_unit_imbalance_ratio_is_named_in_the_error() {
        let text = example_config().replace("imbalance_ratio = 50", "imbalance_ratio = 0.5");
        match RunConfig::parse(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("imbalance_ratio")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn tanh_encoder_round_trip_with_default_hidden() {
        let text = example_config().replace("encoder = linear", "encoder = tanh");
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.encoder, EncoderKind::Tanh { hidden: 64 });
        let text2 = example_config().replace("encoder = linear", "encoder = tanh\nhidden = 16");
        let cfg2 = RunConfig::parse(&text2).unwrap();
        assert_eq!(cfg2.encoder, EncoderKind::Tanh { hidden: 16 });
        // hidden without tanh is rejected
        let text3 =
            example_config().replace("encoder = linear", "encoder = linear\nhidden = 16");
        assert!(RunConfig::parse(&text3).is_err());
    }
}
