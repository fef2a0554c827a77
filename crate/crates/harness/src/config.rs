//! Experiment configuration as a flat `key = value` text file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sjdpv_core::DecodeMode;

use crate::error::{HarnessError, PathContext, Result};
use crate::planted::PlantSpec;

/// Where the target model comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    /// Order-2 planted-phrase model (see [`crate::planted`]).
    Planted,
    /// Markov model with independent Dirichlet rows.
    Random,
    /// Model file written by `MarkovModel::save`.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub model: ModelSource,
    pub order: usize,
    pub vocab: usize,
    pub concentration: f64,
    pub phrase_count: usize,
    pub phrase_len: usize,
    pub planting_rate: f64,
    /// Corpus file; when absent the corpus is sampled from the model.
    pub corpus: Option<PathBuf>,
    pub corpus_sequences: usize,
    pub corpus_seq_len: usize,
    #[serde(serialize_with = "mode_names")]
    pub modes: Vec<DecodeMode>,
    /// Tokens per decode.
    pub tokens: usize,
    pub decodes: usize,
    pub window: usize,
    pub tau: f64,
    pub merges: usize,
    pub max_phrase_len: usize,
    pub greedy: bool,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            model: ModelSource::Planted,
            order: 2,
            vocab: 64,
            concentration: 0.1,
            phrase_count: 8,
            phrase_len: 6,
            planting_rate: 0.95,
            corpus: None,
            corpus_sequences: 13,
            corpus_seq_len: 256,
            modes: vec![DecodeMode::Sjd, DecodeMode::SjdPv],
            tokens: 256,
            decodes: 200,
            window: 16,
            tau: 0.01,
            merges: 256,
            max_phrase_len: 8,
            greedy: false,
            out: PathBuf::from("results"),
        }
    }
}

fn mode_names<S: serde::Serializer>(
    modes: &[DecodeMode],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(modes.iter().map(|m| m.as_str()))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| HarnessError::ConfigInvalid(format!("{key} = {value:?}: {e}")))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "model" => {
                self.model = match value {
                    "planted" => ModelSource::Planted,
                    "random" => ModelSource::Random,
                    path => ModelSource::File(PathBuf::from(path)),
                }
            }
            "order" => self.order = parse(key, value)?,
            "vocab" => self.vocab = parse(key, value)?,
            "concentration" => self.concentration = parse(key, value)?,
            "phrase_count" => self.phrase_count = parse(key, value)?,
            "phrase_len" => self.phrase_len = parse(key, value)?,
            "planting_rate" => self.planting_rate = parse(key, value)?,
            "corpus" => self.corpus = (!value.is_empty()).then(|| PathBuf::from(value)),
            "corpus_sequences" => self.corpus_sequences = parse(key, value)?,
            "corpus_seq_len" => self.corpus_seq_len = parse(key, value)?,
            "modes" => {
                self.modes = value
                    .split(',')
                    .map(|m| parse::<DecodeMode>(key, m.trim()))
                    .collect::<Result<_>>()?
            }
            "tokens" => self.tokens = parse(key, value)?,
            "decodes" => self.decodes = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "merges" => self.merges = parse(key, value)?,
            "max_phrase_len" => self.max_phrase_len = parse(key, value)?,
            "greedy" => self.greedy = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(HarnessError::ConfigInvalid(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                HarnessError::ConfigInvalid(format!("line {}: expected key = value", i + 1))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).at(path)?;
        Self::parse_str(&text)
    }

    /// The resolved config in the same `key = value` format.
    pub fn to_text(&self) -> String {
        let model = match &self.model {
            ModelSource::Planted => "planted".to_string(),
            ModelSource::Random => "random".to_string(),
            ModelSource::File(p) => p.display().to_string(),
        };
        let corpus = self
            .corpus
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let modes: Vec<&str> = self.modes.iter().map(|m| m.as_str()).collect();
        let mut s = String::new();
        let fields: [(&str, String); 20] = [
            ("seed", self.seed.to_string()),
            ("model", model),
            ("order", self.order.to_string()),
            ("vocab", self.vocab.to_string()),
            ("concentration", self.concentration.to_string()),
            ("phrase_count", self.phrase_count.to_string()),
            ("phrase_len", self.phrase_len.to_string()),
            ("planting_rate", self.planting_rate.to_string()),
            ("corpus", corpus),
            ("corpus_sequences", self.corpus_sequences.to_string()),
            ("corpus_seq_len", self.corpus_seq_len.to_string()),
            ("modes", modes.join(",")),
            ("tokens", self.tokens.to_string()),
            ("decodes", self.decodes.to_string()),
            ("window", self.window.to_string()),
            ("tau", self.tau.to_string()),
            ("merges", self.merges.to_string()),
            ("max_phrase_len", self.max_phrase_len.to_string()),
            ("greedy", self.greedy.to_string()),
            ("out", self.out.display().to_string()),
        ];
        for (k, v) in fields {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn plant_spec(&self) -> PlantSpec {
        PlantSpec {
            vocab: self.vocab,
            phrase_count: self.phrase_count,
            phrase_len: self.phrase_len,
            planting_rate: self.planting_rate,
            concentration: self.concentration,
        }
    }

    /// Checks value ranges and that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::ConfigInvalid(msg));
        if self.modes.is_empty() {
            return bad("at least one decode mode is required".into());
        }
        if self.tokens == 0 || self.decodes == 0 {
            return bad("tokens and decodes must be positive".into());
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau must be in (0, 1), got {}", self.tau));
        }
        if self.max_phrase_len < 2 {
            return bad("max_phrase_len must be at least 2".into());
        }
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return bad(format!(
                "concentration must be positive, got {}",
                self.concentration
            ));
        }
        if let ModelSource::File(p) = &self.model {
            if !p.is_file() {
                return bad(format!("model file {} does not exist", p.display()));
            }
        }
        if let Some(p) = &self.corpus {
            if !p.is_file() {
                return bad(format!("corpus file {} does not exist", p.display()));
            }
        } else if self.corpus_sequences == 0 || self.corpus_seq_len == 0 {
            return bad("sampled corpus needs corpus_sequences and corpus_seq_len > 0".into());
        }
        Ok(())
    }
}
