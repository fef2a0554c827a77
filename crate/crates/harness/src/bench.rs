//! Paired decoding benchmarks.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sjdpv_core::models::{ancestral_sample, random_markov, MarkovModel};
use sjdpv_core::phrase::{build_library, read_corpus};
use sjdpv_core::rng::{derive_seed, seeded};
use sjdpv_core::{decode, DecodeMetrics, DecodeMode, PhraseLibrary, TokenSequence, VerifyConfig};

use crate::config::{ExperimentConfig, ModelSource};
use crate::error::{PathContext, Result};
use crate::planted::planted_phrase_corpus;

pub const REPORT_VERSION: u32 = 1;

/// Seed streams derived from the config seed.
const STREAM_MODEL: u64 = 0;
const STREAM_CORPUS: u64 = 1;
const STREAM_DECODE: u64 = 2;
const STREAM_REFERENCE: u64 = 3;

/// Target model, corpus and reference statistics shared by every run of
/// an experiment.
#[derive(Debug, Clone)]
pub struct Workload {
    pub model: MarkovModel,
    pub corpus: Vec<TokenSequence>,
    /// Per-position token frequencies of `decodes` ancestral samples.
    pub reference: Vec<Vec<f64>>,
}

fn marginals<'a>(
    seqs: impl Iterator<Item = &'a TokenSequence>,
    len: usize,
    vocab: usize,
) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![0.0; vocab]; len];
    let mut n = 0usize;
    for s in seqs {
        n += 1;
        for (i, t) in s.iter().enumerate().take(len) {
            counts[i][t.index()] += 1.0;
        }
    }
    if n > 0 {
        counts.iter_mut().flatten().for_each(|c| *c /= n as f64);
    }
    counts
}

/// Mean over positions of the total-variation distance between two sets
/// of per-position frequencies.
pub fn mean_tv(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let total: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>() / 2.0)
        .sum();
    total / a.len() as f64
}

impl Workload {
    /// Resolves the model and corpus named by `cfg`.
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let mut corpus_rng = seeded(derive_seed(cfg.seed, STREAM_CORPUS));
        let mut model_rng = seeded(derive_seed(cfg.seed, STREAM_MODEL));
        let (model, sampled) = match &cfg.model {
            ModelSource::Planted => {
                let (corpus, planted) = planted_phrase_corpus(
                    &cfg.plant_spec(),
                    cfg.corpus_sequences,
                    cfg.corpus_seq_len,
                    &mut model_rng,
                )?;
                (planted.model, Some(corpus))
            }
            ModelSource::Random => (
                random_markov(cfg.order, cfg.vocab, cfg.concentration, &mut model_rng)?,
                None,
            ),
            ModelSource::File(p) => (MarkovModel::load(p).at(p)?, None),
        };
        let vocab = sjdpv_core::ConditionalModel::vocab_size(&model);
        let corpus = match (&cfg.corpus, sampled) {
            (Some(path), _) => load_corpus(path, vocab)?,
            (None, Some(c)) => c,
            (None, None) => (0..cfg.corpus_sequences)
                .map(|_| ancestral_sample(&model, cfg.corpus_seq_len, &mut corpus_rng))
                .collect(),
        };
        let mut ref_rng = seeded(derive_seed(cfg.seed, STREAM_REFERENCE));
        let samples: Vec<TokenSequence> = (0..cfg.decodes)
            .map(|_| ancestral_sample(&model, cfg.tokens, &mut ref_rng))
            .collect();
        let reference = marginals(samples.iter(), cfg.tokens, vocab);
        Ok(Self {
            model,
            corpus,
            reference,
        })
    }

    pub fn vocab(&self) -> usize {
        sjdpv_core::ConditionalModel::vocab_size(&self.model)
    }

    /// Phrase library over the workload corpus; `merges = 0` gives the
    /// empty library.
    pub fn library(&self, merges: usize, max_phrase_len: usize) -> Result<PhraseLibrary> {
        if merges == 0 {
            return Ok(PhraseLibrary::empty(self.vocab()));
        }
        Ok(build_library(
            &self.corpus,
            self.vocab(),
            merges,
            max_phrase_len,
        )?)
    }
}

pub fn load_corpus(path: &Path, vocab: usize) -> Result<Vec<TokenSequence>> {
    let f = File::open(path).at(path)?;
    let corpus = read_corpus(BufReader::new(f)).at(path)?;
    for s in &corpus {
        s.validate(vocab).at(path)?;
    }
    Ok(corpus)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub mode: &'static str,
    pub run: usize,
    pub seed: u64,
    pub nfe: u64,
    pub tokens_emitted: u64,
    pub mean_tokens_per_iteration: f64,
    pub phrase_attempts: u64,
    pub phrase_accepts: u64,
    pub phrase_tokens: u64,
    pub phrase_skips: u64,
    pub token_accepts: u64,
    pub token_rejects: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode: &'static str,
    pub decodes: usize,
    pub mean_nfe: f64,
    pub mean_tokens_per_iteration: f64,
    pub token_accept_rate: f64,
    pub phrase_attempts: u64,
    pub phrase_accepts: u64,
    pub phrase_accept_rate: f64,
    /// Fraction of emitted tokens that were committed through a phrase.
    pub phrase_hit_rate: f64,
    /// Mean NFE of the first configured mode divided by this mode's.
    pub nfe_acceleration: f64,
    /// Mean per-position total-variation distance from ancestral samples.
    pub seq_divergence: f64,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub report_version: u32,
    pub config: ExperimentConfig,
    pub library_size: usize,
    pub modes: Vec<ModeSummary>,
    pub runs: Vec<RunRow>,
}

impl BenchmarkReport {
    pub fn mode(&self, mode: DecodeMode) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == mode.as_str())
    }
}

/// Decodes `cfg.decodes` sequences in `mode`. Run `i` always uses the
/// same derived seed, whatever the mode, so modes are compared on paired
/// randomness.
pub fn run_mode(
    workload: &Workload,
    lib: &PhraseLibrary,
    cfg: &ExperimentConfig,
    mode: DecodeMode,
) -> Result<(Vec<(TokenSequence, DecodeMetrics)>, f64)> {
    let vcfg = VerifyConfig::new(mode, cfg.window, cfg.tau)?
        .with_greedy(cfg.greedy)
        .with_max_phrase_len(cfg.max_phrase_len);
    let base = derive_seed(cfg.seed, STREAM_DECODE);
    let lib = (mode == DecodeMode::SjdPv).then_some(lib);
    let started = Instant::now();
    let runs = (0..cfg.decodes)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded(derive_seed(base, i as u64));
            decode(&workload.model, lib, &vcfg, cfg.tokens, &mut rng)
        })
        .collect::<sjdpv_core::Result<Vec<_>>>()?;
    Ok((runs, started.elapsed().as_secs_f64()))
}

fn summarize(
    mode: DecodeMode,
    runs: &[(TokenSequence, DecodeMetrics)],
    wall: f64,
    workload: &Workload,
    tokens: usize,
) -> ModeSummary {
    let mut total = DecodeMetrics::default();
    for (_, m) in runs {
        total.absorb(m.clone());
    }
    let n = runs.len().max(1) as f64;
    let emitted = marginals(runs.iter().map(|(s, _)| s), tokens, workload.vocab());
    ModeSummary {
        mode: mode.as_str(),
        decodes: runs.len(),
        mean_nfe: total.nfe as f64 / n,
        mean_tokens_per_iteration: total.mean_tokens_per_iteration(),
        token_accept_rate: total.token_accept_rate(),
        phrase_attempts: total.phrase_attempts,
        phrase_accepts: total.phrase_accepts,
        phrase_accept_rate: total.phrase_accept_rate(),
        phrase_hit_rate: if total.tokens_emitted == 0 {
            0.0
        } else {
            total.phrase_tokens as f64 / total.tokens_emitted as f64
        },
        nfe_acceleration: 1.0,
        seq_divergence: mean_tv(&emitted, &workload.reference),
        wall_clock_secs: wall,
    }
}

/// Runs every configured mode against a prepared workload and library.
pub fn benchmark_with(
    workload: &Workload,
    lib: &PhraseLibrary,
    cfg: &ExperimentConfig,
) -> Result<BenchmarkReport> {
    let base = derive_seed(cfg.seed, STREAM_DECODE);
    let mut modes = Vec::with_capacity(cfg.modes.len());
    let mut rows = Vec::new();
    for &mode in &cfg.modes {
        let (runs, wall) = run_mode(workload, lib, cfg, mode)?;
        for (i, (_, m)) in runs.iter().enumerate() {
            rows.push(RunRow {
                mode: mode.as_str(),
                run: i,
                seed: derive_seed(base, i as u64),
                nfe: m.nfe,
                tokens_emitted: m.tokens_emitted,
                mean_tokens_per_iteration: m.mean_tokens_per_iteration(),
                phrase_attempts: m.phrase_attempts,
                phrase_accepts: m.phrase_accepts,
                phrase_tokens: m.phrase_tokens,
                phrase_skips: m.phrase_skips,
                token_accepts: m.token_accepts,
                token_rejects: m.token_rejects,
            });
        }
        modes.push(summarize(mode, &runs, wall, workload, cfg.tokens));
    }
    let base_nfe = modes[0].mean_nfe;
    for m in &mut modes {
        m.nfe_acceleration = if m.mean_nfe > 0.0 {
            base_nfe / m.mean_nfe
        } else {
            0.0
        };
    }
    Ok(BenchmarkReport {
        report_version: REPORT_VERSION,
        config: cfg.clone(),
        library_size: lib.len(),
        modes,
        runs: rows,
    })
}

/// Prepares the workload and library named by `cfg` and benchmarks every
/// configured mode.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchmarkReport> {
    let workload = Workload::prepare(cfg)?;
    let lib = if cfg.modes.contains(&DecodeMode::SjdPv) {
        workload.library(cfg.merges, cfg.max_phrase_len)?
    } else {
        PhraseLibrary::empty(workload.vocab())
    };
    benchmark_with(&workload, &lib, cfg)
}
