//! Synthetic corpora with known recurring phrases.
//!
//! The generating model is an order-2 Markov chain. Each planted phrase
//! `(t0, t1, …, t_{L-1})` has a distinct start token; whenever `t0` is
//! emitted the next token is `t1` with probability `planting_rate` (any
//! other mass comes from the context's random row), and once inside the
//! phrase every pair `(t_{k-1}, t_k)` deterministically continues with
//! `t_{k+1}`. All other contexts get symmetric-Dirichlet rows.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use sjdpv_core::dist::sample_dirichlet;
use sjdpv_core::models::{ancestral_sample, MarkovModel};
use sjdpv_core::{CategoricalDistribution, TokenId, TokenSequence};

use crate::error::{HarnessError, Result};

/// Draw attempts for a set of phrases with pairwise-distinct inner pairs.
const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantSpec {
    pub vocab: usize,
    pub phrase_count: usize,
    pub phrase_len: usize,
    pub planting_rate: f64,
    /// Dirichlet concentration for the unplanted rows.
    pub concentration: f64,
}

#[derive(Debug, Clone)]
pub struct PlantedModel {
    pub model: MarkovModel,
    pub phrases: Vec<TokenSequence>,
}

impl PlantSpec {
    fn validate(&self) -> Result<()> {
        if self.phrase_len < 2 {
            return Err(HarnessError::ConfigInvalid(format!(
                "phrase_len must be at least 2, got {}",
                self.phrase_len
            )));
        }
        if !(self.planting_rate > 0.0 && self.planting_rate <= 1.0) {
            return Err(HarnessError::ConfigInvalid(format!(
                "planting_rate must be in (0, 1], got {}",
                self.planting_rate
            )));
        }
        if self.vocab < 2 {
            return Err(HarnessError::ConfigInvalid(
                "vocab must be at least 2".into(),
            ));
        }
        let needed = self.phrase_count * self.phrase_len;
        let available = self.vocab * self.vocab;
        // inner tokens avoid the start tokens, so at least one must remain
        if needed > available || self.phrase_count >= self.vocab {
            return Err(HarnessError::CapacityExceeded { needed, available });
        }
        Ok(())
    }
}

fn draw_phrases<R: Rng + ?Sized>(spec: &PlantSpec, rng: &mut R) -> Result<Vec<TokenSequence>> {
    let mut ids: Vec<u32> = (0..spec.vocab as u32).collect();
    'attempt: for _ in 0..MAX_ATTEMPTS {
        ids.shuffle(rng);
        let (starts, inner) = ids.split_at(spec.phrase_count);
        let mut pairs = HashSet::new();
        let mut phrases = Vec::with_capacity(spec.phrase_count);
        for &s in starts {
            let mut p = vec![s];
            while p.len() < spec.phrase_len {
                p.push(inner[rng.random_range(0..inner.len())]);
            }
            for w in p.windows(2).skip(1) {
                if !pairs.insert((w[0], w[1])) {
                    continue 'attempt;
                }
            }
            phrases.push(TokenSequence::from_ids(p));
        }
        return Ok(phrases);
    }
    Err(HarnessError::CapacityExceeded {
        needed: spec.phrase_count * spec.phrase_len,
        available: spec.vocab * spec.vocab,
    })
}

/// Builds the generating model for `spec`.
pub fn planted_model<R: Rng + ?Sized>(spec: &PlantSpec, rng: &mut R) -> Result<PlantedModel> {
    spec.validate()?;
    let v = spec.vocab;
    let phrases = draw_phrases(spec, rng)?;
    let rows = MarkovModel::row_count(2, v)?;
    let rows = (0..rows)
        .map(|_| sample_dirichlet(v, spec.concentration, rng))
        .collect::<sjdpv_core::Result<Vec<_>>>()?;
    let mut model = MarkovModel::new(2, v, rows)?;

    let rho = spec.planting_rate;
    for phrase in &phrases {
        let (t0, t1) = (phrase[0], phrase[1]);
        let entry = |base: &CategoricalDistribution| {
            base.mix(&CategoricalDistribution::one_hot(v, t1), rho)
        };
        let row = entry(model.row(&[t0]))?;
        model.set_row(&[t0], row)?;
        for x in 0..v as u32 {
            let ctx = [TokenId(x), t0];
            let row = entry(model.row(&ctx))?;
            model.set_row(&ctx, row)?;
        }
    }
    // inner pairs last so that they win over entry rows they share a context with
    for phrase in &phrases {
        for w in phrase.windows(3) {
            model.set_row(&w[..2], CategoricalDistribution::one_hot(v, w[2]))?;
        }
    }
    Ok(PlantedModel { model, phrases })
}

/// Builds the generating model and samples `sequences` corpus lines of
/// `seq_len` tokens from it.
pub fn planted_phrase_corpus<R: Rng + ?Sized>(
    spec: &PlantSpec,
    sequences: usize,
    seq_len: usize,
    rng: &mut R,
) -> Result<(Vec<TokenSequence>, PlantedModel)> {
    let planted = planted_model(spec, rng)?;
    let corpus = (0..sequences)
        .map(|_| ancestral_sample(&planted.model, seq_len, rng))
        .collect();
    Ok((corpus, planted))
}
