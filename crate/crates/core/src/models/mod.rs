//! Conditional sequence models `p(x_i | x_<i)`.
//!
//! The decoder only sees models through [`ConditionalModel`]. Desk-scale
//! stand-ins for a real autoregressive backbone live alongside it: an
//! order-k Markov chain, a uniformly perturbed drafter and a top-k wrapper.

mod counting;
mod drafter;
mod io;
mod markov;

pub(crate) mod io_util {
    pub(crate) use super::io::read_u32;
}

use std::sync::Arc;

use rand::Rng;

use crate::dist::{sample, CategoricalDistribution};
use crate::token::{TokenId, TokenSequence};

pub use counting::CountingModel;
pub use drafter::{PerturbedDrafter, TopK};
pub use io::{MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use markov::{random_markov, MarkovModel};

/// An autoregressive conditional over a fixed vocabulary.
///
/// Implementations must be deterministic: the same prefix always maps to
/// the same distribution.
pub trait ConditionalModel: Send + Sync {
    fn vocab_size(&self) -> usize;

    /// Number of trailing tokens the conditional depends on; `None` means the
    /// whole prefix.
    fn context_order(&self) -> Option<usize>;

    fn conditional(&self, prefix: &[TokenId]) -> CategoricalDistribution;

    /// Conditionals for every slot of a draft window in one evaluation:
    /// `out[j] = conditional(prefix ++ drafts[..j])`.
    fn batched_conditionals(
        &self,
        prefix: &[TokenId],
        drafts: &[TokenId],
    ) -> Vec<CategoricalDistribution> {
        // Bounded-order models only read the trailing context; keeping at
        // least `k` real tokens preserves every conditional exactly.
        let keep = match self.context_order() {
            Some(k) => prefix.len().min(k),
            None => prefix.len(),
        };
        let mut ctx = Vec::with_capacity(keep + drafts.len());
        ctx.extend_from_slice(&prefix[prefix.len() - keep..]);
        let base = ctx.len();
        ctx.extend_from_slice(drafts);
        (0..drafts.len())
            .map(|j| self.conditional(&ctx[..base + j]))
            .collect()
    }
}

impl<M: ConditionalModel + ?Sized> ConditionalModel for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn context_order(&self) -> Option<usize> {
        (**self).context_order()
    }
    fn conditional(&self, prefix: &[TokenId]) -> CategoricalDistribution {
        (**self).conditional(prefix)
    }
    fn batched_conditionals(
        &self,
        prefix: &[TokenId],
        drafts: &[TokenId],
    ) -> Vec<CategoricalDistribution> {
        (**self).batched_conditionals(prefix, drafts)
    }
}

impl<M: ConditionalModel + ?Sized> ConditionalModel for Arc<M> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn context_order(&self) -> Option<usize> {
        (**self).context_order()
    }
    fn conditional(&self, prefix: &[TokenId]) -> CategoricalDistribution {
        (**self).conditional(prefix)
    }
    fn batched_conditionals(
        &self,
        prefix: &[TokenId],
        drafts: &[TokenId],
    ) -> Vec<CategoricalDistribution> {
        (**self).batched_conditionals(prefix, drafts)
    }
}

/// Draws a length-`n` sequence from the chain-rule joint, calling
/// `conditional` exactly `n` times.
pub fn ancestral_sample<M, R>(model: &M, n: usize, rng: &mut R) -> TokenSequence
where
    M: ConditionalModel + ?Sized,
    R: Rng + ?Sized,
{
    let mut out = TokenSequence::with_capacity(n);
    for _ in 0..n {
        let next = sample(&model.conditional(&out), rng);
        out.push(next);
    }
    out
}

/// Sequential argmax decoding; the reference fixed point for greedy Jacobi.
pub fn greedy_sequential<M: ConditionalModel + ?Sized>(model: &M, n: usize) -> TokenSequence {
    let mut out = TokenSequence::with_capacity(n);
    for _ in 0..n {
        let next = model.conditional(&out).argmax();
        out.push(next);
    }
    out
}
