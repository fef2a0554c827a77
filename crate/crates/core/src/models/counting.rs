use std::sync::atomic::{AtomicU64, Ordering};

use super::ConditionalModel;
use crate::dist::CategoricalDistribution;
use crate::token::TokenId;

/// Wraps a model and counts evaluations. One `batched_conditionals` call is
/// one function evaluation regardless of window width.
#[derive(Debug, Default)]
pub struct CountingModel<M> {
    inner: M,
    batched: AtomicU64,
    single: AtomicU64,
}

impl<M> CountingModel<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            batched: AtomicU64::new(0),
            single: AtomicU64::new(0),
        }
    }

    /// Number of batched (window) evaluations so far.
    pub fn nfe(&self) -> u64 {
        self.batched.load(Ordering::Relaxed)
    }

    /// Number of direct `conditional` calls (not made through a batch).
    pub fn single_calls(&self) -> u64 {
        self.single.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> M {
        self.inner
    }
}

impl<M: ConditionalModel> ConditionalModel for CountingModel<M> {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    fn context_order(&self) -> Option<usize> {
        self.inner.context_order()
    }

    fn conditional(&self, prefix: &[TokenId]) -> CategoricalDistribution {
        self.single.fetch_add(1, Ordering::Relaxed);
        self.inner.conditional(prefix)
    }

    fn batched_conditionals(
        &self,
        prefix: &[TokenId],
        drafts: &[TokenId],
    ) -> Vec<CategoricalDistribution> {
        self.batched.fetch_add(1, Ordering::Relaxed);
        self.inner.batched_conditionals(prefix, drafts)
    }
}
