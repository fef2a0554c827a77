use rand::Rng;

use super::ConditionalModel;
use crate::dist::{sample_dirichlet, CategoricalDistribution};
use crate::error::{Error, Result};
use crate::token::TokenId;

/// Order-k Markov chain with begin-of-sequence padding.
///
/// Contexts shorter than `k` (the first `k` positions of a sequence) are
/// left-padded with a reserved symbol that is not part of the vocabulary.
/// Row layout: all contexts with `j` real tokens come before those with
/// `j + 1`, and within a group the real tokens are read as a base-`V`
/// number, most significant first. Row 0 is the empty (begin) context.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    order: usize,
    vocab: usize,
    rows: Vec<CategoricalDistribution>,
}

impl MarkovModel {
    pub fn new(order: usize, vocab: usize, rows: Vec<CategoricalDistribution>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument(
                "Markov order must be at least 1".into(),
            ));
        }
        if vocab < 1 {
            return Err(Error::InvalidArgument(
                "vocabulary must be non-empty".into(),
            ));
        }
        let expected = Self::row_count(order, vocab)?;
        if rows.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "order-{order} model over {vocab} tokens needs {expected} rows, got {}",
                rows.len()
            )));
        }
        if let Some(bad) = rows.iter().find(|r| r.vocab_size() != vocab) {
            return Err(Error::VocabMismatch {
                expected: vocab,
                got: bad.vocab_size(),
            });
        }
        Ok(Self { order, vocab, rows })
    }

    /// Every row equal to `row`.
    pub fn constant(order: usize, row: CategoricalDistribution) -> Result<Self> {
        let vocab = row.vocab_size();
        let n = Self::row_count(order, vocab)?;
        Self::new(order, vocab, vec![row; n])
    }

    /// `Σ_{j=0..=k} V^j`, the number of padded and full contexts.
    pub fn row_count(order: usize, vocab: usize) -> Result<usize> {
        let mut total: usize = 0;
        let mut power: usize = 1;
        for _ in 0..=order {
            total = total
                .checked_add(power)
                .ok_or_else(|| Error::InvalidArgument("context table too large".into()))?;
            power = power
                .checked_mul(vocab)
                .ok_or_else(|| Error::InvalidArgument("context table too large".into()))?;
        }
        Ok(total)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rows(&self) -> &[CategoricalDistribution] {
        &self.rows
    }

    /// Row index for the context read off the end of `prefix`.
    pub fn row_index(&self, prefix: &[TokenId]) -> usize {
        let real = prefix.len().min(self.order);
        // offset = Σ_{i<real} V^i
        let mut offset = 0usize;
        let mut power = 1usize;
        for _ in 0..real {
            offset += power;
            power *= self.vocab;
        }
        let code = prefix[prefix.len() - real..]
            .iter()
            .fold(0usize, |acc, t| acc * self.vocab + t.index());
        offset + code
    }

    pub fn row(&self, prefix: &[TokenId]) -> &CategoricalDistribution {
        &self.rows[self.row_index(prefix)]
    }

    pub fn set_row(&mut self, context: &[TokenId], row: CategoricalDistribution) -> Result<()> {
        if row.vocab_size() != self.vocab {
            return Err(Error::VocabMismatch {
                expected: self.vocab,
                got: row.vocab_size(),
            });
        }
        if context.len() > self.order {
            return Err(Error::InvalidArgument(format!(
                "context of length {} exceeds order {}",
                context.len(),
                self.order
            )));
        }
        for t in context {
            t.check(self.vocab)?;
        }
        let i = self.row_index(context);
        self.rows[i] = row;
        Ok(())
    }

    /// Every context with exactly `k` real tokens, in row order.
    pub fn full_contexts(&self) -> impl Iterator<Item = Vec<TokenId>> + '_ {
        let count = self.vocab.pow(self.order as u32);
        (0..count).map(move |mut code| {
            let mut ctx = vec![TokenId(0); self.order];
            for slot in ctx.iter_mut().rev() {
                *slot = TokenId::from(code % self.vocab);
                code /= self.vocab;
            }
            ctx
        })
    }
}

impl ConditionalModel for MarkovModel {
    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn context_order(&self) -> Option<usize> {
        Some(self.order)
    }

    fn conditional(&self, prefix: &[TokenId]) -> CategoricalDistribution {
        self.row(prefix).clone()
    }
}

/// Markov model whose rows are independent symmetric-Dirichlet draws.
pub fn random_markov<R: Rng + ?Sized>(
    order: usize,
    vocab: usize,
    concentration: f64,
    rng: &mut R,
) -> Result<MarkovModel> {
    if vocab < 2 {
        return Err(Error::InvalidArgument("random_markov needs V >= 2".into()));
    }
    if order == 0 {
        return Err(Error::InvalidArgument(
            "Markov order must be at least 1".into(),
        ));
    }
    let n = MarkovModel::row_count(order, vocab)?;
    let rows = (0..n)
        .map(|_| sample_dirichlet(vocab, concentration, rng))
        .collect::<Result<Vec<_>>>()?;
    MarkovModel::new(order, vocab, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::token::TokenSequence;

    fn d(p: &[f64]) -> CategoricalDistribution {
        CategoricalDistribution::from_probs(p.to_vec()).unwrap()
    }

    #[test]
    fn order_one_lookup() {
        // rows: begin, ctx 0, ctx 1
        let m =
            MarkovModel::new(1, 2, vec![d(&[0.5, 0.5]), d(&[0.9, 0.1]), d(&[0.2, 0.8])]).unwrap();
        let prefix = TokenSequence::from_ids([1, 1, 0]);
        assert_eq!(m.conditional(&prefix).probs(), &[0.9, 0.1]);
        assert_eq!(m.conditional(&[]).probs(), &[0.5, 0.5]);
        assert_eq!(m.conditional(&[TokenId(1)]).probs(), &[0.2, 0.8]);
    }

    #[test]
    fn row_indexing_order_two() {
        let m = MarkovModel::constant(2, CategoricalDistribution::uniform(3)).unwrap();
        assert_eq!(m.rows().len(), 1 + 3 + 9);
        assert_eq!(m.row_index(&[]), 0);
        assert_eq!(m.row_index(&[TokenId(0)]), 1);
        assert_eq!(m.row_index(&[TokenId(2)]), 3);
        assert_eq!(m.row_index(&[TokenId(0), TokenId(0)]), 4);
        assert_eq!(m.row_index(&[TokenId(2), TokenId(2)]), 12);
        // only the last two tokens count
        assert_eq!(
            m.row_index(&[TokenId(1), TokenId(2), TokenId(1)]),
            m.row_index(&[TokenId(2), TokenId(1)])
        );
        let all: Vec<_> = m.full_contexts().map(|c| m.row_index(&c)).collect();
        assert_eq!(all, (4..13).collect::<Vec<_>>());
    }

    #[test]
    fn shape_errors() {
        assert!(MarkovModel::new(1, 2, vec![d(&[1.0, 0.0])]).is_err());
        assert!(MarkovModel::new(0, 2, vec![]).is_err());
        let mut m = MarkovModel::constant(1, CategoricalDistribution::uniform(2)).unwrap();
        assert!(m
            .set_row(&[TokenId(0)], CategoricalDistribution::uniform(3))
            .is_err());
        assert!(m
            .set_row(
                &[TokenId(0), TokenId(1)],
                CategoricalDistribution::uniform(2)
            )
            .is_err());
        assert!(m
            .set_row(&[TokenId(5)], CategoricalDistribution::uniform(2))
            .is_err());
    }

    #[test]
    fn random_markov_shape_and_determinism() {
        let a = random_markov(1, 2, 1.0, &mut seeded(3)).unwrap();
        assert_eq!(a.rows().len(), 3);
        let b = random_markov(1, 2, 1.0, &mut seeded(3)).unwrap();
        assert_eq!(a, b);
        let c = random_markov(1, 2, 1.0, &mut seeded(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn high_concentration_is_near_uniform() {
        let m = random_markov(1, 4, 1e4, &mut seeded(11)).unwrap();
        for row in m.rows() {
            for &p in row.probs() {
                assert!((p - 0.25).abs() < 0.05, "{p}");
            }
        }
    }

    #[test]
    fn tiny_concentration_still_valid() {
        let m = random_markov(2, 8, 1e-3, &mut seeded(5)).unwrap();
        for row in m.rows() {
            let s: f64 = row.probs().iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}
