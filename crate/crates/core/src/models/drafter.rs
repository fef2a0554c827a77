use super::ConditionalModel;
use crate::dist::{normalize, CategoricalDistribution};
use crate::error::{Error, Result};
use crate::token::TokenId;

/// `(1 − ε)·base + ε·uniform`: a drafter of tunable quality.
#[derive(Debug, Clone)]
pub struct PerturbedDrafter<M> {
    base: M,
    mix_weight: f64,
}

impl<M: ConditionalModel> PerturbedDrafter<M> {
    pub fn new(base: M, mix_weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mix_weight) {
            return Err(Error::InvalidArgument(format!(
                "mix weight must lie in [0, 1], got {mix_weight}"
            )));
        }
        Ok(Self { base, mix_weight })
    }

    pub fn mix_weight(&self) -> f64 {
        self.mix_weight
    }
}

impl<M: ConditionalModel> ConditionalModel for PerturbedDrafter<M> {
    fn vocab_size(&self) -> usize {
        self.base.vocab_size()
    }

    fn context_order(&self) -> Option<usize> {
        self.base.context_order()
    }

    fn conditional(&self, prefix: &[TokenId]) -> CategoricalDistribution {
        let base = self.base.conditional(prefix);
        if self.mix_weight == 0.0 {
            return base;
        }
        let u = 1.0 / base.vocab_size() as f64;
        let w = self.mix_weight;
        let probs = base.probs().iter().map(|p| (1.0 - w) * p + w * u).collect();
        normalize(probs).expect("mixture of distributions is a distribution")
    }
}

/// Keeps the `k` most likely tokens of each conditional (ties by smaller id)
/// and renormalizes.
#[derive(Debug, Clone)]
pub struct TopK<M> {
    base: M,
    k: usize,
}

impl<M: ConditionalModel> TopK<M> {
    pub fn new(base: M, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("top-k needs k >= 1".into()));
        }
        Ok(Self { base, k })
    }
}

pub(crate) fn truncate_top_k(dist: &CategoricalDistribution, k: usize) -> CategoricalDistribution {
    if k >= dist.vocab_size() {
        return dist.clone();
    }
    let mut order: Vec<usize> = (0..dist.vocab_size()).collect();
    let probs = dist.probs();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let mut kept = vec![0.0; probs.len()];
    for &i in &order[..k] {
        kept[i] = probs[i];
    }
    normalize(kept).expect("top-k of a distribution keeps positive mass")
}

impl<M: ConditionalModel> ConditionalModel for TopK<M> {
    fn vocab_size(&self) -> usize {
        self.base.vocab_size()
    }

    fn context_order(&self) -> Option<usize> {
        self.base.context_order()
    }

    fn conditional(&self, prefix: &[TokenId]) -> CategoricalDistribution {
        truncate_top_k(&self.base.conditional(prefix), self.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{random_markov, MarkovModel};
    use crate::rng::seeded;

    #[test]
    fn half_mixture() {
        let base =
            MarkovModel::constant(1, CategoricalDistribution::one_hot(2, TokenId(0))).unwrap();
        let drafter = PerturbedDrafter::new(&base, 0.5).unwrap();
        assert_eq!(drafter.conditional(&[]).probs(), &[0.75, 0.25]);
    }

    #[test]
    fn mixture_limits() {
        let base = random_markov(2, 5, 0.5, &mut seeded(1)).unwrap();
        let same = PerturbedDrafter::new(&base, 0.0).unwrap();
        let flat = PerturbedDrafter::new(&base, 1.0).unwrap();
        for ctx in base.full_contexts() {
            assert_eq!(same.conditional(&ctx), base.conditional(&ctx));
            for &p in flat.conditional(&ctx).probs() {
                assert!((p - 0.2).abs() < 1e-15);
            }
        }
        assert!(PerturbedDrafter::new(&base, 1.5).is_err());
    }

    #[test]
    fn top_k_truncation() {
        let d = CategoricalDistribution::from_probs(vec![0.1, 0.4, 0.2, 0.3]).unwrap();
        let t = truncate_top_k(&d, 2);
        let p = t.probs();
        assert_eq!(p[0], 0.0);
        assert_eq!(p[2], 0.0);
        assert!((p[1] - 4.0 / 7.0).abs() < 1e-12);
        assert!((p[3] - 3.0 / 7.0).abs() < 1e-12);
        assert_eq!(truncate_top_k(&d, 10), d);
        // ties keep the smaller id
        let tie = CategoricalDistribution::uniform(3);
        assert_eq!(truncate_top_k(&tie, 1).probs(), &[1.0, 0.0, 0.0]);
    }
}
