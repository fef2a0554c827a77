//! Categorical distributions over a finite vocabulary and the log-space
//! helpers used by verification.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::token::TokenId;

/// Absolute tolerance on `Σ probs = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Natural log of the smallest positive double. Log ratios are clamped here
/// and a ratio at the floor is treated as probability zero.
pub const LOG_FLOOR: f64 = -745.0;

/// A normalized probability vector. Cloning is cheap (shared storage).
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalDistribution {
    probs: Arc<[f64]>,
}

impl CategoricalDistribution {
    /// Wraps an already-normalized vector, checking the invariants.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        check_weights(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            probs: probs.into(),
        })
    }

    pub fn uniform(vocab: usize) -> Self {
        assert!(vocab > 0, "empty vocabulary");
        Self {
            probs: vec![1.0 / vocab as f64; vocab].into(),
        }
    }

    pub fn one_hot(vocab: usize, token: TokenId) -> Self {
        let mut probs = vec![0.0; vocab];
        probs[token.index()] = 1.0;
        Self {
            probs: probs.into(),
        }
    }

    #[inline]
    pub fn vocab_size(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, token: TokenId) -> f64 {
        self.probs[token.index()]
    }

    /// Most likely token; ties go to the smallest id.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        TokenId::from(best)
    }

    /// Total-variation distance `½ Σ |p − q|`.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(other.probs.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Convex combination `(1 − w)·self + w·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        same_vocab(self, other)?;
        let probs = self
            .probs
            .iter()
            .zip(other.probs.iter())
            .map(|(a, b)| (1.0 - w) * a + w * b)
            .collect();
        normalize(probs)
    }

    /// Draws a token by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TokenId {
        sample(self, rng)
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument("empty weight vector".into()));
    }
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidWeight { index, value });
        }
    }
    Ok(())
}

pub(crate) fn same_vocab(p: &CategoricalDistribution, q: &CategoricalDistribution) -> Result<()> {
    if p.vocab_size() != q.vocab_size() {
        return Err(Error::VocabMismatch {
            expected: p.vocab_size(),
            got: q.vocab_size(),
        });
    }
    Ok(())
}

/// Scales non-negative weights to sum to one.
///
/// Input that already sums to one up to rounding is kept bit-for-bit, which
/// makes the operation idempotent.
pub fn normalize(weights: Vec<f64>) -> Result<CategoricalDistribution> {
    check_weights(&weights)?;
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return Err(Error::AllZeroWeights);
    }
    if (sum - 1.0).abs() <= 1e-12 {
        return Ok(CategoricalDistribution {
            probs: weights.into(),
        });
    }
    let probs: Vec<f64> = weights.into_iter().map(|w| w / sum).collect();
    Ok(CategoricalDistribution {
        probs: probs.into(),
    })
}

/// Draws `v` with probability `dist[v]`. Zero-probability tokens are never
/// returned.
pub fn sample<R: Rng + ?Sized>(dist: &CategoricalDistribution, rng: &mut R) -> TokenId {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in dist.probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last_nonzero = i;
        if u < acc {
            return TokenId::from(i);
        }
    }
    // u landed in the rounding slack above the final cumulative sum
    TokenId::from(last_nonzero)
}

/// One draw from a symmetric Dirichlet with the given concentration.
///
/// Gamma draws for small concentrations can underflow to an all-zero vector;
/// in that case the draw collapses onto a single uniformly chosen vertex,
/// which is the limit the distribution approaches.
pub fn sample_dirichlet<R: Rng + ?Sized>(
    vocab: usize,
    concentration: f64,
    rng: &mut R,
) -> Result<CategoricalDistribution> {
    use rand_distr::{Distribution, Gamma};

    if vocab == 0 {
        return Err(Error::InvalidArgument("empty vocabulary".into()));
    }
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "concentration must be positive, got {concentration}"
        )));
    }
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::InvalidArgument(format!("gamma({concentration}): {e}")))?;
    let draws: Vec<f64> = (0..vocab).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        normalize(draws)
    } else {
        let hot = rng.random_range(0..vocab);
        Ok(CategoricalDistribution::one_hot(vocab, TokenId::from(hot)))
    }
}

/// A natural-log probability ratio clamped below at [`LOG_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogRatio(f64);

impl LogRatio {
    pub const FLOOR: LogRatio = LogRatio(LOG_FLOOR);
    pub const ZERO: LogRatio = LogRatio(0.0);

    /// Clamps `value` to the floor; NaN maps to the floor.
    pub fn new(value: f64) -> Self {
        if value.is_nan() || value <= LOG_FLOOR {
            Self::FLOOR
        } else {
            Self(value)
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_floor(self) -> bool {
        self.0 <= LOG_FLOOR
    }

    /// Linear ratio. Saturates at `f64::MAX` for very large scores.
    pub fn ratio(self) -> f64 {
        if self.is_floor() {
            0.0
        } else {
            self.0.exp().min(f64::MAX)
        }
    }
}

impl std::ops::Add for LogRatio {
    type Output = LogRatio;

    fn add(self, rhs: Self) -> Self {
        if self.is_floor() || rhs.is_floor() {
            Self::FLOOR
        } else {
            Self::new(self.0 + rhs.0)
        }
    }
}

impl std::iter::Sum for LogRatio {
    fn sum<I: Iterator<Item = LogRatio>>(iter: I) -> Self {
        iter.fold(LogRatio::ZERO, |a, b| a + b)
    }
}

/// `log p(v) − log q(v)`.
///
/// Returns the floor when `p(v) = 0`, and [`Error::DrafterZeroProb`] when
/// `q(v) = 0` since the draft could not have come from `q`.
pub fn log_prob_ratio(
    p: &CategoricalDistribution,
    q: &CategoricalDistribution,
    v: TokenId,
) -> Result<LogRatio> {
    same_vocab(p, q)?;
    v.check(p.vocab_size())?;
    let qv = q.prob(v);
    if qv <= 0.0 {
        return Err(Error::DrafterZeroProb(v.0));
    }
    let pv = p.prob(v);
    if pv <= 0.0 {
        return Ok(LogRatio::FLOOR);
    }
    Ok(LogRatio::new(pv.ln() - qv.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(vec![2.0, 2.0]).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(
            normalize(vec![1.0, 0.0, 0.0]).unwrap().probs(),
            &[1.0, 0.0, 0.0]
        );
        let d = normalize(vec![7.0, 3.0]).unwrap();
        assert_relative_eq!(d.probs()[0], 0.7, max_relative = 1e-15);
        assert_relative_eq!(d.probs()[1], 0.3, max_relative = 1e-15);
    }

    #[test]
    fn normalize_errors() {
        assert!(matches!(
            normalize(vec![0.0, 0.0]),
            Err(Error::AllZeroWeights)
        ));
        assert!(matches!(
            normalize(vec![1.0, -0.5]),
            Err(Error::InvalidWeight { index: 1, .. })
        ));
        assert!(matches!(
            normalize(vec![f64::NAN, 1.0]),
            Err(Error::InvalidWeight { index: 0, .. })
        ));
        assert!(matches!(
            normalize(vec![f64::INFINITY]),
            Err(Error::InvalidWeight { .. })
        ));
    }

    #[test]
    fn from_probs_rejects_unnormalized() {
        assert!(CategoricalDistribution::from_probs(vec![0.5, 0.4]).is_err());
        assert!(CategoricalDistribution::from_probs(vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn log_ratio_examples() {
        let p = CategoricalDistribution::from_probs(vec![0.7, 0.3]).unwrap();
        let q = CategoricalDistribution::from_probs(vec![0.5, 0.5]).unwrap();
        // ln(0.7 / 0.5) = ln 1.4
        let r = log_prob_ratio(&p, &q, TokenId(0)).unwrap();
        assert_relative_eq!(r.value(), 1.4f64.ln(), max_relative = 1e-12);
        assert!((r.value() - 0.3365).abs() < 1e-4);

        assert_eq!(log_prob_ratio(&p, &p, TokenId(1)).unwrap(), LogRatio::ZERO);

        let p0 = CategoricalDistribution::from_probs(vec![0.0, 1.0]).unwrap();
        let q2 = CategoricalDistribution::from_probs(vec![0.2, 0.8]).unwrap();
        let r = log_prob_ratio(&p0, &q2, TokenId(0)).unwrap();
        assert_eq!(r.value(), LOG_FLOOR);
        assert_eq!(r.ratio(), 0.0);
    }

    #[test]
    fn log_ratio_zero_drafter() {
        let p = CategoricalDistribution::from_probs(vec![0.5, 0.5]).unwrap();
        let q = CategoricalDistribution::from_probs(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            log_prob_ratio(&p, &q, TokenId(1)),
            Err(Error::DrafterZeroProb(1))
        ));
        let q3 = CategoricalDistribution::uniform(3);
        assert!(matches!(
            log_prob_ratio(&p, &q3, TokenId(0)),
            Err(Error::VocabMismatch { .. })
        ));
    }

    #[test]
    fn log_ratio_sum_saturates_at_floor() {
        let s: LogRatio = [LogRatio::new(3.0), LogRatio::FLOOR, LogRatio::new(700.0)]
            .into_iter()
            .sum();
        assert!(s.is_floor());
        let s: LogRatio = [LogRatio::new(-400.0), LogRatio::new(-400.0)]
            .into_iter()
            .sum();
        assert!(s.is_floor());
    }

    #[test]
    fn sample_degenerate_and_deterministic() {
        let d = CategoricalDistribution::from_probs(vec![1.0, 0.0, 0.0]).unwrap();
        let mut rng = seeded(1);
        for _ in 0..1000 {
            assert_eq!(d.sample(&mut rng), TokenId(0));
        }
        let half = CategoricalDistribution::uniform(2);
        let a: Vec<_> = (0..64)
            .map({
                let mut r = seeded(99);
                move |_| half.sample(&mut r)
            })
            .collect();
        let half = CategoricalDistribution::uniform(2);
        let b: Vec<_> = (0..64)
            .map({
                let mut r = seeded(99);
                move |_| half.sample(&mut r)
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_frequency() {
        let d = CategoricalDistribution::from_probs(vec![0.7, 0.3]).unwrap();
        let mut rng = seeded(2024);
        let n = 100_000;
        let zeros = (0..n).filter(|_| d.sample(&mut rng) == TokenId(0)).count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.7).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn argmax_prefers_smallest_on_ties() {
        let d = CategoricalDistribution::from_probs(vec![0.2, 0.4, 0.4]).unwrap();
        assert_eq!(d.argmax(), TokenId(1));
    }

    fn weights() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..100.0, 1..32)
            .prop_filter("need positive mass", |w| w.iter().any(|&x| x > 0.0))
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(w in weights()) {
            let once = normalize(w).unwrap();
            let twice = normalize(once.probs().to_vec()).unwrap();
            prop_assert_eq!(once.probs(), twice.probs());
            let s: f64 = once.probs().iter().sum();
            prop_assert!((s - 1.0).abs() <= NORMALIZATION_TOL);
        }

        #[test]
        fn exp_log_ratio_matches_ratio(w1 in weights(), w2 in weights(), pick in any::<prop::sample::Index>()) {
            let n = w1.len().min(w2.len());
            let mut a = w1[..n].to_vec();
            let mut b = w2[..n].to_vec();
            // keep both supports non-empty after truncation
            a[0] += 1.0;
            b[0] += 1.0;
            let p = normalize(a).unwrap();
            let q = normalize(b).unwrap();
            let v = TokenId::from(pick.index(n));
            if q.prob(v) > 0.0 && p.prob(v) > 0.0 {
                let r = log_prob_ratio(&p, &q, v).unwrap();
                let expect = p.prob(v) / q.prob(v);
                prop_assert!((r.value().exp() - expect).abs() <= 1e-12 * expect);
            }
        }

        #[test]
        fn sample_is_reproducible(w in weights(), seed in any::<u64>()) {
            let d = normalize(w).unwrap();
            let a = d.sample(&mut seeded(seed));
            let b = d.sample(&mut seeded(seed));
            prop_assert_eq!(a, b);
            prop_assert!(d.prob(a) > 0.0);
        }
    }
}
