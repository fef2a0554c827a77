//! Verification primitives: adaptive neighborhoods, the joint phrase score
//! and the two acceptance tests.

use rand::Rng;

use crate::dist::{
    log_prob_ratio, normalize, same_vocab, sample, CategoricalDistribution, LogRatio,
};
use crate::error::{Error, Result};
use crate::token::TokenId;

/// Tokens whose verifier probability lies strictly within `tau` of the
/// drafted token's probability at the same slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    members: Vec<bool>,
}

impl Neighborhood {
    pub fn contains(&self, token: TokenId) -> bool {
        self.members.get(token.index()).copied().unwrap_or(false)
    }

    pub fn members(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| TokenId::from(i))
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn build_neighborhood(p: &CategoricalDistribution, drafted: TokenId, tau: f64) -> Neighborhood {
    let center = p.prob(drafted);
    let mut members: Vec<bool> = p
        .probs()
        .iter()
        .map(|&pv| (pv - center).abs() < tau)
        .collect();
    // |x − x| = 0 < tau for any tau > 0; kept explicit for tau = 0 callers.
    members[drafted.index()] = true;
    Neighborhood { members }
}

/// `Σ_k log p_k(v_k) − log q_k(v_k)` over a phrase, clamped at the floor.
pub fn phrase_acceptance_score(
    verifier: &[CategoricalDistribution],
    drafter: &[CategoricalDistribution],
    phrase: &[TokenId],
) -> Result<LogRatio> {
    if verifier.len() != phrase.len() || drafter.len() != phrase.len() {
        return Err(Error::InvalidArgument(format!(
            "phrase of length {} scored against {} verifier and {} drafter slots",
            phrase.len(),
            verifier.len(),
            drafter.len()
        )));
    }
    let mut total = LogRatio::ZERO;
    for ((p, q), &v) in verifier.iter().zip(drafter).zip(phrase) {
        total = total + log_prob_ratio(p, q, v)?;
    }
    Ok(total)
}

/// Accepts when `exp(score) > u` for `u ~ U[0, 1)`. One uniform is drawn on
/// every call.
pub fn verify_phrase<R: Rng + ?Sized>(score: LogRatio, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    !score.is_floor() && score.ratio() > u
}

/// Outcome of checking one drafted token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenVerdict {
    pub accepted: bool,
    pub emitted: TokenId,
}

/// Speculative accept–resample test.
///
/// Accepts `drafted` with probability `min(1, p/q)`; otherwise emits a draw
/// from `normalize(max(0, p − q))`. The emitted token is then distributed
/// exactly as `p` when `drafted ~ q`.
pub fn verify_token<R: Rng + ?Sized>(
    p: &CategoricalDistribution,
    q: &CategoricalDistribution,
    drafted: TokenId,
    rng: &mut R,
) -> Result<TokenVerdict> {
    same_vocab(p, q)?;
    drafted.check(p.vocab_size())?;
    let qd = q.prob(drafted);
    if qd <= 0.0 {
        return Err(Error::DrafterZeroProb(drafted.0));
    }
    let u: f64 = rng.random();
    if u * qd < p.prob(drafted) {
        return Ok(TokenVerdict {
            accepted: true,
            emitted: drafted,
        });
    }
    let residual = residual_distribution(p, q)?;
    Ok(TokenVerdict {
        accepted: false,
        emitted: sample(&residual, rng),
    })
}

/// `normalize(max(0, p − q))`.
pub fn residual_distribution(
    p: &CategoricalDistribution,
    q: &CategoricalDistribution,
) -> Result<CategoricalDistribution> {
    let diff: Vec<f64> = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (a - b).max(0.0))
        .collect();
    match normalize(diff) {
        Err(Error::AllZeroWeights) => Err(Error::DegenerateResidual),
        other => other,
    }
}

/// Greedy counterpart of [`verify_token`]: accept iff the draft is the
/// verifier's argmax, otherwise emit the argmax.
pub fn verify_token_greedy(p: &CategoricalDistribution, drafted: TokenId) -> TokenVerdict {
    let best = p.argmax();
    TokenVerdict {
        accepted: best == drafted,
        emitted: best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::LOG_FLOOR;
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    fn d(p: &[f64]) -> CategoricalDistribution {
        CategoricalDistribution::from_probs(p.to_vec()).unwrap()
    }

    fn ids(n: &Neighborhood) -> Vec<u32> {
        n.members().map(|t| t.0).collect()
    }

    #[test]
    fn neighborhood_examples() {
        let p = d(&[0.40, 0.39, 0.21]);
        assert_eq!(ids(&build_neighborhood(&p, TokenId(0), 0.02)), vec![0, 1]);
        // |0.40 − 0.39| is not strictly below 0.01
        assert_eq!(ids(&build_neighborhood(&p, TokenId(0), 0.01)), vec![0]);
        let u = CategoricalDistribution::uniform(5);
        assert_eq!(build_neighborhood(&u, TokenId(3), 1e-9).len(), 5);
    }

    #[test]
    fn score_examples() {
        let p = d(&[0.5, 0.5]);
        let s = phrase_acceptance_score(
            &[p.clone(), p.clone()],
            &[p.clone(), p.clone()],
            &[TokenId(0), TokenId(1)],
        )
        .unwrap();
        assert_eq!(s, LogRatio::ZERO);

        // ratios 0.7/0.5 = 1.4 and 0.3/0.5 = 0.6
        let p = d(&[0.7, 0.3]);
        let q = d(&[0.5, 0.5]);
        let s = phrase_acceptance_score(
            &[p.clone(), p.clone()],
            &[q.clone(), q.clone()],
            &[TokenId(0), TokenId(1)],
        )
        .unwrap();
        assert_relative_eq!(s.value(), 0.84f64.ln(), max_relative = 1e-12);
        assert!((s.value() + 0.1744).abs() < 1e-4);

        let z = d(&[1.0, 0.0]);
        let s = phrase_acceptance_score(
            &[p.clone(), z],
            &[q.clone(), q.clone()],
            &[TokenId(0), TokenId(1)],
        )
        .unwrap();
        assert_eq!(s.value(), LOG_FLOOR);
        assert_eq!(s.ratio(), 0.0);

        let qz = d(&[1.0, 0.0]);
        assert!(matches!(
            phrase_acceptance_score(&[p.clone(), p.clone()], &[q, qz], &[TokenId(0), TokenId(1)]),
            Err(Error::DrafterZeroProb(1))
        ));
        assert!(phrase_acceptance_score(
            std::slice::from_ref(&p),
            &[p.clone(), p.clone()],
            &[TokenId(0)]
        )
        .is_err());
    }

    #[test]
    fn phrase_test_limits() {
        let mut rng = seeded(5);
        for _ in 0..10_000 {
            assert!(verify_phrase(LogRatio::ZERO, &mut rng));
            assert!(verify_phrase(LogRatio::new(2.0), &mut rng));
            assert!(!verify_phrase(LogRatio::FLOOR, &mut rng));
        }
    }

    #[test]
    fn phrase_test_frequency() {
        let mut rng = seeded(77);
        let n = 100_000;
        let score = LogRatio::new(0.84f64.ln());
        let hits = (0..n).filter(|_| verify_phrase(score, &mut rng)).count();
        let f = hits as f64 / n as f64;
        assert!((f - 0.84).abs() < 0.01, "{f}");
    }

    #[test]
    fn token_test_examples() {
        let mut rng = seeded(9);
        let p = d(&[0.2, 0.3, 0.5]);
        for _ in 0..1000 {
            let v = verify_token(&p, &p, TokenId(1), &mut rng).unwrap();
            assert_eq!(
                v,
                TokenVerdict {
                    accepted: true,
                    emitted: TokenId(1)
                }
            );
        }

        let p = d(&[0.7, 0.3]);
        let q = d(&[0.5, 0.5]);
        assert_eq!(residual_distribution(&p, &q).unwrap().probs(), &[1.0, 0.0]);
        let n = 100_000;
        let mut accepted = 0;
        for _ in 0..n {
            let v = verify_token(&p, &q, TokenId(1), &mut rng).unwrap();
            if v.accepted {
                accepted += 1;
                assert_eq!(v.emitted, TokenId(1));
            } else {
                assert_eq!(v.emitted, TokenId(0));
            }
        }
        let f = accepted as f64 / n as f64;
        assert!((f - 0.6).abs() < 0.01, "{f}");

        let p = d(&[1.0, 0.0]);
        for _ in 0..1000 {
            let v = verify_token(&p, &q, TokenId(1), &mut rng).unwrap();
            assert_eq!(
                v,
                TokenVerdict {
                    accepted: false,
                    emitted: TokenId(0)
                }
            );
        }
    }

    #[test]
    fn token_test_errors() {
        let mut rng = seeded(1);
        let p = d(&[0.5, 0.5]);
        let q = d(&[1.0, 0.0]);
        assert!(matches!(
            verify_token(&p, &q, TokenId(1), &mut rng),
            Err(Error::DrafterZeroProb(1))
        ));
        assert!(matches!(
            residual_distribution(&p, &p),
            Err(Error::DegenerateResidual)
        ));
    }

    #[test]
    fn greedy_token_test() {
        let p = d(&[0.1, 0.6, 0.3]);
        assert_eq!(
            verify_token_greedy(&p, TokenId(1)),
            TokenVerdict {
                accepted: true,
                emitted: TokenId(1)
            }
        );
        assert_eq!(
            verify_token_greedy(&p, TokenId(2)),
            TokenVerdict {
                accepted: false,
                emitted: TokenId(1)
            }
        );
    }

    /// Exact law of the emitted token: P(accept d)·δ_d + P(reject)·residual,
    /// averaged over d ~ q. Must equal p for every (p, q).
    fn emitted_law(p: &CategoricalDistribution, q: &CategoricalDistribution) -> Vec<f64> {
        let v = p.vocab_size();
        let mut law = vec![0.0; v];
        let residual = residual_distribution(p, q).ok();
        for d in 0..v {
            let qd = q.probs()[d];
            if qd == 0.0 {
                continue;
            }
            let acc = (p.probs()[d] / qd).min(1.0);
            law[d] += qd * acc;
            if let Some(r) = &residual {
                for (x, rx) in r.probs().iter().enumerate() {
                    law[x] += qd * (1.0 - acc) * rx;
                }
            }
        }
        law
    }

    #[test]
    fn accept_resample_is_lossless_exhaustive() {
        // every pair drawn from a grid of distributions over V = 2..=4
        let mut rng = seeded(31);
        for vocab in 2..=4 {
            for _ in 0..300 {
                let p = crate::dist::sample_dirichlet(vocab, 0.7, &mut rng).unwrap();
                let q = crate::dist::sample_dirichlet(vocab, 0.7, &mut rng).unwrap();
                let law = emitted_law(&p, &q);
                for (a, b) in law.iter().zip(p.probs()) {
                    assert!((a - b).abs() < 1e-9, "{law:?} vs {:?}", p.probs());
                }
            }
        }
    }

    #[test]
    fn accept_resample_is_lossless_monte_carlo() {
        let p = d(&[0.1, 0.2, 0.3, 0.4]);
        let q = d(&[0.4, 0.3, 0.2, 0.1]);
        let mut rng = seeded(4);
        let n = 200_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let drafted = sample(&q, &mut rng);
            let v = verify_token(&p, &q, drafted, &mut rng).unwrap();
            counts[v.emitted.index()] += 1;
        }
        for (c, &pv) in counts.iter().zip(p.probs()) {
            assert!((*c as f64 / n as f64 - pv).abs() < 0.01);
        }
    }
}
