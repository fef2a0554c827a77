use rand::Rng;

use super::verify::{
    build_neighborhood, phrase_acceptance_score, verify_phrase, verify_token, verify_token_greedy,
    Neighborhood,
};
use super::{DecodeMetrics, DecodeMode, VerifyConfig};
use crate::dist::{sample, CategoricalDistribution};
use crate::error::{Error, Result};
use crate::models::ConditionalModel;
use crate::phrase::{Phrase, PhraseLibrary};
use crate::token::{TokenId, TokenSequence};

/// Draft buffer carried between Jacobi iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiWindow {
    drafts: TokenSequence,
    /// The distribution each draft was drawn from.
    drafter_dists: Vec<CategoricalDistribution>,
    window_start: usize,
}

fn draw<R: Rng + ?Sized>(dist: &CategoricalDistribution, greedy: bool, rng: &mut R) -> TokenId {
    if greedy {
        dist.argmax()
    } else {
        sample(dist, rng)
    }
}

impl JacobiWindow {
    pub fn new(
        drafts: TokenSequence,
        drafter_dists: Vec<CategoricalDistribution>,
        window_start: usize,
    ) -> Result<Self> {
        if drafts.len() != drafter_dists.len() {
            return Err(Error::InvalidArgument(format!(
                "{} drafts but {} drafter distributions",
                drafts.len(),
                drafter_dists.len()
            )));
        }
        for (d, q) in drafts.iter().zip(&drafter_dists) {
            d.check(q.vocab_size())?;
            if q.prob(*d) <= 0.0 {
                return Err(Error::DrafterZeroProb(d.0));
            }
        }
        Ok(Self {
            drafts,
            drafter_dists,
            window_start,
        })
    }

    /// First window of a decode: every slot drafted from the target's
    /// begin-context row, which also serves as the drafter distribution.
    pub fn initial<M, R>(target: &M, len: usize, greedy: bool, rng: &mut R) -> Self
    where
        M: ConditionalModel + ?Sized,
        R: Rng + ?Sized,
    {
        let begin = target.conditional(&[]);
        let drafts = (0..len).map(|_| draw(&begin, greedy, rng)).collect();
        Self {
            drafts,
            drafter_dists: vec![begin; len],
            window_start: 0,
        }
    }

    pub fn drafts(&self) -> &TokenSequence {
        &self.drafts
    }

    pub fn drafter_dists(&self) -> &[CategoricalDistribution] {
        &self.drafter_dists
    }

    pub fn window_start(&self) -> usize {
        self.window_start
    }

    pub fn len(&self) -> usize {
        self.drafts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drafts.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.drafts.truncate(len);
        self.drafter_dists.truncate(len);
    }
}

/// Result of one Jacobi iteration.
#[derive(Debug, Clone)]
pub struct WindowOutcome {
    pub committed: TokenSequence,
    pub next_window: JacobiWindow,
    pub metrics: DecodeMetrics,
}

/// First phrase in `start`'s bucket that fits in the window from slot `t`
/// and whose every token lies in the neighborhood of its slot.
pub fn find_phrase_candidate<'a>(
    lib: &'a PhraseLibrary,
    drafts: &[TokenId],
    neighborhoods: &[Neighborhood],
    t: usize,
    max_len: usize,
) -> Option<&'a Phrase> {
    let room = drafts.len() - t;
    lib.match_prefix(drafts[t]).iter().find(|p| {
        p.len() <= room
            && p.len() <= max_len
            && p.tokens
                .iter()
                .enumerate()
                .all(|(k, &v)| neighborhoods[t + k].contains(v))
    })
}

/// Runs one verification pass over `window`: a single batched target
/// evaluation, a left-to-right scan that commits phrases or single tokens,
/// and the Jacobi refill of the window.
///
/// The scan ends at the first token rejection, or after a phrase whose
/// tokens differ from the drafts, because the remaining verifier
/// conditionals were computed on a context that is no longer the committed
/// one. Slots past that point are redrawn from their fresh verifier
/// conditionals; new slots appended at the end copy the last slot's
/// conditional.
pub fn verify_window<M, R>(
    prefix: &[TokenId],
    window: &JacobiWindow,
    target: &M,
    lib: Option<&PhraseLibrary>,
    cfg: &VerifyConfig,
    rng: &mut R,
) -> Result<WindowOutcome>
where
    M: ConditionalModel + ?Sized,
    R: Rng + ?Sized,
{
    if window.is_empty() {
        return Err(Error::InvalidArgument("empty Jacobi window".into()));
    }
    if cfg.mode == DecodeMode::SjdPv && lib.is_none() {
        return Err(Error::InvalidArgument(
            "phrase verification needs a library".into(),
        ));
    }
    let width = window.len();
    let drafts = window.drafts.as_slice();
    let verifier = target.batched_conditionals(prefix, drafts);
    debug_assert_eq!(verifier.len(), width);

    let mut metrics = DecodeMetrics {
        nfe: 1,
        ..DecodeMetrics::default()
    };

    let neighborhoods: Vec<Neighborhood> = match (cfg.mode, lib) {
        (DecodeMode::SjdPv, Some(_)) => verifier
            .iter()
            .zip(drafts)
            .map(|(p, &d)| build_neighborhood(p, d, cfg.tau))
            .collect(),
        _ => Vec::new(),
    };

    let mut committed = TokenSequence::with_capacity(width);
    let mut t = 0;

    'scan: while t < width {
        if let (DecodeMode::SjdPv, Some(lib)) = (cfg.mode, lib) {
            if let Some(phrase) =
                find_phrase_candidate(lib, drafts, &neighborhoods, t, cfg.max_phrase_len)
            {
                let len = phrase.len();
                match phrase_acceptance_score(
                    &verifier[t..t + len],
                    &window.drafter_dists[t..t + len],
                    &phrase.tokens,
                ) {
                    Ok(score) => {
                        metrics.phrase_attempts += 1;
                        if verify_phrase(score, rng) {
                            metrics.phrase_accepts += 1;
                            metrics.phrase_tokens += len as u64;
                            committed.extend_from_slice(&phrase.tokens);
                            let matches_drafts = phrase.tokens[..] == drafts[t..t + len];
                            t += len;
                            if !matches_drafts {
                                break 'scan;
                            }
                            continue 'scan;
                        }
                    }
                    // zero drafter support: the ratio is undefined, fall back
                    Err(Error::DrafterZeroProb(_)) => metrics.phrase_skips += 1,
                    Err(e) => return Err(e),
                }
            }
        }

        let p = &verifier[t];
        let verdict = match cfg.mode {
            DecodeMode::Jacobi => {
                let y = draw(p, cfg.greedy, rng);
                super::verify::TokenVerdict {
                    accepted: y == drafts[t],
                    emitted: y,
                }
            }
            DecodeMode::Sjd | DecodeMode::SjdPv => {
                if cfg.greedy {
                    verify_token_greedy(p, drafts[t])
                } else {
                    verify_token(p, &window.drafter_dists[t], drafts[t], rng)?
                }
            }
        };
        committed.push(verdict.emitted);
        t += 1;
        if verdict.accepted {
            metrics.token_accepts += 1;
        } else {
            metrics.token_rejects += 1;
            break;
        }
    }

    // Jacobi refill. The scan only stops early at a stale slot, so every
    // surviving slot is redrawn.
    let mut next_drafts = TokenSequence::with_capacity(cfg.window_size);
    let mut next_dists = Vec::with_capacity(cfg.window_size);
    for p in &verifier[t..] {
        next_drafts.push(draw(p, cfg.greedy, rng));
        next_dists.push(p.clone());
    }
    let last = &verifier[width - 1];
    while next_drafts.len() < cfg.window_size {
        next_drafts.push(draw(last, cfg.greedy, rng));
        next_dists.push(last.clone());
    }

    metrics.tokens_emitted = committed.len() as u64;
    metrics.tokens_per_iteration.push(committed.len() as u32);
    Ok(WindowOutcome {
        next_window: JacobiWindow {
            drafts: next_drafts,
            drafter_dists: next_dists,
            window_start: window.window_start + committed.len(),
        },
        committed,
        metrics,
    })
}
