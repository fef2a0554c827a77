//! Jacobi-style parallel decoding with three verification rules:
//!
//! * `jacobi`: a draft is kept only if it equals the target's own choice;
//! * `sjd`: the speculative accept–resample test per token;
//! * `sjd_pv`: drafts that start a library phrase are first checked jointly
//!   against the phrase, falling back to the per-token test.

mod verify;
mod window;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::models::ConditionalModel;
use crate::phrase::{PhraseLibrary, DEFAULT_MAX_PHRASE_LEN};
use crate::token::TokenSequence;

pub use verify::{
    build_neighborhood, phrase_acceptance_score, residual_distribution, verify_phrase,
    verify_token, verify_token_greedy, Neighborhood, TokenVerdict,
};
pub use window::{find_phrase_candidate, verify_window, JacobiWindow, WindowOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeMode {
    Jacobi,
    Sjd,
    SjdPv,
}

impl DecodeMode {
    pub const ALL: [DecodeMode; 3] = [DecodeMode::Jacobi, DecodeMode::Sjd, DecodeMode::SjdPv];

    pub fn as_str(self) -> &'static str {
        match self {
            DecodeMode::Jacobi => "jacobi",
            DecodeMode::Sjd => "sjd",
            DecodeMode::SjdPv => "sjd_pv",
        }
    }
}

impl fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "jacobi" => Ok(DecodeMode::Jacobi),
            "sjd" => Ok(DecodeMode::Sjd),
            "sjd_pv" | "sjdpv" => Ok(DecodeMode::SjdPv),
            other => Err(Error::InvalidArgument(format!(
                "unknown decode mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// Neighborhood threshold, in `(0, 1)`.
    pub tau: f64,
    pub window_size: usize,
    pub max_phrase_len: usize,
    pub mode: DecodeMode,
    /// Argmax drafting and token checks instead of sampling.
    pub greedy: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            tau: 0.01,
            window_size: 16,
            max_phrase_len: DEFAULT_MAX_PHRASE_LEN,
            mode: DecodeMode::SjdPv,
            greedy: false,
        }
    }
}

impl VerifyConfig {
    pub fn new(mode: DecodeMode, window_size: usize, tau: f64) -> Result<Self> {
        let cfg = Self {
            tau,
            window_size,
            mode,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_greedy(mut self, greedy: bool) -> Self {
        self.greedy = greedy;
        self
    }

    pub fn with_max_phrase_len(mut self, len: usize) -> Self {
        self.max_phrase_len = len;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if self.window_size == 0 {
            return Err(Error::InvalidArgument(
                "window size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Efficiency counters for one decode (or a sum over several).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecodeMetrics {
    /// Batched target evaluations.
    pub nfe: u64,
    pub tokens_emitted: u64,
    pub tokens_per_iteration: Vec<u32>,
    /// Phrase candidates that were scored.
    pub phrase_attempts: u64,
    pub phrase_accepts: u64,
    /// Tokens committed through accepted phrases.
    pub phrase_tokens: u64,
    /// Candidates skipped because the drafter gave a phrase token zero mass.
    pub phrase_skips: u64,
    pub token_accepts: u64,
    pub token_rejects: u64,
}

impl DecodeMetrics {
    pub fn absorb(&mut self, other: DecodeMetrics) {
        self.nfe += other.nfe;
        self.tokens_emitted += other.tokens_emitted;
        self.tokens_per_iteration.extend(other.tokens_per_iteration);
        self.phrase_attempts += other.phrase_attempts;
        self.phrase_accepts += other.phrase_accepts;
        self.phrase_tokens += other.phrase_tokens;
        self.phrase_skips += other.phrase_skips;
        self.token_accepts += other.token_accepts;
        self.token_rejects += other.token_rejects;
    }

    pub fn mean_tokens_per_iteration(&self) -> f64 {
        if self.nfe == 0 {
            0.0
        } else {
            self.tokens_emitted as f64 / self.nfe as f64
        }
    }

    pub fn phrase_accept_rate(&self) -> f64 {
        ratio(self.phrase_accepts, self.phrase_attempts)
    }

    pub fn token_accept_rate(&self) -> f64 {
        ratio(self.token_accepts, self.token_accepts + self.token_rejects)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Generates `total_len` tokens from an empty prefix by repeated
/// [`verify_window`] calls.
///
/// The first window is drafted from the target's begin-context row. The
/// window shrinks near the end so that exactly `total_len` tokens are
/// committed.
pub fn decode<M, R>(
    target: &M,
    lib: Option<&PhraseLibrary>,
    cfg: &VerifyConfig,
    total_len: usize,
    rng: &mut R,
) -> Result<(TokenSequence, DecodeMetrics)>
where
    M: ConditionalModel + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    if total_len == 0 {
        return Err(Error::InvalidArgument(
            "decode length must be at least 1".into(),
        ));
    }
    let max_iterations = 10 * total_len;
    let mut out = TokenSequence::with_capacity(total_len);
    let mut metrics = DecodeMetrics::default();
    let mut window = JacobiWindow::initial(target, cfg.window_size.min(total_len), cfg.greedy, rng);
    let mut iterations = 0;
    while out.len() < total_len {
        if iterations >= max_iterations {
            return Err(Error::NonTermination {
                iterations,
                committed: out.len(),
                target: total_len,
            });
        }
        let step = verify_window(&out, &window, target, lib, cfg, rng)?;
        iterations += 1;
        out.extend_from_slice(&step.committed);
        metrics.absorb(step.metrics);
        window = step.next_window;
        window.truncate(total_len - out.len());
    }
    debug_assert_eq!(out.len(), total_len);
    Ok((out, metrics))
}
