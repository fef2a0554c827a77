//! Speculative Jacobi decoding with phrase-level verification.
//!
//! The crate is organised bottom-up:
//!
//! * [`token`] and [`dist`]: token ids, categorical distributions and
//!   log-space ratio helpers;
//! * [`models`]: the conditional-model interface and desk-scale models;
//! * [`phrase`]: phrase-library construction by iterative pair merging and
//!   the prefix index used at decode time;
//! * [`decoder`]: Jacobi, token-wise speculative and phrase-verified decoding;
//! * [`theory`]: exact and Monte Carlo acceptance-rate oracles.

pub mod decoder;
pub mod dist;
pub mod error;
pub mod models;
pub mod phrase;
pub mod rng;
pub mod theory;
pub mod token;

pub use decoder::{decode, verify_window, DecodeMetrics, DecodeMode, JacobiWindow, VerifyConfig};
pub use dist::{log_prob_ratio, normalize, sample, CategoricalDistribution, LogRatio, LOG_FLOOR};
pub use error::{Error, Result};
pub use models::{ConditionalModel, MarkovModel};
pub use phrase::{build_library, Phrase, PhraseLibrary};
pub use token::{TokenId, TokenSequence};
