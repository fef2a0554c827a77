use std::fmt;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Index of a symbol in a vocabulary of size `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn check(self, vocab: usize) -> Result<Self> {
        if self.index() < vocab {
            Ok(self)
        } else {
            Err(Error::InvalidToken {
                token: self.0,
                vocab,
            })
        }
    }
}

impl From<u32> for TokenId {
    fn from(v: u32) -> Self {
        TokenId(v)
    }
}

impl From<usize> for TokenId {
    fn from(v: usize) -> Self {
        TokenId(u32::try_from(v).expect("token index exceeds u32"))
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An ordered run of tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSequence(Vec<TokenId>);

impl TokenSequence {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn with_capacity(n: usize) -> Self {
        Self(Vec::with_capacity(n))
    }

    pub fn from_ids<I: IntoIterator<Item = u32>>(ids: I) -> Self {
        Self(ids.into_iter().map(TokenId).collect())
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|t| t.0)
    }

    pub fn into_inner(self) -> Vec<TokenId> {
        self.0
    }

    /// Fails on the first token that is out of range for `vocab`.
    pub fn validate(&self, vocab: usize) -> Result<()> {
        self.0.iter().try_for_each(|t| t.check(vocab).map(|_| ()))
    }
}

impl Deref for TokenSequence {
    type Target = Vec<TokenId>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl DerefMut for TokenSequence {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl From<Vec<TokenId>> for TokenSequence {
    fn from(v: Vec<TokenId>) -> Self {
        Self(v)
    }
}

impl From<&[TokenId]> for TokenSequence {
    fn from(v: &[TokenId]) -> Self {
        Self(v.to_vec())
    }
}

impl FromIterator<TokenId> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = TokenId>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a TokenId;
    type IntoIter = std::slice::Iter<'a, TokenId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl IntoIterator for TokenSequence {
    type Item = TokenId;
    type IntoIter = std::vec::IntoIter<TokenId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}
