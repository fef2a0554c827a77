//! Phrase library: merge rules learned from a token corpus, the raw-token
//! phrases they expand to, and an index from starting token to phrases.

mod build;
mod io;

use std::fmt;

use crate::error::{Error, Result};
use crate::token::{TokenId, TokenSequence};

pub use build::{build_library, cooccurrence_stats, DEFAULT_MAX_PHRASE_LEN};
pub use io::{read_corpus, write_corpus, LIBRARY_FORMAT_VERSION, LIBRARY_MAGIC};

/// A raw token (`< V`) or a merged symbol (`>= V`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub u32);

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `(left, right) → result`, learned at merge iteration `rank` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeRule {
    pub left: SymbolId,
    pub right: SymbolId,
    pub result: SymbolId,
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phrase {
    /// Raw tokens only, length at least 2.
    pub tokens: TokenSequence,
    /// Rank of the merge rule this phrase expands.
    pub source_rank: u32,
    /// Occurrences of the merged symbol in the final segmentation of the
    /// corpus, nested occurrences included.
    pub corpus_count: u64,
}

impl Phrase {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn first(&self) -> TokenId {
        self.tokens[0]
    }
}

/// Canonical bucket order: longer phrases first, then more frequent, then
/// earlier merges.
fn bucket_order(a: &Phrase, b: &Phrase) -> std::cmp::Ordering {
    a.first()
        .cmp(&b.first())
        .then(b.len().cmp(&a.len()))
        .then(b.corpus_count.cmp(&a.corpus_count))
        .then(a.source_rank.cmp(&b.source_rank))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseLibrary {
    vocab: usize,
    rules: Vec<MergeRule>,
    /// Sorted by starting token, then bucket order.
    phrases: Vec<Phrase>,
    /// `phrases[offsets[v]..offsets[v + 1]]` is the bucket for token `v`.
    offsets: Vec<usize>,
}

impl PhraseLibrary {
    /// A library with no rules; every lookup misses.
    pub fn empty(vocab: usize) -> Self {
        Self {
            vocab,
            rules: Vec::new(),
            phrases: Vec::new(),
            offsets: vec![0; vocab + 1],
        }
    }

    /// Assembles a library and builds the prefix index.
    pub fn from_parts(
        vocab: usize,
        rules: Vec<MergeRule>,
        mut phrases: Vec<Phrase>,
    ) -> Result<Self> {
        for (i, r) in rules.iter().enumerate() {
            let expected = vocab as u64 + i as u64;
            if r.result.0 as u64 != expected || r.rank as usize != i + 1 {
                return Err(Error::Format(format!(
                    "rule {i} has result {} rank {}, expected result {expected} rank {}",
                    r.result,
                    r.rank,
                    i + 1
                )));
            }
            if r.left.0 >= r.result.0 || r.right.0 >= r.result.0 {
                return Err(Error::Format(format!("rule {i} references a later symbol")));
            }
        }
        for p in &phrases {
            if p.len() < 2 {
                return Err(Error::Format("phrase shorter than two tokens".into()));
            }
            p.tokens.validate(vocab)?;
        }
        phrases.sort_by(bucket_order);
        let mut offsets = vec![0usize; vocab + 1];
        for p in &phrases {
            offsets[p.first().index() + 1] += 1;
        }
        for v in 0..vocab {
            offsets[v + 1] += offsets[v];
        }
        Ok(Self {
            vocab,
            rules,
            phrases,
            offsets,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    pub fn rules(&self) -> &[MergeRule] {
        &self.rules
    }

    /// Number of merges performed.
    pub fn merges(&self) -> usize {
        self.rules.len()
    }

    pub fn phrases(&self) -> &[Phrase] {
        &self.phrases
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn max_phrase_len(&self) -> usize {
        self.phrases.iter().map(Phrase::len).max().unwrap_or(0)
    }

    /// Phrases starting with `start`, in the order verification tries them.
    pub fn match_prefix(&self, start: TokenId) -> &[Phrase] {
        let v = start.index();
        if v >= self.vocab {
            return &[];
        }
        &self.phrases[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn expand(&self, s: SymbolId) -> Result<TokenSequence> {
        expand_symbol(&self.rules, self.vocab, s)
    }
}

/// Expands a symbol to raw tokens, left subtree first.
pub fn expand_symbol(rules: &[MergeRule], vocab: usize, s: SymbolId) -> Result<TokenSequence> {
    let mut out = TokenSequence::new();
    let mut stack = vec![s];
    while let Some(sym) = stack.pop() {
        let id = sym.0 as usize;
        if id < vocab {
            out.push(TokenId(sym.0));
            continue;
        }
        let rule = rules.get(id - vocab).ok_or(Error::UnknownSymbol(sym.0))?;
        debug_assert_eq!(rule.result, sym);
        stack.push(rule.right);
        stack.push(rule.left);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(l: u32, r: u32, res: u32, rank: u32) -> MergeRule {
        MergeRule {
            left: SymbolId(l),
            right: SymbolId(r),
            result: SymbolId(res),
            rank,
        }
    }

    fn phrase(ids: &[u32], rank: u32, count: u64) -> Phrase {
        Phrase {
            tokens: TokenSequence::from_ids(ids.iter().copied()),
            source_rank: rank,
            corpus_count: count,
        }
    }

    #[test]
    fn expansion() {
        let rules = [rule(1, 2, 8, 1), rule(8, 3, 9, 2)];
        assert_eq!(
            expand_symbol(&rules, 8, SymbolId(5))
                .unwrap()
                .ids()
                .collect::<Vec<_>>(),
            [5]
        );
        assert_eq!(
            expand_symbol(&rules, 8, SymbolId(9))
                .unwrap()
                .ids()
                .collect::<Vec<_>>(),
            [1, 2, 3]
        );
        assert!(matches!(
            expand_symbol(&rules, 8, SymbolId(10)),
            Err(Error::UnknownSymbol(10))
        ));
    }

    #[test]
    fn bucket_ordering() {
        let lib = PhraseLibrary::from_parts(
            4,
            vec![],
            vec![
                phrase(&[1, 2], 1, 9),
                phrase(&[1, 2, 3], 2, 5),
                phrase(&[2, 3], 3, 4),
            ],
        )
        .unwrap();
        let b: Vec<Vec<u32>> = lib
            .match_prefix(TokenId(1))
            .iter()
            .map(|p| p.tokens.ids().collect())
            .collect();
        assert_eq!(b, vec![vec![1, 2, 3], vec![1, 2]]);
        assert!(lib.match_prefix(TokenId(0)).is_empty());
        assert!(lib.match_prefix(TokenId(99)).is_empty());
        assert_eq!(lib.match_prefix(TokenId(2)).len(), 1);
    }

    #[test]
    fn equal_length_sorted_by_count() {
        let lib = PhraseLibrary::from_parts(
            4,
            vec![],
            vec![
                phrase(&[0, 1], 1, 2),
                phrase(&[0, 2], 2, 7),
                phrase(&[0, 3], 3, 7),
            ],
        )
        .unwrap();
        let ranks: Vec<u32> = lib
            .match_prefix(TokenId(0))
            .iter()
            .map(|p| p.source_rank)
            .collect();
        assert_eq!(ranks, vec![2, 3, 1]);
    }

    #[test]
    fn rejects_malformed_parts() {
        assert!(PhraseLibrary::from_parts(4, vec![rule(1, 2, 5, 1)], vec![]).is_err());
        assert!(PhraseLibrary::from_parts(4, vec![rule(1, 6, 4, 1)], vec![]).is_err());
        assert!(PhraseLibrary::from_parts(4, vec![], vec![phrase(&[1], 1, 1)]).is_err());
        assert!(PhraseLibrary::from_parts(4, vec![], vec![phrase(&[1, 4], 1, 1)]).is_err());
    }
}
