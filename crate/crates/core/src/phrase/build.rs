use std::collections::{BTreeMap, HashMap, HashSet};

use super::{MergeRule, Phrase, PhraseLibrary, SymbolId};
use crate::error::{Error, Result};
use crate::token::{TokenId, TokenSequence};

pub const DEFAULT_MAX_PHRASE_LEN: usize = 8;

type Pair = (u32, u32);

/// Replaceable occurrences of every adjacent pair in one sequence.
///
/// Pairs of distinct symbols cannot overlap. A run of `r` identical symbols
/// holds `⌊r/2⌋` replaceable self-pairs, which is what a left-to-right merge
/// rewrites, so a merge shrinks the corpus by exactly the counted amount.
fn merge_counts(seq: &[u32], out: &mut HashMap<Pair, u64>) {
    let mut prev_self = false;
    for w in seq.windows(2) {
        if w[0] == w[1] {
            if prev_self {
                prev_self = false;
                continue;
            }
            prev_self = true;
        } else {
            prev_self = false;
        }
        *out.entry((w[0], w[1])).or_insert(0) += 1;
    }
}

/// Left-to-right, non-overlapping replacement of `pair` by `merged`.
fn apply_merge(seq: &mut Vec<u32>, pair: Pair, merged: u32) -> u64 {
    let mut replaced = 0;
    let mut write = 0;
    let mut read = 0;
    while read < seq.len() {
        if read + 1 < seq.len() && seq[read] == pair.0 && seq[read + 1] == pair.1 {
            seq[write] = merged;
            read += 2;
            replaced += 1;
        } else {
            seq[write] = seq[read];
            read += 1;
        }
        write += 1;
    }
    seq.truncate(write);
    replaced
}

/// Learns up to `merges` pair merges over `corpus` and indexes the phrases
/// they expand to.
///
/// Each iteration merges the pair with the most replaceable occurrences
/// across all sequences; ties go to the lexicographically smaller
/// `(left, right)`. Pairs never straddle two sequences. Merging stops early
/// once no pair occurs at least twice. Phrases longer than `max_phrase_len`
/// are dropped from the index but their rules are kept.
pub fn build_library(
    corpus: &[TokenSequence],
    vocab: usize,
    merges: usize,
    max_phrase_len: usize,
) -> Result<PhraseLibrary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if merges == 0 {
        return Err(Error::InvalidArgument(
            "merge count must be at least 1".into(),
        ));
    }
    if max_phrase_len < 2 {
        return Err(Error::InvalidArgument(
            "max phrase length must be at least 2".into(),
        ));
    }
    for seq in corpus {
        seq.validate(vocab)?;
    }
    let mut words: Vec<Vec<u32>> = corpus.iter().map(|s| s.ids().collect()).collect();

    let mut counts: HashMap<Pair, u64> = HashMap::new();
    let mut locations: HashMap<Pair, HashSet<usize>> = HashMap::new();
    let mut scratch = HashMap::new();
    for (i, w) in words.iter().enumerate() {
        scratch.clear();
        merge_counts(w, &mut scratch);
        for (&pair, &c) in &scratch {
            *counts.entry(pair).or_insert(0) += c;
            locations.entry(pair).or_default().insert(i);
        }
    }

    let mut rules = Vec::new();
    let mut rule_counts = Vec::new();
    for iteration in 0..merges {
        let best = counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then(pb.cmp(pa)));
        let Some((&pair, &count)) = best else { break };
        if count < 2 {
            break;
        }
        let merged = u32::try_from(vocab + iteration)
            .map_err(|_| Error::InvalidArgument("symbol space exhausted".into()))?;

        let mut touched: Vec<usize> = locations
            .get(&pair)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        touched.sort_unstable();
        let mut replaced_total = 0;
        for i in touched {
            let w = &mut words[i];
            if !w.windows(2).any(|p| (p[0], p[1]) == pair) {
                continue;
            }
            scratch.clear();
            merge_counts(w, &mut scratch);
            for (p, c) in &scratch {
                *counts.get_mut(p).expect("counted pair") -= c;
            }
            replaced_total += apply_merge(w, pair, merged);
            scratch.clear();
            merge_counts(w, &mut scratch);
            for (&p, &c) in &scratch {
                *counts.entry(p).or_insert(0) += c;
                locations.entry(p).or_default().insert(i);
            }
        }
        debug_assert_eq!(replaced_total, count);
        counts.retain(|_, c| *c > 0);
        rules.push(MergeRule {
            left: SymbolId(pair.0),
            right: SymbolId(pair.1),
            result: SymbolId(merged),
            rank: iteration as u32 + 1,
        });
        rule_counts.push(count);
    }

    // Expansions in rank order: every rule only refers to earlier symbols.
    let mut expansions: Vec<Vec<u32>> = Vec::with_capacity(rules.len());
    let expand = |s: u32, exp: &Vec<Vec<u32>>| -> Vec<u32> {
        if (s as usize) < vocab {
            vec![s]
        } else {
            exp[s as usize - vocab].clone()
        }
    };
    for r in &rules {
        let mut e = expand(r.left.0, &expansions);
        e.extend(expand(r.right.0, &expansions));
        expansions.push(e);
    }

    // Distinct merge trees can expand to the same tokens; keep the earliest
    // rule and pool the counts.
    let mut seen: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut phrases: Vec<Phrase> = Vec::new();
    for (r, (tokens, &count)) in rules.iter().zip(expansions.into_iter().zip(&rule_counts)) {
        if tokens.len() > max_phrase_len {
            continue;
        }
        if let Some(&at) = seen.get(&tokens) {
            phrases[at].corpus_count += count;
            continue;
        }
        seen.insert(tokens.clone(), phrases.len());
        phrases.push(Phrase {
            tokens: TokenSequence::from_ids(tokens),
            source_rank: r.rank,
            corpus_count: count,
        });
    }

    PhraseLibrary::from_parts(vocab, rules, phrases)
}

/// Adjacent-pair counts over the raw corpus, most frequent first (ties by
/// smaller pair), truncated to `top_n`.
pub fn cooccurrence_stats(
    corpus: &[TokenSequence],
    top_n: usize,
) -> Result<Vec<((TokenId, TokenId), u64)>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut counts: HashMap<(TokenId, TokenId), u64> = HashMap::new();
    for seq in corpus {
        for w in seq.windows(2) {
            *counts.entry((w[0], w[1])).or_insert(0) += 1;
        }
    }
    let mut out: Vec<_> = counts.into_iter().collect();
    out.sort_by(|(pa, ca), (pb, cb)| cb.cmp(ca).then(pa.cmp(pb)));
    out.truncate(top_n);
    Ok(out)
}
