//! Library files and the plain-text corpus format.
//!
//! Library layout (little endian): magic `PSDL`, `u16` version, `u32` V,
//! `u32` merge count, then `(left, right, result)` as three `u32`s per rule,
//! a `u32` phrase count, and per phrase a `u16` length, the tokens as
//! `u32`s, a `u32` source rank and a `u64` corpus count. Phrases are written
//! in index order, so equal libraries serialize to equal bytes.
//!
//! Corpus files hold one sequence per line as whitespace-separated decimal
//! ids. Blank lines and lines starting with `#` are skipped.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{MergeRule, Phrase, PhraseLibrary, SymbolId};
use crate::error::{Error, Result};
use crate::models::io_util::read_u32;
use crate::token::{TokenId, TokenSequence};

pub const LIBRARY_MAGIC: &[u8; 4] = b"PSDL";
pub const LIBRARY_FORMAT_VERSION: u16 = 1;

impl PhraseLibrary {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(LIBRARY_MAGIC)?;
        w.write_all(&LIBRARY_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.vocab_size() as u32).to_le_bytes())?;
        w.write_all(&(self.rules().len() as u32).to_le_bytes())?;
        for r in self.rules() {
            w.write_all(&r.left.0.to_le_bytes())?;
            w.write_all(&r.right.0.to_le_bytes())?;
            w.write_all(&r.result.0.to_le_bytes())?;
        }
        w.write_all(&(self.phrases().len() as u32).to_le_bytes())?;
        for p in self.phrases() {
            let len = u16::try_from(p.len())
                .map_err(|_| Error::Format(format!("phrase of length {} too long", p.len())))?;
            w.write_all(&len.to_le_bytes())?;
            for t in p.tokens.ids() {
                w.write_all(&t.to_le_bytes())?;
            }
            w.write_all(&p.source_rank.to_le_bytes())?;
            w.write_all(&p.corpus_count.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != LIBRARY_MAGIC {
            return Err(Error::Format(format!("bad library magic {magic:?}")));
        }
        let version = read_u16(&mut r)?;
        if version != LIBRARY_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let vocab = read_u32(&mut r)? as usize;
        let merges = read_u32(&mut r)?;
        let mut rules = Vec::with_capacity(merges.min(1 << 20) as usize);
        for rank in 1..=merges {
            let left = SymbolId(read_u32(&mut r)?);
            let right = SymbolId(read_u32(&mut r)?);
            let result = SymbolId(read_u32(&mut r)?);
            rules.push(MergeRule {
                left,
                right,
                result,
                rank,
            });
        }
        let count = read_u32(&mut r)?;
        let mut phrases = Vec::with_capacity(count.min(1 << 20) as usize);
        for _ in 0..count {
            let len = read_u16(&mut r)? as usize;
            let mut tokens = TokenSequence::with_capacity(len);
            for _ in 0..len {
                tokens.push(TokenId(read_u32(&mut r)?));
            }
            let source_rank = read_u32(&mut r)?;
            let corpus_count = read_u64(&mut r)?;
            phrases.push(Phrase {
                tokens,
                source_rank,
                corpus_count,
            });
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after phrase section".into()));
        }
        PhraseLibrary::from_parts(vocab, rules, phrases)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_corpus<R: BufRead>(r: R) -> Result<Vec<TokenSequence>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let seq = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u32>().map(TokenId).map_err(|e| {
                    Error::Format(format!("line {}: bad token {tok:?}: {e}", lineno + 1))
                })
            })
            .collect::<Result<TokenSequence>>()?;
        out.push(seq);
    }
    Ok(out)
}

pub fn write_corpus<W: Write>(mut w: W, corpus: &[TokenSequence]) -> Result<()> {
    for seq in corpus {
        writeln!(w, "{seq}")?;
    }
    Ok(())
}
