//! Binary model files.
//!
//! Layout (little endian): magic `PSDM`, `u16` format version, `u32` order,
//! `u32` vocabulary size, then every row as `V` consecutive `f64`s in row
//! order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::MarkovModel;
use crate::dist::CategoricalDistribution;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"PSDM";
pub const MODEL_FORMAT_VERSION: u16 = 1;

impl MarkovModel {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.order() as u32).to_le_bytes())?;
        w.write_all(&(self.rows()[0].vocab_size() as u32).to_le_bytes())?;
        for row in self.rows() {
            for p in row.probs() {
                w.write_all(&p.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Format(format!("bad model magic {magic:?}")));
        }
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        let version = u16::from_le_bytes(b2);
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let order = read_u32(&mut r)? as usize;
        let vocab = read_u32(&mut r)? as usize;
        let n = MarkovModel::row_count(order, vocab)?;
        let mut rows = Vec::with_capacity(n);
        let mut buf = vec![0u8; vocab * 8];
        for _ in 0..n {
            r.read_exact(&mut buf)?;
            let probs = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            rows.push(CategoricalDistribution::from_probs(probs)?);
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after model table".into()));
        }
        MarkovModel::new(order, vocab, rows)
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

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::random_markov;
    use crate::rng::seeded;

    #[test]
    fn round_trip() {
        let m = random_markov(2, 5, 0.3, &mut seeded(8)).unwrap();
        let mut bytes = Vec::new();
        m.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"PSDM");
        assert_eq!(bytes.len(), 4 + 2 + 4 + 4 + 31 * 5 * 8);
        let back = MarkovModel::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_unknown_version_and_garbage() {
        let m = random_markov(1, 3, 1.0, &mut seeded(8)).unwrap();
        let mut bytes = Vec::new();
        m.write_to(&mut bytes).unwrap();
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(
            MarkovModel::read_from(v2.as_slice()),
            Err(Error::UnsupportedVersion(2))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            MarkovModel::read_from(bad.as_slice()),
            Err(Error::Format(_))
        ));
        let truncated = &bytes[..bytes.len() - 3];
        assert!(MarkovModel::read_from(truncated).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(MarkovModel::read_from(extra.as_slice()).is_err());
    }
}
