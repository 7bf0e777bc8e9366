//! Title vectors keyed by asin, read from `EMB1` binaries or TSV.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::FeatureError;

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";

#[derive(Debug, Clone, PartialEq)]
pub struct TitleEmbeddings {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl TitleEmbeddings {
    /// Empty table; every lookup misses and falls back to zeros.
    pub fn new(dim: usize) -> Self {
        TitleEmbeddings {
            dim,
            vectors: HashMap::new(),
        }
    }

    /// # Panics
    /// If `v.len() != dim`.
    pub fn insert(&mut self, asin: &str, v: Vec<f32>) {
        assert_eq!(v.len(), self.dim, "embedding width");
        self.vectors.insert(asin.to_string(), v);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, asin: &str) -> Option<&[f32]> {
        self.vectors.get(asin).map(Vec::as_slice)
    }
}

fn corrupt(m: impl Into<String>) -> FeatureError {
    FeatureError::CorruptFile(m.into())
}

/// Writes entries sorted by asin so output bytes are deterministic.
pub fn write_emb1<W: Write>(mut w: W, emb: &TitleEmbeddings) -> Result<(), FeatureError> {
    w.write_all(EMB_MAGIC)?;
    w.write_all(&(emb.dim as u32).to_le_bytes())?;
    w.write_all(&(emb.vectors.len() as u64).to_le_bytes())?;
    let mut keys: Vec<&String> = emb.vectors.keys().collect();
    keys.sort();
    for k in keys {
        let len = u16::try_from(k.len()).map_err(|_| corrupt(format!("asin too long: {k}")))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(k.as_bytes())?;
        for x in &emb.vectors[k] {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn take<R: Read, const N: usize>(r: &mut R, what: &str) -> Result<[u8; N], FeatureError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|_| corrupt(format!("truncated {what}")))?;
    Ok(b)
}

/// Reads an `EMB1` stream, rejecting a declared width other than `expected_dim`.
pub fn read_emb1<R: Read>(mut r: R, expected_dim: usize) -> Result<TitleEmbeddings, FeatureError> {
    let magic: [u8; 4] = take(&mut r, "magic")?;
    if &magic != EMB_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let dim = u32::from_le_bytes(take(&mut r, "dim")?) as usize;
    if dim != expected_dim {
        return Err(FeatureError::DimensionMismatch {
            expected: expected_dim,
            found: dim,
        });
    }
    let count = u64::from_le_bytes(take(&mut r, "count")?);
    let mut out = TitleEmbeddings::new(dim);
    let mut buf = vec![0u8; dim * 4];
    for _ in 0..count {
        let len = u16::from_le_bytes(take(&mut r, "asin length")?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)
            .map_err(|_| corrupt("truncated asin"))?;
        let name = String::from_utf8(name).map_err(|_| corrupt("asin is not UTF-8"))?;
        r.read_exact(&mut buf)
            .map_err(|_| corrupt("truncated vector"))?;
        let v = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        out.vectors.insert(name, v);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(corrupt("trailing bytes"));
    }
    Ok(out)
}

/// Reads `asin<TAB>v1,...,vd` lines.
pub fn read_emb_tsv<R: Read>(r: R, expected_dim: usize) -> Result<TitleEmbeddings, FeatureError> {
    let mut out = TitleEmbeddings::new(expected_dim);
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (asin, values) = line
            .split_once('\t')
            .ok_or_else(|| corrupt(format!("line {}: missing tab", i + 1)))?;
        let v: Vec<f32> = values
            .split(',')
            .map(|s| s.trim().parse::<f32>())
            .collect::<Result<_, _>>()
            .map_err(|e| corrupt(format!("line {}: {e}", i + 1)))?;
        if v.len() != expected_dim {
            return Err(FeatureError::DimensionMismatch {
                expected: expected_dim,
                found: v.len(),
            });
        }
        out.vectors.insert(asin.to_string(), v);
    }
    Ok(out)
}

/// Dispatches on the leading magic bytes.
pub fn read_embeddings(path: &Path, expected_dim: usize) -> Result<TitleEmbeddings, FeatureError> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(EMB_MAGIC) {
        read_emb1(bytes.as_slice(), expected_dim)
    } else {
        read_emb_tsv(bytes.as_slice(), expected_dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three(dim: usize) -> TitleEmbeddings {
        let mut e = TitleEmbeddings::new(dim);
        for (i, a) in ["B1", "A2", "C3"].iter().enumerate() {
            e.insert(a, (0..dim).map(|k| (i + k) as f32 / 7.0).collect());
        }
        e
    }

    #[test]
    fn binary_round_trip() {
        let e = three(384);
        let mut buf = Vec::new();
        write_emb1(&mut buf, &e).unwrap();
        let back = read_emb1(buf.as_slice(), 384).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back, e);
    }

    #[test]
    fn dim_mismatch_and_corruption() {
        let e = three(200);
        let mut buf = Vec::new();
        write_emb1(&mut buf, &e).unwrap();
        assert!(matches!(
            read_emb1(buf.as_slice(), 384),
            Err(FeatureError::DimensionMismatch {
                expected: 384,
                found: 200
            })
        ));
        assert!(matches!(
            read_emb1(&buf[..buf.len() - 1], 200),
            Err(FeatureError::CorruptFile(_))
        ));
        buf[0] = b'X';
        assert!(read_emb1(buf.as_slice(), 200).is_err());
    }

    #[test]
    fn tsv_format() {
        let e = read_emb_tsv("A\t1,2,3\r\nB\t0.5, -1, 2e-3\n".as_bytes(), 3).unwrap();
        assert_eq!(e.get("B").unwrap(), &[0.5, -1.0, 0.002]);
        assert!(read_emb_tsv("A\t1,2\n".as_bytes(), 3).is_err());
        assert!(read_emb_tsv("A 1,2\n".as_bytes(), 2).is_err());
    }
}
