//! `CKPT1` checkpoints: parameters as `f32`, optionally followed by Adam state.
//!
//! Layout (little-endian): magic `CKPT1`, u32 param count, then per param
//! u32 name length, name bytes, u32 rows, u32 cols, rows*cols f32. Footer:
//! u8 flag; when 1, u64 step count then the first and second moments of
//! every parameter in order, as f32.

use std::io::{Read, Write};

use super::matrix::Matrix;
use super::optim::Adam;
use super::params::ParamStore;
use super::AutodiffError;

pub const CKPT_MAGIC: &[u8; 5] = b"CKPT1";

fn write_f32s<W: Write>(w: &mut W, m: &Matrix) -> std::io::Result<()> {
    for &x in m.as_slice() {
        w.write_all(&(x as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    params: &ParamStore,
    opt: Option<&Adam>,
) -> Result<(), AutodiffError> {
    w.write_all(CKPT_MAGIC)?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for p in params.iter() {
        w.write_all(&(p.name.len() as u32).to_le_bytes())?;
        w.write_all(p.name.as_bytes())?;
        w.write_all(&(p.value.rows() as u32).to_le_bytes())?;
        w.write_all(&(p.value.cols() as u32).to_le_bytes())?;
        write_f32s(&mut w, &p.value)?;
    }
    match opt {
        None => w.write_all(&[0])?,
        Some(a) => {
            w.write_all(&[1])?;
            w.write_all(&a.t.to_le_bytes())?;
            for m in a.m.iter().chain(&a.v) {
                write_f32s(&mut w, m)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> AutodiffError {
    AutodiffError::CorruptCheckpoint(msg.into())
}

fn read_exact<R: Read, const N: usize>(r: &mut R, what: &str) -> Result<[u8; N], AutodiffError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|_| corrupt(format!("truncated at {what}")))?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32, AutodiffError> {
    Ok(u32::from_le_bytes(read_exact(r, what)?))
}

fn read_matrix<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<Matrix, AutodiffError> {
    let mut buf = vec![0u8; rows * cols * 4];
    r.read_exact(&mut buf)
        .map_err(|_| corrupt("truncated tensor data"))?;
    let data = buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(Matrix::from_vec(rows, cols, data))
}

/// Reads a checkpoint. Adam hyperparameters other than the moments and
/// step count take their defaults.
pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ParamStore, Option<Adam>), AutodiffError> {
    let magic: [u8; 5] = read_exact(&mut r, "magic")?;
    if &magic != CKPT_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let n = read_u32(&mut r, "param count")? as usize;
    let mut store = ParamStore::new();
    for _ in 0..n {
        let len = read_u32(&mut r, "name length")? as usize;
        if len > 4096 {
            return Err(corrupt("implausible name length"));
        }
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)
            .map_err(|_| corrupt("truncated name"))?;
        let name = String::from_utf8(name).map_err(|_| corrupt("name is not UTF-8"))?;
        let rows = read_u32(&mut r, "rows")? as usize;
        let cols = read_u32(&mut r, "cols")? as usize;
        let m = read_matrix(&mut r, rows, cols)?;
        if store.find(&name).is_some() {
            return Err(corrupt(format!("duplicate parameter {name}")));
        }
        store.add(&name, m);
    }
    let [flag] = read_exact::<_, 1>(&mut r, "optimizer flag")?;
    let opt = match flag {
        0 => None,
        1 => {
            let t = u64::from_le_bytes(read_exact(&mut r, "step count")?);
            let mut adam = Adam::new(&store, 0.0);
            adam.t = t;
            let shapes: Vec<_> = store.iter().map(|p| p.value.shape()).collect();
            for (i, &(rows, cols)) in shapes.iter().enumerate() {
                adam.m[i] = read_matrix(&mut r, rows, cols)?;
            }
            for (i, &(rows, cols)) in shapes.iter().enumerate() {
                adam.v[i] = read_matrix(&mut r, rows, cols)?;
            }
            Some(adam)
        }
        f => return Err(corrupt(format!("unknown optimizer flag {f}"))),
    };
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(corrupt("trailing bytes"));
    }
    Ok((store, opt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_optimizer() {
        let mut s = ParamStore::new();
        s.add("w", Matrix::from_vec(2, 2, vec![0.5, -1.0, 2.0, 0.25]));
        s.add("b", Matrix::from_vec(1, 2, vec![0.0, 1.5]));
        let mut adam = Adam::new(&s, 0.0);
        adam.t = 7;
        adam.m[0].set(0, 1, 0.125);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &s, Some(&adam)).unwrap();
        assert_eq!(&buf[..5], b"CKPT1");
        let (s2, a2) = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(s2.len(), 2);
        assert_eq!(
            s2.value(s2.find("w").unwrap()),
            s.value(s.find("w").unwrap())
        );
        let a2 = a2.unwrap();
        assert_eq!(a2.t, 7);
        assert_eq!(a2.m[0].get(0, 1), 0.125);
    }

    #[test]
    fn truncation_and_magic_detected() {
        let mut s = ParamStore::new();
        s.add("w", Matrix::filled(3, 3, 1.0));
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &s, None).unwrap();
        assert!(read_checkpoint(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_checkpoint(bad.as_slice()),
            Err(AutodiffError::CorruptCheckpoint(_))
        ));
        buf.push(0);
        assert!(read_checkpoint(buf.as_slice()).is_err());
    }
}
