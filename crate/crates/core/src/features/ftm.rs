//! `FTM1` feature matrices: magic, u64 rows, u32 cols, row-major f32.

use std::io::{Read, Write};

use super::FeatureError;
use crate::autodiff::Matrix;

pub const FTM_MAGIC: &[u8; 4] = b"FTM1";

pub fn write_ftm<W: Write>(mut w: W, m: &Matrix) -> Result<(), FeatureError> {
    w.write_all(FTM_MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u32).to_le_bytes())?;
    for &x in m.as_slice() {
        w.write_all(&(x as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ftm<R: Read>(mut r: R) -> Result<Matrix, FeatureError> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)
        .map_err(|_| FeatureError::CorruptFile("truncated header".into()))?;
    if &head[..4] != FTM_MAGIC {
        return Err(FeatureError::CorruptFile("bad magic".into()));
    }
    let rows = u64::from_le_bytes(head[4..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(head[12..16].try_into().unwrap()) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != rows * cols * 4 {
        return Err(FeatureError::CorruptFile(format!(
            "expected {} data bytes, found {}",
            rows * cols * 4,
            body.len()
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(Matrix::from_vec(rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_f32_exact() {
        let m = Matrix::from_vec(2, 3, vec![0.5, -1.25, 3.0, 1e-3, 7.0, 0.0]);
        let mut buf = Vec::new();
        write_ftm(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 16 + 24);
        let back = read_ftm(buf.as_slice()).unwrap();
        assert_eq!(back.shape(), (2, 3));
        assert!(back.max_abs_diff(&m) < 1e-7);
        assert!(read_ftm(&buf[..buf.len() - 2]).is_err());
    }
}
