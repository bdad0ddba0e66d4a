//! Binary array files: a 16-byte header followed by little-endian IEEE-754
//! elements in row-major order.
//!
//! | bytes | content |
//! |-------|---------|
//! | 0..4  | magic, `NAD8` for f64 or `NAD4` for f32 |
//! | 4..8  | rank as u32 LE, 1 or 2 |
//! | 8..12 | first dimension as u32 LE |
//! | 12..16| second dimension as u32 LE (1 for vectors) |

use std::io::{Read, Write};

use super::dense::Matrix;
use crate::error::{Error, Result};
use crate::real::Real;

pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum Array<R> {
    Vector(Vec<R>),
    Matrix(Matrix<R>),
}

fn dim(n: usize) -> Result<[u8; 4]> {
    u32::try_from(n)
        .map(u32::to_le_bytes)
        .map_err(|_| Error::Format(format!("dimension {n} exceeds u32")))
}

fn write_array<R: Real, W: Write>(mut w: W, rank: u32, d0: usize, d1: usize, data: &[R]) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + data.len() * R::BYTES);
    buf.extend_from_slice(&R::MAGIC);
    buf.extend_from_slice(&rank.to_le_bytes());
    buf.extend_from_slice(&dim(d0)?);
    buf.extend_from_slice(&dim(d1)?);
    for &x in data {
        x.write_le(&mut buf);
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_vector<R: Real, W: Write>(w: W, v: &[R]) -> Result<()> {
    write_array(w, 1, v.len(), 1, v)
}

pub fn write_matrix<R: Real, W: Write>(w: W, m: &Matrix<R>) -> Result<()> {
    write_array(w, 2, m.rows(), m.cols(), m.data())
}

pub fn read_array<R: Real, Rd: Read>(mut r: Rd) -> Result<Array<R>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if header[..4] != R::MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            &header[..4],
            R::MAGIC
        )));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
    let (rank, d0, d1) = (word(4), word(8), word(12));
    let count = match rank {
        1 if d1 == 1 => d0,
        2 => d0
            .checked_mul(d1)
            .ok_or_else(|| Error::Format("dimension product overflows".into()))?,
        _ => return Err(Error::Format(format!("unsupported rank {rank} with dims {d0}x{d1}"))),
    };
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != count * R::BYTES {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            count * R::BYTES,
            body.len()
        )));
    }
    let data: Vec<R> = body.chunks_exact(R::BYTES).map(R::read_le).collect();
    Ok(match rank {
        1 => Array::Vector(data),
        _ => Array::Matrix(Matrix::new(d0, d1, data)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn vector_roundtrip(v in proptest::collection::vec(any::<f64>(), 0..40)) {
            let mut buf = Vec::new();
            write_vector(&mut buf, &v).unwrap();
            prop_assert_eq!(buf.len(), HEADER_LEN + 8 * v.len());
            match read_array::<f64, _>(&buf[..]).unwrap() {
                Array::Vector(back) => {
                    prop_assert_eq!(back.len(), v.len());
                    for (a, b) in back.iter().zip(&v) {
                        prop_assert_eq!(a.to_bits(), b.to_bits());
                    }
                }
                other => prop_assert!(false, "wrong kind {:?}", other),
            }
        }

        #[test]
        fn matrix_roundtrip_f32(r in 0usize..6, c in 0usize..6, seed in any::<u32>()) {
            let m = Matrix::from_fn(r, c, |i, j| (seed as f32) * 0.5 + (i * 7 + j) as f32);
            let mut buf = Vec::new();
            write_matrix(&mut buf, &m).unwrap();
            prop_assert_eq!(read_array::<f32, _>(&buf[..]).unwrap(), Array::Matrix(m));
        }
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_vector(&mut buf, &[1.0f64, -2.0]).unwrap();
        assert_eq!(&buf[..4], b"NAD8");
        assert_eq!(&buf[4..16], &[1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&buf[16..24], &1.0f64.to_le_bytes());
    }

    #[test]
    fn precision_mismatch_is_rejected() {
        let mut buf = Vec::new();
        write_vector(&mut buf, &[1.0f64]).unwrap();
        assert!(matches!(read_array::<f32, _>(&buf[..]), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut buf = Vec::new();
        write_vector(&mut buf, &[1.0f64, 2.0]).unwrap();
        buf.pop();
        assert!(matches!(read_array::<f64, _>(&buf[..]), Err(Error::Format(_))));
    }
}
