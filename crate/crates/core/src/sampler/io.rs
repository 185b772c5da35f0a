//! Field serialization.
//!
//! CSV: header `t,x,value,replicate,seed`, one row per site in row-major
//! (time, space) order.
//!
//! Binary: a 32-byte little-endian header followed by the values as f64 LE
//! in row-major order.
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 8    | magic `SFHE1\0\0\0`           |
//! | 8      | 4    | nt (u32)                      |
//! | 12     | 4    | nx (u32)                      |
//! | 16     | 8    | seed (u64)                    |
//! | 24     | 4    | method (0 cholesky, 1 spectral) |
//! | 28     | 4    | replicate (u32)               |

use super::FieldSample;
use crate::error::{Error, Result};
use std::io::{Read, Write};

pub const MAGIC: [u8; 8] = *b"SFHE1\0\0\0";
pub const HEADER_LEN: usize = 32;

pub fn write_csv_header<W: Write>(w: &mut csv::Writer<W>) -> Result<()> {
    w.write_record(["t", "x", "value", "replicate", "seed"])?;
    Ok(())
}

/// Appends the rows of one sample; the header is written separately so that
/// several replicates can share a file.
pub fn write_csv_rows<W: Write>(w: &mut csv::Writer<W>, f: &FieldSample) -> Result<()> {
    for (k, v) in f.values.iter().enumerate() {
        let (t, x) = f.coordinate(k);
        w.write_record([
            t.to_string(),
            x.to_string(),
            v.to_string(),
            f.replicate.to_string(),
            f.seed.to_string(),
        ])?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(mut w: W, f: &FieldSample) -> Result<()> {
    let (nt, nx) = f.shape();
    let dim = |n: usize| {
        u32::try_from(n).map_err(|_| Error::InvalidInput(format!("dimension {n} exceeds u32")))
    };
    let mut head = [0u8; HEADER_LEN];
    head[..8].copy_from_slice(&MAGIC);
    head[8..12].copy_from_slice(&dim(nt)?.to_le_bytes());
    head[12..16].copy_from_slice(&dim(nx)?.to_le_bytes());
    head[16..24].copy_from_slice(&f.seed.to_le_bytes());
    head[24..28].copy_from_slice(&f.method.code().to_le_bytes());
    head[28..32].copy_from_slice(&f.replicate.to_le_bytes());
    w.write_all(&head)?;
    let mut body = Vec::with_capacity(8 * f.values.len());
    for v in &f.values {
        body.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

/// Parsed binary header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryHeader {
    pub nt: u32,
    pub nx: u32,
    pub seed: u64,
    pub method: u32,
    pub replicate: u32,
}

pub fn read_binary<R: Read>(mut r: R) -> Result<(BinaryHeader, Vec<f64>)> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head)?;
    if head[..8] != MAGIC {
        return Err(Error::InvalidInput("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let h = BinaryHeader {
        nt: u32_at(8),
        nx: u32_at(12),
        seed: u64::from_le_bytes(head[16..24].try_into().unwrap()),
        method: u32_at(24),
        replicate: u32_at(28),
    };
    let n = h.nt as usize * h.nx as usize;
    let mut body = vec![0u8; 8 * n];
    r.read_exact(&mut body)?;
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((h, values))
}
