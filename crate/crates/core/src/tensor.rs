//! Dense per-head tensors, the KTY1 binary format and a synthetic KV generator.
//!
//! KTY1 layout (little-endian, no padding, no checksum):
//!
//! | offset | size          | field                         |
//! |--------|---------------|-------------------------------|
//! | 0      | 4             | magic `KTY1`                  |
//! | 4      | 1             | dtype code (`0x00` = f32)     |
//! | 5      | 1             | rank (always 2)               |
//! | 6      | 16            | rows, cols as `u64`           |
//! | 22     | rows·cols·4   | row-major `f32` payload       |

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: [u8; 4] = *b"KTY1";
pub const DTYPE_F32: u8 = 0x00;
pub const TENSOR_HEADER_LEN: usize = 4 + 1 + 1 + 2 * 8;

/// Identifier of the generator used by [`generate_synthetic`], echoed in reports.
pub const PRNG_ID: &str = "chacha8";

/// A dense row-major `f32` matrix holding one head's activations
/// (tokens × channels). Every element is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl HeadMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Shape(format!("{rows}x{cols} overflows")))?;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {expected} elements, got {}",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Stacks equal-length rows. An empty iterator yields a `0 × cols` matrix.
    pub fn from_rows<'a, I>(cols: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f32]>,
    {
        let mut data = Vec::new();
        let mut n = 0;
        for row in rows {
            if row.len() != cols {
                return Err(Error::Shape(format!(
                    "row {n} has {} elements, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
            n += 1;
        }
        Self::new(n, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        // chunks_exact(0) panics, so zero-width matrices yield `rows` empty slices by hand
        let cols = self.cols;
        (0..self.rows).map(move |r| &self.data[r * cols..(r + 1) * cols])
    }

    pub fn column(&self, col: usize) -> Vec<f32> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            data.extend((0..self.rows).map(|r| self.get(r, c)));
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> Self {
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(TENSOR_HEADER_LEN + self.data.len() * 4);
        out.extend_from_slice(&TENSOR_MAGIC);
        out.push(DTYPE_F32);
        out.push(2);
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Truncated {
                expected: TENSOR_HEADER_LEN,
                found: bytes.len(),
            });
        }
        let found: [u8; 4] = bytes[..4].try_into().unwrap();
        if found != TENSOR_MAGIC {
            return Err(Error::BadMagic {
                expected: TENSOR_MAGIC,
                found,
            });
        }
        if bytes.len() < TENSOR_HEADER_LEN {
            return Err(Error::Truncated {
                expected: TENSOR_HEADER_LEN,
                found: bytes.len(),
            });
        }
        if bytes[4] != DTYPE_F32 {
            return Err(Error::UnknownDtype(bytes[4]));
        }
        if bytes[5] != 2 {
            return Err(Error::BadRank(bytes[5]));
        }
        let rows = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
        let cols = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
        let payload_len = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| usize::try_from(n).ok())
            .ok_or_else(|| Error::Shape(format!("{rows}x{cols} does not fit in memory")))?;
        let payload = &bytes[TENSOR_HEADER_LEN..];
        if payload.len() < payload_len {
            return Err(Error::Truncated {
                expected: TENSOR_HEADER_LEN + payload_len,
                found: bytes.len(),
            });
        }
        if payload.len() > payload_len {
            return Err(Error::Shape(format!(
                "{} trailing bytes after payload",
                payload.len() - payload_len
            )));
        }
        let data = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Self::new(rows as usize, cols as usize, data)
    }
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<HeadMatrix> {
    let bytes = fs::read(path)?;
    HeadMatrix::from_bytes(&bytes)
}

pub fn write_tensor(m: &HeadMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, m.to_bytes())?;
    Ok(())
}

/// Parameters for a synthetic key tensor with a few high-magnitude channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub tokens: usize,
    pub channels: usize,
    pub outlier_channels: Vec<usize>,
    pub outlier_gain: f32,
    pub base_std: f32,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.channels];
        for &c in &self.outlier_channels {
            if c >= self.channels {
                return Err(Error::InvalidConfig(format!(
                    "outlier channel {c} out of range for {} channels",
                    self.channels
                )));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::InvalidConfig(format!(
                    "outlier channel {c} listed twice"
                )));
            }
        }
        // negated comparisons also reject NaN
        if !(self.outlier_gain >= 1.0) || !self.outlier_gain.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "outlier_gain must be >= 1, got {}",
                self.outlier_gain
            )));
        }
        if !(self.base_std > 0.0) || !self.base_std.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "base_std must be > 0, got {}",
                self.base_std
            )));
        }
        Ok(())
    }
}

/// Draws a `tokens × channels` matrix of i.i.d. N(0, base_std²) samples, with
/// outlier channels scaled by `outlier_gain`. Samples are generated row-major
/// from a ChaCha8 stream seeded with `spec.seed`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<HeadMatrix> {
    spec.validate()?;
    let mut gains = vec![1.0f32; spec.channels];
    for &c in &spec.outlier_channels {
        gains[c] = spec.outlier_gain;
    }
    let normal =
        Normal::new(0.0f32, spec.base_std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = Vec::with_capacity(spec.tokens * spec.channels);
    for _ in 0..spec.tokens {
        for gain in &gains {
            data.push(normal.sample(&mut rng) * gain);
        }
    }
    HeadMatrix::new(spec.tokens, spec.channels, data)
}
