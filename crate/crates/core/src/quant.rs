//! Asymmetric uniform quantization, channel importance scores and top-K
//! boost selection.
//!
//! A group of values `xs` is mapped to integer codes with
//! `scale = (max - min) / (2^bits - 1)` and `zero_point = min`, rounding
//! half-to-even, and reconstructed as `code * scale + zero_point`. A constant
//! group gets `scale = 0` and all-zero codes so it reconstructs exactly.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::HeadMatrix;

/// Lane width meaning "keep full precision".
pub const PASSTHROUGH_BITS: u8 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    pub bits: u8,
    pub scale: f32,
    pub zero_point: f32,
}

impl QuantParams {
    #[inline]
    pub fn max_code(&self) -> u8 {
        max_code(self.bits)
    }

    #[inline]
    pub fn dequantize(&self, code: u8) -> f32 {
        code as f32 * self.scale + self.zero_point
    }
}

#[inline]
fn max_code(bits: u8) -> u8 {
    ((1u16 << bits) - 1) as u8
}

fn check_bits(bits: u8) -> Result<()> {
    match bits {
        2 | 4 => Ok(()),
        _ => Err(Error::InvalidConfig(format!(
            "quantization width must be 2 or 4 bits, got {bits}"
        ))),
    }
}

/// Quantizes one group. Fails on empty input or when `max - min` overflows.
pub fn quantize_values(xs: &[f32], bits: u8) -> Result<(Vec<u8>, QuantParams)> {
    check_bits(bits)?;
    if xs.is_empty() {
        return Err(Error::Empty("quantization group"));
    }
    if let Some(index) = xs.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let (min, max) = xs
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let levels = max_code(bits);
    if max == min {
        let params = QuantParams {
            bits,
            scale: 0.0,
            zero_point: min,
        };
        return Ok((vec![0; xs.len()], params));
    }
    let scale = (max - min) / levels as f32;
    if !scale.is_finite() {
        return Err(Error::RangeOverflow);
    }
    let codes = xs
        .iter()
        .map(|&x| {
            ((x - min) / scale)
                .round_ties_even()
                .clamp(0.0, levels as f32) as u8
        })
        .collect();
    Ok((
        codes,
        QuantParams {
            bits,
            scale,
            zero_point: min,
        },
    ))
}

pub fn dequantize_values(codes: &[u8], params: &QuantParams) -> Result<Vec<f32>> {
    check_bits(params.bits)?;
    let top = params.max_code();
    codes
        .iter()
        .map(|&code| {
            if code > top {
                Err(Error::CodeOutOfRange {
                    code,
                    bits: params.bits,
                })
            } else {
                Ok(params.dequantize(code))
            }
        })
        .collect()
}

/// Quantize-then-dequantize one lane. `bits == 16` returns the lane unchanged.
pub fn fake_quantize_lane(xs: &[f32], bits: u8) -> Result<Vec<f32>> {
    if bits == PASSTHROUGH_BITS || xs.is_empty() {
        return Ok(xs.to_vec());
    }
    let (codes, params) = quantize_values(xs, bits)?;
    Ok(codes.iter().map(|&c| params.dequantize(c)).collect())
}

/// Per-channel importance `s_i = mean_t |x[t][i]|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScores(pub Vec<f32>);

impl ChannelScores {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }
}

pub fn channel_scores(x: &HeadMatrix) -> Result<ChannelScores> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::Empty(
            "channel scores need at least one token and channel",
        ));
    }
    let mut sums = vec![0.0f64; x.cols()];
    for row in x.iter_rows() {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v.abs() as f64;
        }
    }
    let n = x.rows() as f64;
    Ok(ChannelScores(
        sums.into_iter().map(|s| (s / n) as f32).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heuristic {
    /// Top-K channels by mean absolute value.
    Magnitude,
    /// K channels drawn uniformly without replacement.
    Random { seed: u64 },
}

impl Heuristic {
    /// Same heuristic with its random stream advanced to a distinct substream.
    /// Magnitude is unaffected.
    pub fn derive(self, salt: u64) -> Self {
        match self {
            Heuristic::Magnitude => Heuristic::Magnitude,
            Heuristic::Random { seed } => Heuristic::Random {
                seed: splitmix64(seed ^ splitmix64(salt)),
            },
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Heuristic::Magnitude => f.write_str("magnitude"),
            Heuristic::Random { seed } => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once(':') {
            None if s == "magnitude" => Ok(Heuristic::Magnitude),
            None if s == "random" => Ok(Heuristic::Random { seed: 0 }),
            Some(("random", seed)) => seed
                .trim()
                .parse()
                .map(|seed| Heuristic::Random { seed })
                .map_err(|_| Error::InvalidConfig(format!("bad random seed {seed:?}"))),
            _ => Err(Error::InvalidConfig(format!(
                "unknown heuristic {s:?} (expected magnitude or random[:seed])"
            ))),
        }
    }
}

/// Channels kept at 4 bits, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoostSelection {
    pub boosted: Vec<usize>,
}

impl BoostSelection {
    pub fn d_boost(&self) -> usize {
        self.boosted.len()
    }

    /// 4 for boosted channels, 2 elsewhere.
    pub fn lane_bits(&self, channels: usize) -> Vec<u8> {
        let mut bits = vec![2u8; channels];
        for &c in &self.boosted {
            bits[c] = 4;
        }
        bits
    }
}

/// `round(fraction * channels)` with ties to even.
pub fn boost_count(fraction: f64, channels: usize) -> usize {
    (fraction * channels as f64).round_ties_even() as usize
}

pub fn select_boost(
    scores: &ChannelScores,
    fraction: f64,
    heuristic: Heuristic,
) -> Result<BoostSelection> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!(
            "boost fraction must be in [0, 1], got {fraction}"
        )));
    }
    let d = scores.len();
    let k = boost_count(fraction, d);
    let mut boosted = match heuristic {
        Heuristic::Magnitude => {
            let mut order: Vec<usize> = (0..d).collect();
            // descending score, lower index first on ties (sort is stable)
            order.sort_by(|&a, &b| scores.0[b].total_cmp(&scores.0[a]));
            order.truncate(k);
            order
        }
        Heuristic::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, d, k).into_vec()
        }
    };
    boosted.sort_unstable();
    Ok(BoostSelection { boosted })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Each column (channel) is one group over all tokens.
    PerChannel,
    /// Each row (token) is one group over all channels.
    PerToken,
}

/// Fake-quantizes every lane of `x` along `axis` at its own width from
/// `bits_per_lane` (2, 4, or 16 for pass-through).
pub fn fake_quantize_matrix(
    x: &HeadMatrix,
    axis: Axis,
    bits_per_lane: &[u8],
) -> Result<HeadMatrix> {
    let lanes = match axis {
        Axis::PerChannel => x.cols(),
        Axis::PerToken => x.rows(),
    };
    if bits_per_lane.len() != lanes {
        return Err(Error::Shape(format!(
            "{} lane widths for {lanes} lanes",
            bits_per_lane.len()
        )));
    }
    if let Some(&b) = bits_per_lane
        .iter()
        .find(|&&b| !matches!(b, 2 | 4 | PASSTHROUGH_BITS))
    {
        return Err(Error::InvalidConfig(format!(
            "lane width {b} not in {{2, 4, 16}}"
        )));
    }
    let mut out = x.data().to_vec();
    let cols = x.cols();
    match axis {
        Axis::PerToken => {
            for (r, &bits) in bits_per_lane.iter().enumerate() {
                let lane = &mut out[r * cols..(r + 1) * cols];
                let q = fake_quantize_lane(lane, bits)?;
                lane.copy_from_slice(&q);
            }
        }
        Axis::PerChannel => {
            for (c, &bits) in bits_per_lane.iter().enumerate() {
                let q = fake_quantize_lane(&x.column(c), bits)?;
                for (r, v) in q.into_iter().enumerate() {
                    out[r * cols + c] = v;
                }
            }
        }
    }
    HeadMatrix::new(x.rows(), cols, out)
}
