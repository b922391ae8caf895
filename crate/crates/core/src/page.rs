//! Packed key and value pages.
//!
//! A key page holds `G` tokens of one head, quantized per channel. Boosted
//! channels carry 4-bit codes that are split into two 2-bit planes: the low
//! bits of every channel live in one dense `(D, G/4)` byte tensor, and the high
//! bits of the `D_boost` boosted channels live in a compact `(D_boost, G/4)`
//! tensor. `boost_idx[c]` maps channel `c` to its row in the compact tensor, or
//! holds [`BOOST_SENTINEL`] when the channel is not boosted.
//!
//! Within a row, token `t` occupies bits `2·(t mod 4)..2·(t mod 4)+2` of byte
//! `t / 4`.
//!
//! A value page holds `G` tokens quantized per token at 2 bits; channel `c`
//! of a token row is packed the same way along the channel axis.

use crate::config::KittyConfig;
use crate::error::{Error, Result};
use crate::quant::{quantize_values, BoostSelection, PASSTHROUGH_BITS};
use crate::tensor::HeadMatrix;

pub const BOOST_SENTINEL: u8 = u8::MAX;
pub const PAGE_MAGIC: [u8; 4] = *b"KTYP";
pub const PAGE_HEADER_LEN: usize = 4 + 1 + 2 + 2 + 2;

/// Bytes charged per scale or zero point (16-bit accounting).
pub const META_BYTES: usize = 2;
/// Bytes charged per full-precision element (16-bit accounting).
pub const FP_BYTES: usize = 2;

const SHIFTS: [u8; 4] = [0, 2, 4, 6];

#[inline]
fn pack_row(codes: impl Iterator<Item = u8>, out: &mut [u8]) {
    for (i, code) in codes.enumerate() {
        out[i / 4] |= (code & 0x3) << SHIFTS[i % 4];
    }
}

#[inline]
fn unpack(row: &[u8], i: usize) -> u8 {
    (row[i / 4] >> SHIFTS[i % 4]) & 0x3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PageKind {
    Key = 0,
    Value = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedKeyPage {
    d: usize,
    g: usize,
    d_boost: usize,
    dense_low: Vec<u8>,
    high_bits: Vec<u8>,
    boost_idx: Vec<u8>,
    scales: Vec<f32>,
    zero_points: Vec<f32>,
}

impl QuantizedKeyPage {
    /// Assembles a page from raw components, checking only their lengths.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        d: usize,
        g: usize,
        d_boost: usize,
        dense_low: Vec<u8>,
        high_bits: Vec<u8>,
        boost_idx: Vec<u8>,
        scales: Vec<f32>,
        zero_points: Vec<f32>,
    ) -> Result<Self> {
        if !g.is_multiple_of(4) {
            return Err(Error::InvalidConfig(format!(
                "page size {g} not a multiple of 4"
            )));
        }
        if d_boost > d || d_boost >= BOOST_SENTINEL as usize {
            return Err(Error::InvalidConfig(format!(
                "d_boost {d_boost} invalid for {d} channels"
            )));
        }
        let want = [
            ("dense_low", dense_low.len(), d * g / 4),
            ("high_bits", high_bits.len(), d_boost * g / 4),
            ("boost_idx", boost_idx.len(), d),
            ("scales", scales.len(), d),
            ("zero_points", zero_points.len(), d),
        ];
        for (name, got, expected) in want {
            if got != expected {
                return Err(Error::Shape(format!(
                    "{name}: {got} entries, expected {expected}"
                )));
            }
        }
        Ok(Self {
            d,
            g,
            d_boost,
            dense_low,
            high_bits,
            boost_idx,
            scales,
            zero_points,
        })
    }

    pub fn channels(&self) -> usize {
        self.d
    }

    pub fn tokens(&self) -> usize {
        self.g
    }

    pub fn d_boost(&self) -> usize {
        self.d_boost
    }

    pub fn dense_low(&self) -> &[u8] {
        &self.dense_low
    }

    pub fn high_bits(&self) -> &[u8] {
        &self.high_bits
    }

    pub fn boost_idx(&self) -> &[u8] {
        &self.boost_idx
    }

    pub fn scales(&self) -> &[f32] {
        &self.scales
    }

    pub fn zero_points(&self) -> &[f32] {
        &self.zero_points
    }

    /// Channels whose boost index is not the sentinel, ascending.
    pub fn boosted_channels(&self) -> Vec<usize> {
        (0..self.d)
            .filter(|&c| self.boost_idx[c] != BOOST_SENTINEL)
            .collect()
    }

    /// Byte breakdown measured from the stored buffers.
    pub fn accounted_bytes(&self) -> PageBytes {
        PageBytes {
            payload: self.dense_low.len(),
            high_bits: self.high_bits.len(),
            boost_idx: self.boost_idx.len(),
            scales: self.scales.len() * META_BYTES,
            zero_points: self.zero_points.len() * META_BYTES,
        }
    }

    fn check_boost_index(&self) -> Result<()> {
        let malformed = || Error::MalformedSentinel {
            non_sentinel: self
                .boost_idx
                .iter()
                .filter(|&&i| i != BOOST_SENTINEL)
                .count(),
            d_boost: self.d_boost,
        };
        let mut seen = vec![false; self.d_boost];
        for &idx in &self.boost_idx {
            if idx == BOOST_SENTINEL {
                continue;
            }
            match seen.get_mut(idx as usize) {
                Some(slot) if !*slot => *slot = true,
                _ => return Err(malformed()),
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(malformed())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedValuePage {
    g: usize,
    d: usize,
    codes: Vec<u8>,
    scales: Vec<f32>,
    zero_points: Vec<f32>,
}

impl QuantizedValuePage {
    pub fn from_parts(
        g: usize,
        d: usize,
        codes: Vec<u8>,
        scales: Vec<f32>,
        zero_points: Vec<f32>,
    ) -> Result<Self> {
        if !d.is_multiple_of(4) {
            return Err(Error::InvalidConfig(format!(
                "head size {d} not a multiple of 4"
            )));
        }
        let want = [
            ("codes", codes.len(), g * d / 4),
            ("scales", scales.len(), g),
            ("zero_points", zero_points.len(), g),
        ];
        for (name, got, expected) in want {
            if got != expected {
                return Err(Error::Shape(format!(
                    "{name}: {got} entries, expected {expected}"
                )));
            }
        }
        Ok(Self {
            g,
            d,
            codes,
            scales,
            zero_points,
        })
    }

    pub fn tokens(&self) -> usize {
        self.g
    }

    pub fn channels(&self) -> usize {
        self.d
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn scales(&self) -> &[f32] {
        &self.scales
    }

    pub fn zero_points(&self) -> &[f32] {
        &self.zero_points
    }

    pub fn accounted_bytes(&self) -> PageBytes {
        PageBytes {
            payload: self.codes.len(),
            high_bits: 0,
            boost_idx: 0,
            scales: self.scales.len() * META_BYTES,
            zero_points: self.zero_points.len() * META_BYTES,
        }
    }
}

/// Packs a `G × D` (tokens × channels) block of keys. Channels in `sel` are
/// quantized at 4 bits, the rest at 2 bits, each over the page's `G` tokens.
pub fn pack_key_page(x: &HeadMatrix, sel: &BoostSelection) -> Result<QuantizedKeyPage> {
    let (g, d) = (x.rows(), x.cols());
    if g == 0 || g % 4 != 0 {
        return Err(Error::InvalidConfig(format!(
            "page size {g} not a positive multiple of 4"
        )));
    }
    if sel.boosted.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Shape(
            "boost selection must be strictly ascending".into(),
        ));
    }
    if let Some(&c) = sel.boosted.iter().find(|&&c| c >= d) {
        return Err(Error::Shape(format!(
            "boosted channel {c} out of range for {d} channels"
        )));
    }
    let d_boost = sel.d_boost();
    if d_boost >= BOOST_SENTINEL as usize {
        return Err(Error::InvalidConfig(format!(
            "{d_boost} boosted channels exceed the 8-bit index"
        )));
    }

    let row_bytes = g / 4;
    let mut boost_idx = vec![BOOST_SENTINEL; d];
    for (row, &c) in sel.boosted.iter().enumerate() {
        boost_idx[c] = row as u8;
    }
    let mut dense_low = vec![0u8; d * row_bytes];
    let mut high_bits = vec![0u8; d_boost * row_bytes];
    let mut scales = Vec::with_capacity(d);
    let mut zero_points = Vec::with_capacity(d);

    let xt = x.transpose();
    for (c, lane) in xt.iter_rows().enumerate() {
        let idx = boost_idx[c];
        let bits = if idx == BOOST_SENTINEL { 2 } else { 4 };
        let (codes, params) = quantize_values(lane, bits)?;
        scales.push(params.scale);
        zero_points.push(params.zero_point);
        pack_row(
            codes.iter().map(|&q| q & 0x3),
            &mut dense_low[c * row_bytes..(c + 1) * row_bytes],
        );
        if idx != BOOST_SENTINEL {
            let r = idx as usize;
            pack_row(
                codes.iter().map(|&q| q >> 2),
                &mut high_bits[r * row_bytes..(r + 1) * row_bytes],
            );
        }
    }

    Ok(QuantizedKeyPage {
        d,
        g,
        d_boost,
        dense_low,
        high_bits,
        boost_idx,
        scales,
        zero_points,
    })
}

/// Reconstructs a key page as a `D × G` (channels × tokens) matrix.
pub fn dequantize_key_page(page: &QuantizedKeyPage) -> Result<HeadMatrix> {
    page.check_boost_index()?;
    let (d, g) = (page.d, page.g);
    let row_bytes = g / 4;
    let d_boost = page.d_boost as u8;
    let mut out = Vec::with_capacity(d * g);
    for c in 0..d {
        let low = &page.dense_low[c * row_bytes..(c + 1) * row_bytes];
        let idx = page.boost_idx[c];
        let high = (idx < d_boost).then(|| {
            let r = idx as usize;
            &page.high_bits[r * row_bytes..(r + 1) * row_bytes]
        });
        let (scale, zero) = (page.scales[c], page.zero_points[c]);
        for t in 0..g {
            let mut code = unpack(low, t);
            if let Some(high) = high {
                code |= unpack(high, t) << 2;
            }
            out.push(code as f32 * scale + zero);
        }
    }
    HeadMatrix::new(d, g, out)
}

/// Packs a `G × D` block of values, one 2-bit group per token.
pub fn pack_value_page(v: &HeadMatrix) -> Result<QuantizedValuePage> {
    let (g, d) = (v.rows(), v.cols());
    if d == 0 || d % 4 != 0 {
        return Err(Error::InvalidConfig(format!(
            "head size {d} not a positive multiple of 4"
        )));
    }
    let row_bytes = d / 4;
    let mut codes = vec![0u8; g * row_bytes];
    let mut scales = Vec::with_capacity(g);
    let mut zero_points = Vec::with_capacity(g);
    for (t, row) in v.iter_rows().enumerate() {
        let (q, params) = quantize_values(row, 2)?;
        scales.push(params.scale);
        zero_points.push(params.zero_point);
        pack_row(
            q.into_iter(),
            &mut codes[t * row_bytes..(t + 1) * row_bytes],
        );
    }
    Ok(QuantizedValuePage {
        g,
        d,
        codes,
        scales,
        zero_points,
    })
}

/// Reconstructs a value page as a `G × D` matrix.
pub fn dequantize_value_page(page: &QuantizedValuePage) -> Result<HeadMatrix> {
    let (g, d) = (page.g, page.d);
    let row_bytes = d / 4;
    let mut out = Vec::with_capacity(g * d);
    for t in 0..g {
        let row = &page.codes[t * row_bytes..(t + 1) * row_bytes];
        let (scale, zero) = (page.scales[t], page.zero_points[t]);
        out.extend((0..d).map(|c| unpack(row, c) as f32 * scale + zero));
    }
    HeadMatrix::new(g, d, out)
}

/// Per-component byte counts of one page. Packed planes are exact; scales and
/// zero points are charged [`META_BYTES`] each; full-precision pages charge
/// [`FP_BYTES`] per element in `payload`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PageBytes {
    pub payload: usize,
    pub high_bits: usize,
    pub boost_idx: usize,
    pub scales: usize,
    pub zero_points: usize,
}

impl PageBytes {
    pub fn total(&self) -> usize {
        self.payload + self.high_bits + self.boost_idx + self.scales + self.zero_points
    }

    pub fn key(d: usize, g: usize, d_boost: usize) -> Self {
        Self {
            payload: d * g / 4,
            high_bits: d_boost * g / 4,
            boost_idx: d,
            scales: d * META_BYTES,
            zero_points: d * META_BYTES,
        }
    }

    pub fn value(d: usize, g: usize) -> Self {
        Self {
            payload: g * d / 4,
            high_bits: 0,
            boost_idx: 0,
            scales: g * META_BYTES,
            zero_points: g * META_BYTES,
        }
    }

    pub fn full_precision(d: usize, g: usize) -> Self {
        Self {
            payload: d * g * FP_BYTES,
            ..Default::default()
        }
    }
}

/// Byte breakdown of one page of `kind` under `cfg`.
pub fn page_byte_size(kind: PageKind, cfg: &KittyConfig) -> PageBytes {
    let (d, g) = (cfg.head_dim, cfg.group);
    let bits = match kind {
        PageKind::Key => cfg.key_bits,
        PageKind::Value => cfg.value_bits,
    };
    if bits == PASSTHROUGH_BITS {
        return PageBytes::full_precision(d, g);
    }
    match kind {
        PageKind::Key => PageBytes::key(d, g, cfg.d_boost()),
        PageKind::Value => PageBytes::value(d, g),
    }
}

/// A page in the KTYP serialized form.
#[derive(Debug, Clone, PartialEq)]
pub enum SerializedPage {
    Key(QuantizedKeyPage),
    Value(QuantizedValuePage),
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Truncated {
                expected: end,
                found: self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<usize> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()) as usize)
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n * 4)?;
        let out: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if let Some(index) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(out)
    }
}

fn write_header(out: &mut Vec<u8>, kind: PageKind, d: usize, g: usize, d_boost: usize) {
    out.extend_from_slice(&PAGE_MAGIC);
    out.push(kind as u8);
    out.extend_from_slice(&(d as u16).to_le_bytes());
    out.extend_from_slice(&(g as u16).to_le_bytes());
    out.extend_from_slice(&(d_boost as u16).to_le_bytes());
}

fn write_f32s(out: &mut Vec<u8>, xs: &[f32]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

impl SerializedPage {
    /// Header, then the page components in field order; scales and zero
    /// points are stored as little-endian `f32` so the round trip is exact.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            SerializedPage::Key(p) => {
                write_header(&mut out, PageKind::Key, p.d, p.g, p.d_boost);
                out.extend_from_slice(&p.dense_low);
                out.extend_from_slice(&p.high_bits);
                out.extend_from_slice(&p.boost_idx);
                write_f32s(&mut out, &p.scales);
                write_f32s(&mut out, &p.zero_points);
            }
            SerializedPage::Value(p) => {
                write_header(&mut out, PageKind::Value, p.d, p.g, 0);
                out.extend_from_slice(&p.codes);
                write_f32s(&mut out, &p.scales);
                write_f32s(&mut out, &p.zero_points);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
        if magic != PAGE_MAGIC {
            return Err(Error::BadMagic {
                expected: PAGE_MAGIC,
                found: magic,
            });
        }
        let kind = r.take(1)?[0];
        let d = r.u16()?;
        let g = r.u16()?;
        let d_boost = r.u16()?;
        let page = match kind {
            0 => {
                if g % 4 != 0 || d_boost > d {
                    return Err(Error::Shape(format!(
                        "bad key page header d={d} g={g} d_boost={d_boost}"
                    )));
                }
                let dense_low = r.take(d * g / 4)?.to_vec();
                let high_bits = r.take(d_boost * g / 4)?.to_vec();
                let boost_idx = r.take(d)?.to_vec();
                let scales = r.f32s(d)?;
                let zero_points = r.f32s(d)?;
                SerializedPage::Key(QuantizedKeyPage::from_parts(
                    d,
                    g,
                    d_boost,
                    dense_low,
                    high_bits,
                    boost_idx,
                    scales,
                    zero_points,
                )?)
            }
            1 => {
                if d % 4 != 0 {
                    return Err(Error::Shape(format!("bad value page header d={d}")));
                }
                let codes = r.take(g * d / 4)?.to_vec();
                let scales = r.f32s(g)?;
                let zero_points = r.f32s(g)?;
                SerializedPage::Value(QuantizedValuePage::from_parts(
                    g,
                    d,
                    codes,
                    scales,
                    zero_points,
                )?)
            }
            k => return Err(Error::UnknownPageKind(k)),
        };
        if r.pos != bytes.len() {
            return Err(Error::Shape(format!(
                "{} trailing bytes after page",
                bytes.len() - r.pos
            )));
        }
        Ok(page)
    }
}
