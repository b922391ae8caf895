//! Per-sequence KV cache built from heterogeneous segments.
//!
//! For every KV head, keys are stored as `sink ‖ pages ‖ q-buffer` and values
//! as `sink ‖ pages ‖ q-buffer ‖ local`, oldest to newest. A decode step
//! inserts the new token in full precision, attends over every segment, and
//! packs any q-buffer that reached `G` tokens into a new page.

use std::collections::VecDeque;

use crate::analysis::memory::{MemoryReport, SideBytes};
use crate::attention::{softmax_in_place, AttentionOutput};
use crate::config::KittyConfig;
use crate::error::{Error, Result};
use crate::page::{
    dequantize_key_page, dequantize_value_page, pack_key_page, pack_value_page, PageBytes,
    QuantizedKeyPage, QuantizedValuePage, FP_BYTES,
};
use crate::quant::{channel_scores, select_boost, PASSTHROUGH_BITS};
use crate::tensor::HeadMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum KeyPage {
    Quantized(QuantizedKeyPage),
    /// `G × D` rows kept at full precision (16-bit mode).
    Full(HeadMatrix),
}

impl KeyPage {
    /// Reconstructed page as `G × D` token rows.
    pub fn to_rows(&self) -> Result<HeadMatrix> {
        match self {
            KeyPage::Quantized(p) => Ok(dequantize_key_page(p)?.transpose()),
            KeyPage::Full(m) => Ok(m.clone()),
        }
    }

    pub fn bytes(&self) -> PageBytes {
        match self {
            KeyPage::Quantized(p) => p.accounted_bytes(),
            KeyPage::Full(m) => PageBytes::full_precision(m.cols(), m.rows()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValuePage {
    Quantized(QuantizedValuePage),
    Full(HeadMatrix),
}

impl ValuePage {
    pub fn to_rows(&self) -> Result<HeadMatrix> {
        match self {
            ValuePage::Quantized(p) => dequantize_value_page(p),
            ValuePage::Full(m) => Ok(m.clone()),
        }
    }

    pub fn bytes(&self) -> PageBytes {
        match self {
            ValuePage::Quantized(p) => p.accounted_bytes(),
            ValuePage::Full(m) => PageBytes::full_precision(m.cols(), m.rows()),
        }
    }
}

/// Storage for one KV head.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HeadCache {
    pub key_sink: Vec<Vec<f32>>,
    pub key_qbuffer: Vec<Vec<f32>>,
    pub key_pages: Vec<KeyPage>,
    pub value_sink: Vec<Vec<f32>>,
    pub value_local: VecDeque<Vec<f32>>,
    pub value_qbuffer: Vec<Vec<f32>>,
    pub value_pages: Vec<ValuePage>,
}

impl HeadCache {
    fn key_tokens(&self, g: usize) -> usize {
        self.key_sink.len() + g * self.key_pages.len() + self.key_qbuffer.len()
    }

    fn value_tokens(&self, g: usize) -> usize {
        self.value_sink.len()
            + g * self.value_pages.len()
            + self.value_qbuffer.len()
            + self.value_local.len()
    }

    /// Dequantized keys in insertion order.
    pub fn key_history(&self, d: usize) -> Result<HeadMatrix> {
        let mut rows: Vec<f32> = self.key_sink.iter().flatten().copied().collect();
        for page in &self.key_pages {
            rows.extend_from_slice(page.to_rows()?.data());
        }
        rows.extend(self.key_qbuffer.iter().flatten());
        HeadMatrix::new(rows.len() / d, d, rows)
    }

    /// Dequantized values in insertion order.
    pub fn value_history(&self, d: usize) -> Result<HeadMatrix> {
        let mut rows: Vec<f32> = self.value_sink.iter().flatten().copied().collect();
        for page in &self.value_pages {
            rows.extend_from_slice(page.to_rows()?.data());
        }
        rows.extend(self.value_qbuffer.iter().flatten());
        rows.extend(self.value_local.iter().flatten());
        HeadMatrix::new(rows.len() / d, d, rows)
    }
}

/// Pages produced by one [`KittyCache::maybe_pack`] call, per side. Each
/// launch packs one page for every KV head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PackEvents {
    pub key: usize,
    pub value: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KittyCache {
    cfg: KittyConfig,
    heads: Vec<HeadCache>,
    total_tokens: usize,
    key_pack_events: usize,
    value_pack_events: usize,
}

impl KittyCache {
    pub fn new(cfg: KittyConfig) -> Result<Self> {
        cfg.validate()?;
        let heads = vec![HeadCache::default(); cfg.kv_heads];
        Ok(Self {
            cfg,
            heads,
            total_tokens: 0,
            key_pack_events: 0,
            value_pack_events: 0,
        })
    }

    pub fn config(&self) -> &KittyConfig {
        &self.cfg
    }

    pub fn heads(&self) -> &[HeadCache] {
        &self.heads
    }

    pub fn total_tokens(&self) -> usize {
        self.total_tokens
    }

    /// Key-side pack launches so far.
    pub fn key_pack_events(&self) -> usize {
        self.key_pack_events
    }

    /// Value-side pack launches so far.
    pub fn value_pack_events(&self) -> usize {
        self.value_pack_events
    }

    fn check_token(&self, k: &[f32], v: &[f32]) -> Result<()> {
        let want = self.cfg.kv_heads * self.cfg.head_dim;
        if k.len() != want || v.len() != want {
            return Err(Error::Shape(format!(
                "token needs {want} key and value elements, got {} and {}",
                k.len(),
                v.len()
            )));
        }
        if let Some(index) = k.iter().chain(v).position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(())
    }

    /// Step 1: route the new token into the full-precision buffers. `k` and
    /// `v` hold one `D`-vector per KV head, head-major.
    pub fn push_token(&mut self, k: &[f32], v: &[f32]) -> Result<()> {
        self.check_token(k, v)?;
        let d = self.cfg.head_dim;
        let (s, r) = (self.cfg.sink, self.cfg.local);
        for (h, head) in self.heads.iter_mut().enumerate() {
            let kh = k[h * d..(h + 1) * d].to_vec();
            let vh = v[h * d..(h + 1) * d].to_vec();
            if head.key_sink.len() < s {
                head.key_sink.push(kh);
                head.value_sink.push(vh);
                continue;
            }
            head.key_qbuffer.push(kh);
            if head.value_local.len() == r {
                let oldest = head.value_local.pop_front().expect("local window is full");
                head.value_qbuffer.push(oldest);
            }
            head.value_local.push_back(vh);
        }
        self.total_tokens += 1;
        Ok(())
    }

    /// Step 1 followed by step 3.
    pub fn insert_token(&mut self, k: &[f32], v: &[f32]) -> Result<PackEvents> {
        self.push_token(k, v)?;
        self.maybe_pack()
    }

    /// One decode step in pipeline order: insert, attend over the cache
    /// including the new token, then pack full q-buffers.
    pub fn decode_step(&mut self, k: &[f32], v: &[f32], q: &[f32]) -> Result<AttentionOutput> {
        self.push_token(k, v)?;
        let out = self.attend(q, false)?;
        self.maybe_pack()?;
        Ok(out)
    }

    fn pack_key_block(&self, head: usize, rows: &[Vec<f32>]) -> Result<KeyPage> {
        let block = HeadMatrix::from_rows(self.cfg.head_dim, rows.iter().map(Vec::as_slice))?;
        if self.cfg.key_bits == PASSTHROUGH_BITS {
            return Ok(KeyPage::Full(block));
        }
        let page_index = self.heads[head].key_pages.len() as u64;
        let heuristic = self
            .cfg
            .heuristic
            .derive(((head as u64) << 32) | page_index);
        let scores = channel_scores(&block)?;
        let sel = select_boost(&scores, self.cfg.boost_fraction, heuristic)?;
        Ok(KeyPage::Quantized(pack_key_page(&block, &sel)?))
    }

    fn pack_value_block(&self, rows: &[Vec<f32>]) -> Result<ValuePage> {
        let block = HeadMatrix::from_rows(self.cfg.head_dim, rows.iter().map(Vec::as_slice))?;
        if self.cfg.value_bits == PASSTHROUGH_BITS {
            return Ok(ValuePage::Full(block));
        }
        Ok(ValuePage::Quantized(pack_value_page(&block)?))
    }

    /// Step 3: pack every full group of `G` tokens waiting in a q-buffer, one
    /// launch per page. Boost channels are selected from each key block's own
    /// statistics. In the decode pipeline at most one page per side is ready.
    pub fn maybe_pack(&mut self) -> Result<PackEvents> {
        let g = self.cfg.group;
        let mut events = PackEvents::default();
        // heads fill in lockstep, so head 0 decides for all
        while self.heads.first().is_some_and(|h| h.key_qbuffer.len() >= g) {
            for h in 0..self.heads.len() {
                let page = self.pack_key_block(h, &self.heads[h].key_qbuffer[..g])?;
                let head = &mut self.heads[h];
                head.key_pages.push(page);
                head.key_qbuffer.drain(..g);
            }
            self.key_pack_events += 1;
            events.key += 1;
        }
        while self
            .heads
            .first()
            .is_some_and(|h| h.value_qbuffer.len() >= g)
        {
            for h in 0..self.heads.len() {
                let page = self.pack_value_block(&self.heads[h].value_qbuffer[..g])?;
                let head = &mut self.heads[h];
                head.value_pages.push(page);
                head.value_qbuffer.drain(..g);
            }
            self.value_pack_events += 1;
            events.value += 1;
        }
        Ok(events)
    }

    /// Loads a prompt of `P` tokens into an empty cache. `keys[h]` and
    /// `values[h]` are `P × D` for KV head `h`. The resulting state is the same
    /// as inserting the rows one at a time with [`KittyCache::insert_token`].
    pub fn prefill(&mut self, keys: &[HeadMatrix], values: &[HeadMatrix]) -> Result<()> {
        if self.total_tokens != 0 {
            return Err(Error::NonEmptyState(self.total_tokens));
        }
        let (d, h_kv) = (self.cfg.head_dim, self.cfg.kv_heads);
        if keys.len() != h_kv || values.len() != h_kv {
            return Err(Error::Shape(format!(
                "prefill needs {h_kv} key and value heads, got {} and {}",
                keys.len(),
                values.len()
            )));
        }
        let p = keys[0].rows();
        if keys
            .iter()
            .chain(values)
            .any(|m| m.rows() != p || m.cols() != d)
        {
            return Err(Error::Shape(format!("prefill heads must all be {p} x {d}")));
        }
        let (s, r, g) = (self.cfg.sink, self.cfg.local, self.cfg.group);
        let sink = s.min(p);
        let rest = p - sink;
        let key_pages = rest / g;
        let local = r.min(rest);
        let value_overflow = rest - local;
        let value_pages = value_overflow / g;

        for h in 0..h_kv {
            let (k, v) = (&keys[h], &values[h]);
            let head = &mut self.heads[h];
            head.key_sink = (0..sink).map(|t| k.row(t).to_vec()).collect();
            head.value_sink = (0..sink).map(|t| v.row(t).to_vec()).collect();
            head.key_qbuffer = (sink + key_pages * g..p)
                .map(|t| k.row(t).to_vec())
                .collect();
            let overflow_end = sink + value_overflow;
            head.value_qbuffer = (sink + value_pages * g..overflow_end)
                .map(|t| v.row(t).to_vec())
                .collect();
            head.value_local = (overflow_end..p).map(|t| v.row(t).to_vec()).collect();
        }
        for i in 0..key_pages {
            let start = sink + i * g;
            for h in 0..h_kv {
                let block: Vec<Vec<f32>> = (start..start + g)
                    .map(|t| keys[h].row(t).to_vec())
                    .collect();
                let page = self.pack_key_block(h, &block)?;
                self.heads[h].key_pages.push(page);
            }
        }
        for i in 0..value_pages {
            let start = sink + i * g;
            for h in 0..h_kv {
                let block: Vec<Vec<f32>> = (start..start + g)
                    .map(|t| values[h].row(t).to_vec())
                    .collect();
                let page = self.pack_value_block(&block)?;
                self.heads[h].value_pages.push(page);
            }
        }
        self.key_pack_events = key_pages;
        self.value_pack_events = value_pages;
        self.total_tokens = p;
        Ok(())
    }

    /// Step 2: attention of one query vector per query head (head-major in
    /// `q`) over all cached tokens. Logits, softmax and the weighted value sum
    /// run in `f32`.
    pub fn attend(&self, q: &[f32], with_probs: bool) -> Result<AttentionOutput> {
        let (d, h_q) = (self.cfg.head_dim, self.cfg.q_heads);
        if q.len() != h_q * d {
            return Err(Error::Shape(format!(
                "query needs {} elements, got {}",
                h_q * d,
                q.len()
            )));
        }
        if self.total_tokens == 0 {
            return Err(Error::EmptyCache);
        }
        let inv_sqrt_d = 1.0 / (d as f32).sqrt();
        let mut outputs = vec![Vec::new(); h_q];
        let mut probs = vec![Vec::new(); h_q];

        for (kv, head) in self.heads.iter().enumerate() {
            let group: Vec<usize> = (0..h_q)
                .filter(|&h| self.cfg.kv_head_for(h) == kv)
                .collect();
            let qs: Vec<&[f32]> = group.iter().map(|&h| &q[h * d..(h + 1) * d]).collect();
            let mut logits: Vec<Vec<f32>> =
                vec![Vec::with_capacity(self.total_tokens); group.len()];

            let push_row = |k: &[f32], logits: &mut Vec<Vec<f32>>| {
                for (qh, l) in qs.iter().zip(logits.iter_mut()) {
                    l.push(dot(qh, k) * inv_sqrt_d);
                }
            };
            for k in &head.key_sink {
                push_row(k, &mut logits);
            }
            for page in &head.key_pages {
                match page {
                    KeyPage::Quantized(p) => {
                        // channel-major page: accumulate over channels per token
                        let kt = dequantize_key_page(p)?;
                        let g = kt.cols();
                        for (qh, l) in qs.iter().zip(logits.iter_mut()) {
                            let mut acc = vec![0.0f32; g];
                            for (c, &qc) in qh.iter().enumerate() {
                                for (a, &kc) in acc.iter_mut().zip(kt.row(c)) {
                                    *a += qc * kc;
                                }
                            }
                            l.extend(acc.into_iter().map(|a| a * inv_sqrt_d));
                        }
                    }
                    KeyPage::Full(m) => {
                        for k in m.iter_rows() {
                            push_row(k, &mut logits);
                        }
                    }
                }
            }
            for k in &head.key_qbuffer {
                push_row(k, &mut logits);
            }

            for l in logits.iter_mut() {
                softmax_in_place(l);
            }

            let mut outs = vec![vec![0.0f32; d]; group.len()];
            let mut t = 0;
            let accumulate = |v: &[f32], t: usize, outs: &mut Vec<Vec<f32>>| {
                for (o, p) in outs.iter_mut().zip(&logits) {
                    let w = p[t];
                    for (oc, vc) in o.iter_mut().zip(v) {
                        *oc += w * vc;
                    }
                }
            };
            for v in &head.value_sink {
                accumulate(v, t, &mut outs);
                t += 1;
            }
            for page in &head.value_pages {
                let rows = page.to_rows()?;
                for v in rows.iter_rows() {
                    accumulate(v, t, &mut outs);
                    t += 1;
                }
            }
            for v in head.value_qbuffer.iter().chain(&head.value_local) {
                accumulate(v, t, &mut outs);
                t += 1;
            }
            debug_assert_eq!(t, self.total_tokens);

            for ((h, o), p) in group.iter().zip(outs).zip(logits) {
                outputs[*h] = o;
                probs[*h] = p;
            }
        }
        Ok(AttentionOutput {
            outputs,
            probs: with_probs.then_some(probs),
        })
    }

    /// Dequantized keys and values of every KV head, in insertion order.
    pub fn histories(&self) -> Result<(Vec<HeadMatrix>, Vec<HeadMatrix>)> {
        let d = self.cfg.head_dim;
        let keys = self
            .heads
            .iter()
            .map(|h| h.key_history(d))
            .collect::<Result<_>>()?;
        let values = self
            .heads
            .iter()
            .map(|h| h.value_history(d))
            .collect::<Result<_>>()?;
        Ok((keys, values))
    }

    pub fn check_invariants(&self) -> Result<()> {
        let (s, r, g) = (self.cfg.sink, self.cfg.local, self.cfg.group);
        let n = self.total_tokens;
        let fail = |msg: String| Err(Error::Invariant(msg));
        for (h, head) in self.heads.iter().enumerate() {
            if head.key_tokens(g) != n || head.value_tokens(g) != n {
                return fail(format!(
                    "head {h}: {} key and {} value tokens, expected {n}",
                    head.key_tokens(g),
                    head.value_tokens(g)
                ));
            }
            if head.key_qbuffer.len() >= g || head.value_qbuffer.len() >= g {
                return fail(format!("head {h}: q-buffer reached {g} without packing"));
            }
            if head.key_sink.len() != s.min(n) || head.value_sink.len() != s.min(n) {
                return fail(format!(
                    "head {h}: sink holds {} tokens",
                    head.key_sink.len()
                ));
            }
            let local = r.min(n.saturating_sub(s));
            if head.value_local.len() != local {
                return fail(format!(
                    "head {h}: local window holds {}, expected {local}",
                    head.value_local.len()
                ));
            }
        }
        Ok(())
    }

    /// Bytes held by every component, full-precision rows charged at 16 bits.
    pub fn measured_memory(&self) -> MemoryReport {
        let fp_row = self.cfg.head_dim * FP_BYTES;
        let mut keys = SideBytes::default();
        let mut values = SideBytes::default();
        for head in &self.heads {
            keys.sink += head.key_sink.len() * fp_row;
            keys.qbuffer += head.key_qbuffer.len() * fp_row;
            keys.pages += head
                .key_pages
                .iter()
                .map(|p| p.bytes().total())
                .sum::<usize>();
            keys.page_count += head.key_pages.len();
            values.sink += head.value_sink.len() * fp_row;
            values.qbuffer += head.value_qbuffer.len() * fp_row;
            values.local += head.value_local.len() * fp_row;
            values.pages += head
                .value_pages
                .iter()
                .map(|p| p.bytes().total())
                .sum::<usize>();
            values.page_count += head.value_pages.len();
        }
        MemoryReport::new(self.total_tokens, &self.cfg, keys, values)
    }
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
