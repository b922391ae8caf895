//! KV memory accounting against a 16-bit dense baseline.

use std::fmt::Write;

use crate::config::KittyConfig;
use crate::page::{page_byte_size, PageKind, FP_BYTES};

/// Bytes held by one cache side, summed over KV heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SideBytes {
    pub sink: usize,
    pub qbuffer: usize,
    /// Value side only.
    pub local: usize,
    pub pages: usize,
    pub page_count: usize,
}

impl SideBytes {
    pub fn total(&self) -> usize {
        self.sink + self.qbuffer + self.local + self.pages
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryReport {
    pub tokens: usize,
    pub keys: SideBytes,
    pub values: SideBytes,
    pub total: usize,
    /// `2 · 2 · L · D · H_kv`: keys and values at 16 bits.
    pub baseline: usize,
    /// `baseline / total`, 1 for an empty cache.
    pub ratio: f64,
}

impl MemoryReport {
    pub fn new(tokens: usize, cfg: &KittyConfig, keys: SideBytes, values: SideBytes) -> Self {
        let total = keys.total() + values.total();
        let baseline = 2 * FP_BYTES * tokens * cfg.head_dim * cfg.kv_heads;
        let ratio = if total == 0 {
            1.0
        } else {
            baseline as f64 / total as f64
        };
        Self {
            tokens,
            keys,
            values,
            total,
            baseline,
            ratio,
        }
    }

    /// `side,component,bytes` rows plus totals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("side,component,bytes\n");
        for (side, b) in [("key", &self.keys), ("value", &self.values)] {
            for (name, bytes) in [
                ("sink", b.sink),
                ("qbuffer", b.qbuffer),
                ("local", b.local),
                ("pages", b.pages),
            ] {
                writeln!(out, "{side},{name},{bytes}").unwrap();
            }
        }
        writeln!(out, "all,total,{}", self.total).unwrap();
        writeln!(out, "all,baseline_fp16,{}", self.baseline).unwrap();
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "tokens: {}\nkey_pages: {}\nvalue_pages: {}\nkey_bytes: {}\nvalue_bytes: {}\n\
             total_bytes: {}\nbaseline_bytes: {}\ncompression_ratio: {:.6}\n",
            self.tokens,
            self.keys.page_count,
            self.values.page_count,
            self.keys.total(),
            self.values.total(),
            self.total,
            self.baseline,
            self.ratio
        )
    }
}

/// Closed-form footprint after `l` tokens have been inserted (steady state,
/// no pending packs).
pub fn memory_report(cfg: &KittyConfig, l: usize) -> MemoryReport {
    let (s, r, g, d, h) = (cfg.sink, cfg.local, cfg.group, cfg.head_dim, cfg.kv_heads);
    let fp_row = d * FP_BYTES;
    let sink = s.min(l);
    let rest = l - sink;

    let key_pages = rest / g;
    let keys = SideBytes {
        sink: h * sink * fp_row,
        qbuffer: h * (rest % g) * fp_row,
        local: 0,
        pages: h * key_pages * page_byte_size(PageKind::Key, cfg).total(),
        page_count: h * key_pages,
    };

    let local = r.min(rest);
    let overflow = rest - local;
    let value_pages = overflow / g;
    let values = SideBytes {
        sink: h * sink * fp_row,
        qbuffer: h * (overflow % g) * fp_row,
        local: h * local * fp_row,
        pages: h * value_pages * page_byte_size(PageKind::Value, cfg).total(),
        page_count: h * value_pages,
    };
    MemoryReport::new(l, cfg, keys, values)
}
