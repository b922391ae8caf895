//! Cache configuration and its flat `key = value` file form.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::page::BOOST_SENTINEL;
use crate::quant::{boost_count, Heuristic, PASSTHROUGH_BITS};

#[derive(Debug, Clone, PartialEq)]
pub struct KittyConfig {
    /// Sink tokens kept in full precision on both sides (`S`).
    pub sink: usize,
    /// Full-precision local window of the value cache (`R`).
    pub local: usize,
    /// Tokens per quantization group and page (`G`).
    pub group: usize,
    /// Channels per head (`D`).
    pub head_dim: usize,
    pub kv_heads: usize,
    pub q_heads: usize,
    /// 2, or 16 for full-precision pages.
    pub key_bits: u8,
    /// 2, or 16 for full-precision pages.
    pub value_bits: u8,
    /// Fraction of key channels promoted to 4 bits in each page.
    pub boost_fraction: f64,
    pub heuristic: Heuristic,
}

impl Default for KittyConfig {
    fn default() -> Self {
        Self {
            sink: 32,
            local: 128,
            group: 128,
            head_dim: 128,
            kv_heads: 1,
            q_heads: 1,
            key_bits: 2,
            value_bits: 2,
            boost_fraction: 0.125,
            heuristic: Heuristic::Magnitude,
        }
    }
}

impl KittyConfig {
    /// Same layout with both sides kept at full precision.
    pub fn passthrough(&self) -> Self {
        Self {
            key_bits: PASSTHROUGH_BITS,
            value_bits: PASSTHROUGH_BITS,
            ..self.clone()
        }
    }

    pub fn d_boost(&self) -> usize {
        boost_count(self.boost_fraction, self.head_dim)
    }

    /// KV head serving query head `q_head`.
    #[inline]
    pub fn kv_head_for(&self, q_head: usize) -> usize {
        q_head * self.kv_heads / self.q_heads
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.kv_heads == 0 || self.q_heads == 0 {
            return bad("head counts must be positive".into());
        }
        if !self.q_heads.is_multiple_of(self.kv_heads) {
            return bad(format!(
                "q_heads ({}) must be a multiple of kv_heads ({})",
                self.q_heads, self.kv_heads
            ));
        }
        if self.group == 0 || !self.group.is_multiple_of(4) {
            return bad(format!(
                "group must be a positive multiple of 4, got {}",
                self.group
            ));
        }
        if self.head_dim == 0 || !self.head_dim.is_multiple_of(4) {
            return bad(format!(
                "head_dim must be a positive multiple of 4, got {}",
                self.head_dim
            ));
        }
        if self.head_dim > u16::MAX as usize || self.group > u16::MAX as usize {
            return bad("head_dim and group must fit in 16 bits".into());
        }
        if self.local == 0 {
            return bad("local window must hold at least one token".into());
        }
        for (name, bits) in [("key_bits", self.key_bits), ("value_bits", self.value_bits)] {
            if bits != 2 && bits != PASSTHROUGH_BITS {
                return bad(format!("{name} must be 2 or 16, got {bits}"));
            }
        }
        if !(0.0..=1.0).contains(&self.boost_fraction) {
            return bad(format!(
                "boost_fraction must be in [0, 1], got {}",
                self.boost_fraction
            ));
        }
        if self.d_boost() >= BOOST_SENTINEL as usize {
            return bad(format!(
                "{} boosted channels exceed the 8-bit boost index",
                self.d_boost()
            ));
        }
        Ok(())
    }

    /// Applies one `key = value` assignment. Accepts the field names above and
    /// the short symbols `s`, `r`, `g`, `d`, `h_kv`, `h_q`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad value {value:?} for {key}")))
        }
        let value = value.trim();
        match key.trim() {
            "sink" | "s" => self.sink = num(key, value)?,
            "local" | "r" => self.local = num(key, value)?,
            "group" | "g" => self.group = num(key, value)?,
            "head_dim" | "d" => self.head_dim = num(key, value)?,
            "kv_heads" | "h_kv" => self.kv_heads = num(key, value)?,
            "q_heads" | "h_q" => self.q_heads = num(key, value)?,
            "key_bits" => self.key_bits = num(key, value)?,
            "value_bits" => self.value_bits = num(key, value)?,
            "boost_fraction" => self.boost_fraction = num(key, value)?,
            "heuristic" => self.heuristic = value.parse()?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown config key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", n + 1))
            })?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

impl fmt::Display for KittyConfig {
    /// Single-line form, also valid input to [`KittyConfig::parse`] after
    /// splitting on `;`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sink={}; local={}; group={}; head_dim={}; kv_heads={}; q_heads={}; \
             key_bits={}; value_bits={}; boost_fraction={}; heuristic={}",
            self.sink,
            self.local,
            self.group,
            self.head_dim,
            self.kv_heads,
            self.q_heads,
            self.key_bits,
            self.value_bits,
            self.boost_fraction,
            self.heuristic
        )
    }
}
