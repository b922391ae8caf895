//! Desk-scale experiments: per-channel quantization sensitivity, boost-rate
//! sweeps and KV memory accounting.

pub mod memory;
pub mod sensitivity;
pub mod sweep;

pub use memory::{memory_report, MemoryReport, SideBytes};
pub use sensitivity::{attention_probs, channel_sensitivity, SensitivityReport};
pub use sweep::{boost_sweep, sweep_csv, SweepRow};

use crate::error::{Error, Result};
use crate::tensor::HeadMatrix;

/// Mean squared difference of two equal-length slices.
pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Checks that `queries` (one `Lq × D` matrix per query head) and `keys` (one
/// `L × D` matrix per KV head) form a valid grouped-query layout.
fn check_gqa(queries: &[HeadMatrix], keys: &[HeadMatrix]) -> Result<()> {
    if queries.is_empty() || keys.is_empty() {
        return Err(Error::Shape(
            "need at least one query and one key head".into(),
        ));
    }
    if !queries.len().is_multiple_of(keys.len()) {
        return Err(Error::Shape(format!(
            "{} query heads cannot share {} KV heads",
            queries.len(),
            keys.len()
        )));
    }
    let d = keys[0].cols();
    let l = keys[0].rows();
    if l == 0 || d == 0 {
        return Err(Error::Empty("key heads"));
    }
    if keys.iter().any(|k| k.cols() != d || k.rows() != l) || queries.iter().any(|q| q.cols() != d)
    {
        return Err(Error::Shape(
            "query and key heads must share one head size".into(),
        ));
    }
    Ok(())
}

#[inline]
fn kv_for(q_head: usize, q_heads: usize, kv_heads: usize) -> usize {
    q_head * kv_heads / q_heads
}
