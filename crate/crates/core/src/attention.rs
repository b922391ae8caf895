//! Softmax attention primitives and the dense full-precision reference.

use crate::error::{Error, Result};
use crate::tensor::HeadMatrix;

/// Per-query-head attention result.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    /// One `d`-vector per query head.
    pub outputs: Vec<Vec<f32>>,
    /// Attention probabilities over all cached tokens, per query head.
    pub probs: Option<Vec<Vec<f32>>>,
}

impl AttentionOutput {
    /// Query heads concatenated, head-major.
    pub fn flatten(&self) -> Vec<f32> {
        self.outputs.iter().flatten().copied().collect()
    }
}

/// In-place numerically stable softmax (max subtraction), `f32` throughout.
pub fn softmax_in_place(xs: &mut [f32]) {
    let max = xs.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0f32;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

/// `‖a − b‖∞ / ‖b‖∞`, or the absolute deviation when `b` is all zeros.
pub fn max_relative_deviation(a: &[f32], b: &[f32]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .fold(0.0, f64::max);
    let norm = b.iter().map(|y| (*y as f64).abs()).fold(0.0, f64::max);
    if norm > 0.0 {
        diff / norm
    } else {
        diff
    }
}

/// Dense attention over explicit per-KV-head key and value matrices (`L × D`
/// each). `q` holds the query heads back to back; query head `h` reads KV head
/// `h · kv_heads / q_heads`. Accumulates in `f64`.
pub fn oracle_attend(
    keys: &[HeadMatrix],
    values: &[HeadMatrix],
    q: &[f32],
    with_probs: bool,
) -> Result<AttentionOutput> {
    let kv_heads = keys.len();
    if kv_heads == 0 || values.len() != kv_heads {
        return Err(Error::Shape(format!(
            "{} key heads and {} value heads",
            kv_heads,
            values.len()
        )));
    }
    let d = keys[0].cols();
    let len = keys[0].rows();
    for (k, v) in keys.iter().zip(values) {
        if k.cols() != d || v.cols() != d || k.rows() != len || v.rows() != len {
            return Err(Error::Shape("key/value heads disagree in shape".into()));
        }
    }
    if len == 0 {
        return Err(Error::EmptyCache);
    }
    if d == 0 || !q.len().is_multiple_of(d) || !(q.len() / d).is_multiple_of(kv_heads) {
        return Err(Error::Shape(format!(
            "{} query elements for head size {d} and {kv_heads} KV heads",
            q.len()
        )));
    }
    let q_heads = q.len() / d;
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();

    let mut outputs = Vec::with_capacity(q_heads);
    let mut all_probs = Vec::with_capacity(q_heads);
    for h in 0..q_heads {
        let kv = h * kv_heads / q_heads;
        let qh = &q[h * d..(h + 1) * d];
        let logits: Vec<f64> = keys[kv]
            .iter_rows()
            .map(|k| {
                qh.iter()
                    .zip(k)
                    .map(|(a, b)| *a as f64 * *b as f64)
                    .sum::<f64>()
                    * inv_sqrt_d
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut out = vec![0.0f64; d];
        for (w, v) in weights.iter().zip(values[kv].iter_rows()) {
            let p = w / total;
            for (o, x) in out.iter_mut().zip(v) {
                *o += p * *x as f64;
            }
        }
        outputs.push(out.into_iter().map(|x| x as f32).collect());
        if with_probs {
            all_probs.push(weights.iter().map(|w| (w / total) as f32).collect());
        }
    }
    Ok(AttentionOutput {
        outputs,
        probs: with_probs.then_some(all_probs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_keys_give_uniform_probs() {
        let l = 7;
        let keys = HeadMatrix::new(l, 4, [0.3, -1.0, 2.0, 0.5].repeat(l)).unwrap();
        let values = HeadMatrix::new(l, 4, (0..l * 4).map(|i| i as f32).collect()).unwrap();
        let out = oracle_attend(&[keys], &[values], &[1.0, 2.0, 3.0, 4.0], true).unwrap();
        for p in &out.probs.unwrap()[0] {
            assert!((p - 1.0 / l as f32).abs() < 1e-7);
        }
    }

    #[test]
    fn aligned_key_takes_the_mass() {
        // alpha·|q|²/√d ≥ ln(100·L) guarantees p > 0.99
        let (l, d) = (16usize, 4usize);
        let q = [0.5f32, -0.5, 1.0, 0.25];
        let qq: f32 = q.iter().map(|x| x * x).sum();
        let alpha = ((100.0 * l as f32).ln() * (d as f32).sqrt() / qq).ceil();
        let mut data = vec![0.0f32; l * d];
        for t in 0..l {
            for c in 0..d {
                data[t * d + c] = ((t * 7 + c * 3) % 5) as f32 * 0.01;
            }
        }
        for c in 0..d {
            data[5 * d + c] = alpha * q[c];
        }
        let keys = HeadMatrix::new(l, d, data).unwrap();
        let out = oracle_attend(&[keys.clone()], &[keys], &q, true).unwrap();
        assert!(out.probs.unwrap()[0][5] > 0.99);
    }

    #[test]
    fn singleton_returns_its_value() {
        let k = HeadMatrix::new(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let v = HeadMatrix::new(1, 4, vec![-1.5, 0.25, 8.0, 3.0]).unwrap();
        let out = oracle_attend(&[k], &[v.clone()], &[0.1, 0.2, 0.3, 0.4], true).unwrap();
        assert_eq!(out.outputs[0], v.row(0));
        assert_eq!(out.probs.unwrap()[0], vec![1.0]);
    }

    #[test]
    fn shape_errors() {
        let k = HeadMatrix::zeros(2, 4);
        assert!(oracle_attend(&[k.clone()], &[], &[0.0; 4], false).is_err());
        assert!(oracle_attend(&[k.clone()], &[k.clone()], &[0.0; 3], false).is_err());
        assert!(matches!(
            oracle_attend(
                &[HeadMatrix::zeros(0, 4)],
                &[HeadMatrix::zeros(0, 4)],
                &[0.0; 4],
                false
            ),
            Err(Error::EmptyCache)
        ));
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let mut xs = [1000.0f32, 1001.0, 999.0];
        softmax_in_place(&mut xs);
        assert!(xs.iter().all(|p| p.is_finite()));
        assert!((xs.iter().sum::<f32>() - 1.0).abs() < 1e-6);
        assert!(xs[1] > xs[0] && xs[0] > xs[2]);
    }
}
