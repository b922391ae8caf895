//! Per-channel quantization sensitivity of the attention probabilities.
//!
//! For every channel `i`, only that channel of the keys is fake-quantized
//! (per channel, over all `L` tokens) and the attention probability matrix is
//! compared to the unperturbed one by mean squared error. Quantizing channel
//! `i` shifts every logit by `q[i] · Δk[t][i] / √d`, so each channel costs one
//! rank-1 logit update instead of a full `QKᵀ`.

use std::fmt::Write;

use rayon::prelude::*;

use super::{check_gqa, kv_for, mse};
use crate::error::Result;
use crate::quant::fake_quantize_lane;
use crate::tensor::HeadMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    /// `mse[h][i]`: query head `h`, channel `i`.
    pub mse: Vec<Vec<f64>>,
    /// Channels per query head, most sensitive first (ties by lower index).
    pub ranking: Vec<Vec<usize>>,
}

fn rank_desc(xs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]));
    order
}

impl SensitivityReport {
    pub fn channels(&self) -> usize {
        self.mse.first().map_or(0, Vec::len)
    }

    /// Per-channel MSE averaged over query heads.
    pub fn mean_mse(&self) -> Vec<f64> {
        let heads = self.mse.len() as f64;
        (0..self.channels())
            .map(|c| self.mse.iter().map(|row| row[c]).sum::<f64>() / heads)
            .collect()
    }

    /// Channels ordered by mean MSE across heads, most sensitive first.
    pub fn mean_ranking(&self) -> Vec<usize> {
        rank_desc(&self.mean_mse())
    }

    /// `q_head,channel,mse,rank` rows; rank 0 is the most sensitive channel of
    /// that head.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q_head,channel,mse,rank\n");
        for (h, (row, order)) in self.mse.iter().zip(&self.ranking).enumerate() {
            let mut rank = vec![0; row.len()];
            for (r, &c) in order.iter().enumerate() {
                rank[c] = r;
            }
            for (c, m) in row.iter().enumerate() {
                writeln!(out, "{h},{c},{m:e},{}", rank[c]).unwrap();
            }
        }
        out
    }
}

fn logits(q: &HeadMatrix, k: &HeadMatrix) -> Vec<f64> {
    let inv_sqrt_d = 1.0 / (k.cols() as f64).sqrt();
    let mut out = Vec::with_capacity(q.rows() * k.rows());
    for qr in q.iter_rows() {
        for kr in k.iter_rows() {
            out.push(
                qr.iter()
                    .zip(kr)
                    .map(|(a, b)| *a as f64 * *b as f64)
                    .sum::<f64>()
                    * inv_sqrt_d,
            );
        }
    }
    out
}

fn softmax_rows(logits: &mut [f64], width: usize) {
    for row in logits.chunks_mut(width) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
}

/// Row-wise `softmax(QKᵀ/√d)` as a flat `Lq × L` matrix, in `f64`.
pub fn attention_probs(q: &HeadMatrix, k: &HeadMatrix) -> Vec<f64> {
    let mut l = logits(q, k);
    softmax_rows(&mut l, k.rows());
    l
}

/// Sensitivity of every channel of `keys` under `bits`-bit quantization
/// (2, 4, or 16 for the identity). `queries[h]` is `Lq × D` for query head
/// `h`; `keys[j]` is `L × D` for KV head `j`.
pub fn channel_sensitivity(
    queries: &[HeadMatrix],
    keys: &[HeadMatrix],
    bits: u8,
) -> Result<SensitivityReport> {
    check_gqa(queries, keys)?;
    let (q_heads, kv_heads) = (queries.len(), keys.len());
    let d = keys[0].cols();
    let l = keys[0].rows();
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();

    // per KV head, per channel: quantization delta of each token
    let deltas: Vec<Vec<Vec<f64>>> = keys
        .iter()
        .map(|k| {
            (0..d)
                .map(|c| {
                    let col = k.column(c);
                    let fq = fake_quantize_lane(&col, bits)?;
                    Ok(fq
                        .iter()
                        .zip(&col)
                        .map(|(a, b)| *a as f64 - *b as f64)
                        .collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<_>>()?;

    let mse_rows: Vec<Vec<f64>> = (0..q_heads)
        .into_par_iter()
        .map(|h| {
            let q = &queries[h];
            let kv = kv_for(h, q_heads, kv_heads);
            let base_logits = logits(q, &keys[kv]);
            let mut base = base_logits.clone();
            softmax_rows(&mut base, l);
            (0..d)
                .into_par_iter()
                .map(|c| {
                    let delta = &deltas[kv][c];
                    if delta.iter().all(|&x| x == 0.0) {
                        return 0.0;
                    }
                    let mut perturbed = base_logits.clone();
                    for (row, qr) in perturbed.chunks_mut(l).zip(q.iter_rows()) {
                        let w = qr[c] as f64 * inv_sqrt_d;
                        for (x, dk) in row.iter_mut().zip(delta) {
                            *x += w * dk;
                        }
                    }
                    softmax_rows(&mut perturbed, l);
                    mse(&base, &perturbed)
                })
                .collect()
        })
        .collect();

    let ranking = mse_rows.iter().map(|row| rank_desc(row)).collect();
    Ok(SensitivityReport {
        mse: mse_rows,
        ranking,
    })
}
