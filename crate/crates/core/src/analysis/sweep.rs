//! Boost-rate sweep: attention error as a function of the fraction of key
//! channels kept at 4 bits, for magnitude-guided and random selection.

use std::fmt::Write;

use rayon::prelude::*;

use super::sensitivity::attention_probs;
use super::{check_gqa, kv_for, mse};
use crate::error::{Error, Result};
use crate::quant::{channel_scores, fake_quantize_matrix, select_boost, Axis, Heuristic};
use crate::tensor::HeadMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub fraction: f64,
    /// `magnitude` or `random`.
    pub heuristic: &'static str,
    /// Attention-probability MSE, averaged over query heads and runs.
    pub mean_mse: f64,
    /// Largest distance of a single run's MSE from `mean_mse`.
    pub max_dev: f64,
    pub runs: usize,
}

/// `fraction,heuristic,mean_mse,max_dev,runs` table.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("fraction,heuristic,mean_mse,max_dev,runs\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{:e},{:e},{}",
            r.fraction, r.heuristic, r.mean_mse, r.max_dev, r.runs
        )
        .unwrap();
    }
    out
}

/// Fake-quantizes every KV head of `keys` per channel over all tokens, 4 bits
/// on the channels chosen by `heuristic`, 2 bits elsewhere, and returns the
/// attention MSE against the full-precision keys averaged over query heads.
fn run(
    queries: &[HeadMatrix],
    keys: &[HeadMatrix],
    baseline: &[Vec<f64>],
    fraction: f64,
    heuristic: Heuristic,
) -> Result<f64> {
    let quantized = keys
        .iter()
        .enumerate()
        .map(|(j, k)| {
            let sel = select_boost(&channel_scores(k)?, fraction, heuristic.derive(j as u64))?;
            fake_quantize_matrix(k, Axis::PerChannel, &sel.lane_bits(k.cols()))
        })
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = queries
        .iter()
        .enumerate()
        .map(|(h, q)| {
            let kv = kv_for(h, queries.len(), keys.len());
            mse(&baseline[h], &attention_probs(q, &quantized[kv]))
        })
        .sum();
    Ok(total / queries.len() as f64)
}

/// One row per `(fraction, heuristic)`: magnitude selection (if `magnitude`)
/// and random selection averaged over `random_seeds` (if non-empty).
pub fn boost_sweep(
    queries: &[HeadMatrix],
    keys: &[HeadMatrix],
    fractions: &[f64],
    magnitude: bool,
    random_seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    check_gqa(queries, keys)?;
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::InvalidConfig(format!(
            "boost fraction {f} not in [0, 1]"
        )));
    }
    let baseline: Vec<Vec<f64>> = queries
        .par_iter()
        .enumerate()
        .map(|(h, q)| attention_probs(q, &keys[kv_for(h, queries.len(), keys.len())]))
        .collect();

    let mut jobs: Vec<(f64, &'static str, Vec<Heuristic>)> = Vec::new();
    for &f in fractions {
        if magnitude {
            jobs.push((f, "magnitude", vec![Heuristic::Magnitude]));
        }
        if !random_seeds.is_empty() {
            let hs = random_seeds
                .iter()
                .map(|&seed| Heuristic::Random { seed })
                .collect();
            jobs.push((f, "random", hs));
        }
    }
    jobs.into_par_iter()
        .map(|(fraction, name, heuristics)| {
            let mses = heuristics
                .par_iter()
                .map(|&h| run(queries, keys, &baseline, fraction, h))
                .collect::<Result<Vec<f64>>>()?;
            let mean = mses.iter().sum::<f64>() / mses.len() as f64;
            let max_dev = mses.iter().map(|m| (m - mean).abs()).fold(0.0, f64::max);
            Ok(SweepRow {
                fraction,
                heuristic: name,
                mean_mse: mean,
                max_dev,
                runs: mses.len(),
            })
        })
        .collect()
}
