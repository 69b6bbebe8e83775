//! Order-deterministic Monte-Carlo reductions and small fitting helpers.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Paths per sequential batch. The reduction tree depends only on this and
/// the sample count, never on the number of worker threads.
pub const BATCH: usize = 32;

/// Per-entry running mean and centred second moment of a vector observable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunningStats {
    pub count: usize,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl RunningStats {
    pub fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.mean.len());
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
    }

    /// Unbiased sample variance per entry.
    pub fn variance(&self) -> Vec<f64> {
        let denom = (self.count.max(2) - 1) as f64;
        self.m2.iter().map(|s| s / denom).collect()
    }

    /// Standard error of the mean per entry.
    pub fn standard_error(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.variance().into_iter().map(|v| (v / n).sqrt()).collect()
    }
}

/// Merges parts in a fixed balanced binary tree over their order.
pub fn tree_merge(mut parts: Vec<RunningStats>) -> RunningStats {
    assert!(!parts.is_empty());
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.merge(&b);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap()
}

/// Evaluates `observe(m, out)` for `m in 0..samples` in parallel and reduces
/// the results with a bit-reproducible order.
pub fn ensemble_stats<F>(samples: usize, len: usize, observe: F) -> Result<RunningStats>
where
    F: Fn(usize, &mut [f64]) -> Result<()> + Sync,
{
    if samples < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: samples });
    }
    let batches: Vec<usize> = (0..samples.div_ceil(BATCH)).collect();
    let parts = batches
        .par_iter()
        .map(|&b| {
            let mut acc = RunningStats::new(len);
            let mut buf = vec![0.0; len];
            for m in b * BATCH..((b + 1) * BATCH).min(samples) {
                buf.iter_mut().for_each(|v| *v = 0.0);
                observe(m, &mut buf)?;
                acc.push(&buf);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tree_merge(parts))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
