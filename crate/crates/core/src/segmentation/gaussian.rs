//! Greedy Gaussian segmentation: each segment is modelled as an independent Gaussian per
//! channel with variance `σ² + reg`; boundaries are inserted one at a time, each time
//! picking the position that most increases the total log-likelihood.

use std::f64::consts::PI;

use super::{check_count, Segmentation, SegmentationError};
use crate::data::TimeSeries;

struct MomentTable {
    sum: Vec<Vec<f64>>,
    sq: Vec<Vec<f64>>,
    reg: f64,
}

impl MomentTable {
    fn new(x: &TimeSeries, reg: f64) -> Self {
        let mut sum = Vec::new();
        let mut sq = Vec::new();
        for ch in x.channels() {
            let mean = ch.iter().sum::<f64>() / ch.len() as f64;
            let mut s = vec![0.0; ch.len() + 1];
            let mut q = vec![0.0; ch.len() + 1];
            for (t, v) in ch.iter().enumerate() {
                let v = v - mean;
                s[t + 1] = s[t] + v;
                q[t + 1] = q[t] + v * v;
            }
            sum.push(s);
            sq.push(q);
        }
        Self { sum, sq, reg }
    }

    fn log_likelihood(&self, start: usize, end: usize) -> f64 {
        let m = (end - start) as f64;
        self.sum
            .iter()
            .zip(&self.sq)
            .map(|(s, q)| {
                let a = (s[end] - s[start]) / m;
                let var = ((q[end] - q[start]) / m - a * a).max(0.0);
                let sigma2 = var + self.reg;
                -0.5 * m * ((2.0 * PI * sigma2).ln() + var / sigma2)
            })
            .sum()
    }
}

/// Total log-likelihood of `x` under the segmented Gaussian model of `boundaries`.
pub fn gaussian_log_likelihood(x: &TimeSeries, boundaries: &[usize], reg: f64) -> f64 {
    let table = MomentTable::new(x, reg);
    boundaries.windows(2).map(|w| table.log_likelihood(w[0], w[1])).sum()
}

pub fn segment_greedy_gaussian(
    x: &TimeSeries,
    n: usize,
    reg: f64,
    min_size: usize,
) -> Result<Segmentation, SegmentationError> {
    let len = x.len();
    check_count(n, len)?;
    if !(reg > 0.0 && reg.is_finite()) {
        return Err(SegmentationError::InvalidParameter(format!("reg must be > 0, got {reg}")));
    }
    let min_size = min_size.max(1);
    if len < n * min_size {
        return Err(SegmentationError::SeriesTooShort {
            len,
            reason: format!("{n} segments of at least {min_size} points"),
        });
    }
    let table = MomentTable::new(x, reg);
    let mut bounds = vec![0, len];
    while bounds.len() < n + 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..bounds.len() - 1 {
            let (a, b) = (bounds[i], bounds[i + 1]);
            if b - a < 2 * min_size {
                continue;
            }
            let before = table.log_likelihood(a, b);
            for t in a + min_size..=b - min_size {
                let delta = table.log_likelihood(a, t) + table.log_likelihood(t, b) - before;
                if best.is_none_or(|(d, _, _)| delta > d) {
                    best = Some((delta, t, i + 1));
                }
            }
        }
        let (_, t, at) = best.ok_or_else(|| SegmentationError::SeriesTooShort {
            len,
            reason: "no segment can be split further".into(),
        })?;
        bounds.insert(at, t);
    }
    Segmentation::shared(x.n_channels(), bounds)
}
