//! Information-gain segmentation.
//!
//! Each channel is min-max scaled to `[0, 1]` and paired with its complement `1 − x`, so
//! every timepoint carries unit mass per original channel. A segment's entropy is the
//! Shannon entropy of its mass distribution over the augmented channels; the gain of a
//! segmentation is the whole-series entropy minus the length-weighted segment entropies.

use super::{check_count, equal_boundaries, Segmentation, SegmentationError};
use crate::data::TimeSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct InfoGainOutcome {
    pub segmentation: Segmentation,
    /// Set when the signal had zero range everywhere and the equal split was returned.
    pub degenerate: bool,
}

struct MassTable {
    prefix: Vec<Vec<f64>>,
}

impl MassTable {
    fn new(x: &TimeSeries) -> Self {
        let mut prefix = Vec::with_capacity(2 * x.n_channels());
        for ch in x.channels() {
            let (lo, hi) = ch.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
            let range = hi - lo;
            let scaled: Vec<f64> = ch
                .iter()
                .map(|v| if range > 0.0 { (v - lo) / range } else { 0.0 })
                .collect();
            for flip in [false, true] {
                let mut p = vec![0.0; ch.len() + 1];
                for (t, v) in scaled.iter().enumerate() {
                    p[t + 1] = p[t] + if flip { 1.0 - v } else { *v };
                }
                prefix.push(p);
            }
        }
        Self { prefix }
    }

    fn entropy(&self, start: usize, end: usize) -> f64 {
        let masses: Vec<f64> =
            self.prefix.iter().map(|p| (p[end] - p[start]).max(0.0)).collect();
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        masses
            .iter()
            .filter(|&&m| m > 0.0)
            .map(|&m| {
                let p = m / total;
                -p * p.ln()
            })
            .sum()
    }

    fn weighted(&self, start: usize, end: usize, len: usize) -> f64 {
        (end - start) as f64 / len as f64 * self.entropy(start, end)
    }
}

/// Information gain of a shared boundary list on `x`.
pub fn information_gain(x: &TimeSeries, boundaries: &[usize]) -> f64 {
    let table = MassTable::new(x);
    let len = x.len();
    table.entropy(0, len) - boundaries.windows(2).map(|w| table.weighted(w[0], w[1], len)).sum::<f64>()
}

/// Greedy top-down search adding one change point at a time, each maximising the
/// information gain of the whole segmentation.
pub fn segment_infogain(x: &TimeSeries, n: usize, min_size: usize) -> Result<InfoGainOutcome, SegmentationError> {
    let len = x.len();
    check_count(n, len)?;
    let min_size = min_size.max(1);
    if len < n * min_size {
        return Err(SegmentationError::SeriesTooShort {
            len,
            reason: format!("{n} segments of at least {min_size} points"),
        });
    }
    let flat = x.channels().all(|ch| ch.iter().all(|&v| v == ch[0]));
    if flat {
        let segmentation = Segmentation::shared(x.n_channels(), equal_boundaries(len, n)?)?;
        return Ok(InfoGainOutcome { segmentation, degenerate: true });
    }
    let table = MassTable::new(x);
    let mut bounds = vec![0, len];
    while bounds.len() < n + 1 {
        // (delta, position, insertion index)
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..bounds.len() - 1 {
            let (a, b) = (bounds[i], bounds[i + 1]);
            if b - a < 2 * min_size {
                continue;
            }
            let before = table.weighted(a, b, len);
            for t in a + min_size..=b - min_size {
                let delta = before - table.weighted(a, t, len) - table.weighted(t, b, len);
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
    Ok(InfoGainOutcome { segmentation: Segmentation::shared(x.n_channels(), bounds)?, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dominance_flip() -> TimeSeries {
        let a: Vec<f64> = (0..80).map(|t| if t < 40 { 3.0 } else { 1.0 }).collect();
        let b: Vec<f64> = (0..80).map(|t| if t < 40 { 1.0 } else { 3.0 }).collect();
        TimeSeries::from_rows(vec![a, b]).unwrap()
    }

    #[test]
    fn recovers_dominance_flip() {
        let x = dominance_flip();
        let mut best = (0, f64::NEG_INFINITY);
        for t in 1..80 {
            let g = information_gain(&x, &[0, t, 80]);
            if g > best.1 {
                best = (t, g);
            }
        }
        assert_eq!(best.0, 40);
        let out = segment_infogain(&x, 2, 2).unwrap();
        assert!(!out.degenerate);
        assert_eq!(out.segmentation.channel_boundaries(0), &[0, 40, 80]);
    }

    #[test]
    fn single_segment() {
        let out = segment_infogain(&dominance_flip(), 1, 2).unwrap();
        assert_eq!(out.segmentation.channel_boundaries(0), &[0, 80]);
    }

    #[test]
    fn constant_signal_falls_back() {
        let x = TimeSeries::univariate(vec![2.5; 30]).unwrap();
        let out = segment_infogain(&x, 3, 2).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.segmentation.channel_boundaries(0), &[0, 10, 20, 30]);
    }

    #[test]
    fn univariate_step_is_found() {
        let v: Vec<f64> = (0..60).map(|t| if t < 25 { 0.0 } else { 1.0 }).collect();
        let out = segment_infogain(&TimeSeries::univariate(v).unwrap(), 2, 2).unwrap();
        assert_eq!(out.segmentation.channel_boundaries(0), &[0, 25, 60]);
    }
}
