//! Nearest-neighbour segmentation, applied channel by channel.
//!
//! The channel is cut into non-overlapping windows; each window is matched to its nearest
//! non-adjacent window under z-normalised Euclidean distance. Consecutive windows inside a
//! repeating motif have consecutive neighbours, so a change point is flagged at the start
//! of `w_{i+1}` when the successor of `w_i`'s neighbour is not also a nearest neighbour of
//! `w_{i+1}`. The flag's score is that distance gap.

use super::{check_count, pad_boundaries, Segmentation, SegmentationError, SegmentationMode};
use crate::data::TimeSeries;

const TIE_TOLERANCE: f64 = 1e-9;

pub(crate) fn znorm(w: &[f64]) -> Vec<f64> {
    let m = w.len() as f64;
    let mean = w.iter().sum::<f64>() / m;
    let std = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m).sqrt();
    if std <= 1e-12 {
        vec![0.0; w.len()]
    } else {
        w.iter().map(|v| (v - mean) / std).collect()
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `(position, gap)` for every flagged change point of one channel.
fn flag_channel(values: &[f64], window: usize) -> Vec<(usize, f64)> {
    let nw = values.len() / window;
    let windows: Vec<Vec<f64>> = (0..nw).map(|i| znorm(&values[i * window..(i + 1) * window])).collect();
    let dist = |i: usize, j: usize| euclid(&windows[i], &windows[j]);
    let nn: Vec<Option<usize>> = (0..nw)
        .map(|i| {
            let mut best: Option<(usize, f64)> = None;
            for j in (0..nw).filter(|&j| j.abs_diff(i) > 1) {
                let d = dist(i, j);
                if best.is_none_or(|(_, b)| d < b) {
                    best = Some((j, d));
                }
            }
            best.map(|(j, _)| j)
        })
        .collect();
    let mut flags = Vec::new();
    for i in 0..nw.saturating_sub(1) {
        let (Some(a), Some(b)) = (nn[i], nn[i + 1]) else { continue };
        let succ = a + 1;
        if succ >= nw || succ.abs_diff(i + 1) <= 1 {
            continue;
        }
        let gap = dist(i + 1, succ) - dist(i + 1, b);
        if gap > TIE_TOLERANCE {
            flags.push(((i + 1) * window, gap));
        }
    }
    flags
}

/// Up to `k` flag positions with the largest gaps. Gaps within [`TIE_TOLERANCE`] of each
/// other count as equal, and the earlier position wins.
fn strongest_flags(mut flags: Vec<(usize, f64)>, k: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(k);
    while chosen.len() < k && !flags.is_empty() {
        let top = flags.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
        let pick = flags
            .iter()
            .enumerate()
            .filter(|(_, f)| f.1 >= top - TIE_TOLERANCE)
            .min_by_key(|(_, f)| f.0)
            .map(|(i, _)| i)
            .expect("nonempty");
        chosen.push(flags.swap_remove(pick).0);
    }
    chosen
}

/// Per-channel change points reduced (largest gap first) or padded (equal-split points)
/// to exactly `n − 1` per channel.
pub fn segment_nn(x: &TimeSeries, n: usize, window: usize) -> Result<Segmentation, SegmentationError> {
    let len = x.len();
    check_count(n, len)?;
    if window < 2 {
        return Err(SegmentationError::InvalidParameter(format!("window must be >= 2, got {window}")));
    }
    if len < 3 * window {
        return Err(SegmentationError::SeriesTooShort {
            len,
            reason: format!("need at least three windows of {window}"),
        });
    }
    let boundaries = x
        .channels()
        .map(|ch| {
            let chosen = strongest_flags(flag_channel(ch, window), n - 1);
            pad_boundaries(len, n, chosen)
        })
        .collect();
    Segmentation::new(SegmentationMode::PerChannel, boundaries)
}
