//! Classification score profile segmentation, applied channel by channel.
//!
//! Sliding windows of length `period` are z-normalised and matched to their nearest
//! neighbour outside a trivial-match zone of `period`. For a split `s`, windows starting
//! before `s` are labelled left and the rest right; the profile value is the macro F1
//! score of leave-one-out 1-NN classification of those labels. Peaks are taken
//! recursively on the sub-segments.

use super::nnsegment::{euclid, znorm};
use super::{check_count, pad_boundaries, Segmentation, SegmentationError, SegmentationMode};
use crate::data::TimeSeries;

fn nearest_neighbours(values: &[f64], period: usize) -> Vec<usize> {
    let n = values.len() + 1 - period;
    let windows: Vec<Vec<f64>> = (0..n).map(|i| znorm(&values[i..i + period])).collect();
    (0..n)
        .map(|i| {
            let mut best = (usize::MAX, f64::INFINITY);
            for j in (0..n).filter(|&j| j.abs_diff(i) >= period) {
                let d = euclid(&windows[i], &windows[j]);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best.0
        })
        .collect()
}

/// Score profile over the admissible splits of one channel: `(split, macro F1)` for every
/// split leaving at least `period` windows on each side.
pub fn clasp_score_profile(values: &[f64], period: usize) -> Vec<(usize, f64)> {
    if period < 2 || values.len() < 4 * period {
        return Vec::new();
    }
    let nn = nearest_neighbours(values, period);
    let n = nn.len();
    // A(s) = #{max(i, nn) < s}, D(s) = #{min(i, nn) >= s}
    let mut max_hist = vec![0usize; n + 1];
    let mut min_hist = vec![0usize; n + 1];
    // B(s) = #{i < s <= nn}, C(s) = #{nn < s <= i}
    let mut b_diff = vec![0i64; n + 2];
    let mut c_diff = vec![0i64; n + 2];
    for (i, &j) in nn.iter().enumerate() {
        max_hist[i.max(j)] += 1;
        min_hist[i.min(j)] += 1;
        if j > i {
            b_diff[i + 1] += 1;
            b_diff[j + 1] -= 1;
        } else {
            c_diff[j + 1] += 1;
            c_diff[i + 1] -= 1;
        }
    }
    let mut below_max = vec![0usize; n + 1];
    for s in 1..=n {
        below_max[s] = below_max[s - 1] + max_hist[s - 1];
    }
    let mut at_or_above_min = vec![0usize; n + 1];
    for s in (0..n).rev() {
        at_or_above_min[s] = at_or_above_min[s + 1] + min_hist[s];
    }
    let mut b_run = 0i64;
    let mut c_run = 0i64;
    let mut profile = Vec::new();
    for s in 0..=n {
        b_run += b_diff[s];
        c_run += c_diff[s];
        if s < period || s + period > n {
            continue;
        }
        let (a, d) = (below_max[s] as f64, at_or_above_min[s] as f64);
        let (b, c) = (b_run as f64, c_run as f64);
        let f1 = |tp: f64| if tp > 0.0 { 2.0 * tp / (2.0 * tp + b + c) } else { 0.0 };
        profile.push((s, 0.5 * (f1(a) + f1(d))));
    }
    profile
}

fn peak(values: &[f64], start: usize, end: usize, period: usize) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (s, score) in clasp_score_profile(&values[start..end], period) {
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, start + s));
        }
    }
    best
}

fn channel_change_points(values: &[f64], n: usize, period: usize) -> Vec<usize> {
    let len = values.len();
    let mut segments = vec![(0, len, peak(values, 0, len, period))];
    while segments.len() < n {
        let mut pick: Option<(usize, f64, usize)> = None;
        for (i, (_, _, cand)) in segments.iter().enumerate() {
            if let Some((score, split)) = *cand {
                let better = match pick {
                    None => true,
                    Some((_, s, p)) => score > s || (score == s && split < p),
                };
                if better {
                    pick = Some((i, score, split));
                }
            }
        }
        let Some((i, _, split)) = pick else { break };
        let (start, end, _) = segments[i];
        segments[i] = (start, split, peak(values, start, split, period));
        segments.insert(i + 1, (split, end, peak(values, split, end, period)));
    }
    segments.iter().skip(1).map(|s| s.0).collect()
}

pub fn segment_clasp(x: &TimeSeries, n: usize, period: usize) -> Result<Segmentation, SegmentationError> {
    let len = x.len();
    check_count(n, len)?;
    if period < 2 {
        return Err(SegmentationError::InvalidParameter(format!("period must be >= 2, got {period}")));
    }
    if len < 4 * period {
        return Err(SegmentationError::SeriesTooShort {
            len,
            reason: format!("need at least {} points for period {period}", 4 * period),
        });
    }
    let boundaries = x
        .channels()
        .map(|ch| pad_boundaries(len, n, channel_change_points(ch, n, period)))
        .collect();
    Segmentation::new(SegmentationMode::PerChannel, boundaries)
}
