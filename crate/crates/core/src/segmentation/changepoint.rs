//! Cost-based change point search: binary segmentation and bottom-up merging under the
//! L1 cost, and exact dynamic programming under the linear-kernel (scatter) cost.

use super::{check_count, Segmentation, SegmentationError};
use crate::data::TimeSeries;

/// `Σ_c Σ_{t∈[start,end)} |x_{c,t} − median_c|`.
pub fn l1_cost(x: &TimeSeries, start: usize, end: usize) -> f64 {
    let mut buf = Vec::with_capacity(end - start);
    x.channels()
        .map(|ch| {
            buf.clear();
            buf.extend_from_slice(&ch[start..end]);
            if buf.is_empty() {
                return 0.0;
            }
            let mid = (buf.len() - 1) / 2;
            let (_, median, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
            let median = *median;
            buf.iter().map(|v| (v - median).abs()).sum::<f64>()
        })
        .sum()
}

/// Within-segment scatter `Σ_t ‖x_t − μ‖²` summed over the segments of a shared
/// segmentation. Computed directly with a two-pass mean.
pub fn scatter_cost(x: &TimeSeries, seg: &Segmentation) -> f64 {
    let mut total = 0.0;
    for (c, ch) in x.channels().enumerate() {
        for r in seg.segments(c.min(seg.n_channels() - 1)) {
            let part = &ch[r];
            let mean = part.iter().sum::<f64>() / part.len() as f64;
            total += part.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        }
    }
    total
}

fn too_short(len: usize, reason: impl Into<String>) -> SegmentationError {
    SegmentationError::SeriesTooShort { len, reason: reason.into() }
}

struct Candidate {
    gain: f64,
    split: usize,
}

fn best_split(x: &TimeSeries, start: usize, end: usize, min_size: usize) -> Option<Candidate> {
    if end - start < 2 * min_size {
        return None;
    }
    let whole = l1_cost(x, start, end);
    let mut best: Option<(f64, usize)> = None;
    for s in start + min_size..=end - min_size {
        let cost = l1_cost(x, start, s) + l1_cost(x, s, end);
        if best.is_none_or(|(b, _)| cost < b) {
            best = Some((cost, s));
        }
    }
    best.map(|(cost, split)| Candidate { gain: whole - cost, split })
}

/// Greedy top-down segmentation: repeatedly splits the segment whose best split removes
/// the most L1 cost. Ties resolve to the lowest index.
pub fn segment_binseg(x: &TimeSeries, n: usize, min_size: usize) -> Result<Segmentation, SegmentationError> {
    let len = x.len();
    check_count(n, len)?;
    let min_size = min_size.max(1);
    if len < n * min_size {
        return Err(too_short(len, format!("{n} segments of at least {min_size} points")));
    }
    // (start, end, best split)
    let mut segments = vec![(0, len, best_split(x, 0, len, min_size))];
    while segments.len() < n {
        let mut pick: Option<(usize, f64, usize)> = None;
        for (i, (_, _, cand)) in segments.iter().enumerate() {
            if let Some(c) = cand {
                let better = match pick {
                    None => true,
                    Some((_, g, s)) => c.gain > g || (c.gain == g && c.split < s),
                };
                if better {
                    pick = Some((i, c.gain, c.split));
                }
            }
        }
        let (i, _, split) =
            pick.ok_or_else(|| too_short(len, "no segment can be split further"))?;
        let (start, end, _) = segments[i];
        segments[i] = (start, split, best_split(x, start, split, min_size));
        segments.insert(i + 1, (split, end, best_split(x, split, end, min_size)));
    }
    let mut b: Vec<usize> = segments.iter().map(|s| s.0).collect();
    b.push(len);
    Segmentation::shared(x.n_channels(), b)
}

/// Bottom-up merging from an equal over-split of width `initial_width`: repeatedly merges
/// the adjacent pair whose union adds the least L1 cost.
pub fn segment_bottomup(x: &TimeSeries, n: usize, initial_width: usize) -> Result<Segmentation, SegmentationError> {
    let len = x.len();
    check_count(n, len)?;
    let width = initial_width.max(1);
    let pieces = len.div_ceil(width);
    if pieces < n {
        return Err(too_short(len, format!("over-split of width {width} yields only {pieces} pieces")));
    }
    let mut bounds: Vec<usize> = (0..pieces).map(|i| i * width).chain([len]).collect();
    let mut costs: Vec<f64> = bounds.windows(2).map(|w| l1_cost(x, w[0], w[1])).collect();
    let merge_increase = |bounds: &[usize], costs: &[f64], i: usize| {
        l1_cost(x, bounds[i], bounds[i + 2]) - costs[i] - costs[i + 1]
    };
    let mut increases: Vec<f64> = (0..costs.len().saturating_sub(1))
        .map(|i| merge_increase(&bounds, &costs, i))
        .collect();
    while costs.len() > n {
        let mut best = 0;
        for (i, &inc) in increases.iter().enumerate() {
            if inc < increases[best] {
                best = i;
            }
        }
        costs[best] += costs[best + 1] + increases[best];
        costs.remove(best + 1);
        bounds.remove(best + 1);
        increases.remove(best);
        // refresh the merge costs touching the new segment
        if best > 0 {
            increases[best - 1] = merge_increase(&bounds, &costs, best - 1);
        }
        if best < increases.len() {
            increases[best] = merge_increase(&bounds, &costs, best);
        }
    }
    Segmentation::shared(x.n_channels(), bounds)
}

/// Prefix sums of centred values and squares for O(1) scatter cost queries.
struct ScatterTable {
    sum: Vec<Vec<f64>>,
    sq: Vec<Vec<f64>>,
}

impl ScatterTable {
    fn new(x: &TimeSeries) -> Self {
        let mut sum = Vec::with_capacity(x.n_channels());
        let mut sq = Vec::with_capacity(x.n_channels());
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
        Self { sum, sq }
    }

    fn cost(&self, start: usize, end: usize) -> f64 {
        let m = (end - start) as f64;
        self.sum
            .iter()
            .zip(&self.sq)
            .map(|(s, q)| {
                let a = s[end] - s[start];
                (q[end] - q[start] - a * a / m).max(0.0)
            })
            .sum()
    }
}

/// Exact minimiser of the linear-kernel cost over all placements of `n − 1` change points
/// with segments of at least `min_size` points.
pub fn segment_kernelcpd(x: &TimeSeries, n: usize, min_size: usize) -> Result<Segmentation, SegmentationError> {
    let len = x.len();
    check_count(n, len)?;
    let min_size = min_size.max(1);
    if len < n * min_size {
        return Err(too_short(len, format!("{n} segments of at least {min_size} points")));
    }
    let table = ScatterTable::new(x);
    // best[k][t]: minimal cost of covering [0, t) with k + 1 segments
    let mut best = vec![vec![f64::INFINITY; len + 1]; n];
    let mut arg = vec![vec![0usize; len + 1]; n];
    for t in min_size..=len {
        best[0][t] = table.cost(0, t);
    }
    for k in 1..n {
        let lo = (k + 1) * min_size;
        for t in lo..=len {
            let mut b = f64::INFINITY;
            let mut a = 0;
            for s in k * min_size..=t - min_size {
                let prev = best[k - 1][s];
                if prev.is_finite() {
                    let c = prev + table.cost(s, t);
                    if c < b {
                        b = c;
                        a = s;
                    }
                }
            }
            best[k][t] = b;
            arg[k][t] = a;
        }
    }
    let mut b = vec![len];
    let mut t = len;
    for k in (1..n).rev() {
        t = arg[k][t];
        b.push(t);
    }
    b.push(0);
    b.reverse();
    Segmentation::shared(x.n_channels(), b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_level() -> TimeSeries {
        let mut v = vec![0.0; 50];
        v.extend([10.0; 50]);
        v.extend([-10.0; 50]);
        TimeSeries::univariate(v).unwrap()
    }

    /// Exhaustive search over all 2-change-point placements.
    fn brute_force_pair(x: &TimeSeries, cost: impl Fn(usize, usize) -> f64) -> (usize, usize, f64) {
        let len = x.len();
        let mut best = (0, 0, f64::INFINITY);
        for a in 1..len {
            for b in a + 1..len {
                let c = cost(0, a) + cost(a, b) + cost(b, len);
                if c < best.2 {
                    best = (a, b, c);
                }
            }
        }
        best
    }

    #[test]
    fn binseg_three_levels() {
        let x = three_level();
        let (a, b, _) = brute_force_pair(&x, |s, e| l1_cost(&x, s, e));
        assert_eq!((a, b), (50, 100));
        let seg = segment_binseg(&x, 3, 2).unwrap();
        assert_eq!(seg.channel_boundaries(0), &[0, 50, 100, 150]);
    }

    #[test]
    fn binseg_trivial_cases() {
        let x = three_level();
        assert_eq!(segment_binseg(&x, 1, 2).unwrap().channel_boundaries(0), &[0, 150]);
        let flat = TimeSeries::univariate(vec![3.0; 12]).unwrap();
        assert_eq!(segment_binseg(&flat, 2, 2).unwrap().channel_boundaries(0), &[0, 2, 12]);
        assert!(matches!(segment_binseg(&flat, 7, 2), Err(SegmentationError::SeriesTooShort { .. })));
    }

    #[test]
    fn bottomup_three_levels() {
        let x = three_level();
        let seg = segment_bottomup(&x, 3, 2).unwrap();
        assert_eq!(seg.channel_boundaries(0), &[0, 50, 100, 150]);
        let returned: f64 = seg.segments(0).map(|r| l1_cost(&x, r.start, r.end)).sum();
        let (_, _, oracle) = brute_force_pair(&x, |s, e| l1_cost(&x, s, e));
        assert!((returned - oracle).abs() < 1e-9);
    }

    #[test]
    fn bottomup_no_merges_and_single() {
        let x = TimeSeries::univariate((0..11).map(f64::from).collect()).unwrap();
        let seg = segment_bottomup(&x, 6, 2).unwrap();
        assert_eq!(seg.channel_boundaries(0), &[0, 2, 4, 6, 8, 10, 11]);
        assert_eq!(segment_bottomup(&x, 1, 2).unwrap().channel_boundaries(0), &[0, 11]);
    }

    #[test]
    fn kernelcpd_mean_shift() {
        let mut v = vec![0.0; 30];
        v.extend([5.0; 30]);
        let x = TimeSeries::univariate(v).unwrap();
        let mut best = (0, f64::INFINITY);
        for s in 1..60 {
            let c = scatter_cost(&x, &Segmentation::shared(1, vec![0, s, 60]).unwrap());
            if c < best.1 {
                best = (s, c);
            }
        }
        assert_eq!(best.0, 30);
        assert_eq!(segment_kernelcpd(&x, 2, 2).unwrap().channel_boundaries(0), &[0, 30, 60]);
        assert_eq!(segment_kernelcpd(&x, 1, 2).unwrap().channel_boundaries(0), &[0, 60]);
    }

    #[test]
    fn kernelcpd_multichannel_shared() {
        let x = TimeSeries::from_rows(vec![
            [vec![0.0; 10], vec![1.0; 10]].concat(),
            [vec![2.0; 10], vec![-2.0; 10]].concat(),
        ])
        .unwrap();
        let seg = segment_kernelcpd(&x, 2, 2).unwrap();
        assert_eq!(seg.boundaries(), &[vec![0, 10, 20], vec![0, 10, 20]]);
    }
}
