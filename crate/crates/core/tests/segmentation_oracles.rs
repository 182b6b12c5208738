mod common;

use std::f64::consts::PI;

use common::*;
use rand_distr::{Distribution, Normal};
use segshap::segmentation::{
    gaussian_log_likelihood, information_gain, l1_cost, segment_binseg, segment_bottomup, segment_clasp,
    segment_greedy_gaussian, segment_infogain, segment_kernelcpd, segment_nn,
};
use segshap::TimeSeries;

fn three_levels() -> TimeSeries {
    let mut v = vec![0.0; 50];
    v.extend([10.0; 50]);
    v.extend([-10.0; 50]);
    TimeSeries::univariate(v).unwrap()
}

fn total_l1(x: &TimeSeries, b: &[usize]) -> f64 {
    b.windows(2).map(|w| l1_cost(x, w[0], w[1])).sum()
}

/// Every placement of two change points with segments of at least `min` points.
fn two_cut_placements(len: usize, min: usize) -> impl Iterator<Item = [usize; 4]> {
    (min..len).flat_map(move |a| (a + min..=len - min).map(move |b| [0, a, b, len]))
}

#[test]
fn greedy_l1_methods_hit_the_exhaustive_optimum() {
    let x = three_levels();
    let (best, cost) = two_cut_placements(150, 2)
        .map(|b| (b, total_l1(&x, &b)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert_eq!(best, [0, 50, 100, 150]);
    assert_eq!(cost, 0.0);
    for seg in [segment_binseg(&x, 3, 2).unwrap(), segment_bottomup(&x, 3, 2).unwrap()] {
        assert_eq!(seg.channel_boundaries(0), best);
    }
}

#[test]
fn kernelcpd_matches_exhaustive_two_cut_search() {
    let mut r = rng(7);
    for _ in 0..10 {
        let x = random_series(&mut r, 2, 30);
        let oracle = two_cut_placements(30, 2).map(|b| scatter(&x, &b)).fold(f64::INFINITY, f64::min);
        let seg = segment_kernelcpd(&x, 3, 2).unwrap();
        assert!((scatter(&x, seg.channel_boundaries(0)) - oracle).abs() < 1e-9);
    }
}

#[test]
fn kernelcpd_mean_shift() {
    let mut v = vec![0.0; 30];
    v.extend([5.0; 30]);
    let x = TimeSeries::univariate(v).unwrap();
    let scan = (1..60).min_by(|&a, &b| scatter(&x, &[0, a, 60]).total_cmp(&scatter(&x, &[0, b, 60]))).unwrap();
    assert_eq!(scan, 30);
    assert_eq!(segment_kernelcpd(&x, 2, 2).unwrap().channel_boundaries(0), [0, 30, 60]);
}

#[test]
fn infogain_matches_exhaustive_one_cut_scan() {
    let mut r = rng(3);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let rows: Vec<Vec<f64>> = (0..2)
        .map(|c| {
            (0..80)
                .map(|t| {
                    let high = (t < 40) == (c == 0);
                    (if high { 3.0 } else { 1.0 }) + noise.sample(&mut r)
                })
                .collect()
        })
        .collect();
    let x = series(rows);
    let scan = (2..=78)
        .max_by(|&a, &b| information_gain(&x, &[0, a, 80]).total_cmp(&information_gain(&x, &[0, b, 80])).then(b.cmp(&a)))
        .unwrap();
    assert_eq!(scan, 40);
    let out = segment_infogain(&x, 2, 2).unwrap();
    assert_eq!(out.segmentation.channel_boundaries(0), [0, 40, 80]);
}

#[test]
fn greedy_gaussian_first_cut_is_the_likelihood_argmax() {
    for seed in 0..10 {
        let mut r = rng(seed);
        let quiet = Normal::new(0.0, 0.1).unwrap();
        let loud = Normal::new(0.0, 2.0).unwrap();
        let v: Vec<f64> = (0..100).map(|t| if t < 50 { quiet.sample(&mut r) } else { loud.sample(&mut r) }).collect();
        let x = TimeSeries::univariate(v).unwrap();
        let scan = (2..=98)
            .max_by(|&a, &b| {
                gaussian_log_likelihood(&x, &[0, a, 100], 1e-4)
                    .total_cmp(&gaussian_log_likelihood(&x, &[0, b, 100], 1e-4))
                    .then(b.cmp(&a))
            })
            .unwrap();
        let cut = segment_greedy_gaussian(&x, 2, 1e-4, 2).unwrap().channel_boundaries(0)[1];
        assert_eq!(cut, scan, "seed {seed}");
        assert!((45..=55).contains(&cut), "seed {seed}: {cut}");
    }
}

#[test]
fn clasp_separates_sine_from_square() {
    let v: Vec<f64> = (0..200)
        .map(|t| if t < 100 { (2.0 * PI * t as f64 / 10.0).sin() } else if (t / 5) % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let seg = segment_clasp(&TimeSeries::univariate(v).unwrap(), 2, 4).unwrap();
    let cut = seg.channel_boundaries(0)[1];
    assert!(cut.abs_diff(100) <= 4, "{cut}");
}

/// Sine of period 40 cut into windows of 10; windows 20..24 replaced by a sawtooth of
/// period 10.
fn sine_with_sawtooth_block() -> Vec<f64> {
    (0..400)
        .map(|t| {
            if (200..240).contains(&t) {
                (t % 10) as f64 / 10.0
            } else {
                (2.0 * PI * t as f64 / 40.0).sin()
            }
        })
        .collect()
}

/// Every window's nearest non-adjacent window under z-normalised distance, by
/// exhaustive comparison, and the positions where neighbour succession breaks.
fn brute_force_flags(v: &[f64], window: usize) -> Vec<(usize, f64)> {
    let z = |w: &[f64]| {
        let m = w.iter().sum::<f64>() / w.len() as f64;
        let s = (w.iter().map(|x| (x - m).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
        w.iter().map(|x| (x - m) / s).collect::<Vec<_>>()
    };
    let ws: Vec<Vec<f64>> = v.chunks(window).map(z).collect();
    let d = |i: usize, j: usize| ws[i].iter().zip(&ws[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let nn: Vec<usize> = (0..ws.len())
        .map(|i| {
            let mut cands: Vec<usize> = (0..ws.len()).filter(|j| j.abs_diff(i) > 1).collect();
            cands.sort_by(|&a, &b| d(i, a).total_cmp(&d(i, b)).then(a.cmp(&b)));
            cands[0]
        })
        .collect();
    (0..ws.len() - 1)
        .filter_map(|i| {
            let succ = nn[i] + 1;
            if succ >= ws.len() || succ.abs_diff(i + 1) <= 1 {
                return None;
            }
            let gap = d(i + 1, succ) - d(i + 1, nn[i + 1]);
            (gap > 1e-9).then_some(((i + 1) * window, gap))
        })
        .collect()
}

#[test]
fn nnsegment_flags_the_anomaly_start() {
    let v = sine_with_sawtooth_block();
    let flags = brute_force_flags(&v, 10);
    let positions: Vec<usize> = flags.iter().map(|f| f.0).collect();
    assert_eq!(positions, [200, 220, 240]);
    assert!(flags.windows(2).all(|w| (w[0].1 - w[1].1).abs() < 1e-9));

    let x = TimeSeries::univariate(v).unwrap();
    assert_eq!(segment_nn(&x, 2, 10).unwrap().channel_boundaries(0), [0, 200, 400]);
    assert_eq!(segment_nn(&x, 4, 10).unwrap().channel_boundaries(0), [0, 200, 220, 240, 400]);
    // a fifth segment has no flag left and comes from equal-split padding
    assert_eq!(segment_nn(&x, 5, 10).unwrap().n_segments(0), 5);
}
