//! Fixtures and independent reference computations shared by the integration tests.
#![allow(dead_code)]

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use segshap::attribution::BackgroundSet;
use segshap::model::NearestCentroid;
use segshap::{Classifier, Segmentation, TimeSeries};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn series(rows: Vec<Vec<f64>>) -> TimeSeries {
    TimeSeries::from_rows(rows).unwrap()
}

pub fn random_series<R: Rng>(rng: &mut R, d: usize, len: usize) -> TimeSeries {
    let values = (0..d * len).map(|_| rng.random_range(-2.0..2.0)).collect();
    TimeSeries::new(d, len, values).unwrap()
}

/// Random strictly increasing boundaries `0 = b_0 < ... < b_n = len`.
pub fn random_boundaries<R: Rng>(rng: &mut R, len: usize, n: usize) -> Vec<usize> {
    let mut inner: Vec<usize> = sample(rng, len - 1, n - 1).into_iter().map(|i| i + 1).collect();
    inner.sort_unstable();
    let mut b = vec![0];
    b.extend(inner);
    b.push(len);
    b
}

pub fn random_centroid_model<R: Rng>(rng: &mut R, classes: usize, d: usize, len: usize) -> NearestCentroid {
    let centroids = (0..classes).map(|_| random_series(rng, d, len)).collect();
    let names = (0..classes).map(|c| format!("c{c}")).collect();
    NearestCentroid::from_centroids(centroids, names).unwrap()
}

/// `v(T)`: mean predicted probability of `class` with features outside `T` taken from
/// each background instance.
pub fn coalition_value(
    model: &dyn Classifier,
    x: &TimeSeries,
    seg: &Segmentation,
    bg: &BackgroundSet,
    class: usize,
    members: &[bool],
) -> f64 {
    let (d, len) = x.shape();
    let mut feature_of = vec![0usize; d * len];
    let mut f = 0;
    for c in 0..d {
        for range in seg.segments(c) {
            for t in range {
                feature_of[c * len + t] = f;
            }
            f += 1;
        }
    }
    let batch: Vec<TimeSeries> = bg
        .instances()
        .iter()
        .map(|b| {
            let values = (0..d * len)
                .map(|i| if members[feature_of[i]] { x.as_slice()[i] } else { b.as_slice()[i] })
                .collect();
            TimeSeries::new(d, len, values).unwrap()
        })
        .collect();
    let proba = model.predict_proba(&batch).unwrap();
    proba.iter().map(|row| row[class]).sum::<f64>() / proba.len() as f64
}

/// Shapley values by the subset formula
/// `φ_j = Σ_{T ⊆ N∖{j}} |T|!(F−|T|−1)!/F! · (v(T ∪ {j}) − v(T))`.
pub fn shapley_by_subsets(value: impl Fn(&[bool]) -> f64, n_features: usize) -> Vec<f64> {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let values: Vec<f64> = (0..1usize << n_features)
        .map(|mask| value(&(0..n_features).map(|j| mask >> j & 1 == 1).collect::<Vec<_>>()))
        .collect();
    (0..n_features)
        .map(|j| {
            (0..1usize << n_features)
                .filter(|mask| mask >> j & 1 == 0)
                .map(|mask| {
                    let size = mask.count_ones() as usize;
                    let weight = fact(size) * fact(n_features - size - 1) / fact(n_features);
                    weight * (values[mask | 1 << j] - values[mask])
                })
                .sum()
        })
        .collect()
}

/// Shannon entropy of segment-length proportions over `ln n`.
pub fn entropy_by_formula(lengths: &[usize]) -> f64 {
    if lengths.len() == 1 {
        return 1.0;
    }
    let total: usize = lengths.iter().sum();
    let h: f64 = lengths
        .iter()
        .map(|&l| {
            let p = l as f64 / total as f64;
            -p * p.ln()
        })
        .sum();
    h / (lengths.len() as f64).ln()
}

/// Within-segment scatter `Σ ||x_t − μ||²`, summed over segments.
pub fn scatter(x: &TimeSeries, boundaries: &[usize]) -> f64 {
    boundaries
        .windows(2)
        .map(|w| {
            x.channels()
                .map(|ch| {
                    let seg = &ch[w[0]..w[1]];
                    let mean = seg.iter().sum::<f64>() / seg.len() as f64;
                    seg.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum()
}

/// Neumaier-compensated sum, accurate to a few ulps regardless of length.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}
