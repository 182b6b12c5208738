//! A reduced MiniRocket: 84 fixed length-9 kernels, dyadic dilations, PPV pooling, and a
//! one-vs-rest ridge classifier solved in closed form.

use nalgebra::DMatrix;
use rand::Rng;

use super::{check_batch, check_classes, softmax, Classifier, ModelError, ProbaMatrix};
use crate::data::{DataError, LabeledDataset, TimeSeries};
use crate::rng::substream;

const KERNEL_LEN: usize = 9;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq)]
pub struct MiniRocketParams {
    pub n_features: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for MiniRocketParams {
    fn default() -> Self {
        Self { n_features: 1000, lambda: 1.0, seed: 0 }
    }
}

/// The positions of the three `+2` weights of each kernel (all other weights are `−1`),
/// in lexicographic order. There are `C(9, 3) = 84` of them.
pub fn kernel_patterns() -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(84);
    for a in 0..KERNEL_LEN {
        for b in a + 1..KERNEL_LEN {
            for c in b + 1..KERNEL_LEN {
                out.push([a, b, c]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
struct FeatureGroup {
    kernel: usize,
    dilation: usize,
    channel: usize,
    biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiniRocketRidge {
    patterns: Vec<[usize; 3]>,
    groups: Vec<FeatureGroup>,
    feature_mean: Vec<f64>,
    feature_scale: Vec<f64>,
    /// `n_features × n_classes`
    weights: DMatrix<f64>,
    intercept: Vec<f64>,
    class_names: Vec<String>,
    shape: (usize, usize),
}

/// Zero-padded "same" convolution of one channel with a `{−1, +2}` kernel.
fn convolve(values: &[f64], pattern: &[usize; 3], dilation: usize) -> Vec<f64> {
    let len = values.len() as isize;
    let half = (KERNEL_LEN / 2) as isize;
    (0..len)
        .map(|t| {
            let mut acc = 0.0;
            for k in 0..KERNEL_LEN {
                let idx = t + (k as isize - half) * dilation as isize;
                if (0..len).contains(&idx) {
                    let w = if pattern.contains(&k) { 2.0 } else { -1.0 };
                    acc += w * values[idx as usize];
                }
            }
            acc
        })
        .collect()
}

/// Proportion of positive values of `conv − bias`.
fn ppv(conv: &[f64], bias: f64) -> f64 {
    conv.iter().filter(|&&v| v > bias).count() as f64 / conv.len() as f64
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl MiniRocketRidge {
    pub fn n_features(&self) -> usize {
        self.feature_mean.len()
    }

    /// Raw PPV features of one instance.
    pub fn transform(&self, x: &TimeSeries) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_features());
        for g in &self.groups {
            let conv = convolve(x.channel(g.channel), &self.patterns[g.kernel], g.dilation);
            out.extend(g.biases.iter().map(|&b| ppv(&conv, b)));
        }
        out
    }

    fn scores(&self, x: &TimeSeries) -> Vec<f64> {
        let f = self.transform(x);
        let z: Vec<f64> = f
            .iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect();
        (0..self.class_names.len())
            .map(|c| self.intercept[c] + self.weights.column(c).iter().zip(&z).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

pub fn train_minirocket_ridge(
    train: &LabeledDataset,
    n_features: usize,
    lambda: f64,
    seed: u64,
) -> Result<MiniRocketRidge, ModelError> {
    let (d, len) = train.shape().ok_or(DataError::EmptyData)?;
    if len < KERNEL_LEN {
        return Err(ModelError::SeriesTooShort { len, reason: "kernels span 9 timepoints".into() });
    }
    if n_features < 84 {
        return Err(ModelError::InvalidParameter(format!("n_features must be >= 84, got {n_features}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ModelError::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    check_classes(train)?;

    let patterns = kernel_patterns();
    // dilations 2^j with receptive field (9 − 1)·2^j + 1 <= L
    let mut dilations = vec![1usize];
    while (KERNEL_LEN - 1) * dilations.last().unwrap() * 2 < len {
        dilations.push(dilations.last().unwrap() * 2);
    }
    let per_group = (n_features / (patterns.len() * dilations.len())).max(1);

    let mut rng = substream(seed, &["minirocket", "biases"]);
    let mut groups = Vec::with_capacity(patterns.len() * dilations.len());
    let mut quantile_index = 0usize;
    for &dilation in &dilations {
        for kernel in 0..patterns.len() {
            let example = &train.instances()[rng.random_range(0..train.len())];
            let channel = if d > 1 { rng.random_range(0..d) } else { 0 };
            let mut conv = convolve(example.channel(channel), &patterns[kernel], dilation);
            conv.sort_by(f64::total_cmp);
            let biases = (0..per_group)
                .map(|_| {
                    quantile_index += 1;
                    quantile(&conv, (quantile_index as f64 * GOLDEN).fract())
                })
                .collect();
            groups.push(FeatureGroup { kernel, dilation, channel, biases });
        }
    }

    let mut model = MiniRocketRidge {
        patterns,
        groups,
        feature_mean: Vec::new(),
        feature_scale: Vec::new(),
        weights: DMatrix::zeros(0, 0),
        intercept: Vec::new(),
        class_names: train.class_names().to_vec(),
        shape: (d, len),
    };
    let rows: Vec<Vec<f64>> = train.instances().iter().map(|x| model.transform(x)).collect();
    let n = rows.len();
    let p = rows[0].len();
    let mut mean = vec![0.0; p];
    for r in &rows {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / n as f64);
    }
    let mut scale = vec![0.0; p];
    for r in &rows {
        scale.iter_mut().zip(r.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m).powi(2) / n as f64);
    }
    scale.iter_mut().for_each(|s| *s = if *s > 1e-12 { s.sqrt() } else { 1.0 });
    let x = DMatrix::from_fn(n, p, |i, j| (rows[i][j] - mean[j]) / scale[j]);

    let n_classes = train.n_classes();
    let targets = DMatrix::from_fn(n, n_classes, |i, c| if train.labels()[i] == c { 1.0 } else { -1.0 });
    let intercept: Vec<f64> = (0..n_classes).map(|c| targets.column(c).mean()).collect();
    let centred = DMatrix::from_fn(n, n_classes, |i, c| targets[(i, c)] - intercept[c]);

    // dual form when there are fewer instances than features
    let weights = if n <= p {
        let gram = &x * x.transpose() + DMatrix::identity(n, n) * lambda;
        let chol = gram.cholesky().ok_or_else(|| ModelError::InvalidParameter("singular ridge system".into()))?;
        x.transpose() * chol.solve(&centred)
    } else {
        let gram = x.transpose() * &x + DMatrix::identity(p, p) * lambda;
        let chol = gram.cholesky().ok_or_else(|| ModelError::InvalidParameter("singular ridge system".into()))?;
        chol.solve(&(x.transpose() * centred))
    };
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(ModelError::InvalidParameter("ridge solution is not finite".into()));
    }
    model.feature_mean = mean;
    model.feature_scale = scale;
    model.weights = weights;
    model.intercept = intercept;
    Ok(model)
}

impl Classifier for MiniRocketRidge {
    fn class_names(&self) -> &[String] {
        &self.class_names
    }

    fn input_shape(&self) -> (usize, usize) {
        self.shape
    }

    fn predict_proba(&self, batch: &[TimeSeries]) -> Result<ProbaMatrix, ModelError> {
        check_batch(self.shape, batch)?;
        Ok(batch.iter().map(|x| softmax(&self.scores(x))).collect())
    }
}
