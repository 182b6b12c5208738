use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::data::{ChannelStats, TimeSeries};

/// How masked cells are replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// Draws from `N(0, 1)`.
    Normal,
    /// Draws from `N(mean_c, std_c)` of the cell's channel.
    GlobalGaussian,
    /// The channel mean.
    GlobalMean,
    /// The mean of the original values in `[t − r, t + r]` on the same channel.
    LocalMean,
}

impl Perturbation {
    pub const ALL: [Perturbation; 4] =
        [Perturbation::Normal, Perturbation::GlobalGaussian, Perturbation::GlobalMean, Perturbation::LocalMean];

    pub fn name(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::GlobalGaussian => "global_gaussian",
            Self::GlobalMean => "global_mean",
            Self::LocalMean => "local_mean",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Self::Normal | Self::GlobalGaussian)
    }
}

impl std::fmt::Display for Perturbation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Perturbation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown perturbation {s:?} (expected normal|global_gaussian|global_mean|local_mean)"))
    }
}

/// Replaces the cells flagged in `mask` (channel-major, `d·L` entries).
///
/// Stochastic strategies draw one value for every cell, masked or not, so the values a
/// cell receives depend only on the generator state and never on the mask.
pub fn perturb_values<R: Rng + ?Sized>(
    strategy: Perturbation,
    x: &TimeSeries,
    mask: &[bool],
    stats: &ChannelStats,
    local_mean_radius: usize,
    rng: &mut R,
) -> Result<TimeSeries, EvaluationError> {
    let (d, len) = x.shape();
    if mask.len() != d * len {
        return Err(EvaluationError::ShapeMismatch(format!("mask has {} cells, instance {}", mask.len(), d * len)));
    }
    if stats.mean.len() != d || stats.std.len() != d {
        return Err(EvaluationError::ShapeMismatch(format!(
            "statistics cover {} channels, instance has {d}",
            stats.mean.len()
        )));
    }
    let mut out = x.clone();
    match strategy {
        Perturbation::Normal | Perturbation::GlobalGaussian => {
            for (i, (o, &m)) in out.as_mut_slice().iter_mut().zip(mask).enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                if m {
                    let c = i / len;
                    *o = match strategy {
                        Perturbation::Normal => z,
                        _ => stats.mean[c] + stats.std[c] * z,
                    };
                }
            }
        }
        Perturbation::GlobalMean => {
            for (i, (o, &m)) in out.as_mut_slice().iter_mut().zip(mask).enumerate() {
                if m {
                    *o = stats.mean[i / len];
                }
            }
        }
        Perturbation::LocalMean => {
            for c in 0..d {
                let orig = x.channel(c);
                let mut prefix = vec![0.0; len + 1];
                for t in 0..len {
                    prefix[t + 1] = prefix[t] + orig[t];
                }
                let row_mask = &mask[c * len..(c + 1) * len];
                for (t, o) in out.channel_mut(c).iter_mut().enumerate() {
                    if row_mask[t] {
                        let lo = t.saturating_sub(local_mean_radius);
                        let hi = (t + local_mean_radius + 1).min(len);
                        *o = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn stats(mean: f64, std: f64) -> ChannelStats {
        ChannelStats { mean: vec![mean], std: vec![std] }
    }

    #[test]
    fn empty_mask_is_identity() {
        let x = TimeSeries::univariate(vec![1.0, -2.0, 3.5]).unwrap();
        for p in Perturbation::ALL {
            let y = perturb_values(p, &x, &[false; 3], &stats(1.0, 2.0), 2, &mut substream(1, &["t"])).unwrap();
            assert_eq!(y, x);
        }
    }

    #[test]
    fn global_mean_fills_channel_mean() {
        let x = TimeSeries::univariate(vec![1.0, -1.0, 2.0, -2.0]).unwrap();
        let y = perturb_values(Perturbation::GlobalMean, &x, &[true, false, true, false], &stats(0.0, 1.0), 2, &mut substream(0, &[]))
            .unwrap();
        assert_eq!(y.as_slice(), &[0.0, -1.0, 0.0, -2.0]);
    }

    #[test]
    fn local_mean_of_constant_is_constant() {
        let x = TimeSeries::univariate(vec![4.0; 7]).unwrap();
        let y = perturb_values(Perturbation::LocalMean, &x, &[true; 7], &stats(0.0, 1.0), 2, &mut substream(0, &[])).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn local_mean_window_clipped_at_edges() {
        let x = TimeSeries::univariate(vec![0.0, 3.0, 6.0, 9.0, 12.0]).unwrap();
        let mask = [true, false, true, false, false];
        let y = perturb_values(Perturbation::LocalMean, &x, &mask, &stats(0.0, 1.0), 1, &mut substream(0, &[])).unwrap();
        assert_eq!(y.as_slice(), &[1.5, 3.0, 6.0, 9.0, 12.0]);
    }

    #[test]
    fn gaussian_draws_follow_stats() {
        let x = TimeSeries::zeros(1, 4000);
        let y = perturb_values(Perturbation::GlobalGaussian, &x, &vec![true; 4000], &stats(5.0, 0.5), 2, &mut substream(3, &["g"]))
            .unwrap();
        let mean = y.as_slice().iter().sum::<f64>() / 4000.0;
        let var = y.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4000.0;
        assert!((mean - 5.0).abs() < 0.05, "{mean}");
        assert!((var.sqrt() - 0.5).abs() < 0.05, "{var}");
    }

    #[test]
    fn drawn_value_independent_of_other_cells() {
        let x = TimeSeries::zeros(1, 6);
        let a = perturb_values(Perturbation::Normal, &x, &[true; 6], &stats(0.0, 1.0), 2, &mut substream(9, &["n"])).unwrap();
        let mask = [false, true, false, false, true, false];
        let b = perturb_values(Perturbation::Normal, &x, &mask, &stats(0.0, 1.0), 2, &mut substream(9, &["n"])).unwrap();
        assert_eq!(a.get(0, 1), b.get(0, 1));
        assert_eq!(a.get(0, 4), b.get(0, 4));
        assert_eq!(b.get(0, 0), 0.0);
    }

    #[test]
    fn shape_errors() {
        let x = TimeSeries::zeros(1, 3);
        let r = perturb_values(Perturbation::Normal, &x, &[true; 2], &stats(0.0, 1.0), 2, &mut substream(0, &[]));
        assert!(matches!(r, Err(EvaluationError::ShapeMismatch(_))));
        let two = ChannelStats { mean: vec![0.0; 2], std: vec![1.0; 2] };
        let r = perturb_values(Perturbation::Normal, &x, &[true; 3], &two, 2, &mut substream(0, &[]));
        assert!(matches!(r, Err(EvaluationError::ShapeMismatch(_))));
    }

    #[test]
    fn names_round_trip() {
        for p in Perturbation::ALL {
            assert_eq!(p.name().parse::<Perturbation>().unwrap(), p);
        }
        assert!("gaussian".parse::<Perturbation>().is_err());
    }
}
