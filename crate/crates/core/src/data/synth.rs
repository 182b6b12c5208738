use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DataError, LabeledDataset, Role, TimeSeries};
use crate::rng::substream;

/// Parameters of the rectangular-bump fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub n_instances: usize,
    pub channels: usize,
    pub length: usize,
    pub n_classes: usize,
    pub bump_width: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl BumpSpec {
    pub fn generate(&self) -> Result<LabeledDataset, DataError> {
        synth_bump_dataset(
            self.n_instances,
            self.channels,
            self.length,
            self.n_classes,
            self.bump_width,
            self.noise_std,
            self.seed,
        )
    }
}

/// Class `c` carries a unit-height bump on channel 0 over
/// `[c·⌊L/n_classes⌋, c·⌊L/n_classes⌋ + bump_width)`, plus i.i.d. Gaussian noise
/// everywhere. Instance `i` has label `i mod n_classes`.
pub fn synth_bump_dataset(
    n_instances: usize,
    channels: usize,
    length: usize,
    n_classes: usize,
    bump_width: usize,
    noise_std: f64,
    seed: u64,
) -> Result<LabeledDataset, DataError> {
    if n_classes < 2 {
        return Err(DataError::InvalidGeometry("need at least two classes".into()));
    }
    if channels == 0 || length == 0 || bump_width == 0 {
        return Err(DataError::InvalidGeometry("empty shape or zero-width bump".into()));
    }
    if n_classes * bump_width > length {
        return Err(DataError::InvalidGeometry(format!(
            "{n_classes} bumps of width {bump_width} do not fit in {length} timepoints"
        )));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(DataError::InvalidGeometry("noise_std must be finite and >= 0".into()));
    }
    let stride = length / n_classes;
    let noise = Normal::new(0.0, noise_std).expect("validated std");
    let mut rng = substream(seed, &["synth_bump"]);
    let mut instances = Vec::with_capacity(n_instances);
    let mut labels = Vec::with_capacity(n_instances);
    for i in 0..n_instances {
        let class = i % n_classes;
        let mut x = TimeSeries::zeros(channels, length);
        let start = class * stride;
        x.channel_mut(0)[start..start + bump_width].iter_mut().for_each(|v| *v = 1.0);
        if noise_std > 0.0 {
            for v in x.as_mut_slice() {
                *v += noise.sample(&mut rng);
            }
        }
        instances.push(x);
        labels.push(class);
    }
    let class_names = (0..n_classes).map(|c| format!("class{c}")).collect();
    LabeledDataset::new(instances, labels, class_names, Role::Train)
}
