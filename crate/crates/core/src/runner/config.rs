use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunnerError;
use crate::attribution::{BackgroundKind, ExpansionMode};
use crate::data::{parse_csv, parse_ts_file, BumpSpec, LabeledDataset, Role};
use crate::evaluation::Perturbation;
use crate::model::ClassifierSpec;
use crate::rng::derive_seed;
use crate::segmentation::SegmentationConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// Produces `aucse` and `f_score` records.
    InterpretTime,
    /// Produces `aucd` records.
    Aucd,
}

/// Synthetic bump data; train and test sets use seeds derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_train: usize,
    pub n_test: usize,
    #[serde(default = "one")]
    pub channels: usize,
    pub length: usize,
    #[serde(default = "two")]
    pub n_classes: usize,
    pub bump_width: usize,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}
fn two() -> usize {
    2
}

impl SyntheticConfig {
    pub fn spec(&self, role: Role) -> BumpSpec {
        let (n, part) = match role {
            Role::Train => (self.n_train, "train"),
            Role::Test => (self.n_test, "test"),
        };
        BumpSpec {
            n_instances: n,
            channels: self.channels,
            length: self.length,
            n_classes: self.n_classes,
            bump_width: self.bump_width,
            noise_std: self.noise_std,
            seed: derive_seed(self.seed, &["synthetic", part]),
        }
    }
}

/// One dataset: either a train/test file pair or a synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub train: Option<PathBuf>,
    #[serde(default)]
    pub test: Option<PathBuf>,
    /// Channel count for CSV files.
    #[serde(default)]
    pub channels: Option<usize>,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetList {
    One(DatasetConfig),
    Many(Vec<DatasetConfig>),
}

impl DatasetList {
    pub fn as_slice(&self) -> &[DatasetConfig] {
        match self {
            Self::One(d) => std::slice::from_ref(d),
            Self::Many(v) => v,
        }
    }
}

impl DatasetConfig {
    pub fn display_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        if self.synthetic.is_some() {
            return "synthetic".into();
        }
        self.train
            .as_deref()
            .and_then(Path::file_stem)
            .map(|s| s.to_string_lossy().trim_end_matches("_TRAIN").to_string())
            .unwrap_or_else(|| "dataset".into())
    }

    fn validate(&self) -> Result<(), RunnerError> {
        match (&self.synthetic, &self.train, &self.test) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => Ok(()),
            _ => Err(RunnerError::ConfigInvalid(format!(
                "dataset {:?} needs either train and test paths or a synthetic table",
                self.display_name()
            ))),
        }
    }

    /// Loads `(train, test)`, resolving relative paths against `base`. Test labels are
    /// mapped onto the training set's class names.
    pub fn load(&self, base: &Path) -> Result<(LabeledDataset, LabeledDataset), RunnerError> {
        self.validate()?;
        if let Some(s) = &self.synthetic {
            let load = |role| {
                s.spec(role).generate().map(|d| d.with_role(role)).map_err(|source| RunnerError::DatasetLoad {
                    path: format!("synthetic:{}", self.display_name()),
                    source,
                })
            };
            return Ok((load(Role::Train)?, load(Role::Test)?));
        }
        let train = self.load_file(base, self.train.as_deref().expect("validated"))?.with_role(Role::Train);
        let test = self.load_file(base, self.test.as_deref().expect("validated"))?;
        let test = align_classes(&train, test).map_err(|source| RunnerError::DatasetLoad {
            path: self.test.as_ref().expect("validated").display().to_string(),
            source,
        })?;
        Ok((train, test))
    }

    fn load_file(&self, base: &Path, path: &Path) -> Result<LabeledDataset, RunnerError> {
        load_dataset_file(&if path.is_absolute() { path.to_path_buf() } else { base.join(path) }, self.channels)
    }
}

/// Reads a `.csv` file (with `channels` channels, default 1) or a `.ts` file.
pub fn load_dataset_file(path: &Path, channels: Option<usize>) -> Result<LabeledDataset, RunnerError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| RunnerError::Io(format!("cannot read {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        parse_csv(&text, channels.unwrap_or(1))
    } else {
        parse_ts_file(&text)
    };
    parsed.map_err(|source| RunnerError::DatasetLoad { path: path.display().to_string(), source })
}

/// Relabels `test` using `train`'s class names.
pub fn align_classes(train: &LabeledDataset, test: LabeledDataset) -> Result<LabeledDataset, crate::data::DataError> {
    if test.class_names() == train.class_names() {
        return Ok(test.with_role(Role::Test));
    }
    let labels = test
        .labels()
        .iter()
        .map(|&l| {
            let name = &test.class_names()[l];
            train.class_names().iter().position(|n| n == name).ok_or_else(|| {
                crate::data::DataError::DataRowMismatch { line: 0, message: format!("test class {name:?} absent from training data") }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    LabeledDataset::new(test.instances().to_vec(), labels, train.class_names().to_vec(), Role::Test)
}

fn default_permutations() -> usize {
    25
}
fn default_max_instances() -> usize {
    50
}

/// An experiment grid read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: DatasetList,
    pub classifiers: Vec<String>,
    pub segmentations: Vec<SegmentationConfig>,
    pub backgrounds: Vec<BackgroundKind>,
    pub normalization: Vec<ExpansionMode>,
    pub metrics: Vec<MetricKind>,
    #[serde(default)]
    pub perturbations: Vec<Perturbation>,
    #[serde(default = "default_permutations")]
    pub shap_permutations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_instances")]
    pub max_instances: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, RunnerError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| RunnerError::ConfigInvalid(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunnerError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn classifier_specs(&self) -> Result<Vec<ClassifierSpec>, RunnerError> {
        self.classifiers
            .iter()
            .map(|c| c.parse::<ClassifierSpec>().map_err(|e| RunnerError::ConfigInvalid(e.to_string())))
            .collect()
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(RunnerError::ConfigInvalid(format!("{name} must not be empty")))
            } else {
                Ok(())
            }
        };
        empty("datasets", self.datasets.as_slice().len())?;
        empty("classifiers", self.classifiers.len())?;
        empty("segmentations", self.segmentations.len())?;
        empty("backgrounds", self.backgrounds.len())?;
        empty("normalization", self.normalization.len())?;
        empty("metrics", self.metrics.len())?;
        if self.metrics.contains(&MetricKind::InterpretTime) {
            empty("perturbations", self.perturbations.len())?;
        }
        if self.backgrounds.contains(&BackgroundKind::Custom) {
            return Err(RunnerError::ConfigInvalid("backgrounds must be zero or average".into()));
        }
        if self.shap_permutations == 0 {
            return Err(RunnerError::ConfigInvalid("shap_permutations must be at least 1".into()));
        }
        if self.max_instances == 0 {
            return Err(RunnerError::ConfigInvalid("max_instances must be at least 1".into()));
        }
        for d in self.datasets.as_slice() {
            d.validate()?;
        }
        self.classifier_specs()?;
        let distinct = |names: Vec<String>, what: &str| {
            if names.iter().collect::<HashSet<_>>().len() != names.len() {
                Err(RunnerError::ConfigInvalid(format!("duplicate {what} names")))
            } else {
                Ok(())
            }
        };
        distinct(self.segmentations.iter().map(SegmentationConfig::label).collect(), "segmentation")?;
        distinct(self.datasets.as_slice().iter().map(DatasetConfig::display_name).collect(), "dataset")?;
        distinct(self.classifiers.clone(), "classifier")?;
        Ok(())
    }

    /// Number of factor combinations per dataset and instance, counting each metric once.
    pub fn grid_size(&self) -> usize {
        let evals: usize = self
            .metrics
            .iter()
            .map(|m| match m {
                MetricKind::InterpretTime => self.perturbations.len(),
                MetricKind::Aucd => 1,
            })
            .sum();
        self.classifiers.len() * self.segmentations.len() * self.backgrounds.len() * self.normalization.len() * evals
    }
}
