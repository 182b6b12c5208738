use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use super::{sort_records, write_records, ExperimentConfig, MetricKind, ResultRecord, RunnerError};
use crate::attribution::{shapley_sampling, BackgroundKind, BackgroundSet, ExpansionMode};
use crate::data::{compute_channel_stats, ChannelStats, LabeledDataset, TimeSeries};
use crate::evaluation::{aucd_with_representative, interpret_time, opposite_class_representative, EvalConfig, EvaluationError, Perturbation};
use crate::model::{argmax, Classifier};
use crate::rng::derive_seed;
use crate::segmentation::{segment, SegmentationConfig};

/// Records of a finished grid plus bookkeeping for the metadata file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    #[serde(skip)]
    pub records: Vec<ResultRecord>,
    pub n_values: usize,
    pub n_skipped: usize,
    /// `(dataset, evaluated test instances)`.
    pub datasets: Vec<(String, usize)>,
    pub grid_size: usize,
    pub max_instances: usize,
    pub shap_permutations: usize,
    pub seed: u64,
}

/// One value-producing slot of the grid for a fixed instance, before any computation.
#[derive(Clone, Copy)]
struct Slot {
    background: BackgroundKind,
    normalization: ExpansionMode,
    perturbation: Option<Perturbation>,
    metric: &'static str,
}

fn eval_slots(cfg: &ExperimentConfig, background: BackgroundKind, normalization: ExpansionMode) -> Vec<Slot> {
    let mut out = Vec::new();
    for m in &cfg.metrics {
        match m {
            MetricKind::InterpretTime => {
                for &p in &cfg.perturbations {
                    for metric in ["aucse", "f_score"] {
                        out.push(Slot { background, normalization, perturbation: Some(p), metric });
                    }
                }
            }
            MetricKind::Aucd => out.push(Slot { background, normalization, perturbation: None, metric: "aucd" }),
        }
    }
    out
}

fn all_slots(cfg: &ExperimentConfig, backgrounds: &[BackgroundKind]) -> Vec<Slot> {
    backgrounds
        .iter()
        .flat_map(|&b| cfg.normalization.iter().flat_map(move |&n| eval_slots(cfg, b, n)))
        .collect()
}

struct CellContext<'a> {
    cfg: &'a ExperimentConfig,
    dataset: &'a str,
    classifier: &'a str,
    segmentation: String,
}

impl CellContext<'_> {
    fn record(&self, slot: Slot, instance: usize, outcome: Result<f64, String>) -> ResultRecord {
        let (value, skip_reason) = match outcome {
            Ok(v) if v.is_finite() => (Some(v), None),
            Ok(_) => (None, Some("non_finite_value".to_string())),
            Err(reason) => (None, Some(reason)),
        };
        ResultRecord {
            dataset: self.dataset.into(),
            classifier: self.classifier.into(),
            segmentation: self.segmentation.clone(),
            background: slot.background.name().into(),
            normalization: slot.normalization.name().into(),
            perturbation: slot.perturbation.map_or("-", Perturbation::name).into(),
            metric: slot.metric.into(),
            instance,
            value,
            skip_reason,
        }
    }

    fn skip_all(&self, slots: &[Slot], instance: usize, reason: &str) -> Vec<ResultRecord> {
        slots.iter().map(|&s| self.record(s, instance, Err(reason.to_string()))).collect()
    }

    fn seed(&self, stage: &str, extra: &[&str], instance: usize) -> u64 {
        let idx = instance.to_string();
        let mut parts = vec![stage, self.dataset, self.classifier, &self.segmentation];
        parts.extend_from_slice(extra);
        parts.push(&idx);
        derive_seed(self.cfg.seed, &parts)
    }
}

fn skip_reason(e: &EvaluationError) -> String {
    match e {
        EvaluationError::ZeroBaseProbability => "zero_base_probability".into(),
        EvaluationError::SingleClassDataset => "single_class_dataset".into(),
        _ => "evaluation_failed".into(),
    }
}

struct DatasetContext<'a> {
    cfg: &'a ExperimentConfig,
    name: &'a str,
    test: &'a LabeledDataset,
    stats: &'a ChannelStats,
    backgrounds: &'a [(BackgroundKind, BackgroundSet)],
}

fn explain_instance(
    ds: &DatasetContext<'_>,
    classifier: &str,
    model: &dyn Classifier,
    representatives: &[Result<(TimeSeries, usize), EvaluationError>],
    seg_cfg: &SegmentationConfig,
    instance: usize,
) -> Vec<ResultRecord> {
    let cfg = ds.cfg;
    let cell = CellContext { cfg, dataset: ds.name, classifier, segmentation: seg_cfg.label() };
    let kinds: Vec<BackgroundKind> = ds.backgrounds.iter().map(|(k, _)| *k).collect();
    let x = &ds.test.instances()[instance];

    let seg = match segment(x, seg_cfg) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("{}/{}/{} instance {instance}: {e}", ds.name, classifier, cell.segmentation);
            return cell.skip_all(&all_slots(cfg, &kinds), instance, "segmentation_failed");
        }
    };
    let class = match model.predict_proba(std::slice::from_ref(x)) {
        Ok(p) => argmax(&p[0]),
        Err(e) => {
            log::warn!("{}/{classifier} instance {instance}: {e}", ds.name);
            return cell.skip_all(&all_slots(cfg, &kinds), instance, "model_error");
        }
    };

    let mut out = Vec::new();
    for (kind, background) in ds.backgrounds {
        let seed = cell.seed("shap", &[kind.name()], instance);
        let attr = match shapley_sampling(model, x, &seg, background, class, cfg.shap_permutations, seed) {
            Ok(a) => a,
            Err(e) => {
                log::warn!("{}/{classifier}/{} instance {instance}: {e}", ds.name, cell.segmentation);
                out.extend(cell.skip_all(&all_slots(cfg, &[*kind]), instance, "attribution_failed"));
                continue;
            }
        };
        for &norm in &cfg.normalization {
            let expanded = norm.expand(&attr);
            for metric in &cfg.metrics {
                match metric {
                    MetricKind::InterpretTime => {
                        for &p in &cfg.perturbations {
                            let eval = EvalConfig::with_seed(cell.seed("eval", &[kind.name(), p.name()], instance));
                            let result = interpret_time(model, x, &expanded, p, ds.stats, &eval);
                            let slot = |metric| Slot { background: *kind, normalization: norm, perturbation: Some(p), metric };
                            match result {
                                Ok(r) => {
                                    out.push(cell.record(slot("aucse"), instance, Ok(r.aucse)));
                                    out.push(cell.record(slot("f_score"), instance, Ok(r.f_score)));
                                }
                                Err(e) => {
                                    let reason = skip_reason(&e);
                                    out.push(cell.record(slot("aucse"), instance, Err(reason.clone())));
                                    out.push(cell.record(slot("f_score"), instance, Err(reason)));
                                }
                            }
                        }
                    }
                    MetricKind::Aucd => {
                        let slot = Slot { background: *kind, normalization: norm, perturbation: None, metric: "aucd" };
                        let eval = EvalConfig::with_seed(cell.seed("eval", &[kind.name(), "-"], instance));
                        let result = match &representatives[class] {
                            Ok((rep, opposite)) => {
                                aucd_with_representative(model, x, &expanded, rep, *opposite, &eval).map(|r| r.aucd)
                            }
                            Err(e) => Err(e.clone()),
                        };
                        out.push(cell.record(slot, instance, result.map_err(|e| skip_reason(&e))));
                    }
                }
            }
        }
    }
    out
}

/// Runs every grid cell on every evaluated test instance. Failures inside the grid become
/// skip records; only configuration and dataset problems abort.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, RunnerError> {
    cfg.validate()?;
    let specs = cfg.classifier_specs()?;
    let mut records = Vec::new();
    let mut datasets = Vec::new();
    for dataset in cfg.datasets.as_slice() {
        let name = dataset.display_name();
        let (train, test) = dataset.load(&cfg.base_dir)?;
        let test = test.truncated(cfg.max_instances);
        let load_err = |source| RunnerError::DatasetLoad { path: name.clone(), source };
        let stats = compute_channel_stats(&train).map_err(load_err)?;
        let backgrounds = cfg
            .backgrounds
            .iter()
            .map(|&k| BackgroundSet::build(k, &train).map(|b| (k, b)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(load_err)?;
        datasets.push((name.clone(), test.len()));
        let ctx = DatasetContext { cfg, name: &name, test: &test, stats: &stats, backgrounds: &backgrounds };

        for (spec, classifier) in specs.iter().zip(&cfg.classifiers) {
            let model: Arc<dyn Classifier> = match spec.build(&train) {
                Ok(m) => m,
                Err(e) => {
                    log::error!("{name}/{classifier}: {e}");
                    let kinds: Vec<_> = backgrounds.iter().map(|(k, _)| *k).collect();
                    for seg_cfg in &cfg.segmentations {
                        let cell = CellContext { cfg, dataset: &name, classifier, segmentation: seg_cfg.label() };
                        for i in 0..test.len() {
                            records.extend(cell.skip_all(&all_slots(cfg, &kinds), i, "classifier_unavailable"));
                        }
                    }
                    continue;
                }
            };
            let representatives: Vec<_> = (0..model.n_classes())
                .map(|c| opposite_class_representative(model.as_ref(), &train, c))
                .collect();
            let items: Vec<(usize, usize)> =
                (0..cfg.segmentations.len()).flat_map(|s| (0..test.len()).map(move |i| (s, i))).collect();
            let work = |&(s, i): &(usize, usize)| {
                explain_instance(&ctx, classifier, model.as_ref(), &representatives, &cfg.segmentations[s], i)
            };
            #[cfg(feature = "parallel")]
            let chunks: Vec<Vec<ResultRecord>> = {
                use rayon::prelude::*;
                items.par_iter().map(work).collect()
            };
            #[cfg(not(feature = "parallel"))]
            let chunks: Vec<Vec<ResultRecord>> = items.iter().map(work).collect();
            records.extend(chunks.into_iter().flatten());
            log::info!("{name}/{classifier}: {} grid items done", items.len());
        }
    }
    sort_records(&mut records);
    let n_skipped = records.iter().filter(|r| r.is_skip()).count();
    Ok(RunOutput {
        n_values: records.len() - n_skipped,
        n_skipped,
        records,
        datasets,
        grid_size: cfg.grid_size(),
        max_instances: cfg.max_instances,
        shap_permutations: cfg.shap_permutations,
        seed: cfg.seed,
    })
}

/// Writes `records.csv` and `run.json` into `dir`.
pub fn write_run_output(output: &RunOutput, dir: &Path) -> Result<(), RunnerError> {
    let io = |e: std::io::Error| RunnerError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let file = std::fs::File::create(dir.join("records.csv")).map_err(io)?;
    write_records(&output.records, std::io::BufWriter::new(file))?;
    let meta = serde_json::to_string_pretty(output).expect("metadata serialises");
    std::fs::write(dir.join("run.json"), meta + "\n").map_err(io)
}
