//! Browser bindings for three segshap operations. Every function returns a JSON string;
//! the `*_json` functions hold the logic and can be called natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use segshap::attribution::{shapley_sampling, AttributionDocument, BackgroundSet, ExpansionMode};
use segshap::data::{compute_channel_stats, synth_bump_dataset, LabeledDataset, TimeSeries};
use segshap::evaluation::{aucd, interpret_time, AucdResult, InterpretTimeResult};
use segshap::model::{argmax, train_nearest_centroid, NearestCentroid};
use segshap::segmentation::{normalized_entropy, segment, Segmentation};
use segshap::{BackgroundKind, Classifier, EvalConfig, Perturbation, SegmentAttribution, SegmentationConfig};

const LENGTH: usize = 100;
const BUMP_WIDTH: usize = 10;
const NOISE: f64 = 0.1;

type DemoResult = Result<String, String>;

fn to_json<T: Serialize>(value: &T) -> DemoResult {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Serialize)]
struct SegmentReply {
    segmentation: Segmentation,
    entropy: f64,
}

/// Segments a univariate signal with the named method.
pub fn segment_signal_json(values: &[f64], method: &str, n_segments: usize) -> DemoResult {
    let x = TimeSeries::univariate(values.to_vec()).map_err(err)?;
    let cfg = SegmentationConfig::new(method.parse().map_err(err)?, n_segments);
    let seg = segment(&x, &cfg).map_err(err)?;
    to_json(&SegmentReply { entropy: normalized_entropy(&seg), segmentation: seg })
}

struct Fixture {
    train: LabeledDataset,
    test: LabeledDataset,
    model: NearestCentroid,
}

fn fixture(seed: u64) -> Result<Fixture, String> {
    let train = synth_bump_dataset(40, 1, LENGTH, 2, BUMP_WIDTH, NOISE, seed).map_err(err)?;
    let test = synth_bump_dataset(10, 1, LENGTH, 2, BUMP_WIDTH, NOISE, seed.wrapping_add(1)).map_err(err)?;
    let model = train_nearest_centroid(&train).map_err(err)?;
    Ok(Fixture { train, test, model })
}

fn explain(f: &Fixture, instance: usize, method: &str, n_segments: usize, seed: u64) -> Result<SegmentAttribution, String> {
    let x = f.test.instances().get(instance).ok_or("instance out of range")?;
    let cfg = SegmentationConfig::new(method.parse().map_err(err)?, n_segments);
    let seg = segment(x, &cfg).map_err(err)?;
    let bg = BackgroundSet::build(BackgroundKind::Average, &f.train).map_err(err)?;
    let class = argmax(&f.model.predict_proba(std::slice::from_ref(x)).map_err(err)?[0]);
    shapley_sampling(&f.model, x, &seg, &bg, class, 50, seed).map_err(err)
}

#[derive(Serialize)]
struct ExplainReply {
    series: Vec<f64>,
    label: usize,
    boundaries: Vec<usize>,
    attribution: AttributionDocument,
}

/// Explains test instance `instance` of a synthetic bump dataset under a nearest-centroid model.
pub fn explain_bump_json(seed: u64, instance: usize, method: &str, n_segments: usize, normalize: bool) -> DemoResult {
    let f = fixture(seed)?;
    let attr = explain(&f, instance, method, n_segments, seed)?;
    let mode = if normalize { ExpansionMode::Normalized } else { ExpansionMode::Replicated };
    to_json(&ExplainReply {
        series: f.test.instances()[instance].as_slice().to_vec(),
        label: f.test.labels()[instance],
        boundaries: attr.segmentation.channel_boundaries(0).to_vec(),
        attribution: AttributionDocument::new(&attr, &mode.expand(&attr)),
    })
}

#[derive(Serialize)]
struct EvaluateReply {
    aucd: AucdResult,
    interpret_time: InterpretTimeResult,
}

/// AUCD and InterpretTime curves for the attribution `explain_bump_json` would produce.
pub fn evaluate_bump_json(
    seed: u64,
    instance: usize,
    method: &str,
    n_segments: usize,
    normalize: bool,
    perturbation: &str,
) -> DemoResult {
    let f = fixture(seed)?;
    let attr = explain(&f, instance, method, n_segments, seed)?;
    let mode = if normalize { ExpansionMode::Normalized } else { ExpansionMode::Replicated };
    let expanded = mode.expand(&attr);
    let x = &f.test.instances()[instance];
    let cfg = EvalConfig::with_seed(seed);
    let strategy: Perturbation = perturbation.parse()?;
    let stats = compute_channel_stats(&f.train).map_err(err)?;
    to_json(&EvaluateReply {
        aucd: aucd(&f.model, x, &expanded, &f.train, &cfg).map_err(err)?,
        interpret_time: interpret_time(&f.model, x, &expanded, strategy, &stats, &cfg).map_err(err)?,
    })
}

#[wasm_bindgen]
pub fn segment_signal(values: Vec<f64>, method: &str, n_segments: usize) -> Result<String, JsError> {
    segment_signal_json(&values, method, n_segments).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn explain_bump(seed: u64, instance: usize, method: &str, n_segments: usize, normalize: bool) -> Result<String, JsError> {
    explain_bump_json(seed, instance, method, n_segments, normalize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn evaluate_bump(
    seed: u64,
    instance: usize,
    method: &str,
    n_segments: usize,
    normalize: bool,
    perturbation: &str,
) -> Result<String, JsError> {
    evaluate_bump_json(seed, instance, method, n_segments, normalize, perturbation).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn segments_a_step() {
        let mut signal = vec![0.0; 20];
        signal[10..].fill(5.0);
        let v: Value = serde_json::from_str(&segment_signal_json(&signal, "binseg", 2).unwrap()).unwrap();
        assert_eq!(v["segmentation"]["boundaries"][0], serde_json::json!([0, 10, 20]));
        assert_eq!(v["entropy"], 1.0);
        assert!(segment_signal_json(&signal, "nope", 2).is_err());
    }

    #[test]
    fn explain_reply_shape() {
        let v: Value = serde_json::from_str(&explain_bump_json(1, 0, "equal", 10, true).unwrap()).unwrap();
        assert_eq!(v["series"].as_array().unwrap().len(), LENGTH);
        assert_eq!(v["boundaries"].as_array().unwrap().len(), 11);
        assert_eq!(v["attribution"]["mode"], "normalized");
        assert_eq!(v["attribution"]["timepoint_values"][0].as_array().unwrap().len(), LENGTH);
        assert!(explain_bump_json(1, 99, "equal", 10, true).is_err());
    }

    #[test]
    fn evaluate_reply_shape() {
        let v: Value = serde_json::from_str(&evaluate_bump_json(2, 1, "equal", 10, false, "global_mean").unwrap()).unwrap();
        let a = v["aucd"]["aucd"].as_f64().unwrap();
        assert!((-1.0..=1.0).contains(&a));
        assert_eq!(v["interpret_time"]["top_curve"].as_array().unwrap().len(), 11);
    }
}
