use serde::{Deserialize, Serialize};

use super::{ceil_tolerant, rank_descending, trapezoid, EvalConfig, EvaluationError};
use crate::attribution::TimepointAttribution;
use crate::data::{mean_of, LabeledDataset, TimeSeries};
use crate::model::{argmax, Classifier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucdResult {
    pub predicted_class: usize,
    pub opposite_class: usize,
    /// `(fraction replaced, probability of the predicted class)`.
    pub deletion_curve: Vec<(f64, f64)>,
    pub insertion_curve: Vec<(f64, f64)>,
    pub audc: f64,
    pub auic: f64,
    pub aucd: f64,
}

/// The class mean, among classes other than `predicted`, on which the model gives the
/// lowest probability to `predicted`. Ties go to the lowest class index.
pub fn opposite_class_representative(
    model: &dyn Classifier,
    train: &LabeledDataset,
    predicted: usize,
) -> Result<(TimeSeries, usize), EvaluationError> {
    let mut candidates = Vec::new();
    let mut classes = Vec::new();
    for c in (0..train.n_classes()).filter(|&c| c != predicted) {
        if let Some(mean) = mean_of(train.iter().filter(|&(_, l)| l == c).map(|(x, _)| x)) {
            candidates.push(mean);
            classes.push(c);
        }
    }
    if candidates.is_empty() {
        return Err(EvaluationError::SingleClassDataset);
    }
    let proba = model.predict_proba(&candidates)?;
    let mut best = 0;
    for i in 1..candidates.len() {
        if proba[i][predicted] < proba[best][predicted] {
            best = i;
        }
    }
    Ok((candidates.swap_remove(best), classes[best]))
}

/// Deletion and insertion walks between `x` and a given representative.
pub fn aucd_with_representative(
    model: &dyn Classifier,
    x: &TimeSeries,
    attr: &TimepointAttribution,
    representative: &TimeSeries,
    opposite_class: usize,
    cfg: &EvalConfig,
) -> Result<AucdResult, EvaluationError> {
    cfg.validate()?;
    if attr.shape() != x.shape() || representative.shape() != x.shape() {
        return Err(EvaluationError::ShapeMismatch(format!(
            "instance {:?}, attribution {:?}, representative {:?}",
            x.shape(),
            attr.shape(),
            representative.shape()
        )));
    }
    let predicted = argmax(&model.predict_proba(std::slice::from_ref(x))?[0]);
    let ranked = rank_descending(attr.values().iter().map(|v| v.abs()).enumerate());
    let n = ranked.len();
    let step = ceil_tolerant(cfg.aucd_step_fraction * n as f64).max(1);
    let mut counts: Vec<usize> = (0..n).step_by(step).collect();
    counts.push(n);

    let mut batch = Vec::with_capacity(2 * counts.len());
    let mut deleted = x.clone();
    let mut inserted = representative.clone();
    let mut done = 0;
    for &count in &counts {
        for &cell in &ranked[done..count] {
            deleted.as_mut_slice()[cell] = representative.as_slice()[cell];
            inserted.as_mut_slice()[cell] = x.as_slice()[cell];
        }
        done = count;
        batch.push(deleted.clone());
        batch.push(inserted.clone());
    }
    let proba = model.predict_proba(&batch)?;
    let frac = |c: usize| c as f64 / n as f64;
    let deletion_curve: Vec<(f64, f64)> =
        counts.iter().zip(proba.iter().step_by(2)).map(|(&c, r)| (frac(c), r[predicted])).collect();
    let insertion_curve: Vec<(f64, f64)> =
        counts.iter().zip(proba.iter().skip(1).step_by(2)).map(|(&c, r)| (frac(c), r[predicted])).collect();
    let audc = trapezoid(&deletion_curve);
    let auic = trapezoid(&insertion_curve);
    Ok(AucdResult { predicted_class: predicted, opposite_class, deletion_curve, insertion_curve, audc, auic, aucd: auic - audc })
}

/// AUC difference against the opposite-class representative drawn from `train`.
pub fn aucd(
    model: &dyn Classifier,
    x: &TimeSeries,
    attr: &TimepointAttribution,
    train: &LabeledDataset,
    cfg: &EvalConfig,
) -> Result<AucdResult, EvaluationError> {
    let predicted = argmax(&model.predict_proba(std::slice::from_ref(x))?[0]);
    let (rep, opposite) = opposite_class_representative(model, train, predicted)?;
    aucd_with_representative(model, x, attr, &rep, opposite, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::ExpansionMode;
    use crate::data::Role;
    use crate::model::{train_nearest_centroid, NearestCentroid};

    fn two_class() -> LabeledDataset {
        let xs = vec![
            TimeSeries::univariate(vec![0.0, 0.0, 0.0, 0.0]).unwrap(),
            TimeSeries::univariate(vec![0.0, 2.0, 0.0, 2.0]).unwrap(),
            TimeSeries::univariate(vec![4.0, 4.0, 4.0, 4.0]).unwrap(),
        ];
        LabeledDataset::new(xs, vec![0, 0, 1], vec!["a".into(), "b".into()], Role::Train).unwrap()
    }

    #[test]
    fn two_classes_pick_the_other_mean() {
        let ds = two_class();
        let m = train_nearest_centroid(&ds).unwrap();
        let (rep, c) = opposite_class_representative(&m, &ds, 1).unwrap();
        assert_eq!(c, 0);
        assert_eq!(rep.as_slice(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn three_classes_pick_the_least_likely() {
        let xs = vec![
            TimeSeries::univariate(vec![0.0, 0.0]).unwrap(),
            TimeSeries::univariate(vec![1.0, 0.0]).unwrap(),
            TimeSeries::univariate(vec![5.0, 5.0]).unwrap(),
        ];
        let ds = LabeledDataset::new(xs, vec![0, 1, 2], vec!["a".into(), "b".into(), "c".into()], Role::Train).unwrap();
        let m = train_nearest_centroid(&ds).unwrap();
        let (_, c) = opposite_class_representative(&m, &ds, 0).unwrap();
        // class 2's mean is farthest from centroid 0, so it gets the lowest class-0 probability
        let p = m.predict_proba(&ds.instances()[1..]).unwrap();
        assert!(p[1][0] < p[0][0]);
        assert_eq!(c, 2);
    }

    #[test]
    fn single_class() {
        let ds = two_class().truncated(2);
        let ds = LabeledDataset::new(ds.instances().to_vec(), vec![0, 0], vec!["a".into()], Role::Train).unwrap();
        let m = NearestCentroid::from_centroids(vec![TimeSeries::zeros(1, 4)], vec!["a".into()]).unwrap();
        assert_eq!(opposite_class_representative(&m, &ds, 0), Err(EvaluationError::SingleClassDataset));
    }

    #[test]
    fn endpoints_and_step() {
        let ds = two_class();
        let m = train_nearest_centroid(&ds).unwrap();
        let x = TimeSeries::univariate(vec![4.0, 3.0, 4.0, 5.0]).unwrap();
        let attr = TimepointAttribution::from_values(1, 4, vec![0.1, -0.9, 0.3, 0.0], ExpansionMode::Replicated).unwrap();
        let r = aucd(&m, &x, &attr, &ds, &EvalConfig::default()).unwrap();
        assert_eq!(r.deletion_curve.len(), 5);
        assert_eq!(r.deletion_curve[0].0, 0.0);
        assert_eq!(r.deletion_curve.last().unwrap().0, 1.0);
        let s_x = m.predict_proba(&[x.clone()]).unwrap()[0][r.predicted_class];
        assert_eq!(r.deletion_curve[0].1, s_x);
        assert_eq!(r.deletion_curve.last().unwrap().1, r.insertion_curve[0].1);
        assert_eq!(r.insertion_curve.last().unwrap().1, s_x);
        assert_eq!(r.aucd, r.auic - r.audc);
        assert!((-1.0..=1.0).contains(&r.aucd));
    }

    #[test]
    fn uneven_last_block() {
        let ds = two_class();
        let m = train_nearest_centroid(&ds).unwrap();
        let x = TimeSeries::univariate(vec![4.0, 3.0, 4.0, 5.0]).unwrap();
        let attr = TimepointAttribution::from_values(1, 4, vec![1.0; 4], ExpansionMode::Replicated).unwrap();
        let cfg = EvalConfig { aucd_step_fraction: 0.6, ..EvalConfig::default() };
        let r = aucd(&m, &x, &attr, &ds, &cfg).unwrap();
        let fr: Vec<f64> = r.deletion_curve.iter().map(|p| p.0).collect();
        assert_eq!(fr, vec![0.0, 0.75, 1.0]);
    }
}
