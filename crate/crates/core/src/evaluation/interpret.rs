use serde::{Deserialize, Serialize};

use super::{ceil_tolerant, perturb_values, rank_descending, trapezoid, EvalConfig, EvaluationError, Perturbation};
use crate::attribution::TimepointAttribution;
use crate::data::{ChannelStats, TimeSeries};
use crate::model::{argmax, Classifier};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretTimeResult {
    pub strategy: Perturbation,
    pub predicted_class: usize,
    /// `S(X)`.
    pub base_probability: f64,
    /// `(k, S̄_top)`.
    pub top_curve: Vec<(f64, f64)>,
    /// `(k, S̄_bottom)`.
    pub bottom_curve: Vec<(f64, f64)>,
    pub aucse: f64,
    pub f_score: f64,
    /// Set when no cell has a positive attribution; scores are then 0.
    pub no_positive_attributions: bool,
}

/// Area of a curve over `k`, divided by the span of the schedule.
fn normalised_area(curve: &[(f64, f64)]) -> f64 {
    match curve {
        [] => 0.0,
        [(_, y)] => *y,
        _ => trapezoid(curve) / (curve[curve.len() - 1].0 - curve[0].0),
    }
}

/// Harmonic mean of `a` and `b`, or 0 when either is non-positive.
pub(crate) fn f_score(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

pub fn interpret_time(
    model: &dyn Classifier,
    x: &TimeSeries,
    attr: &TimepointAttribution,
    strategy: Perturbation,
    stats: &ChannelStats,
    cfg: &EvalConfig,
) -> Result<InterpretTimeResult, EvaluationError> {
    cfg.validate()?;
    if attr.shape() != x.shape() {
        return Err(EvaluationError::ShapeMismatch(format!(
            "attribution {:?} vs instance {:?}",
            attr.shape(),
            x.shape()
        )));
    }
    let base = model.predict_proba(std::slice::from_ref(x))?.remove(0);
    let predicted = argmax(&base);
    let s_x = base[predicted];
    if s_x <= 0.0 {
        return Err(EvaluationError::ZeroBaseProbability);
    }

    let ranked = rank_descending(attr.values().iter().copied().enumerate().filter(|(_, v)| *v > 0.0));
    if ranked.is_empty() {
        return Ok(InterpretTimeResult {
            strategy,
            predicted_class: predicted,
            base_probability: s_x,
            top_curve: Vec::new(),
            bottom_curve: Vec::new(),
            aucse: 0.0,
            f_score: 0.0,
            no_positive_attributions: true,
        });
    }

    let n_cells = x.n_cells();
    let mut batch = Vec::with_capacity(2 * cfg.k_schedule.len());
    for (ki, &k) in cfg.k_schedule.iter().enumerate() {
        let n_top = ceil_tolerant(k * ranked.len() as f64).min(ranked.len());
        let (top, bottom) = ranked.split_at(n_top);
        for (arm, cells) in [("top", top), ("bottom", bottom)] {
            let mut mask = vec![false; n_cells];
            cells.iter().for_each(|&i| mask[i] = true);
            let mut rng = substream(cfg.seed, &["interprettime", strategy.name(), &ki.to_string(), arm]);
            batch.push(perturb_values(strategy, x, &mask, stats, cfg.local_mean_radius, &mut rng)?);
        }
    }
    let proba = model.predict_proba(&batch)?;
    let drop = |row: &Vec<f64>| (s_x - row[predicted]) / s_x;
    let top_curve: Vec<(f64, f64)> = cfg.k_schedule.iter().zip(proba.iter().step_by(2)).map(|(&k, r)| (k, drop(r))).collect();
    let bottom_curve: Vec<(f64, f64)> =
        cfg.k_schedule.iter().zip(proba.iter().skip(1).step_by(2)).map(|(&k, r)| (k, drop(r))).collect();

    let aucse = normalised_area(&top_curve);
    let f = f_score(aucse, 1.0 - normalised_area(&bottom_curve));
    Ok(InterpretTimeResult {
        strategy,
        predicted_class: predicted,
        base_probability: s_x,
        top_curve,
        bottom_curve,
        aucse,
        f_score: f,
        no_positive_attributions: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::ExpansionMode;
    use crate::model::{ModelError, ProbaMatrix};

    /// Always `[0.7, 0.3]`.
    struct Constant;

    /// `[1, 0]` on the reference instance, `[0, 1]` on anything else.
    struct Exact(TimeSeries);

    impl Classifier for Constant {
        fn class_names(&self) -> &[String] {
            static N: std::sync::OnceLock<Vec<String>> = std::sync::OnceLock::new();
            N.get_or_init(|| vec!["a".into(), "b".into()])
        }
        fn input_shape(&self) -> (usize, usize) {
            (1, 8)
        }
        fn predict_proba(&self, batch: &[TimeSeries]) -> Result<ProbaMatrix, ModelError> {
            Ok(batch.iter().map(|_| vec![0.7, 0.3]).collect())
        }
    }

    impl Classifier for Exact {
        fn class_names(&self) -> &[String] {
            Constant.class_names()
        }
        fn input_shape(&self) -> (usize, usize) {
            self.0.shape()
        }
        fn predict_proba(&self, batch: &[TimeSeries]) -> Result<ProbaMatrix, ModelError> {
            Ok(batch.iter().map(|x| if *x == self.0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).collect())
        }
    }

    fn fixture() -> (TimeSeries, TimepointAttribution, ChannelStats) {
        let x = TimeSeries::univariate((0..8).map(|t| t as f64).collect()).unwrap();
        let attr = TimepointAttribution::from_values(1, 8, vec![0.5, 0.1, -0.2, 0.9, 0.0, 0.3, 0.2, 0.4], ExpansionMode::Replicated)
            .unwrap();
        (x, attr, ChannelStats { mean: vec![3.5], std: vec![2.0] })
    }

    #[test]
    fn invariant_model_scores_zero() {
        let (x, attr, stats) = fixture();
        for p in Perturbation::ALL {
            let r = interpret_time(&Constant, &x, &attr, p, &stats, &EvalConfig::default()).unwrap();
            assert!(r.top_curve.iter().all(|&(_, s)| s == 0.0));
            assert_eq!(r.aucse, 0.0);
            assert_eq!(r.f_score, 0.0);
        }
    }

    #[test]
    fn total_collapse_scores_one() {
        let (x, attr, stats) = fixture();
        let r = interpret_time(&Exact(x.clone()), &x, &attr, Perturbation::Normal, &stats, &EvalConfig::default()).unwrap();
        assert!(r.top_curve.iter().all(|&(_, s)| s == 1.0));
        assert_eq!(r.aucse, 1.0);
        assert_eq!(r.top_curve.len(), 11);
        assert_eq!(r.bottom_curve.last().unwrap().1, 0.0);
    }

    #[test]
    fn no_positive_cells_flagged() {
        let (x, _, stats) = fixture();
        let attr = TimepointAttribution::from_values(1, 8, vec![-1.0; 8], ExpansionMode::Replicated).unwrap();
        let r = interpret_time(&Constant, &x, &attr, Perturbation::GlobalMean, &stats, &EvalConfig::default()).unwrap();
        assert!(r.no_positive_attributions);
        assert_eq!((r.aucse, r.f_score), (0.0, 0.0));
    }

    #[test]
    fn zero_base_probability() {
        let (x, attr, stats) = fixture();
        struct Zero;
        impl Classifier for Zero {
            fn class_names(&self) -> &[String] {
                Constant.class_names()
            }
            fn input_shape(&self) -> (usize, usize) {
                (1, 8)
            }
            fn predict_proba(&self, batch: &[TimeSeries]) -> Result<ProbaMatrix, ModelError> {
                Ok(batch.iter().map(|_| vec![0.0, 0.0]).collect())
            }
        }
        let r = interpret_time(&Zero, &x, &attr, Perturbation::GlobalMean, &stats, &EvalConfig::default());
        assert_eq!(r, Err(EvaluationError::ZeroBaseProbability));
    }

    #[test]
    fn f_score_definition() {
        assert_eq!(f_score(0.5, 0.5), 0.5);
        assert!((f_score(0.2, 0.8) - 0.32).abs() < 1e-15);
        assert_eq!(f_score(-0.1, 0.9), 0.0);
    }
}
