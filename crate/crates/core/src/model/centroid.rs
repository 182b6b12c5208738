use super::{check_batch, check_classes, softmax, Classifier, ModelError, ProbaMatrix};
use crate::data::{mean_of, DataError, LabeledDataset, TimeSeries};

/// Softmax over negative scaled Euclidean distances to per-class centroids:
/// `p_c ∝ exp(−‖x − μ_c‖₂ / √(d·L))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestCentroid {
    centroids: Vec<TimeSeries>,
    class_names: Vec<String>,
    shape: (usize, usize),
}

impl NearestCentroid {
    pub fn centroids(&self) -> &[TimeSeries] {
        &self.centroids
    }

    pub fn from_centroids(centroids: Vec<TimeSeries>, class_names: Vec<String>) -> Result<Self, ModelError> {
        let shape = centroids.first().ok_or(DataError::EmptyData)?.shape();
        if centroids.len() != class_names.len() {
            return Err(ModelError::InvalidParameter("one centroid per class required".into()));
        }
        check_batch(shape, &centroids)?;
        Ok(Self { centroids, class_names, shape })
    }
}

pub fn train_nearest_centroid(train: &LabeledDataset) -> Result<NearestCentroid, ModelError> {
    if train.is_empty() {
        return Err(DataError::EmptyData.into());
    }
    check_classes(train)?;
    let centroids = (0..train.n_classes())
        .map(|c| {
            mean_of(train.iter().filter(|&(_, l)| l == c).map(|(x, _)| x))
                .ok_or_else(|| ModelError::MissingClass(train.class_names()[c].clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    NearestCentroid::from_centroids(centroids, train.class_names().to_vec())
}

impl Classifier for NearestCentroid {
    fn class_names(&self) -> &[String] {
        &self.class_names
    }

    fn input_shape(&self) -> (usize, usize) {
        self.shape
    }

    fn predict_proba(&self, batch: &[TimeSeries]) -> Result<ProbaMatrix, ModelError> {
        check_batch(self.shape, batch)?;
        let scale = ((self.shape.0 * self.shape.1) as f64).sqrt();
        Ok(batch
            .iter()
            .map(|x| {
                let scores: Vec<f64> =
                    self.centroids.iter().map(|c| -x.squared_distance(c).sqrt() / scale).collect();
                softmax(&scores)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_bump_dataset, Role};

    fn two_class() -> LabeledDataset {
        let xs = vec![
            TimeSeries::univariate(vec![0.0, 0.0]).unwrap(),
            TimeSeries::univariate(vec![4.0, 0.0]).unwrap(),
        ];
        LabeledDataset::new(xs, vec![0, 1], vec!["a".into(), "b".into()], Role::Train).unwrap()
    }

    #[test]
    fn centroid_is_predicted() {
        let m = train_nearest_centroid(&two_class()).unwrap();
        let x = TimeSeries::univariate(vec![0.0, 0.0]).unwrap();
        assert_eq!(m.predict(&x).unwrap(), 0);
    }

    #[test]
    fn equidistant_is_even() {
        let m = train_nearest_centroid(&two_class()).unwrap();
        let x = TimeSeries::univariate(vec![2.0, 5.0]).unwrap();
        assert_eq!(m.predict_proba(&[x]).unwrap()[0], vec![0.5, 0.5]);
    }

    #[test]
    fn missing_class() {
        let ds = two_class();
        let ds = LabeledDataset::new(
            ds.instances().to_vec(),
            vec![0, 0],
            vec!["a".into(), "b".into()],
            Role::Train,
        )
        .unwrap();
        assert_eq!(train_nearest_centroid(&ds), Err(ModelError::MissingClass("b".into())));
    }

    #[test]
    fn batch_contract() {
        let m = train_nearest_centroid(&two_class()).unwrap();
        assert!(m.predict_proba(&[]).unwrap().is_empty());
        let x = TimeSeries::univariate(vec![1.0, 3.0]).unwrap();
        let rows = m.predict_proba(&[x.clone(), x]).unwrap();
        assert_eq!(rows[0], rows[1]);
        let wrong = TimeSeries::univariate(vec![1.0, 3.0, 4.0]).unwrap();
        assert!(matches!(m.predict_proba(&[wrong]), Err(ModelError::ShapeMismatch { index: 0, .. })));
    }

    #[test]
    fn perfect_on_noiseless_bumps() {
        let ds = synth_bump_dataset(30, 2, 40, 3, 6, 0.0, 3).unwrap();
        let m = train_nearest_centroid(&ds).unwrap();
        for (x, label) in ds.iter() {
            assert_eq!(m.predict(x).unwrap(), label);
        }
    }
}
