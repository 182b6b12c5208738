use rand::seq::SliceRandom;

use super::{check_segmentation, mask_with_cells, AttributionError, BackgroundSet, SegmentAttribution};
use crate::data::TimeSeries;
use crate::model::Classifier;
use crate::rng::substream;
use crate::segmentation::Segmentation;

/// Largest feature count accepted by the exact enumeration (`2^12` coalitions).
pub const MAX_EXACT_FEATURES: usize = 12;

/// Coalitions are evaluated in batches of at most this many during exact enumeration.
const EXACT_BATCH: usize = 256;

/// A cooperative game whose coalitions are evaluated in batches.
pub trait CoalitionGame: Sync {
    fn n_players(&self) -> usize;

    /// `v(T)` for each coalition, given as membership flags.
    fn values(&self, coalitions: &[Vec<bool>]) -> Result<Vec<f64>, AttributionError>;
}

/// Shapley values together with the game's values at the empty and full coalitions.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyEstimate {
    pub values: Vec<f64>,
    pub empty_value: f64,
    pub full_value: f64,
}

/// The game over `(channel, segment)` features of one instance.
pub struct SegmentGame<'a> {
    model: &'a dyn Classifier,
    x: &'a TimeSeries,
    background: &'a BackgroundSet,
    class: usize,
    n_features: usize,
    cells: Vec<usize>,
}

impl<'a> SegmentGame<'a> {
    pub fn new(
        model: &'a dyn Classifier,
        x: &'a TimeSeries,
        seg: &Segmentation,
        background: &'a BackgroundSet,
        class: usize,
    ) -> Result<Self, AttributionError> {
        if background.is_empty() {
            return Err(AttributionError::EmptyBackground);
        }
        check_segmentation(x, seg)?;
        if background.shape() != x.shape() {
            return Err(AttributionError::ShapeMismatch(format!(
                "background {:?} vs instance {:?}",
                background.shape(),
                x.shape()
            )));
        }
        let n_classes = model.n_classes();
        if class >= n_classes {
            return Err(AttributionError::InvalidClass { class, n_classes });
        }
        Ok(Self { model, x, background, class, n_features: seg.n_features(), cells: seg.cell_features() })
    }
}

impl CoalitionGame for SegmentGame<'_> {
    fn n_players(&self) -> usize {
        self.n_features
    }

    fn values(&self, coalitions: &[Vec<bool>]) -> Result<Vec<f64>, AttributionError> {
        let bgs = self.background.instances();
        let batch: Vec<TimeSeries> = coalitions
            .iter()
            .flat_map(|active| bgs.iter().map(move |b| mask_with_cells(self.x, b, active, &self.cells)))
            .collect();
        let proba = self.model.predict_proba(&batch)?;
        Ok(proba
            .chunks(bgs.len())
            .map(|rows| rows.iter().map(|r| r[self.class]).sum::<f64>() / bgs.len() as f64)
            .collect())
    }
}

fn mask_flags(mask: usize, n: usize) -> Vec<bool> {
    (0..n).map(|j| mask >> j & 1 == 1).collect()
}

/// Classical Shapley values by enumerating all `2^F` coalitions.
pub fn exact_shapley<G: CoalitionGame + ?Sized>(game: &G) -> Result<ShapleyEstimate, AttributionError> {
    let n = game.n_players();
    if n > MAX_EXACT_FEATURES {
        return Err(AttributionError::TooManyFeatures(n));
    }
    let total = 1usize << n;
    let mut v = Vec::with_capacity(total);
    for start in (0..total).step_by(EXACT_BATCH) {
        let batch: Vec<Vec<bool>> = (start..(start + EXACT_BATCH).min(total)).map(|m| mask_flags(m, n)).collect();
        v.extend(game.values(&batch)?);
    }
    // weight(s) = s!(n−s−1)!/n!
    let mut fact = vec![1.0f64; n + 1];
    for i in 1..=n {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<f64> = (0..n).map(|s| fact[s] * fact[n - s - 1] / fact[n]).collect();
    let mut phi = vec![0.0; n];
    for (j, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << j;
        for mask in (0..total).filter(|m| m & bit == 0) {
            *p += weight[mask.count_ones() as usize] * (v[mask | bit] - v[mask]);
        }
    }
    Ok(ShapleyEstimate { values: phi, empty_value: v[0], full_value: v[total - 1] })
}

struct Walk {
    marginals: Vec<f64>,
    empty: f64,
    full: f64,
}

fn walk_permutation<G: CoalitionGame + ?Sized>(game: &G, seed: u64, index: usize) -> Result<Walk, AttributionError> {
    let n = game.n_players();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, &["shapley_permutation", &index.to_string()]));
    let mut active = vec![false; n];
    let mut coalitions = Vec::with_capacity(n + 1);
    coalitions.push(active.clone());
    for &j in &order {
        active[j] = true;
        coalitions.push(active.clone());
    }
    let v = game.values(&coalitions)?;
    let mut marginals = vec![0.0; n];
    for (step, &j) in order.iter().enumerate() {
        marginals[j] = v[step + 1] - v[step];
    }
    Ok(Walk { marginals, empty: v[0], full: v[n] })
}

/// Shapley Value Sampling: `m` seeded permutations, one batched evaluation of `F + 1`
/// coalitions per permutation. Permutation `i` draws from its own substream of `seed`,
/// so the result does not depend on scheduling.
pub fn sampled_shapley<G: CoalitionGame + ?Sized>(
    game: &G,
    m: usize,
    seed: u64,
) -> Result<ShapleyEstimate, AttributionError> {
    if m == 0 {
        return Err(AttributionError::InvalidPermutationCount);
    }
    #[cfg(feature = "parallel")]
    let walks: Vec<Walk> = {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(|i| walk_permutation(game, seed, i)).collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let walks: Vec<Walk> = (0..m).map(|i| walk_permutation(game, seed, i)).collect::<Result<_, _>>()?;

    let n = game.n_players();
    let mut phi = vec![0.0; n];
    for w in &walks {
        phi.iter_mut().zip(&w.marginals).for_each(|(p, d)| *p += d);
    }
    phi.iter_mut().for_each(|p| *p /= m as f64);
    Ok(ShapleyEstimate { values: phi, empty_value: walks[0].empty, full_value: walks[0].full })
}

fn into_attribution(
    est: ShapleyEstimate,
    seg: &Segmentation,
    class: usize,
    n_permutations: usize,
    seed: u64,
) -> SegmentAttribution {
    SegmentAttribution {
        values: est.values,
        explained_class: class,
        base_value: est.empty_value,
        full_value: est.full_value,
        segmentation: seg.clone(),
        n_permutations,
        seed,
    }
}

/// Exact Shapley values of the segment game. Limited to [`MAX_EXACT_FEATURES`] features.
pub fn shapley_exact(
    model: &dyn Classifier,
    x: &TimeSeries,
    seg: &Segmentation,
    background: &BackgroundSet,
    class: usize,
) -> Result<SegmentAttribution, AttributionError> {
    if seg.n_features() > MAX_EXACT_FEATURES {
        return Err(AttributionError::TooManyFeatures(seg.n_features()));
    }
    let game = SegmentGame::new(model, x, seg, background, class)?;
    Ok(into_attribution(exact_shapley(&game)?, seg, class, 0, 0))
}

/// Permutation-sampled Shapley values of the segment game.
pub fn shapley_sampling(
    model: &dyn Classifier,
    x: &TimeSeries,
    seg: &Segmentation,
    background: &BackgroundSet,
    class: usize,
    m: usize,
    seed: u64,
) -> Result<SegmentAttribution, AttributionError> {
    if m == 0 {
        return Err(AttributionError::InvalidPermutationCount);
    }
    let game = SegmentGame::new(model, x, seg, background, class)?;
    Ok(into_attribution(sampled_shapley(&game, m, seed)?, seg, class, m, seed))
}
