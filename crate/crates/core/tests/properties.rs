mod common;

use proptest::prelude::*;

use common::*;
use segshap::attribution::{
    normalize_to_timepoints, replicate_to_timepoints, sampled_shapley, shapley_sampling, BackgroundSet,
    CoalitionGame, ExpansionMode, SegmentGame,
};
use segshap::data::{average_instance, compute_channel_stats, synth_bump_dataset, TimeSeries};
use segshap::evaluation::{aucd_with_representative, interpret_time};
use segshap::model::argmax;
use segshap::segmentation::{normalized_entropy, scatter_cost, segment, segment_equal, segment_kernelcpd};
use segshap::{
    Classifier, EvalConfig, Perturbation, SegmentAttribution, Segmentation, SegmentationConfig, SegmentationMethod,
    TimepointAttribution,
};

fn signal(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    len.prop_flat_map(|l| prop::collection::vec(-3.0..3.0f64, l))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_method_returns_exactly_n_covering_segments(values in signal(48..96), n in 1usize..6, d in 1usize..3) {
        let len = values.len();
        let rows: Vec<Vec<f64>> = (0..d).map(|c| values.iter().map(|v| v * (c + 1) as f64).collect()).collect();
        let x = series(rows);
        for method in SegmentationMethod::ALL {
            let seg = segment(&x, &SegmentationConfig::new(method, n)).unwrap();
            prop_assert_eq!(seg.n_channels(), d);
            for c in 0..d {
                let b = seg.channel_boundaries(c);
                prop_assert_eq!(b.len(), n + 1, "{} on channel {}", method, c);
                prop_assert_eq!(b[0], 0);
                prop_assert_eq!(b[n], len);
                prop_assert!(b.windows(2).all(|w| w[0] < w[1]), "{} gave {:?}", method, b);
            }
            let again = segment(&x, &SegmentationConfig::new(method, n)).unwrap();
            prop_assert_eq!(&seg, &again);
        }
    }

    #[test]
    fn entropy_is_bounded_by_the_equal_split(len in 10usize..200, n in 1usize..10, seed: u64) {
        let n = n.min(len);
        let b = random_boundaries(&mut rng(seed), len, n);
        let lengths: Vec<usize> = b.windows(2).map(|w| w[1] - w[0]).collect();
        let h = normalized_entropy(&Segmentation::shared(1, b).unwrap());
        prop_assert!((0.0..=1.0 + 1e-12).contains(&h));
        prop_assert!((h - entropy_by_formula(&lengths)).abs() < 1e-12);
        prop_assert!(h <= normalized_entropy(&segment_equal(len, n).unwrap()) + 1e-12);
    }

    #[test]
    fn kernelcpd_beats_random_placements(values in signal(20..60), n in 1usize..5, seed: u64) {
        let x = TimeSeries::univariate(values.clone()).unwrap();
        let best = segment_kernelcpd(&x, n, 2).unwrap();
        let cost = scatter_cost(&x, &best);
        prop_assert!((cost - scatter(&x, best.channel_boundaries(0))).abs() < 1e-9);
        let mut r = rng(seed);
        for _ in 0..10 {
            let b = random_boundaries(&mut r, values.len(), n);
            if b.windows(2).all(|w| w[1] - w[0] >= 2) {
                prop_assert!(cost <= scatter(&x, &b) + 1e-9);
            }
        }
    }

    #[test]
    fn expansions_preserve_segment_sums(len in 4usize..80, d in 1usize..3, seed: u64) {
        let mut r = rng(seed);
        let n = 1 + seed as usize % len.min(8);
        let bounds = (0..d).map(|_| random_boundaries(&mut r, len, n)).collect();
        let seg = Segmentation::new(segshap::SegmentationMode::PerChannel, bounds).unwrap();
        let values = (0..seg.n_features()).map(|i| (i as f64 - 3.5) * 0.37).collect();
        let attr = SegmentAttribution::from_values(values, seg.clone()).unwrap();
        let norm = normalize_to_timepoints(&attr);
        let rep = replicate_to_timepoints(&attr);
        for f in seg.features() {
            let phi = attr.values[seg.features().iter().position(|g| g == &f).unwrap()];
            let s_norm: f64 = norm.channel(f.channel)[f.range.clone()].iter().sum();
            let s_rep: f64 = rep.channel(f.channel)[f.range.clone()].iter().sum();
            prop_assert!((s_norm - phi).abs() <= 1e-12);
            prop_assert!((s_rep - f.range.len() as f64 * phi).abs() <= 1e-12);
        }
    }

    #[test]
    fn sampler_is_efficient(seed: u64, classes in 2usize..4, n in 2usize..7, m in 1usize..20) {
        let mut r = rng(seed);
        let model = random_centroid_model(&mut r, classes, 1, 24);
        let x = random_series(&mut r, 1, 24);
        let seg = segment_equal(24, n).unwrap();
        let bg = BackgroundSet::custom(vec![random_series(&mut r, 1, 24), random_series(&mut r, 1, 24)]).unwrap();
        let class = model.predict(&x).unwrap();
        let attr = shapley_sampling(&model, &x, &seg, &bg, class, m, seed).unwrap();
        let sum: f64 = attr.values.iter().sum();
        prop_assert!((sum - (attr.full_value - attr.base_value)).abs() <= 1e-9);
        let all = coalition_value(&model, &x, &seg, &bg, class, &vec![true; n]);
        let none = coalition_value(&model, &x, &seg, &bg, class, &vec![false; n]);
        prop_assert!((attr.full_value - all).abs() <= 1e-12);
        prop_assert!((attr.base_value - none).abs() <= 1e-12);
    }

    #[test]
    fn evaluation_ignores_positive_rescaling(seed: u64, factor in 0.01f64..100.0, strategy_index in 0usize..4) {
        let mut r = rng(seed);
        let model = random_centroid_model(&mut r, 2, 2, 16);
        let x = random_series(&mut r, 2, 16);
        let rep = random_series(&mut r, 2, 16);
        let values = (0..32).map(|_| r.random_range(-1.0..1.0)).collect();
        let attr = TimepointAttribution::from_values(2, 16, values, ExpansionMode::Replicated).unwrap();
        let scaled = attr.scaled(factor);
        let train = synth_bump_dataset(6, 2, 16, 2, 4, 0.5, seed).unwrap();
        let stats = compute_channel_stats(&train).unwrap();
        let cfg = EvalConfig::with_seed(seed);
        let strategy = Perturbation::ALL[strategy_index];
        prop_assert_eq!(
            interpret_time(&model, &x, &attr, strategy, &stats, &cfg).unwrap(),
            interpret_time(&model, &x, &scaled, strategy, &stats, &cfg).unwrap()
        );
        prop_assert_eq!(
            aucd_with_representative(&model, &x, &attr, &rep, 1, &cfg).unwrap(),
            aucd_with_representative(&model, &x, &scaled, &rep, 1, &cfg).unwrap()
        );
    }

    #[test]
    fn reversed_ranking_negates_aucd(seed: u64, d in 1usize..3) {
        // 50 cells per channel: a 4% step of d·50 cells always divides the total
        let len = 50;
        let mut r = rng(seed);
        let model = random_centroid_model(&mut r, 3, d, len);
        let x = random_series(&mut r, d, len);
        let rep = random_series(&mut r, d, len);
        let n = d * len;
        let mut ranks: Vec<f64> = (1..=n).map(|v| v as f64).collect();
        for i in (1..n).rev() {
            ranks.swap(i, r.random_range(0..=i));
        }
        let signs: Vec<f64> = (0..n).map(|_| if r.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let forward: Vec<f64> = ranks.iter().zip(&signs).map(|(v, s)| v * s).collect();
        let backward: Vec<f64> = ranks.iter().zip(&signs).map(|(v, s)| (n as f64 + 1.0 - v) * s).collect();
        let cfg = EvalConfig::with_seed(seed);
        let a = TimepointAttribution::from_values(d, len, forward, ExpansionMode::Replicated).unwrap();
        let b = TimepointAttribution::from_values(d, len, backward, ExpansionMode::Replicated).unwrap();
        let fa = aucd_with_representative(&model, &x, &a, &rep, 0, &cfg).unwrap();
        let fb = aucd_with_representative(&model, &x, &b, &rep, 0, &cfg).unwrap();
        prop_assert!((fa.aucd + fb.aucd).abs() <= 1e-12, "{} vs {}", fa.aucd, fb.aucd);
        prop_assert!((fa.audc - fb.auic).abs() <= 1e-12);
    }

    #[test]
    fn model_outputs_are_distributions(seed: u64, classes in 2usize..5) {
        let mut r = rng(seed);
        let model = random_centroid_model(&mut r, classes, 2, 12);
        let batch: Vec<TimeSeries> = (0..5).map(|_| random_series(&mut r, 2, 12)).collect();
        for row in model.predict_proba(&batch).unwrap() {
            prop_assert_eq!(row.len(), classes);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(argmax(&row) < classes);
        }
    }

    #[test]
    fn average_instance_lies_within_the_instances(seed: u64, n in 1usize..8) {
        let ds = synth_bump_dataset(n.max(2), 2, 20, 2, 5, 1.0, seed).unwrap();
        let avg = average_instance(&ds).unwrap();
        let stats = compute_channel_stats(&ds).unwrap();
        for i in 0..avg.n_cells() {
            let lo = ds.instances().iter().map(|x| x.as_slice()[i]).fold(f64::INFINITY, f64::min);
            let hi = ds.instances().iter().map(|x| x.as_slice()[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-12 <= avg.as_slice()[i] && avg.as_slice()[i] <= hi + 1e-12);
        }
        for c in 0..2 {
            let mean = avg.channel(c).iter().sum::<f64>() / 20.0;
            prop_assert!((mean - stats.mean[c]).abs() < 1e-12);
        }
    }
}

/// Averaged over seeds, the sampler's error against the subset formula shrinks with `m`.
#[test]
fn sampler_error_shrinks_with_more_permutations() {
    let ms = [4usize, 16, 64, 256];
    let mut rmse = vec![0.0; ms.len()];
    for case in 0..20u64 {
        let mut r = rng(1000 + case);
        let model = random_centroid_model(&mut r, 2, 1, 32);
        let x = random_series(&mut r, 1, 32);
        let seg = segment_equal(32, 6).unwrap();
        let bg = BackgroundSet::custom(vec![random_series(&mut r, 1, 32)]).unwrap();
        let class = model.predict(&x).unwrap();
        let game = SegmentGame::new(&model, &x, &seg, &bg, class).unwrap();
        let exact = shapley_by_subsets(|t| coalition_value(&model, &x, &seg, &bg, class, t), game.n_players());
        for (slot, &m) in rmse.iter_mut().zip(&ms) {
            let est = sampled_shapley(&game, m, case).unwrap();
            let mse = est.values.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / exact.len() as f64;
            *slot += mse.sqrt() / 20.0;
        }
    }
    assert!(rmse.windows(2).all(|w| w[1] < w[0]), "{rmse:?}");
}

/// Without noise, instances of two classes differ exactly on their two bump windows.
#[test]
fn noiseless_classes_are_two_bump_widths_apart() {
    for (len, classes, width) in [(20, 2, 5), (100, 2, 10), (60, 3, 7)] {
        let ds = synth_bump_dataset(2 * classes, 2, len, classes, width, 0.0, 1).unwrap();
        let xs = ds.instances();
        for a in 0..classes {
            assert_eq!(xs[a].squared_distance(&xs[a + classes]), 0.0);
            for b in a + 1..classes {
                assert_eq!(xs[a].squared_distance(&xs[b]), (2 * width) as f64);
            }
        }
    }
}
