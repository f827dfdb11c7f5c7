mod common;

use common::{max_grad_error, random_matrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempocast::ensemble::fit_fusion;
use tempocast::features::{
    dominant_bin, multi_scale_rank_pool, rank_pool, FeatureSet, RANK_POOL_SCALES,
};
use tempocast::harness::{gen_synthetic, ExperimentConfig, SyntheticSpec};
use tempocast::ingest::{
    impute_gaps, parse_records, summarize, Channel, GapPolicy, TimeSeriesFrame, NUM_CHANNELS,
};
use tempocast::matrix::Matrix;
use tempocast::metrics::{mae, pearson_r, rmse};
use tempocast::nn::train::init_rng;
use tempocast::nn::{
    mse, train, ArchSpec, CellActivation, Lstm, Mixer, MixerConfig, Mlp, Network, TrainConfig,
};
use tempocast::preprocess::{make_windows, split_chronological, SplitFractions, WindowSpec};

fn frame(length: usize, seed: u64) -> TimeSeriesFrame {
    let spec = SyntheticSpec {
        length,
        ..SyntheticSpec::default()
    };
    gen_synthetic(&spec, seed).unwrap()
}

fn columns(f: &TimeSeriesFrame, keep: impl Fn(usize) -> bool) -> [Vec<f64>; NUM_CHANNELS] {
    Channel::ALL.map(|ch| {
        f.column(ch)
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, &v)| v)
            .collect()
    })
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn csv_round_trip_is_identity(seed in 0u64..1000, holes in prop::collection::vec((0usize..200, 0usize..8), 0..20)) {
        let f = frame(200, seed);
        let mut cols = columns(&f, |_| true);
        for (r, c) in holes {
            cols[c][r] = f64::NAN;
        }
        let f = TimeSeriesFrame::new(f.timestamps().to_vec(), cols).unwrap();
        let text = f.to_csv();
        let back = parse_records(&text).unwrap();
        prop_assert_eq!(back.timestamps(), f.timestamps());
        for ch in Channel::ALL {
            prop_assert_eq!(bits(back.column(ch)), bits(f.column(ch)));
        }
        prop_assert_eq!(back.to_csv(), text);
    }

    #[test]
    fn summary_ignores_row_order(seed in 0u64..1000, shuffle in 0u64..1000) {
        use rand::seq::SliceRandom;
        let f = frame(200, seed);
        let mut order: Vec<usize> = (0..f.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let cols = Channel::ALL.map(|ch| order.iter().map(|&i| f.column(ch)[i]).collect::<Vec<_>>());
        let g = TimeSeriesFrame::new(f.timestamps().to_vec(), cols).unwrap();
        let (a, b) = (summarize(&f).unwrap(), summarize(&g).unwrap());
        for ch in Channel::ALL {
            let (x, y) = (a.get(ch), b.get(ch));
            prop_assert_eq!(x.count, y.count);
            prop_assert_eq!(x.min, y.min);
            prop_assert_eq!(x.max, y.max);
            prop_assert!((x.mean - y.mean).abs() <= 1e-12 * x.mean.abs().max(1.0));
            prop_assert!((x.std - y.std).abs() <= 1e-9 * x.std.max(1.0));
        }
    }

    #[test]
    fn forward_fill_keeps_observed_rows(seed in 0u64..1000, drop in prop::collection::btree_set(1usize..99, 0..30)) {
        let f = frame(200, seed);
        let f = TimeSeriesFrame::new(f.timestamps()[..100].to_vec(), columns(&f, |i| i < 100).map(|c| c[..100].to_vec())).unwrap();
        let kept: Vec<usize> = (0..100).filter(|i| !drop.contains(i)).collect();
        let ts = kept.iter().map(|&i| f.timestamps()[i]).collect();
        let sparse = TimeSeriesFrame::new(ts, columns(&f, |i| !drop.contains(&i))).unwrap();
        let (filled, report) = impute_gaps(&sparse, GapPolicy::ForwardFill).unwrap();
        prop_assert_eq!(filled.len(), 100);
        prop_assert_eq!(report.inserted_hours.len(), drop.len());
        for &i in &kept {
            prop_assert_eq!(filled.row(i), f.row(i));
        }
    }

    #[test]
    fn window_count_formula(length in 30usize..120, lookback in 1usize..=24, horizons in 1usize..=6) {
        let f = frame(200, 1);
        let f = TimeSeriesFrame::new(f.timestamps()[..length].to_vec(), columns(&f, |i| i < length)).unwrap();
        let spec = WindowSpec { lookback, horizons, retro: 24 };
        let ds = make_windows(&f, spec).unwrap();
        prop_assert_eq!(ds.len(), length - 24 - horizons + 1);
        for (k, s) in ds.samples.iter().enumerate() {
            prop_assert_eq!(s.origin, 23 + k);
            prop_assert_eq!(s.input.rows(), lookback);
        }
    }

    #[test]
    fn no_target_reaches_a_later_block(length in 300usize..600, lookback in prop::sample::select(vec![4usize, 8, 12, 16])) {
        let f = frame(length, 2);
        let ds = make_windows(&f, WindowSpec::new(lookback)).unwrap();
        let (train, val, test) = split_chronological(&ds, SplitFractions::default()).unwrap();
        let last_target = |d: &tempocast::preprocess::WindowedDataset| {
            d.samples.last().map(|s| f.timestamps()[s.origin + d.spec.horizons])
        };
        let first_origin = |d: &tempocast::preprocess::WindowedDataset| d.samples.first().map(|s| s.origin_time);
        prop_assert!(last_target(&train) < first_origin(&val));
        prop_assert!(last_target(&val) < first_origin(&test));
    }

    #[test]
    fn rank_pool_invariants(seed in 0u64..1000, t_len in 2usize..30, shift in -50.0f64..50.0, k in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_matrix(&mut rng, t_len, 3, 2.0);
        let base = rank_pool(&w, false).unwrap();
        let rev = rank_pool(&Matrix::from_fn(t_len, 3, |t, d| w.get(t_len - 1 - t, d)), false).unwrap();
        for (a, b) in base.iter().zip(&rev) {
            prop_assert_eq!(*a, -*b);
        }
        let shifted = rank_pool(&w.map(|v| v + shift), false).unwrap();
        let scaled = rank_pool(&w.map(|v| k * v), false).unwrap();
        for ((a, s), c) in base.iter().zip(&shifted).zip(&scaled) {
            prop_assert!((a - s).abs() <= 1e-12 * (1.0 + shift.abs()));
            prop_assert!((k * a - c).abs() <= 1e-12 * k.max(1.0));
        }
    }

    #[test]
    fn multi_scale_is_per_scale_rank_pool(seed in 0u64..1000, smoothing: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let retro = random_matrix(&mut rng, 24, 8, 3.0);
        let got = multi_scale_rank_pool(&retro, smoothing).unwrap();
        let want: Vec<f64> = RANK_POOL_SCALES
            .iter()
            .flat_map(|&s| rank_pool(&retro.slice_rows(24 - s, 24), smoothing).unwrap())
            .collect();
        prop_assert_eq!(bits(&got), bits(&want));
    }

    #[test]
    fn dominant_bin_ignores_offsets(x in prop::collection::vec(0.0f64..1.0, 24), c in -10.0f64..10.0) {
        let a = dominant_bin(&x).unwrap();
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let b = dominant_bin(&shifted).unwrap();
        prop_assert_eq!(a.bin, b.bin);
        prop_assert!((a.magnitude - b.magnitude).abs() < 1e-9);
    }

    #[test]
    fn metric_identities(pairs in prop::collection::vec((0.0f64..20.0, 0.0f64..20.0), 2..60), a in 0.01f64..10.0, b in -10.0f64..10.0, c in -100.0f64..100.0) {
        let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert!(rmse(&p, &t).unwrap() >= mae(&p, &t).unwrap());
        let q: Vec<f64> = p.iter().map(|v| a * v + b).collect();
        if let (Some(r1), Some(r2)) = (pearson_r(&p, &t).unwrap(), pearson_r(&q, &t).unwrap()) {
            prop_assert!((r1 - r2).abs() < 1e-12);
        }
        let (ps, ts): (Vec<f64>, Vec<f64>) = (p.iter().map(|v| v + c).collect(), t.iter().map(|v| v + c).collect());
        prop_assert!((mae(&ps, &ts).unwrap() - mae(&p, &t).unwrap()).abs() < 1e-10);
        prop_assert!((rmse(&ps, &ts).unwrap() - rmse(&p, &t).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn fusion_permutation_and_scale(seed in 0u64..1000, n in 5usize..40, c in 0.1f64..10.0) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
        let y: Vec<f64> = (0..n).map(|i| 0.6 * p[i] + 0.3 * q[i] + rng.gen_range(-0.5..0.5)).collect();
        let w = fit_fusion(&p, &q, &y).unwrap();
        let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
        let wr = fit_fusion(&rev(&p), &rev(&q), &rev(&y)).unwrap();
        let ys: Vec<f64> = y.iter().map(|v| c * v).collect();
        let wc = fit_fusion(&p, &q, &ys).unwrap();
        for (a, b, s) in [
            (w.w_fft, wr.w_fft, wc.w_fft),
            (w.w_rp, wr.w_rp, wc.w_rp),
            (w.intercept, wr.intercept, wc.intercept),
        ] {
            prop_assert!((a - b).abs() < 1e-9);
            prop_assert!((c * a - s).abs() < 1e-9 * c.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mlp_gradients_on_random_shapes(seed in 0u64..1000, input in 1usize..6, hidden in prop::collection::vec(1usize..6, 1..3), batch in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mlp = Mlp::new(input, &hidden, 6, &mut rng);
        let x = random_matrix(&mut rng, batch, input, 1.5);
        let y = random_matrix(&mut rng, batch, 6, 0.5).map(|v| v + 0.5);
        let (_, g) = mlp.loss_and_grad(&x, &y).unwrap();
        let (err, _) = max_grad_error(&mlp, &g, |m| m.loss_and_grad(&x, &y).unwrap().0);
        prop_assert!(err < 1e-4, "relative error {}", err);
    }

    #[test]
    fn lstm_gradients_on_random_shapes(seed in 0u64..1000, input in 1usize..4, units in 1usize..5, steps in 3usize..6, softsign: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let act = if softsign { CellActivation::Softsign } else { CellActivation::Tanh };
        let lstm = Lstm::new(input, units, 6, act, &mut rng);
        let seqs: Vec<Matrix> = (0..2).map(|_| random_matrix(&mut rng, steps, input, 1.0)).collect();
        let y = random_matrix(&mut rng, 2, 6, 0.5).map(|v| v + 0.5);
        let (_, g) = lstm.loss_and_grad(&seqs, &y).unwrap();
        let (err, _) = max_grad_error(&lstm, &g, |m| m.loss_and_grad(&seqs, &y).unwrap().0);
        prop_assert!(err < 1e-4, "relative error {}", err);
    }

    #[test]
    fn mixer_gradients_on_random_shapes(seed in 0u64..1000, tokens in 2usize..5, channels in 2usize..5, hidden in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = MixerConfig { blocks: 2, tokens, channels, token_hidden: hidden, channel_hidden: hidden + 1, outputs: 6 };
        let mixer = Mixer::new(cfg, &mut rng).unwrap();
        let seqs: Vec<Matrix> = (0..2).map(|_| random_matrix(&mut rng, tokens, channels, 1.0)).collect();
        let y = random_matrix(&mut rng, 2, 6, 0.5).map(|v| v + 0.5);
        let (_, g) = mixer.loss_and_grad(&seqs, &y).unwrap();
        let (err, _) = max_grad_error(&mixer, &g, |m| m.loss_and_grad(&seqs, &y).unwrap().0);
        prop_assert!(err < 1e-4, "relative error {}", err);
    }

    #[test]
    fn config_text_round_trips(lr in 1e-5f64..1e-1, patience in 1usize..100, lookbacks in prop::collection::btree_set(prop::sample::select(vec![4usize, 8, 12, 16]), 1..4), seed: u64, smoothing: bool) {
        let mut cfg = ExperimentConfig::desk();
        cfg.train.adam.lr = lr;
        cfg.train.patience = patience;
        cfg.lookbacks = lookbacks.into_iter().collect();
        cfg.seed = Some(seed);
        cfg.smoothing = smoothing;
        let back = ExperimentConfig::parse(&cfg.to_kv_text()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn training_is_deterministic_and_keeps_the_best_epoch() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (lookback, set) = (4, FeatureSet::Raw);
    let dim = set.input_dim(lookback);
    let tx = random_matrix(&mut rng, 40, dim, 1.0).map(|v| v.abs());
    let ty = random_matrix(&mut rng, 40, 6, 0.4).map(|v| v + 0.5);
    let vx = random_matrix(&mut rng, 12, dim, 1.0).map(|v| v.abs());
    let vy = random_matrix(&mut rng, 12, 6, 0.4).map(|v| v + 0.5);
    let cfg = TrainConfig {
        max_epochs: 40,
        patience: 5,
        batch_size: 8,
        seed: 9,
        ..TrainConfig::desk()
    };
    let arch = ArchSpec::Mlp { hidden: vec![7, 5] };
    let run = || {
        let net = Network::new(&arch, lookback, set, 6, &mut init_rng(cfg.seed)).unwrap();
        train(net, &tx, &ty, &vx, &vy, &cfg).unwrap()
    };
    let (a, ra) = run();
    let (b, rb) = run();
    assert_eq!(a, b);
    assert_eq!(bits(&ra.val_losses), bits(&rb.val_losses));
    assert_eq!(bits(&ra.train_losses), bits(&rb.train_losses));

    let best = ra.val_losses.iter().copied().fold(f64::INFINITY, f64::min);
    let got = mse(&a.forward(&vx).unwrap(), &vy).unwrap();
    assert_eq!(got.to_bits(), best.to_bits());
    assert!(ra.val_losses.iter().all(|&v| got <= v));
}

#[test]
fn forward_passes_are_pure() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for arch in [
        ArchSpec::Mlp { hidden: vec![6] },
        ArchSpec::Lstm {
            units: 4,
            activation: CellActivation::Tanh,
        },
        ArchSpec::Mixer {
            blocks: 2,
            token_hidden: 3,
            channel_hidden: 5,
        },
    ] {
        let net = Network::new(&arch, 8, FeatureSet::FftRp, 6, &mut rng).unwrap();
        let x = random_matrix(&mut rng, 5, FeatureSet::FftRp.input_dim(8), 1.0);
        let first = net.forward(&x).unwrap();
        for _ in 0..3 {
            assert_eq!(net.forward(&x).unwrap(), first);
        }
    }
}
