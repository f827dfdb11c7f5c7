//! Library results compared with independent reference computations.

mod common;

use chrono::{Duration, NaiveDate};
use common::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempocast::ensemble::fit_fusion;
use tempocast::features::{dominant_bin, fft, multi_scale_rank_pool, rank_pool};
use tempocast::ingest::{summarize, Channel, TimeSeriesFrame, NUM_CHANNELS};
use tempocast::matrix::Matrix;
use tempocast::nn::{
    lstm_forward, lstm_step, mixer_forward, mlp_forward, CellActivation, Lstm, Mixer, MixerConfig,
    Mlp,
};
use tempocast::preprocess::{make_windows, WindowSpec};

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn gelu(z: f64) -> f64 {
    0.5 * z * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (z + 0.044715 * z.powi(3))).tanh())
}

fn affine(w: &Matrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    (0..w.rows())
        .map(|o| b[o] + (0..w.cols()).map(|i| w.get(o, i) * x[i]).sum::<f64>())
        .collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{x} vs {y}");
    }
}

#[test]
fn mlp_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mlp = Mlp::new(7, &[5, 4, 3], 6, &mut rng);
    for _ in 0..10 {
        let x: Vec<f64> = (0..7).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut a = x.clone();
        for (k, l) in mlp.layers.iter().enumerate() {
            let z = affine(&l.weight, &l.bias, &a);
            a = if k + 1 == mlp.layers.len() {
                z.into_iter().map(sig).collect()
            } else {
                z.into_iter().map(f64::tanh).collect()
            };
        }
        close(&mlp_forward(&mlp, &x).unwrap(), &a, 1e-12);
    }
}

/// The gate equations applied literally to `[h_prev, x]`.
fn literal_step(cell: &Lstm, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let cat: Vec<f64> = h.iter().chain(x).copied().collect();
    let f: Vec<f64> = affine(&cell.w_f, &cell.b_f, &cat)
        .into_iter()
        .map(sig)
        .collect();
    let i: Vec<f64> = affine(&cell.w_i, &cell.b_i, &cat)
        .into_iter()
        .map(sig)
        .collect();
    let g: Vec<f64> = affine(&cell.w_c, &cell.b_c, &cat)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let o: Vec<f64> = affine(&cell.w_o, &cell.b_o, &cat)
        .into_iter()
        .map(sig)
        .collect();
    let c_new: Vec<f64> = (0..c.len()).map(|j| f[j] * c[j] + i[j] * g[j]).collect();
    let h_new: Vec<f64> = (0..c.len())
        .map(|j| {
            let act = match cell.cell_activation {
                CellActivation::Tanh => c_new[j].tanh(),
                CellActivation::Softsign => c_new[j] / (1.0 + c_new[j].abs()),
            };
            o[j] * act
        })
        .collect();
    let y = affine(&cell.w_y, &cell.b_y, &h_new)
        .into_iter()
        .map(sig)
        .collect();
    (h_new, c_new, y)
}

#[test]
fn lstm_matches_literal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for act in [CellActivation::Tanh, CellActivation::Softsign] {
        let cell = Lstm::new(3, 2, 6, act, &mut rng);
        let h0: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c0: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = [0.3, -1.2, 0.8];
        let step = lstm_step(&cell, &x, &h0, &c0).unwrap();
        let (h, c, y) = literal_step(&cell, &x, &h0, &c0);
        close(&step.h, &h, 1e-12);
        close(&step.c, &c, 1e-12);
        close(&step.y, &y, 1e-12);

        let seq = random_matrix(&mut rng, 5, 3, 1.0);
        let (mut h, mut c, mut y) = (vec![0.0; 2], vec![0.0; 2], Vec::new());
        for t in 0..5 {
            (h, c, y) = literal_step(&cell, seq.row(t), &h, &c);
        }
        close(&lstm_forward(&cell, &seq).unwrap(), &y, 1e-12);
    }
}

fn literal_layer_norm(row: &[f64], gamma: &[f64], beta: &[f64]) -> Vec<f64> {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    row.iter()
        .enumerate()
        .map(|(c, v)| (v - mean) / (var + 1e-5).sqrt() * gamma[c] + beta[c])
        .collect()
}

#[test]
fn mixer_matches_literal_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = MixerConfig {
        blocks: 2,
        tokens: 3,
        channels: 4,
        token_hidden: 5,
        channel_hidden: 6,
        outputs: 6,
    };
    let mixer = Mixer::new(cfg, &mut rng).unwrap();
    let x0 = random_matrix(&mut rng, 3, 4, 1.0);
    let mut x: Vec<Vec<f64>> = (0..3).map(|t| x0.row(t).to_vec()).collect();
    for b in &mixer.blocks {
        let u: Vec<Vec<f64>> = x
            .iter()
            .map(|r| literal_layer_norm(r, &b.ln1_gamma, &b.ln1_beta))
            .collect();
        for c in 0..4 {
            let col: Vec<f64> = (0..3).map(|t| u[t][c]).collect();
            let hid: Vec<f64> = affine(&b.token_w1, &b.token_b1, &col)
                .into_iter()
                .map(gelu)
                .collect();
            let out = affine(&b.token_w2, &b.token_b2, &hid);
            for t in 0..3 {
                x[t][c] += out[t];
            }
        }
        for row in x.iter_mut() {
            let u = literal_layer_norm(row, &b.ln2_gamma, &b.ln2_beta);
            let hid: Vec<f64> = affine(&b.channel_w1, &b.channel_b1, &u)
                .into_iter()
                .map(gelu)
                .collect();
            let out = affine(&b.channel_w2, &b.channel_b2, &hid);
            for c in 0..4 {
                row[c] += out[c];
            }
        }
    }
    let pooled: Vec<f64> = (0..4)
        .map(|c| x.iter().map(|r| r[c]).sum::<f64>() / 3.0)
        .collect();
    let y: Vec<f64> = affine(&mixer.head_w, &mixer.head_b, &pooled)
        .into_iter()
        .map(sig)
        .collect();
    close(&mixer_forward(&mixer, &x0).unwrap(), &y, 1e-12);
}

#[test]
fn fft_matches_direct_dft_at_many_lengths() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in [1, 2, 3, 5, 7, 8, 12, 16, 24, 30, 32, 36, 64] {
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let got = fft(&x).unwrap();
        let want = direct_dft(&x);
        let scale = want.iter().map(|v| v.norm()).fold(1e-300, f64::max);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() / scale < 1e-9, "n = {n}");
        }
    }
}

#[test]
fn rank_pool_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let t = rng.gen_range(2..30);
        let w = random_matrix(&mut rng, t, 8, 3.0);
        for smoothing in [false, true] {
            close(
                &rank_pool(&w, smoothing).unwrap(),
                &rank_pool_oracle(&w, smoothing),
                1e-9,
            );
        }
    }
    let retro = random_matrix(&mut rng, 24, 8, 2.0);
    close(
        &multi_scale_rank_pool(&retro, true).unwrap(),
        &multi_scale_oracle(&retro, true),
        1e-9,
    );
}

#[test]
fn smoothed_line_slope() {
    // Column a*t: cumulative means are a(t+1)/2, slope a/2.
    let a = 0.37;
    let w = Matrix::from_vec(24, 1, (1..=24).map(|t| a * t as f64).collect()).unwrap();
    let want = ols_slope(&prefix_means(&w.column(0)));
    assert!((rank_pool(&w, true).unwrap()[0] - want).abs() < 1e-12);
    assert!((want - a / 2.0).abs() < 1e-12);
}

#[test]
fn dominant_bin_matches_direct_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let x: Vec<f64> = (0..24).map(|_| rng.gen_range(0.0..1.0)).collect();
        let spec = direct_dft(
            &x.iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect::<Vec<_>>(),
        );
        let k = (1..=12)
            .max_by(|&a, &b| spec[a].norm().total_cmp(&spec[b].norm()).then(b.cmp(&a)))
            .unwrap();
        let d = dominant_bin(&x).unwrap();
        assert_eq!(d.bin, k);
        assert!((d.magnitude - spec[k].norm()).abs() < 1e-9);
        // Compare on the circle: a real negative bin may land on either side of pi.
        let diff = (d.phase - spec[k].arg()).rem_euclid(2.0 * std::f64::consts::PI);
        assert!(diff.min(2.0 * std::f64::consts::PI - diff) < 1e-9);
    }
}

#[test]
fn fusion_matches_normal_equations() {
    let p = [1.0, 2.0, 3.5, 0.5];
    let q = [0.8, 2.6, 2.9, 1.1];
    let y = [1.2, 2.1, 3.3, 0.4];
    let w = fit_fusion(&p, &q, &y).unwrap();
    let o = normal_equations_fusion(&p, &q, &y);
    close(&[w.w_fft, w.w_rp, w.intercept], &o, 1e-9);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let n = rng.gen_range(3..40);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..6.0)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..6.0)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 0.6 * p[i] + 0.3 * q[i] + rng.gen_range(-0.5..0.5))
            .collect();
        let w = fit_fusion(&p, &q, &y).unwrap();
        close(
            &[w.w_fft, w.w_rp, w.intercept],
            &normal_equations_fusion(&p, &q, &y),
            1e-9,
        );
    }
}

fn frame(values: &[f64]) -> TimeSeriesFrame {
    let t0 = NaiveDate::from_ymd_opt(2022, 6, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    let n = values.len();
    let cols: [Vec<f64>; NUM_CHANNELS] = std::array::from_fn(|c| {
        if c == Channel::Ws10mi.index() {
            values.to_vec()
        } else if c == Channel::Prs.index() {
            vec![1000.0; n]
        } else {
            (0..n).map(|i| (i % 5) as f64).collect()
        }
    });
    TimeSeriesFrame::new(
        (0..n).map(|i| t0 + Duration::hours(i as i64)).collect(),
        cols,
    )
    .unwrap()
}

#[test]
fn summary_std_matches_two_pass() {
    let f = frame(&[1.0, 2.0, 3.0, 4.0]);
    let s = summarize(&f).unwrap();
    let ws = s.get(Channel::Ws10mi);
    assert_eq!(ws.mean, 2.5);
    assert!((ws.std - two_pass_variance(&[1.0, 2.0, 3.0, 4.0]).sqrt()).abs() < 1e-15);
}

#[test]
fn windows_match_origin_enumeration() {
    for (len, lookback) in [(30, 4), (31, 16), (45, 8), (60, 12)] {
        let values: Vec<f64> = (0..len).map(|i| i as f64 * 0.1).collect();
        let ds = make_windows(&frame(&values), WindowSpec::new(lookback)).unwrap();
        // An origin o is valid when rows o-23..=o and o+1..=o+6 all exist.
        let origins: Vec<usize> = (0..len).filter(|&o| o >= 23 && o + 6 < len).collect();
        assert_eq!(
            ds.samples.iter().map(|s| s.origin).collect::<Vec<_>>(),
            origins
        );
        for s in &ds.samples {
            let want: Vec<f64> = (s.origin + 1..=s.origin + 6).map(|r| values[r]).collect();
            assert_eq!(s.target, want);
            assert_eq!(s.input.rows(), lookback);
            assert_eq!(
                s.input.get(lookback - 1, Channel::Ws10mi.index()),
                values[s.origin]
            );
        }
    }
}
