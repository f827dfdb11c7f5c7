//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use tempocast::matrix::Matrix;
use tempocast::nn::Parameters;

/// O(N^2) DFT straight from the definition.
pub fn direct_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, v)| {
                    let ang = -2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
                    v * Complex64::new(ang.cos(), ang.sin())
                })
                .sum()
        })
        .collect()
}

/// Slope of `v` against t = 1..T from the 2x2 normal equations, solved by
/// Cramer's rule.
pub fn ols_slope(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let (mut st, mut stt, mut sv, mut stv) = (0.0, 0.0, 0.0, 0.0);
    for (i, &y) in v.iter().enumerate() {
        let t = (i + 1) as f64;
        st += t;
        stt += t * t;
        sv += y;
        stv += t * y;
    }
    (n * stv - st * sv) / (n * stt - st * st)
}

/// Cumulative means computed by summing every prefix from scratch.
pub fn prefix_means(v: &[f64]) -> Vec<f64> {
    (1..=v.len())
        .map(|t| v[..t].iter().sum::<f64>() / t as f64)
        .collect()
}

pub fn rank_pool_oracle(window: &Matrix, smoothing: bool) -> Vec<f64> {
    (0..window.cols())
        .map(|c| {
            let col = window.column(c);
            if smoothing {
                ols_slope(&prefix_means(&col))
            } else {
                ols_slope(&col)
            }
        })
        .collect()
}

pub fn multi_scale_oracle(retro: &Matrix, smoothing: bool) -> Vec<f64> {
    let mut out = Vec::new();
    for s in [4, 8, 12, 16, 24] {
        out.extend(rank_pool_oracle(
            &retro.slice_rows(retro.rows() - s, retro.rows()),
            smoothing,
        ));
    }
    out
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.gen_range(-scale..scale))
            .collect(),
    )
    .unwrap()
}

/// Worst relative disagreement between `analytic` and central differences of
/// `loss` over every parameter. The denominator is floored at 1e-6, so a
/// gradient is only excused when its absolute error is below 1e-10.
pub fn max_grad_error<N: Parameters + Clone>(
    net: &N,
    analytic: &N,
    loss: impl Fn(&N) -> f64,
) -> (f64, usize) {
    let h = 1e-5;
    let grads = analytic.flatten();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    let mut k = 0;
    let n_tensors = probe.tensors().len();
    for t in 0..n_tensors {
        let len = probe.tensors()[t].len();
        for i in 0..len {
            let orig = probe.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + h;
            let lp = loss(&probe);
            probe.tensors_mut()[t][i] = orig - h;
            let lm = loss(&probe);
            probe.tensors_mut()[t][i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            let a = grads[k];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
            k += 1;
        }
    }
    (worst, k)
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Least squares on `[p, q, 1]` through the normal equations.
pub fn normal_equations_fusion(p: &[f64], q: &[f64], y: &[f64]) -> [f64; 3] {
    let rows: Vec<[f64; 3]> = p.iter().zip(q).map(|(&a, &b)| [a, b, 1.0]).collect();
    let mut ata = vec![vec![0.0; 3]; 3];
    let mut aty = vec![0.0; 3];
    for (r, &yv) in rows.iter().zip(y) {
        for i in 0..3 {
            aty[i] += r[i] * yv;
            for j in 0..3 {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    let x = gauss_solve(ata, aty);
    [x[0], x[1], x[2]]
}

/// Two-pass population variance.
pub fn two_pass_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}
