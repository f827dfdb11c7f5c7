//! MLP-Mixer over a `tokens x channels` input, where tokens are time steps.
//!
//! Each block applies, with residual connections,
//! `X += TokenMLP(LN(X)^T)^T` and then `X += ChannelMLP(LN(X))`.
//! Both MLPs are `Linear -> GELU -> Linear`. The output is a sigmoid dense head
//! on the token-averaged representation.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{gemm, Matrix, Op};
use crate::nn::activation::{gelu, gelu_grad, sigmoid};
use crate::nn::{init_uniform, mse_grad, Parameters};

const LN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MixerConfig {
    pub blocks: usize,
    /// Number of tokens, the lookback.
    pub tokens: usize,
    pub channels: usize,
    pub token_hidden: usize,
    pub channel_hidden: usize,
    pub outputs: usize,
}

impl MixerConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.blocks,
            self.tokens,
            self.channels,
            self.token_hidden,
            self.channel_hidden,
            self.outputs,
        ];
        if dims.contains(&0) {
            return Err(Error::Parameter(format!(
                "mixer dimensions must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.tokens * self.channels
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixerBlock {
    pub ln1_gamma: Vec<f64>,
    pub ln1_beta: Vec<f64>,
    /// `token_hidden x tokens`
    pub token_w1: Matrix,
    pub token_b1: Vec<f64>,
    /// `tokens x token_hidden`
    pub token_w2: Matrix,
    pub token_b2: Vec<f64>,
    pub ln2_gamma: Vec<f64>,
    pub ln2_beta: Vec<f64>,
    /// `channel_hidden x channels`
    pub channel_w1: Matrix,
    pub channel_b1: Vec<f64>,
    /// `channels x channel_hidden`
    pub channel_w2: Matrix,
    pub channel_b2: Vec<f64>,
}

impl MixerBlock {
    fn zeros(cfg: &MixerConfig) -> Self {
        Self {
            ln1_gamma: vec![0.0; cfg.channels],
            ln1_beta: vec![0.0; cfg.channels],
            token_w1: Matrix::zeros(cfg.token_hidden, cfg.tokens),
            token_b1: vec![0.0; cfg.token_hidden],
            token_w2: Matrix::zeros(cfg.tokens, cfg.token_hidden),
            token_b2: vec![0.0; cfg.tokens],
            ln2_gamma: vec![0.0; cfg.channels],
            ln2_beta: vec![0.0; cfg.channels],
            channel_w1: Matrix::zeros(cfg.channel_hidden, cfg.channels),
            channel_b1: vec![0.0; cfg.channel_hidden],
            channel_w2: Matrix::zeros(cfg.channels, cfg.channel_hidden),
            channel_b2: vec![0.0; cfg.channels],
        }
    }

    fn tensors(&self) -> [&[f64]; 12] {
        [
            &self.ln1_gamma,
            &self.ln1_beta,
            self.token_w1.as_slice(),
            &self.token_b1,
            self.token_w2.as_slice(),
            &self.token_b2,
            &self.ln2_gamma,
            &self.ln2_beta,
            self.channel_w1.as_slice(),
            &self.channel_b1,
            self.channel_w2.as_slice(),
            &self.channel_b2,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut [f64]; 12] {
        [
            &mut self.ln1_gamma,
            &mut self.ln1_beta,
            self.token_w1.as_mut_slice(),
            &mut self.token_b1,
            self.token_w2.as_mut_slice(),
            &mut self.token_b2,
            &mut self.ln2_gamma,
            &mut self.ln2_beta,
            self.channel_w1.as_mut_slice(),
            &mut self.channel_b1,
            self.channel_w2.as_mut_slice(),
            &mut self.channel_b2,
        ]
    }

    fn shapes(&self) -> [(usize, usize); 12] {
        let v = |x: &Vec<f64>| (x.len(), 1);
        [
            v(&self.ln1_gamma),
            v(&self.ln1_beta),
            self.token_w1.shape(),
            v(&self.token_b1),
            self.token_w2.shape(),
            v(&self.token_b2),
            v(&self.ln2_gamma),
            v(&self.ln2_beta),
            self.channel_w1.shape(),
            v(&self.channel_b1),
            self.channel_w2.shape(),
            v(&self.channel_b2),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mixer {
    pub config: MixerConfig,
    pub blocks: Vec<MixerBlock>,
    /// `outputs x channels`
    pub head_w: Matrix,
    pub head_b: Vec<f64>,
}

/// Row-wise layer normalization cache.
struct LayerNormCache {
    xhat: Matrix,
    inv_std: Vec<f64>,
}

struct BlockCache {
    ln1: LayerNormCache,
    /// Transposed normalized input, `channels x tokens`.
    u1t: Matrix,
    h1: Matrix,
    a1: Matrix,
    ln2: LayerNormCache,
    u2: Matrix,
    h2: Matrix,
    a2: Matrix,
}

fn layer_norm(x: &Matrix, gamma: &[f64], beta: &[f64]) -> (Matrix, LayerNormCache) {
    let (rows, cols) = x.shape();
    let mut xhat = Matrix::zeros(rows, cols);
    let mut out = Matrix::zeros(rows, cols);
    let mut inv_std = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / cols as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
        let is = 1.0 / (var + LN_EPS).sqrt();
        inv_std.push(is);
        for c in 0..cols {
            let xh = (row[c] - mean) * is;
            xhat.set(r, c, xh);
            out.set(r, c, gamma[c] * xh + beta[c]);
        }
    }
    (out, LayerNormCache { xhat, inv_std })
}

/// Backward through layer normalization; accumulates `dgamma`, `dbeta` and
/// returns the gradient with respect to its input.
fn layer_norm_backward(
    dy: &Matrix,
    cache: &LayerNormCache,
    gamma: &[f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Matrix {
    let (rows, cols) = dy.shape();
    let mut dx = Matrix::zeros(rows, cols);
    let mut dxhat = vec![0.0; cols];
    for r in 0..rows {
        let xh = cache.xhat.row(r);
        let d = dy.row(r);
        for c in 0..cols {
            dgamma[c] += d[c] * xh[c];
            dbeta[c] += d[c];
            dxhat[c] = d[c] * gamma[c];
        }
        let mean_d = dxhat.iter().sum::<f64>() / cols as f64;
        let mean_dx = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / cols as f64;
        let is = cache.inv_std[r];
        for (c, out) in dx.row_mut(r).iter_mut().enumerate() {
            *out = is * (dxhat[c] - mean_d - xh[c] * mean_dx);
        }
    }
    dx
}

/// `x W^T + b` for every row of `x`.
fn affine(x: &Matrix, w: &Matrix, b: &[f64]) -> Matrix {
    let mut z = Matrix::zeros(x.rows(), w.rows());
    for r in 0..z.rows() {
        z.row_mut(r).copy_from_slice(b);
    }
    gemm(1.0, x, Op::N, w, Op::T, 1.0, &mut z);
    z
}

fn add_column_sums(dst: &mut [f64], m: &Matrix) {
    for r in 0..m.rows() {
        for (d, v) in dst.iter_mut().zip(m.row(r)) {
            *d += v;
        }
    }
}

/// Backward through `Linear -> GELU -> Linear` applied row-wise.
/// Accumulates parameter gradients and returns the gradient w.r.t. the input rows.
#[allow(clippy::too_many_arguments)]
fn mlp2_backward(
    dout: &Matrix,
    input: &Matrix,
    h: &Matrix,
    a: &Matrix,
    w1: &Matrix,
    w2: &Matrix,
    gw1: &mut Matrix,
    gb1: &mut [f64],
    gw2: &mut Matrix,
    gb2: &mut [f64],
) -> Matrix {
    gemm(1.0, dout, Op::T, a, Op::N, 1.0, gw2);
    add_column_sums(gb2, dout);
    let mut dh = Matrix::zeros(dout.rows(), w2.cols());
    gemm(1.0, dout, Op::N, w2, Op::N, 0.0, &mut dh);
    for (d, &z) in dh.as_mut_slice().iter_mut().zip(h.as_slice()) {
        *d *= gelu_grad(z);
    }
    gemm(1.0, &dh, Op::T, input, Op::N, 1.0, gw1);
    add_column_sums(gb1, &dh);
    let mut din = Matrix::zeros(dout.rows(), w1.cols());
    gemm(1.0, &dh, Op::N, w1, Op::N, 0.0, &mut din);
    din
}

impl Mixer {
    pub fn zeros(config: MixerConfig) -> Self {
        Self {
            config,
            blocks: (0..config.blocks)
                .map(|_| MixerBlock::zeros(&config))
                .collect(),
            head_w: Matrix::zeros(config.outputs, config.channels),
            head_b: vec![0.0; config.outputs],
        }
    }

    /// Uniform `±1/sqrt(fan_in)` weights and biases, unit-gain layer norms.
    pub fn new(config: MixerConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut m = Self::zeros(config);
        for b in &mut m.blocks {
            b.ln1_gamma.fill(1.0);
            b.ln2_gamma.fill(1.0);
            init_uniform(b.token_w1.as_mut_slice(), config.tokens, rng);
            init_uniform(&mut b.token_b1, config.tokens, rng);
            init_uniform(b.token_w2.as_mut_slice(), config.token_hidden, rng);
            init_uniform(&mut b.token_b2, config.token_hidden, rng);
            init_uniform(b.channel_w1.as_mut_slice(), config.channels, rng);
            init_uniform(&mut b.channel_b1, config.channels, rng);
            init_uniform(b.channel_w2.as_mut_slice(), config.channel_hidden, rng);
            init_uniform(&mut b.channel_b2, config.channel_hidden, rng);
        }
        init_uniform(m.head_w.as_mut_slice(), config.channels, rng);
        init_uniform(&mut m.head_b, config.channels, rng);
        Ok(m)
    }

    pub fn zeros_like(&self) -> Mixer {
        Mixer::zeros(self.config)
    }

    fn check(&self, tokens: &Matrix) -> Result<()> {
        if tokens.shape() != (self.config.tokens, self.config.channels) {
            return Err(Error::Shape(format!(
                "mixer expects {}x{} tokens, got {}x{}",
                self.config.tokens,
                self.config.channels,
                tokens.rows(),
                tokens.cols()
            )));
        }
        Ok(())
    }

    fn run(&self, tokens: &Matrix, caches: Option<&mut Vec<BlockCache>>) -> (Vec<f64>, Vec<f64>) {
        let mut x = tokens.clone();
        let mut caches = caches;
        for b in &self.blocks {
            let (u1, ln1) = layer_norm(&x, &b.ln1_gamma, &b.ln1_beta);
            let u1t = u1.transpose();
            let h1 = affine(&u1t, &b.token_w1, &b.token_b1);
            let a1 = h1.map(gelu);
            let o1 = affine(&a1, &b.token_w2, &b.token_b2);
            for r in 0..x.rows() {
                for (c, v) in x.row_mut(r).iter_mut().enumerate() {
                    *v += o1.get(c, r);
                }
            }
            let (u2, ln2) = layer_norm(&x, &b.ln2_gamma, &b.ln2_beta);
            let h2 = affine(&u2, &b.channel_w1, &b.channel_b1);
            let a2 = h2.map(gelu);
            let o2 = affine(&a2, &b.channel_w2, &b.channel_b2);
            for (v, o) in x.as_mut_slice().iter_mut().zip(o2.as_slice()) {
                *v += o;
            }
            if let Some(c) = caches.as_deref_mut() {
                c.push(BlockCache {
                    ln1,
                    u1t,
                    h1,
                    a1,
                    ln2,
                    u2,
                    h2,
                    a2,
                });
            }
        }
        let t = x.rows() as f64;
        let pooled: Vec<f64> = (0..x.cols())
            .map(|c| (0..x.rows()).map(|r| x.get(r, c)).sum::<f64>() / t)
            .collect();
        let y = (0..self.config.outputs)
            .map(|k| {
                sigmoid(
                    self.head_b[k]
                        + self
                            .head_w
                            .row(k)
                            .iter()
                            .zip(&pooled)
                            .map(|(w, p)| w * p)
                            .sum::<f64>(),
                )
            })
            .collect();
        (pooled, y)
    }

    pub fn forward_batch(&self, seqs: &[Matrix]) -> Result<Matrix> {
        let mut out = Matrix::zeros(seqs.len(), self.config.outputs);
        for (r, s) in seqs.iter().enumerate() {
            out.row_mut(r).copy_from_slice(&mixer_forward(self, s)?);
        }
        Ok(out)
    }

    pub fn loss_and_grad(&self, seqs: &[Matrix], y: &Matrix) -> Result<(f64, Mixer)> {
        for s in seqs {
            self.check(s)?;
        }
        let cfg = self.config;
        let mut runs = Vec::with_capacity(seqs.len());
        let mut pred = Matrix::zeros(seqs.len(), cfg.outputs);
        for (r, s) in seqs.iter().enumerate() {
            let mut caches = Vec::with_capacity(self.blocks.len());
            let (pooled, out) = self.run(s, Some(&mut caches));
            pred.row_mut(r).copy_from_slice(&out);
            runs.push((pooled, caches));
        }
        let (loss, dpred) = mse_grad(&pred, y)?;

        let mut g = self.zeros_like();
        for (r, (pooled, caches)) in runs.iter().enumerate() {
            let mut dpool = vec![0.0; cfg.channels];
            for k in 0..cfg.outputs {
                let yk = pred.get(r, k);
                let dz = dpred.get(r, k) * yk * (1.0 - yk);
                g.head_b[k] += dz;
                for (c, gw) in g.head_w.row_mut(k).iter_mut().enumerate() {
                    *gw += dz * pooled[c];
                    dpool[c] += dz * self.head_w.get(k, c);
                }
            }
            let mut dx = Matrix::zeros(cfg.tokens, cfg.channels);
            let inv_t = 1.0 / cfg.tokens as f64;
            for t in 0..cfg.tokens {
                for (d, p) in dx.row_mut(t).iter_mut().zip(&dpool) {
                    *d = p * inv_t;
                }
            }
            for (bi, (b, cache)) in self.blocks.iter().zip(caches).enumerate().rev() {
                let gb = &mut g.blocks[bi];
                // Channel mixing.
                let du2 = mlp2_backward(
                    &dx,
                    &cache.u2,
                    &cache.h2,
                    &cache.a2,
                    &b.channel_w1,
                    &b.channel_w2,
                    &mut gb.channel_w1,
                    &mut gb.channel_b1,
                    &mut gb.channel_w2,
                    &mut gb.channel_b2,
                );
                let dln2 = layer_norm_backward(
                    &du2,
                    &cache.ln2,
                    &b.ln2_gamma,
                    &mut gb.ln2_gamma,
                    &mut gb.ln2_beta,
                );
                for (d, v) in dx.as_mut_slice().iter_mut().zip(dln2.as_slice()) {
                    *d += v;
                }
                // Token mixing, on the transposed layout.
                let do1 = dx.transpose();
                let du1t = mlp2_backward(
                    &do1,
                    &cache.u1t,
                    &cache.h1,
                    &cache.a1,
                    &b.token_w1,
                    &b.token_w2,
                    &mut gb.token_w1,
                    &mut gb.token_b1,
                    &mut gb.token_w2,
                    &mut gb.token_b2,
                );
                let dln1 = layer_norm_backward(
                    &du1t.transpose(),
                    &cache.ln1,
                    &b.ln1_gamma,
                    &mut gb.ln1_gamma,
                    &mut gb.ln1_beta,
                );
                for (d, v) in dx.as_mut_slice().iter_mut().zip(dln1.as_slice()) {
                    *d += v;
                }
            }
        }
        Ok((loss, g))
    }
}

pub fn mixer_forward(mixer: &Mixer, tokens: &Matrix) -> Result<Vec<f64>> {
    mixer.check(tokens)?;
    Ok(mixer.run(tokens, None).1)
}

impl Parameters for Mixer {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = self.blocks.iter().flat_map(|b| b.tensors()).collect();
        v.push(self.head_w.as_slice());
        v.push(&self.head_b);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = self
            .blocks
            .iter_mut()
            .flat_map(|b| b.tensors_mut())
            .collect();
        v.push(self.head_w.as_mut_slice());
        v.push(&mut self.head_b);
        v
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self.blocks.iter().flat_map(|b| b.shapes()).collect();
        v.push(self.head_w.shape());
        v.push((self.head_b.len(), 1));
        v
    }
}
