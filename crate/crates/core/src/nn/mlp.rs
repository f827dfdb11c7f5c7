//! Fully connected network: tanh hidden layers and a sigmoid output layer.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{gemm, Matrix, Op};
use crate::nn::activation::Activation;
use crate::nn::{init_uniform, mse_grad, Parameters};

/// `activation(W x + b)` with `W` of shape `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            weight: Matrix::zeros(output, input),
            bias: vec![0.0; output],
            activation,
        }
    }

    pub fn random(input: usize, output: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let mut l = Self::zeros(input, output, activation);
        init_uniform(l.weight.as_mut_slice(), input, rng);
        init_uniform(&mut l.bias, input, rng);
        l
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Pre-activations for a batch: `X W^T + b`.
    fn linear(&self, x: &Matrix) -> Matrix {
        let mut z = Matrix::zeros(x.rows(), self.output_dim());
        for r in 0..z.rows() {
            z.row_mut(r).copy_from_slice(&self.bias);
        }
        gemm(1.0, x, Op::N, &self.weight, Op::T, 1.0, &mut z);
        z
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn new(input: usize, hidden: &[usize], output: usize, rng: &mut impl Rng) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = input;
        for &h in hidden {
            layers.push(DenseLayer::random(fan_in, h, Activation::Tanh, rng));
            fan_in = h;
        }
        layers.push(DenseLayer::random(fan_in, output, Activation::Sigmoid, rng));
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().output_dim()
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "MLP expects {} inputs, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        Ok(())
    }

    /// Forward pass over a batch (`batch x input`), returning `batch x output`.
    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut a = x.clone();
        for l in &self.layers {
            let mut z = l.linear(&a);
            let act = l.activation;
            z.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
            a = z;
        }
        Ok(a)
    }

    /// Mean squared error over all outputs of the batch and its gradient.
    pub fn loss_and_grad(&self, x: &Matrix, y: &Matrix) -> Result<(f64, Mlp)> {
        self.check(x)?;
        // Keep every layer's input and pre-activation for the backward pass.
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for l in &self.layers {
            let z = l.linear(&a);
            let act = l.activation;
            let next = z.map(|v| act.apply(v));
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        let (loss, mut delta) = mse_grad(&a, y)?;

        let mut grad = self.zeros_like();
        for (k, l) in self.layers.iter().enumerate().rev() {
            let act = l.activation;
            let out = if k + 1 < self.layers.len() {
                &inputs[k + 1]
            } else {
                &a
            };
            for ((d, &z), &o) in delta
                .as_mut_slice()
                .iter_mut()
                .zip(pre[k].as_slice())
                .zip(out.as_slice())
            {
                *d *= act.derivative(z, o);
            }
            let g = &mut grad.layers[k];
            gemm(1.0, &delta, Op::T, &inputs[k], Op::N, 0.0, &mut g.weight);
            for r in 0..delta.rows() {
                for (b, d) in g.bias.iter_mut().zip(delta.row(r)) {
                    *b += d;
                }
            }
            if k > 0 {
                let mut prev = Matrix::zeros(delta.rows(), l.input_dim());
                gemm(1.0, &delta, Op::N, &l.weight, Op::N, 0.0, &mut prev);
                delta = prev;
            }
        }
        Ok((loss, grad))
    }

    pub fn zeros_like(&self) -> Mlp {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.input_dim(), l.output_dim(), l.activation))
                .collect(),
        }
    }
}

/// Single-input forward pass.
pub fn mlp_forward(mlp: &Mlp, x: &[f64]) -> Result<Vec<f64>> {
    let xm = Matrix::from_vec(1, x.len(), x.to_vec())?;
    Ok(mlp.forward_batch(&xm)?.into_vec())
}

impl Parameters for Mlp {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.shape(), (l.bias.len(), 1)])
            .collect()
    }
}
