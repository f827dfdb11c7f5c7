//! Architecture-agnostic wrapper: every network consumes flat input rows laid
//! out by [`crate::features::assemble_inputs`]; sequence models reshape them
//! into `lookback x (8 + descriptors)` sequences.

use rand::Rng;

use crate::error::{Error, Result};
use crate::features::{to_sequence, FeatureSet};
use crate::ingest::NUM_CHANNELS;
use crate::matrix::Matrix;
use crate::nn::lstm::{CellActivation, Lstm};
use crate::nn::mixer::{Mixer, MixerConfig};
use crate::nn::mlp::Mlp;
use crate::nn::Parameters;

pub const MLP_HIDDEN: [usize; 3] = [100, 200, 50];
pub const LSTM_UNITS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum ArchSpec {
    Mlp {
        hidden: Vec<usize>,
    },
    Lstm {
        units: usize,
        activation: CellActivation,
    },
    Mixer {
        blocks: usize,
        token_hidden: usize,
        channel_hidden: usize,
    },
}

impl ArchSpec {
    pub fn default_mlp() -> Self {
        ArchSpec::Mlp {
            hidden: MLP_HIDDEN.to_vec(),
        }
    }

    pub fn default_lstm() -> Self {
        ArchSpec::Lstm {
            units: LSTM_UNITS,
            activation: CellActivation::Tanh,
        }
    }

    pub fn default_mixer() -> Self {
        ArchSpec::Mixer {
            blocks: 4,
            token_hidden: 64,
            channel_hidden: 128,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            ArchSpec::Mlp { .. } => 0,
            ArchSpec::Lstm { .. } => 1,
            ArchSpec::Mixer { .. } => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    Mlp(Mlp),
    Lstm(Lstm),
    Mixer(Mixer),
}

/// Network inputs prepared once: flat rows for the MLP, sequences otherwise.
#[derive(Clone, Debug)]
pub enum Prepared {
    Flat(Matrix),
    Seq(Vec<Matrix>),
}

impl Prepared {
    pub fn len(&self) -> usize {
        match self {
            Prepared::Flat(m) => m.rows(),
            Prepared::Seq(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> Prepared {
        match self {
            Prepared::Flat(m) => {
                let mut out = Matrix::zeros(idx.len(), m.cols());
                for (r, &i) in idx.iter().enumerate() {
                    out.row_mut(r).copy_from_slice(m.row(i));
                }
                Prepared::Flat(out)
            }
            Prepared::Seq(s) => Prepared::Seq(idx.iter().map(|&i| s[i].clone()).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub lookback: usize,
    pub features: FeatureSet,
    pub body: Body,
}

impl Network {
    pub fn new(
        arch: &ArchSpec,
        lookback: usize,
        features: FeatureSet,
        outputs: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if lookback == 0 || outputs == 0 {
            return Err(Error::Parameter(
                "lookback and outputs must be positive".into(),
            ));
        }
        let step_width = NUM_CHANNELS + features.descriptor_dim();
        let body = match arch {
            ArchSpec::Mlp { hidden } => {
                if hidden.contains(&0) {
                    return Err(Error::Parameter(
                        "MLP hidden widths must be positive".into(),
                    ));
                }
                Body::Mlp(Mlp::new(features.input_dim(lookback), hidden, outputs, rng))
            }
            ArchSpec::Lstm { units, activation } => {
                if *units == 0 {
                    return Err(Error::Parameter("LSTM needs at least one unit".into()));
                }
                Body::Lstm(Lstm::new(step_width, *units, outputs, *activation, rng))
            }
            ArchSpec::Mixer {
                blocks,
                token_hidden,
                channel_hidden,
            } => Body::Mixer(Mixer::new(
                MixerConfig {
                    blocks: *blocks,
                    tokens: lookback,
                    channels: step_width,
                    token_hidden: *token_hidden,
                    channel_hidden: *channel_hidden,
                    outputs,
                },
                rng,
            )?),
        };
        Ok(Self {
            lookback,
            features,
            body,
        })
    }

    pub fn arch(&self) -> ArchSpec {
        match &self.body {
            Body::Mlp(m) => ArchSpec::Mlp {
                hidden: m.layers[..m.layers.len() - 1]
                    .iter()
                    .map(|l| l.output_dim())
                    .collect(),
            },
            Body::Lstm(l) => ArchSpec::Lstm {
                units: l.units,
                activation: l.cell_activation,
            },
            Body::Mixer(m) => ArchSpec::Mixer {
                blocks: m.config.blocks,
                token_hidden: m.config.token_hidden,
                channel_hidden: m.config.channel_hidden,
            },
        }
    }

    pub fn input_dim(&self) -> usize {
        self.features.input_dim(self.lookback)
    }

    pub fn outputs(&self) -> usize {
        match &self.body {
            Body::Mlp(m) => m.output_dim(),
            Body::Lstm(l) => l.outputs(),
            Body::Mixer(m) => m.config.outputs,
        }
    }

    /// Converts flat input rows into this network's input form.
    pub fn prepare(&self, x: &Matrix) -> Result<Prepared> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "{} network at lookback {} expects {} inputs, got {}",
                self.features,
                self.lookback,
                self.input_dim(),
                x.cols()
            )));
        }
        match self.body {
            Body::Mlp(_) => Ok(Prepared::Flat(x.clone())),
            _ => (0..x.rows())
                .map(|r| to_sequence(x.row(r), self.lookback, self.features))
                .collect::<Result<Vec<_>>>()
                .map(Prepared::Seq),
        }
    }

    pub fn forward_prepared(&self, x: &Prepared) -> Result<Matrix> {
        match (&self.body, x) {
            (Body::Mlp(m), Prepared::Flat(x)) => m.forward_batch(x),
            (Body::Lstm(l), Prepared::Seq(s)) => l.forward_batch(s),
            (Body::Mixer(m), Prepared::Seq(s)) => m.forward_batch(s),
            _ => Err(Error::Shape(
                "input form does not match the architecture".into(),
            )),
        }
    }

    /// Forward pass over flat input rows; returns `rows x outputs` in `[0, 1]`.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.forward_prepared(&self.prepare(x)?)
    }

    /// Batch MSE and its gradient, as a network of the same shape.
    pub fn loss_and_grad_prepared(&self, x: &Prepared, y: &Matrix) -> Result<(f64, Network)> {
        let (loss, body) = match (&self.body, x) {
            (Body::Mlp(m), Prepared::Flat(x)) => {
                m.loss_and_grad(x, y).map(|(l, g)| (l, Body::Mlp(g)))?
            }
            (Body::Lstm(c), Prepared::Seq(s)) => {
                c.loss_and_grad(s, y).map(|(l, g)| (l, Body::Lstm(g)))?
            }
            (Body::Mixer(m), Prepared::Seq(s)) => {
                m.loss_and_grad(s, y).map(|(l, g)| (l, Body::Mixer(g)))?
            }
            _ => {
                return Err(Error::Shape(
                    "input form does not match the architecture".into(),
                ))
            }
        };
        Ok((
            loss,
            Network {
                lookback: self.lookback,
                features: self.features,
                body,
            },
        ))
    }

    pub fn loss_and_grad(&self, x: &Matrix, y: &Matrix) -> Result<(f64, Network)> {
        self.loss_and_grad_prepared(&self.prepare(x)?, y)
    }

    /// Same architecture with all parameters zero.
    pub fn zeros_like(&self) -> Network {
        let body = match &self.body {
            Body::Mlp(m) => Body::Mlp(m.zeros_like()),
            Body::Lstm(l) => Body::Lstm(l.zeros_like()),
            Body::Mixer(m) => Body::Mixer(m.zeros_like()),
        };
        Network {
            lookback: self.lookback,
            features: self.features,
            body,
        }
    }
}

impl Parameters for Network {
    fn tensors(&self) -> Vec<&[f64]> {
        match &self.body {
            Body::Mlp(m) => m.tensors(),
            Body::Lstm(l) => l.tensors(),
            Body::Mixer(m) => m.tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        match &mut self.body {
            Body::Mlp(m) => m.tensors_mut(),
            Body::Lstm(l) => l.tensors_mut(),
            Body::Mixer(m) => m.tensors_mut(),
        }
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        match &self.body {
            Body::Mlp(m) => m.shapes(),
            Body::Lstm(l) => l.shapes(),
            Body::Mixer(m) => m.shapes(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_architecture_maps_flat_rows_to_six_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Matrix::from_vec(
            3,
            FeatureSet::Fft.input_dim(4),
            (0..3 * 48).map(|v| (v % 7) as f64 / 7.0).collect(),
        )
        .unwrap();
        for arch in [
            ArchSpec::default_mlp(),
            ArchSpec::default_lstm(),
            ArchSpec::Mixer {
                blocks: 2,
                token_hidden: 5,
                channel_hidden: 7,
            },
        ] {
            let net = Network::new(&arch, 4, FeatureSet::Fft, 6, &mut rng).unwrap();
            let out = net.forward(&x).unwrap();
            assert_eq!(out.shape(), (3, 6));
            assert!(out.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(net.arch(), arch);
            assert!(net.forward(&Matrix::zeros(1, 10)).is_err());
        }
    }
}
