//! Mini-batch Adam training with validation-based early stopping.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::adam::{adam_step, AdamConfig, AdamState};
use crate::nn::network::Network;
use crate::nn::{mse, Parameters};

/// What the patience budget counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PatienceUnit {
    #[default]
    Epochs,
    /// Optimizer updates: each epoch without improvement spends as many units
    /// as it made steps.
    Steps,
}

impl PatienceUnit {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(PatienceUnit::Epochs),
            1 => Some(PatienceUnit::Steps),
            _ => None,
        }
    }
}

impl FromStr for PatienceUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epochs" | "epoch" => Ok(PatienceUnit::Epochs),
            "steps" | "step" => Ok(PatienceUnit::Steps),
            _ => Err(Error::Parameter(format!("unknown patience unit `{s}`"))),
        }
    }
}

impl fmt::Display for PatienceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatienceUnit::Epochs => "epochs",
            PatienceUnit::Steps => "steps",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub max_epochs: usize,
    pub patience: usize,
    pub patience_unit: PatienceUnit,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl TrainConfig {
    /// Patience 50, at most 500 epochs.
    pub fn desk() -> Self {
        Self {
            adam: AdamConfig::default(),
            max_epochs: 500,
            patience: 50,
            patience_unit: PatienceUnit::Epochs,
            batch_size: 64,
            seed: 0,
        }
    }

    /// Patience 1500, at most 5000 epochs.
    pub fn paper() -> Self {
        Self {
            max_epochs: 5000,
            patience: 1500,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.patience == 0 || self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::Parameter(
                "patience, max_epochs and batch_size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Improved,
    Continue,
    Stop,
}

/// Tracks the best validation loss and the patience budget spent since.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub unit: PatienceUnit,
    pub best: f64,
    pub best_epoch: usize,
    pub stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, unit: PatienceUnit) -> Self {
        Self {
            patience,
            unit,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    /// Records the validation loss after `epoch` (1-based), which made `steps`
    /// optimizer updates.
    pub fn observe(&mut self, epoch: usize, val_loss: f64, steps: usize) -> Decision {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.stale = 0;
            return Decision::Improved;
        }
        self.stale += match self.unit {
            PatienceUnit::Epochs => 1,
            PatienceUnit::Steps => steps,
        };
        if self.stale >= self.patience {
            Decision::Stop
        } else {
            Decision::Continue
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub epochs_run: usize,
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
}

/// RNG for weight initialisation, derived from the training seed.
pub fn init_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn shuffle_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Trains `net` on flat input rows and `[0, 1]`-scaled targets, returning the
/// parameters of the epoch with the lowest validation MSE.
pub fn train(
    mut net: Network,
    train_x: &Matrix,
    train_y: &Matrix,
    val_x: &Matrix,
    val_y: &Matrix,
    cfg: &TrainConfig,
) -> Result<(Network, TrainReport)> {
    cfg.validate()?;
    if train_x.rows() == 0 || val_x.rows() == 0 {
        return Err(Error::EmptyDataset(
            "training and validation sets must be non-empty".into(),
        ));
    }
    if train_x.rows() != train_y.rows() || val_x.rows() != val_y.rows() {
        return Err(Error::Shape("input and target row counts differ".into()));
    }
    let tx = net.prepare(train_x)?;
    let vx = net.prepare(val_x)?;
    let n = tx.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = shuffle_rng(cfg.seed);
    let mut state = AdamState::new(net.num_params());
    let mut stopper = EarlyStopping::new(cfg.patience, cfg.patience_unit);
    let mut best = net.clone();
    let mut report = TrainReport {
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        epochs_run: 0,
        train_losses: Vec::new(),
        val_losses: Vec::new(),
    };
    let diverged = |epoch: usize, e: Error| match e {
        Error::NonFinite(message) => Error::Divergence { epoch, message },
        other => other,
    };

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut steps = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let bx = tx.select(chunk);
            let mut by = Matrix::zeros(chunk.len(), train_y.cols());
            for (r, &i) in chunk.iter().enumerate() {
                by.row_mut(r).copy_from_slice(train_y.row(i));
            }
            let (loss, grad) = net
                .loss_and_grad_prepared(&bx, &by)
                .map_err(|e| diverged(epoch, e))?;
            epoch_loss += loss * chunk.len() as f64;
            let grads = grad.tensors();
            adam_step(&mut state, &mut net.tensors_mut(), &grads, &cfg.adam)
                .map_err(|e| diverged(epoch, e))?;
            steps += 1;
        }
        let val_loss = mse(&net.forward_prepared(&vx)?, val_y).map_err(|e| diverged(epoch, e))?;
        report.train_losses.push(epoch_loss / n as f64);
        report.val_losses.push(val_loss);
        report.epochs_run = epoch;
        match stopper.observe(epoch, val_loss, steps) {
            Decision::Improved => best.clone_from(&net),
            Decision::Continue => {}
            Decision::Stop => break,
        }
    }
    report.best_epoch = stopper.best_epoch;
    report.best_val_loss = stopper.best;
    log::debug!(
        "{} network: best epoch {} of {} (val mse {:.6})",
        net.features,
        report.best_epoch,
        report.epochs_run,
        report.best_val_loss
    );
    Ok((best, report))
}
