//! Mini-batch training loop for the network.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamState};
use super::loss::{huber_raw, mae};
use super::{NetGradients, NeuralNet};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Network hyperparameters. Every field has a default; a config file or CLI
/// flag may override any subset.
#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub huber_delta: f64,
    pub conv_channels: usize,
    pub kernel_size: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            epochs: 500,
            batch_size: 16,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            huber_delta: 1.0,
            conv_channels: 16,
            kernel_size: 3,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::Config { reason });
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.huber_delta > 0.0) {
            return fail(format!("huber_delta must be positive, got {}", self.huber_delta));
        }
        if self.conv_channels == 0 || self.kernel_size == 0 {
            return fail("conv_channels and kernel_size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return fail("beta1 and beta2 must lie in [0, 1)".into());
        }
        Ok(())
    }
}

/// Per-epoch mean training loss plus the final mean absolute residual,
/// which the ensemble stores as its bias constant.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    /// Mean |ŷ - y| over training rows after the last epoch; kept in
    /// normalized target units so the interval arithmetic stays unit-safe.
    pub train_mae: f64,
}

/// Trains a fresh network on the dataset. Identical seeds produce
/// bit-identical parameters; all randomness (initialization and batch
/// order) flows from the one generator.
pub fn train_network(
    train: &Dataset,
    config: &NetConfig,
    seed: u64,
) -> Result<(NeuralNet, TrainReport)> {
    config.validate()?;
    let n = train.n_samples();
    if n == 0 {
        return Err(Error::EmptyInput {
            context: "train_network",
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = NeuralNet::new(train.n_features(), config, &mut rng);
    let mut state = AdamState::new(
        &net,
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let mut grads = NetGradients::zeros_like(&net);
    let mut cache = net.make_cache();
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            grads.zero();
            let mut batch_loss = 0.0;
            for &i in batch {
                let y = train.y[i];
                let y_hat = net.forward_cached(train.x.row(i), &mut cache)?;
                batch_loss += huber_raw(y, y_hat, config.huber_delta);
                net.accumulate_gradients(&mut cache, y, &mut grads);
            }
            let mean_batch_loss = batch_loss / batch.len() as f64;
            if !mean_batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut net, &grads, &mut state);
            epoch_loss += batch_loss;
        }
        epoch_losses.push(epoch_loss / n as f64);
    }

    let mut predictions = Vec::with_capacity(n);
    for i in 0..n {
        predictions.push(net.forward_cached(train.x.row(i), &mut cache)?);
    }
    let train_mae = mae(&train.y, &predictions)?;

    Ok((
        net,
        TrainReport {
            epoch_losses,
            train_mae,
        },
    ))
}
