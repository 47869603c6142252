//! Mini-batch training with Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Architecture, NetworkParams};
use super::optim::{Adam, AdamConfig};
use crate::error::{Error, Result};
use crate::features::NetInput;
use crate::figure::PoseFigure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            epochs: 10,
            learning_rate: adam.learning_rate,
            batch_size: 16,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            seed: 0,
            architecture: Architecture::standard(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epochs > 0
            && self.batch_size > 0
            && self.learning_rate.is_finite()
            && self.learning_rate >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid training config {self:?}")));
        }
        self.architecture.validate()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    /// Mean per-sample loss seen during each epoch, before each batch's update.
    pub epoch_losses: Vec<f64>,
}

/// Content order of the dataset, so results do not depend on the order the
/// pairs were supplied in.
fn canonical_order(dataset: &[(NetInput, PoseFigure)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dataset.len()).collect();
    let key = |i: usize| {
        let (x, y) = &dataset[i];
        x.tensor().data().iter().chain(y.pixels()).copied()
    };
    idx.sort_by(|&a, &b| {
        key(a)
            .zip(key(b))
            .map(|(p, q)| p.total_cmp(&q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}

pub fn train(dataset: &[(NetInput, PoseFigure)], config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(dataset, config, |_, _| {})
}

/// As [`train`], reporting `(epoch, mean loss)` after every epoch.
pub fn train_with_progress(
    dataset: &[(NetInput, PoseFigure)],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    config.validate()?;
    let mut params = NetworkParams::init(config.architecture, config.seed)?;
    let mut grads = NetworkParams::zeros(config.architecture)?;
    let mut adam = Adam::new(
        AdamConfig {
            learning_rate: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
        },
        params.tensors().iter().map(|(_, _, d)| d.len()),
    );
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);

    let canonical = canonical_order(dataset);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        // positions into `canonical`
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut shuffle_rng);
        let mut losses = vec![0.0; dataset.len()];
        for batch in order.chunks(config.batch_size) {
            let inputs: Vec<&NetInput> = batch.iter().map(|&k| &dataset[canonical[k]].0).collect();
            let targets: Vec<&PoseFigure> = batch.iter().map(|&k| &dataset[canonical[k]].1).collect();
            grads.zero_grad();
            let batch_losses = params.accumulate_gradients(&inputs, &targets, &mut grads)?;
            for (&k, l) in batch.iter().zip(batch_losses) {
                losses[k] = l;
            }
            let g: Vec<&[f64]> = grads.tensors().into_iter().map(|(_, _, d)| d).collect();
            adam.step(params.tensors_mut(), g);
        }
        let mean = losses.iter().sum::<f64>() / losses.len() as f64;
        on_epoch(epoch, mean);
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome {
        params,
        epoch_losses,
    })
}
