//! Minibatch training with Adam and evaluation on a dataset split.
//!
//! Per-sample gradients within a minibatch are summed in batch order and
//! averaged, so a run is bit-reproducible for a fixed seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datasets::{LabeledDataset, Normalizer, Split};
use crate::error::{Error, Result};
use crate::nn::{argmax, Activation, AdamState, Checkpoint, Network, NetworkConfig, Tensor, Variant};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub variant: Variant,
    pub alpha: f64,
    pub activation: Activation,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Lattice,
            alpha: 0.5,
            activation: Activation::Relu,
            lr: AdamState::DEFAULT_LR,
            epochs: 300,
            batch: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss over the epoch's minibatch passes.
    pub train_loss: f64,
    /// Accuracy of the predictions made during those passes.
    pub train_acc: f64,
    /// Accuracy on the test split after the epoch; `None` for an empty split.
    pub test_acc: Option<f64>,
}

impl EpochStats {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_acc,test_acc";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.8},{:.8},{}",
            self.epoch,
            self.train_loss,
            self.train_acc,
            self.test_acc.map_or("NA".to_string(), format_acc)
        )
    }
}

/// Accuracy as printed in learning curves and evaluation summaries.
pub fn format_acc(acc: f64) -> String {
    format!("{acc:.8}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub epoch: usize,
    pub step: usize,
    pub loss: f64,
}

/// Prepared inputs of one split.
pub fn signals(ds: &LabeledDataset, norm: &Normalizer, which: Split) -> Vec<(Tensor, usize)> {
    ds.split(which)
        .map(|it| (norm.apply(&it.invariants), it.label))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub correct: usize,
    pub total: usize,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

pub fn evaluate(net: &Network, data: &[(Tensor, usize)]) -> Result<Evaluation> {
    let k = net.config.classes;
    let mut confusion = vec![vec![0; k]; k];
    let mut correct = 0;
    for (x, label) in data {
        if *label >= k {
            return Err(Error::invalid(format!("label {label} out of range for {k} classes")));
        }
        let pred = net.predict(x)?;
        confusion[*label][pred] += 1;
        if pred == *label {
            correct += 1;
        }
    }
    Ok(Evaluation {
        correct,
        total: data.len(),
        confusion,
    })
}

fn non_finite(err: Error, epoch: usize, step: usize) -> Error {
    match err {
        Error::NonFinite(_) => Error::NonFiniteLoss { epoch, step },
        other => other,
    }
}

/// Fresh network, optimizer and shuffling RNG for a dataset.
pub fn initial_checkpoint(ds: &LabeledDataset, cfg: &TrainConfig) -> Result<Checkpoint> {
    let (rows, cols) = ds.shape().ok_or_else(|| Error::invalid("dataset is empty"))?;
    if cfg.batch == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return Err(Error::invalid(format!(
            "learning rate must be positive, got {}",
            cfg.lr
        )));
    }
    let mut ncfg = NetworkConfig::new(cfg.variant, 4, ds.class_names.len(), rows, cols);
    ncfg.alpha = cfg.alpha;
    ncfg.activation = cfg.activation;
    let network = Network::build(&ncfg, cfg.seed)?;
    let adam = AdamState::new(network.params(), cfg.lr);
    let norm = Normalizer::fit(ds.split(Split::Train));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    Ok(Checkpoint {
        network,
        adam,
        input_scale: norm.scale,
        rng,
        epoch: 0,
    })
}

/// Train for `cfg.epochs` epochs, reporting every epoch and every step.
pub fn train(
    ds: &LabeledDataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats) -> Result<()>,
    mut on_step: impl FnMut(&StepInfo),
) -> Result<Checkpoint> {
    let mut ck = initial_checkpoint(ds, cfg)?;
    let norm = Normalizer {
        scale: ck.input_scale.clone(),
    };
    let train_set = signals(ds, &norm, Split::Train);
    let test_set = signals(ds, &norm, Split::Test);
    if train_set.is_empty() {
        return Err(Error::invalid("no training items"));
    }
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut step = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut ck.rng);
        let (mut loss_sum, mut correct) = (0.0, 0);
        for batch in order.chunks(cfg.batch) {
            step += 1;
            let mut acc: Option<Vec<Tensor>> = None;
            let mut batch_loss = 0.0;
            for &idx in batch {
                let (x, label) = &train_set[idx];
                let (loss, logits, grads) = ck
                    .network
                    .loss_and_grads(x, *label)
                    .map_err(|e| non_finite(e, epoch, step))?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, step });
                }
                batch_loss += loss;
                if argmax(logits.data()) == *label {
                    correct += 1;
                }
                match acc.as_mut() {
                    None => acc = Some(grads),
                    Some(sum) => sum.iter_mut().zip(&grads).for_each(|(s, g)| s.add_assign(g)),
                }
            }
            let mut grads = acc.expect("non-empty batch");
            let inv = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| g.scale(inv));
            let mut params = ck.network.params_mut();
            ck.adam.step(&mut params, &grads)?;
            loss_sum += batch_loss;
            on_step(&StepInfo {
                epoch,
                step,
                loss: batch_loss * inv,
            });
        }
        ck.epoch = epoch;
        let test_acc = if test_set.is_empty() {
            None
        } else {
            Some(evaluate(&ck.network, &test_set)?.accuracy())
        };
        on_epoch(&EpochStats {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_acc: correct as f64 / train_set.len() as f64,
            test_acc,
        })?;
    }
    Ok(ck)
}
