//! Training under the weighted joint objective, layer freezing for transfer
//! learning, and the loss-weight sweep.

mod adam;
mod loss;
mod sweep;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use rand::seq::SliceRandom;

pub use loss::{joint_loss, loss_and_gradient, triplet_margin_loss, LossBreakdown};
pub use sweep::{sweep, SweepCell, SweepCriterion, SweepData, SweepGrid, SweepOutcome};

use crate::error::{Error, Result};
use crate::model::{AutoencoderModel, ModelMode, ParamGroup};
use crate::rng;
use crate::sequencer::Triplet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lambda_rec: f64,
    pub lambda_tml: f64,
    /// Weight of the KL term; ignored in deterministic mode.
    pub lambda_kl: f64,
    pub margin: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Global gradient-norm ceiling.
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_rec: 1.0,
            lambda_tml: 1.0,
            lambda_kl: 1.0,
            margin: 1.0,
            epochs: 50,
            batch_size: 64,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.lambda_rec) || !unit(self.lambda_tml) {
            return Err(Error::InvalidConfig("loss weights must lie in [0, 1]".into()));
        }
        if !(self.lambda_kl >= 0.0) {
            return Err(Error::InvalidConfig("KL weight must be non-negative".into()));
        }
        if !(self.margin > 0.0) {
            return Err(Error::InvalidConfig("margin must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.clip_norm > 0.0) {
            return Err(Error::InvalidConfig("learning rate and clip norm must be positive".into()));
        }
        Ok(())
    }
}

/// Parameter groups excluded from updates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FreezeSpec {
    pub frozen: BTreeSet<ParamGroup>,
}

impl FreezeSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn of(groups: &[ParamGroup]) -> Self {
        Self { frozen: groups.iter().copied().collect() }
    }

    /// Every encoder weight, the first layer's input weights included.
    pub fn encoder() -> Self {
        Self::of(&[ParamGroup::InputLayer, ParamGroup::Encoder])
    }

    /// Everything except the input layer and the output projection.
    pub fn all_but_io() -> Self {
        Self::of(&[ParamGroup::Encoder, ParamGroup::DecoderCore])
    }

    pub fn contains(&self, group: ParamGroup) -> bool {
        self.frozen.contains(&group)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochLoss>,
    pub model: AutoencoderModel,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<LossBreakdown> {
        self.epochs.last().map(|e| e.loss)
    }
}

/// Minimizes the joint loss over `triplets` with Adam.
///
/// Each epoch visits the triplets in a freshly shuffled order, in batches of
/// `batch_size`. Reported epoch losses are batch-size-weighted means of the
/// pre-update batch losses.
pub fn train(
    triplets: &[Triplet],
    mut model: AutoencoderModel,
    cfg: &TrainConfig,
    freeze: &FreezeSpec,
) -> Result<TrainReport> {
    cfg.validate()?;
    if triplets.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    for (i, t) in triplets.iter().enumerate() {
        if t.anchor.label.is_attack() || t.positive.label.is_attack() || t.negative.label.is_attack() {
            return Err(Error::AttackInTrainingData(i));
        }
    }
    let frozen = model.group_mask(|g| freeze.contains(g));
    let variational = model.config().mode == ModelMode::Variational;
    let latent_dim = model.config().latent_dim;
    let mut opt = adam::Adam::new(model.num_params(), cfg.learning_rate);
    let mut rng = rng::stream(cfg.seed, rng::TRAINING);
    let mut order: Vec<usize> = (0..triplets.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = LossBreakdown::default();
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Triplet> = chunk.iter().map(|&i| &triplets[i]).collect();
            let etas: Option<Vec<Vec<f64>>> = variational.then(|| {
                batch
                    .iter()
                    .map(|_| (0..latent_dim).map(|_| rng::standard_normal(&mut rng)).collect())
                    .collect()
            });
            let (loss, mut grad) = loss::batch_loss_and_gradient(&batch, &model, cfg, etas.as_deref())?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::DivergedLoss { epoch });
            }
            for (g, &f) in grad.iter_mut().zip(&frozen) {
                if f {
                    *g = 0.0;
                }
            }
            adam::clip_global_norm(&mut grad, cfg.clip_norm);
            opt.step(model.params_mut(), &grad, &frozen);

            let share = chunk.len() as f64 / triplets.len() as f64;
            epoch_loss.joint += share * loss.joint;
            epoch_loss.reconstruction += share * loss.reconstruction;
            epoch_loss.triplet += share * loss.triplet;
            epoch_loss.kl += share * loss.kl;
        }
        if !epoch_loss.is_finite() {
            return Err(Error::DivergedLoss { epoch });
        }
        history.push(EpochLoss { epoch, loss: epoch_loss });
    }
    Ok(TrainReport { epochs: history, model })
}
