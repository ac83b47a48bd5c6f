//! Triplet margin loss, the weighted joint objective and its gradient.

use alloc::vec;
use alloc::vec::Vec;

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{reconstruction_error, AutoencoderModel, ModelMode};
use crate::sequencer::Triplet;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// `max(‖a − p‖₂ − ‖a − n‖₂ + margin, 0)`.
pub fn triplet_margin_loss(anchor: &[f64], positive: &[f64], negative: &[f64], margin: f64) -> Result<f64> {
    for other in [positive, negative] {
        if other.len() != anchor.len() {
            return Err(Error::DimensionMismatch { expected: anchor.len(), actual: other.len() });
        }
    }
    Ok((euclidean(anchor, positive) - euclidean(anchor, negative) + margin).max(0.0))
}

/// Batch means of each loss term and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub joint: f64,
    pub reconstruction: f64,
    pub triplet: f64,
    /// Zero in deterministic mode.
    pub kl: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        self.joint.is_finite() && self.reconstruction.is_finite() && self.triplet.is_finite() && self.kl.is_finite()
    }
}

/// Joint loss of a batch without sampling noise.
pub fn joint_loss(batch: &[Triplet], model: &AutoencoderModel, cfg: &TrainConfig) -> Result<LossBreakdown> {
    loss_and_gradient(batch, model, cfg, None).map(|(loss, _)| loss)
}

/// Joint loss and its gradient with respect to every model parameter.
///
/// `etas` supplies one standard-normal vector per triplet for the anchor's
/// reparameterized sample in variational mode; `None` means zero noise.
/// The triplet term uses latent means; the reconstruction and KL terms use
/// the anchor.
pub fn loss_and_gradient(
    batch: &[Triplet],
    model: &AutoencoderModel,
    cfg: &TrainConfig,
    etas: Option<&[Vec<f64>]>,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let refs: Vec<&Triplet> = batch.iter().collect();
    batch_loss_and_gradient(&refs, model, cfg, etas)
}

pub(crate) fn batch_loss_and_gradient(
    batch: &[&Triplet],
    model: &AutoencoderModel,
    cfg: &TrainConfig,
    etas: Option<&[Vec<f64>]>,
) -> Result<(LossBreakdown, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(e) = etas {
        if e.len() != batch.len() {
            return Err(Error::DimensionMismatch { expected: batch.len(), actual: e.len() });
        }
    }
    let mc = model.config();
    let variational = mc.mode == ModelMode::Variational;
    let w = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; model.num_params()];
    let mut total = LossBreakdown::default();

    for (i, triplet) in batch.iter().enumerate() {
        for seq in [&triplet.anchor, &triplet.positive, &triplet.negative] {
            if seq.num_features() != mc.input_dim {
                return Err(Error::DimensionMismatch { expected: mc.input_dim, actual: seq.num_features() });
            }
            if seq.is_empty() {
                return Err(Error::InvalidConfig("empty sequence in batch".into()));
            }
        }
        let eta = etas.map(|e| e[i].as_slice());
        let ta = model.encode_trace(&triplet.anchor.values, eta);
        let x = &triplet.anchor.values;
        let dec = model.decode_trace(&ta.z, x.rows());
        let rec = reconstruction_error(x, &dec.output)?;

        let mut d_mean_a = vec![0.0; mc.latent_dim];
        let mut d_lv_a = vec![0.0; mc.latent_dim];

        // Reconstruction.
        if cfg.lambda_rec != 0.0 {
            let scale = cfg.lambda_rec * w * 2.0 / x.as_slice().len() as f64;
            let diff: Vec<f64> = dec.output.as_slice().iter().zip(x.as_slice()).map(|(o, t)| scale * (o - t)).collect();
            let d_out = Matrix::from_vec(x.rows(), x.cols(), diff)?;
            let d_z = model.decoder_backward(&dec, &d_out, &mut grad);
            for (k, dz) in d_z.iter().enumerate() {
                d_mean_a[k] += dz;
                if let (Some(lv), Some(eta)) = (&ta.log_var, &ta.eta) {
                    d_lv_a[k] += dz * eta[k] * 0.5 * libm::exp(0.5 * lv[k]);
                }
            }
        }

        // Triplet margin on latent means.
        let tp = model.encode_trace(&triplet.positive.values, None);
        let tn = model.encode_trace(&triplet.negative.values, None);
        let d_ap = euclidean(&ta.mean, &tp.mean);
        let d_an = euclidean(&ta.mean, &tn.mean);
        let tml = (d_ap - d_an + cfg.margin).max(0.0);
        let mut side_grads = None;
        if tml > 0.0 && cfg.lambda_tml != 0.0 {
            let s = cfg.lambda_tml * w;
            let mut dp = vec![0.0; mc.latent_dim];
            let mut dn = vec![0.0; mc.latent_dim];
            for k in 0..mc.latent_dim {
                // Subgradient 0 where a distance vanishes.
                let u = if d_ap > 0.0 { (ta.mean[k] - tp.mean[k]) / d_ap } else { 0.0 };
                let v = if d_an > 0.0 { (ta.mean[k] - tn.mean[k]) / d_an } else { 0.0 };
                d_mean_a[k] += s * (u - v);
                dp[k] = -s * u;
                dn[k] = s * v;
            }
            side_grads = Some((dp, dn));
        }

        // KL(q(z|x) || N(0, I)).
        let mut kl = 0.0;
        if variational {
            if let Some(lv) = &ta.log_var {
                for k in 0..mc.latent_dim {
                    let (mu, l) = (ta.mean[k], lv[k]);
                    kl += -0.5 * (1.0 + l - mu * mu - libm::exp(l));
                    if cfg.lambda_kl != 0.0 {
                        d_mean_a[k] += cfg.lambda_kl * w * mu;
                        d_lv_a[k] += cfg.lambda_kl * w * 0.5 * (libm::exp(l) - 1.0);
                    }
                }
            }
        }

        model.encoder_backward(&ta, &d_mean_a, variational.then_some(d_lv_a.as_slice()), &mut grad);
        if let Some((dp, dn)) = side_grads {
            model.encoder_backward(&tp, &dp, None, &mut grad);
            model.encoder_backward(&tn, &dn, None, &mut grad);
        }

        total.reconstruction += w * rec;
        total.triplet += w * tml;
        total.kl += w * kl;
    }
    total.joint = cfg.lambda_tml * total.triplet + cfg.lambda_rec * total.reconstruction;
    if variational {
        total.joint += cfg.lambda_kl * total.kl;
    }
    Ok((total, grad))
}
