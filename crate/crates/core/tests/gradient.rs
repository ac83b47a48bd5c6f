//! Analytic gradients of the joint objective against central finite
//! differences of the loss value.

use flowae_core::trainer::loss_and_gradient;
use flowae_core::{
    joint_loss, make_triplets, AutoencoderModel, FlowRecord, FlowTable, Label, ModelConfig, ModelMode,
    TrainConfig, Triplet, TripletConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
/// Denominator floor for the relative error so that vanishing gradients are
/// compared absolutely.
const FLOOR: f64 = 1e-6;

fn triplets(n: usize, len: usize, count: usize, seed: u64) -> Vec<Triplet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..len * count)
        .map(|i| FlowRecord {
            features: (0..n).map(|_| rng.gen::<f64>()).collect(),
            label: Label::Benign,
            category: None,
            original_index: i,
        })
        .collect();
    let table = FlowTable::new(n, records).unwrap();
    let seqs = flowae_core::build_sequences(&table, len, len).unwrap();
    make_triplets(&seqs, &TripletConfig { noise_scale: 0.05, sequence_length: len, stride: len, seed }).unwrap()
}

fn worst_relative_error(model: &AutoencoderModel, batch: &[Triplet], cfg: &TrainConfig, etas: Option<&[Vec<f64>]>) -> (f64, String) {
    let (_, analytic) = loss_and_gradient(batch, model, cfg, etas).unwrap();
    let mut probe = model.clone();
    let mut worst = (0.0, String::new());
    for t in model.tensors() {
        for i in t.range() {
            let orig = probe.params()[i];
            probe.params_mut()[i] = orig + STEP;
            let up = loss_and_gradient(batch, &probe, cfg, etas).unwrap().0.joint;
            probe.params_mut()[i] = orig - STEP;
            let down = loss_and_gradient(batch, &probe, cfg, etas).unwrap().0.joint;
            probe.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            let a = analytic[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            if rel > worst.0 {
                worst = (rel, format!("{}[{}]: analytic {a:e} numeric {numeric:e}", t.name, i - t.offset));
            }
        }
    }
    worst
}

fn config(mode: ModelMode, layers: usize) -> ModelConfig {
    ModelConfig { input_dim: 3, hidden_dim: 8, latent_dim: 4, num_layers: layers, mode, seed: 5 }
}

#[test]
fn deterministic_single_layer() {
    let model = AutoencoderModel::init(config(ModelMode::Deterministic, 1)).unwrap();
    let batch = triplets(3, 4, 3, 1);
    let cfg = TrainConfig { lambda_rec: 0.7, lambda_tml: 0.3, margin: 1.0, ..TrainConfig::default() };
    let (worst, at) = worst_relative_error(&model, &batch, &cfg, None);
    eprintln!("worst relative error {worst:e} at {at}");
    assert!(worst < 1e-4, "worst relative error {worst:e} at {at}");
}

#[test]
fn deterministic_two_layers() {
    let model = AutoencoderModel::init(config(ModelMode::Deterministic, 2)).unwrap();
    let batch = triplets(3, 4, 3, 2);
    let cfg = TrainConfig { lambda_rec: 0.4, lambda_tml: 0.9, margin: 1.0, ..TrainConfig::default() };
    let (worst, at) = worst_relative_error(&model, &batch, &cfg, None);
    eprintln!("worst relative error {worst:e} at {at}");
    assert!(worst < 1e-4, "worst relative error {worst:e} at {at}");
}

#[test]
fn variational_with_fixed_noise() {
    let model = AutoencoderModel::init(config(ModelMode::Variational, 1)).unwrap();
    let batch = triplets(3, 4, 3, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let etas: Vec<Vec<f64>> = (0..batch.len()).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let cfg = TrainConfig { lambda_rec: 0.7, lambda_tml: 0.3, lambda_kl: 0.5, margin: 1.0, ..TrainConfig::default() };
    let (worst, at) = worst_relative_error(&model, &batch, &cfg, Some(&etas));
    eprintln!("worst relative error {worst:e} at {at}");
    assert!(worst < 1e-4, "worst relative error {worst:e} at {at}");
}

#[test]
fn zero_triplet_weight_leaves_only_the_reconstruction_gradient() {
    let model = AutoencoderModel::init(config(ModelMode::Deterministic, 1)).unwrap();
    let batch = triplets(3, 4, 4, 4);
    let cfg = TrainConfig { lambda_rec: 1.0, lambda_tml: 0.0, ..TrainConfig::default() };
    let (loss, g) = loss_and_gradient(&batch, &model, &cfg, None).unwrap();
    assert!(loss.triplet > 0.0);
    assert_eq!(joint_loss(&batch, &model, &cfg).unwrap().joint, loss.reconstruction);

    // Same anchors, unrelated positives and negatives: the reconstruction
    // gradient depends on anchors only.
    let others = triplets(3, 4, 4, 40);
    let swapped: Vec<Triplet> = batch
        .iter()
        .zip(&others)
        .map(|(t, o)| Triplet { anchor: t.anchor.clone(), positive: o.positive.clone(), negative: o.negative.clone() })
        .collect();
    let (_, g_swapped) = loss_and_gradient(&swapped, &model, &cfg, None).unwrap();
    for (a, b) in g.iter().zip(&g_swapped) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn weight_scaling_scales_the_loss() {
    let model = AutoencoderModel::init(config(ModelMode::Deterministic, 1)).unwrap();
    let batch = triplets(3, 4, 3, 6);
    let base = TrainConfig { lambda_rec: 0.8, lambda_tml: 0.6, ..TrainConfig::default() };
    let half = TrainConfig { lambda_rec: 0.4, lambda_tml: 0.3, ..base };
    let a = joint_loss(&batch, &model, &base).unwrap().joint;
    let b = joint_loss(&batch, &model, &half).unwrap().joint;
    assert!((a - 2.0 * b).abs() <= 1e-12 * a.abs());
    assert!(a >= 0.0);
}
