use flowae_core::model::ParamGroup;
use flowae_core::{
    build_sequences, make_triplets, train, AutoencoderModel, FlowRecord, FlowTable, FreezeSpec, Label,
    ModelConfig, ModelMode, TrainConfig, Triplet, TripletConfig,
};

fn wave_table(n: usize, flows: usize) -> FlowTable {
    let records = (0..flows)
        .map(|i| FlowRecord {
            features: (0..n)
                .map(|j| 0.5 + 0.4 * ((i as f64) * 0.3 * (j + 1) as f64).sin())
                .collect(),
            label: Label::Benign,
            category: None,
            original_index: i,
        })
        .collect();
    FlowTable::new(n, records).unwrap()
}

fn triplets(n: usize, len: usize, count: usize) -> Vec<Triplet> {
    let seqs = build_sequences(&wave_table(n, len * count), len, len).unwrap();
    make_triplets(&seqs, &TripletConfig { noise_scale: 0.01, sequence_length: len, stride: len, seed: 3 }).unwrap()
}

fn small_model(mode: ModelMode) -> AutoencoderModel {
    AutoencoderModel::init(ModelConfig { input_dim: 3, hidden_dim: 16, latent_dim: 4, num_layers: 1, mode, seed: 1 })
        .unwrap()
}

#[test]
fn overfits_a_single_triplet() {
    let one = vec![triplets(3, 25, 2).remove(0)];
    let cfg = TrainConfig {
        lambda_rec: 1.0,
        lambda_tml: 0.5,
        epochs: 500,
        batch_size: 1,
        learning_rate: 1e-2,
        ..TrainConfig::default()
    };
    let report = train(&one, small_model(ModelMode::Deterministic), &cfg, &FreezeSpec::none()).unwrap();
    let first = report.epochs[0].loss.joint;
    let last = report.final_loss().unwrap();
    let mse = report.model.score(&one[0].anchor.values).unwrap();
    eprintln!("first {first} last {last:?} mse {mse}");
    assert!(last.joint < first);
    assert!(mse < 1e-3, "anchor MSE {mse}");
    assert_eq!(report.epochs.len(), 500);
}

#[test]
fn freeze_keeps_groups_bit_identical() {
    let data = triplets(3, 6, 6);
    let cfg = TrainConfig { epochs: 5, batch_size: 2, learning_rate: 1e-2, ..TrainConfig::default() };
    let start = small_model(ModelMode::Deterministic);
    let all = [ParamGroup::InputLayer, ParamGroup::Encoder, ParamGroup::DecoderCore, ParamGroup::OutputLayer];

    for (freeze, frozen) in [
        (FreezeSpec::encoder(), vec![ParamGroup::InputLayer, ParamGroup::Encoder]),
        (FreezeSpec::all_but_io(), vec![ParamGroup::Encoder, ParamGroup::DecoderCore]),
    ] {
        let after = train(&data, start.clone(), &cfg, &freeze).unwrap().model;
        for g in all {
            let same = start.group_params(g) == after.group_params(g);
            assert_eq!(same, frozen.contains(&g), "{g:?} under {freeze:?}");
        }
    }
}

#[test]
fn training_is_deterministic() {
    let data = triplets(3, 6, 5);
    let cfg = TrainConfig { epochs: 3, batch_size: 2, ..TrainConfig::default() };
    for mode in [ModelMode::Deterministic, ModelMode::Variational] {
        let a = train(&data, small_model(mode), &cfg, &FreezeSpec::none()).unwrap();
        let b = train(&data, small_model(mode), &cfg, &FreezeSpec::none()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn variational_training_reports_kl_and_reduces_loss() {
    let data = triplets(3, 6, 8);
    let cfg = TrainConfig { epochs: 40, batch_size: 4, learning_rate: 5e-3, lambda_kl: 0.1, ..TrainConfig::default() };
    let report = train(&data, small_model(ModelMode::Variational), &cfg, &FreezeSpec::none()).unwrap();
    assert!(report.epochs.iter().all(|e| e.loss.kl >= 0.0));
    assert!(report.epochs[0].loss.kl > 0.0);
    assert!(report.final_loss().unwrap().joint < report.epochs[0].loss.joint);
}

#[test]
fn training_errors() {
    let cfg = TrainConfig { epochs: 2, ..TrainConfig::default() };
    assert_eq!(
        train(&[], small_model(ModelMode::Deterministic), &cfg, &FreezeSpec::none()),
        Err(flowae_core::Error::EmptyTrainingSet)
    );
    let bad = TrainConfig { epochs: 0, ..cfg };
    assert!(train(&triplets(3, 4, 2), small_model(ModelMode::Deterministic), &bad, &FreezeSpec::none()).is_err());

    let mut data = triplets(3, 4, 2);
    data[1].negative.label = Label::Attack;
    assert_eq!(
        train(&data, small_model(ModelMode::Deterministic), &cfg, &FreezeSpec::none()),
        Err(flowae_core::Error::AttackInTrainingData(1))
    );
}

#[test]
fn non_finite_loss_is_reported() {
    let mut model = small_model(ModelMode::Deterministic);
    model.params_mut()[0] = f64::NAN;
    let cfg = TrainConfig { epochs: 2, ..TrainConfig::default() };
    assert_eq!(
        train(&triplets(3, 4, 2), model, &cfg, &FreezeSpec::none()),
        Err(flowae_core::Error::DivergedLoss { epoch: 0 })
    );
}
