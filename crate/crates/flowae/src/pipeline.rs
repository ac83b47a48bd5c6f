//! End-to-end stages shared by the CLI and the integration tests.
//!
//! Benign flows are split into contiguous blocks of `sequence_length`
//! flows, and whole blocks are assigned to train or test. Windows are then
//! cut inside runs of adjacent blocks, so no window mixes the two sides or
//! bridges a gap.

use std::path::Path;

use flowae_core::detector::{self, score_all};
use flowae_core::metrics::{self, EvalReport};
use flowae_core::trainer::{self, EpochLoss, SweepData, SweepGrid, SweepOutcome};
use flowae_core::{
    build_sequences, fit_normalizer, make_triplets, normalize, smote_oversample, AutoencoderModel, FlowRecord,
    FlowSchema, FlowTable, FreezeSpec, Label, NormalizationStats, Sequence, SmoteConfig, ThresholdModel,
};

use crate::artifact::{ArtifactMeta, ModelArtifact};
use crate::config::PipelineConfig;
use crate::csvio;
use crate::error::{Error, Result};

/// Reads the CSV header and resolves the feature columns from the config.
pub fn load_dataset(path: &Path, cfg: &PipelineConfig) -> Result<(FlowSchema, FlowTable)> {
    let header = csvio::read_header(path, cfg.delimiter())?;
    let schema = cfg.schema_for_header(&header);
    let table = csvio::load_flows(path, &schema, cfg.delimiter())?;
    Ok((schema, table))
}

/// Normalized sequence sets for one corpus.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub stats: NormalizationStats,
    /// Benign training windows.
    pub train: Vec<Sequence>,
    /// Windows over SMOTE-generated flows (empty when SMOTE is off).
    pub synthetic: Vec<Sequence>,
    pub benign_test: Vec<Sequence>,
    /// Attack-majority windows over the whole table.
    pub attack: Vec<Sequence>,
}

impl Prepared {
    pub fn training_set(&self) -> Vec<Sequence> {
        self.train.iter().chain(&self.synthetic).cloned().collect()
    }
}

fn runs(mut blocks: Vec<usize>) -> Vec<Vec<usize>> {
    blocks.sort_unstable();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for b in blocks {
        match out.last_mut() {
            Some(run) if *run.last().unwrap() + 1 == b => run.push(b),
            _ => out.push(vec![b]),
        }
    }
    out
}

fn run_table(benign: &[FlowRecord], run: &[usize], len: usize, n: usize) -> Result<FlowTable> {
    let records = run.iter().flat_map(|&b| benign[b * len..(b + 1) * len].iter().cloned()).collect();
    Ok(FlowTable::new(n, records)?)
}

/// Splits, normalizes and windows `table`. With `stats` given (an existing
/// model) they are reused, otherwise they are fit on the training flows.
pub fn prepare(table: &FlowTable, cfg: &PipelineConfig, stats: Option<&NormalizationStats>) -> Result<Prepared> {
    let len = cfg.sequence.length;
    let stride = cfg.stride();
    let n = table.num_features();
    let benign = table.benign().into_records();
    if benign.is_empty() {
        return Err(flowae_core::Error::NoBenignRecords.into());
    }
    let blocks = benign.len() / len;
    if blocks < 2 {
        return Err(flowae_core::Error::InsufficientData { needed: 2 * len, got: benign.len() }.into());
    }
    let (train_blocks, test_blocks) =
        flowae_core::flow::split_items((0..blocks).collect(), cfg.sequence.train_fraction, cfg.seed)?;
    if train_blocks.is_empty() {
        return Err(flowae_core::Error::InsufficientData { needed: 2 * len, got: benign.len() }.into());
    }
    let train_runs: Vec<FlowTable> =
        runs(train_blocks).iter().map(|r| run_table(&benign, r, len, n)).collect::<Result<_>>()?;
    let test_runs: Vec<FlowTable> =
        runs(test_blocks).iter().map(|r| run_table(&benign, r, len, n)).collect::<Result<_>>()?;

    let stats = match stats {
        Some(s) => s.clone(),
        None => {
            let all: Vec<FlowRecord> = train_runs.iter().flat_map(|t| t.records().iter().cloned()).collect();
            fit_normalizer(&FlowTable::new(n, all)?)?
        }
    };
    let windows = |tables: &[FlowTable]| -> Result<Vec<Sequence>> {
        let mut out = Vec::new();
        for t in tables {
            out.extend(build_sequences(&normalize(t, &stats)?, len, stride)?);
        }
        Ok(out)
    };
    let train = windows(&train_runs)?;
    let benign_test = windows(&test_runs)?;

    let synthetic = if cfg.smote.enabled {
        let flows: Vec<FlowRecord> = train_runs.iter().flat_map(|t| t.records().iter().cloned()).collect();
        let flows = normalize(&FlowTable::new(n, flows)?, &stats)?;
        let smote = SmoteConfig::with_multiplier(flows.len(), cfg.smote.multiplier, cfg.smote.k_neighbors, cfg.seed);
        let grown = smote_oversample(&flows, &smote)?;
        let extra: Vec<FlowRecord> = grown.into_records().split_off(flows.len());
        if extra.len() >= len {
            build_sequences(&FlowTable::new(n, extra)?, len, stride)?
        } else {
            Vec::new()
        }
    } else {
        Vec::new()
    };

    let attack = if table.len() >= len && table.benign_count() < table.len() {
        build_sequences(&normalize(table, &stats)?, len, stride)?
            .into_iter()
            .filter(|s| s.label == Label::Attack)
            .collect()
    } else {
        Vec::new()
    };
    Ok(Prepared { stats, train, synthetic, benign_test, attack })
}

fn meta(cfg: &PipelineConfig, schema: &FlowSchema) -> ArtifactMeta {
    ArtifactMeta {
        lambda_rec: cfg.train.lambda_rec,
        lambda_tml: cfg.train.lambda_tml,
        lambda_kl: cfg.train.lambda_kl,
        margin: cfg.train.margin,
        sequence_length: cfg.sequence.length,
        stride: cfg.stride(),
        feature_columns: schema.feature_columns.clone(),
    }
}

/// Result of a training stage.
#[derive(Debug, Clone)]
pub struct Trained {
    pub artifact: ModelArtifact,
    pub epochs: Vec<EpochLoss>,
    pub prepared: Prepared,
}

fn fit(
    model: AutoencoderModel,
    prepared: Prepared,
    cfg: &PipelineConfig,
    schema: &FlowSchema,
    freeze: &FreezeSpec,
) -> Result<Trained> {
    let triplets = make_triplets(&prepared.training_set(), &cfg.triplet_config())?;
    let report = trainer::train(&triplets, model, &cfg.train_config(), freeze)?;
    let calibration_errors = score_all(&report.model, &prepared.train)?;
    let threshold = detector::calibrate_from_errors(&calibration_errors, cfg.detect.percentile)?;
    Ok(Trained {
        artifact: ModelArtifact {
            model: report.model,
            threshold: Some(threshold),
            calibration_errors,
            meta: meta(cfg, schema),
        },
        epochs: report.epochs,
        prepared,
    })
}

/// Trains a fresh model on the benign part of `table` and calibrates it.
pub fn train(table: &FlowTable, schema: &FlowSchema, cfg: &PipelineConfig) -> Result<Trained> {
    let prepared = prepare(table, cfg, None)?;
    let mut model = AutoencoderModel::init(cfg.model_config(table.num_features()))?;
    model.normalization = Some(prepared.stats.clone());
    fit(model, prepared, cfg, schema, &FreezeSpec::none())
}

/// Fine-tunes a pretrained model on a new corpus with `freeze` applied.
/// Normalization is refit on the new corpus.
pub fn transfer(
    pretrained: &ModelArtifact,
    table: &FlowTable,
    schema: &FlowSchema,
    cfg: &PipelineConfig,
    freeze: &FreezeSpec,
) -> Result<Trained> {
    check_width(&pretrained.model, table.num_features())?;
    let prepared = prepare(table, cfg, None)?;
    let mut model = pretrained.model.clone();
    model.normalization = Some(prepared.stats.clone());
    fit(model, prepared, cfg, schema, freeze)
}

fn check_width(model: &AutoencoderModel, n: usize) -> Result<()> {
    let expected = model.config().input_dim;
    if expected != n {
        return Err(flowae_core::Error::DimensionMismatch { expected, actual: n }.into());
    }
    Ok(())
}

fn stats_of(artifact: &ModelArtifact) -> Result<&NormalizationStats> {
    artifact.model.normalization.as_ref().ok_or_else(|| Error::CorruptArtifact("no normalization stats".into()))
}

fn threshold_of(artifact: &ModelArtifact) -> Result<ThresholdModel> {
    artifact.threshold.ok_or_else(|| Error::CorruptArtifact("model has not been calibrated".into()))
}

/// Config with the artifact's windowing, so evaluation matches training.
fn windowing_from(artifact: &ModelArtifact, cfg: &PipelineConfig) -> PipelineConfig {
    let mut c = cfg.clone();
    c.sequence.length = artifact.meta.sequence_length;
    c.sequence.stride = Some(artifact.meta.stride);
    c
}

/// Recomputes the threshold at `percentile`. Uses the stored benign errors
/// when present, otherwise rescoring the training windows of `table`.
pub fn recalibrate(
    artifact: &mut ModelArtifact,
    table: Option<&FlowTable>,
    cfg: &PipelineConfig,
    percentile: f64,
) -> Result<ThresholdModel> {
    if let Some(t) = table {
        check_width(&artifact.model, t.num_features())?;
        let c = windowing_from(artifact, cfg);
        let prepared = prepare(t, &c, Some(stats_of(artifact)?))?;
        artifact.calibration_errors = score_all(&artifact.model, &prepared.train)?;
    }
    let th = detector::calibrate_from_errors(&artifact.calibration_errors, percentile)?;
    artifact.threshold = Some(th);
    Ok(th)
}

/// One verdict row.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub start_index: usize,
    pub score: f64,
    pub verdict: Label,
}

/// Windows `table` (no split) with the artifact's settings and classifies
/// every window.
pub fn detect(artifact: &ModelArtifact, table: &FlowTable) -> Result<Vec<Detection>> {
    check_width(&artifact.model, table.num_features())?;
    let threshold = threshold_of(artifact)?;
    if table.is_empty() {
        return Ok(Vec::new());
    }
    let flows = normalize(table, stats_of(artifact)?)?;
    let seqs = build_sequences(&flows, artifact.meta.sequence_length, artifact.meta.stride)?;
    seqs.iter()
        .map(|s| {
            let score = artifact.model.score(&s.values)?;
            Ok(Detection { start_index: s.start_index, score, verdict: detector::verdict_for(score, &threshold) })
        })
        .collect()
}

/// Evaluation outputs plus the latent means of the benign test windows.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub benign_latents: Vec<Vec<f64>>,
    pub prepared: Prepared,
}

/// Scores the held-out benign windows and all attack windows of `table`.
/// `percentile` recalibrates from the stored benign errors; `None` keeps
/// the stored threshold.
pub fn evaluate(
    artifact: &ModelArtifact,
    table: &FlowTable,
    cfg: &PipelineConfig,
    percentile: Option<f64>,
) -> Result<Evaluation> {
    check_width(&artifact.model, table.num_features())?;
    let c = windowing_from(artifact, cfg);
    let prepared = prepare(table, &c, Some(stats_of(artifact)?))?;
    let calibration_errors = if artifact.calibration_errors.is_empty() {
        score_all(&artifact.model, &prepared.train)?
    } else {
        artifact.calibration_errors.clone()
    };
    let threshold = match percentile {
        Some(q) => detector::calibrate_from_errors(&calibration_errors, q)?,
        None => threshold_of(artifact)?,
    };
    let report = metrics::evaluate(
        &artifact.model,
        &threshold,
        &calibration_errors,
        &prepared.benign_test,
        &prepared.attack,
        &cfg.detect.curve_percentiles,
    )?;
    let benign_latents = latent_means(&artifact.model, &prepared.benign_test)?;
    Ok(Evaluation { report, benign_latents, prepared })
}

pub fn latent_means(model: &AutoencoderModel, seqs: &[Sequence]) -> Result<Vec<Vec<f64>>> {
    Ok(seqs.iter().map(|s| model.encode(&s.values).map(|c| c.mean)).collect::<flowae_core::Result<_>>()?)
}

/// Trains one model per grid cell on the same split and initial weights.
pub fn sweep(table: &FlowTable, cfg: &PipelineConfig, grid: &SweepGrid) -> Result<SweepOutcome> {
    let prepared = prepare(table, cfg, None)?;
    let triplets = make_triplets(&prepared.training_set(), &cfg.triplet_config())?;
    let mut initial = AutoencoderModel::init(cfg.model_config(table.num_features()))?;
    initial.normalization = Some(prepared.stats.clone());
    let data = SweepData {
        calibration: &prepared.train,
        benign_test: &prepared.benign_test,
        attack_test: &prepared.attack,
        percentile: cfg.detect.percentile,
    };
    Ok(trainer::sweep(&triplets, &initial, &cfg.train_config(), grid, data)?)
}

/// Artifact for a sweep cell, so the best cell can be saved.
pub fn sweep_cell_artifact(
    outcome: &SweepOutcome,
    index: usize,
    prepared_train_errors: Vec<f64>,
    schema: &FlowSchema,
    cfg: &PipelineConfig,
) -> ModelArtifact {
    let cell = &outcome.cells[index];
    let mut m = meta(cfg, schema);
    m.lambda_rec = cell.lambda_rec;
    m.lambda_tml = cell.lambda_tml;
    ModelArtifact {
        model: cell.model.clone(),
        threshold: Some(cell.threshold),
        calibration_errors: prepared_train_errors,
        meta: m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::SyntheticSpec;

    fn cfg(len: usize) -> PipelineConfig {
        let mut c = PipelineConfig::default();
        c.sequence.length = len;
        c
    }

    #[test]
    fn runs_group_adjacent_blocks() {
        assert_eq!(runs(vec![5, 0, 1, 3, 4, 9]), vec![vec![0, 1], vec![3, 4, 5], vec![9]]);
    }

    #[test]
    fn split_is_disjoint_and_covers_whole_blocks() {
        let spec = SyntheticSpec { flows: 1000, features: 3, attack_fraction: 0.2, seed: 2, ..Default::default() };
        let table = spec.generate().unwrap();
        let p = prepare(&table, &cfg(10), None).unwrap();
        let starts = |s: &[Sequence]| s.iter().map(|q| q.start_index).collect::<std::collections::BTreeSet<_>>();
        let (tr, te) = (starts(&p.train), starts(&p.benign_test));
        assert!(tr.is_disjoint(&te));
        assert_eq!(tr.len() + te.len(), 80);
        assert_eq!(tr.len(), 64);
        assert!(p.attack.iter().all(|s| s.label == Label::Attack));
        assert!(!p.attack.is_empty());
        assert!(p.train.iter().chain(&p.benign_test).all(|s| s.label == Label::Benign));
        // Stats come from training flows only.
        assert_eq!(p.stats.len(), 3);
    }

    #[test]
    fn overlapping_windows_stay_inside_runs() {
        let table = SyntheticSpec { flows: 400, features: 2, seed: 1, ..Default::default() }.generate().unwrap();
        let mut c = cfg(10);
        c.sequence.stride = Some(3);
        let p = prepare(&table, &c, None).unwrap();
        let test_blocks: std::collections::BTreeSet<usize> =
            p.benign_test.iter().map(|s| s.start_index / 10).collect();
        for s in &p.train {
            assert!(!test_blocks.contains(&(s.start_index / 10)));
            let last = s.start_index + 9;
            assert!(!test_blocks.contains(&(last / 10)));
        }
    }

    #[test]
    fn smote_adds_windows() {
        let table = SyntheticSpec { flows: 500, features: 3, seed: 4, ..Default::default() }.generate().unwrap();
        let mut c = cfg(10);
        c.smote.enabled = true;
        c.smote.multiplier = 1.5;
        let p = prepare(&table, &c, None).unwrap();
        assert_eq!(p.synthetic.len(), 20);
    }

    #[test]
    fn too_small_corpus() {
        let table = SyntheticSpec { flows: 30, features: 2, ..Default::default() }.generate().unwrap();
        assert!(prepare(&table, &cfg(25), None).is_err());
    }
}
