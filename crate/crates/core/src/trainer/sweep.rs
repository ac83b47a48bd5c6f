//! Grid sweep over the reconstruction and triplet loss weights.

use alloc::vec::Vec;

use super::{train, FreezeSpec, TrainConfig};
use crate::detector::{self, ThresholdModel};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, CoreMetrics, EvalReport};
use crate::model::AutoencoderModel;
use crate::sequencer::{Sequence, Triplet};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub lambda_rec: Vec<f64>,
    pub lambda_tml: Vec<f64>,
}

impl SweepGrid {
    /// 0.0, 0.1, ..., 1.0 on both axes: 121 cells.
    pub fn full() -> Self {
        let axis: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
        Self { lambda_rec: axis.clone(), lambda_tml: axis }
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lambda_rec.iter().flat_map(move |&r| self.lambda_tml.iter().map(move |&t| (r, t)))
    }

    pub fn len(&self) -> usize {
        self.lambda_rec.len() * self.lambda_tml.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evaluation inputs shared by every grid cell.
#[derive(Debug, Clone, Copy)]
pub struct SweepData<'a> {
    /// Benign training sequences the threshold is calibrated on.
    pub calibration: &'a [Sequence],
    pub benign_test: &'a [Sequence],
    /// Labeled attack sequences; empty when no validation labels exist.
    pub attack_test: &'a [Sequence],
    pub percentile: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepCriterion {
    /// Highest F1 on the labeled validation sequences.
    F1,
    /// Highest benign accuracy at the calibrated threshold.
    BenignAccuracy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub lambda_rec: f64,
    pub lambda_tml: f64,
    pub threshold: ThresholdModel,
    pub report: EvalReport,
    pub model: AutoencoderModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub cells: Vec<SweepCell>,
    pub criterion: SweepCriterion,
    /// Index into `cells` of the selected configuration (first on ties).
    pub best: usize,
}

impl SweepOutcome {
    pub fn best_cell(&self) -> &SweepCell {
        &self.cells[self.best]
    }

    /// Mean of each metric over the cells where it is defined.
    pub fn average(&self) -> CoreMetrics {
        fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
            let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            (n > 0).then(|| sum / n as f64)
        }
        let m = || self.cells.iter().map(|c| c.report.metrics);
        CoreMetrics {
            benign_accuracy: mean(m().map(|x| x.benign_accuracy)),
            anomaly_accuracy: mean(m().map(|x| x.anomaly_accuracy)),
            precision: mean(m().map(|x| x.precision)),
            recall: mean(m().map(|x| x.recall)),
            f1: mean(m().map(|x| x.f1)),
        }
    }
}

/// Trains one model per grid cell from the same initial parameters and
/// evaluates each. Every cell reuses `cfg.seed`, so cells differ only in
/// their loss weights.
pub fn sweep(
    triplets: &[Triplet],
    initial: &AutoencoderModel,
    cfg: &TrainConfig,
    grid: &SweepGrid,
    data: SweepData<'_>,
) -> Result<SweepOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty sweep grid".into()));
    }
    if grid.lambda_rec.iter().chain(&grid.lambda_tml).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidConfig("sweep weights must lie in [0, 1]".into()));
    }
    let criterion = if data.attack_test.is_empty() { SweepCriterion::BenignAccuracy } else { SweepCriterion::F1 };
    let mut cells = Vec::with_capacity(grid.len());
    for (lambda_rec, lambda_tml) in grid.cells() {
        let cell_cfg = TrainConfig { lambda_rec, lambda_tml, ..*cfg };
        let model = train(triplets, initial.clone(), &cell_cfg, &FreezeSpec::none())?.model;
        let calibration_errors = detector::score_all(&model, data.calibration)?;
        let threshold = detector::calibrate_from_errors(&calibration_errors, data.percentile)?;
        let report = evaluate(&model, &threshold, &calibration_errors, data.benign_test, data.attack_test, &[])?;
        cells.push(SweepCell { lambda_rec, lambda_tml, threshold, report, model });
    }
    let key = |c: &SweepCell| match criterion {
        SweepCriterion::F1 => c.report.metrics.f1,
        SweepCriterion::BenignAccuracy => c.report.metrics.benign_accuracy,
    };
    let mut best = 0;
    for (i, c) in cells.iter().enumerate() {
        if key(c).unwrap_or(f64::NEG_INFINITY) > key(&cells[best]).unwrap_or(f64::NEG_INFINITY) {
            best = i;
        }
    }
    Ok(SweepOutcome { cells, criterion, best })
}
