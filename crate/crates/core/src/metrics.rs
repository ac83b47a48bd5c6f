//! Detection metrics with attack as the positive class.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::detector::{self, verdict_for, ThresholdModel};
use crate::error::{Error, Result};
use crate::flow::Label;
use crate::model::AutoencoderModel;
use crate::sequencer::Sequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    pub fn from_scores(benign_scores: &[f64], attack_scores: &[f64], threshold: &ThresholdModel) -> Self {
        let fp = benign_scores.iter().filter(|&&s| verdict_for(s, threshold) == Label::Attack).count() as u64;
        let tp = attack_scores.iter().filter(|&&s| verdict_for(s, threshold) == Label::Attack).count() as u64;
        Self {
            true_positives: tp,
            false_positives: fp,
            true_negatives: benign_scores.len() as u64 - fp,
            false_negatives: attack_scores.len() as u64 - tp,
        }
    }
}

/// Ratios with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoreMetrics {
    /// TN / (TN + FP), in percent.
    pub benign_accuracy: Option<f64>,
    /// TP / (TP + FN), in percent.
    pub anomaly_accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(c: &ConfusionCounts) -> CoreMetrics {
    let precision = ratio(c.true_positives, c.true_positives + c.false_positives);
    let recall = ratio(c.true_positives, c.true_positives + c.false_negatives);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    CoreMetrics {
        benign_accuracy: ratio(c.true_negatives, c.true_negatives + c.false_positives).map(|v| 100.0 * v),
        anomaly_accuracy: recall.map(|r| 100.0 * r),
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryMetrics {
    pub sequences: usize,
    pub detected: usize,
    /// Percent of this category's sequences flagged.
    pub anomaly_accuracy: f64,
    /// Against the shared benign test set's false positives.
    pub precision: Option<f64>,
    pub recall: f64,
}

fn per_category_scored(
    benign_scores: &[f64],
    attacks: &[Sequence],
    attack_scores: &[f64],
    threshold: &ThresholdModel,
) -> Result<BTreeMap<String, CategoryMetrics>> {
    let fp = benign_scores.iter().filter(|&&s| verdict_for(s, threshold) == Label::Attack).count();
    let mut tallies: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (seq, &score) in attacks.iter().zip(attack_scores) {
        let cat = seq.category.clone().ok_or(Error::UnknownCategory { start_index: seq.start_index })?;
        let entry = tallies.entry(cat).or_default();
        entry.0 += 1;
        if verdict_for(score, threshold) == Label::Attack {
            entry.1 += 1;
        }
    }
    Ok(tallies
        .into_iter()
        .map(|(cat, (n, tp))| {
            let recall = tp as f64 / n as f64;
            let m = CategoryMetrics {
                sequences: n,
                detected: tp,
                anomaly_accuracy: 100.0 * recall,
                precision: ratio(tp as u64, (tp + fp) as u64),
                recall,
            };
            (cat, m)
        })
        .collect())
}

/// Detection rates per attack category against a shared benign test set.
pub fn per_category_eval(
    model: &AutoencoderModel,
    threshold: &ThresholdModel,
    benign_test: &[Sequence],
    attacks: &[Sequence],
) -> Result<BTreeMap<String, CategoryMetrics>> {
    let benign_scores = detector::score_all(model, benign_test)?;
    let attack_scores = detector::score_all(model, attacks)?;
    per_category_scored(&benign_scores, attacks, &attack_scores, threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub percentile: f64,
    pub threshold: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub benign_accuracy: Option<f64>,
    pub anomaly_accuracy: Option<f64>,
}

/// Re-thresholds the stored benign calibration errors at each percentile and
/// recounts; no model evaluation happens here.
pub fn pr_curve_from_scores(
    calibration_errors: &[f64],
    benign_scores: &[f64],
    attack_scores: &[f64],
    percentiles: &[f64],
) -> Result<Vec<PrPoint>> {
    if calibration_errors.is_empty() {
        return Err(Error::EmptyCalibrationSet);
    }
    percentiles
        .iter()
        .map(|&q| {
            let th = detector::calibrate_from_errors(calibration_errors, q)?;
            let m = compute_metrics(&ConfusionCounts::from_scores(benign_scores, attack_scores, &th));
            Ok(PrPoint {
                percentile: q,
                threshold: th.threshold,
                precision: m.precision,
                recall: m.recall,
                benign_accuracy: m.benign_accuracy,
                anomaly_accuracy: m.anomaly_accuracy,
            })
        })
        .collect()
}

/// PR curve over `labeled` sequences using their own labels as ground truth.
pub fn pr_across_percentiles(
    model: &AutoencoderModel,
    calibration_errors: &[f64],
    labeled: &[Sequence],
    percentiles: &[f64],
) -> Result<Vec<PrPoint>> {
    if calibration_errors.is_empty() {
        return Err(Error::EmptyCalibrationSet);
    }
    let mut benign = Vec::new();
    let mut attack = Vec::new();
    for seq in labeled {
        let s = model.score(&seq.values)?;
        match seq.label {
            Label::Benign => benign.push(s),
            Label::Attack => attack.push(s),
        }
    }
    pr_curve_from_scores(calibration_errors, &benign, &attack, percentiles)
}

/// Mean over latent dimensions of the range (max − min) spanned by `codes`.
pub fn latent_cohesion(codes: &[Vec<f64>]) -> Result<f64> {
    if codes.len() < 2 {
        return Err(Error::InsufficientCodes(codes.len()));
    }
    let dim = codes[0].len();
    if let Some(bad) = codes.iter().find(|c| c.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, actual: bad.len() });
    }
    if dim == 0 {
        return Ok(0.0);
    }
    let total: f64 = (0..dim)
        .map(|k| {
            let (lo, hi) = codes
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c[k]), hi.max(c[k])));
            hi - lo
        })
        .sum();
    Ok(total / dim as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub threshold: ThresholdModel,
    pub counts: ConfusionCounts,
    pub metrics: CoreMetrics,
    pub per_category: BTreeMap<String, CategoryMetrics>,
    pub pr_curve: Vec<PrPoint>,
    /// Over the benign test latent means; `None` with fewer than two.
    pub latent_cohesion: Option<f64>,
}

/// Scores every test sequence once and derives the full report.
///
/// Attack sequences without a category are left out of `per_category`
/// instead of failing the whole evaluation.
pub fn evaluate(
    model: &AutoencoderModel,
    threshold: &ThresholdModel,
    calibration_errors: &[f64],
    benign_test: &[Sequence],
    attack_test: &[Sequence],
    percentiles: &[f64],
) -> Result<EvalReport> {
    let benign_scores = detector::score_all(model, benign_test)?;
    let attack_scores = detector::score_all(model, attack_test)?;
    let counts = ConfusionCounts::from_scores(&benign_scores, &attack_scores, threshold);

    let (categorized, categorized_scores): (Vec<Sequence>, Vec<f64>) = attack_test
        .iter()
        .zip(&attack_scores)
        .filter(|(s, _)| s.category.is_some())
        .map(|(s, &sc)| (s.clone(), sc))
        .unzip();
    let per_category = per_category_scored(&benign_scores, &categorized, &categorized_scores, threshold)?;

    let pr_curve = if calibration_errors.is_empty() || percentiles.is_empty() {
        Vec::new()
    } else {
        pr_curve_from_scores(calibration_errors, &benign_scores, &attack_scores, percentiles)?
    };

    let codes = benign_test
        .iter()
        .map(|s| model.encode(&s.values).map(|c| c.mean))
        .collect::<Result<Vec<_>>>()?;
    let latent_cohesion = latent_cohesion(&codes).ok();

    Ok(EvalReport {
        threshold: *threshold,
        counts,
        metrics: compute_metrics(&counts),
        per_category,
        pr_curve,
        latent_cohesion,
    })
}
