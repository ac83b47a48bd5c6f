//! Percentile threshold on benign reconstruction errors.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::Label;
use crate::model::AutoencoderModel;
use crate::sequencer::Sequence;

pub const DEFAULT_PERCENTILE: f64 = 99.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdModel {
    pub threshold: f64,
    pub percentile: f64,
    pub calibration_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub label: Label,
    pub score: f64,
}

fn check_percentile(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 100.0) {
        return Err(Error::InvalidConfig("percentile must lie in (0, 100]".into()));
    }
    Ok(())
}

/// The `q`-th percentile of `sample`, interpolating linearly between the
/// closest ranks: position `q/100 · (N − 1)` in the sorted sample.
pub fn percentile(sample: &[f64], q: f64) -> Result<f64> {
    check_percentile(q)?;
    if sample.is_empty() {
        return Err(Error::EmptyCalibrationSet);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, q))
}

pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn calibrate_from_errors(errors: &[f64], q: f64) -> Result<ThresholdModel> {
    Ok(ThresholdModel { threshold: percentile(errors, q)?, percentile: q, calibration_count: errors.len() })
}

/// Reconstruction error of every sequence, in order.
pub fn score_all(model: &AutoencoderModel, sequences: &[Sequence]) -> Result<Vec<f64>> {
    sequences.iter().map(|s| model.score(&s.values)).collect()
}

/// Threshold at percentile `q` of the unweighted reconstruction errors of
/// the benign training sequences.
pub fn calibrate(model: &AutoencoderModel, benign_train: &[Sequence], q: f64) -> Result<ThresholdModel> {
    check_percentile(q)?;
    if benign_train.is_empty() {
        return Err(Error::EmptyCalibrationSet);
    }
    calibrate_from_errors(&score_all(model, benign_train)?, q)
}

/// Attack iff the score is strictly above the threshold.
pub fn verdict_for(score: f64, threshold: &ThresholdModel) -> Label {
    if score > threshold.threshold {
        Label::Attack
    } else {
        Label::Benign
    }
}

pub fn classify(model: &AutoencoderModel, threshold: &ThresholdModel, seq: &Sequence) -> Result<Verdict> {
    let score = model.score(&seq.values)?;
    Ok(Verdict { label: verdict_for(score, threshold), score })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ninety_ninth_of_one_to_hundred() {
        let errs: Vec<f64> = (1..=100).map(f64::from).collect();
        let p = percentile(&errs, 99.0).unwrap();
        assert!((p - 99.01).abs() < 1e-9, "{p}");
        assert_eq!(percentile(&errs, 100.0).unwrap(), 100.0);
        assert_eq!(percentile(&errs, 50.0).unwrap(), 50.5);
    }

    #[test]
    fn constant_sample() {
        for q in [1.0, 37.5, 90.0, 100.0] {
            assert_eq!(percentile(&[0.3; 7], q).unwrap(), 0.3);
        }
    }

    #[test]
    fn percentile_errors() {
        assert_eq!(percentile(&[], 99.0), Err(Error::EmptyCalibrationSet));
        assert!(percentile(&[1.0], 0.0).is_err());
        assert!(percentile(&[1.0], 100.5).is_err());
    }

    #[test]
    fn boundary_is_benign() {
        let t = ThresholdModel { threshold: 0.5, percentile: 99.0, calibration_count: 10 };
        assert_eq!(verdict_for(0.5, &t), Label::Benign);
        assert_eq!(verdict_for(0.5 + 1e-12, &t), Label::Attack);
        assert_eq!(verdict_for(0.0, &t), Label::Benign);
    }
}
