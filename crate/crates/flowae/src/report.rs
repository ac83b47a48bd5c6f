//! CSV and TOML report files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use flowae_core::metrics::{CategoryMetrics, CoreMetrics, EvalReport, PrPoint};
use flowae_core::trainer::{EpochLoss, SweepOutcome};
use flowae_core::Label;
use serde::Serialize;

use crate::csvio::fmt_opt;
use crate::error::{Error, Result};
use crate::pipeline::Detection;

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// `epoch,L,L_REC,L_TML[,KL]`.
pub fn write_train_csv(path: &Path, epochs: &[EpochLoss], with_kl: bool) -> Result<()> {
    let mut w = create(path)?;
    let mut header = vec!["epoch", "L", "L_REC", "L_TML"];
    if with_kl {
        header.push("KL");
    }
    w.write_record(&header)?;
    for e in epochs {
        let l = &e.loss;
        let mut row = vec![e.epoch.to_string(), l.joint.to_string(), l.reconstruction.to_string(), l.triplet.to_string()];
        if with_kl {
            row.push(l.kl.to_string());
        }
        w.write_record(&row)?;
    }
    finish(w, path)
}

/// `percentile,threshold,precision,recall,benign_acc,anomaly_acc`.
pub fn write_pr_csv(path: &Path, curve: &[PrPoint]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["percentile", "threshold", "precision", "recall", "benign_acc", "anomaly_acc"])?;
    for p in curve {
        w.write_record([
            p.percentile.to_string(),
            p.threshold.to_string(),
            fmt_opt(p.precision),
            fmt_opt(p.recall),
            fmt_opt(p.benign_accuracy),
            fmt_opt(p.anomaly_accuracy),
        ])?;
    }
    finish(w, path)
}

/// `start_index,score,verdict`.
pub fn write_verdicts(path: &Path, rows: &[Detection]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["start_index", "score", "verdict"])?;
    for r in rows {
        let v = match r.verdict {
            Label::Benign => "benign",
            Label::Attack => "attack",
        };
        w.write_record([r.start_index.to_string(), r.score.to_string(), v.to_string()])?;
    }
    finish(w, path)
}

pub fn write_per_category_csv(path: &Path, cats: &BTreeMap<String, CategoryMetrics>) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["category", "sequences", "detected", "anomaly_acc", "precision", "recall"])?;
    for (name, c) in cats {
        w.write_record([
            name.clone(),
            c.sequences.to_string(),
            c.detected.to_string(),
            c.anomaly_accuracy.to_string(),
            fmt_opt(c.precision),
            c.recall.to_string(),
        ])?;
    }
    finish(w, path)
}

/// One row per latent vector, columns `z0..`.
pub fn write_latents_csv(path: &Path, latents: &[Vec<f64>]) -> Result<()> {
    let mut w = create(path)?;
    let dim = latents.first().map_or(0, Vec::len);
    w.write_record((0..dim).map(|i| format!("z{i}")))?;
    for z in latents {
        w.write_record(z.iter().map(|v| v.to_string()))?;
    }
    finish(w, path)
}

fn metric_cells(m: &CoreMetrics) -> [String; 5] {
    [fmt_opt(m.benign_accuracy), fmt_opt(m.anomaly_accuracy), fmt_opt(m.precision), fmt_opt(m.recall), fmt_opt(m.f1)]
}

/// One row per grid cell; `best` marks the selected cell.
pub fn write_sweep_csv(path: &Path, outcome: &SweepOutcome) -> Result<()> {
    let mut w = create(path)?;
    w.write_record([
        "lambda_rec", "lambda_tml", "threshold", "benign_acc", "anomaly_acc", "precision", "recall", "f1", "best",
    ])?;
    for (i, c) in outcome.cells.iter().enumerate() {
        let mut row = vec![c.lambda_rec.to_string(), c.lambda_tml.to_string(), c.threshold.threshold.to_string()];
        row.extend(metric_cells(&c.report.metrics));
        row.push(if i == outcome.best { "1" } else { "0" }.to_string());
        w.write_record(&row)?;
    }
    finish(w, path)
}

/// Metrics averaged over all grid cells.
pub fn write_sweep_average_csv(path: &Path, outcome: &SweepOutcome) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["cells", "benign_acc", "anomaly_acc", "precision", "recall", "f1"])?;
    let mut row = vec![outcome.cells.len().to_string()];
    row.extend(metric_cells(&outcome.average()));
    w.write_record(&row)?;
    finish(w, path)
}

#[derive(Serialize)]
struct Summary {
    threshold: f64,
    percentile: f64,
    calibration_count: usize,
    true_positives: u64,
    false_positives: u64,
    true_negatives: u64,
    false_negatives: u64,
    benign_accuracy: Option<f64>,
    anomaly_accuracy: Option<f64>,
    precision: Option<f64>,
    recall: Option<f64>,
    f1: Option<f64>,
    latent_cohesion: Option<f64>,
}

pub fn summary_toml(report: &EvalReport) -> String {
    let m = &report.metrics;
    let c = &report.counts;
    let s = Summary {
        threshold: report.threshold.threshold,
        percentile: report.threshold.percentile,
        calibration_count: report.threshold.calibration_count,
        true_positives: c.true_positives,
        false_positives: c.false_positives,
        true_negatives: c.true_negatives,
        false_negatives: c.false_negatives,
        benign_accuracy: m.benign_accuracy,
        anomaly_accuracy: m.anomaly_accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        latent_cohesion: report.latent_cohesion,
    };
    toml::to_string(&s).expect("summary serializes")
}

pub fn write_summary(path: &Path, report: &EvalReport) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(summary_toml(report).as_bytes()).map_err(|e| Error::io(path, e))
}
