//! SMOTE oversampling of benign flow records.

use alloc::vec::Vec;
use rand::Rng;

use crate::error::{Error, Result};
use crate::flow::{FlowRecord, FlowTable, Label};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Benign record count after oversampling (originals included).
    pub target_count: usize,
    pub seed: u64,
}

impl SmoteConfig {
    /// Target of `multiplier` times the input count, rounded down.
    pub fn with_multiplier(input_count: usize, multiplier: f64, k_neighbors: usize, seed: u64) -> Self {
        let target = libm::floor(input_count as f64 * multiplier) as usize;
        Self { k_neighbors, target_count: target.max(input_count), seed }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` nearest other records to `query`, by squared distance
/// with the lower index winning ties.
pub(crate) fn nearest_neighbors(records: &[FlowRecord], query: usize, k: usize) -> Vec<usize> {
    let q = &records[query].features;
    let mut dists: Vec<(f64, usize)> = records
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != query)
        .map(|(j, r)| (squared_distance(q, &r.features), j))
        .collect();
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dists.len() {
        dists.select_nth_unstable_by(k - 1, by_distance);
        dists.truncate(k);
    }
    dists.sort_unstable_by(by_distance);
    dists.into_iter().map(|(_, j)| j).collect()
}

/// `x + u·(other − x)`.
pub(crate) fn interpolate(x: &[f64], other: &[f64], u: f64) -> Vec<f64> {
    x.iter().zip(other).map(|(a, b)| a + u * (b - a)).collect()
}

/// Appends `target_count - len` synthetic records, cycling the base point
/// round-robin through the input and interpolating towards one of its
/// `k` nearest neighbors.
pub fn smote_oversample(benign_flows: &FlowTable, cfg: &SmoteConfig) -> Result<FlowTable> {
    let records = benign_flows.records();
    if let Some(pos) = records.iter().position(|r| r.label.is_attack()) {
        return Err(Error::AttackInTrainingData(pos));
    }
    if cfg.target_count < records.len() {
        return Err(Error::TargetBelowInput { target: cfg.target_count, input: records.len() });
    }
    if cfg.target_count == records.len() {
        return Ok(benign_flows.clone());
    }
    if cfg.k_neighbors == 0 || cfg.k_neighbors >= records.len() {
        return Err(Error::TooFewRecords { k: cfg.k_neighbors, got: records.len() });
    }

    let synthetic = cfg.target_count - records.len();
    let mut neighbors: Vec<Option<Vec<usize>>> = alloc::vec![None; records.len()];
    let mut rng = rng::stream(cfg.seed, rng::SMOTE);
    let next_index = records.iter().map(|r| r.original_index + 1).max().unwrap_or(0);

    let mut out = Vec::with_capacity(cfg.target_count);
    out.extend_from_slice(records);
    for s in 0..synthetic {
        let base = s % records.len();
        let nn = neighbors[base].get_or_insert_with(|| nearest_neighbors(records, base, cfg.k_neighbors));
        let other = &records[nn[rng.gen_range(0..nn.len())]].features;
        let u: f64 = rng.gen();
        out.push(FlowRecord {
            features: interpolate(&records[base].features, other, u),
            label: Label::Benign,
            category: None,
            original_index: next_index + s,
        });
    }
    FlowTable::new(benign_flows.num_features(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn table(points: &[&[f64]]) -> FlowTable {
        let records = points
            .iter()
            .enumerate()
            .map(|(i, p)| FlowRecord {
                features: p.to_vec(),
                label: Label::Benign,
                category: None,
                original_index: i,
            })
            .collect();
        FlowTable::new(points[0].len(), records).unwrap()
    }

    #[test]
    fn target_equal_to_input_is_a_no_op() {
        let t = table(&[&[0.1], &[0.2]]);
        let cfg = SmoteConfig { k_neighbors: 5, target_count: 2, seed: 0 };
        assert_eq!(smote_oversample(&t, &cfg).unwrap(), t);
    }

    #[test]
    fn two_points_interpolate_on_segment() {
        let t = table(&[&[0.0], &[1.0]]);
        let cfg = SmoteConfig { k_neighbors: 1, target_count: 3, seed: 9 };
        let out = smote_oversample(&t, &cfg).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(&out.records()[..2], t.records());
        let v = out.records()[2].features[0];
        assert!((0.0..=1.0).contains(&v));
        assert_eq!(out.records()[2].original_index, 2);
    }

    #[test]
    fn interpolation_endpoints() {
        assert_eq!(interpolate(&[0.2, 0.4], &[1.0, 0.0], 0.0), vec![0.2, 0.4]);
        assert_eq!(interpolate(&[0.2, 0.4], &[1.0, 0.0], 1.0), vec![1.0, 0.0]);
    }

    #[test]
    fn nearest_neighbors_order() {
        let t = table(&[&[0.0], &[0.9], &[0.1], &[0.5]]);
        assert_eq!(nearest_neighbors(t.records(), 0, 2), vec![2, 3]);
        assert_eq!(nearest_neighbors(t.records(), 1, 3), vec![3, 2, 0]);
    }

    #[test]
    fn errors() {
        let t = table(&[&[0.0], &[1.0]]);
        assert_eq!(
            smote_oversample(&t, &SmoteConfig { k_neighbors: 1, target_count: 1, seed: 0 }),
            Err(Error::TargetBelowInput { target: 1, input: 2 })
        );
        assert_eq!(
            smote_oversample(&t, &SmoteConfig { k_neighbors: 2, target_count: 4, seed: 0 }),
            Err(Error::TooFewRecords { k: 2, got: 2 })
        );
    }

    #[test]
    fn multiplier_target() {
        assert_eq!(SmoteConfig::with_multiplier(10, 2.5, 5, 0).target_count, 25);
        assert_eq!(SmoteConfig::with_multiplier(10, 0.5, 5, 0).target_count, 10);
    }
}
