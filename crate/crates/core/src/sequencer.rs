//! Fixed-length windows over ordered flows and triplet construction.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;

use crate::error::{Error, Result};
use crate::flow::{FlowTable, Label};
use crate::matrix::Matrix;
use crate::rng;

/// `L` consecutive flows as an (L, n) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub values: Matrix,
    pub label: Label,
    /// Most frequent attack category among the attack flows, if any.
    pub category: Option<String>,
    /// `original_index` of the first flow in the window.
    pub start_index: usize,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn num_features(&self) -> usize {
        self.values.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub anchor: Sequence,
    pub positive: Sequence,
    pub negative: Sequence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletConfig {
    pub noise_scale: f64,
    pub sequence_length: usize,
    pub stride: usize,
    pub seed: u64,
}

impl Default for TripletConfig {
    fn default() -> Self {
        Self { noise_scale: 0.01, sequence_length: 25, stride: 25, seed: 0 }
    }
}

/// Cuts `flows` into windows of `length` starting every `stride` flows.
///
/// A window is labeled attack only when strictly more than half of its flows
/// are attacks; a trailing partial window is dropped.
pub fn build_sequences(flows: &FlowTable, length: usize, stride: usize) -> Result<Vec<Sequence>> {
    if length == 0 || stride == 0 {
        return Err(Error::InvalidConfig("sequence length and stride must be at least 1".into()));
    }
    let records = flows.records();
    if length > records.len() {
        return Err(Error::SequenceLongerThanData { length, available: records.len() });
    }
    let n = flows.num_features();
    let mut out = Vec::with_capacity((records.len() - length) / stride + 1);
    let mut start = 0;
    while start + length <= records.len() {
        let window = &records[start..start + length];
        let mut data = Vec::with_capacity(length * n);
        let mut attacks = 0usize;
        let mut categories: BTreeMap<&str, usize> = BTreeMap::new();
        for rec in window {
            data.extend_from_slice(&rec.features);
            if rec.label.is_attack() {
                attacks += 1;
                if let Some(c) = &rec.category {
                    *categories.entry(c.as_str()).or_default() += 1;
                }
            }
        }
        let label = if 2 * attacks > length { Label::Attack } else { Label::Benign };
        // BTreeMap iterates in lexicographic order, so the first maximum wins ties.
        let category = match label {
            Label::Attack => categories
                .iter()
                .fold(None::<(&str, usize)>, |best, (&c, &k)| match best {
                    Some((_, bk)) if bk >= k => best,
                    _ => Some((c, k)),
                })
                .map(|(c, _)| String::from(c)),
            Label::Benign => None,
        };
        out.push(Sequence {
            values: Matrix::from_vec(length, n, data)?,
            label,
            category,
            start_index: window[0].original_index,
        });
        start += stride;
    }
    Ok(out)
}

/// One triplet per anchor: a noisy copy as positive and a different benign
/// window as negative.
pub fn make_triplets(benign_sequences: &[Sequence], cfg: &TripletConfig) -> Result<Vec<Triplet>> {
    if benign_sequences.len() < 2 {
        return Err(Error::NeedAtLeastTwoSequences);
    }
    if let Some(pos) = benign_sequences.iter().position(|s| s.label.is_attack()) {
        return Err(Error::AttackInTrainingData(pos));
    }
    if !(cfg.noise_scale >= 0.0) {
        return Err(Error::InvalidConfig("noise scale must be non-negative".into()));
    }
    let shape = (benign_sequences[0].len(), benign_sequences[0].num_features());
    if let Some(bad) = benign_sequences.iter().find(|s| (s.len(), s.num_features()) != shape) {
        return Err(Error::DimensionMismatch {
            expected: shape.0 * shape.1,
            actual: bad.len() * bad.num_features(),
        });
    }

    benign_sequences
        .iter()
        .enumerate()
        .map(|(i, anchor)| {
            let mut rng = rng::substream(cfg.seed, rng::TRIPLETS, i as u64);
            let mut positive = anchor.clone();
            if cfg.noise_scale > 0.0 {
                for v in positive.values.as_mut_slice() {
                    let delta = cfg.noise_scale * (2.0 * rng.gen::<f64>() - 1.0);
                    *v = (*v + delta).clamp(0.0, 1.0);
                }
            }
            let candidates: Vec<usize> = benign_sequences
                .iter()
                .enumerate()
                .filter(|(_, s)| s.start_index != anchor.start_index)
                .map(|(j, _)| j)
                .collect();
            if candidates.is_empty() {
                return Err(Error::NeedAtLeastTwoSequences);
            }
            let negative = benign_sequences[candidates[rng.gen_range(0..candidates.len())]].clone();
            Ok(Triplet { anchor: anchor.clone(), positive, negative })
        })
        .collect()
}
