//! Flow records, schemas and min-max normalization.

use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Benign,
    Attack,
}

impl Label {
    pub fn is_attack(self) -> bool {
        self == Label::Attack
    }
}

/// Which CSV columns form the feature vector and how rows are labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSchema {
    pub feature_columns: Vec<String>,
    pub label_column: String,
    pub attack_category_column: Option<String>,
    pub benign_label_value: String,
}

impl FlowSchema {
    pub fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::InvalidConfig("schema has no feature columns".into()));
        }
        if self.feature_columns.contains(&self.label_column) {
            return Err(Error::InvalidConfig("label column is listed as a feature".into()));
        }
        let mut names: Vec<&str> = self.feature_columns.iter().map(String::as_str).collect();
        names.push(&self.label_column);
        if let Some(cat) = &self.attack_category_column {
            if self.feature_columns.contains(cat) {
                return Err(Error::InvalidConfig("category column is listed as a feature".into()));
            }
        }
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("duplicate column names in schema".into()));
        }
        Ok(())
    }

    pub fn num_features(&self) -> usize {
        self.feature_columns.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub features: Vec<f64>,
    pub label: Label,
    pub category: Option<String>,
    /// Row position in the source file (0-based, header excluded).
    pub original_index: usize,
}

/// Ordered collection of flow records sharing one feature width.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTable {
    num_features: usize,
    records: Vec<FlowRecord>,
}

impl FlowTable {
    pub fn new(num_features: usize, records: Vec<FlowRecord>) -> Result<Self> {
        if let Some(bad) = records.iter().find(|r| r.features.len() != num_features) {
            return Err(Error::DimensionMismatch {
                expected: num_features,
                actual: bad.features.len(),
            });
        }
        Ok(Self { num_features, records })
    }

    pub fn empty(num_features: usize) -> Self {
        Self { num_features, records: Vec::new() }
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn records(&self) -> &[FlowRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<FlowRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn benign_count(&self) -> usize {
        self.records.iter().filter(|r| r.label == Label::Benign).count()
    }

    /// Benign records only, in their original order.
    pub fn benign(&self) -> FlowTable {
        self.filter(|r| r.label == Label::Benign)
    }

    pub fn filter(&self, keep: impl Fn(&FlowRecord) -> bool) -> FlowTable {
        FlowTable {
            num_features: self.num_features,
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }
}

/// Per-feature minimum and maximum from the training benign flows.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationStats {
    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    /// Scales `v` of feature `j` into [0, 1]; constant features map to 0.
    pub fn scale(&self, j: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[j], self.max[j]);
        let span = hi - lo;
        if span <= 0.0 {
            return 0.0;
        }
        ((v - lo) / span).clamp(0.0, 1.0)
    }

    pub fn unscale(&self, j: usize, v: f64) -> f64 {
        v * (self.max[j] - self.min[j]) + self.min[j]
    }
}

pub fn fit_normalizer(benign_flows: &FlowTable) -> Result<NormalizationStats> {
    if benign_flows.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: benign_flows.len() });
    }
    let n = benign_flows.num_features();
    let mut min = alloc::vec![f64::INFINITY; n];
    let mut max = alloc::vec![f64::NEG_INFINITY; n];
    for rec in benign_flows.records() {
        for (j, &v) in rec.features.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(NormalizationStats { min, max })
}

/// Min-max scales every record; values outside the fitted range are clamped.
pub fn normalize(flows: &FlowTable, stats: &NormalizationStats) -> Result<FlowTable> {
    if stats.len() != flows.num_features() {
        return Err(Error::DimensionMismatch {
            expected: stats.len(),
            actual: flows.num_features(),
        });
    }
    let records = flows
        .records()
        .iter()
        .map(|r| FlowRecord {
            features: r.features.iter().enumerate().map(|(j, &v)| stats.scale(j, v)).collect(),
            ..r.clone()
        })
        .collect();
    Ok(FlowTable { num_features: flows.num_features(), records })
}

/// Number of items the training side receives for a fraction `f` of `total`.
pub(crate) fn train_count(train_fraction: f64, total: usize) -> usize {
    // Guard against products like 0.29 * 100 = 28.999999999999996.
    libm::floor(train_fraction * total as f64 + 1e-9) as usize
}

fn check_fraction(train_fraction: f64) -> Result<()> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig("train fraction must lie strictly inside (0, 1)".into()));
    }
    Ok(())
}

/// Seeded shuffle of `items` followed by a prefix/suffix split.
pub fn split_items<T>(mut items: Vec<T>, train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    check_fraction(train_fraction)?;
    let mut rng = rng::stream(seed, rng::SPLIT);
    items.shuffle(&mut rng);
    let cut = train_count(train_fraction, items.len());
    let test = items.split_off(cut);
    Ok((items, test))
}

/// Splits the benign records into train/test partitions; attacks are dropped.
pub fn split_benign(
    flows: &FlowTable,
    train_fraction: f64,
    seed: u64,
) -> Result<(FlowTable, FlowTable)> {
    check_fraction(train_fraction)?;
    let benign = flows.benign().into_records();
    if benign.is_empty() {
        return Err(Error::NoBenignRecords);
    }
    let (train, test) = split_items(benign, train_fraction, seed)?;
    let n = flows.num_features();
    Ok((FlowTable { num_features: n, records: train }, FlowTable { num_features: n, records: test }))
}
