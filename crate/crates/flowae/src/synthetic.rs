//! Seeded synthetic flow corpora.
//!
//! Benign feature `j` at flow `t` is
//! `offset + amplitude_j * sin(2*pi*t / period_j + phase_j) + N(0, noise_sd)`.
//! Attacks are contiguous bursts that add `shift_sigmas` benign standard
//! deviations to every feature (sign alternates by category).

use std::f64::consts::PI;

use flowae_core::{rng, FlowRecord, FlowSchema, FlowTable, Label};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub flows: usize,
    pub features: usize,
    pub noise_sd: f64,
    pub attack_fraction: f64,
    pub shift_sigmas: f64,
    pub categories: Vec<String>,
    /// Inclusive bounds on burst length, in flows.
    pub burst_len: (usize, usize),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            flows: 5000,
            features: 6,
            noise_sd: 0.05,
            attack_fraction: 0.0,
            shift_sigmas: 5.0,
            categories: vec!["dos".into(), "recon".into(), "bruteforce".into()],
            burst_len: (75, 200),
            seed: 0,
        }
    }
}

const OFFSET: f64 = 0.5;

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.features == 0 {
            return bad("synthetic corpus needs at least one feature");
        }
        if !(0.0..=1.0).contains(&self.attack_fraction) {
            return bad("attack fraction must lie in [0, 1]");
        }
        if !(self.noise_sd >= 0.0) || !self.shift_sigmas.is_finite() {
            return bad("noise and shift must be finite and noise non-negative");
        }
        if self.attack_fraction > 0.0 && self.categories.is_empty() {
            return bad("attacks need at least one category tag");
        }
        if self.burst_len.0 == 0 || self.burst_len.0 > self.burst_len.1 {
            return bad("burst length bounds must satisfy 0 < min <= max");
        }
        Ok(())
    }

    /// Column schema: `f0..f{n-1}`, `label`, `category`.
    pub fn schema(&self) -> FlowSchema {
        FlowSchema {
            feature_columns: (0..self.features).map(|j| format!("f{j}")).collect(),
            label_column: "label".into(),
            attack_category_column: Some("category".into()),
            benign_label_value: "BENIGN".into(),
        }
    }

    fn amplitude(j: usize) -> f64 {
        0.15 + 0.25 * ((j * 7) % 11) as f64 / 10.0
    }

    fn period(j: usize) -> f64 {
        // Distinct, mutually non-harmonic periods.
        9.0 + 4.3 * j as f64 + 1.7 * (j * j) as f64 / 3.0
    }

    fn phase(j: usize) -> f64 {
        (j as f64 * 2.399_963) % (2.0 * PI)
    }

    /// Standard deviation of benign feature `j` over a long run.
    pub fn benign_sd(&self, j: usize) -> f64 {
        let a = Self::amplitude(j);
        (a * a / 2.0 + self.noise_sd * self.noise_sd).sqrt()
    }

    pub fn generate(&self) -> Result<FlowTable> {
        self.validate()?;
        let mut rng = rng::stream(self.seed, rng::SYNTHETIC);
        let attack_total = ((self.attack_fraction * self.flows as f64).round() as usize).min(self.flows);

        let mut bursts = Vec::new();
        let mut remaining = attack_total;
        while remaining > 0 {
            let len = rng.gen_range(self.burst_len.0..=self.burst_len.1).min(remaining);
            bursts.push(len);
            remaining -= len;
        }
        // Spread benign flows over the gaps around the bursts.
        let benign_total = self.flows - attack_total;
        let mut cuts: Vec<usize> = (0..bursts.len()).map(|_| rng.gen_range(0..=benign_total)).collect();
        cuts.sort_unstable();
        let mut gaps = Vec::with_capacity(bursts.len() + 1);
        let mut prev = 0;
        for &c in &cuts {
            gaps.push(c - prev);
            prev = c;
        }
        gaps.push(benign_total - prev);

        let mut records = Vec::with_capacity(self.flows);
        let mut t = 0usize;
        let mut push = |rng: &mut rng::StreamRng, t: &mut usize, attack: Option<usize>| {
            let features = (0..self.features)
                .map(|j| {
                    let base = OFFSET
                        + Self::amplitude(j) * (2.0 * PI * *t as f64 / Self::period(j) + Self::phase(j)).sin()
                        + self.noise_sd * rng::standard_normal(rng);
                    match attack {
                        Some(c) => {
                            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                            base + sign * self.shift_sigmas * self.benign_sd(j)
                        }
                        None => base,
                    }
                })
                .collect();
            records.push(FlowRecord {
                features,
                label: if attack.is_some() { Label::Attack } else { Label::Benign },
                category: attack.map(|c| self.categories[c].clone()),
                original_index: *t,
            });
            *t += 1;
        };
        for (i, &gap) in gaps.iter().enumerate() {
            for _ in 0..gap {
                push(&mut rng, &mut t, None);
            }
            if let Some(&len) = bursts.get(i) {
                let c = rng.gen_range(0..self.categories.len());
                for _ in 0..len {
                    push(&mut rng, &mut t, Some(c));
                }
            }
        }
        Ok(FlowTable::new(self.features, records)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_fraction_is_all_benign() {
        let t = SyntheticSpec { flows: 500, ..Default::default() }.generate().unwrap();
        assert_eq!(t.len(), 500);
        assert_eq!(t.benign_count(), 500);
    }

    #[test]
    fn attack_fraction_and_contiguity() {
        let spec = SyntheticSpec { flows: 4000, attack_fraction: 0.3, seed: 5, ..Default::default() };
        let t = spec.generate().unwrap();
        let attacks = t.len() - t.benign_count();
        assert_eq!(attacks, 1200);
        let runs = t.records().windows(2).filter(|w| w[0].label != w[1].label).count();
        // Each burst contributes at most two label changes.
        let max_bursts = 1200usize.div_ceil(spec.burst_len.0);
        assert!(runs <= 2 * max_bursts, "{runs} label changes");
        assert!(t.records().iter().all(|r| r.label.is_attack() == r.category.is_some()));
    }

    #[test]
    fn same_seed_same_corpus() {
        let spec = SyntheticSpec { flows: 300, attack_fraction: 0.2, seed: 3, ..Default::default() };
        assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
        let other = SyntheticSpec { seed: 4, ..spec.clone() };
        assert_ne!(spec.generate().unwrap(), other.generate().unwrap());
    }

    #[test]
    fn attack_shift_is_in_benign_sd_units() {
        let spec = SyntheticSpec { flows: 20_000, attack_fraction: 0.5, categories: vec!["a".into()], seed: 1, ..Default::default() };
        let t = spec.generate().unwrap();
        let mean = |label: Label| {
            let rows: Vec<_> = t.records().iter().filter(|r| r.label == label).collect();
            rows.iter().map(|r| r.features[0]).sum::<f64>() / rows.len() as f64
        };
        let shift = (mean(Label::Attack) - mean(Label::Benign)) / spec.benign_sd(0);
        assert!((shift - 5.0).abs() < 0.3, "shift {shift}");
    }

    #[test]
    fn rejects_bad_fraction() {
        assert!(SyntheticSpec { attack_fraction: 1.5, ..Default::default() }.generate().is_err());
    }
}
