//! Versioned binary model artifact.
//!
//! All integers and floats are little-endian. Layout:
//!
//! ```text
//! magic            8 bytes  b"FLOWAEMD"
//! format_version   u32
//! body_len         u64
//! body             body_len bytes
//! checksum         u64      FNV-1a 64 over body
//! ```
//!
//! Body, in order:
//!
//! ```text
//! input_dim u32, hidden_dim u32, latent_dim u32, num_layers u32,
//! mode u8 (0 deterministic, 1 variational), init_seed u64
//! param_count u64, params f64 * param_count   (layout order, row-major)
//! has_norm u8 [, n u32, min f64 * n, max f64 * n]
//! has_threshold u8 [, threshold f64, percentile f64, calibration_count u64]
//! error_count u64, calibration errors f64 * error_count
//! lambda_rec f64, lambda_tml f64, lambda_kl f64, margin f64,
//! sequence_length u32, stride u32
//! column_count u32, then per column: byte_len u32, utf8 bytes
//! ```

use std::path::Path;

use flowae_core::{AutoencoderModel, ModelConfig, ModelMode, NormalizationStats, ThresholdModel};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"FLOWAEMD";
pub const FORMAT_VERSION: u32 = 1;

/// Training settings stored next to the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactMeta {
    pub lambda_rec: f64,
    pub lambda_tml: f64,
    pub lambda_kl: f64,
    pub margin: f64,
    pub sequence_length: usize,
    pub stride: usize,
    pub feature_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub model: AutoencoderModel,
    pub threshold: Option<ThresholdModel>,
    /// Benign training errors the threshold was drawn from; lets `calibrate`
    /// and `eval` move the percentile without rescoring.
    pub calibration_errors: Vec<f64>,
    pub meta: ArtifactMeta,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&u32::try_from(v).expect("value fits in u32").to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        vs.iter().for_each(|&v| self.f64(v));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::CorruptArtifact(format!("truncated while reading {what}")));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }
    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
    fn u32(&mut self, what: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::CorruptArtifact(format!("{what} count overflows")))?, what)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
    fn flag(&mut self, what: &str) -> Result<bool> {
        match self.u8(what)? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::CorruptArtifact(format!("bad {what} flag {b}"))),
        }
    }
}

impl ModelArtifact {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        let cfg = self.model.config();
        w.u32(cfg.input_dim);
        w.u32(cfg.hidden_dim);
        w.u32(cfg.latent_dim);
        w.u32(cfg.num_layers);
        w.u8(match cfg.mode {
            ModelMode::Deterministic => 0,
            ModelMode::Variational => 1,
        });
        w.u64(cfg.seed);
        w.u64(self.model.num_params() as u64);
        w.f64s(self.model.params());
        match &self.model.normalization {
            Some(stats) => {
                w.u8(1);
                w.u32(stats.len());
                w.f64s(&stats.min);
                w.f64s(&stats.max);
            }
            None => w.u8(0),
        }
        match &self.threshold {
            Some(t) => {
                w.u8(1);
                w.f64(t.threshold);
                w.f64(t.percentile);
                w.u64(t.calibration_count as u64);
            }
            None => w.u8(0),
        }
        w.u64(self.calibration_errors.len() as u64);
        w.f64s(&self.calibration_errors);
        let m = &self.meta;
        w.f64s(&[m.lambda_rec, m.lambda_tml, m.lambda_kl, m.margin]);
        w.u32(m.sequence_length);
        w.u32(m.stride);
        w.u32(m.feature_columns.len());
        for c in &m.feature_columns {
            w.u32(c.len());
            w.0.extend_from_slice(c.as_bytes());
        }

        let body = w.0;
        let mut out = Vec::with_capacity(body.len() + 28);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(body.len() as u64).to_le_bytes());
        out.extend_from_slice(&body);
        out.extend_from_slice(&fnv1a(&body).to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes };
        if r.take(8, "magic")? != MAGIC {
            return Err(Error::CorruptArtifact("bad magic".into()));
        }
        let version = r.u32("format version")? as u32;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch { found: version, expected: FORMAT_VERSION });
        }
        let body_len = usize::try_from(r.u64("body length")?)
            .map_err(|_| Error::CorruptArtifact("body length overflows".into()))?;
        let body = r.take(body_len, "body")?;
        let checksum = r.u64("checksum")?;
        if !r.buf.is_empty() {
            return Err(Error::CorruptArtifact("trailing bytes".into()));
        }
        if checksum != fnv1a(body) {
            return Err(Error::CorruptArtifact("checksum mismatch".into()));
        }

        let mut r = Reader { buf: body };
        let input_dim = r.u32("input_dim")?;
        let hidden_dim = r.u32("hidden_dim")?;
        let latent_dim = r.u32("latent_dim")?;
        let num_layers = r.u32("num_layers")?;
        let mode = match r.u8("mode")? {
            0 => ModelMode::Deterministic,
            1 => ModelMode::Variational,
            b => return Err(Error::CorruptArtifact(format!("unknown model mode {b}"))),
        };
        let seed = r.u64("seed")?;
        let config = ModelConfig { input_dim, hidden_dim, latent_dim, num_layers, mode, seed };
        let count = r.u64("parameter count")? as usize;
        let params = r.f64s(count, "parameters")?;
        let normalization = if r.flag("normalization")? {
            let n = r.u32("normalization width")?;
            Some(NormalizationStats { min: r.f64s(n, "normalization min")?, max: r.f64s(n, "normalization max")? })
        } else {
            None
        };
        let threshold = if r.flag("threshold")? {
            Some(ThresholdModel {
                threshold: r.f64("threshold")?,
                percentile: r.f64("percentile")?,
                calibration_count: r.u64("calibration count")? as usize,
            })
        } else {
            None
        };
        let n_err = r.u64("error count")? as usize;
        let calibration_errors = r.f64s(n_err, "calibration errors")?;
        let lambda_rec = r.f64("lambda_rec")?;
        let lambda_tml = r.f64("lambda_tml")?;
        let lambda_kl = r.f64("lambda_kl")?;
        let margin = r.f64("margin")?;
        let sequence_length = r.u32("sequence length")?;
        let stride = r.u32("stride")?;
        let n_cols = r.u32("column count")?;
        let mut feature_columns = Vec::with_capacity(n_cols.min(body.len()));
        for _ in 0..n_cols {
            let len = r.u32("column name length")?;
            let raw = r.take(len, "column name")?;
            feature_columns.push(
                String::from_utf8(raw.to_vec()).map_err(|_| Error::CorruptArtifact("column name is not utf-8".into()))?,
            );
        }
        if !r.buf.is_empty() {
            return Err(Error::CorruptArtifact("unread bytes in body".into()));
        }
        let model = AutoencoderModel::from_parts(config, params, normalization)
            .map_err(|e| Error::CorruptArtifact(format!("inconsistent model: {e}")))?;
        Ok(ModelArtifact {
            model,
            threshold,
            calibration_errors,
            meta: ArtifactMeta { lambda_rec, lambda_tml, lambda_kl, margin, sequence_length, stride, feature_columns },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
