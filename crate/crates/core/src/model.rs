//! LSTM encoder-decoder with an optional variational latent head.
//!
//! Encoder: stacked LSTM over the L input rows; the latent mean is a linear
//! projection of the top layer's final hidden state. Variational mode adds a
//! log-variance projection (clamped to [-10, 10]) and samples
//! `z = mean + exp(log_var / 2) * eta`.
//!
//! Decoder: stacked LSTM unrolled for L steps with no step input. Each
//! layer's initial hidden state is `tanh(W z + b)` and its initial cell state
//! zero. Every top-layer hidden state passes through a final linear layer
//! to give one reconstructed row.
//!
//! All parameters live in one flat `Vec<f64>`; [`TensorInfo`] records the
//! name, shape, offset and freeze group of each tensor.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
use rand::Rng;

use crate::error::{Error, Result};
use crate::flow::NormalizationStats;
use crate::lstm::{self, LstmIdx, LstmTrace};
use crate::matrix::{gemv_acc, gemv_t_acc, outer_acc, Matrix};
use crate::rng;

pub const LOG_VAR_MIN: f64 = -10.0;
pub const LOG_VAR_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelMode {
    Deterministic,
    Variational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub num_layers: usize,
    pub mode: ModelMode,
    pub seed: u64,
}

impl ModelConfig {
    /// Defaults: hidden 64, latent 32, one layer, deterministic.
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim: 64,
            latent_dim: 32,
            num_layers: 1,
            mode: ModelMode::Deterministic,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("input_dim", self.input_dim),
            ("hidden_dim", self.hidden_dim),
            ("latent_dim", self.latent_dim),
            ("num_layers", self.num_layers),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// Parameter groups used by transfer-learning freezes. Together they cover
/// every parameter exactly once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamGroup {
    /// Input-to-hidden weights of the first encoder layer.
    InputLayer,
    /// Remaining encoder weights and the latent projections.
    Encoder,
    /// Decoder state projections and decoder LSTM layers.
    DecoderCore,
    /// Final linear projection back to feature space.
    OutputLayer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
    pub group: ParamGroup,
    fan_in: usize,
}

impl TensorInfo {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.rows * self.cols
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    pub tensors: Vec<TensorInfo>,
    pub encoder: Vec<LstmIdx>,
    pub latent_w: Range<usize>,
    pub latent_b: Range<usize>,
    pub log_var: Option<(Range<usize>, Range<usize>)>,
    pub decoder_init: Vec<(Range<usize>, Range<usize>)>,
    pub decoder: Vec<LstmIdx>,
    pub out_w: Range<usize>,
    pub out_b: Range<usize>,
    pub len: usize,
}

struct LayoutBuilder {
    tensors: Vec<TensorInfo>,
    offset: usize,
}

impl LayoutBuilder {
    fn push(&mut self, name: String, rows: usize, cols: usize, fan_in: usize, group: ParamGroup) -> Range<usize> {
        let info = TensorInfo { name, rows, cols, offset: self.offset, group, fan_in };
        let range = info.range();
        self.offset = range.end;
        self.tensors.push(info);
        range
    }

    fn lstm(&mut self, prefix: &str, layer: usize, input: usize, hidden: usize, input_group: ParamGroup, group: ParamGroup) -> LstmIdx {
        let w_ih = self.push(format!("{prefix}.{layer}.w_ih"), 4 * hidden, input, hidden, input_group);
        let w_hh = self.push(format!("{prefix}.{layer}.w_hh"), 4 * hidden, hidden, hidden, group);
        let bias = self.push(format!("{prefix}.{layer}.bias"), 4 * hidden, 1, hidden, group);
        LstmIdx { input, hidden, w_ih, w_hh, bias }
    }
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let (n, h, z) = (cfg.input_dim, cfg.hidden_dim, cfg.latent_dim);
        let mut b = LayoutBuilder { tensors: Vec::new(), offset: 0 };
        let encoder = (0..cfg.num_layers)
            .map(|k| {
                let (input, input_group) = if k == 0 { (n, ParamGroup::InputLayer) } else { (h, ParamGroup::Encoder) };
                b.lstm("encoder", k, input, h, input_group, ParamGroup::Encoder)
            })
            .collect();
        let latent_w = b.push("latent.mean.w".into(), z, h, h, ParamGroup::Encoder);
        let latent_b = b.push("latent.mean.b".into(), z, 1, h, ParamGroup::Encoder);
        let log_var = (cfg.mode == ModelMode::Variational).then(|| {
            (
                b.push("latent.log_var.w".into(), z, h, h, ParamGroup::Encoder),
                b.push("latent.log_var.b".into(), z, 1, h, ParamGroup::Encoder),
            )
        });
        let decoder_init = (0..cfg.num_layers)
            .map(|k| {
                (
                    b.push(format!("decoder.{k}.init.w"), h, z, z, ParamGroup::DecoderCore),
                    b.push(format!("decoder.{k}.init.b"), h, 1, z, ParamGroup::DecoderCore),
                )
            })
            .collect();
        let decoder = (0..cfg.num_layers)
            .map(|k| {
                let input = if k == 0 { 0 } else { h };
                b.lstm("decoder", k, input, h, ParamGroup::DecoderCore, ParamGroup::DecoderCore)
            })
            .collect();
        let out_w = b.push("output.w".into(), n, h, h, ParamGroup::OutputLayer);
        let out_b = b.push("output.b".into(), n, 1, h, ParamGroup::OutputLayer);
        Layout {
            len: b.offset,
            tensors: b.tensors,
            encoder,
            latent_w,
            latent_b,
            log_var,
            decoder_init,
            decoder,
            out_w,
            out_b,
        }
    }
}

/// Latent representation of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    /// The code fed to the decoder (equal to `mean` in deterministic mode).
    pub z: Vec<f64>,
    pub mean: Vec<f64>,
    /// Clamped log-variance, variational mode only.
    pub log_var: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    config: ModelConfig,
    layout: Layout,
    params: Vec<f64>,
    pub normalization: Option<NormalizationStats>,
}

pub(crate) struct EncoderTrace {
    layers: Vec<LstmTrace>,
    pub mean: Vec<f64>,
    log_var_raw: Option<Vec<f64>>,
    pub log_var: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub z: Vec<f64>,
}

pub(crate) struct DecoderTrace {
    z: Vec<f64>,
    layers: Vec<LstmTrace>,
    pub output: Matrix,
}

impl AutoencoderModel {
    /// Parameters drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)) using the
    /// `init` stream of `cfg.seed`.
    pub fn init(cfg: ModelConfig) -> Result<Self> {
        let mut model = Self::zeros(cfg)?;
        let mut rng = rng::stream(cfg.seed, rng::INIT);
        for t in &model.layout.tensors {
            let bound = 1.0 / libm::sqrt(t.fan_in as f64);
            for p in &mut model.params[t.range()] {
                *p = rng.gen_range(-bound..=bound);
            }
        }
        Ok(model)
    }

    pub fn zeros(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(&cfg);
        let params = vec![0.0; layout.len];
        Ok(Self { config: cfg, layout, params, normalization: None })
    }

    /// Rebuilds a model from a flat parameter vector in layout order.
    pub fn from_parts(cfg: ModelConfig, params: Vec<f64>, normalization: Option<NormalizationStats>) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(&cfg);
        if params.len() != layout.len {
            return Err(Error::DimensionMismatch { expected: layout.len, actual: params.len() });
        }
        if let Some(stats) = &normalization {
            if stats.len() != cfg.input_dim {
                return Err(Error::DimensionMismatch { expected: cfg.input_dim, actual: stats.len() });
            }
        }
        Ok(Self { config: cfg, layout, params, normalization })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn tensors(&self) -> &[TensorInfo] {
        &self.layout.tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.layout.tensors.iter().find(|t| t.name == name).map(|t| &self.params[t.range()])
    }

    /// Flat mask marking parameters that belong to any of `groups`.
    pub fn group_mask(&self, groups: impl Fn(ParamGroup) -> bool) -> Vec<bool> {
        let mut mask = vec![false; self.params.len()];
        for t in &self.layout.tensors {
            if groups(t.group) {
                mask[t.range()].iter_mut().for_each(|m| *m = true);
            }
        }
        mask
    }

    /// Copies of the parameters in `group`, concatenated in layout order.
    pub fn group_params(&self, group: ParamGroup) -> Vec<f64> {
        self.layout
            .tensors
            .iter()
            .filter(|t| t.group == group)
            .flat_map(|t| self.params[t.range()].iter().copied())
            .collect()
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.config.input_dim {
            return Err(Error::DimensionMismatch { expected: self.config.input_dim, actual: x.cols() });
        }
        if x.rows() == 0 {
            return Err(Error::InvalidConfig("sequence has no rows".into()));
        }
        Ok(())
    }

    pub(crate) fn encode_trace(&self, x: &Matrix, eta: Option<&[f64]>) -> EncoderTrace {
        let hd = self.config.hidden_dim;
        let steps = x.rows();
        let zero = vec![0.0; hd];
        let mut layers: Vec<LstmTrace> = Vec::with_capacity(self.layout.encoder.len());
        for (k, idx) in self.layout.encoder.iter().enumerate() {
            let inputs = match layers.last() {
                None => x.as_slice().to_vec(),
                Some(below) => below.outputs(hd).to_vec(),
            };
            debug_assert!(k == 0 || idx.input == hd);
            layers.push(lstm::forward(&self.params, idx, inputs, steps, &zero, &zero));
        }
        let top = layers.last().expect("at least one layer").last_hidden(hd);

        let mut mean = self.params[self.layout.latent_b.clone()].to_vec();
        gemv_acc(&self.params[self.layout.latent_w.clone()], top, &mut mean);

        let (log_var_raw, log_var) = match &self.layout.log_var {
            Some((w, b)) => {
                let mut raw = self.params[b.clone()].to_vec();
                gemv_acc(&self.params[w.clone()], top, &mut raw);
                let clamped = raw.iter().map(|v| v.clamp(LOG_VAR_MIN, LOG_VAR_MAX)).collect();
                (Some(raw), Some(clamped))
            }
            None => (None, None),
        };
        let z = match (&log_var, eta) {
            (Some(lv), Some(eta)) => mean
                .iter()
                .zip(lv)
                .zip(eta)
                .map(|((m, l), e)| m + libm::exp(0.5 * l) * e)
                .collect(),
            _ => mean.clone(),
        };
        EncoderTrace {
            layers,
            mean,
            log_var_raw,
            log_var,
            eta: eta.filter(|_| self.layout.log_var.is_some()).map(<[f64]>::to_vec),
            z,
        }
    }

    /// Backpropagates `d_mean` and `d_log_var` (w.r.t. the clamped
    /// log-variance) through the encoder.
    pub(crate) fn encoder_backward(
        &self,
        trace: &EncoderTrace,
        d_mean: &[f64],
        d_log_var: Option<&[f64]>,
        grad: &mut [f64],
    ) {
        let hd = self.config.hidden_dim;
        let top = trace.layers.last().expect("at least one layer");
        let h_last = top.last_hidden(hd);
        let mut dh_last = vec![0.0; hd];

        outer_acc(d_mean, h_last, &mut grad[self.layout.latent_w.clone()]);
        add_into(&mut grad[self.layout.latent_b.clone()], d_mean);
        gemv_t_acc(&self.params[self.layout.latent_w.clone()], d_mean, &mut dh_last);

        if let (Some((w, b)), Some(d_lv), Some(raw)) = (&self.layout.log_var, d_log_var, &trace.log_var_raw) {
            let d_raw: Vec<f64> = d_lv
                .iter()
                .zip(raw)
                .map(|(d, r)| if (LOG_VAR_MIN..=LOG_VAR_MAX).contains(r) { *d } else { 0.0 })
                .collect();
            outer_acc(&d_raw, h_last, &mut grad[w.clone()]);
            add_into(&mut grad[b.clone()], &d_raw);
            gemv_t_acc(&self.params[w.clone()], &d_raw, &mut dh_last);
        }

        let steps = top.steps;
        let mut d_out = vec![0.0; steps * hd];
        d_out[(steps - 1) * hd..].copy_from_slice(&dh_last);
        for (idx, trace) in self.layout.encoder.iter().zip(&trace.layers).rev() {
            d_out = lstm::backward(&self.params, idx, trace, &d_out, grad).d_inputs;
        }
    }

    pub(crate) fn decode_trace(&self, z: &[f64], length: usize) -> DecoderTrace {
        let hd = self.config.hidden_dim;
        let zero = vec![0.0; hd];
        let mut layers: Vec<LstmTrace> = Vec::with_capacity(self.layout.decoder.len());
        for (idx, (w, b)) in self.layout.decoder.iter().zip(&self.layout.decoder_init) {
            let mut h0 = self.params[b.clone()].to_vec();
            gemv_acc(&self.params[w.clone()], z, &mut h0);
            h0.iter_mut().for_each(|v| *v = libm::tanh(*v));
            let inputs = match layers.last() {
                None => Vec::new(),
                Some(below) => below.outputs(hd).to_vec(),
            };
            layers.push(lstm::forward(&self.params, idx, inputs, length, &h0, &zero));
        }
        let n = self.config.input_dim;
        let top = layers.last().expect("at least one layer").outputs(hd);
        let out_w = &self.params[self.layout.out_w.clone()];
        let out_b = &self.params[self.layout.out_b.clone()];
        let mut output = Matrix::zeros(length, n);
        for t in 0..length {
            let row = output.row_mut(t);
            row.copy_from_slice(out_b);
            gemv_acc(out_w, &top[t * hd..(t + 1) * hd], row);
        }
        DecoderTrace { z: z.to_vec(), layers, output }
    }

    /// Backpropagates `d_output` (shape (L, n)) through the decoder and
    /// returns the gradient with respect to the latent code.
    pub(crate) fn decoder_backward(&self, trace: &DecoderTrace, d_output: &Matrix, grad: &mut [f64]) -> Vec<f64> {
        let hd = self.config.hidden_dim;
        let length = d_output.rows();
        let top = trace.layers.last().expect("at least one layer");
        let out_w = &self.params[self.layout.out_w.clone()];
        let mut d_h = vec![0.0; length * hd];
        for t in 0..length {
            let d_row = d_output.row(t);
            outer_acc(d_row, &top.outputs(hd)[t * hd..(t + 1) * hd], &mut grad[self.layout.out_w.clone()]);
            add_into(&mut grad[self.layout.out_b.clone()], d_row);
            gemv_t_acc(out_w, d_row, &mut d_h[t * hd..(t + 1) * hd]);
        }

        let mut d_z = vec![0.0; self.config.latent_dim];
        for ((idx, (w, b)), layer) in self
            .layout
            .decoder
            .iter()
            .zip(&self.layout.decoder_init)
            .zip(&trace.layers)
            .rev()
        {
            let back = lstm::backward(&self.params, idx, layer, &d_h, grad);
            let h0 = layer.initial_hidden(hd);
            let d_pre: Vec<f64> = back.d_h0.iter().zip(h0).map(|(d, h)| d * (1.0 - h * h)).collect();
            outer_acc(&d_pre, &trace.z, &mut grad[w.clone()]);
            add_into(&mut grad[b.clone()], &d_pre);
            gemv_t_acc(&self.params[w.clone()], &d_pre, &mut d_z);
            d_h = back.d_inputs;
        }
        d_z
    }

    /// Latent code with no sampling noise (`z` equals the mean).
    pub fn encode(&self, x: &Matrix) -> Result<LatentCode> {
        self.check_input(x)?;
        let t = self.encode_trace(x, None);
        Ok(LatentCode { z: t.z, mean: t.mean, log_var: t.log_var })
    }

    /// Latent code with a reparameterized sample drawn from `rng` in
    /// variational mode; identical to [`encode`](Self::encode) otherwise.
    pub fn encode_sampled<R: Rng + ?Sized>(&self, x: &Matrix, rng: &mut R) -> Result<LatentCode> {
        self.check_input(x)?;
        let eta: Option<Vec<f64>> = (self.config.mode == ModelMode::Variational)
            .then(|| (0..self.config.latent_dim).map(|_| rng::standard_normal(rng)).collect());
        let t = self.encode_trace(x, eta.as_deref());
        Ok(LatentCode { z: t.z, mean: t.mean, log_var: t.log_var })
    }

    pub fn decode(&self, z: &[f64], length: usize) -> Result<Matrix> {
        if z.len() != self.config.latent_dim {
            return Err(Error::DimensionMismatch { expected: self.config.latent_dim, actual: z.len() });
        }
        if length == 0 {
            return Err(Error::InvalidConfig("decode length must be at least 1".into()));
        }
        Ok(self.decode_trace(z, length).output)
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        let code = self.encode(x)?;
        self.decode(&code.z, x.rows())
    }

    /// Unweighted reconstruction error of `x`, the anomaly score.
    pub fn score(&self, x: &Matrix) -> Result<f64> {
        reconstruction_error(x, &self.reconstruct(x)?)
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Mean squared difference over all elements.
pub fn reconstruction_error(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    if x.rows() != x_hat.rows() || x.cols() != x_hat.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.rows() * x.cols(),
            actual: x_hat.rows() * x_hat.cols(),
        });
    }
    let len = x.as_slice().len();
    if len == 0 {
        return Ok(0.0);
    }
    let sse: f64 = x.as_slice().iter().zip(x_hat.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sse / len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: ModelMode) -> ModelConfig {
        ModelConfig { input_dim: 3, hidden_dim: 5, latent_dim: 2, num_layers: 2, mode, seed: 11 }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = AutoencoderModel::init(small(ModelMode::Deterministic)).unwrap();
        let b = AutoencoderModel::init(small(ModelMode::Deterministic)).unwrap();
        assert_eq!(a.params(), b.params());
        let other = AutoencoderModel::init(ModelConfig { seed: 12, ..small(ModelMode::Deterministic) }).unwrap();
        assert_ne!(a.params(), other.params());
        for t in a.tensors() {
            let bound = 1.0 / libm::sqrt(t.fan_in as f64);
            assert!(a.params()[t.range()].iter().all(|p| p.abs() <= bound), "{}", t.name);
        }
    }

    #[test]
    fn zero_hidden_dim_is_invalid() {
        let cfg = ModelConfig { hidden_dim: 0, ..small(ModelMode::Deterministic) };
        assert!(matches!(AutoencoderModel::init(cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn shapes_for_wide_input() {
        let cfg = ModelConfig { input_dim: 77, hidden_dim: 64, latent_dim: 32, ..ModelConfig::new(77) };
        let m = AutoencoderModel::zeros(cfg).unwrap();
        let find = |name: &str| m.tensors().iter().find(|t| t.name == name).unwrap().clone();
        assert_eq!((find("latent.mean.w").rows, find("latent.mean.w").cols), (32, 64));
        assert_eq!((find("output.w").rows, find("output.w").cols), (77, 64));
        assert_eq!((find("encoder.0.w_ih").rows, find("encoder.0.w_ih").cols), (256, 77));
        assert_eq!(find("decoder.0.w_ih").cols, 0);
    }

    #[test]
    fn groups_partition_parameters() {
        let m = AutoencoderModel::init(small(ModelMode::Variational)).unwrap();
        let total: usize = [ParamGroup::InputLayer, ParamGroup::Encoder, ParamGroup::DecoderCore, ParamGroup::OutputLayer]
            .iter()
            .map(|&g| m.group_params(g).len())
            .sum();
        assert_eq!(total, m.num_params());
        let mut end = 0;
        for t in m.tensors() {
            assert_eq!(t.offset, end);
            end = t.range().end;
        }
        assert_eq!(end, m.num_params());
    }

    #[test]
    fn zero_model_gives_zero_latent_and_bias_rows() {
        let mut m = AutoencoderModel::zeros(small(ModelMode::Deterministic)).unwrap();
        let x = Matrix::zeros(4, 3);
        assert_eq!(m.encode(&x).unwrap().z, vec![0.0, 0.0]);
        let range = m.tensors().iter().find(|t| t.name == "output.b").unwrap().range();
        m.params_mut()[range].copy_from_slice(&[0.25, -1.0, 3.0]);
        let out = m.decode(&[0.0, 0.0], 3).unwrap();
        for t in 0..3 {
            assert_eq!(out.row(t), &[0.25, -1.0, 3.0]);
        }
    }

    #[test]
    fn decode_shapes() {
        let m = AutoencoderModel::init(small(ModelMode::Deterministic)).unwrap();
        assert_eq!(m.decode(&[0.1, 0.2], 1).unwrap().rows(), 1);
        let out = m.decode(&[0.1, 0.2], 7).unwrap();
        assert_eq!((out.rows(), out.cols()), (7, 3));
        assert!(matches!(m.decode(&[0.1], 3), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(m.encode(&Matrix::zeros(4, 2)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn timestep_order_matters() {
        let m = AutoencoderModel::init(small(ModelMode::Deterministic)).unwrap();
        let rows = vec![vec![0.1, 0.9, 0.3], vec![0.8, 0.2, 0.5], vec![0.4, 0.4, 0.0]];
        let reversed: Vec<Vec<f64>> = rows.iter().rev().cloned().collect();
        let a = m.encode(&Matrix::from_rows(&rows).unwrap()).unwrap();
        let b = m.encode(&Matrix::from_rows(&reversed).unwrap()).unwrap();
        assert_ne!(a.z, b.z);
    }

    #[test]
    fn variational_collapses_to_mean_at_low_variance() {
        let mut m = AutoencoderModel::init(small(ModelMode::Variational)).unwrap();
        let t = m.tensors().iter().find(|t| t.name == "latent.log_var.b").unwrap().range();
        m.params_mut()[t].iter_mut().for_each(|b| *b = -1e6);
        let x = Matrix::from_rows(&[vec![0.2, 0.3, 0.4], vec![0.5, 0.6, 0.7]]).unwrap();
        let code = m.encode_sampled(&x, &mut rng::stream(0, "eta")).unwrap();
        assert_eq!(code.log_var.as_ref().unwrap(), &vec![LOG_VAR_MIN; 2]);
        for (z, mu) in code.z.iter().zip(&code.mean) {
            assert!((z - mu).abs() < 0.05 * 4.0, "{z} vs {mu}");
        }
    }

    #[test]
    fn variational_with_zero_noise_matches_deterministic() {
        let det = AutoencoderModel::init(small(ModelMode::Deterministic)).unwrap();
        let var = AutoencoderModel::zeros(small(ModelMode::Variational)).unwrap();
        // Copy shared tensors by name.
        let mut var = var;
        for t in det.tensors() {
            let dst = var.tensors().iter().find(|u| u.name == t.name).unwrap().range();
            var.params_mut()[dst].copy_from_slice(&det.params()[t.range()]);
        }
        let x = Matrix::from_rows(&[vec![0.2, 0.3, 0.4], vec![0.5, 0.6, 0.7]]).unwrap();
        let zero_eta = vec![0.0; 2];
        let tv = var.encode_trace(&x, Some(&zero_eta));
        assert_eq!(tv.z, det.encode(&x).unwrap().z);
        assert_eq!(var.reconstruct(&x).unwrap(), det.reconstruct(&x).unwrap());
    }

    #[test]
    fn reconstruction_error_examples() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let y = Matrix::from_rows(&[vec![1.0, 3.0]]).unwrap();
        assert_eq!(reconstruction_error(&x, &y).unwrap(), 5.0);
        assert_eq!(reconstruction_error(&x, &x).unwrap(), 0.0);
        let zeros = Matrix::zeros(3, 4);
        let ones = Matrix::from_vec(3, 4, vec![1.0; 12]).unwrap();
        assert_eq!(reconstruction_error(&zeros, &ones).unwrap(), 1.0);
        assert!(reconstruction_error(&x, &zeros).is_err());
    }
}
