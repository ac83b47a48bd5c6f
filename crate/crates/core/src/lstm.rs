//! Single LSTM layer: forward unroll with a saved trace, and backpropagation
//! through time over that trace.
//!
//! Gate rows are stacked as input, forget, cell candidate, output. Weights
//! live in a flat parameter vector; `LstmIdx` says where.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::matrix::{gemv_acc, gemv_t_acc, outer_acc};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LstmIdx {
    pub input: usize,
    pub hidden: usize,
    /// (4H, input)
    pub w_ih: Range<usize>,
    /// (4H, H)
    pub w_hh: Range<usize>,
    /// (4H)
    pub bias: Range<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct LstmTrace {
    pub steps: usize,
    /// (T, input)
    pub inputs: Vec<f64>,
    /// (T + 1, H); row 0 is the initial state.
    pub h: Vec<f64>,
    /// (T + 1, H)
    pub c: Vec<f64>,
    /// (T, 4H) post-activation gate values.
    gates: Vec<f64>,
    /// (T, H)
    tanh_c: Vec<f64>,
}

impl LstmTrace {
    /// Hidden states h_1..h_T as a (T, H) block.
    pub fn outputs(&self, hidden: usize) -> &[f64] {
        &self.h[hidden..]
    }

    pub fn last_hidden(&self, hidden: usize) -> &[f64] {
        &self.h[self.steps * hidden..]
    }

    pub fn initial_hidden(&self, hidden: usize) -> &[f64] {
        &self.h[..hidden]
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

pub(crate) fn forward(
    params: &[f64],
    idx: &LstmIdx,
    inputs: Vec<f64>,
    steps: usize,
    h0: &[f64],
    c0: &[f64],
) -> LstmTrace {
    let hd = idx.hidden;
    debug_assert_eq!(inputs.len(), steps * idx.input);
    let w_ih = &params[idx.w_ih.clone()];
    let w_hh = &params[idx.w_hh.clone()];
    let bias = &params[idx.bias.clone()];

    let mut h = Vec::with_capacity((steps + 1) * hd);
    let mut c = Vec::with_capacity((steps + 1) * hd);
    h.extend_from_slice(h0);
    c.extend_from_slice(c0);
    let mut gates = vec![0.0; steps * 4 * hd];
    let mut tanh_c = vec![0.0; steps * hd];

    for t in 0..steps {
        let a = &mut gates[t * 4 * hd..(t + 1) * 4 * hd];
        a.copy_from_slice(bias);
        gemv_acc(w_ih, &inputs[t * idx.input..(t + 1) * idx.input], a);
        gemv_acc(w_hh, &h[t * hd..(t + 1) * hd], a);
        for k in 0..hd {
            a[k] = sigmoid(a[k]);
            a[hd + k] = sigmoid(a[hd + k]);
            a[2 * hd + k] = libm::tanh(a[2 * hd + k]);
            a[3 * hd + k] = sigmoid(a[3 * hd + k]);
        }
        for k in 0..hd {
            let ct = a[hd + k] * c[t * hd + k] + a[k] * a[2 * hd + k];
            let tc = libm::tanh(ct);
            c.push(ct);
            tanh_c[t * hd + k] = tc;
            h.push(a[3 * hd + k] * tc);
        }
    }
    LstmTrace { steps, inputs, h, c, gates, tanh_c }
}

pub(crate) struct LstmBackward {
    /// (T, input)
    pub d_inputs: Vec<f64>,
    pub d_h0: Vec<f64>,
}

/// Accumulates parameter gradients into `grad` given `d_outputs`, the loss
/// gradient with respect to each h_t (a (T, H) block).
pub(crate) fn backward(
    params: &[f64],
    idx: &LstmIdx,
    trace: &LstmTrace,
    d_outputs: &[f64],
    grad: &mut [f64],
) -> LstmBackward {
    let hd = idx.hidden;
    let w_ih = &params[idx.w_ih.clone()];
    let w_hh = &params[idx.w_hh.clone()];

    let mut d_inputs = vec![0.0; trace.steps * idx.input];
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut da = vec![0.0; 4 * hd];
    let mut gw_ih = vec![0.0; w_ih.len()];
    let mut gw_hh = vec![0.0; w_hh.len()];
    let mut gb = vec![0.0; 4 * hd];

    for t in (0..trace.steps).rev() {
        let g = &trace.gates[t * 4 * hd..(t + 1) * 4 * hd];
        let tc = &trace.tanh_c[t * hd..(t + 1) * hd];
        let c_prev = &trace.c[t * hd..(t + 1) * hd];
        for k in 0..hd {
            let dh = d_outputs[t * hd + k] + dh_next[k];
            let (i, f, cg, o) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
            let dc = dc_next[k] + dh * o * (1.0 - tc[k] * tc[k]);
            da[k] = dc * cg * i * (1.0 - i);
            da[hd + k] = dc * c_prev[k] * f * (1.0 - f);
            da[2 * hd + k] = dc * i * (1.0 - cg * cg);
            da[3 * hd + k] = dh * tc[k] * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        let x = &trace.inputs[t * idx.input..(t + 1) * idx.input];
        let h_prev = &trace.h[t * hd..(t + 1) * hd];
        outer_acc(&da, x, &mut gw_ih);
        outer_acc(&da, h_prev, &mut gw_hh);
        for (b, d) in gb.iter_mut().zip(&da) {
            *b += d;
        }
        gemv_t_acc(w_ih, &da, &mut d_inputs[t * idx.input..(t + 1) * idx.input]);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        gemv_t_acc(w_hh, &da, &mut dh_next);
    }

    for (dst, src) in [(idx.w_ih.clone(), &gw_ih), (idx.w_hh.clone(), &gw_hh), (idx.bias.clone(), &gb)] {
        for (g, s) in grad[dst].iter_mut().zip(src.iter()) {
            *g += s;
        }
    }
    LstmBackward { d_inputs, d_h0: dh_next }
}
