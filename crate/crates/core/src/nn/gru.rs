//! Gated recurrent cell used by every sequence encoder and the decoder.
//!
//! The update follows the usual gating equations without bias terms:
//! `z = sigmoid(Wz [x;h])`, `r = sigmoid(Wr [x;h])`,
//! `cand = tanh(Wc [x; r*h])`, `h' = (1-z)*h + z*cand`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::store::ParameterStore;
use crate::nn::tape::{sigmoid, Tape, ValueId};
use crate::nn::tensor::Tensor;

/// Registers the three gate matrices (`<prefix>.update`, `<prefix>.reset`,
/// `<prefix>.candidate`), each shaped `[hidden, input + hidden]`.
pub fn register_gru(
    store: &mut ParameterStore,
    prefix: &str,
    input: usize,
    hidden: usize,
    rng: &mut impl Rng,
) {
    for gate in ["update", "reset", "candidate"] {
        store.insert(
            format!("{prefix}.{gate}"),
            Tensor::init_matrix(rng, hidden, input + hidden),
        );
    }
}

/// Borrowed view of one cell's gate matrices for the plain (tape-free)
/// evaluation path.
#[derive(Clone, Copy)]
pub struct GruWeights<'a> {
    pub update: &'a Tensor,
    pub reset: &'a Tensor,
    pub candidate: &'a Tensor,
}

impl<'a> GruWeights<'a> {
    pub fn from_store(store: &'a ParameterStore, prefix: &str) -> Self {
        GruWeights {
            update: store.tensor(&format!("{prefix}.update")),
            reset: store.tensor(&format!("{prefix}.reset")),
            candidate: store.tensor(&format!("{prefix}.candidate")),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.update.rows()
    }

    pub fn input_size(&self) -> usize {
        self.update.cols() - self.update.rows()
    }

    /// One step without shape validation; `out` is overwritten.
    pub fn step_into(&self, x: &[f64], h: &[f64], out: &mut [f64]) {
        let mut scratch = GruScratch::for_cell(self);
        self.step_with_scratch(x, h, out, &mut scratch);
    }

    /// Allocation-free step for hot loops; `out` is overwritten.
    pub fn step_with_scratch(
        &self,
        x: &[f64],
        h: &[f64],
        out: &mut [f64],
        scratch: &mut GruScratch,
    ) {
        let hidden = self.hidden_size();
        debug_assert_eq!(x.len(), self.input_size());
        debug_assert_eq!(h.len(), hidden);
        debug_assert_eq!(out.len(), hidden);
        // The reset gate acts elementwise on h before the candidate matmul,
        // so the full reset vector is needed first.
        for i in 0..hidden {
            scratch.update[i] = sigmoid(gate_row(self.update.row(i), x, h));
            let reset = sigmoid(gate_row(self.reset.row(i), x, h));
            scratch.gated[i] = reset * h[i];
        }
        for i in 0..hidden {
            let cand = gate_row(self.candidate.row(i), x, &scratch.gated).tanh();
            out[i] = (1.0 - scratch.update[i]) * h[i] + scratch.update[i] * cand;
        }
    }

    /// Runs the cell over a sequence starting from a zero hidden state and
    /// returns the final hidden state.
    pub fn encode_sequence<'b>(&self, inputs: impl Iterator<Item = &'b [f64]>) -> Vec<f64> {
        let hidden = self.hidden_size();
        let mut scratch = GruScratch::for_cell(self);
        let mut h = vec![0.0; hidden];
        let mut next = vec![0.0; hidden];
        for x in inputs {
            self.step_with_scratch(x, &h, &mut next, &mut scratch);
            std::mem::swap(&mut h, &mut next);
        }
        h
    }
}

/// Reusable per-step buffers for [`GruWeights::step_with_scratch`].
pub struct GruScratch {
    update: Vec<f64>,
    gated: Vec<f64>,
}

impl GruScratch {
    pub fn for_cell(weights: &GruWeights) -> Self {
        let hidden = weights.hidden_size();
        GruScratch {
            update: vec![0.0; hidden],
            gated: vec![0.0; hidden],
        }
    }
}

fn gate_row(row: &[f64], x: &[f64], h: &[f64]) -> f64 {
    let (rx, rh) = row.split_at(x.len());
    let mut acc = 0.0;
    for (w, v) in rx.iter().zip(x) {
        acc += w * v;
    }
    for (w, v) in rh.iter().zip(h) {
        acc += w * v;
    }
    acc
}

/// One validated step; the public entry point for single-step use.
pub fn gru_step(weights: &GruWeights, x: &[f64], hidden: &[f64]) -> Result<Vec<f64>> {
    if x.len() != weights.input_size() {
        return Err(Error::invalid_argument(format!(
            "gru input size {} does not match configured {}",
            x.len(),
            weights.input_size()
        )));
    }
    if hidden.len() != weights.hidden_size() {
        return Err(Error::invalid_argument(format!(
            "gru hidden size {} does not match configured {}",
            hidden.len(),
            weights.hidden_size()
        )));
    }
    let mut out = vec![0.0; weights.hidden_size()];
    weights.step_into(x, hidden, &mut out);
    Ok(out)
}

/// Tape-recorded gate matrices for the training path.
#[derive(Clone, Copy)]
pub struct GruOnTape {
    pub update: ValueId,
    pub reset: ValueId,
    pub candidate: ValueId,
}

impl GruOnTape {
    pub fn register(tape: &mut Tape, store: &ParameterStore, prefix: &str) -> Self {
        GruOnTape {
            update: tape.param(&format!("{prefix}.update"), store),
            reset: tape.param(&format!("{prefix}.reset"), store),
            candidate: tape.param(&format!("{prefix}.candidate"), store),
        }
    }
}

/// One differentiable step on the tape.
pub fn gru_step_tape(tape: &mut Tape, w: &GruOnTape, x: ValueId, h: ValueId) -> ValueId {
    let xh = tape.concat(x, h);
    let zu = tape.matmul(w.update, xh);
    let update = tape.sigmoid(zu);
    let zr = tape.matmul(w.reset, xh);
    let reset = tape.sigmoid(zr);
    let gated = tape.mul(reset, h);
    let xg = tape.concat(x, gated);
    let zc = tape.matmul(w.candidate, xg);
    let cand = tape.tanh(zc);
    let keep = tape.one_minus(update);
    let kept = tape.mul(keep, h);
    let new = tape.mul(update, cand);
    tape.add(kept, new)
}
