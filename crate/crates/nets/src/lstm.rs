//! LSTM cell with fixed (i, f, g, o) gate order and forget-gate bias
//! initialized to 1.

use farm_tensor::{init, ParamMap, Result, Scalar, Tape, Tensor};
use rand::Rng;

#[derive(Clone)]
pub struct LstmState<S: Scalar> {
    pub h: Tensor<S>,
    pub c: Tensor<S>,
}

pub struct LstmCell<S: Scalar> {
    pub input_size: usize,
    pub hidden_size: usize,
    w_ih: farm_tensor::Param<S>,
    w_hh: farm_tensor::Param<S>,
    bias: farm_tensor::Param<S>,
}

impl<S: Scalar> LstmCell<S> {
    pub fn new(
        params: &mut ParamMap<S>,
        prefix: &str,
        rng: &mut impl Rng,
        input_size: usize,
        hidden_size: usize,
    ) -> Self {
        let w_ih = params.create(
            format!("{prefix}/W_ih"),
            init::fan_in_trunc_normal(rng, &[input_size, 4 * hidden_size]),
        );
        // orthogonal per gate block
        let w_hh = params.create(
            format!("{prefix}/W_hh"),
            per_gate_orthogonal(rng, hidden_size, 4),
        );
        let mut b = vec![S::zero(); 4 * hidden_size];
        b[hidden_size..2 * hidden_size].fill(S::one()); // forget gate
        let bias = params.create(
            format!("{prefix}/b"),
            Tensor::param(b, &[4 * hidden_size]).unwrap(),
        );
        LstmCell {
            input_size,
            hidden_size,
            w_ih,
            w_hh,
            bias,
        }
    }

    pub fn zero_state(&self) -> LstmState<S> {
        LstmState {
            h: Tensor::zeros(&[1, self.hidden_size]),
            c: Tensor::zeros(&[1, self.hidden_size]),
        }
    }

    /// One step: `x` is `[1, input_size]`, returns the next state.
    pub fn step(&self, tape: &Tape<S>, x: &Tensor<S>, state: &LstmState<S>) -> Result<LstmState<S>> {
        let hs = self.hidden_size;
        let gates = tape.add(
            &tape.add(
                &tape.matmul(x, &self.w_ih.value())?,
                &tape.matmul(&state.h, &self.w_hh.value())?,
            )?,
            &self.bias.value(),
        )?;
        let i = tape.sigmoid(&tape.slice(&gates, 1, 0, hs)?)?;
        let f = tape.sigmoid(&tape.slice(&gates, 1, hs, 2 * hs)?)?;
        let g = tape.tanh(&tape.slice(&gates, 1, 2 * hs, 3 * hs)?)?;
        let o = tape.sigmoid(&tape.slice(&gates, 1, 3 * hs, 4 * hs)?)?;
        let c = tape.add(&tape.mul(&f, &state.c)?, &tape.mul(&i, &g)?)?;
        let h = tape.mul(&o, &tape.tanh(&c)?)?;
        Ok(LstmState { h, c })
    }
}

/// `[hidden, gates*hidden]` recurrent matrix: an independent orthogonal
/// square block per gate.
pub(crate) fn per_gate_orthogonal<S: Scalar>(
    rng: &mut impl Rng,
    hidden: usize,
    gates: usize,
) -> Tensor<S> {
    let mut data = vec![S::zero(); hidden * gates * hidden];
    for gate in 0..gates {
        let block = init::orthogonal::<S, _>(rng, hidden, hidden);
        let bd = block.data();
        for r in 0..hidden {
            for c in 0..hidden {
                data[r * gates * hidden + gate * hidden + c] = bd[r * hidden + c];
            }
        }
    }
    Tensor::param(data, &[hidden, gates * hidden]).unwrap()
}
