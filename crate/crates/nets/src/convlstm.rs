//! Convolutional LSTM: gates come from a single 3x3 SAME conv over the
//! channel-concatenation of input and hidden map, so spatial dims are
//! preserved.

use farm_tensor::{init, Padding, Param, ParamMap, Result, Scalar, Tape, Tensor};
use rand::Rng;

#[derive(Clone)]
pub struct ConvLstmState<S: Scalar> {
    pub h: Tensor<S>, // [ch, height, width]
    pub c: Tensor<S>,
}

pub struct ConvLstmCell<S: Scalar> {
    pub in_channels: usize,
    pub hidden_channels: usize,
    kernel: Param<S>, // [4*ch, in+ch, k, k]
    bias: Param<S>,   // [4*ch], forget block at 1
}

impl<S: Scalar> ConvLstmCell<S> {
    pub fn new(
        params: &mut ParamMap<S>,
        prefix: &str,
        rng: &mut impl Rng,
        in_channels: usize,
        hidden_channels: usize,
        kernel_size: usize,
    ) -> Self {
        let kernel = params.create(
            format!("{prefix}/kernel"),
            init::fan_in_trunc_normal(
                rng,
                &[
                    4 * hidden_channels,
                    in_channels + hidden_channels,
                    kernel_size,
                    kernel_size,
                ],
            ),
        );
        let mut b = vec![S::zero(); 4 * hidden_channels];
        b[hidden_channels..2 * hidden_channels].fill(S::one());
        let bias = params.create(
            format!("{prefix}/bias"),
            Tensor::param(b, &[4 * hidden_channels]).unwrap(),
        );
        ConvLstmCell {
            in_channels,
            hidden_channels,
            kernel,
            bias,
        }
    }

    pub fn zero_state(&self, height: usize, width: usize) -> ConvLstmState<S> {
        ConvLstmState {
            h: Tensor::zeros(&[self.hidden_channels, height, width]),
            c: Tensor::zeros(&[self.hidden_channels, height, width]),
        }
    }

    pub fn step(
        &self,
        tape: &Tape<S>,
        x: &Tensor<S>,
        state: &ConvLstmState<S>,
    ) -> Result<ConvLstmState<S>> {
        let ch = self.hidden_channels;
        let stacked = tape.concat(&[x, &state.h], 0)?;
        let gates = tape.conv2d(
            &stacked,
            &self.kernel.value(),
            Some(&self.bias.value()),
            1,
            Padding::Same,
        )?;
        let i = tape.sigmoid(&tape.slice(&gates, 0, 0, ch)?)?;
        let f = tape.sigmoid(&tape.slice(&gates, 0, ch, 2 * ch)?)?;
        let g = tape.tanh(&tape.slice(&gates, 0, 2 * ch, 3 * ch)?)?;
        let o = tape.sigmoid(&tape.slice(&gates, 0, 3 * ch, 4 * ch)?)?;
        let c = tape.add(&tape.mul(&f, &state.c)?, &tape.mul(&i, &g)?)?;
        let h = tape.mul(&o, &tape.tanh(&c)?)?;
        Ok(ConvLstmState { h, c })
    }
}
