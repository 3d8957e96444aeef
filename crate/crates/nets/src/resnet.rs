//! Three-stage residual encoder: per stage one stride-2 conv then two
//! residual blocks, channels (16, 32, 32), 3x3 SAME throughout.

use farm_tensor::{init, Padding, Param, ParamMap, Result, Scalar, Tape, Tensor};
use rand::Rng;

pub const STAGE_CHANNELS: [usize; 3] = [16, 32, 32];
pub const BLOCKS_PER_STAGE: usize = 2;

struct ConvLayer<S: Scalar> {
    kernel: Param<S>,
    bias: Param<S>,
    stride: usize,
}

impl<S: Scalar> ConvLayer<S> {
    fn new(
        params: &mut ParamMap<S>,
        prefix: &str,
        rng: &mut impl Rng,
        c_in: usize,
        c_out: usize,
        stride: usize,
    ) -> Self {
        ConvLayer {
            kernel: params.create(
                format!("{prefix}/kernel"),
                init::fan_in_trunc_normal(rng, &[c_out, c_in, 3, 3]),
            ),
            bias: params.create(format!("{prefix}/bias"), init::zeros_param(&[c_out])),
            stride,
        }
    }

    fn forward(&self, tape: &Tape<S>, x: &Tensor<S>) -> Result<Tensor<S>> {
        tape.conv2d(
            x,
            &self.kernel.value(),
            Some(&self.bias.value()),
            self.stride,
            Padding::Same,
        )
    }
}

struct ResBlock<S: Scalar> {
    conv1: ConvLayer<S>,
    conv2: ConvLayer<S>,
}

impl<S: Scalar> ResBlock<S> {
    fn forward(&self, tape: &Tape<S>, x: &Tensor<S>) -> Result<Tensor<S>> {
        let h = tape.relu(&self.conv1.forward(tape, x)?)?;
        let h = self.conv2.forward(tape, &h)?;
        tape.relu(&tape.add(x, &h)?)
    }
}

struct Stage<S: Scalar> {
    down: ConvLayer<S>,
    blocks: Vec<ResBlock<S>>,
}

pub struct ResNetEncoder<S: Scalar> {
    stages: Vec<Stage<S>>,
}

impl<S: Scalar> ResNetEncoder<S> {
    pub fn new(params: &mut ParamMap<S>, prefix: &str, rng: &mut impl Rng, in_channels: usize) -> Self {
        let mut stages = Vec::new();
        let mut c_in = in_channels;
        for (si, &c_out) in STAGE_CHANNELS.iter().enumerate() {
            let down = ConvLayer::new(params, &format!("{prefix}/stage{si}/down"), rng, c_in, c_out, 2);
            let blocks = (0..BLOCKS_PER_STAGE)
                .map(|bi| ResBlock {
                    conv1: ConvLayer::new(
                        params,
                        &format!("{prefix}/stage{si}/block{bi}/conv1"),
                        rng,
                        c_out,
                        c_out,
                        1,
                    ),
                    conv2: ConvLayer::new(
                        params,
                        &format!("{prefix}/stage{si}/block{bi}/conv2"),
                        rng,
                        c_out,
                        c_out,
                        1,
                    ),
                })
                .collect();
            stages.push(Stage { down, blocks });
            c_in = c_out;
        }
        ResNetEncoder { stages }
    }

    pub fn out_channels(&self) -> usize {
        *STAGE_CHANNELS.last().unwrap()
    }

    pub fn forward(&self, tape: &Tape<S>, x: &Tensor<S>) -> Result<Tensor<S>> {
        let mut h = x.clone();
        for stage in &self.stages {
            h = tape.relu(&stage.down.forward(tape, &h)?)?;
            for block in &stage.blocks {
                h = block.forward(tape, &h)?;
            }
        }
        Ok(h)
    }
}

/// Spatial size after the three stride-2 SAME stages.
pub fn strided_out(input: usize) -> usize {
    input.div_ceil(2).div_ceil(2).div_ceil(2)
}
