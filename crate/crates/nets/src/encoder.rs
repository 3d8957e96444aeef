//! Recurrent observation encoder: ResNet features fed through a ConvLSTM,
//! exposed as an [m, d_z] matrix with one row per spatial position.

use farm_tensor::{ParamMap, Result, Scalar, Tape, Tensor, TensorError};
use rand::Rng;

use crate::convlstm::{ConvLstmCell, ConvLstmState};
use crate::resnet::{strided_out, ResNetEncoder};

/// Final feature-map side length for a given input side. A 13-wide map
/// (from 99-pixel inputs) is cropped to 12 by dropping the last row/column.
pub fn feature_hw(input: usize) -> usize {
    let s = strided_out(input);
    if s == 13 {
        12
    } else {
        s
    }
}

pub struct ObservationEncoder<S: Scalar> {
    resnet: ResNetEncoder<S>,
    convlstm: ConvLstmCell<S>,
    pub input_hw: (usize, usize),
    pub feature_hw: (usize, usize),
}

impl<S: Scalar> ObservationEncoder<S> {
    pub fn new(
        params: &mut ParamMap<S>,
        prefix: &str,
        rng: &mut impl Rng,
        input_hw: (usize, usize),
    ) -> Self {
        let resnet = ResNetEncoder::new(params, &format!("{prefix}/resnet"), rng, 3);
        let convlstm = ConvLstmCell::new(
            params,
            &format!("{prefix}/convlstm"),
            rng,
            resnet.out_channels(),
            32,
            3,
        );
        let feature = (feature_hw(input_hw.0), feature_hw(input_hw.1));
        ObservationEncoder {
            resnet,
            convlstm,
            input_hw,
            feature_hw: feature,
        }
    }

    /// Rows of the feature matrix (spatial positions).
    pub fn num_positions(&self) -> usize {
        self.feature_hw.0 * self.feature_hw.1
    }

    /// Feature dimension d_z.
    pub fn feature_dim(&self) -> usize {
        self.convlstm.hidden_channels
    }

    pub fn zero_state(&self) -> ConvLstmState<S> {
        self.convlstm.zero_state(self.feature_hw.0, self.feature_hw.1)
    }

    /// Encodes one frame, advancing the recurrent state. Returns the
    /// feature matrix Z `[m, d_z]` and the next state.
    pub fn forward(
        &self,
        tape: &Tape<S>,
        image: &Tensor<S>,
        state: &ConvLstmState<S>,
    ) -> Result<(Tensor<S>, ConvLstmState<S>)> {
        let (c, h, w) = image.as_3d("encode_observation")?;
        if c != 3 || (h, w) != self.input_hw {
            return Err(TensorError::BadShape {
                op: "encode_observation",
                expected: format!("[3, {}, {}] image", self.input_hw.0, self.input_hw.1),
                got: image.shape().to_vec(),
            });
        }
        let mut feat = self.resnet.forward(tape, image)?;
        let (_, fh, fw) = feat.as_3d("encode_observation")?;
        if (fh, fw) != self.feature_hw {
            feat = tape.crop2d(&feat, self.feature_hw.0, self.feature_hw.1)?;
        }
        let next = self.convlstm.step(tape, &feat, state)?;
        let z = tape.channels_to_rows(&next.h)?;
        Ok((z, next))
    }
}
