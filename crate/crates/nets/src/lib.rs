//! Network building blocks: residual conv encoder, ConvLSTM, LSTM, GRU
//! instruction encoder, and policy/value heads.

mod convlstm;
mod encoder;
mod gru;
mod heads;
mod lstm;
mod resnet;

pub use convlstm::{ConvLstmCell, ConvLstmState};
pub use encoder::{feature_hw, ObservationEncoder};
pub use gru::{LanguageEncoder, MAX_VOCAB, UNK_ID};
pub use heads::PolicyValueHeads;
pub use lstm::{LstmCell, LstmState};
pub use resnet::{strided_out, ResNetEncoder, BLOCKS_PER_STAGE, STAGE_CHANNELS};
