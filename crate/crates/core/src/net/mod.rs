//! Encoder–decoder pose network implemented from scratch in `f64`.

pub mod checkpoint;
pub mod layers;
pub mod loss;
pub mod model;
pub mod optim;
pub mod pcs;
pub mod tensor;
pub mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint};
pub use layers::{nearest_source, resize_nearest, Conv2d, Dense, SeBlock};
pub use loss::{bce_loss, BCE_EPSILON};
pub use model::{Activations, Architecture, NetworkParams, DECODER_HW, ENCODER_HW, FC_HW};
pub use optim::{Adam, AdamConfig};
pub use pcs::{pcs, pcs_suite, skeleton_distance, PcsSummary};
pub use tensor::Tensor3;
pub use train::{train, train_with_progress, TrainConfig, TrainOutcome};
