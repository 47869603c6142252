//! Synthetic CSI from a physical multipath model, with ground truth.

mod channel;
mod scenario;
mod skeleton;

pub use channel::{
    path_response, simulate, subcarrier_freqs, GroundTruth, SIM_ANTENNAS, SPEED_OF_LIGHT,
    SUBCARRIER_HALF_SPAN_HZ,
};
pub use scenario::{
    ChestModel, MovingReflector, PhaseOffset, Scenario, StaticPath, DEFAULT_SAMPLE_RATE_HZ,
    MAX_RATE_BPM, MIN_RATE_BPM, POSE_CARRIER_HZ, RESPIRATION_CARRIER_HZ,
};
pub use skeleton::{
    render_skeleton, skeleton_for_position, Segment, SkeletonParams, ROOM_DEPTH_M, ROOM_WIDTH_M,
};
