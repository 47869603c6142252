//! WiFi CSI in-home monitoring.
//!
//! The crate covers the whole chain from channel to result:
//!
//! * [`sim`] synthesizes multi-antenna CSI traces from a multipath model,
//! * [`sanitize`] removes per-packet phase offsets by conjugate multiplication,
//! * [`features`] builds the two-channel CSI maps fed to the pose network,
//! * [`net`] is the encoder–decoder pose network with PCS evaluation,
//! * [`respiration`] extracts breathing curves and flags apnea.

pub mod csi;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod features;
pub mod figure;
pub mod io;
pub mod net;
pub mod respiration;
pub mod sanitize;
pub mod sim;

pub use csi::{amplitude, antenna_variance, CsiFrame, CsiTrace, SUBCARRIERS};
pub use error::{Error, Result};
pub use figure::PoseFigure;
