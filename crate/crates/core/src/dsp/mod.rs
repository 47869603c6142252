//! Signal-processing building blocks shared by the pose and breathing paths.

pub mod hampel;
pub mod spectrum;
pub mod stats;
pub mod wavelet;

pub use hampel::{hampel, rolling_median_mad, MAD_SCALE};
pub use spectrum::{power_spectrum, rnr_in_band, Rnr, MIN_RNR_LEN};
pub use stats::{mean, median, pearson};
pub use wavelet::{
    approximation_projection, db4_highpass, dwt_step, idwt_step, shift_invariant_approximation,
    DB4_LOWPASS,
};
