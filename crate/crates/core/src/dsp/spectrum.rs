//! Power spectra and the respiration-to-noise ratio.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Shortest series accepted by [`rnr_in_band`].
pub const MIN_RNR_LEN: usize = 256;

/// One-sided power spectrum `|X_k|²` for `k = 0..=n/2` of the mean-removed series.
pub fn power_spectrum(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = series.iter().map(|x| Complex64::new(x - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Frequency-domain periodicity score of a candidate breathing stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rnr {
    /// Energy in the strongest in-band bin and its two neighbours over all
    /// non-DC energy, in `[0, 1]`.
    pub value: f64,
    pub peak_freq_hz: f64,
    pub peak_bin: usize,
}

/// Respiration-to-noise ratio within the `[low_hz, high_hz]` breathing band.
pub fn rnr_in_band(series: &[f64], sample_rate_hz: f64, low_hz: f64, high_hz: f64) -> Result<Rnr> {
    let n = series.len();
    if n < MIN_RNR_LEN {
        return Err(Error::InvalidArgument(format!(
            "RNR needs at least {MIN_RNR_LEN} samples, got {n}"
        )));
    }
    let resolution = sample_rate_hz / n as f64;
    let first = ((low_hz / resolution).ceil() as usize).max(1);
    let last = ((high_hz / resolution).floor() as usize).min(n / 2);
    if first > last {
        return Err(Error::InvalidArgument(format!(
            "no FFT bin of width {resolution} Hz falls inside [{low_hz}, {high_hz}] Hz"
        )));
    }
    let power = power_spectrum(series);
    let peak_bin = (first..=last)
        .reduce(|best, k| if power[k] > power[best] { k } else { best })
        .expect("nonempty band");
    let total: f64 = power[1..].iter().sum();
    let respiratory: f64 = (peak_bin - 1..=peak_bin + 1)
        .filter(|&k| k >= 1 && k <= n / 2)
        .map(|k| power[k])
        .sum();
    let value = if total > 0.0 {
        (respiratory / total).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(Rnr {
        value,
        peak_freq_hz: peak_bin as f64 * resolution,
        peak_bin,
    })
}
