//! Core CSI containers: frames of per-antenna subcarrier responses and the
//! time-ordered traces built from them.

use std::ops::Range;

use num_complex::Complex64;

use crate::error::{check_window, Error, Result};

/// Subcarriers reported per antenna pair.
pub const SUBCARRIERS: usize = 30;

/// Per-antenna row of subcarrier responses.
pub type SubcarrierRow = [Complex64; SUBCARRIERS];

/// One received packet: complex CSI for every receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiFrame {
    timestamp_us: u64,
    values: Vec<SubcarrierRow>,
}

impl CsiFrame {
    /// Builds a frame, rejecting antenna counts other than 2 or 3 and
    /// non-finite entries.
    pub fn new(timestamp_us: u64, values: Vec<SubcarrierRow>) -> Result<Self> {
        if !(2..=3).contains(&values.len()) {
            return Err(Error::InvalidFrame(format!(
                "antenna count {} (expected 2 or 3)",
                values.len()
            )));
        }
        for (a, row) in values.iter().enumerate() {
            if let Some(k) = row.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::InvalidFrame(format!(
                    "non-finite value at antenna {a}, subcarrier {k}"
                )));
            }
        }
        Ok(Self {
            timestamp_us,
            values,
        })
    }

    pub fn timestamp_us(&self) -> u64 {
        self.timestamp_us
    }

    pub fn antennas(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[SubcarrierRow] {
        &self.values
    }

    pub fn row(&self, antenna: usize) -> &SubcarrierRow {
        &self.values[antenna]
    }
}

/// A time series of [`CsiFrame`]s captured at a nominal packet rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiTrace {
    frames: Vec<CsiFrame>,
    sample_rate_hz: f64,
    carrier_hz: f64,
    label: String,
}

impl CsiTrace {
    /// Validates timestamp ordering, the nominal spacing (±10% of
    /// `1/sample_rate_hz` on every gap) and a shared antenna count.
    pub fn new(
        frames: Vec<CsiFrame>,
        sample_rate_hz: f64,
        carrier_hz: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::NoFrames);
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidTrace(format!(
                "sample rate {sample_rate_hz} must be positive"
            )));
        }
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return Err(Error::InvalidTrace(format!(
                "carrier {carrier_hz} must be positive"
            )));
        }
        let antennas = frames[0].antennas();
        let nominal_us = 1e6 / sample_rate_hz;
        for (i, pair) in frames.windows(2).enumerate() {
            let (prev, next) = (&pair[0], &pair[1]);
            if next.timestamp_us <= prev.timestamp_us {
                return Err(Error::InvalidTrace(format!(
                    "timestamps not increasing at frame {}",
                    i + 1
                )));
            }
            let gap = (next.timestamp_us - prev.timestamp_us) as f64;
            if (gap - nominal_us).abs() > 0.1 * nominal_us {
                return Err(Error::InvalidTrace(format!(
                    "gap of {gap} us before frame {} deviates from nominal {nominal_us} us",
                    i + 1
                )));
            }
        }
        if let Some(i) = frames.iter().position(|f| f.antennas() != antennas) {
            return Err(Error::InvalidTrace(format!(
                "frame {i} has {} antennas, frame 0 has {antennas}",
                frames[i].antennas()
            )));
        }
        Ok(Self {
            frames,
            sample_rate_hz,
            carrier_hz,
            label: label.into(),
        })
    }

    pub fn frames(&self) -> &[CsiFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn antennas(&self) -> usize {
        self.frames[0].antennas()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Amplitude of one antenna over a frame range, laid out `[subcarrier][frame]`.
    pub fn amplitude_series(&self, antenna: usize, window: Range<usize>) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(window.len()); SUBCARRIERS];
        for frame in &self.frames[window] {
            for (k, v) in frame.row(antenna).iter().enumerate() {
                out[k].push(v.norm());
            }
        }
        out
    }
}

/// Per-antenna, per-subcarrier magnitude of a frame.
pub fn amplitude(frame: &CsiFrame) -> Vec<[f64; SUBCARRIERS]> {
    frame
        .values
        .iter()
        .map(|row| std::array::from_fn(|k| row[k].norm()))
        .collect()
}

/// Sensitivity score of one antenna: the unbiased sample variance of each
/// subcarrier's amplitude across `window`, averaged over subcarriers.
///
/// A single-frame window has no spread and scores 0.
pub fn antenna_variance(trace: &CsiTrace, antenna: usize, window: Range<usize>) -> Result<f64> {
    check_window(&window, trace.len(), 1)?;
    if antenna >= trace.antennas() {
        return Err(Error::InvalidArgument(format!(
            "antenna {antenna} out of range for {} antennas",
            trace.antennas()
        )));
    }
    let n = window.len();
    if n == 1 {
        return Ok(0.0);
    }
    let series = trace.amplitude_series(antenna, window);
    let total: f64 = series
        .iter()
        .map(|s| {
            let mean = s.iter().sum::<f64>() / n as f64;
            s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        })
        .sum();
    Ok(total / SUBCARRIERS as f64)
}
