//! Phase-offset removal: antenna selection, static-power adjustment and
//! conjugate multiplication between the two retained antennas.
//!
//! Per-packet phase offsets are common to every antenna of a NIC, so
//! `h1·conj(h2)` cancels them. The product of the two static components is
//! nearly constant over a short window and is removed by subtracting the
//! window mean; what remains is dominated by the static(first) ×
//! dynamic(reference) cross term once the first antenna's static power is
//! boosted by `delta` and the reference antenna's is reduced by `gamma`.

use std::cmp::Ordering;
use std::ops::Range;

use num_complex::Complex64;

use crate::csi::{antenna_variance, CsiTrace, SUBCARRIERS};
use crate::error::{check_window, Error, Result};

/// Ratio between the first antenna's boost and the reference antenna's cut.
pub const DELTA_PER_GAMMA: f64 = 1000.0;

/// Roles of the three receive antennas, ranked by amplitude variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AntennaSelection {
    /// Middle-variance antenna, kept as the "first" antenna.
    pub first: usize,
    /// Most sensitive antenna.
    pub reference: usize,
    /// Least sensitive antenna, dropped.
    pub discarded: usize,
}

/// Ranks antennas by variance (descending); equal variances favour the
/// lower index.
pub fn rank_by_variance(variances: [f64; 3]) -> AntennaSelection {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        variances[b]
            .partial_cmp(&variances[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    AntennaSelection {
        reference: order[0],
        first: order[1],
        discarded: order[2],
    }
}

pub fn select_antennas(trace: &CsiTrace, window: Range<usize>) -> Result<AntennaSelection> {
    if trace.antennas() < 3 {
        return Err(Error::InvalidArgument(format!(
            "antenna selection needs 3 antennas, trace has {}",
            trace.antennas()
        )));
    }
    check_window(&window, trace.len(), 1)?;
    let mut variances = [0.0; 3];
    for (a, v) in variances.iter_mut().enumerate() {
        *v = antenna_variance(trace, a, window.clone())?;
    }
    Ok(rank_by_variance(variances))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerAdjustment {
    /// Amplitude added to the first antenna.
    pub delta: f64,
    /// Amplitude removed from the reference antenna.
    pub gamma: f64,
}

/// `gamma` is the smallest reference amplitude in the window (so the adjusted
/// reference bottoms out at zero) and `delta = 1000·gamma`.
///
/// `amp_ref` is laid out `[subcarrier][frame]` and already restricted to the
/// processing window.
pub fn power_adjust(amp_ref: &[Vec<f64>]) -> Result<PowerAdjustment> {
    let gamma = amp_ref
        .iter()
        .flatten()
        .copied()
        .reduce(f64::min)
        .ok_or_else(|| Error::InvalidArgument("empty amplitude window".into()))?;
    Ok(PowerAdjustment {
        delta: DELTA_PER_GAMMA * gamma,
        gamma,
    })
}

/// Offset-free streams of one receiver over a processing window.
/// Every series is laid out `[subcarrier][frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SanitizedStreams {
    /// Conjugate product with its window mean removed.
    pub cm: Vec<Vec<Complex64>>,
    /// `arg(cm)` in `(-π, π]`.
    pub rel_phase: Vec<Vec<f64>>,
    pub amp_first: Vec<Vec<f64>>,
    pub amp_ref: Vec<Vec<f64>>,
    pub selection: AntennaSelection,
    pub adjustment: PowerAdjustment,
    pub window: Range<usize>,
    pub sample_rate_hz: f64,
}

impl SanitizedStreams {
    pub fn frames(&self) -> usize {
        self.window.len()
    }
}

/// Rescales `h` to magnitude `|h| + shift`, keeping its phase. A zero
/// input has no phase and maps onto the positive real axis.
fn shift_magnitude(h: Complex64, shift: f64) -> Complex64 {
    let mag = h.norm();
    if mag > 0.0 {
        h * ((mag + shift) / mag)
    } else {
        Complex64::new(shift.max(0.0), 0.0)
    }
}

/// Folds `atan2`'s `-π` onto `π` so phases lie in `(-π, π]`.
pub(crate) fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

pub fn conjugate_multiply(
    trace: &CsiTrace,
    selection: AntennaSelection,
    window: Range<usize>,
) -> Result<SanitizedStreams> {
    check_window(&window, trace.len(), 2)?;
    let antennas = trace.antennas();
    if selection.first >= antennas || selection.reference >= antennas
        || selection.first == selection.reference
    {
        return Err(Error::InvalidArgument(format!(
            "selection {selection:?} invalid for {antennas} antennas"
        )));
    }
    let amp_first = trace.amplitude_series(selection.first, window.clone());
    let amp_ref = trace.amplitude_series(selection.reference, window.clone());
    let adjustment = power_adjust(&amp_ref)?;
    let n = window.len();

    let mut cm = vec![Vec::with_capacity(n); SUBCARRIERS];
    for frame in &trace.frames()[window.clone()] {
        let first = frame.row(selection.first);
        let reference = frame.row(selection.reference);
        for k in 0..SUBCARRIERS {
            let h1 = shift_magnitude(first[k], adjustment.delta);
            let h2 = shift_magnitude(reference[k], -adjustment.gamma);
            cm[k].push(h1 * h2.conj());
        }
    }
    for series in cm.iter_mut() {
        let mean = series.iter().sum::<Complex64>() / n as f64;
        for v in series.iter_mut() {
            *v -= mean;
        }
    }
    let rel_phase = cm
        .iter()
        .map(|s| s.iter().map(|v| principal_arg(*v)).collect())
        .collect();

    Ok(SanitizedStreams {
        cm,
        rel_phase,
        amp_first,
        amp_ref,
        selection,
        adjustment,
        window,
        sample_rate_hz: trace.sample_rate_hz(),
    })
}

/// Antenna selection over the full trace followed by conjugate
/// multiplication over `window`.
pub fn sanitize(trace: &CsiTrace, window: Range<usize>) -> Result<SanitizedStreams> {
    let selection = select_antennas(trace, 0..trace.len())?;
    conjugate_multiply(trace, selection, window)
}
