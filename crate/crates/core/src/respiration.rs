//! Breathing curves from CSI: static removal, stream selection by RNR,
//! wavelet denoising, peak tracking and apnea detection.

use std::fmt;

use crate::csi::{CsiTrace, SUBCARRIERS};
use crate::dsp::hampel::hampel;
use crate::dsp::spectrum::{rnr_in_band, MIN_RNR_LEN};
use crate::dsp::stats::median;
use crate::dsp::wavelet::shift_invariant_approximation;
use crate::error::{Error, Result};
use crate::sanitize::{sanitize, SanitizedStreams};
use crate::sim::{MAX_RATE_BPM, MIN_RATE_BPM};

/// Sample rate at which the Hampel window sizes below are specified.
pub const HAMPEL_REFERENCE_RATE_HZ: f64 = 20.0;
pub const STATIC_HALF_WINDOW: usize = 100;
pub const STATIC_THRESHOLD: f64 = 0.01;
pub const OUTLIER_HALF_WINDOW: usize = 20;
pub const OUTLIER_THRESHOLD: f64 = 3.0;

pub const DEFAULT_MIN_AMP_FRACTION: f64 = 0.5;
/// Required ratio of the approximation band edge to the dominant breathing
/// frequency.
pub const DENOISE_BAND_MARGIN: f64 = 1.25;
/// Minimum peak spacing as a fraction of the dominant breathing period.
pub const PEAK_SPACING_FRACTION: f64 = 0.6;
/// Trailing span over which the peak prominence reference is taken.
pub const PROMINENCE_WINDOW_S: f64 = 30.0;
pub const DEFAULT_APNEA_WINDOW_S: f64 = 10.0;

pub fn band_hz() -> (f64, f64) {
    (MIN_RATE_BPM / 60.0, MAX_RATE_BPM / 60.0)
}

/// Hampel half-window for `sample_rate_hz`, scaled from its value at the
/// reference rate so it covers the same duration.
pub fn scaled_half_window(half_window: usize, sample_rate_hz: f64) -> usize {
    ((half_window as f64 * sample_rate_hz / HAMPEL_REFERENCE_RATE_HZ).round() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StreamKind {
    Amplitude,
    Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StreamSource {
    pub kind: StreamKind,
    pub subcarrier: usize,
}

impl fmt::Display for StreamSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            StreamKind::Amplitude => "amplitude",
            StreamKind::Phase => "phase",
        };
        write!(f, "{kind}:{}", self.subcarrier)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RespirationCurve {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub source: StreamSource,
}

impl RespirationCurve {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, source: StreamSource) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample rate {sample_rate_hz} must be positive"
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("curve samples must be finite".into()));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            source,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

/// Subtracts the slow static component and then rejects outliers.
pub fn remove_static(series: &[f64], sample_rate_hz: f64) -> Result<Vec<f64>> {
    let static_w = scaled_half_window(STATIC_HALF_WINDOW, sample_rate_hz);
    if series.len() <= 2 * static_w {
        return Err(Error::InvalidArgument(format!(
            "static removal at {sample_rate_hz} Hz needs more than {} samples, got {}",
            2 * static_w,
            series.len()
        )));
    }
    let static_part = hampel(series, static_w, STATIC_THRESHOLD)?;
    let dynamic: Vec<f64> = series.iter().zip(&static_part).map(|(x, s)| x - s).collect();
    hampel(
        &dynamic,
        scaled_half_window(OUTLIER_HALF_WINDOW, sample_rate_hz),
        OUTLIER_THRESHOLD,
    )
}

/// RNR over the breathing band: `(value, peak frequency in Hz)`.
pub fn rnr(series: &[f64], sample_rate_hz: f64) -> Result<(f64, f64)> {
    let (lo, hi) = band_hz();
    let r = rnr_in_band(series, sample_rate_hz, lo, hi)?;
    Ok((r.value, r.peak_freq_hz))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub source: StreamSource,
    pub rnr: f64,
    pub peak_freq_hz: f64,
}

/// Picks the static-removed stream with the highest RNR among the reference
/// antenna's 30 amplitude series and the 30 relative-phase series. Ties go
/// to amplitude, then to the lower subcarrier.
pub fn select_stream(streams: &SanitizedStreams) -> Result<(RespirationCurve, Vec<CandidateScore>)> {
    let n = streams.frames();
    if n < MIN_RNR_LEN {
        return Err(Error::InvalidArgument(format!(
            "stream selection needs at least {MIN_RNR_LEN} frames, got {n}"
        )));
    }
    let fs = streams.sample_rate_hz;
    let sources = (0..SUBCARRIERS)
        .map(|k| (StreamKind::Amplitude, k, &streams.amp_ref[k]))
        .chain((0..SUBCARRIERS).map(|k| (StreamKind::Phase, k, &streams.rel_phase[k])));

    let mut best: Option<(f64, Vec<f64>, StreamSource)> = None;
    let mut scores = Vec::with_capacity(2 * SUBCARRIERS);
    for (kind, subcarrier, raw) in sources {
        let source = StreamSource { kind, subcarrier };
        let dynamic = remove_static(raw, fs)?;
        let (value, peak_freq_hz) = rnr(&dynamic, fs)?;
        scores.push(CandidateScore {
            source,
            rnr: value,
            peak_freq_hz,
        });
        if best.as_ref().is_none_or(|(v, _, _)| value > *v) {
            best = Some((value, dynamic, source));
        }
    }
    let (_, samples, source) = best.expect("60 candidates");
    Ok((RespirationCurve::new(samples, fs, source)?, scores))
}

/// Deepest decomposition whose approximation band edge
/// (`sample_rate / 2^(L+1)`) stays at least [`DENOISE_BAND_MARGIN`] times
/// above `dominant_hz`.
pub fn denoise_levels(sample_rate_hz: f64, dominant_hz: f64) -> usize {
    let top = DENOISE_BAND_MARGIN * dominant_hz.clamp(MIN_RATE_BPM / 60.0, MAX_RATE_BPM / 60.0);
    (1..16)
        .take_while(|&l| sample_rate_hz / 2f64.powi(l as i32 + 1) >= top)
        .last()
        .unwrap_or(1)
}

/// Dominant in-band frequency, or the fastest breathing rate when the
/// series is too short for a spectrum.
fn dominant_hz(curve: &RespirationCurve) -> f64 {
    rnr(&curve.samples, curve.sample_rate_hz).map_or(MAX_RATE_BPM / 60.0, |(_, f)| f)
}

/// Keeps only the deepest db4 approximation that still passes the dominant
/// breathing frequency, averaged over all shifts of the dyadic grid. Lengths that are not a multiple of the block size
/// are mirror-extended, projected and cropped.
pub fn wavelet_denoise(curve: &RespirationCurve) -> Result<RespirationCurve> {
    wavelet_denoise_at(curve, denoise_levels(curve.sample_rate_hz, dominant_hz(curve)))
}

/// [`wavelet_denoise`] at a fixed depth, which makes it linear.
pub fn wavelet_denoise_at(curve: &RespirationCurve, levels: usize) -> Result<RespirationCurve> {
    let block = 1usize << levels;
    let n = curve.samples.len();
    if n < block {
        return Err(Error::InvalidArgument(format!(
            "wavelet denoising at {} levels needs at least {block} samples, got {n}",
            levels
        )));
    }
    let padded_len = n.div_ceil(block) * block;
    let mut padded = curve.samples.clone();
    for i in 0..padded_len - n {
        // symmetric extension: ..., x[n-2], x[n-1] | x[n-1], x[n-2], ...
        padded.push(curve.samples[n - 1 - (i % n)]);
    }
    let mut smooth = shift_invariant_approximation(&padded, levels)?;
    smooth.truncate(n);
    RespirationCurve::new(smooth, curve.sample_rate_hz, curve.source)
}

/// Refractory spacing: a fixed fraction of the dominant in-band period, or
/// of the fastest breath when the curve is too short for a spectrum.
pub fn min_peak_spacing_s(curve: &RespirationCurve) -> f64 {
    PEAK_SPACING_FRACTION / dominant_hz(curve)
}

/// Topographic prominence of the peak at `i`.
fn prominence(x: &[f64], i: usize) -> f64 {
    let h = x[i];
    let mut left_min = h;
    for &v in x[..i].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[i + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Breath peaks: local maxima whose prominence reaches `min_amp_fraction`
/// of the median prominence of peaks accepted over the trailing 30 s, at
/// at least [`min_peak_spacing_s`] apart.
pub fn detect_peaks(curve: &RespirationCurve, min_amp_fraction: f64) -> Vec<usize> {
    let x = &curve.samples;
    let fs = curve.sample_rate_hz;
    if x.len() < 3 {
        return Vec::new();
    }
    let candidates: Vec<(usize, f64)> = (1..x.len() - 1)
        .filter(|&i| x[i] > x[i - 1] && x[i] >= x[i + 1])
        .map(|i| (i, prominence(x, i)))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    let window = PROMINENCE_WINDOW_S * fs;
    let spacing = min_peak_spacing_s(curve) * fs;
    let Some(bootstrap) = candidates
        .iter()
        .filter(|(i, _)| (*i as f64) < window)
        .map(|&(_, p)| p)
        .reduce(f64::max)
        .or_else(|| candidates.first().map(|&(_, p)| p))
    else {
        return Vec::new();
    };

    let mut accepted: Vec<(usize, f64)> = Vec::new();
    for &(i, p) in &candidates {
        let recent: Vec<f64> = accepted
            .iter()
            .filter(|(j, _)| (i - j) as f64 <= window)
            .map(|&(_, q)| q)
            .collect();
        let reference = if !recent.is_empty() {
            median(&recent)
        } else if !accepted.is_empty() {
            let tail: Vec<f64> = accepted.iter().rev().take(5).map(|&(_, q)| q).collect();
            median(&tail)
        } else {
            Some(bootstrap)
        }
        .expect("nonempty");
        if p < min_amp_fraction * reference {
            continue;
        }
        match accepted.last_mut() {
            Some(last) if ((i - last.0) as f64) < spacing => {
                if x[i] > x[last.0] {
                    *last = (i, p);
                }
            }
            _ => accepted.push((i, p)),
        }
    }
    accepted.into_iter().map(|(i, _)| i).collect()
}

/// Breaths per minute from the mean peak-to-peak interval.
pub fn rate_bpm(peaks: &[usize], sample_rate_hz: f64) -> Option<f64> {
    let (first, last) = (peaks.first()?, peaks.last()?);
    if peaks.len() < 2 || last == first {
        return None;
    }
    Some(60.0 * (peaks.len() - 1) as f64 * sample_rate_hz / (last - first) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApneaReport {
    pub peak_indices: Vec<usize>,
    /// Sorted, disjoint `(start_s, end_s)` intervals.
    pub apnea_intervals: Vec<(f64, f64)>,
    pub window_s: f64,
}

/// Flags every stretch longer than `window_s` without a peak, counting the
/// trace edges as peaks.
///
/// The interval is pulled in from each bounding peak by half the typical
/// breath period (at most `window_s / 2`), which is where breathing would
/// have produced its next peak.
pub fn detect_apnea(
    peaks: &[usize],
    sample_rate_hz: f64,
    duration_s: f64,
    window_s: f64,
) -> Result<ApneaReport> {
    if !(window_s > 0.0 && sample_rate_hz > 0.0 && duration_s >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "apnea detection needs positive window and rate, got {window_s} s at {sample_rate_hz} Hz"
        )));
    }
    if peaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("peak indices must be strictly increasing".into()));
    }
    let times: Vec<f64> = peaks.iter().map(|&i| i as f64 / sample_rate_hz).collect();
    let regular: Vec<f64> = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d <= window_s)
        .collect();
    let margin = median(&regular).map_or(window_s / 2.0, |m| (m / 2.0).min(window_s / 2.0));

    let mut bounds = Vec::with_capacity(times.len() + 2);
    bounds.push(0.0);
    bounds.extend(times.iter().copied().filter(|t| (0.0..=duration_s).contains(t)));
    bounds.push(duration_s);

    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for w in bounds.windows(2) {
        if w[1] - w[0] > window_s {
            let (start, end) = (w[0] + margin, w[1] - margin);
            match intervals.last_mut() {
                Some(last) if last.1 >= start => last.1 = end,
                _ => intervals.push((start, end)),
            }
        }
    }
    Ok(ApneaReport {
        peak_indices: peaks.to_vec(),
        apnea_intervals: intervals,
        window_s,
    })
}

/// Everything the breathing pipeline derives from one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RespirationReport {
    pub curve: RespirationCurve,
    pub candidates: Vec<CandidateScore>,
    pub rate_bpm: Option<f64>,
    pub apnea: ApneaReport,
}

/// Sanitize, select, denoise, find peaks and flag apnea over the whole trace.
pub fn track(trace: &CsiTrace) -> Result<RespirationReport> {
    let streams = sanitize(trace, 0..trace.len())?;
    let (raw, candidates) = select_stream(&streams)?;
    let curve = wavelet_denoise(&raw)?;
    let peaks = detect_peaks(&curve, DEFAULT_MIN_AMP_FRACTION);
    let fs = curve.sample_rate_hz;
    let apnea = detect_apnea(&peaks, fs, curve.duration_s(), DEFAULT_APNEA_WINDOW_S)?;
    Ok(RespirationReport {
        rate_bpm: rate_bpm(&peaks, fs),
        curve,
        candidates,
        apnea,
    })
}
