//! Two-channel CSI maps for the pose network.
//!
//! The amplitude channel is the time-frequency picture of the second
//! principal component of both remaining antennas' amplitudes; the phase
//! channel is the conjugate-multiplication relative phase. Each channel is
//! min-max normalized per map.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::csi::SUBCARRIERS;
use crate::dsp::wavelet::dwt_step;
use crate::error::{check_window, Error, Result};
use crate::net::Tensor3;
use crate::sanitize::SanitizedStreams;

/// CSI frames per map.
pub const MAP_FRAMES: usize = 20;
/// CSI frames per pose figure (100 Hz CSI, 20 Hz figures).
pub const FRAMES_PER_FIGURE: usize = 5;
/// Stacked network input channels: two receivers × (amplitude, phase).
pub const INPUT_CHANNELS: usize = 4;

/// Frames feeding the map for figure `k`: its own five frames plus the
/// fifteen before them. `None` until enough history exists.
pub fn map_window(k: usize) -> Option<Range<usize>> {
    let end = FRAMES_PER_FIGURE * (k + 1);
    end.checked_sub(MAP_FRAMES).map(|start| start..end)
}

/// Rank-1 reconstruction `σ₂·u₂·v₂ᵀ` of the centered 60×T stacked amplitude
/// matrix, restricted to the first antenna's 30 rows.
///
/// `amp_first` and `amp_ref` are `[subcarrier][frame]`; `window` indexes
/// their frame axis.
pub fn pca_second_component(
    amp_first: &[Vec<f64>],
    amp_ref: &[Vec<f64>],
    window: Range<usize>,
) -> Result<Vec<Vec<f64>>> {
    if amp_first.len() != SUBCARRIERS || amp_ref.len() != SUBCARRIERS {
        return Err(Error::InvalidArgument(format!(
            "expected {SUBCARRIERS} subcarrier rows per antenna, got {} and {}",
            amp_first.len(),
            amp_ref.len()
        )));
    }
    let len = amp_first
        .iter()
        .chain(amp_ref)
        .map(Vec::len)
        .min()
        .unwrap_or(0);
    check_window(&window, len, 2)?;
    let t = window.len();

    let rows = amp_first.iter().chain(amp_ref);
    let mut x = DMatrix::<f64>::zeros(2 * SUBCARRIERS, t);
    for (r, series) in rows.enumerate() {
        let seg = &series[window.clone()];
        let mean = seg.iter().sum::<f64>() / t as f64;
        for (j, v) in seg.iter().enumerate() {
            x[(r, j)] = v - mean;
        }
    }

    let svd = x.svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let i2 = order[1];
    let sigma2 = svd.singular_values[i2];
    if sigma2 == 0.0 {
        return Ok(vec![vec![0.0; t]; SUBCARRIERS]);
    }

    let u2 = u.column(i2);
    let pivot = (0..u2.len())
        .reduce(|best, i| if u2[i].abs() > u2[best].abs() { i } else { best })
        .expect("nonempty");
    let sign = if u2[pivot] < 0.0 { -1.0 } else { 1.0 };
    Ok((0..SUBCARRIERS)
        .map(|r| {
            (0..t)
                .map(|j| sigma2 * (sign * u2[r]) * (sign * v_t[(i2, j)]))
                .collect()
        })
        .collect())
}

/// Single-level db4 transform of every row: `[approximation | detail]`.
pub fn dwt_features(component: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    component
        .iter()
        .map(|row| {
            let (mut approx, detail) = dwt_step(row)?;
            approx.extend(detail);
            Ok(approx)
        })
        .collect()
}

/// Min-max scaling of the whole matrix to `[0, 1]`; a constant matrix maps
/// to 0.5.
pub fn min_max_normalize(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (lo, hi) = rows
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    rows.iter()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    if span > 0.0 {
                        ((v - lo) / span).clamp(0.0, 1.0)
                    } else {
                        0.5
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiMap {
    /// 30 × 20, `[subcarrier][coefficient]`.
    pub amp_channel: Vec<Vec<f64>>,
    /// 30 × 20, `[subcarrier][frame]`.
    pub phase_channel: Vec<Vec<f64>>,
    pub source_receiver: String,
    /// Absolute frame indices of the trace the map was built from.
    pub frame_span: Range<usize>,
}

/// Builds the map for trace frames `window`, which must lie inside the
/// window the streams were sanitized over.
pub fn build_csi_map(
    streams: &SanitizedStreams,
    window: Range<usize>,
    receiver: &str,
) -> Result<CsiMap> {
    if window.len() != MAP_FRAMES {
        return Err(Error::Window {
            window,
            msg: format!("a CSI map spans exactly {MAP_FRAMES} frames"),
        });
    }
    if window.start < streams.window.start || window.end > streams.window.end {
        return Err(Error::Window {
            window,
            msg: format!("outside the sanitized frames {:?}", streams.window),
        });
    }
    let local = window.start - streams.window.start..window.end - streams.window.start;
    let component = pca_second_component(&streams.amp_first, &streams.amp_ref, local.clone())?;
    let amp_channel = min_max_normalize(&dwt_features(&component)?);
    let phase: Vec<Vec<f64>> = streams
        .rel_phase
        .iter()
        .map(|s| s[local.clone()].to_vec())
        .collect();
    Ok(CsiMap {
        amp_channel,
        phase_channel: min_max_normalize(&phase),
        source_receiver: receiver.to_string(),
        frame_span: window,
    })
}

/// Network input: two synchronized receivers' maps stacked channel-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct NetInput {
    tensor: Tensor3,
}

impl NetInput {
    pub fn from_tensor(tensor: Tensor3) -> Result<Self> {
        tensor.expect_dims("input", (SUBCARRIERS, MAP_FRAMES, INPUT_CHANNELS))?;
        if tensor.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("network input entries must lie in [0, 1]".into()));
        }
        Ok(Self { tensor })
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.tensor
    }
}

/// Channel order `[rx1 amplitude, rx1 phase, rx2 amplitude, rx2 phase]`.
pub fn stack_receivers(rx1: &CsiMap, rx2: &CsiMap) -> Result<NetInput> {
    if rx1.frame_span != rx2.frame_span {
        return Err(Error::Unsynchronized(
            rx1.frame_span.clone(),
            rx2.frame_span.clone(),
        ));
    }
    let channels = [
        &rx1.amp_channel,
        &rx1.phase_channel,
        &rx2.amp_channel,
        &rx2.phase_channel,
    ];
    let mut t = Tensor3::zeros(SUBCARRIERS, MAP_FRAMES, INPUT_CHANNELS);
    for (ch, rows) in channels.iter().enumerate() {
        if rows.len() != SUBCARRIERS || rows.iter().any(|r| r.len() != MAP_FRAMES) {
            return Err(Error::Shape {
                layer: format!("stack channel {ch}"),
                expected: format!("{SUBCARRIERS}x{MAP_FRAMES}"),
                got: format!("{}x{}", rows.len(), rows.first().map_or(0, Vec::len)),
            });
        }
        for (y, row) in rows.iter().enumerate() {
            for (x, v) in row.iter().enumerate() {
                t.set(y, x, ch, *v);
            }
        }
    }
    NetInput::from_tensor(t)
}
