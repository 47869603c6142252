//! Multipath channel frequency response and trace synthesis.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::scenario::{ChestModel, MovingReflector, PhaseOffset, Scenario};
use super::skeleton::{skeleton_for_position, SkeletonParams};
use crate::csi::{CsiFrame, CsiTrace, SubcarrierRow, SUBCARRIERS};
use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Half-span of the reported subcarrier grid around the carrier.
pub const SUBCARRIER_HALF_SPAN_HZ: f64 = 9.0625e6;

/// Receive antennas per simulated NIC.
pub const SIM_ANTENNAS: usize = 3;

const PHASE_STREAM_BIT: u64 = 1 << 63;

/// Response of one propagation path: `α·exp(-j2πf·L/c)`.
pub fn path_response(length_m: f64, attenuation: f64, freq_hz: f64) -> Result<Complex64> {
    if !(length_m.is_finite() && length_m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "path length {length_m} must be positive"
        )));
    }
    if !(attenuation.is_finite() && attenuation >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "attenuation {attenuation} must be >= 0"
        )));
    }
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "frequency {freq_hz} must be positive"
        )));
    }
    Ok(response_unchecked(length_m, attenuation, freq_hz))
}

#[inline]
fn response_unchecked(length_m: f64, attenuation: f64, freq_hz: f64) -> Complex64 {
    let cycles = freq_hz * length_m / SPEED_OF_LIGHT;
    // reduce before scaling by 2π to keep the phase accurate for long paths
    let frac = cycles - cycles.round();
    Complex64::from_polar(attenuation, -std::f64::consts::TAU * frac)
}

/// Thirty uniformly spaced subcarrier frequencies spanning carrier ± 9.0625 MHz.
pub fn subcarrier_freqs(carrier_hz: f64) -> [f64; SUBCARRIERS] {
    let step = 2.0 * SUBCARRIER_HALF_SPAN_HZ / (SUBCARRIERS - 1) as f64;
    std::array::from_fn(|k| carrier_hz - SUBCARRIER_HALF_SPAN_HZ + step * k as f64)
}

/// Ground truth emitted alongside a simulated trace.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Chest displacement in metres per frame (all zero without a chest).
    pub chest_displacement: Vec<f64>,
    /// Per frame, the position of every moving reflector.
    pub reflector_xy: Vec<Vec<[f64; 2]>>,
    /// Per frame, the stick figure of the first reflector (empty without one).
    pub skeleton_params: Vec<SkeletonParams>,
    pub sample_rate_hz: f64,
}

/// Offset of receive element `antenna` along the array axis, in metres.
/// Elements sit λ/2 apart, centred on the nominal receiver position.
fn element_offset(antenna: usize, carrier_hz: f64) -> f64 {
    let half_wavelength = 0.5 * SPEED_OF_LIGHT / carrier_hz;
    (antenna as f64 - 1.0) * half_wavelength
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl MovingReflector {
    /// Position at time `t`: constant-speed motion that bounces between the
    /// two endpoints.
    pub fn position_at(&self, t: f64) -> [f64; 2] {
        let span = dist(self.start_xy_m, self.end_xy_m);
        if span == 0.0 || self.speed_mps == 0.0 {
            return self.start_xy_m;
        }
        let travelled = (self.speed_mps * t).rem_euclid(2.0 * span);
        let s = if travelled <= span {
            travelled
        } else {
            2.0 * span - travelled
        } / span;
        [
            self.start_xy_m[0] + s * (self.end_xy_m[0] - self.start_xy_m[0]),
            self.start_xy_m[1] + s * (self.end_xy_m[1] - self.start_xy_m[1]),
        ]
    }

    /// Bistatic path length tx → reflector → receive element. The array
    /// axis is the y axis.
    pub fn path_length(&self, position: [f64; 2], antenna: usize, carrier_hz: f64) -> f64 {
        let rx = [
            self.rx_xy_m[0],
            self.rx_xy_m[1] + element_offset(antenna, carrier_hz),
        ];
        dist(self.tx_xy_m, position) + dist(position, rx)
    }
}

impl ChestModel {
    /// Breathing time elapsed by `t`: wall time minus time spent holding breath.
    fn breathing_time(&self, t: f64) -> f64 {
        let held: f64 = self
            .apnea_intervals
            .iter()
            .map(|[start, end]| (t.min(*end) - start).max(0.0))
            .sum();
        t - held
    }

    /// Chest displacement at `t`; constant during apnea and continuous at both
    /// ends of every breath hold.
    pub fn displacement_at(&self, t: f64) -> f64 {
        let tau = self.breathing_time(t);
        self.displacement_amp_m
            * (std::f64::consts::TAU * self.rate_bpm / 60.0 * tau + self.phase_rad).sin()
    }
}

fn aoa_offset(aoa_deg: f64, antenna: usize, carrier_hz: f64) -> f64 {
    element_offset(antenna, carrier_hz) * aoa_deg.to_radians().sin()
}

fn static_response(scenario: &Scenario, freqs: &[f64; SUBCARRIERS]) -> Vec<SubcarrierRow> {
    (0..SIM_ANTENNAS)
        .map(|a| {
            std::array::from_fn(|k| {
                scenario
                    .static_paths
                    .iter()
                    .map(|p| {
                        let len = p.length_m + aoa_offset(p.aoa_deg, a, scenario.carrier_hz);
                        response_unchecked(len, p.attenuation, freqs[k])
                    })
                    .sum()
            })
        })
        .collect()
}

/// Synthesizes a three-antenna trace from the scenario's multipath model.
///
/// Every frame draws its noise and phase offset from ChaCha streams keyed by
/// `(seed, frame index)`, so frames are independent of evaluation order and
/// toggling the phase offset leaves the noise untouched.
pub fn simulate(scenario: &Scenario) -> Result<(CsiTrace, GroundTruth)> {
    scenario.validate()?;
    let n = scenario.frame_count();
    let freqs = subcarrier_freqs(scenario.carrier_hz);
    let fs = scenario.sample_rate_hz;
    let carrier = scenario.carrier_hz;

    let static_rows = static_response(scenario, &freqs);
    let noise_sigma = scenario.noise_snr_db.map(|snr_db| {
        let static_power = static_rows
            .iter()
            .flatten()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            / (SIM_ANTENNAS * SUBCARRIERS) as f64;
        // per real component
        (static_power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt()
    });
    let base_rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let mut frames = Vec::with_capacity(n);
    let mut truth = GroundTruth {
        chest_displacement: Vec::with_capacity(n),
        reflector_xy: Vec::with_capacity(n),
        skeleton_params: Vec::with_capacity(n),
        sample_rate_hz: fs,
    };
    // (length, attenuation) of each dynamic path for each antenna, reused per frame
    let mut dynamic: Vec<Vec<(f64, f64)>> = vec![Vec::new(); SIM_ANTENNAS];

    for i in 0..n {
        let t = i as f64 / fs;
        for d in dynamic.iter_mut() {
            d.clear();
        }
        let positions: Vec<[f64; 2]> = scenario
            .reflectors
            .iter()
            .map(|r| r.position_at(t))
            .collect();
        for (r, pos) in scenario.reflectors.iter().zip(&positions) {
            for (a, d) in dynamic.iter_mut().enumerate() {
                d.push((r.path_length(*pos, a, carrier), r.attenuation));
            }
        }
        let displacement = scenario.chest.as_ref().map_or(0.0, |c| c.displacement_at(t));
        if let Some(chest) = &scenario.chest {
            for (a, d) in dynamic.iter_mut().enumerate() {
                let len = chest.base_path_length_m
                    + aoa_offset(chest.aoa_deg, a, carrier)
                    + displacement;
                d.push((len, chest.attenuation));
            }
        }

        let mut noise_rng = base_rng.clone();
        noise_rng.set_stream(i as u64);
        let offset = match scenario.phase_offset {
            PhaseOffset::None => Complex64::new(1.0, 0.0),
            PhaseOffset::PerPacketRandom => {
                let mut phase_rng = base_rng.clone();
                phase_rng.set_stream(i as u64 | PHASE_STREAM_BIT);
                let theta: f64 = phase_rng.random_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(1.0, theta)
            }
        };

        let rows: Vec<SubcarrierRow> = (0..SIM_ANTENNAS)
            .map(|a| {
                let mut row = static_rows[a];
                for (k, v) in row.iter_mut().enumerate() {
                    for &(len, att) in &dynamic[a] {
                        *v += response_unchecked(len, att, freqs[k]);
                    }
                }
                if let Some(sigma) = noise_sigma {
                    for v in row.iter_mut() {
                        let re: f64 = noise_rng.sample(StandardNormal);
                        let im: f64 = noise_rng.sample(StandardNormal);
                        *v += Complex64::new(sigma * re, sigma * im);
                    }
                }
                for v in row.iter_mut() {
                    *v *= offset;
                }
                row
            })
            .collect();
        let timestamp_us = (i as f64 * 1e6 / fs).round() as u64;
        frames.push(CsiFrame::new(timestamp_us, rows)?);

        truth.chest_displacement.push(displacement);
        truth.skeleton_params.push(
            positions
                .first()
                .map(|p| skeleton_for_position(*p, t, &scenario.reflectors[0]))
                .unwrap_or_default(),
        );
        truth.reflector_xy.push(positions);
    }

    let trace = CsiTrace::new(frames, fs, carrier, scenario.label.clone())?;
    Ok((trace, truth))
}
