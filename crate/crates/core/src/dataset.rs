//! Paired (network input, pose figure) samples from simulated two-receiver
//! captures.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csi::CsiTrace;
use crate::error::{Error, Result};
use crate::features::{build_csi_map, map_window, stack_receivers, CsiMap, NetInput, FRAMES_PER_FIGURE};
use crate::figure::PoseFigure;
use crate::sanitize::sanitize;
use crate::sim::{
    render_skeleton, simulate, GroundTruth, MovingReflector, PhaseOffset, Scenario, StaticPath,
    POSE_CARRIER_HZ, ROOM_DEPTH_M, ROOM_WIDTH_M,
};

/// Independent seed for a named stage of a run.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a of the label picks the stream
    let stream = label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

const TX_XY: [f64; 2] = [0.0, ROOM_DEPTH_M / 2.0];
/// Receivers on perpendicular walls: across the room from the transmitter
/// and at the middle of the far wall.
const RX_XY: [[f64; 2]; 2] = [[ROOM_WIDTH_M, ROOM_DEPTH_M / 2.0], [ROOM_WIDTH_M / 2.0, ROOM_DEPTH_M]];

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// The two receivers' scenarios for one person walking back and forth.
pub fn walking_scenarios(seed: u64, duration_s: f64) -> [Scenario; 2] {
    std::array::from_fn(|r| {
        let rx = RX_XY[r];
        let los = dist(TX_XY, rx);
        let mut s = Scenario::line_of_sight(duration_s, los);
        s.carrier_hz = POSE_CARRIER_HZ;
        s.static_paths.push(StaticPath {
            length_m: los + 3.7,
            attenuation: 0.35,
            aoa_deg: 25.0,
        });
        s.reflectors.push(MovingReflector {
            start_xy_m: [1.2, 1.5],
            end_xy_m: [5.8, 6.5],
            speed_mps: 0.9,
            attenuation: 0.4,
            tx_xy_m: TX_XY,
            rx_xy_m: rx,
        });
        s.noise_snr_db = Some(25.0);
        s.phase_offset = PhaseOffset::PerPacketRandom;
        s.seed = derive_seed(seed, &format!("rx{}", r + 1));
        s.label = format!("walk rx{}", r + 1);
        s
    })
}

/// First figure index whose map window lies inside the trace.
pub const FIRST_FIGURE: usize = 3;

/// One synchronized sample: the stacked maps and the figure of frame
/// `5k`, where `k` is the figure index.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSample {
    pub figure_index: usize,
    pub maps: [CsiMap; 2],
    pub input: NetInput,
    pub figure: PoseFigure,
}

/// Stacked maps for one figure index, without an annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseInput {
    pub figure_index: usize,
    pub maps: [CsiMap; 2],
    pub input: NetInput,
}

/// Builds the network input of every `stride`-th figure (starting at the
/// first one with a full map window) from two synchronized receivers.
pub fn pose_inputs(rx1: &CsiTrace, rx2: &CsiTrace, stride: usize) -> Result<Vec<PoseInput>> {
    if rx1.len() != rx2.len() {
        return Err(Error::InvalidArgument(format!(
            "receivers have {} and {} frames",
            rx1.len(),
            rx2.len()
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let n = rx1.len();
    let s1 = sanitize(rx1, 0..n)?;
    let s2 = sanitize(rx2, 0..n)?;
    let mut out = Vec::new();
    let mut k = FIRST_FIGURE;
    while let Some(window) = map_window(k).filter(|w| w.end <= n) {
        if (k - FIRST_FIGURE) % stride == 0 {
            let m1 = build_csi_map(&s1, window.clone(), "rx1")?;
            let m2 = build_csi_map(&s2, window, "rx2")?;
            let input = stack_receivers(&m1, &m2)?;
            out.push(PoseInput {
                figure_index: k,
                maps: [m1, m2],
                input,
            });
        }
        k += 1;
    }
    Ok(out)
}

/// [`pose_inputs`] paired with the ground-truth figure of frame `5k`.
pub fn pose_samples(
    rx1: &CsiTrace,
    rx2: &CsiTrace,
    truth: &GroundTruth,
    stride: usize,
) -> Result<Vec<PoseSample>> {
    if truth.skeleton_params.len() != rx1.len() {
        return Err(Error::InvalidArgument(format!(
            "ground truth has {} frames, receivers {}",
            truth.skeleton_params.len(),
            rx1.len()
        )));
    }
    pose_inputs(rx1, rx2, stride)?
        .into_iter()
        .map(|p| {
            let figure = render_skeleton(&truth.skeleton_params[FRAMES_PER_FIGURE * p.figure_index])?;
            Ok(PoseSample {
                figure_index: p.figure_index,
                maps: p.maps,
                input: p.input,
                figure,
            })
        })
        .collect()
}

/// Simulates a walk and returns `count` samples spaced `stride` figures apart.
pub fn simulated_pose_pairs(
    seed: u64,
    count: usize,
    stride: usize,
) -> Result<Vec<(NetInput, PoseFigure)>> {
    let figures = FIRST_FIGURE + count.saturating_sub(1) * stride + 1;
    let duration_s = (figures * FRAMES_PER_FIGURE) as f64 / crate::sim::DEFAULT_SAMPLE_RATE_HZ;
    let [a, b] = walking_scenarios(seed, duration_s);
    let (t1, truth) = simulate(&a)?;
    let (t2, _) = simulate(&b)?;
    let samples = pose_samples(&t1, &t2, &truth, stride)?;
    Ok(samples
        .into_iter()
        .take(count)
        .map(|s| (s.input, s.figure))
        .collect())
}
