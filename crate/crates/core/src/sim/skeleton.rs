//! Synthetic stick-figure annotations standing in for camera skeletons.

use super::scenario::MovingReflector;
use crate::error::{Error, Result};
use crate::figure::{PoseFigure, FIGURE_COLS, FIGURE_ROWS};

/// Room extent used for the figure-space projection (x across, y in depth).
pub const ROOM_WIDTH_M: f64 = 7.0;
pub const ROOM_DEPTH_M: f64 = 8.0;

/// A stick segment in figure coordinates `[row, col]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub from: [f64; 2],
    pub to: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkeletonParams {
    pub segments: Vec<Segment>,
}

/// Five-segment figure (torso, two arms, two legs) for a person at room
/// position `xy`. Depth sets the figure height, lateral position sets the
/// column, and limbs swing with the distance walked.
pub fn skeleton_for_position(xy: [f64; 2], t: f64, reflector: &MovingReflector) -> SkeletonParams {
    let lateral = (xy[0] / ROOM_WIDTH_M).clamp(0.0, 1.0);
    let depth = (xy[1] / ROOM_DEPTH_M).clamp(0.0, 1.0);
    let height = 90.0 - 40.0 * depth;
    let col = 30.0 + 100.0 * lateral;
    let top = 60.0 - height / 2.0;
    let hip = top + 0.45 * height;
    let shoulder = top + 0.12 * height;

    let gait = std::f64::consts::TAU * reflector.speed_mps * t / 1.2;
    let arm = (35.0 + 25.0 * gait.sin()).to_radians();
    let leg = (15.0 + 10.0 * gait.sin()).to_radians();
    let arm_len = 0.32 * height;
    let leg_len = 0.55 * height;

    let limb = |origin: [f64; 2], angle: f64, len: f64, side: f64| Segment {
        from: origin,
        to: [origin[0] + len * angle.cos(), origin[1] + side * len * angle.sin()],
    };
    SkeletonParams {
        segments: vec![
            Segment {
                from: [top, col],
                to: [hip, col],
            },
            limb([shoulder, col], arm, arm_len, -1.0),
            limb([shoulder, col], arm, arm_len, 1.0),
            limb([hip, col], leg, leg_len, -1.0),
            limb([hip, col], leg, leg_len, 1.0),
        ],
    }
}

fn in_bounds(p: [f64; 2]) -> bool {
    p.iter().all(|c| c.is_finite())
        && (0.0..=(FIGURE_ROWS - 1) as f64).contains(&p[0])
        && (0.0..=(FIGURE_COLS - 1) as f64).contains(&p[1])
}

/// Rasterizes the segments onto a black canvas with anti-aliased lines of
/// one pixel nominal width. Overlapping strokes keep the brighter value.
pub fn render_skeleton(params: &SkeletonParams) -> Result<PoseFigure> {
    let mut fig = PoseFigure::zeros();
    for (i, seg) in params.segments.iter().enumerate() {
        if !in_bounds(seg.from) || !in_bounds(seg.to) {
            return Err(Error::InvalidArgument(format!(
                "segment {i} endpoint outside the {FIGURE_ROWS}x{FIGURE_COLS} figure"
            )));
        }
        draw_line(&mut fig, seg.from, seg.to);
    }
    Ok(fig)
}

fn plot(fig: &mut PoseFigure, row: isize, col: isize, value: f64) {
    if value > 0.0
        && (0..FIGURE_ROWS as isize).contains(&row)
        && (0..FIGURE_COLS as isize).contains(&col)
    {
        fig.brighten(row as usize, col as usize, value);
    }
}

/// Wu-style line: one sample per step along the major axis, split between
/// the two nearest pixels on the minor axis.
fn draw_line(fig: &mut PoseFigure, from: [f64; 2], to: [f64; 2]) {
    let (dr, dc) = (to[0] - from[0], to[1] - from[1]);
    let steep = dr.abs() > dc.abs();
    // (major, minor) coordinates
    let (mut a0, mut b0, mut a1, mut b1) = if steep {
        (from[0], from[1], to[0], to[1])
    } else {
        (from[1], from[0], to[1], to[0])
    };
    if a0 > a1 {
        std::mem::swap(&mut a0, &mut a1);
        std::mem::swap(&mut b0, &mut b1);
    }
    let gradient = if a1 > a0 { (b1 - b0) / (a1 - a0) } else { 0.0 };
    let start = a0.round() as isize;
    let end = a1.round() as isize;
    for major in start..=end {
        let minor = b0 + gradient * (major as f64 - a0);
        let base = minor.floor();
        let frac = minor - base;
        let base = base as isize;
        for (m, w) in [(base, 1.0 - frac), (base + 1, frac)] {
            if steep {
                plot(fig, major, m, w);
            } else {
                plot(fig, m, major, w);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nonzero(fig: &PoseFigure) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..FIGURE_ROWS {
            for c in 0..FIGURE_COLS {
                if fig.get(r, c) > 0.0 {
                    out.push((r, c));
                }
            }
        }
        out
    }

    #[test]
    fn empty_params_render_black() {
        let fig = render_skeleton(&SkeletonParams::default()).unwrap();
        assert!(fig.pixels().iter().all(|p| *p == 0.0));
    }

    #[test]
    fn single_point_stays_local() {
        let p = SkeletonParams {
            segments: vec![Segment {
                from: [60.0, 80.0],
                to: [60.0, 80.0],
            }],
        };
        let fig = render_skeleton(&p).unwrap();
        let lit = nonzero(&fig);
        assert!(!lit.is_empty());
        assert!(lit.iter().all(|&(r, c)| r.abs_diff(60) <= 1 && c.abs_diff(80) <= 1));
        assert_eq!(fig.get(60, 80), 1.0);
    }

    #[test]
    fn horizontal_segment_matches_line_oracle() {
        let p = SkeletonParams {
            segments: vec![Segment {
                from: [60.0, 40.0],
                to: [60.0, 120.0],
            }],
        };
        let fig = render_skeleton(&p).unwrap();
        // oracle: exactly the columns 40..=120 on row 60, nothing else
        let expected: Vec<(usize, usize)> = (40..=120).map(|c| (60, c)).collect();
        assert_eq!(nonzero(&fig), expected);
        assert!(expected.iter().all(|&(r, c)| fig.get(r, c) == 1.0));
    }

    #[test]
    fn diagonal_line_intensity_sums_to_one_per_column() {
        let p = SkeletonParams {
            segments: vec![Segment {
                from: [10.3, 10.0],
                to: [40.9, 70.0],
            }],
        };
        let fig = render_skeleton(&p).unwrap();
        for c in 10..=70 {
            let col_sum: f64 = (0..FIGURE_ROWS).map(|r| fig.get(r, c)).sum();
            assert!((col_sum - 1.0).abs() < 1e-12, "column {c}: {col_sum}");
        }
    }

    #[test]
    fn out_of_bounds_is_rejected() {
        let p = SkeletonParams {
            segments: vec![Segment {
                from: [0.0, 0.0],
                to: [120.0, 10.0],
            }],
        };
        assert!(render_skeleton(&p).is_err());
    }

    #[test]
    fn generated_skeletons_fit_the_canvas() {
        let r = MovingReflector {
            start_xy_m: [0.0, 0.0],
            end_xy_m: [7.0, 8.0],
            speed_mps: 1.0,
            attenuation: 0.5,
            tx_xy_m: [0.0, 4.0],
            rx_xy_m: [7.0, 4.0],
        };
        for i in 0..200 {
            let t = i as f64 * 0.1;
            let sk = skeleton_for_position(r.position_at(t), t, &r);
            assert_eq!(sk.segments.len(), 5);
            let fig = render_skeleton(&sk).unwrap();
            assert!(fig.pixels().iter().any(|p| *p > 0.5));
        }
    }
}
