//! Percentage of correct skeletons.

use crate::error::{Error, Result};
use crate::figure::PoseFigure;

/// Euclidean distance between the binarized figures: the square root of the
/// number of differing pixels.
pub fn skeleton_distance(pred: &PoseFigure, gt: &PoseFigure) -> f64 {
    let differing = pred
        .binarize()
        .iter()
        .zip(gt.binarize())
        .filter(|(a, b)| **a != *b)
        .count();
    (differing as f64).sqrt()
}

/// Whether the prediction matches within `psi` (inclusive).
pub fn pcs(pred: &PoseFigure, gt: &PoseFigure, psi: f64) -> bool {
    skeleton_distance(pred, gt) <= psi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcsSummary {
    pub psi: f64,
    /// Percentage of predictions within `psi`.
    pub percent: f64,
    pub mean_distance: f64,
}

pub fn pcs_suite(preds: &[PoseFigure], gts: &[PoseFigure], psi: f64) -> Result<PcsSummary> {
    if preds.is_empty() || preds.len() != gts.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions against {} annotations",
            preds.len(),
            gts.len()
        )));
    }
    if !(psi.is_finite() && psi > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {psi} must be positive")));
    }
    let distances: Vec<f64> = preds.iter().zip(gts).map(|(p, g)| skeleton_distance(p, g)).collect();
    let passes = distances.iter().filter(|d| **d <= psi).count();
    Ok(PcsSummary {
        psi,
        percent: 100.0 * passes as f64 / distances.len() as f64,
        mean_distance: distances.iter().sum::<f64>() / distances.len() as f64,
    })
}
