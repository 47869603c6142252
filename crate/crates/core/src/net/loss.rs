//! Per-pixel binary cross entropy.

use crate::figure::{PoseFigure, FIGURE_PIXELS};

/// Probability clamp keeping the logarithms finite.
pub const BCE_EPSILON: f64 = 1e-7;

/// `−(1/Q)·Σ [s·ln p + (1−s)·ln(1−p)]` with `p` clamped to `[ε, 1−ε]`.
pub fn bce_loss(prediction: &PoseFigure, target: &PoseFigure) -> f64 {
    bce_from_probs(prediction.pixels(), target.pixels())
}

pub(crate) fn bce_from_probs(p: &[f64], s: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), s.len());
    let sum: f64 = p
        .iter()
        .zip(s)
        .map(|(&p, &s)| {
            let p = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
            s * p.ln() + (1.0 - s) * (1.0 - p).ln()
        })
        .sum();
    -sum / FIGURE_PIXELS as f64
}

/// Gradient of [`bce_from_probs`] with respect to the pre-sigmoid logits.
/// Clamped pixels contribute nothing.
pub(crate) fn bce_logit_grad(p: &[f64], s: &[f64]) -> Vec<f64> {
    p.iter()
        .zip(s)
        .map(|(&p, &s)| {
            if (BCE_EPSILON..=1.0 - BCE_EPSILON).contains(&p) {
                (p - s) / FIGURE_PIXELS as f64
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_binary(rng: &mut ChaCha8Rng) -> PoseFigure {
        PoseFigure::from_pixels(
            (0..FIGURE_PIXELS)
                .map(|_| if rng.random_bool(0.1) { 1.0 } else { 0.0 })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_prediction_costs_ln2() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let half = PoseFigure::filled(0.5).unwrap();
        let l = bce_loss(&half, &random_binary(&mut rng));
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_binary(&mut rng);
        assert!(bce_loss(&s, &s) < 2e-6);
    }

    #[test]
    fn matches_per_pixel_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p: Vec<f64> = (0..FIGURE_PIXELS).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: Vec<f64> = (0..FIGURE_PIXELS).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut oracle = 0.0;
        for i in 0..FIGURE_PIXELS {
            let q = p[i].max(1e-7).min(1.0 - 1e-7);
            oracle -= s[i] * q.ln() + (1.0 - s[i]) * (1.0 - q).ln();
        }
        oracle /= 19200.0;
        let got = bce_loss(
            &PoseFigure::from_pixels(p).unwrap(),
            &PoseFigure::from_pixels(s).unwrap(),
        );
        assert!((got - oracle).abs() < 1e-12);
    }
}
