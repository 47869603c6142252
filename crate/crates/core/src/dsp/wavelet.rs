//! Orthogonal Daubechies-4 (eight-tap) wavelet transform with periodic
//! extension.

use crate::error::{Error, Result};

/// db4 scaling (low-pass) filter, normalized so the taps sum to √2.
pub const DB4_LOWPASS: [f64; 8] = [
    0.230_377_813_308_896_504_22,
    0.714_846_570_552_915_647_31,
    0.630_880_767_929_858_906_18,
    -0.027_983_769_416_859_856_678,
    -0.187_034_811_719_093_084_3,
    0.030_841_381_835_560_764_539,
    0.032_883_011_666_885_199_807,
    -0.010_597_401_785_069_032_279,
];

/// Quadrature-mirror high-pass filter: `g[n] = (-1)^n h[L-1-n]`.
pub fn db4_highpass() -> [f64; 8] {
    std::array::from_fn(|n| {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sign * DB4_LOWPASS[7 - n]
    })
}

/// One analysis level: `approx[k] = Σ h[n]·x[(2k+n) mod N]`, likewise for
/// the detail band with the high-pass filter.
pub fn dwt_step(signal: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = signal.len();
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "wavelet step needs a nonzero even length, got {n}"
        )));
    }
    let g = db4_highpass();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (tap, (hl, hh)) in DB4_LOWPASS.iter().zip(&g).enumerate() {
            let x = signal[(2 * k + tap) % n];
            a += hl * x;
            d += hh * x;
        }
        approx[k] = a;
        detail[k] = d;
    }
    Ok((approx, detail))
}

/// Inverse of [`dwt_step`].
pub fn idwt_step(approx: &[f64], detail: &[f64]) -> Result<Vec<f64>> {
    if approx.len() != detail.len() || approx.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "band lengths {} and {} must match and be nonzero",
            approx.len(),
            detail.len()
        )));
    }
    let n = 2 * approx.len();
    let g = db4_highpass();
    let mut out = vec![0.0; n];
    for (k, (a, d)) in approx.iter().zip(detail).enumerate() {
        for (tap, (hl, hh)) in DB4_LOWPASS.iter().zip(&g).enumerate() {
            out[(2 * k + tap) % n] += hl * a + hh * d;
        }
    }
    Ok(out)
}

/// Projection onto the level-`levels` approximation space: decompose,
/// zero every detail band, reconstruct.
///
/// The length must be divisible by `2^levels`.
pub fn approximation_projection(signal: &[f64], levels: usize) -> Result<Vec<f64>> {
    let block = 1usize << levels;
    if signal.is_empty() || signal.len() % block != 0 {
        return Err(Error::InvalidArgument(format!(
            "length {} is not a positive multiple of 2^{levels}",
            signal.len()
        )));
    }
    let mut approx = signal.to_vec();
    for _ in 0..levels {
        approx = dwt_step(&approx)?.0;
    }
    for _ in 0..levels {
        let zeros = vec![0.0; approx.len()];
        approx = idwt_step(&approx, &zeros)?;
    }
    Ok(approx)
}

/// Approximation projection averaged over every circular shift of the
/// input, so the result does not depend on where the dyadic grid falls.
///
/// This is linear and shift-invariant: a sinusoid that is periodic in the
/// length comes out as the same sinusoid scaled by the cascaded low-pass
/// power response.
pub fn shift_invariant_approximation(signal: &[f64], levels: usize) -> Result<Vec<f64>> {
    let n = signal.len();
    let block = 1usize << levels;
    let mut sum = vec![0.0; n];
    let mut rotated = signal.to_vec();
    for shift in 0..block.min(n.max(1)) {
        if shift > 0 {
            rotated.rotate_left(1);
        }
        let p = approximation_projection(&rotated, levels)?;
        for (i, v) in p.iter().enumerate() {
            sum[(i + shift) % n] += v;
        }
    }
    let count = block as f64;
    Ok(sum.into_iter().map(|v| v / count).collect())
}
