//! Rolling-median Hampel filter.
//!
//! The window around sample `i` is `[i - w, i + w]` truncated at the series
//! edges. A sample is replaced by the window median when it deviates from
//! it by more than `threshold · 1.4826 · MAD`.
//!
//! The sorted window is maintained incrementally; the MAD is read off it as
//! an order statistic of two monotone distance sequences (below and above
//! the median), so each step costs one insertion, one removal and a pair of
//! binary searches.

use crate::error::{Error, Result};

/// Scale turning a MAD into a consistent estimate of a Gaussian σ.
pub const MAD_SCALE: f64 = 1.4826;

/// Median of an ascending slice. Even lengths average the middle pair.
pub(crate) fn sorted_median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        (sorted[m / 2 - 1] + sorted[m / 2]) / 2.0
    }
}

/// k-th smallest (0-based) of the union of two ascending sequences.
fn kth_of_two(a: impl Fn(usize) -> f64, la: usize, b: impl Fn(usize) -> f64, lb: usize, k: usize) -> f64 {
    debug_assert!(k < la + lb);
    // take i elements from `a` and k + 1 - i from `b`
    let mut lo = (k + 1).saturating_sub(lb);
    let mut hi = (k + 1).min(la);
    while lo < hi {
        let i = (lo + hi) / 2;
        let j = k + 1 - i;
        if j > 0 && a(i) < b(j - 1) {
            lo = i + 1;
        } else {
            hi = i;
        }
    }
    let i = lo;
    let j = k + 1 - i;
    let from_a = if i > 0 { a(i - 1) } else { f64::NEG_INFINITY };
    let from_b = if j > 0 { b(j - 1) } else { f64::NEG_INFINITY };
    from_a.max(from_b)
}

/// Median absolute deviation of an ascending slice around `median`.
fn sorted_mad(sorted: &[f64], median: f64) -> f64 {
    let m = sorted.len();
    let split = sorted.partition_point(|&v| v < median);
    let below = |i: usize| median - sorted[split - 1 - i];
    let above = |j: usize| sorted[split + j] - median;
    let (lb, la) = (split, m - split);
    if m % 2 == 1 {
        kth_of_two(below, lb, above, la, m / 2)
    } else {
        let lo = kth_of_two(below, lb, above, la, m / 2 - 1);
        let hi = kth_of_two(below, lb, above, la, m / 2);
        (lo + hi) / 2.0
    }
}

fn insert_sorted(window: &mut Vec<f64>, v: f64) {
    let at = window.partition_point(|x| x.total_cmp(&v).is_lt());
    window.insert(at, v);
}

fn remove_sorted(window: &mut Vec<f64>, v: f64) {
    let at = window.partition_point(|x| x.total_cmp(&v).is_lt());
    debug_assert!(window[at].total_cmp(&v).is_eq());
    window.remove(at);
}

/// Rolling median and MAD for every sample.
pub fn rolling_median_mad(series: &[f64], half_window: usize) -> Vec<(f64, f64)> {
    let n = series.len();
    let mut window: Vec<f64> = Vec::with_capacity(2 * half_window + 1);
    for &v in &series[..(half_window + 1).min(n)] {
        insert_sorted(&mut window, v);
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            if let Some(enter) = series.get(i + half_window) {
                insert_sorted(&mut window, *enter);
            }
            if i > half_window {
                remove_sorted(&mut window, series[i - half_window - 1]);
            }
        }
        let med = sorted_median(&window);
        out.push((med, sorted_mad(&window, med)));
    }
    out
}

pub fn hampel(series: &[f64], half_window: usize, threshold: f64) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("hampel: empty series".into()));
    }
    if half_window < 1 {
        return Err(Error::InvalidArgument("hampel: window size must be >= 1".into()));
    }
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "hampel: threshold {threshold} must be >= 0"
        )));
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "hampel: non-finite sample at {i}"
        )));
    }
    Ok(series
        .iter()
        .zip(rolling_median_mad(series, half_window))
        .map(|(&x, (med, mad))| {
            if (x - med).abs() > threshold * MAD_SCALE * mad {
                med
            } else {
                x
            }
        })
        .collect())
}
