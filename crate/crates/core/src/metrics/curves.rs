use num::{BigInt, BigRational, Zero};

use super::{exact_decimal, to_f64};

/// Trailing window used when smoothing learning curves.
pub const SMOOTHING_WINDOW: usize = 10;

/// Fraction of the plateau value that counts as saturated.
pub const SATURATION_FRACTION: f64 = 0.95;

/// Trailing flat-window mean; the window shrinks to the curve length and
/// early points average over what is available.
///
/// Window sums are exact over the values' decimal forms, so a constant
/// curve smooths to itself.
pub fn smooth_curve(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.min(values.len()).max(1);
    let exact: Vec<BigRational> = values
        .iter()
        .map(|&v| exact_decimal(v).unwrap_or_else(BigRational::zero))
        .collect();
    let mut sum = BigRational::zero();
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        sum += &exact[i];
        if i >= window {
            sum -= &exact[i - window];
        }
        let n = (i + 1).min(window);
        out.push(to_f64(&(&sum / BigInt::from(n))));
    }
    out
}

/// `(plateau value, 1-based experience to reach it)` of a smoothed curve.
///
/// The plateau is the curve maximum; saturation is the first point at or
/// above 95% of it, or, when the maximum is not positive, the first point
/// equal to it. `None` for an empty curve.
pub fn saturation(smoothed: &[f64]) -> Option<(f64, usize)> {
    if smoothed.is_empty() {
        return None;
    }
    let max = smoothed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let index = if max > 0.0 {
        let threshold = SATURATION_FRACTION * max;
        smoothed.iter().position(|&v| v >= threshold)
    } else {
        smoothed.iter().position(|&v| v == max)
    }?;
    Some((max, index + 1))
}

/// Trapezoidal area under a unit-spaced curve. A single point has the area
/// of its own value; an empty curve has none.
pub fn trapezoid_auc(values: &[f64]) -> f64 {
    match values {
        [] => 0.0,
        [only] => *only,
        _ => values.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum(),
    }
}
