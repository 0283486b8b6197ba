//! Coincidence weight: the probability that two uniform delays on `[0, T1]` and
//! `[0, T2]` land within `W` of each other.

use crate::error::{Error, Result};

fn check(t1: f64, t2: f64, window: f64) -> Result<()> {
    for (name, v) in [("T1", t1), ("T2", t2), ("W", window)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::invalid("weight", format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    Ok(())
}

/// Area of `{(x, y) in [0, a] x [0, b] : y - x > c}` for `c >= 0`.
fn corner_area(a: f64, b: f64, c: f64) -> f64 {
    let reach = b - c;
    if reach <= 0.0 {
        return 0.0;
    }
    let m = a.min(reach);
    m * (reach - 0.5 * m)
}

/// Closed-form weight; arguments are assumed valid.
pub(crate) fn band_weight(t1: f64, t2: f64, window: f64) -> f64 {
    match (t1 > 0.0, t2 > 0.0) {
        (false, false) => 1.0,
        // A zero timescale is a point mass at t = 0.
        (false, true) => window.min(t2) / t2,
        (true, false) => window.min(t1) / t1,
        (true, true) => {
            if window >= t1.max(t2) {
                return 1.0;
            }
            if window == 0.0 {
                return 0.0;
            }
            // Rectangle minus the two corner triangles cut off by |t2 - t1| = W.
            let outside = corner_area(t1, t2, window) + corner_area(t2, t1, window);
            let area = t1 * t2;
            ((area - outside) / area).clamp(0.0, 1.0)
        }
    }
}

/// Exact coincidence weight
/// `w = ∬ p(t1) p(t2) [|t2 - t1| <= W] dt1 dt2` for uniform delay densities.
pub fn weight_exact(t1: f64, t2: f64, window: f64) -> Result<f64> {
    check(t1, t2, window)?;
    Ok(band_weight(t1, t2, window))
}

/// Small-window approximation `2W ∫ p(t|T1) p(t|T2) dt = 2W / max(T1, T2)`, capped at 1.
pub fn weight_approx(t1: f64, t2: f64, window: f64) -> Result<f64> {
    check(t1, t2, window)?;
    let longest = t1.max(t2);
    if longest == 0.0 {
        return Err(Error::invalid("weight", "approximation undefined when both timescales are zero"));
    }
    Ok((2.0 * window / longest).min(1.0))
}

/// Grid quadrature of the weight, used only to validate [`weight_exact`].
///
/// Midpoint rule with `cells` nodes over `t1`; at each node the `t2` integral is
/// the exact length of `[t1 - W, t1 + W] ∩ [0, T2]`. Requires `T1, T2 > 0`.
pub fn weight_grid(t1: f64, t2: f64, window: f64, cells: usize) -> Result<f64> {
    check(t1, t2, window)?;
    if t1 == 0.0 || t2 == 0.0 || cells == 0 {
        return Err(Error::invalid("weight", "grid quadrature needs T1, T2 > 0 and cells > 0"));
    }
    let h = t1 / cells as f64;
    let sum: f64 = (0..cells)
        .map(|k| {
            let x = (k as f64 + 0.5) * h;
            let lo = (x - window).max(0.0);
            let hi = (x + window).min(t2);
            (hi - lo).max(0.0)
        })
        .sum();
    Ok(sum * h / (t1 * t2))
}
