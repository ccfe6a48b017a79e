//! Log-log rate estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest points a window may hold.
pub const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub window: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
    pub r_squared_fit: f64,
}

/// Ordinary least squares of `ln risk` on `ln t` over the points with
/// `lo ≤ t ≤ hi`.
pub fn fit_slope(t: &[f64], risk: &[f64], lo: f64, hi: f64) -> Result<SlopeEstimate> {
    assert_eq!(t.len(), risk.len(), "curve columns differ in length");
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&ti, &ri) in t.iter().zip(risk) {
        if ti < lo || ti > hi {
            continue;
        }
        if !(ri > 0.0) || !ri.is_finite() {
            return Err(Error::NonPositiveRisk { t: ti, risk: ri });
        }
        if ti <= 0.0 {
            continue;
        }
        xs.push(ti.ln());
        ys.push(ri.ln());
    }
    if xs.len() < MIN_POINTS {
        return Err(Error::SparseWindow {
            lo,
            hi,
            found: xs.len(),
            needed: MIN_POINTS,
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(SlopeEstimate {
        window: (lo, hi),
        slope,
        intercept,
        r_squared_fit: r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let t: Vec<f64> = (1..=40).map(|k| (k * 25) as f64).collect();
        let r: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(-1.5)).collect();
        let s = fit_slope(&t, &r, 100.0, 1000.0).unwrap();
        assert!((s.slope + 1.5).abs() < 1e-12);
        assert!((s.intercept - 3f64.ln()).abs() < 1e-10);
        assert!((s.r_squared_fit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_thin_windows_and_zero_risk() {
        let t = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let r = [1.0, 0.5, 0.3, 0.25, 0.2, 0.0];
        assert!(matches!(fit_slope(&t, &r, 1.0, 3.0), Err(Error::SparseWindow { found: 3, .. })));
        assert!(matches!(fit_slope(&t, &r, 1.0, 6.0), Err(Error::NonPositiveRisk { .. })));
    }
}
