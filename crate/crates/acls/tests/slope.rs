use acls::fit_slope;
use proptest::prelude::*;

fn grid() -> Vec<f64> {
    (0..=40).map(|k| 10f64.powf(1.0 + k as f64 / 10.0)).collect()
}

#[test]
fn inverse_square_law() {
    let t = grid();
    let r: Vec<f64> = t.iter().map(|t| 7.5 / (t * t)).collect();
    let s = fit_slope(&t, &r, 10.0, 1e5).unwrap();
    assert!((s.slope + 2.0).abs() <= 1e-6);
    assert!((s.intercept - 7.5f64.ln()).abs() <= 1e-9);
}

#[test]
fn inverse_law() {
    let t = grid();
    let r: Vec<f64> = t.iter().map(|t| 0.3 / t).collect();
    let s = fit_slope(&t, &r, 100.0, 1000.0).unwrap();
    assert!((s.slope + 1.0).abs() <= 1e-9);
    assert_eq!(s.window, (100.0, 1000.0));
}

#[test]
fn empty_window_is_an_error() {
    let t = grid();
    let r = vec![1.0; t.len()];
    assert!(fit_slope(&t, &r, 2e6, 3e6).is_err());
}

/// Textbook normal-equation fit, for comparison.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

proptest! {
    #[test]
    fn matches_normal_equations(
        noise in proptest::collection::vec(-0.3f64..0.3, 41),
        p in -3.0f64..0.5,
        c in 0.01f64..100.0,
    ) {
        let t = grid();
        let r: Vec<f64> = t.iter().zip(&noise).map(|(t, e)| c * t.powf(p) * e.exp()).collect();
        let s = fit_slope(&t, &r, 0.0, f64::INFINITY).unwrap();
        let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = r.iter().map(|v| v.ln()).collect();
        let (slope, icpt) = ols(&lx, &ly);
        prop_assert!((s.slope - slope).abs() <= 1e-9 * (1.0 + slope.abs()));
        prop_assert!((s.intercept - icpt).abs() <= 1e-8 * (1.0 + icpt.abs()));
        prop_assert!((0.0..=1.0).contains(&s.r_squared_fit));
    }

    #[test]
    fn scale_free(p in -3.0f64..0.0, c in 1e-6f64..1e6, k in 1e-3f64..1e3) {
        let t = grid();
        let r1: Vec<f64> = t.iter().map(|t| c * t.powf(p)).collect();
        let r2: Vec<f64> = r1.iter().map(|v| v * k).collect();
        let a = fit_slope(&t, &r1, 10.0, 1e4).unwrap();
        let b = fit_slope(&t, &r2, 10.0, 1e4).unwrap();
        prop_assert!((a.slope - b.slope).abs() <= 1e-9);
        prop_assert!((b.intercept - a.intercept - k.ln()).abs() <= 1e-9);
    }
}
