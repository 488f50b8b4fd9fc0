//! Least-squares fit of `log err = c - a log n + b log log n`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{FrolovError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// `a` in `n^{-a}`.
    pub main_rate: f64,
    /// `b` in `(log n)^b`.
    pub log_exponent: f64,
    /// `c`, so `err ~ e^c n^{-a} (log n)^b`.
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

fn solve(design: DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = design.svd(true, true);
    svd.solve(y, 1e-12).map_err(|e| FrolovError::Domain(format!("least-squares solve failed: {e}")))
}

fn r_squared(design: &DMatrix<f64>, beta: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let resid = y - design * beta;
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res = resid.norm_squared();
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

fn usable(data: &[(f64, f64)]) -> Vec<(f64, f64)> {
    data.iter().copied().filter(|&(n, e)| n > 1.0 && e > 0.0 && e.is_finite()).collect()
}

/// Fits main rate and log exponent jointly. Needs three usable pairs `(n, err)`
/// with `n > e` and `err > 0`.
pub fn fit_rate(data: &[(f64, f64)]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = usable(data).into_iter().filter(|&(n, _)| n.ln() > 1.0).collect();
    if pts.len() < 3 {
        return Err(FrolovError::Domain(format!("rate fit needs at least 3 usable points, got {}", pts.len())));
    }
    let design = DMatrix::from_fn(pts.len(), 3, |i, j| {
        let ln = pts[i].0.ln();
        match j {
            0 => 1.0,
            1 => -ln,
            _ => ln.ln(),
        }
    });
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1.ln()));
    let beta = solve(design.clone(), &y)?;
    Ok(RateFit {
        main_rate: beta[1],
        log_exponent: beta[2],
        intercept: beta[0],
        r_squared: r_squared(&design, &beta, &y),
        points_used: pts.len(),
    })
}

/// Fits the main rate with the log exponent held at `log_exponent`.
pub fn fit_rate_fixed_log(data: &[(f64, f64)], log_exponent: f64) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = usable(data).into_iter().filter(|&(n, _)| n.ln() > 1.0).collect();
    if pts.len() < 2 {
        return Err(FrolovError::Domain(format!("rate fit needs at least 2 usable points, got {}", pts.len())));
    }
    let design = DMatrix::from_fn(pts.len(), 2, |i, j| if j == 0 { 1.0 } else { -pts[i].0.ln() });
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|&(n, e)| e.ln() - log_exponent * n.ln().ln()));
    let beta = solve(design.clone(), &y)?;
    Ok(RateFit {
        main_rate: beta[1],
        log_exponent,
        intercept: beta[0],
        r_squared: r_squared(&design, &beta, &y),
        points_used: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(c: f64, s: f64, beta: f64) -> Vec<(f64, f64)> {
        (8..=20).map(|k| 2f64.powi(k)).map(|n| (n, c * n.powf(-s) * n.ln().powf(beta))).collect()
    }

    #[test]
    fn recovers_synthetic_exponents() {
        for (s, beta) in [(2.0, 1.0), (0.4, 1.2), (1.0, 0.0)] {
            let fit = fit_rate(&synthetic(3.5, s, beta)).unwrap();
            assert!((fit.main_rate - s).abs() < 1e-9, "{fit:?}");
            assert!((fit.log_exponent - beta).abs() < 1e-9, "{fit:?}");
            assert!((fit.intercept - 3.5f64.ln()).abs() < 1e-8);
            assert!(fit.r_squared > 1.0 - 1e-12);
        }
    }

    #[test]
    fn fixed_log_recovers_rate() {
        let fit = fit_rate_fixed_log(&synthetic(0.1, 2.0, 1.0), 1.0).unwrap();
        assert!((fit.main_rate - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_errors_are_dropped() {
        let mut data = synthetic(1.0, 1.0, 0.0);
        data.push((1e7, 0.0));
        assert_eq!(fit_rate(&data).unwrap().points_used, 13);
        assert!(fit_rate(&data[..2]).is_err());
    }
}
