//! Summaries used by the Monte Carlo harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairwise summation; the result depends only on the order of `x`.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Mean and standard error of the mean.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = pairwise_sum(x) / n;
    if x.len() < 2 {
        return (m, f64::NAN);
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (m, (var / n).sqrt())
}

/// One grid point of a rate experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Log-log slope of `estimate` against `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub points: Vec<GridPoint>,
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
}

/// Ordinary least squares of `ln estimate` on `ln x`.
///
/// The slope standard error is the larger of the residual-based value and
/// the one propagated from the per-point standard errors,
/// `sqrt(Σ w_i² (se_i/estimate_i)²)` with `w_i` the OLS slope weights.
pub fn loglog_slope(points: Vec<GridPoint>) -> Result<SlopeReport> {
    if points.len() < 2 {
        return Err(Error::Argument("slope needs at least two grid points".into()));
    }
    for p in &points {
        if !(p.x > 0.0 && p.estimate > 0.0) {
            return Err(Error::Estimation(format!(
                "cannot take logs at grid point x={} estimate={}",
                p.x, p.estimate
            )));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.estimate.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let propagated = points
        .iter()
        .zip(&xs)
        .map(|(p, x)| {
            let rel = if p.stderr.is_finite() { p.stderr / p.estimate } else { 0.0 };
            ((x - mx) / sxx * rel).powi(2)
        })
        .sum::<f64>()
        .sqrt();
    let residual = if points.len() > 2 {
        let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeReport { points, slope, slope_se: propagated.max(residual), intercept })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&x), 499_500.0);
    }

    #[test]
    fn mean_se_small() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_power_law() {
        let pts = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x: &f64| GridPoint { x, estimate: 3.0 * x.powf(-0.7), stderr: 0.01 })
            .collect();
        let r = loglog_slope(pts).unwrap();
        assert!((r.slope + 0.7).abs() < 1e-12);
        assert!((r.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive() {
        let pts = vec![
            GridPoint { x: 1.0, estimate: 0.0, stderr: 0.1 },
            GridPoint { x: 2.0, estimate: 1.0, stderr: 0.1 },
        ];
        assert!(loglog_slope(pts).is_err());
    }
}
