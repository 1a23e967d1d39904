//! Periodogram and Whittle estimation of the memory parameter of F(d).

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraccoeff::{D_MAX, D_MIN};
use crate::predictor::SamplePath;

pub const DEFAULT_D_BOUNDS: (f64, f64) = (D_MIN, D_MAX);
const GRID_POINTS: usize = 50;
const GOLDEN_TOL: f64 = 1e-5;

/// `I_T(λ_j) = |Σ_t e^{itλ_j}(Y_t - Ȳ)|² / (2πT)` at `λ_j = 2πj/T`,
/// `j = 1..⌊T/2⌋`.
///
/// For even `T` the last entry is the Nyquist frequency `π`; the Whittle
/// objective uses only `j <= ⌊(T-1)/2⌋`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    pub t: usize,
    pub demeaned: bool,
}

impl Periodogram {
    /// Number of frequencies strictly inside `(0, π)`.
    pub fn interior_len(&self) -> usize {
        (self.t - 1) / 2
    }

    /// `(2π/T) Σ_{j=1}^{T-1} I_T(λ_j)`, which equals the demeaned `σ̂(0)`.
    pub fn parseval_sum(&self) -> f64 {
        let m = self.interior_len();
        let mut s = 2.0 * self.values[..m].iter().sum::<f64>();
        if self.t % 2 == 0 {
            s += self.values[m];
        }
        2.0 * PI / self.t as f64 * s
    }
}

pub fn periodogram(sample: &SamplePath) -> Result<Periodogram> {
    let t = sample.len();
    if t < 2 {
        return Err(Error::Argument(format!("periodogram needs at least 2 values, got {t}")));
    }
    let mean = sample.values.iter().sum::<f64>() / t as f64;
    let mut buf: Vec<Complex<f64>> = sample.values.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(t).process(&mut buf);
    let scale = 1.0 / (2.0 * PI * t as f64);
    let half = t / 2;
    let freqs = (1..=half).map(|j| 2.0 * PI * j as f64 / t as f64).collect();
    let values = (1..=half).map(|j| buf[j].norm_sqr() * scale).collect();
    Ok(Periodogram { freqs, values, t, demeaned: true })
}

/// Profiled Whittle objective and the matching innovation variance estimate.
///
/// With `g_d(λ) = (2 sin(λ/2))^{-2d}` over the `m` interior frequencies:
/// objective `ln((1/m) Σ I/g_d) + (1/m) Σ ln g_d`, `σ̂² = 2π (1/m) Σ I/g_d`.
pub fn whittle_profile(pgram: &Periodogram, d: f64) -> (f64, f64) {
    let m = pgram.interior_len();
    let mut ratio = 0.0;
    let mut log_g = 0.0;
    for (lam, i) in pgram.freqs[..m].iter().zip(&pgram.values[..m]) {
        let lg = -2.0 * d * (2.0 * (lam / 2.0).sin()).ln();
        ratio += i * (-lg).exp();
        log_g += lg;
    }
    let mf = m as f64;
    ((ratio / mf).ln() + log_g / mf, 2.0 * PI * ratio / mf)
}

pub fn whittle_objective(pgram: &Periodogram, d: f64) -> f64 {
    whittle_profile(pgram, d).0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhittleFit {
    pub d_hat: f64,
    pub sigma2_hat: f64,
    pub objective: f64,
    /// Every `(d, objective)` pair evaluated, grid first.
    pub grid_trace: Option<Vec<(f64, f64)>>,
}

/// Minimises the Whittle objective over `d_bounds`: a 50-point grid, then
/// golden-section search around the best grid point down to `|Δd| < 1e-5`.
pub fn whittle_fit(sample: &SamplePath, d_bounds: (f64, f64)) -> Result<WhittleFit> {
    let (lo, hi) = d_bounds;
    if !(lo > 0.0 && hi < 0.5 && lo < hi) {
        return Err(Error::Argument(format!("d bounds ({lo}, {hi}) must satisfy 0 < lo < hi < 1/2")));
    }
    if sample.len() < 64 {
        return Err(Error::Argument(format!("Whittle fit needs at least 64 values, got {}", sample.len())));
    }
    let pgram = periodogram(sample)?;
    let mut trace = Vec::with_capacity(GRID_POINTS + 48);
    let mut eval = |d: f64| -> Result<f64> {
        let v = whittle_objective(&pgram, d);
        if !v.is_finite() {
            return Err(Error::Estimation(format!("Whittle objective is not finite at d = {d}")));
        }
        trace.push((d, v));
        Ok(v)
    };
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..GRID_POINTS {
        let v = eval(lo + i as f64 * step)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let mut a = lo + best.0.saturating_sub(1) as f64 * step;
    let mut b = (lo + (best.0 + 1) as f64 * step).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let mut fc = eval(c)?;
    let mut fe = eval(e)?;
    while b - a >= GOLDEN_TOL {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = eval(e)?;
        }
    }
    let (d_hat, objective) = trace
        .iter()
        .copied()
        .fold((f64::NAN, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    let sigma2_hat = whittle_profile(&pgram, d_hat).1;
    Ok(WhittleFit { d_hat, sigma2_hat, objective, grid_trace: Some(trace) })
}
