//! Seeded Monte Carlo rate experiments on F(d) with unit innovation variance.
//!
//! Replicate `r` at grid cell `c` draws from the stream
//! `derive_seed2(master, c, r)`. Replicates run in parallel but are collected
//! in index order and reduced by pairwise summation, so results do not
//! depend on the thread count.
//!
//! Plug-in experiments report, per replicate, the exact expected squared
//! difference between the plug-in and exact forecasts over an independent
//! window, `Δ' Σ_k Δ` with `Δ` the coefficient error.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraccoeff::{ar_inf_coeffs, exact_autocov, AutocovSeq, LongMemoryModel};
use crate::predictor::{ark_plugin_model, SamplePath};
use crate::seed::{derive_seed2, NormalStream};
use crate::simulate::{innovations_sample, CirculantSampler};
use crate::spectral::{whittle_fit, DEFAULT_D_BOUNDS};
use crate::stats::{loglog_slope, mean_se, GridPoint, SlopeReport};
use crate::toeplitz::{durbin_levinson, toeplitz_solve};

use super::analytic::compute_h;

pub const MIN_REPS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PluginKind {
    /// Truncated Wiener-Kolmogorov with Whittle-estimated `d`.
    Wk,
    /// Yule-Walker AR(k) on empirical autocovariances.
    Ark,
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_REPS {
        return Err(Error::StatisticalPower { reps, min: MIN_REPS });
    }
    Ok(())
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.len() < 2 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("grid needs at least two strictly increasing sizes".into()));
    }
    Ok(())
}

/// Path generator for one `(model, n)` pair.
pub struct Generator {
    acov: AutocovSeq,
    n: usize,
    circulant: Option<CirculantSampler>,
}

impl Generator {
    pub fn new(model: &LongMemoryModel, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("path length must be at least 1".into()));
        }
        let acov = exact_autocov(model, n - 1)?;
        let circulant = CirculantSampler::new(&acov, n);
        Ok(Self { acov, n, circulant })
    }

    pub fn draw(&self, stream: &mut NormalStream) -> Result<SamplePath> {
        let values = match &self.circulant {
            Some(c) => c.sample(stream),
            None => innovations_sample(&self.acov, self.n, stream)?,
        };
        SamplePath::new(values)
    }
}

/// Runs `f` for replicates `0..reps` in parallel, results in index order.
pub fn replicate<T, F>(reps: usize, master: u64, cell: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut NormalStream) -> Result<T> + Sync,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|r| f(&mut NormalStream::new(derive_seed2(master, cell, r))))
        .collect()
}

/// `(x - y)' Σ_k (x - y)`.
fn sigma_form(x: &[f64], y: &[f64], acov: &AutocovSeq) -> f64 {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let k = diff.len();
    let mut q = 0.0;
    for i in 0..k {
        let row: f64 = (0..k).map(|j| diff[j] * acov.values[i.abs_diff(j)]).sum();
        q += diff[i] * row;
    }
    q
}

fn wk_weights(model: &LongMemoryModel, k: usize) -> Vec<f64> {
    ar_inf_coeffs(model, k).values[1..].iter().map(|a| -a).collect()
}

/// Mean over replicates of `E[(plug-in forecast - exact forecast)²]` for a
/// training sample of length `t`; `cell` selects the seed sub-stream.
pub fn plugin_excess_point(
    kind: PluginKind,
    d: f64,
    k: usize,
    t: usize,
    reps: usize,
    seed: u64,
    cell: u64,
) -> Result<GridPoint> {
    check_reps(reps)?;
    if k == 0 {
        return Err(Error::Argument("order k must be at least 1".into()));
    }
    let model = LongMemoryModel::fi(d, 1.0)?;
    let acov = exact_autocov(&model, k)?;
    let exact = match kind {
        PluginKind::Wk => wk_weights(&model, k),
        PluginKind::Ark => durbin_levinson(&acov, k)?.phi,
    };
    let gen = Generator::new(&model, t)?;
    let values = replicate(reps, seed, cell, |stream| {
        let train = gen.draw(stream)?;
        let est = match kind {
            PluginKind::Wk => wk_weights(&model.with_d(whittle_fit(&train, DEFAULT_D_BOUNDS)?.d_hat)?, k),
            PluginKind::Ark => ark_plugin_model(&train, k)?.phi,
        };
        Ok(sigma_form(&est, &exact, &acov))
    })?;
    let (estimate, stderr) = mean_se(&values);
    Ok(GridPoint { x: t as f64, estimate, stderr })
}

fn plugin_scaling(kind: PluginKind, d: f64, k: usize, t_grid: &[usize], reps: usize, seed: u64) -> Result<SlopeReport> {
    check_reps(reps)?;
    check_grid(t_grid)?;
    let points = t_grid
        .iter()
        .enumerate()
        .map(|(c, &t)| plugin_excess_point(kind, d, k, t, reps, seed, c as u64))
        .collect::<Result<Vec<_>>>()?;
    loglog_slope(points)
}

/// Log-log slope in `T` of the AR(k) plug-in excess `E(X̂_{T,k} - X̂_k)²`.
pub fn coeffcov_scaling(d: f64, k: usize, t_grid: &[usize], reps: usize, seed: u64) -> Result<SlopeReport> {
    plugin_scaling(PluginKind::Ark, d, k, t_grid, reps, seed)
}

/// Log-log slope in `T` of the Wiener-Kolmogorov plug-in excess
/// `E(X̃'_{T,k} - X̃'_k)²`.
pub fn wk_plugin_scaling(d: f64, k: usize, t_grid: &[usize], reps: usize, seed: u64) -> Result<SlopeReport> {
    plugin_scaling(PluginKind::Wk, d, k, t_grid, reps, seed)
}

/// Log-log slope in `n` of `E(σ̂(0) - σ(0))²`, with `σ̂(0) = (1/n) Σ Y_t²`.
///
/// Each replicate is one path of the largest length; smaller `n` use its
/// prefixes (common random numbers across the grid).
pub fn covmoment_scaling(d: f64, n_grid: &[usize], reps: usize, seed: u64) -> Result<SlopeReport> {
    check_reps(reps)?;
    check_grid(n_grid)?;
    let model = LongMemoryModel::fi(d, 1.0)?;
    let s0 = exact_autocov(&model, 0)?.values[0];
    let gen = Generator::new(&model, *n_grid.last().expect("checked non-empty"))?;
    let per_rep = replicate(reps, seed, 0, |stream| {
        let y = gen.draw(stream)?;
        Ok(n_grid
            .iter()
            .map(|&n| {
                let est = y.values[..n].iter().map(|v| v * v).sum::<f64>() / n as f64;
                (est - s0) * (est - s0)
            })
            .collect::<Vec<f64>>())
    })?;
    let points = n_grid
        .iter()
        .enumerate()
        .map(|(c, &n)| {
            let column: Vec<f64> = per_rep.iter().map(|r| r[c]).collect();
            let (estimate, stderr) = mean_se(&column);
            GridPoint { x: n as f64, estimate, stderr }
        })
        .collect();
    loglog_slope(points)
}

/// Monte Carlo `T · Cov(φ̂)` against `Σ_k^{-1} H Σ_k^{-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HCheck {
    pub k: usize,
    pub t: usize,
    pub reps: usize,
    /// Row-major `k × k`.
    pub mc: Vec<f64>,
    pub theory: Vec<f64>,
    /// Least-squares `c` in `mc ≈ c · theory` (Frobenius).
    pub c_fit: f64,
    /// Candidate constant with the smaller Frobenius misfit.
    pub best_c: f64,
    /// For each candidate `c`: `(c, Frobenius ratio, max diagonal ratio
    /// deviation factor)`; a factor of at most 2 means within a factor 2.
    pub candidates: Vec<(f64, f64, f64)>,
}

impl HCheck {
    /// True when both the Frobenius ratio and every diagonal ratio of
    /// `mc / (c · theory)` lie in `[1/2, 2]`.
    pub fn within_factor_two(&self, c: f64) -> bool {
        self.candidates
            .iter()
            .find(|e| e.0 == c)
            .map(|&(_, frob, diag)| (0.5..=2.0).contains(&frob) && diag <= 2.0)
            .unwrap_or(false)
    }
}

pub const H_CANDIDATES: [f64; 2] = [2.0, 4.0];

pub fn coeffcov_check(d: f64, k: usize, t: usize, reps: usize, seed: u64) -> Result<HCheck> {
    check_reps(reps)?;
    let model = LongMemoryModel::fi(d, 1.0)?;
    let acov = exact_autocov(&model, k)?;
    let fit = durbin_levinson(&acov, k)?;
    let h = compute_h(&model, &fit)?;
    let mut sinv = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        let col = toeplitz_solve(&acov, &e, k)?;
        sinv.set_column(j, &DVector::from_column_slice(&col));
    }
    let theory = &sinv * h * &sinv;

    let gen = Generator::new(&model, t)?;
    let est = replicate(reps, seed, 0, |stream| Ok(ark_plugin_model(&gen.draw(stream)?, k)?.phi))?;
    let mut mean = vec![0.0; k];
    for e in &est {
        for i in 0..k {
            mean[i] += e[i];
        }
    }
    mean.iter_mut().for_each(|m| *m /= reps as f64);
    let mut mc = DMatrix::<f64>::zeros(k, k);
    for e in &est {
        for i in 0..k {
            for j in 0..k {
                mc[(i, j)] += (e[i] - mean[i]) * (e[j] - mean[j]);
            }
        }
    }
    mc *= t as f64 / (reps as f64 - 1.0);

    let c_fit = mc.dot(&theory) / theory.dot(&theory);
    let candidates: Vec<(f64, f64, f64)> = H_CANDIDATES
        .iter()
        .map(|&c| {
            let frob = mc.norm() / (c * theory.norm());
            let diag = (0..k)
                .map(|i| {
                    let r = mc[(i, i)] / (c * theory[(i, i)]);
                    r.max(1.0 / r)
                })
                .fold(1.0, f64::max);
            (c, frob, diag)
        })
        .collect();
    let best_c = H_CANDIDATES
        .iter()
        .copied()
        .min_by(|a, b| (&mc - &theory * *a).norm().total_cmp(&(&mc - &theory * *b).norm()))
        .expect("non-empty candidate list");
    let row_major = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
    Ok(HCheck { k, t, reps, mc: row_major(&mc), theory: row_major(&theory), c_fit, best_c, candidates })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhittleRep {
    pub rep: usize,
    pub d_hat: f64,
    pub sigma2_hat: f64,
}

/// Whittle fits on `reps` independent F(d) paths of length `t`.
pub fn whittle_mc(model: &LongMemoryModel, t: usize, reps: usize, seed: u64) -> Result<Vec<WhittleRep>> {
    if reps == 0 {
        return Err(Error::Argument("reps must be at least 1".into()));
    }
    let gen = Generator::new(model, t)?;
    let fits = replicate(reps, seed, 0, |stream| whittle_fit(&gen.draw(stream)?, DEFAULT_D_BOUNDS))?;
    Ok(fits
        .into_iter()
        .enumerate()
        .map(|(rep, f)| WhittleRep { rep, d_hat: f.d_hat, sigma2_hat: f.sigma2_hat })
        .collect())
}
