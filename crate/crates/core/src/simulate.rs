//! Exact zero-mean Gaussian paths with a prescribed autocovariance.

use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraccoeff::{exact_autocov, AutocovSeq, LongMemoryModel};
use crate::predictor::SamplePath;
use crate::seed::NormalStream;

const EMBED_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SimulationPlan {
    pub acov: AutocovSeq,
    pub n: usize,
    pub seed: u64,
}

impl SimulationPlan {
    pub fn new(acov: AutocovSeq, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("path length must be at least 1".into()));
        }
        if acov.len() < n {
            return Err(Error::Argument(format!("path length {n} needs σ(0..{}), got {} values", n - 1, acov.len())));
        }
        acov.validate()?;
        Ok(Self { acov, n, seed })
    }

    pub fn for_model(model: &LongMemoryModel, n: usize, seed: u64) -> Result<Self> {
        Self::new(exact_autocov(model, n.saturating_sub(1))?, n, seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMethod {
    CirculantEmbedding,
    Innovations,
}

#[derive(Clone, Debug)]
pub struct SimulatedPath {
    pub path: SamplePath,
    pub method: SimulationMethod,
}

/// Circulant embedding of `Σ_n` in a circulant matrix of order `2(n-1)`,
/// diagonalised once and reused across draws.
#[derive(Clone)]
pub struct CirculantSampler {
    n: usize,
    sqrt_eig: Vec<f64>,
    fft: Option<Arc<dyn Fft<f64>>>,
    min_eigenvalue: f64,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("n", &self.n)
            .field("min_eigenvalue", &self.min_eigenvalue)
            .finish()
    }
}

impl CirculantSampler {
    /// `None` when an eigenvalue of the embedding is below `-1e-10·max`.
    pub fn new(acov: &AutocovSeq, n: usize) -> Option<Self> {
        if n == 1 {
            let s0 = acov.values[0];
            return Some(Self { n, sqrt_eig: vec![s0.sqrt()], fft: None, min_eigenvalue: s0 });
        }
        let m = 2 * (n - 1);
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|i| Complex::new(acov.values[if i < n { i } else { m - i }], 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let eig: Vec<f64> = row.iter().map(|c| c.re).collect();
        let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -EMBED_TOL * max {
            return None;
        }
        let sqrt_eig = eig.iter().map(|&l| (l.max(0.0) / m as f64).sqrt()).collect();
        Some(Self { n, sqrt_eig, fft: Some(fft), min_eigenvalue: min })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn sample(&self, stream: &mut NormalStream) -> Vec<f64> {
        let Some(fft) = &self.fft else {
            return vec![self.sqrt_eig[0] * stream.normal()];
        };
        let mut buf: Vec<Complex<f64>> = self
            .sqrt_eig
            .iter()
            .map(|&s| {
                let re = stream.normal();
                let im = stream.normal();
                Complex::new(s * re, s * im)
            })
            .collect();
        fft.process(&mut buf);
        buf[..self.n].iter().map(|c| c.re).collect()
    }
}

/// Sequential innovations sampler: `X_t = Σ φ_{t,j} X_{t-j} + √v(t) Z_t`
/// with the nested Durbin-Levinson coefficients. `O(n²)`.
pub fn innovations_sample(acov: &AutocovSeq, n: usize, stream: &mut NormalStream) -> Result<Vec<f64>> {
    let s = &acov.values;
    let mut x = Vec::with_capacity(n);
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    let mut v = s[0];
    x.push(v.sqrt() * stream.normal());
    for t in 1..n {
        let mut num = s[t];
        for j in 1..t {
            num -= phi[j - 1] * s[t - j];
        }
        let ann = num / v;
        if !ann.is_finite() || ann.abs() >= 1.0 {
            return Err(Error::NotPositiveDefinite { order: t });
        }
        prev.clear();
        prev.extend_from_slice(&phi);
        for j in 1..t {
            phi[j - 1] = prev[j - 1] - ann * prev[t - j - 1];
        }
        phi.push(ann);
        v *= 1.0 - ann * ann;
        let mean: f64 = (1..=t).map(|j| phi[j - 1] * x[t - j]).sum();
        x.push(mean + v.sqrt() * stream.normal());
    }
    Ok(x)
}

fn finish(plan: &SimulationPlan, values: Vec<f64>, method: SimulationMethod) -> SimulatedPath {
    let path = SamplePath { values, seed: Some(plan.seed), model: plan.acov.model.clone() };
    SimulatedPath { path, method }
}

/// Circulant embedding, falling back to the innovations sampler when the
/// embedding is not positive semidefinite.
pub fn gaussian_sample(plan: &SimulationPlan) -> Result<SimulatedPath> {
    let method = match CirculantSampler::new(&plan.acov, plan.n) {
        Some(_) => SimulationMethod::CirculantEmbedding,
        None => SimulationMethod::Innovations,
    };
    gaussian_sample_with(plan, method)
}

pub fn gaussian_sample_with(plan: &SimulationPlan, method: SimulationMethod) -> Result<SimulatedPath> {
    let mut stream = NormalStream::new(plan.seed);
    let values = match method {
        SimulationMethod::CirculantEmbedding => CirculantSampler::new(&plan.acov, plan.n)
            .ok_or_else(|| Error::Argument("circulant embedding is not positive semidefinite".into()))?
            .sample(&mut stream),
        SimulationMethod::Innovations => innovations_sample(&plan.acov, plan.n, &mut stream)?,
    };
    Ok(finish(plan, values, method))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fi_plan(d: f64, n: usize, seed: u64) -> SimulationPlan {
        SimulationPlan::for_model(&LongMemoryModel::fi(d, 1.0).unwrap(), n, seed).unwrap()
    }

    #[test]
    fn deterministic_under_seed() {
        let a = gaussian_sample(&fi_plan(0.3, 300, 5)).unwrap();
        let b = gaussian_sample(&fi_plan(0.3, 300, 5)).unwrap();
        let c = gaussian_sample(&fi_plan(0.3, 300, 6)).unwrap();
        assert_eq!(a.path.values, b.path.values);
        assert_ne!(a.path.values, c.path.values);
        assert_eq!(a.method, SimulationMethod::CirculantEmbedding);
        assert_eq!(a.path.seed, Some(5));
    }

    #[test]
    fn fi_embeddings_are_nonnegative() {
        for &d in &[0.1, 0.25, 0.45] {
            let plan = fi_plan(d, 4096, 0);
            let s = CirculantSampler::new(&plan.acov, 4096).expect("embeddable");
            assert!(s.min_eigenvalue() >= -EMBED_TOL);
        }
    }

    #[test]
    fn indefinite_embedding_falls_back() {
        // positive definite Toeplitz prefix whose circulant embedding of
        // order 6 has the eigenvalue -0.1
        let acov = AutocovSeq::from_values(vec![1.0, 0.5, -0.3, -0.5]).unwrap();
        assert!(CirculantSampler::new(&acov, 4).is_none());
        let plan = SimulationPlan::new(acov, 4, 1).unwrap();
        let out = gaussian_sample(&plan).unwrap();
        assert_eq!(out.method, SimulationMethod::Innovations);
        assert_eq!(out.path.len(), 4);
    }

    #[test]
    fn single_value_path() {
        let out = gaussian_sample(&fi_plan(0.2, 1, 3)).unwrap();
        assert_eq!(out.path.len(), 1);
    }

    #[test]
    fn lag_zero_moment() {
        let plan = fi_plan(0.3, 1024, 0);
        let sampler = CirculantSampler::new(&plan.acov, 1024).unwrap();
        let mut total = 0.0;
        for r in 0..200 {
            let x = sampler.sample(&mut NormalStream::for_replicate(99, r));
            total += x.iter().map(|v| v * v).sum::<f64>() / 1024.0;
        }
        let mean = total / 200.0;
        assert!((mean / plan.acov.values[0] - 1.0).abs() < 0.05, "{mean}");
    }
}
