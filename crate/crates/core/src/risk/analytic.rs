use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraccoeff::{ar_inf_coeffs, exact_autocov, spectral_density, LongMemoryModel};
use crate::quad::power_singular_rule;
use crate::special::{hurwitz_zeta, ln_gamma_signed};
use crate::stats::pairwise_sum;
use crate::toeplitz::{durbin_levinson, fi_ark_closed_form, quadratic_error, ArkModel};

const FIT_DEGREE: usize = 6;
const FIT_POINTS: usize = 256;
const MAX_CUTOFF: usize = 1 << 23;

/// Controls for infinite sums over a power-law tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailOptions {
    /// Requested relative accuracy.
    pub target: f64,
    /// First cutoff is `max(min_cutoff, cutoff_per_k · k)`; it doubles until
    /// the estimate is stable.
    pub min_cutoff: usize,
    pub cutoff_per_k: usize,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self { target: 1e-6, min_cutoff: 4096, cutoff_per_k: 32 }
    }
}

impl TailOptions {
    fn first_cutoff(&self, k: usize) -> usize {
        self.min_cutoff.max(self.cutoff_per_k * k).next_power_of_two()
    }
}

/// `Σ_{j >= start} t_j` from `terms[i] = t_{start+i}` up to `j = cutoff`,
/// assuming `t_j j^p = Σ_i c_i (cutoff/j)^i` on `[cutoff/2, cutoff]`. The
/// coefficients are fitted by least squares and the remainder is summed
/// exactly with Hurwitz zeta values.
fn extrapolated_sum(terms: &[f64], start: usize, cutoff: usize, p: f64) -> f64 {
    let n = cutoff + 1 - start;
    let partial = pairwise_sum(&terms[..n]);
    let lo = cutoff / 2;
    let rows = FIT_POINTS.min(cutoff - lo + 1);
    let jf = cutoff as f64;
    let mut a = DMatrix::<f64>::zeros(rows, FIT_DEGREE);
    let mut y = DVector::<f64>::zeros(rows);
    for r in 0..rows {
        let j = lo + (r * (cutoff - lo)) / (rows - 1).max(1);
        let x = jf / j as f64;
        for i in 0..FIT_DEGREE {
            a[(r, i)] = x.powi(i as i32);
        }
        y[r] = terms[j - start] * (j as f64).powf(p);
    }
    let c = a.svd(true, true).solve(&y, 1e-14).expect("SVD solve on full-rank design");
    let tail: f64 = (0..FIT_DEGREE)
        .map(|i| c[i] * jf.powi(i as i32) * hurwitz_zeta(p + i as f64, jf + 1.0))
        .sum();
    partial + tail
}

/// Runs `eval(cutoff)` for doubling cutoffs until two successive halvings
/// agree to `target`. `eval` returns the estimates at `cutoff` and
/// `cutoff/2`.
fn adaptive<F>(opts: &TailOptions, k: usize, mut eval: F) -> Result<f64>
where
    F: FnMut(usize) -> Result<(f64, f64)>,
{
    let mut cutoff = opts.first_cutoff(k);
    let mut achieved = f64::INFINITY;
    while cutoff <= MAX_CUTOFF {
        let (full, half) = eval(cutoff)?;
        achieved = ((full - half) / full).abs();
        if achieved <= opts.target {
            return Ok(full);
        }
        cutoff *= 2;
    }
    Err(Error::Accuracy { achieved, target: opts.target })
}

fn check_order(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Argument("order k must be at least 1".into()));
    }
    Ok(())
}

/// Excess mean-squared error of the truncated Wiener-Kolmogorov predictor,
/// `E[(X_{k+1} - X̃'_k(1))²] - σ_ε²`.
///
/// With `Σ_{l>=0} a_l σ(l-j) = 0` for `j > 0` the double tail sum collapses
/// to `-Σ_{j>k} a_j S(j)`, `S(j) = Σ_{l=0}^{k} a_l σ(j-l)`. The terms decay
/// like `j^{d-2}`; the sum is cut adaptively and the remainder extrapolated.
pub fn truncation_excess(model: &LongMemoryModel, k: usize) -> Result<f64> {
    truncation_excess_with(model, k, &TailOptions::default())
}

pub fn truncation_excess_with(model: &LongMemoryModel, k: usize, opts: &TailOptions) -> Result<f64> {
    check_order(k)?;
    let p = 2.0 - model.d();
    adaptive(opts, k, |cutoff| {
        let a = ar_inf_coeffs(model, cutoff).values;
        let s = exact_autocov(model, cutoff)?.values;
        let terms: Vec<f64> = (k + 1..=cutoff)
            .map(|j| {
                let sj: f64 = (0..=k).map(|l| a[l] * s[j - l]).sum();
                -a[j] * sj
            })
            .collect();
        Ok((extrapolated_sum(&terms, k + 1, cutoff, p), extrapolated_sum(&terms, k + 1, cutoff / 2, p)))
    })
}

/// Excess mean-squared error of the order-k Yule-Walker predictor,
/// `v(k) - σ_ε²`, cross-checked against the quadratic form of the fitted
/// weights.
pub fn ark_excess(model: &LongMemoryModel, k: usize) -> Result<f64> {
    check_order(k)?;
    let acov = exact_autocov(model, k)?;
    let fit = durbin_levinson(&acov, k)?;
    let q = quadratic_error(&fit.phi, &acov);
    let disc = ((q - fit.v) / fit.v).abs();
    if disc > 1e-9 {
        return Err(Error::InternalConsistency { what: "innovation variance vs quadratic form", discrepancy: disc });
    }
    Ok(fit.v - model.sigma2())
}

/// `C(d) = Γ(1-2d)Γ(2d) / (Γ(-d)²Γ(d)Γ(1+d))`.
pub fn c_of_d(d: f64) -> Result<f64> {
    if !(d > 0.0 && d < 0.5) {
        return Err(Error::Domain(format!("C(d) needs 0 < d < 1/2, got {d}")));
    }
    let lg = |x: f64| ln_gamma_signed(x).0;
    Ok((lg(1.0 - 2.0 * d) + lg(2.0 * d) - 2.0 * lg(-d) - lg(d) - lg(1.0 + d)).exp())
}

/// Three-term split of the AR(k) excess risk.
///
/// With `δ_j = a_{j,k} - a_j` (AR(∞) convention, `δ_0 = 0`) and
/// `R(j) = Σ_{l>k} a_l σ(j-l)`:
/// `term1 = Σ_{j,l=1}^{k} δ_j δ_l σ(j-l)`, `term2 = -2 Σ_{j=1}^{k} δ_j R(j)`,
/// `term3 = -Σ_{j=0}^{k} a_j R(j)`. Then `term1 + term2 + term3` is the
/// AR(k) excess and `term3` the truncation excess. For F(d) the signs are
/// `(+, -, +)`; [`Decomposition::negated`] gives the opposite orientation
/// `(-, +, -)` in which the terms are sometimes quoted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
}

impl Decomposition {
    pub fn sum(&self) -> f64 {
        self.term1 + self.term2 + self.term3
    }

    pub fn negated(&self) -> Self {
        Self { term1: -self.term1, term2: -self.term2, term3: -self.term3 }
    }

    /// `(trunc - ark)/trunc = -(term1 + term2)/term3`.
    pub fn ratio(&self) -> f64 {
        -(self.term1 + self.term2) / self.term3
    }
}

/// `R(j) = Σ_{l>k} a_l σ(j-l)` for `j = 0..k`, each an extrapolated tail sum.
fn tail_products(model: &LongMemoryModel, a: &[f64], s: &[f64], k: usize, cutoff: usize) -> Vec<f64> {
    let p = 2.0 - model.d();
    (0..=k)
        .map(|j| {
            let terms: Vec<f64> = (k + 1..=cutoff).map(|l| a[l] * s[l - j]).collect();
            extrapolated_sum(&terms, k + 1, cutoff, p)
        })
        .collect()
}

fn decomposition_from(model: &LongMemoryModel, fitted: &ArkModel, opts: &TailOptions) -> Result<Decomposition> {
    let k = fitted.k;
    let mut out = None;
    adaptive(opts, k, |cutoff| {
        let a = ar_inf_coeffs(model, cutoff).values;
        let s = exact_autocov(model, cutoff)?.values;
        let delta: Vec<f64> = (1..=k).map(|j| -fitted.phi[j - 1] - a[j]).collect();
        let mut term1 = 0.0;
        for i in 0..k {
            let row: f64 = (0..k).map(|j| delta[j] * s[i.abs_diff(j)]).sum();
            term1 += delta[i] * row;
        }
        let terms = |r: &[f64]| {
            let t2 = -2.0 * (1..=k).map(|j| delta[j - 1] * r[j]).sum::<f64>();
            let t3 = -(0..=k).map(|j| a[j] * r[j]).sum::<f64>();
            (t2, t3)
        };
        let (t2, t3) = terms(&tail_products(model, &a, &s, k, cutoff));
        let (h2, h3) = terms(&tail_products(model, &a, &s, k, cutoff / 2));
        out = Some(Decomposition { term1, term2: t2, term3: t3 });
        // error on the pair (term2, term3) measured against the total
        let full = term1 + t2 + t3;
        let worst = (t2 - h2).abs().max((t3 - h3).abs());
        Ok((full, full + worst.copysign(full)))
    })?;
    Ok(out.expect("set by the last evaluation"))
}

/// Decomposition for F(d) using the closed-form AR(k) coefficients.
pub fn excess_decomposition(d: f64, k: usize) -> Result<Decomposition> {
    check_order(k)?;
    let model = LongMemoryModel::fi(d, 1.0)?;
    decomposition_from(&model, &fi_ark_closed_form(d, k)?, &TailOptions::default())
}

/// Decomposition for any model using the Durbin-Levinson coefficients.
pub fn excess_decomposition_model(model: &LongMemoryModel, k: usize) -> Result<Decomposition> {
    check_order(k)?;
    let fit = durbin_levinson(&exact_autocov(model, k)?, k)?;
    decomposition_from(model, &fit, &TailOptions::default())
}

/// Relative improvement `r(k)` of the AR(k) predictor over truncation for
/// F(d), computed from the decomposition and from the two excess risks.
pub fn r_of_k(d: f64, k: usize) -> Result<f64> {
    let dec = excess_decomposition(d, k)?;
    let model = LongMemoryModel::fi(d, 1.0)?;
    let trunc = truncation_excess(&model, k)?;
    let ark = ark_excess(&model, k)?;
    let direct = (trunc - ark) / trunc;
    let via_terms = dec.ratio();
    let disc = ((via_terms - direct) / direct).abs();
    if disc > 1e-6 {
        return Err(Error::InternalConsistency { what: "r(k) from decomposition vs excess risks", discrepancy: disc });
    }
    Ok(via_terms)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub model: LongMemoryModel,
    pub k: usize,
    pub trunc_excess: f64,
    pub ark_excess: f64,
    pub decomposition: Decomposition,
    pub ratio: f64,
}

pub fn risk_report(model: &LongMemoryModel, k: usize) -> Result<RiskReport> {
    let trunc_excess = truncation_excess(model, k)?;
    let ark_excess = ark_excess(model, k)?;
    let fitted = if model.is_fi() {
        fi_ark_closed_form(model.d(), k)?
    } else {
        durbin_levinson(&exact_autocov(model, k)?, k)?
    };
    let decomposition = decomposition_from(model, &fitted, &TailOptions::default())?;
    Ok(RiskReport {
        model: model.clone(),
        k,
        trunc_excess,
        ark_excess,
        decomposition,
        ratio: (trunc_excess - ark_excess) / trunc_excess,
    })
}

/// `H_{ij} = ∫_{-π}^{π} h^{(i)}(λ) h^{(j)}(λ) f²(λ) dλ` with
/// `h^{(r)}(λ) = -2[cos(rλ) - Σ_s φ_s cos((r-s)λ)]`, the derivative of
/// `|1 - Σ φ_s e^{isλ}|²` in `φ_r`. Requires `d < 1/4` so that `f²` is
/// integrable at the origin.
pub fn compute_h(model: &LongMemoryModel, model_k: &ArkModel) -> Result<DMatrix<f64>> {
    let d = model.d();
    if d >= 0.25 {
        return Err(Error::Domain(format!("H needs d < 1/4 (f² not integrable), got {d}")));
    }
    let k = model_k.k;
    let nodes = power_singular_rule(4.0 * d, PI, 64 + 8 * k);
    let mut h = DMatrix::<f64>::zeros(k, k);
    let mut deriv = vec![0.0; k];
    for &(lam, w) in &nodes {
        let f = spectral_density(model, lam)?;
        for r in 1..=k {
            let mut v = (r as f64 * lam).cos();
            for s in 1..=k {
                v -= model_k.phi[s - 1] * ((r as f64 - s as f64) * lam).cos();
            }
            deriv[r - 1] = -2.0 * v;
        }
        let wf = 2.0 * w * f * f;
        for i in 0..k {
            for j in 0..=i {
                h[(i, j)] += wf * deriv[i] * deriv[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            h[(j, i)] = h[(i, j)];
        }
    }
    Ok(h)
}
