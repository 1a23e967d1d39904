//! Exact coefficients, autocovariances and spectral densities of F(d) and
//! FARIMA(p, d, q) models.
//!
//! The AR polynomial is `φ(z) = 1 - φ_1 z - ... - φ_p z^p` and the MA
//! polynomial is `θ(z) = 1 + θ_1 z + ... + θ_q z^q`, so the model reads
//! `φ(B)(1 - B)^d X_n = θ(B) ε_n`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Smallest admissible memory parameter.
pub const D_MIN: f64 = 1e-4;
/// Largest admissible memory parameter.
pub const D_MAX: f64 = 0.5 - 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    #[serde(alias = "fi", alias = "Fi")]
    Fi,
    #[serde(alias = "farima", alias = "Farima")]
    Farima,
}

#[derive(Deserialize)]
struct RawModel {
    kind: ModelKind,
    d: f64,
    #[serde(default)]
    ar: Vec<f64>,
    #[serde(default)]
    ma: Vec<f64>,
    #[serde(default = "one")]
    sigma2: f64,
}

fn one() -> f64 {
    1.0
}

/// Parametric long-memory process. Constructed only through validating
/// constructors, so every instance satisfies `D_MIN <= d <= D_MAX`,
/// `sigma2 > 0`, and has AR/MA polynomials without zeros on the closed
/// unit disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct LongMemoryModel {
    kind: ModelKind,
    d: f64,
    ar: Vec<f64>,
    ma: Vec<f64>,
    sigma2: f64,
}

impl TryFrom<RawModel> for LongMemoryModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        match raw.kind {
            ModelKind::Fi => {
                if !raw.ar.is_empty() || !raw.ma.is_empty() {
                    return Err(Error::Domain("an FI model takes no AR or MA coefficients".into()));
                }
                Self::fi(raw.d, raw.sigma2)
            }
            ModelKind::Farima => Self::farima(raw.d, raw.ar, raw.ma, raw.sigma2),
        }
    }
}

fn check_d(d: f64) -> Result<()> {
    if !(D_MIN..=D_MAX).contains(&d) {
        return Err(Error::Domain(format!(
            "memory parameter d = {d} outside [{D_MIN}, {D_MAX}]"
        )));
    }
    Ok(())
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::Domain(format!("innovation variance {sigma2} must be positive")));
    }
    Ok(())
}

/// Largest modulus among the reciprocal roots of `1 + c_1 z + ... + c_p z^p`.
/// The polynomial has no zeros on the closed unit disk iff this is `< 1`.
fn max_reciprocal_root(c: &[f64]) -> f64 {
    let p = c.len();
    if p == 0 {
        return 0.0;
    }
    // companion matrix of z^p + c_1 z^{p-1} + ... + c_p
    let mut m = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        m[(0, j)] = -c[j];
    }
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

impl LongMemoryModel {
    /// Fractionally integrated noise F(d).
    pub fn fi(d: f64, sigma2: f64) -> Result<Self> {
        check_d(d)?;
        check_sigma2(sigma2)?;
        Ok(Self { kind: ModelKind::Fi, d, ar: Vec::new(), ma: Vec::new(), sigma2 })
    }

    /// FARIMA(p, d, q) with AR coefficients `φ_1..φ_p` and MA coefficients
    /// `θ_1..θ_q`.
    pub fn farima(d: f64, ar: Vec<f64>, ma: Vec<f64>, sigma2: f64) -> Result<Self> {
        check_d(d)?;
        check_sigma2(sigma2)?;
        if ar.iter().chain(ma.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite ARMA coefficient".into()));
        }
        let neg_ar: Vec<f64> = ar.iter().map(|x| -x).collect();
        if max_reciprocal_root(&neg_ar) >= 1.0 {
            return Err(Error::Domain("AR polynomial has a zero on the closed unit disk".into()));
        }
        if max_reciprocal_root(&ma) >= 1.0 {
            return Err(Error::Domain("MA polynomial has a zero on the closed unit disk".into()));
        }
        Ok(Self { kind: ModelKind::Farima, d, ar, ma, sigma2 })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn ar(&self) -> &[f64] {
        &self.ar
    }

    pub fn ma(&self) -> &[f64] {
        &self.ma
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// True when the ARMA part is trivial, i.e. the process is F(d).
    pub fn is_fi(&self) -> bool {
        self.ar.is_empty() && self.ma.is_empty()
    }

    /// Same ARMA structure and `σ_ε²` with another memory parameter.
    pub fn with_d(&self, d: f64) -> Result<Self> {
        check_d(d)?;
        Ok(Self { d, ..self.clone() })
    }

    fn ar_poly(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.ar.iter().map(|x| -x)).collect()
    }

    fn ma_poly(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.ma.iter().copied()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    /// `ε_n = Σ_{j≥0} a_j X_{n-j}`.
    ArInf,
    /// `X_n = Σ_{j≥0} b_j ε_{n-j}`.
    MaInf,
}

/// Prefix `c_0..c_n` of an AR(∞) or MA(∞) coefficient sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffSeq {
    pub convention: Convention,
    pub values: Vec<f64>,
    pub model: LongMemoryModel,
    /// Set when some coefficients fell into the subnormal range and were
    /// flushed to zero.
    pub underflow: bool,
}

impl CoeffSeq {
    fn new(convention: Convention, mut values: Vec<f64>, model: &LongMemoryModel) -> Self {
        let mut underflow = false;
        for v in values.iter_mut() {
            if *v != 0.0 && v.abs() < f64::MIN_POSITIVE {
                *v = 0.0;
                underflow = true;
            }
        }
        Self { convention, values, model: model.clone(), underflow }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn fi_ar_series(d: f64, n: usize) -> Vec<f64> {
    let mut a = Vec::with_capacity(n + 1);
    a.push(1.0);
    for j in 0..n {
        let prev = a[j];
        a.push(prev * (j as f64 - d) / (j as f64 + 1.0));
    }
    a
}

fn fi_ma_series(d: f64, n: usize) -> Vec<f64> {
    let mut b = Vec::with_capacity(n + 1);
    b.push(1.0);
    for j in 0..n {
        let prev = b[j];
        b.push(prev * (j as f64 + d) / (j as f64 + 1.0));
    }
    b
}

/// First `len` coefficients of `poly * series`.
fn mul_poly(series: &[f64], poly: &[f64]) -> Vec<f64> {
    (0..series.len())
        .map(|m| {
            poly.iter()
                .enumerate()
                .take(m + 1)
                .map(|(i, p)| p * series[m - i])
                .sum()
        })
        .collect()
}

/// `series / poly` as a power series, `poly[0] = 1`.
fn div_poly(series: &[f64], poly: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(series.len());
    for m in 0..series.len() {
        let mut v = series[m];
        for (i, p) in poly.iter().enumerate().skip(1).take(m) {
            v -= p * out[m - i];
        }
        out.push(v);
    }
    out
}

/// AR(∞) coefficients `a_0..a_n`, `a_0 = 1`.
///
/// F(d) uses the ratio recursion `a_{j+1} = a_j (j - d)/(j + 1)`; FARIMA
/// multiplies that expansion by `φ(z)` and divides by `θ(z)`.
pub fn ar_inf_coeffs(model: &LongMemoryModel, n: usize) -> CoeffSeq {
    let fi = fi_ar_series(model.d, n);
    let values = if model.is_fi() {
        fi
    } else {
        div_poly(&mul_poly(&fi, &model.ar_poly()), &model.ma_poly())
    };
    CoeffSeq::new(Convention::ArInf, values, model)
}

/// MA(∞) coefficients `b_0..b_n`, `b_0 = 1`.
///
/// F(d) uses `b_{j+1} = b_j (j + d)/(j + 1)`; FARIMA multiplies that
/// expansion by `θ(z)` and divides by `φ(z)`.
pub fn ma_inf_coeffs(model: &LongMemoryModel, n: usize) -> CoeffSeq {
    let fi = fi_ma_series(model.d, n);
    let values = if model.is_fi() {
        fi
    } else {
        div_poly(&mul_poly(&fi, &model.ma_poly()), &model.ar_poly())
    };
    CoeffSeq::new(Convention::MaInf, values, model)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutocovSource {
    Exact,
    Empirical,
}

/// Autocovariances `σ(0..m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AutocovSeq {
    pub values: Vec<f64>,
    pub source: AutocovSource,
    pub model: Option<LongMemoryModel>,
}

impl AutocovSeq {
    /// Wraps a sequence estimated from data.
    pub fn empirical(values: Vec<f64>) -> Result<Self> {
        let s = Self { values, source: AutocovSource::Empirical, model: None };
        s.validate()?;
        Ok(s)
    }

    /// Wraps an arbitrary sequence treated as exact (e.g. white noise in tests).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let s = Self { values, source: AutocovSource::Exact, model: None };
        s.validate()?;
        Ok(s)
    }

    /// `σ(0) > 0` and `|σ(j)| <= σ(0)`.
    pub fn validate(&self) -> Result<()> {
        let s0 = *self
            .values
            .first()
            .ok_or_else(|| Error::Argument("empty autocovariance sequence".into()))?;
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::Argument(format!("σ(0) = {s0} must be positive")));
        }
        if let Some(j) = self
            .values
            .iter()
            .position(|v| !v.is_finite() || v.abs() > s0 * (1.0 + 1e-12))
        {
            return Err(Error::Argument(format!("|σ({j})| exceeds σ(0)")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `σ(|h|)`.
    #[inline]
    pub fn at(&self, h: isize) -> f64 {
        self.values[h.unsigned_abs()]
    }

    /// Dense `k × k` Toeplitz matrix `Σ_k`.
    pub fn toeplitz_matrix(&self, k: usize) -> DMatrix<f64> {
        assert!(self.values.len() >= k, "need σ(0..k-1) for a {k}x{k} matrix");
        DMatrix::from_fn(k, k, |i, j| self.values[i.abs_diff(j)])
    }
}

fn fi_autocov(d: f64, sigma2: f64, m: usize) -> Vec<f64> {
    let mut s = Vec::with_capacity(m + 1);
    s.push(sigma2 * (ln_gamma(1.0 - 2.0 * d) - 2.0 * ln_gamma(1.0 - d)).exp());
    for j in 0..m {
        let prev = s[j];
        s.push(prev * (j as f64 + d) / (j as f64 + 1.0 - d));
    }
    s
}

const PSI_MAX_LEN: usize = 1 << 21;

/// MA(∞) weights of the ARMA filter `θ(z)/φ(z)`, truncated once they are
/// negligible at double precision.
fn arma_psi(model: &LongMemoryModel) -> Result<Vec<f64>> {
    let phi = model.ar_poly();
    let theta = model.ma_poly();
    let mut psi: Vec<f64> = Vec::new();
    let mut abs_sum = 0.0;
    let mut quiet = 0usize;
    let window = 2 * phi.len() + 16;
    for m in 0..PSI_MAX_LEN {
        let mut v = theta.get(m).copied().unwrap_or(0.0);
        for (i, p) in phi.iter().enumerate().skip(1).take(m) {
            v -= p * psi[m - i];
        }
        psi.push(v);
        abs_sum += v.abs();
        if m + 1 >= theta.len() && v.abs() <= 1e-18 * abs_sum {
            quiet += 1;
            if quiet >= window {
                psi.truncate(m + 1 - quiet);
                return Ok(psi);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Accuracy { achieved: psi.last().map_or(1.0, |v| v.abs() / abs_sum), target: 1e-18 })
}

/// Exact autocovariances `σ(0..m)`.
///
/// F(d): `σ(0) = σ_ε² Γ(1-2d)/Γ(1-d)²` followed by
/// `σ(j+1) = σ(j)(j + d)/(j + 1 - d)`. FARIMA: the F(d) autocovariances are
/// filtered by the ARMA part, `σ_X(k) = Σ_h r_ψ(h) σ_FI(k - h)` with
/// `r_ψ(h) = Σ_i ψ_i ψ_{i+|h|}`; `ψ` decays geometrically so the sum is
/// exact to rounding.
pub fn exact_autocov(model: &LongMemoryModel, m: usize) -> Result<AutocovSeq> {
    let values = if model.is_fi() {
        fi_autocov(model.d, model.sigma2, m)
    } else {
        let psi = arma_psi(model)?;
        let l = psi.len() - 1;
        let r: Vec<f64> = (0..=l)
            .map(|h| psi.iter().zip(psi[h..].iter()).map(|(a, b)| a * b).sum())
            .collect();
        let fi = fi_autocov(model.d, model.sigma2, m + l);
        (0..=m)
            .map(|k| {
                let mut s = r[0] * fi[k];
                for (h, rh) in r.iter().enumerate().skip(1) {
                    s += rh * (fi[k + h] + fi[k.abs_diff(h)]);
                }
                s
            })
            .collect()
    };
    Ok(AutocovSeq { values, source: AutocovSource::Exact, model: Some(model.clone()) })
}

fn poly_on_circle_sq(poly: &[f64], lambda: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (j, c) in poly.iter().enumerate() {
        let x = j as f64 * lambda;
        re += c * x.cos();
        im -= c * x.sin();
    }
    re * re + im * im
}

/// Spectral density `f(λ)` normalised so that `σ(k) = ∫_{-π}^{π} f(λ) e^{ikλ} dλ`.
///
/// F(d): `f(λ) = σ_ε² (2π)^{-1} (2 sin(|λ|/2))^{-2d}`; FARIMA multiplies by
/// `|θ(e^{-iλ})|² / |φ(e^{-iλ})|²`.
pub fn spectral_density(model: &LongMemoryModel, lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Err(Error::Singularity);
    }
    if !(lambda.abs() <= PI) {
        return Err(Error::Domain(format!("frequency {lambda} outside [-π, π]")));
    }
    let base = model.sigma2 / (2.0 * PI) * (2.0 * (lambda.abs() / 2.0).sin()).powf(-2.0 * model.d);
    if model.is_fi() {
        return Ok(base);
    }
    Ok(base * poly_on_circle_sq(&model.ma_poly(), lambda)
        / poly_on_circle_sq(&model.ar_poly(), lambda))
}
