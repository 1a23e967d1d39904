//! Yule-Walker systems on symmetric Toeplitz covariance matrices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraccoeff::{exact_autocov, AutocovSeq, LongMemoryModel};
use crate::predictor::SamplePath;
use crate::special::ln_gamma_signed;

/// Fitted order-k autoregressive predictor.
///
/// `phi` holds forecast weights: `X̂_{n+1} = Σ_{j=1}^{k} φ_j X_{n+1-j}`. In the
/// AR(∞) sign convention the same polynomial has coefficients
/// `a_{0,k} = 1, a_{j,k} = -φ_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArkModel {
    pub k: usize,
    pub phi: Vec<f64>,
    /// Innovation variance `v(k)`, the mean-squared one-step error.
    pub v: f64,
    /// Reflection coefficients `a_{n,n}` for `n = 1..k`.
    pub partials: Vec<f64>,
}

impl ArkModel {
    /// Coefficients in AR(∞) convention, `a_{0,k}..a_{k,k}`.
    pub fn ar_convention(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.phi.iter().map(|p| -p)).collect()
    }

    /// Max relative residual of the Yule-Walker equations
    /// `Σ_i φ_i σ(i-j) = σ(j)`, `j = 1..k`, scaled by `σ(0)`.
    pub fn yule_walker_residual(&self, acov: &AutocovSeq) -> f64 {
        let k = self.k;
        let mut worst: f64 = 0.0;
        for j in 1..=k {
            let lhs: f64 = (1..=k).map(|i| self.phi[i - 1] * acov.at(i as isize - j as isize)).sum();
            worst = worst.max((lhs - acov.values[j]).abs());
        }
        worst / acov.values[0]
    }

    /// `σ(0) - 2 Σ φ_j σ(j) + Σ Σ φ_i φ_j σ(i-j)`: the mean-squared error of
    /// the forecast weights under `acov`, whatever their origin.
    pub fn quadratic_form_error(&self, acov: &AutocovSeq) -> f64 {
        quadratic_error(&self.phi, acov)
    }
}

/// Mean-squared one-step error of forecast weights `phi` under `acov`.
pub fn quadratic_error(phi: &[f64], acov: &AutocovSeq) -> f64 {
    let k = phi.len();
    let mut q = acov.values[0];
    for j in 1..=k {
        q -= 2.0 * phi[j - 1] * acov.values[j];
    }
    for i in 0..k {
        let mut row = 0.0;
        for j in 0..k {
            row += phi[j] * acov.values[i.abs_diff(j)];
        }
        q += phi[i] * row;
    }
    q
}

/// Durbin-Levinson recursion for the order-k Yule-Walker system.
///
/// `v(0) = σ(0)`, `a_{1,1} = σ(1)/σ(0)`, then for each order `n`
/// `a_{n,n} = [σ(n) - Σ_{j<n} a_{j,n-1} σ(n-j)] / v(n-1)`,
/// `a_{j,n} = a_{j,n-1} - a_{n,n} a_{n-j,n-1}` and
/// `v(n) = v(n-1)(1 - a_{n,n}²)`.
pub fn durbin_levinson(acov: &AutocovSeq, k: usize) -> Result<ArkModel> {
    if acov.values.len() < k + 1 {
        return Err(Error::Argument(format!(
            "order {k} needs {} autocovariances, got {}",
            k + 1,
            acov.values.len()
        )));
    }
    let s = &acov.values;
    if !(s[0] > 0.0) {
        return Err(Error::NotPositiveDefinite { order: 0 });
    }
    let mut phi: Vec<f64> = Vec::with_capacity(k);
    let mut prev: Vec<f64> = Vec::with_capacity(k);
    let mut partials = Vec::with_capacity(k);
    let mut v = s[0];
    for n in 1..=k {
        let mut num = s[n];
        for j in 1..n {
            num -= phi[j - 1] * s[n - j];
        }
        let ann = num / v;
        if !ann.is_finite() || ann.abs() >= 1.0 {
            return Err(Error::NotPositiveDefinite { order: n });
        }
        prev.clear();
        prev.extend_from_slice(&phi);
        for j in 1..n {
            phi[j - 1] = prev[j - 1] - ann * prev[n - j - 1];
        }
        phi.push(ann);
        v *= 1.0 - ann * ann;
        if !(v > 0.0) {
            return Err(Error::NotPositiveDefinite { order: n });
        }
        partials.push(ann);
    }
    Ok(ArkModel { k, phi, v, partials })
}

/// Biased autocovariance estimate `σ̂(h) = (1/T) Σ_{t=1}^{T-h} Y_t Y_{t+h}`,
/// `h = 0..maxlag`. With `demean` the sample mean is subtracted first.
pub fn empirical_autocov(sample: &SamplePath, maxlag: usize, demean: bool) -> Result<AutocovSeq> {
    let y = &sample.values;
    let t = y.len();
    if maxlag >= t {
        return Err(Error::Argument(format!("maxlag {maxlag} must be below the sample length {t}")));
    }
    let centred: Vec<f64>;
    let y: &[f64] = if demean {
        let mean = y.iter().sum::<f64>() / t as f64;
        centred = y.iter().map(|v| v - mean).collect();
        &centred
    } else {
        y
    };
    let values = (0..=maxlag)
        .map(|h| y[..t - h].iter().zip(&y[h..]).map(|(a, b)| a * b).sum::<f64>() / t as f64)
        .collect();
    Ok(AutocovSeq { values, source: crate::fraccoeff::AutocovSource::Empirical, model: None })
}

/// Closed-form order-k Yule-Walker coefficients of F(d):
/// `a_{j,k} = Γ(k+1)Γ(j-d)Γ(k-d-j+1) / (Γ(k-j+1)Γ(j+1)Γ(-d)Γ(k-d+1))`,
/// returned as forecast weights `φ_j = -a_{j,k}` (unit innovation variance).
pub fn fi_ark_closed_form(d: f64, k: usize) -> Result<ArkModel> {
    if !(d > 0.0 && d < 0.5) {
        return Err(Error::Domain(format!("closed form needs 0 < d < 1/2, got {d}")));
    }
    if k == 0 {
        return Err(Error::Argument("order must be at least 1".into()));
    }
    let model = LongMemoryModel::fi(d, 1.0)?;
    let kf = k as f64;
    let (ln_neg_d, sign_neg_d) = ln_gamma_signed(-d);
    let common = ln_gamma_signed(kf + 1.0).0 - ln_gamma_signed(kf - d + 1.0).0 - ln_neg_d;
    let phi = (1..=k)
        .map(|j| {
            let jf = j as f64;
            let ln = common + ln_gamma_signed(jf - d).0 + ln_gamma_signed(kf - d - jf + 1.0).0
                - ln_gamma_signed(kf - jf + 1.0).0
                - ln_gamma_signed(jf + 1.0).0;
            -(sign_neg_d * ln.exp())
        })
        .collect();
    let acov = exact_autocov(&model, k)?;
    let dl = durbin_levinson(&acov, k)?;
    Ok(ArkModel { k, phi, v: dl.v, partials: dl.partials })
}

/// Solves `Σ_k x = rhs` by a dense Cholesky factorisation.
pub fn toeplitz_solve(acov: &AutocovSeq, rhs: &[f64], k: usize) -> Result<Vec<f64>> {
    if rhs.len() != k {
        return Err(Error::Argument(format!("right-hand side has length {}, expected {k}", rhs.len())));
    }
    if acov.values.len() < k {
        return Err(Error::Argument(format!("need {k} autocovariances for a {k}x{k} system")));
    }
    let m: DMatrix<f64> = acov.toeplitz_matrix(k);
    let chol = m.cholesky().ok_or(Error::NotPositiveDefinite { order: k })?;
    let x = chol.solve(&DVector::from_column_slice(rhs));
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraccoeff::LongMemoryModel;

    fn white(s: f64, m: usize) -> AutocovSeq {
        let mut v = vec![0.0; m + 1];
        v[0] = s;
        AutocovSeq::from_values(v).unwrap()
    }

    fn fi_acov(d: f64, m: usize) -> AutocovSeq {
        exact_autocov(&LongMemoryModel::fi(d, 1.0).unwrap(), m).unwrap()
    }

    #[test]
    fn white_noise_gives_zero_weights() {
        let m = durbin_levinson(&white(2.5, 5), 5).unwrap();
        assert!(m.phi.iter().all(|&p| p == 0.0));
        assert_eq!(m.v, 2.5);
    }

    #[test]
    fn first_order_is_lag_one_correlation() {
        let acov = fi_acov(0.3, 1);
        let m = durbin_levinson(&acov, 1).unwrap();
        assert_eq!(m.phi[0], acov.values[1] / acov.values[0]);
    }

    #[test]
    fn closed_form_matches_recursion() {
        for &d in &[0.1, 0.25, 0.3, 0.4] {
            let acov = fi_acov(d, 30);
            let dl = durbin_levinson(&acov, 30).unwrap();
            let cf = fi_ark_closed_form(d, 30).unwrap();
            for (a, b) in dl.phi.iter().zip(&cf.phi) {
                assert!((a - b).abs() < 1e-10, "d={d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn closed_form_order_one() {
        for &d in &[0.05, 0.2, 0.45] {
            let cf = fi_ark_closed_form(d, 1).unwrap();
            assert!((cf.phi[0] - d / (1.0 - d)).abs() < 1e-13);
        }
    }

    #[test]
    fn closed_form_converges_to_ar_inf() {
        // φ_j(k) -> -a_j as k grows, for fixed j
        let d = 0.3;
        let a = crate::fraccoeff::ar_inf_coeffs(&LongMemoryModel::fi(d, 1.0).unwrap(), 3).values;
        let errs: Vec<f64> = [10, 40, 160, 640]
            .iter()
            .map(|&k| (fi_ark_closed_form(d, k).unwrap().phi[2] + a[3]).abs())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn reflection_coefficients_of_fi() {
        // partial autocorrelations of F(d) are d/(n-d)
        let d = 0.3;
        let m = durbin_levinson(&fi_acov(d, 50), 50).unwrap();
        for (n, p) in m.partials.iter().enumerate() {
            assert!((p - d / (n as f64 + 1.0 - d)).abs() < 1e-12);
        }
    }

    #[test]
    fn not_positive_definite_reports_order() {
        let acov = AutocovSeq::from_values(vec![1.0, 0.9, 0.0, 0.0]).unwrap();
        match durbin_levinson(&acov, 3) {
            Err(Error::NotPositiveDefinite { order }) => assert!(order >= 2),
            other => panic!("expected failure, got {other:?}"),
        }
        let short = fi_acov(0.2, 2);
        assert!(matches!(durbin_levinson(&short, 3), Err(Error::Argument(_))));
    }

    #[test]
    fn empirical_autocov_examples() {
        let s = SamplePath::new(vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let a = empirical_autocov(&s, 1, false).unwrap();
        assert_eq!(a.values, vec![1.0, 0.75]);
        let s = SamplePath::new(vec![2.0]).unwrap();
        assert_eq!(empirical_autocov(&s, 0, false).unwrap().values, vec![4.0]);
        assert!(matches!(empirical_autocov(&s, 1, false), Err(Error::Argument(_))));
    }

    #[test]
    fn demeaned_full_range_is_positive_semidefinite() {
        let y: Vec<f64> = (0..40).map(|t| ((t * 7919) % 37) as f64 * 0.1 + (t as f64 * 0.3).sin()).collect();
        let s = SamplePath::new(y).unwrap();
        let acov = empirical_autocov(&s, 39, true).unwrap();
        // recursion must survive to lag T-2 (the full-lag matrix is singular
        // only in the limit of exact PSD with rank T)
        durbin_levinson(&acov, 38).unwrap();
    }

    #[test]
    fn solve_examples() {
        let x = toeplitz_solve(&white(4.0, 3), &[1.0, 1.0, 1.0], 3).unwrap();
        assert!(x.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let acov = fi_acov(0.35, 20);
        let dl = durbin_levinson(&acov, 20).unwrap();
        let x = toeplitz_solve(&acov, &acov.values[1..=20], 20).unwrap();
        for (a, b) in x.iter().zip(&dl.phi) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn solve_residual_bound() {
        let acov = fi_acov(0.45, 512);
        let rhs: Vec<f64> = (0..512).map(|i| ((i * 31) % 17) as f64 - 8.0).collect();
        let x = toeplitz_solve(&acov, &rhs, 512).unwrap();
        let m = acov.toeplitz_matrix(512);
        let r = &m * DVector::from_column_slice(&x) - DVector::from_column_slice(&rhs);
        let rinf = r.amax();
        assert!(rinf <= 1e-8 * 8.0, "residual {rinf}");
    }
}
