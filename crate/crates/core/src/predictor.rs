//! One-step forecasts from a finite window.
//!
//! Windows are stored oldest-first; the forecast targets the value right
//! after the last element.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraccoeff::{ar_inf_coeffs, CoeffSeq, Convention, LongMemoryModel};
use crate::spectral::{whittle_fit, DEFAULT_D_BOUNDS};
use crate::toeplitz::{durbin_levinson, empirical_autocov, ArkModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub values: Vec<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: Option<LongMemoryModel>,
}

impl SamplePath {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("sample path must have at least one value".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("sample value at index {i} is not finite")));
        }
        Ok(Self { values, seed: None, model: None })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The `k` most recent values, oldest-first.
    pub fn last(&self, k: usize) -> &[f64] {
        &self.values[self.values.len() - k..]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ForecastMethod {
    WkTrunc,
    Ark,
    WkPlugin,
    ArkPlugin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub value: f64,
    pub method: ForecastMethod,
    pub order: usize,
}

/// `Σ_{j=1}^{k} w_j x_{k+1-j}` over an oldest-first window of length `k`.
fn apply_weights(weights: &[f64], recent: &[f64]) -> f64 {
    let k = weights.len();
    (1..=k).map(|j| weights[j - 1] * recent[k - j]).sum()
}

/// Truncated Wiener-Kolmogorov forecast `-Σ_{j=1}^{k} a_j X_{k+1-j}` with
/// `k` the window length.
pub fn wk_truncated_predict(arcoeffs: &CoeffSeq, window: &SamplePath) -> Result<Forecast> {
    if arcoeffs.convention != Convention::ArInf {
        return Err(Error::Argument("truncated predictor needs AR(∞) coefficients".into()));
    }
    let k = window.len();
    if arcoeffs.values.len() < k + 1 {
        return Err(Error::Argument(format!(
            "window of length {k} needs coefficients a_0..a_{k}, got {}",
            arcoeffs.values.len()
        )));
    }
    let w: Vec<f64> = arcoeffs.values[1..=k].iter().map(|a| -a).collect();
    Ok(Forecast { value: apply_weights(&w, &window.values), method: ForecastMethod::WkTrunc, order: k })
}

/// Fitted AR(k) forecast `Σ φ_j X_{n+1-j}` on the `k` most recent values.
pub fn ark_predict(model_k: &ArkModel, window: &SamplePath) -> Result<Forecast> {
    let k = model_k.k;
    if window.len() < k {
        return Err(Error::Argument(format!("window of length {} is shorter than the order {k}", window.len())));
    }
    Ok(Forecast { value: apply_weights(&model_k.phi, window.last(k)), method: ForecastMethod::Ark, order: k })
}

/// AR(∞) coefficients `a_0..a_k` of the F(d) model fitted to `train` by Whittle.
pub fn wk_plugin_coeffs(train: &SamplePath, k: usize) -> Result<CoeffSeq> {
    let fit = whittle_fit(train, DEFAULT_D_BOUNDS)?;
    let model = LongMemoryModel::fi(fit.d_hat, fit.sigma2_hat)?;
    Ok(ar_inf_coeffs(&model, k))
}

/// Yule-Walker AR(k) fit on the empirical autocovariances of `train`.
///
/// The training sample is demeaned, so a constant sample has zero variance
/// and is rejected by the recursion.
pub fn ark_plugin_model(train: &SamplePath, k: usize) -> Result<ArkModel> {
    let acov = empirical_autocov(train, k, true)?;
    durbin_levinson(&acov, k)
}

fn check_plugin(train: &SamplePath, window: &SamplePath, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Argument("order must be at least 1".into()));
    }
    if train.len() < 64 {
        return Err(Error::Argument(format!("training sample needs at least 64 values, got {}", train.len())));
    }
    if window.len() < k {
        return Err(Error::Argument(format!("window of length {} is shorter than the order {k}", window.len())));
    }
    Ok(())
}

/// Truncated Wiener-Kolmogorov forecast with `d` estimated on `train`.
pub fn wk_plugin_predict(train: &SamplePath, window: &SamplePath, k: usize) -> Result<Forecast> {
    check_plugin(train, window, k)?;
    let coeffs = wk_plugin_coeffs(train, k)?;
    let recent = SamplePath::new(window.last(k).to_vec())?;
    let f = wk_truncated_predict(&coeffs, &recent)?;
    Ok(Forecast { method: ForecastMethod::WkPlugin, ..f })
}

/// AR(k) forecast with coefficients estimated on `train`.
pub fn ark_plugin_predict(train: &SamplePath, window: &SamplePath, k: usize) -> Result<Forecast> {
    check_plugin(train, window, k)?;
    let m = ark_plugin_model(train, k)?;
    let f = ark_predict(&m, window)?;
    Ok(Forecast { method: ForecastMethod::ArkPlugin, ..f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraccoeff::exact_autocov;
    use crate::simulate::{gaussian_sample, SimulationPlan};

    fn fi(d: f64) -> LongMemoryModel {
        LongMemoryModel::fi(d, 1.0).unwrap()
    }

    fn path(v: &[f64]) -> SamplePath {
        SamplePath::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_paths() {
        assert!(SamplePath::new(vec![]).is_err());
        assert!(SamplePath::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn truncated_examples() {
        let a = ar_inf_coeffs(&fi(0.3), 4);
        assert_eq!(wk_truncated_predict(&a, &path(&[0.0; 4])).unwrap().value, 0.0);
        let f = wk_truncated_predict(&a, &path(&[2.0])).unwrap();
        assert!((f.value - 0.6).abs() < 1e-15);
        assert!(wk_truncated_predict(&a, &path(&[1.0; 5])).is_err());
        // most recent value gets the a_1 weight
        let f = wk_truncated_predict(&a, &path(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(f.value, -a.values[1]);
    }

    #[test]
    fn ark_examples() {
        let white = ArkModel { k: 3, phi: vec![0.0; 3], v: 1.0, partials: vec![0.0; 3] };
        assert_eq!(ark_predict(&white, &path(&[1.0, -2.0, 3.0])).unwrap().value, 0.0);
        let acov = exact_autocov(&fi(0.2), 1).unwrap();
        let m1 = durbin_levinson(&acov, 1).unwrap();
        let f = ark_predict(&m1, &path(&[5.0, 1.5])).unwrap();
        assert!((f.value - 1.5 * acov.values[1] / acov.values[0]).abs() < 1e-15);
        assert!(ark_predict(&white, &path(&[1.0])).is_err());
    }

    #[test]
    fn forecasts_are_linear() {
        let a = ar_inf_coeffs(&fi(0.35), 6);
        let m = durbin_levinson(&exact_autocov(&fi(0.35), 6).unwrap(), 6).unwrap();
        let x = [0.3, -1.2, 0.7, 2.0, -0.4, 1.1];
        let y = [1.0, 0.5, -0.25, 0.125, 3.0, -2.0];
        let c = 3.0;
        let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        for f in [
            |p: &SamplePath, a: &CoeffSeq, _: &ArkModel| wk_truncated_predict(a, p).unwrap().value,
            |p: &SamplePath, _: &CoeffSeq, m: &ArkModel| ark_predict(m, p).unwrap().value,
        ] {
            let fx = f(&path(&x), &a, &m);
            let fy = f(&path(&y), &a, &m);
            assert!((f(&path(&xy), &a, &m) - fx - fy).abs() < 1e-14);
            assert!((f(&path(&cx), &a, &m) - c * fx).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_train_is_degenerate() {
        let train = path(&[1.5; 128]);
        let window = path(&[1.0; 4]);
        assert!(matches!(ark_plugin_predict(&train, &window, 4), Err(Error::NotPositiveDefinite { .. })));
        assert!(wk_plugin_predict(&train, &window, 4).is_err());
    }

    #[test]
    fn plugin_forecasts_are_deterministic_and_linear() {
        let model = fi(0.3);
        let acov = exact_autocov(&model, 4096).unwrap();
        let train = gaussian_sample(&SimulationPlan::new(acov, 4096, 11).unwrap()).unwrap().path;
        let w: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let w2: Vec<f64> = w.iter().map(|v| -2.0 * v).collect();
        for f in [wk_plugin_predict, ark_plugin_predict] {
            let a = f(&train, &path(&w), 50).unwrap();
            let b = f(&train, &path(&w), 50).unwrap();
            assert_eq!(a, b);
            assert!(a.value.is_finite());
            let c = f(&train, &path(&w2), 50).unwrap();
            assert!((c.value + 2.0 * a.value).abs() < 1e-12 * (1.0 + a.value.abs()));
        }
    }
}
