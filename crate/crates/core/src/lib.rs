//! Next-step linear prediction of long-memory time series.
//!
//! The crate covers fractionally integrated noise F(d) and FARIMA(p, d, q)
//! models with `0 < d < 1/2`:
//!
//! * [`fraccoeff`]: exact AR(∞)/MA(∞) coefficients, autocovariances and
//!   spectral densities.
//! * [`toeplitz`]: Yule-Walker systems, the Durbin-Levinson recursion and the
//!   closed-form AR(k) coefficients of F(d).
//! * [`predictor`]: truncated Wiener-Kolmogorov and fitted AR(k) forecasts,
//!   with exact or estimated coefficients.
//! * [`risk`]: exact prediction-error quantities and Monte Carlo rate
//!   experiments.
//! * [`spectral`]: periodogram and Whittle estimation of `d`.
//! * [`simulate`]: exact Gaussian sample paths.
//!
//! Sign conventions: [`CoeffSeq`] in [`Convention::ArInf`] stores `a_j` with
//! `a_0 = 1`, so that `ε_n = Σ a_j X_{n-j}`. [`ArkModel::phi`] stores
//! forecast weights, `X̂_{n+1} = Σ φ_j X_{n+1-j}`. The two are related by
//! `φ_j = -a_{j,k}`.

pub mod error;
pub mod fraccoeff;
pub mod io;
pub mod predictor;
pub mod quad;
pub mod risk;
pub mod seed;
pub mod simulate;
pub mod special;
pub mod spectral;
pub mod stats;
pub mod toeplitz;

pub use error::{Error, Result};
pub use fraccoeff::{
    ar_inf_coeffs, exact_autocov, ma_inf_coeffs, spectral_density, AutocovSeq, AutocovSource,
    CoeffSeq, Convention, LongMemoryModel, ModelKind,
};
pub use predictor::{
    ark_plugin_predict, ark_predict, wk_plugin_predict, wk_truncated_predict, Forecast,
    ForecastMethod, SamplePath,
};
pub use risk::{
    ark_excess, c_of_d, compute_h, excess_decomposition, r_of_k, risk_report, truncation_excess,
    Decomposition, RiskReport,
};
pub use simulate::{gaussian_sample, SimulatedPath, SimulationMethod, SimulationPlan};
pub use spectral::{periodogram, whittle_fit, whittle_objective, Periodogram, WhittleFit};
pub use toeplitz::{durbin_levinson, empirical_autocov, fi_ark_closed_form, toeplitz_solve, ArkModel};
