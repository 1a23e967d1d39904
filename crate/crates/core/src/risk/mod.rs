//! Mean-squared prediction-error quantities.
//!
//! [`analytic`] holds exact excess risks, the constant `C(d)`, the ratio
//! `r(k)`, the three-term decomposition and the matrix `H`; [`montecarlo`]
//! holds the seeded rate experiments.

pub mod analytic;
pub mod montecarlo;

pub use analytic::{
    ark_excess, c_of_d, compute_h, excess_decomposition, excess_decomposition_model, r_of_k,
    risk_report, truncation_excess, truncation_excess_with, Decomposition, RiskReport, TailOptions,
};
pub use montecarlo::{
    coeffcov_check, coeffcov_scaling, covmoment_scaling, plugin_excess_point, whittle_mc,
    wk_plugin_scaling, HCheck, PluginKind, WhittleRep, MIN_REPS,
};
