use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use longmem::LongMemoryModel;

#[derive(Parser, Debug)]
#[command(name = "longmem", version, about = "Long-memory prediction experiments", propagate_version = true)]
pub struct Cli {
    /// JSON file with option values; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for Monte Carlo replicates.
    #[arg(long, global = true, env = "LONGMEM_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// C(d) over a grid of d: CSV `d,C`.
    CdCurve(CdCurve),
    /// r(k) over a (k, d) grid for F(d): CSV `k,d,r`.
    RatioCurve(RatioCurve),
    /// Truncation excess over a k grid: CSV `k,estimate,stderr,slope`.
    TruncRate(AnalyticRate),
    /// AR(k) excess over a k grid: CSV `k,estimate,stderr,slope`.
    ArkRate(AnalyticRate),
    /// Wiener-Kolmogorov plug-in error over a T grid: CSV `T,estimate,stderr,slope`.
    EstimationError(PluginRate),
    /// AR(k) plug-in error over a T grid: CSV `T,estimate,stderr,slope`.
    CoeffcovMc(PluginRate),
    /// Monte Carlo T·Cov(φ̂) against Σ⁻¹HΣ⁻¹: CSV `i,j,mc,theory`, summary JSON on stdout.
    HCheck(HCheckArgs),
    /// E(σ̂(0) - σ(0))² over an n grid: CSV `n,estimate,stderr,slope`.
    CovmomentMc(Covmoment),
    /// Whittle fits on simulated paths: CSV `rep,d_hat,sigma2_hat`.
    WhittleMc(WhittleMc),
    /// Exact Gaussian sample paths.
    Simulate(Simulate),
    /// One-step forecast from CSV inputs, printed as JSON.
    Predict(Predict),
    /// Whittle fit of a sample CSV, printed as JSON.
    Fit(Fit),
    /// Truncation vs estimation error over a (k, T) grid.
    TotalError(TotalError),
    /// AR(∞) / MA(∞) coefficients or autocovariances: CSV `index,value`.
    Coeffs(Coeffs),
    /// Order-k Yule-Walker model: CSV `j,phi_j` plus a JSON sidecar.
    Ark(Ark),
    /// Risk report for one (model, k), printed as JSON.
    Risk(Risk),
}

/// Options shared by commands that take a model.
#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOpts {
    /// Model as inline JSON `{"kind":"FI","d":0.3}` or a path to a JSON file.
    #[arg(long)]
    pub model: Option<String>,
    /// Shorthand for an F(d) model.
    #[arg(long)]
    pub d: Option<f64>,
    /// Innovation variance for the `--d` shorthand.
    #[arg(long)]
    pub sigma2: Option<f64>,
}

impl ModelOpts {
    pub fn resolve(&self, default_d: Option<f64>) -> anyhow::Result<LongMemoryModel> {
        if let Some(m) = &self.model {
            if self.d.is_some() {
                return Err(usage("give either --model or --d, not both"));
            }
            let text = if m.trim_start().starts_with('{') {
                m.clone()
            } else {
                std::fs::read_to_string(m).with_context(|| format!("reading model file {m}"))?
            };
            return LongMemoryModel::from_json(&text).map_err(|e| usage(format!("invalid model: {e}")));
        }
        let d = self.d.or(default_d).ok_or_else(|| usage("a model is required (--model or --d)"))?;
        LongMemoryModel::fi(d, self.sigma2.unwrap_or(1.0)).map_err(|e| usage(e.to_string()))
    }
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutOpts {
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdCurve {
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatioCurve {
    /// Memory parameters, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub d: Option<Vec<f64>>,
    /// Orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticRate {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PluginRate {
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HCheckArgs {
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Covmoment {
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhittleMc {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulate {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a single long-format `rep,index,value` file instead of one file per replicate.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub long: Option<bool>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    WkTrunc,
    Ark,
    WkPlugin,
    ArkPlugin,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Predict {
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub k: Option<usize>,
    /// CSV with a `value` column, oldest first.
    #[arg(long)]
    pub window: Option<PathBuf>,
    /// Training CSV for the plug-in methods.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fit {
    #[arg(long)]
    pub sample: Option<PathBuf>,
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    /// Include every evaluated (d, objective) pair.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub trace: Option<bool>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TotalError {
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutOpts,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeqKind {
    Ar,
    Ma,
    Acov,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Coeffs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub kind: Option<SeqKind>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ark {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Risk {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[arg(long)]
    pub k: Option<usize>,
}

/// Usage errors map to exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<longmem::Error>() {
        Some(longmem::Error::Argument(_)) | Some(longmem::Error::Domain(_)) => 2,
        _ => 1,
    }
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.into_iter().filter(|(_, v)| !v.is_null()).map(|(k, v)| (k, strip_nulls(v))).collect()),
        other => other,
    }
}

/// Overlays the command-line values of `args` on the `section` of the
/// config file and returns the merged options with their JSON form.
pub fn merge<T>(args: &T, file: Option<&Value>, section: &str) -> anyhow::Result<(T, Value)>
where
    T: Serialize + DeserializeOwned,
{
    let mut merged = serde_json::Map::new();
    if let Some(Value::Object(root)) = file {
        let scoped = root.get(section).cloned().unwrap_or_else(|| Value::Object(root.clone()));
        let Value::Object(scoped) = scoped else {
            return Err(usage(format!("config section `{section}` must be an object")));
        };
        for (k, v) in scoped {
            if k == "model" && v.is_object() {
                merged.insert(k, Value::String(v.to_string()));
            } else if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    if let Value::Object(cli) = strip_nulls(serde_json::to_value(args)?) {
        merged.extend(cli);
    }
    let value = Value::Object(merged);
    let resolved: T = serde_json::from_value(value.clone()).map_err(|e| usage(format!("invalid configuration: {e}")))?;
    Ok((resolved, value))
}

pub fn load_config(path: &Option<PathBuf>) -> anyhow::Result<Option<Value>> {
    let Some(p) = path else { return Ok(None) };
    let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("config {} is not valid JSON: {e}", p.display())))?;
    if !v.is_object() {
        return Err(usage("config file must hold a JSON object"));
    }
    Ok(Some(v))
}

/// SHA-256 of the resolved options, excluding output locations.
pub fn config_hash(command: &str, resolved: &Value) -> String {
    let mut v = resolved.clone();
    if let Value::Object(m) = &mut v {
        m.remove("out");
    }
    let text = format!("{command}:{v}");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn check_grid<T: PartialOrd + Copy + std::fmt::Debug>(name: &str, grid: &[T]) -> anyhow::Result<()> {
    if grid.is_empty() {
        return Err(usage(format!("{name} must not be empty")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage(format!("{name} must be strictly increasing, got {grid:?}")));
    }
    Ok(())
}

pub fn check_reps(reps: usize) -> anyhow::Result<()> {
    if reps == 0 {
        return Err(usage("reps must be at least 1"));
    }
    Ok(())
}

pub fn required<T>(v: Option<T>, flag: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| usage(format!("--{flag} is required")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_section() {
        let file = serde_json::json!({"ratio-curve": {"d": [0.1, 0.2], "k": [5]}});
        let args = RatioCurve { k: Some(vec![7, 9]), ..Default::default() };
        let (r, _) = merge(&args, Some(&file), "ratio-curve").unwrap();
        assert_eq!(r.d, Some(vec![0.1, 0.2]));
        assert_eq!(r.k, Some(vec![7, 9]));
    }

    #[test]
    fn inline_model_object_in_file() {
        let file = serde_json::json!({"risk": {"model": {"kind": "FI", "d": 0.2, "ar": [], "ma": [], "sigma2": 2.0}, "k": 3}});
        let (r, _) = merge(&Risk::default(), Some(&file), "risk").unwrap();
        let m = r.model.resolve(None).unwrap();
        assert_eq!(m.d(), 0.2);
        assert_eq!(m.sigma2(), 2.0);
    }

    #[test]
    fn hash_ignores_output_path() {
        let a = serde_json::json!({"steps": 3, "out": "/tmp/a.csv"});
        let b = serde_json::json!({"steps": 3, "out": "/tmp/b.csv"});
        let c = serde_json::json!({"steps": 4});
        assert_eq!(config_hash("cd-curve", &a), config_hash("cd-curve", &b));
        assert_ne!(config_hash("cd-curve", &a), config_hash("cd-curve", &c));
        assert_ne!(config_hash("cd-curve", &a), config_hash("trunc-rate", &a));
    }

    #[test]
    fn grid_validation() {
        assert!(check_grid("k", &[1, 2, 3]).is_ok());
        assert!(check_grid::<usize>("k", &[]).is_err());
        assert!(check_grid("k", &[2, 2]).is_err());
        assert_eq!(exit_code(&check_grid("k", &[3, 1]).unwrap_err()), 2);
        assert_eq!(exit_code(&anyhow::Error::new(longmem::Error::Singularity)), 1);
    }

    #[test]
    fn model_flags_conflict() {
        let m = ModelOpts { model: Some(r#"{"kind":"FI","d":0.1}"#.into()), d: Some(0.2), sigma2: None };
        assert!(m.resolve(None).is_err());
    }
}
