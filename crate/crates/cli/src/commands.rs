use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

use longmem::io::{artifact_bytes, atomic_write, fmt_f64, index_value_rows, read_values, write_ark_model, ArtifactHeader};
use longmem::risk::{
    ark_excess, c_of_d, coeffcov_check, coeffcov_scaling, covmoment_scaling, plugin_excess_point, r_of_k, risk_report,
    truncation_excess, whittle_mc, wk_plugin_scaling, PluginKind,
};
use longmem::risk::montecarlo::{replicate, Generator};
use longmem::spectral::DEFAULT_D_BOUNDS;
use longmem::stats::{loglog_slope, GridPoint, SlopeReport};
use longmem::{
    ar_inf_coeffs, ark_plugin_predict, ark_predict, durbin_levinson, exact_autocov, fi_ark_closed_form,
    ma_inf_coeffs, whittle_fit, wk_plugin_predict, wk_truncated_predict, LongMemoryModel, SamplePath,
};

use crate::config::{
    check_grid, check_reps, config_hash, load_config, merge, required, usage, Cli, Command, MethodArg, SeqKind,
};

const DEFAULT_SEED: u64 = 20240611;

struct Ctx {
    command: &'static str,
    hash: String,
}

impl Ctx {
    fn header(&self, seed: Option<u64>) -> ArtifactHeader {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        ArtifactHeader::new()
            .with("command", self.command)
            .with("version", env!("CARGO_PKG_VERSION"))
            .with("seed", seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into()))
            .with("config_sha256", &self.hash)
            .with("created_unix", created)
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => atomic_write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(bytes)?;
            Ok(())
        }
    }
}

fn emit_csv(ctx: &Ctx, seed: Option<u64>, out: Option<&Path>, columns: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    emit(out, &artifact_bytes(&ctx.header(seed), columns, rows)?)
}

fn print_json<T: Serialize>(v: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn slope_rows(report: &SlopeReport) -> Vec<Vec<String>> {
    report
        .points
        .iter()
        .map(|p| vec![(p.x as usize).to_string(), fmt_f64(p.estimate), fmt_f64(p.stderr), fmt_f64(report.slope)])
        .collect()
}

fn check_d(d: f64) -> anyhow::Result<()> {
    if !(d > 0.0 && d < 0.5) {
        return Err(usage(format!("d must lie in (0, 1/2), got {d}")));
    }
    Ok(())
}

fn report_slope(report: &SlopeReport) {
    eprintln!("slope {:.4} ± {:.4}", report.slope, report.slope_se);
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let file = load_config(&cli.config)?;
    let file = file.as_ref();

    macro_rules! resolve {
        ($args:expr, $name:literal) => {{
            let (a, v) = merge(&$args, file, $name)?;
            (a, Ctx { command: $name, hash: config_hash($name, &v) })
        }};
    }

    match cli.command {
        Command::CdCurve(a) => {
            let (a, ctx) = resolve!(a, "cd-curve");
            let (lo, hi, steps) = (a.d_min.unwrap_or(0.01), a.d_max.unwrap_or(0.49), a.steps.unwrap_or(49));
            check_d(lo)?;
            check_d(hi)?;
            if steps < 2 || lo >= hi {
                return Err(usage("need d-min < d-max and at least 2 steps"));
            }
            let rows = (0..steps)
                .map(|i| {
                    let d = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
                    Ok(vec![fmt_f64(d), fmt_f64(c_of_d(d)?)])
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            emit_csv(&ctx, None, a.out.out.as_deref(), &["d", "C"], &rows)
        }
        Command::RatioCurve(a) => {
            let (a, ctx) = resolve!(a, "ratio-curve");
            let ds = a.d.unwrap_or_else(|| vec![0.1, 0.2, 0.3, 0.4]);
            let ks = a.k.unwrap_or_else(|| vec![1, 2, 5, 10, 20, 50, 100]);
            check_grid("k", &ks)?;
            if ks[0] == 0 {
                return Err(usage("k must be at least 1"));
            }
            ds.iter().try_for_each(|&d| check_d(d))?;
            let mut rows = Vec::new();
            for &d in &ds {
                for &k in &ks {
                    rows.push(vec![k.to_string(), fmt_f64(d), fmt_f64(r_of_k(d, k)?)]);
                }
            }
            emit_csv(&ctx, None, a.out.out.as_deref(), &["k", "d", "r"], &rows)
        }
        Command::TruncRate(a) => analytic_rate(a, file, "trunc-rate"),
        Command::ArkRate(a) => analytic_rate(a, file, "ark-rate"),
        Command::EstimationError(a) => {
            let (a, ctx) = resolve!(a, "estimation-error");
            plugin_rate(&ctx, a, PluginKind::Wk)
        }
        Command::CoeffcovMc(a) => {
            let (a, ctx) = resolve!(a, "coeffcov-mc");
            plugin_rate(&ctx, a, PluginKind::Ark)
        }
        Command::HCheck(a) => {
            let (a, ctx) = resolve!(a, "h-check");
            let (d, k, t, reps, seed) =
                (a.d.unwrap_or(0.1), a.k.unwrap_or(2), a.t.unwrap_or(2048), a.reps.unwrap_or(500), a.seed.unwrap_or(DEFAULT_SEED));
            check_d(d)?;
            check_reps(reps)?;
            let h = coeffcov_check(d, k, t, reps, seed)?;
            let rows: Vec<Vec<String>> = (0..k * k)
                .map(|i| vec![(i / k + 1).to_string(), (i % k + 1).to_string(), fmt_f64(h.mc[i]), fmt_f64(h.theory[i])])
                .collect();
            emit_csv(&ctx, Some(seed), a.out.out.as_deref(), &["i", "j", "mc", "theory"], &rows)?;
            let summary = json!({
                "k": h.k, "t": h.t, "reps": h.reps, "c_fit": h.c_fit, "best_c": h.best_c,
                "within_factor_two": h.candidates.iter().map(|c| json!({"c": c.0, "ok": h.within_factor_two(c.0)})).collect::<Vec<_>>(),
            });
            if a.out.out.is_some() {
                print_json(&summary)
            } else {
                eprintln!("{summary}");
                Ok(())
            }
        }
        Command::CovmomentMc(a) => {
            let (a, ctx) = resolve!(a, "covmoment-mc");
            let d = a.d.unwrap_or(0.1);
            let grid = a.n_grid.unwrap_or_else(|| vec![1024, 2048, 4096, 8192]);
            let (reps, seed) = (a.reps.unwrap_or(500), a.seed.unwrap_or(DEFAULT_SEED));
            check_d(d)?;
            check_grid("n-grid", &grid)?;
            check_reps(reps)?;
            let report = covmoment_scaling(d, &grid, reps, seed)?;
            report_slope(&report);
            emit_csv(&ctx, Some(seed), a.out.out.as_deref(), &["n", "estimate", "stderr", "slope"], &slope_rows(&report))
        }
        Command::WhittleMc(a) => {
            let (a, ctx) = resolve!(a, "whittle-mc");
            let model = a.model.resolve(Some(0.3))?;
            let (t, reps, seed) = (a.t.unwrap_or(4096), a.reps.unwrap_or(100), a.seed.unwrap_or(DEFAULT_SEED));
            check_reps(reps)?;
            let fits = whittle_mc(&model, t, reps, seed)?;
            let rows: Vec<Vec<String>> =
                fits.iter().map(|f| vec![f.rep.to_string(), fmt_f64(f.d_hat), fmt_f64(f.sigma2_hat)]).collect();
            emit_csv(&ctx, Some(seed), a.out.out.as_deref(), &["rep", "d_hat", "sigma2_hat"], &rows)
        }
        Command::Simulate(a) => {
            let (a, ctx) = resolve!(a, "simulate");
            let model = a.model.resolve(None)?;
            let n = required(a.n, "n")?;
            let out = required(a.out, "out")?;
            let (reps, seed) = (a.reps.unwrap_or(1), a.seed.unwrap_or(DEFAULT_SEED));
            check_reps(reps)?;
            if n == 0 {
                return Err(usage("n must be at least 1"));
            }
            let gen = Generator::new(&model, n)?;
            let paths = replicate(reps, seed, 0, |stream| gen.draw(stream))?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let header = ctx.header(Some(seed)).with("model", model.to_json());
            if a.long.unwrap_or(false) {
                let rows: Vec<Vec<String>> = paths
                    .iter()
                    .enumerate()
                    .flat_map(|(r, p)| p.values.iter().enumerate().map(move |(i, v)| vec![r.to_string(), i.to_string(), fmt_f64(*v)]))
                    .collect();
                atomic_write(&out.join("paths.csv"), &artifact_bytes(&header, &["rep", "index", "value"], &rows)?)?;
            } else {
                for (r, p) in paths.iter().enumerate() {
                    let bytes = artifact_bytes(&header.clone().with("rep", r), &["index", "value"], &index_value_rows(&p.values))?;
                    atomic_write(&out.join(format!("rep_{r:04}.csv")), &bytes)?;
                }
            }
            Ok(())
        }
        Command::Predict(a) => {
            let (a, _ctx) = resolve!(a, "predict");
            let method = required(a.method, "method")?;
            let window = SamplePath::new(read_values(&required(a.window, "window")?)?)?;
            let k = a.k.unwrap_or(window.len());
            if k == 0 || k > window.len() {
                return Err(usage(format!("k must lie in 1..={}, got {k}", window.len())));
            }
            let recent = SamplePath::new(window.last(k).to_vec())?;
            let train = || -> anyhow::Result<SamplePath> {
                let p = a.train.as_ref().ok_or_else(|| usage("--train is required for plug-in methods"))?;
                Ok(SamplePath::new(read_values(p)?)?)
            };
            let forecast = match method {
                MethodArg::WkTrunc => wk_truncated_predict(&ar_inf_coeffs(&a.model.resolve(None)?, k), &recent)?,
                MethodArg::Ark => ark_predict(&fitted_ark(&a.model.resolve(None)?, k)?, &recent)?,
                MethodArg::WkPlugin => wk_plugin_predict(&train()?, &recent, k)?,
                MethodArg::ArkPlugin => ark_plugin_predict(&train()?, &recent, k)?,
            };
            print_json(&json!({ "method": method, "k": forecast.order, "value": forecast.value }))
        }
        Command::Fit(a) => {
            let (a, _ctx) = resolve!(a, "fit");
            let sample = SamplePath::new(read_values(&required(a.sample, "sample")?)?)?;
            let bounds = (a.d_min.unwrap_or(DEFAULT_D_BOUNDS.0), a.d_max.unwrap_or(DEFAULT_D_BOUNDS.1));
            let mut fit = whittle_fit(&sample, bounds)?;
            if !a.trace.unwrap_or(false) {
                fit.grid_trace = None;
            }
            print_json(&fit)
        }
        Command::TotalError(a) => {
            let (a, ctx) = resolve!(a, "total-error");
            let d = a.d.unwrap_or(0.3);
            let ks = a.k_grid.unwrap_or_else(|| vec![5, 10, 20, 50]);
            let ts = a.t_grid.unwrap_or_else(|| vec![1024, 4096]);
            let (reps, seed) = (a.reps.unwrap_or(100), a.seed.unwrap_or(DEFAULT_SEED));
            check_d(d)?;
            check_grid("k-grid", &ks)?;
            check_grid("t-grid", &ts)?;
            check_reps(reps)?;
            let model = LongMemoryModel::fi(d, 1.0)?;
            let mut rows = Vec::new();
            for (ki, &k) in ks.iter().enumerate() {
                let (te, ae) = (truncation_excess(&model, k)?, ark_excess(&model, k)?);
                for (ti, &t) in ts.iter().enumerate() {
                    let cell = (ki * ts.len() + ti) as u64;
                    let wk = plugin_excess_point(PluginKind::Wk, d, k, t, reps, seed, cell)?;
                    let ar = plugin_excess_point(PluginKind::Ark, d, k, t, reps, seed, cell)?;
                    rows.push(vec![
                        k.to_string(),
                        t.to_string(),
                        fmt_f64(te),
                        fmt_f64(wk.estimate),
                        fmt_f64(wk.stderr),
                        fmt_f64(te + wk.estimate),
                        fmt_f64(ae),
                        fmt_f64(ar.estimate),
                        fmt_f64(ar.stderr),
                        fmt_f64(ae + ar.estimate),
                    ]);
                }
            }
            let cols = [
                "k", "T", "trunc_excess", "wk_estimation", "wk_estimation_se", "wk_total", "ark_excess", "ark_estimation",
                "ark_estimation_se", "ark_total",
            ];
            emit_csv(&ctx, Some(seed), a.out.out.as_deref(), &cols, &rows)
        }
        Command::Coeffs(a) => {
            let (a, ctx) = resolve!(a, "coeffs");
            let model = a.model.resolve(None)?;
            let n = a.n.unwrap_or(100);
            let values = match a.kind.unwrap_or(SeqKind::Ar) {
                SeqKind::Ar => ar_inf_coeffs(&model, n).values,
                SeqKind::Ma => ma_inf_coeffs(&model, n).values,
                SeqKind::Acov => exact_autocov(&model, n)?.values,
            };
            let header = ctx.header(None).with("model", model.to_json());
            emit(a.out.out.as_deref(), &artifact_bytes(&header, &["index", "value"], &index_value_rows(&values))?)
        }
        Command::Ark(a) => {
            let (a, ctx) = resolve!(a, "ark");
            let model = a.model.resolve(None)?;
            let k = required(a.k, "k")?;
            let out = required(a.out.out, "out")?;
            let fitted = fitted_ark(&model, k)?;
            write_ark_model(&out, &ctx.header(None).with("model", model.to_json()), &fitted)?;
            Ok(())
        }
        Command::Risk(a) => {
            let (a, _ctx) = resolve!(a, "risk");
            let model = a.model.resolve(None)?;
            let k = required(a.k, "k")?;
            print_json(&risk_report(&model, k)?)
        }
    }
}

fn fitted_ark(model: &LongMemoryModel, k: usize) -> anyhow::Result<longmem::ArkModel> {
    if k == 0 {
        return Err(usage("k must be at least 1"));
    }
    Ok(if model.is_fi() && model.sigma2() == 1.0 {
        fi_ark_closed_form(model.d(), k)?
    } else {
        durbin_levinson(&exact_autocov(model, k)?, k)?
    })
}

fn analytic_rate(a: crate::config::AnalyticRate, file: Option<&Value>, name: &'static str) -> anyhow::Result<()> {
    let (a, v) = merge(&a, file, name)?;
    let ctx = Ctx { command: name, hash: config_hash(name, &v) };
    let model = a.model.resolve(Some(0.3))?;
    let ks = a.k_grid.unwrap_or_else(|| vec![100, 200, 400, 800, 1600]);
    check_grid("k-grid", &ks)?;
    if ks[0] == 0 {
        return Err(usage("k must be at least 1"));
    }
    let points = ks
        .iter()
        .map(|&k| {
            let e = if name == "trunc-rate" { truncation_excess(&model, k)? } else { ark_excess(&model, k)? };
            Ok(GridPoint { x: k as f64, estimate: e, stderr: 0.0 })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let report = if points.len() >= 2 {
        loglog_slope(points)?
    } else {
        SlopeReport { points, slope: f64::NAN, slope_se: f64::NAN, intercept: f64::NAN }
    };
    emit_csv(&ctx, None, a.out.out.as_deref(), &["k", "estimate", "stderr", "slope"], &slope_rows(&report))
}

fn plugin_rate(ctx: &Ctx, a: crate::config::PluginRate, kind: PluginKind) -> anyhow::Result<()> {
    let d = a.d.unwrap_or(if kind == PluginKind::Wk { 0.3 } else { 0.1 });
    let k = a.k.unwrap_or(if kind == PluginKind::Wk { 50 } else { 8 });
    let grid = a.t_grid.unwrap_or_else(|| vec![1024, 2048, 4096, 8192]);
    let (reps, seed) = (a.reps.unwrap_or(200), a.seed.unwrap_or(DEFAULT_SEED));
    check_d(d)?;
    check_grid("t-grid", &grid)?;
    check_reps(reps)?;
    let report = match kind {
        PluginKind::Wk => wk_plugin_scaling(d, k, &grid, reps, seed)?,
        PluginKind::Ark => coeffcov_scaling(d, k, &grid, reps, seed)?,
    };
    report_slope(&report);
    emit_csv(ctx, Some(seed), a.out.out.as_deref(), &["T", "estimate", "stderr", "slope"], &slope_rows(&report))
}
