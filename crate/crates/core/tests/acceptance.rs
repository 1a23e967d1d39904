//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p longmem --test acceptance`. The process exits
//! non-zero when any criterion fails.

use std::time::{Duration, Instant};

use longmem::fraccoeff::{ar_inf_coeffs, exact_autocov, ma_inf_coeffs, LongMemoryModel};
use longmem::risk::montecarlo::{coeffcov_check, coeffcov_scaling, covmoment_scaling, whittle_mc, wk_plugin_scaling};
use longmem::risk::{ark_excess, c_of_d, compute_h, excess_decomposition, truncation_excess};
use longmem::seed::NormalStream;
use longmem::spectral::periodogram;
use longmem::toeplitz::{durbin_levinson, fi_ark_closed_form};
use longmem::SamplePath;
use statrs::function::gamma::gamma;

const SEED: u64 = 20_240_611;
const T_GRID: [usize; 4] = [1024, 2048, 4096, 8192];

struct Outcome {
    pass: bool,
    detail: String,
}

fn fi(d: f64) -> LongMemoryModel {
    LongMemoryModel::fi(d, 1.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn c1_cd_curve() -> Outcome {
    let grid: Vec<f64> = (0..49).map(|i| 0.01 + 0.01 * i as f64).collect();
    let curve: Vec<f64> = grid.iter().map(|&d| c_of_d(d).unwrap()).collect();
    let c01 = curve[0];
    let small_ok = rel(c01, 1e-4) <= 0.10;
    let d = 0.49;
    let equiv = 1.0 / ((1.0 - 2.0 * d) * gamma(-0.5).powi(2) * gamma(0.5) * gamma(1.5));
    let c49 = *curve.last().unwrap();
    let large_ok = rel(c49, equiv) <= 0.10;
    let dq: f64 = 0.25;
    let oracle = gamma(1.0 - 2.0 * dq) * gamma(2.0 * dq) / (gamma(-dq).powi(2) * gamma(dq) * gamma(1.0 + dq));
    let c25 = c_of_d(dq).unwrap();
    let mid_ok = (c25 - oracle).abs() <= 1e-10;
    Outcome {
        pass: small_ok && large_ok && mid_ok,
        detail: format!(
            "C(0.01)={c01:.4e} vs 1e-4 (rel {:.3}, tol 0.10, {}); C(0.49)={c49:.5} vs {equiv:.5} (rel {:.3}, {}); C(0.25)={c25:.12} vs oracle (abs {:.1e}, tol 1e-10, {})",
            rel(c01, 1e-4),
            ok(small_ok),
            rel(c49, equiv),
            ok(large_ok),
            (c25 - oracle).abs(),
            ok(mid_ok)
        ),
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

const K_GRID: [usize; 5] = [100, 200, 400, 800, 1600];

fn c2_truncation_rate() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &d in &[0.1, 0.2, 0.3, 0.4] {
        let c = c_of_d(d).unwrap();
        let scaled: Vec<f64> = K_GRID.iter().map(|&k| k as f64 * truncation_excess(&fi(d), k).unwrap()).collect();
        let errs: Vec<f64> = scaled.iter().map(|v| (v - c).abs()).collect();
        let monotone = errs.windows(2).all(|w| w[1] < w[0]);
        let last = *scaled.last().unwrap();
        let close = rel(last, c) <= 0.15;
        pass &= monotone && close;
        parts.push(format!(
            "d={d}: 1600*excess={last:.5} vs C={c:.5} (rel {:.3}, {}; monotone error {})",
            rel(last, c),
            ok(close),
            ok(monotone)
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c3_ark_dominance() -> Outcome {
    let mut dominance = true;
    let mut worst_gap = f64::INFINITY;
    for &d in &[0.1, 0.2, 0.3, 0.4] {
        for &k in &K_GRID {
            let t = truncation_excess(&fi(d), k).unwrap();
            let a = ark_excess(&fi(d), k).unwrap();
            dominance &= a <= t;
            worst_gap = worst_gap.min(t - a);
        }
    }
    let mut pass = dominance;
    let mut parts = vec![format!("ark <= trunc on 20 (d,k) pairs: {} (min gap {worst_gap:.3e})", ok(dominance))];
    for &d in &[0.2, 0.3] {
        let c = c_of_d(d).unwrap();
        let v = 800.0 * ark_excess(&fi(d), 800).unwrap();
        let close = rel(v, c) <= 0.15;
        pass &= close;
        parts.push(format!("d={d}: 800*ark={v:.5} vs C={c:.5} (rel {:.3}, tol 0.15, {})", rel(v, c), ok(close)));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c4_ratio() -> Outcome {
    let dec = excess_decomposition(0.35, 30).unwrap();
    let r = dec.ratio();
    let big = r > 0.5;
    let mut worst: f64 = 0.0;
    for &d in &[0.1, 0.25, 0.4] {
        for &k in &[10, 50, 200] {
            let via_terms = excess_decomposition(d, k).unwrap().ratio();
            let t = truncation_excess(&fi(d), k).unwrap();
            let a = ark_excess(&fi(d), k).unwrap();
            worst = worst.max(rel(via_terms, (t - a) / t));
        }
    }
    let agree = worst <= 1e-6;
    Outcome {
        pass: big && agree,
        detail: format!(
            "r(0.35,30)={r:.4} > 0.5: {}; two computations max rel diff {worst:.2e} on 9 points (tol 1e-6, {})",
            ok(big),
            ok(agree)
        ),
    }
}

fn c5_yule_walker() -> Outcome {
    let mut worst: f64 = 0.0;
    for &d in &[0.1, 0.25, 0.4] {
        let acov = exact_autocov(&fi(d), 50).unwrap();
        for k in 1..=50 {
            let dl = durbin_levinson(&acov, k).unwrap();
            let cf = fi_ark_closed_form(d, k).unwrap();
            for (a, b) in dl.phi.iter().zip(&cf.phi) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Outcome { pass: worst <= 1e-10, detail: format!("max |DL - closed form| = {worst:.2e} over d in {{0.1,0.25,0.4}}, k <= 50 (tol 1e-10)") }
}

fn c6_whittle() -> Outcome {
    let reps = whittle_mc(&fi(0.3), 4096, 100, SEED).unwrap();
    let mae = reps.iter().map(|r| (r.d_hat - 0.3).abs()).sum::<f64>() / reps.len() as f64;
    Outcome { pass: mae <= 0.05, detail: format!("mean |d_hat - 0.3| = {mae:.4} over 100 reps, T=4096 (tol 0.05)") }
}

fn c7_plugin_scaling() -> Outcome {
    let wk = wk_plugin_scaling(0.1, 8, &T_GRID, 200, SEED).unwrap();
    let ar = coeffcov_scaling(0.1, 8, &T_GRID, 200, SEED).unwrap();
    let wk_ok = (wk.slope + 1.0).abs() <= 0.3;
    let ar_ok = (ar.slope + 1.0).abs() <= 0.3;
    Outcome {
        pass: wk_ok && ar_ok,
        detail: format!(
            "d=0.1 k=8: WK plug-in slope {:.3} (se {:.3}, {}); AR(k) plug-in slope {:.3} (se {:.3}, {}); target -1 +/- 0.3",
            wk.slope,
            wk.slope_se,
            ok(wk_ok),
            ar.slope,
            ar.slope_se,
            ok(ar_ok)
        ),
    }
}

fn c8_covmoment() -> Outcome {
    let lo = covmoment_scaling(0.1, &T_GRID, 200, SEED).unwrap();
    let hi = covmoment_scaling(0.4, &T_GRID, 200, SEED).unwrap();
    let lo_ok = (lo.slope + 1.0).abs() <= 0.3;
    let hi_ok = (hi.slope - (4.0 * 0.4 - 2.0)).abs() <= 0.3;
    Outcome {
        pass: lo_ok && hi_ok,
        detail: format!(
            "d=0.1 slope {:.3} (se {:.3}, target -1 +/- 0.3, {}); d=0.4 slope {:.3} (se {:.3}, target -0.4 +/- 0.3, {})",
            lo.slope,
            lo.slope_se,
            ok(lo_ok),
            hi.slope,
            hi.slope_se,
            ok(hi_ok)
        ),
    }
}

fn c9_h_matrix() -> Outcome {
    let m = fi(0.1);
    let mut psd = true;
    let mut sym: f64 = 0.0;
    for k in [1, 2, 5, 10] {
        let fit = durbin_levinson(&exact_autocov(&m, k).unwrap(), k).unwrap();
        let h = compute_h(&m, &fit).unwrap();
        sym = sym.max((&h - h.transpose()).amax());
        psd &= h.symmetric_eigen().eigenvalues.iter().all(|&e| e >= -1e-10);
    }
    let chk = coeffcov_check(0.1, 2, 2048, 500, SEED).unwrap();
    let both = chk.within_factor_two(2.0) && chk.within_factor_two(4.0);
    let cands: Vec<String> = chk
        .candidates
        .iter()
        .map(|(c, f, g)| format!("c={c}: frobenius ratio {f:.3}, worst diagonal factor {g:.3}"))
        .collect();
    Outcome {
        pass: sym <= 1e-12 && psd && both,
        detail: format!(
            "H symmetric (max asym {sym:.1e}) and PSD: {}; {}; fitted c={:.3}, better c={}",
            ok(sym <= 1e-12 && psd),
            cands.join(", "),
            chk.c_fit,
            chk.best_c
        ),
    }
}

fn c10_identities() -> Outcome {
    let mut rng = NormalStream::new(SEED);
    let mut conv: f64 = 0.0;
    for _ in 0..10 {
        let d = 0.01 + 0.48 * rng.uniform();
        let model = if rng.uniform() < 0.5 {
            fi(d)
        } else {
            LongMemoryModel::farima(d, vec![0.9 * rng.uniform() - 0.45], vec![0.9 * rng.uniform() - 0.45], 1.0).unwrap()
        };
        let a = ar_inf_coeffs(&model, 200).values;
        let b = ma_inf_coeffs(&model, 200).values;
        for m in 1..=200 {
            conv = conv.max((0..=m).map(|j| a[j] * b[m - j]).sum::<f64>().abs());
        }
    }
    let mut parseval: f64 = 0.0;
    for &t in &[2usize, 3, 17, 256, 1000] {
        let y: Vec<f64> = (0..t).map(|_| rng.normal() + 3.0).collect();
        let mean = y.iter().sum::<f64>() / t as f64;
        let s0 = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t as f64;
        let p = periodogram(&SamplePath::new(y).unwrap()).unwrap();
        parseval = parseval.max(rel(p.parseval_sum(), s0));
    }
    let mut yw: f64 = 0.0;
    for _ in 0..10 {
        let d = 0.01 + 0.48 * rng.uniform();
        let k = 1 + (rng.uniform() * 200.0) as usize;
        let acov = exact_autocov(&fi(d), k).unwrap();
        yw = yw.max(durbin_levinson(&acov, k).unwrap().yule_walker_residual(&acov));
    }
    let mut dec_sum: f64 = 0.0;
    let mut dec_t3: f64 = 0.0;
    for _ in 0..4 {
        let d = 0.05 + 0.4 * rng.uniform();
        let k = 5 + (rng.uniform() * 100.0) as usize;
        let dec = excess_decomposition(d, k).unwrap();
        dec_sum = dec_sum.max(rel(dec.sum(), ark_excess(&fi(d), k).unwrap()));
        dec_t3 = dec_t3.max(rel(dec.term3.abs(), truncation_excess(&fi(d), k).unwrap()));
    }
    let pass = conv <= 1e-10 && parseval <= 1e-10 && yw <= 1e-9 && dec_sum <= 1e-8 && dec_t3 <= 1e-8;
    Outcome {
        pass,
        detail: format!(
            "A*B=1 max {conv:.1e} (tol 1e-10); Parseval {parseval:.1e} (1e-10); Yule-Walker residual {yw:.1e} (1e-9); term sum vs ark {dec_sum:.1e} (1e-8); |term3| vs trunc {dec_t3:.1e} (1e-8)"
        ),
    }
}

fn c11_determinism() -> Outcome {
    let run = |threads: usize| -> String {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            let grid = [256, 512];
            let parts = [
                serde_json::to_string(&coeffcov_scaling(0.3, 4, &grid, 50, 7).unwrap()).unwrap(),
                serde_json::to_string(&wk_plugin_scaling(0.3, 4, &grid, 50, 7).unwrap()).unwrap(),
                serde_json::to_string(&covmoment_scaling(0.3, &grid, 50, 7).unwrap()).unwrap(),
                serde_json::to_string(&coeffcov_check(0.1, 2, 512, 50, 7).unwrap()).unwrap(),
                serde_json::to_string(&whittle_mc(&fi(0.3), 256, 20, 7).unwrap()).unwrap(),
            ];
            parts.join("\n")
        })
    };
    let a = run(1);
    let b = run(1);
    let c = run(4);
    let pass = a == b && a == c;
    Outcome {
        pass,
        detail: format!(
            "five MC experiments serialized: rerun identical {}, 1 vs 4 threads identical {} ({} bytes)",
            ok(a == b),
            ok(a == c),
            a.len()
        ),
    }
}

fn main() {
    let criteria: [(&str, Option<Duration>, fn() -> Outcome); 11] = [
        ("C(d) curve", Some(Duration::from_secs(1)), c1_cd_curve),
        ("truncation rate", Some(Duration::from_secs(120)), c2_truncation_rate),
        ("AR(k) dominance and shared constant", Some(Duration::from_secs(120)), c3_ark_dominance),
        ("ratio r(k)", Some(Duration::from_secs(60)), c4_ratio),
        ("Yule-Walker cross-validation", Some(Duration::from_secs(1)), c5_yule_walker),
        ("Whittle consistency", Some(Duration::from_secs(60)), c6_whittle),
        ("plug-in estimation-error scaling", Some(Duration::from_secs(600)), c7_plugin_scaling),
        ("covariance-estimator regimes", Some(Duration::from_secs(600)), c8_covmoment),
        ("H-matrix check", Some(Duration::from_secs(600)), c9_h_matrix),
        ("identity suite", Some(Duration::from_secs(60)), c10_identities),
        ("determinism", None, c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = match limit {
            Some(l) => format!("{:.2}s of {}s{}", elapsed.as_secs_f64(), l.as_secs(), if in_time { "" } else { " EXCEEDED" }),
            None => format!("{:.2}s", elapsed.as_secs_f64()),
        };
        println!("criterion {:>2} {} [{}] {}: {} ({budget})", i + 1, if pass { "PASS" } else { "FAIL" }, name, "", out.detail);
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
