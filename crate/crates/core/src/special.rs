//! Log-gamma kernel and the Hurwitz zeta function.
//!
//! Every gamma-function quantity in the crate goes through [`ln_gamma_signed`]
//! so that large arguments never overflow.

use std::f64::consts::PI;

/// `(ln |Γ(x)|, sign Γ(x))`. Poles (non-positive integers) return `+∞`
/// with sign `+1`.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (statrs::function::gamma::ln_gamma(x), 1.0);
    }
    if x == x.floor() {
        return (f64::INFINITY, 1.0);
    }
    // Γ(x) Γ(1-x) = π / sin(πx)
    let s = (PI * x).sin();
    let ln = PI.ln() - s.abs().ln() - statrs::function::gamma::ln_gamma(1.0 - x);
    (ln, s.signum())
}

/// `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    statrs::function::gamma::ln_gamma(x)
}

/// `Γ(x)` evaluated through the log kernel.
pub fn gamma(x: f64) -> f64 {
    let (l, s) = ln_gamma_signed(x);
    s * l.exp()
}

/// Signed product/quotient of gamma functions,
/// `Π Γ(num_i) / Π Γ(den_j)`, evaluated in log space.
pub fn gamma_ratio(num: &[f64], den: &[f64]) -> f64 {
    let mut ln = 0.0;
    let mut sign = 1.0;
    for &x in num {
        let (l, s) = ln_gamma_signed(x);
        ln += l;
        sign *= s;
    }
    for &x in den {
        let (l, s) = ln_gamma_signed(x);
        ln -= l;
        sign *= s;
    }
    sign * ln.exp()
}

// B_{2j} / (2j)!
const BERNOULLI_OVER_FACT: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
];

/// Hurwitz zeta `ζ(s, q) = Σ_{n≥0} (q + n)^{-s}` for `s > 1`, `q > 0`,
/// by Euler-Maclaurin summation.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    assert!(s > 1.0 && q > 0.0, "hurwitz_zeta needs s > 1 and q > 0");
    let shift = if q >= 24.0 { 0 } else { (24.0 - q).ceil() as usize };
    let mut direct = 0.0;
    for n in 0..shift {
        direct += (q + n as f64).powf(-s);
    }
    let x = q + shift as f64;
    let mut sum = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2)
    let mut rising = s;
    let mut xpow = x.powf(-s - 1.0);
    for (j, c) in BERNOULLI_OVER_FACT.iter().enumerate() {
        sum += c * rising * xpow;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        xpow /= x * x;
    }
    direct + sum
}
