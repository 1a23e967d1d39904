//! Composite Gauss-Legendre quadrature, including a variant for integrands
//! with an integrable power singularity at the origin.

use std::f64::consts::PI;
use std::sync::OnceLock;

const ORDER: usize = 20;

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for m in 2..=n {
                    let m = m as f64;
                    let p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Rule { nodes, weights }
    })
}

/// `∫_a^b f` with `panels` equal Gauss-Legendre panels of order 20.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let r = rule();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for (x, w) in r.nodes.iter().zip(r.weights.iter()) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// `∫_0^b g(λ) dλ` for `g(λ) ~ λ^{-beta}` near 0, `0 <= beta < 1`.
///
/// Substitutes `λ = b u^{1/(1-beta)}`, which makes the transformed integrand
/// bounded on `[0, 1]`.
pub fn integrate_power_singular<F: Fn(f64) -> f64>(g: F, beta: f64, b: f64, panels: usize) -> f64 {
    assert!((0.0..1.0).contains(&beta), "singularity exponent must lie in [0, 1)");
    let p = 1.0 / (1.0 - beta);
    let jac = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let lam = b * u.powf(p);
        g(lam) * b * p * u.powf(p - 1.0)
    };
    // graded panels towards u = 0
    let mut total = integrate(&jac, 0.0, 1.0 / 64.0, 4);
    total += integrate(&jac, 1.0 / 64.0, 1.0, panels);
    total
}

/// Nodes and weights of [`integrate_power_singular`] on `[0, b]`, with the
/// Jacobian folded into the weights: `∫_0^b g ≈ Σ w_i g(x_i)`.
pub fn power_singular_rule(beta: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    assert!((0.0..1.0).contains(&beta), "singularity exponent must lie in [0, 1)");
    let p = 1.0 / (1.0 - beta);
    let r = rule();
    let mut out = Vec::with_capacity(ORDER * (panels + 4));
    let mut push_panels = |a: f64, c: f64, n: usize| {
        let h = (c - a) / n as f64;
        for q in 0..n {
            let mid = a + (q as f64 + 0.5) * h;
            for (x, w) in r.nodes.iter().zip(r.weights.iter()) {
                let u = mid + 0.5 * h * x;
                out.push((b * u.powf(p), 0.5 * h * w * b * p * u.powf(p - 1.0)));
            }
        }
    };
    push_panels(0.0, 1.0 / 64.0, 4);
    push_panels(1.0 / 64.0, 1.0, panels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, 1);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn power_singularity() {
        // ∫_0^π λ^{-0.9} dλ = π^{0.1}/0.1
        let v = integrate_power_singular(|x| x.powf(-0.9), 0.9, PI, 32);
        let exact = PI.powf(0.1) / 0.1;
        assert!((v - exact).abs() < 1e-10 * exact);
        // ∫_0^π λ^{-0.6} cos λ dλ against a fine midpoint sum after subtraction
        let v = integrate_power_singular(|x| x.powf(-0.6) * x.cos(), 0.6, PI, 64);
        let sing = PI.powf(0.4) / 0.4;
        let smooth = integrate(|x| x.powf(-0.6) * (x.cos() - 1.0), 0.0, PI, 2000);
        assert!((v - sing - smooth).abs() < 1e-8);
    }

    #[test]
    fn rule_matches_integrator() {
        let g = |x: f64| x.powf(-0.4) * (3.0 * x).cos();
        let direct = integrate_power_singular(g, 0.4, 2.0, 16);
        let via_rule: f64 = power_singular_rule(0.4, 2.0, 16).iter().map(|&(x, w)| w * g(x)).sum();
        assert!((direct - via_rule).abs() < 1e-13);
    }
}
