use std::sync::OnceLock;

use serde::Serialize;

use crate::linalg::{axpy, dot, norm};
use crate::quadrature::gauss_legendre;

/// Below this |y| the second difference is computed from the Hessian (no cancellation).
const HESSIAN_FORM_RADIUS: f64 = 0.05;
const HESSIAN_FORM_NODES: usize = 12;

/// Smooth radial cutoff: 1 on [0, 1/2], 0 on [1, ∞), built from ψ(t) = exp(-1/t).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CutoffProfile;

fn psi(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// ψ, ψ', ψ''
fn psi_derivs(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let p = (-1.0 / t).exp();
    let t2 = t * t;
    (p, p / t2, p * (1.0 / (t2 * t2) - 2.0 / (t2 * t)))
}

impl CutoffProfile {
    /// φ(t) = ψ(1 - t) / (ψ(1 - t) + ψ(t - 1/2))
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.5 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        let a = psi(1.0 - t);
        let b = psi(t - 0.5);
        a / (a + b)
    }

    /// φ, φ', φ''
    pub fn derivs(&self, t: f64) -> (f64, f64, f64) {
        if t <= 0.5 {
            return (1.0, 0.0, 0.0);
        }
        if t >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let (a, da, dda) = psi_derivs(1.0 - t);
        let (b, db, ddb) = psi_derivs(t - 0.5);
        // a(t) = ψ(1 - t) flips the sign of odd derivatives
        let (da, dda) = (-da, dda);
        let sum = a + b;
        let num = da * b - a * db;
        let dnum = dda * b - a * ddb;
        let dsum = da + db;
        (a / sum, num / (sum * sum), (dnum * sum - 2.0 * num * dsum) / (sum * sum * sum))
    }
}

fn unit_interval_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(HESSIAN_FORM_NODES);
        (x.iter().map(|t| 0.5 * (t + 1.0)).collect(), w.iter().map(|w| 0.5 * w).collect())
    })
}

/// The function v(x) = (1 - φ(|x|)) |x|^γ, without its certification data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierProfile {
    pub(crate) gamma: f64,
    pub(crate) dim: usize,
    pub(crate) cutoff: CutoffProfile,
    /// Bound on ‖D²v‖ over all of R^n (sampled on B₂ with safety factor, analytic outside).
    pub(crate) hessian_bound: f64,
}

impl BarrierProfile {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hessian_bound(&self) -> f64 {
        self.hessian_bound
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_radial(norm(x))
    }

    pub fn eval_radial(&self, rho: f64) -> f64 {
        if rho <= 0.5 {
            return 0.0;
        }
        if rho >= 1.0 {
            return rho.powf(self.gamma);
        }
        (1.0 - self.cutoff.eval(rho)) * rho.powf(self.gamma)
    }

    /// h, h', h'' for the radial profile h(ρ) = (1 - φ(ρ)) ρ^γ.
    pub fn radial_derivs(&self, rho: f64) -> (f64, f64, f64) {
        if rho <= 0.5 {
            return (0.0, 0.0, 0.0);
        }
        let g = self.gamma;
        let p0 = rho.powf(g);
        let p1 = g * p0 / rho;
        let p2 = (g - 1.0) * p1 / rho;
        let (phi, d1, d2) = self.cutoff.derivs(rho);
        let keep = 1.0 - phi;
        (keep * p0, keep * p1 - d1 * p0, keep * p2 - 2.0 * d1 * p1 - d2 * p0)
    }

    /// yᵀ D²v(z) y
    pub fn hessian_form(&self, z: &[f64], y: &[f64]) -> f64 {
        let rho = norm(z);
        if rho <= 0.5 {
            return 0.0;
        }
        let (_, h1, h2) = self.radial_derivs(rho);
        let p = dot(z, y) / rho;
        let perp = (dot(y, y) - p * p).max(0.0);
        h2 * p * p + h1 / rho * perp
    }

    /// v(x + y) + v(x - y) - 2 v(x): exact-power form wherever both points lie outside B₁,
    /// and `∫₀¹ (1-t) [yᵀD²v(x+ty)y + yᵀD²v(x-ty)y] dt` for small |y|, which avoids the
    /// cancellation of the direct difference.
    pub fn second_difference(&self, x: &[f64], y: &[f64]) -> f64 {
        let nx = norm(x);
        let ny = norm(y);
        if nx + ny <= 0.5 {
            return 0.0;
        }
        if nx >= 1.0 && ny <= nx - 1.0 {
            return crate::operator::power_second_difference(x, y, self.gamma);
        }
        if ny <= HESSIAN_FORM_RADIUS {
            let (nodes, weights) = unit_interval_rule();
            return nodes
                .iter()
                .zip(weights)
                .map(|(&t, &w)| {
                    w * (1.0 - t) * (self.hessian_form(&axpy(x, t, y), y) + self.hessian_form(&axpy(x, -t, y), y))
                })
                .sum();
        }
        let vx = self.eval_radial(nx);
        let plus = self.eval(&axpy(x, 1.0, y)) - vx;
        let minus = self.eval(&axpy(x, -1.0, y)) - vx;
        plus + minus
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(gamma: f64) -> BarrierProfile {
        BarrierProfile {
            gamma,
            dim: 2,
            cutoff: CutoffProfile,
            hessian_bound: 0.0,
        }
    }

    fn direct(p: &BarrierProfile, x: &[f64], y: &[f64]) -> f64 {
        p.eval(&axpy(x, 1.0, y)) + p.eval(&axpy(x, -1.0, y)) - 2.0 * p.eval(x)
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        let phi = CutoffProfile;
        let h = 1e-5;
        for i in 1..50 {
            let t = 0.5 + 0.5 * i as f64 / 50.0;
            let (_, d1, d2) = phi.derivs(t);
            let fd1 = (phi.eval(t + h) - phi.eval(t - h)) / (2.0 * h);
            let fd2 = (phi.eval(t + h) + phi.eval(t - h) - 2.0 * phi.eval(t)) / (h * h);
            assert!((d1 - fd1).abs() <= 1e-6 * (1.0 + d1.abs()), "t={t}: {d1} vs {fd1}");
            assert!((d2 - fd2).abs() <= 1e-3 * (1.0 + d2.abs()), "t={t}: {d2} vs {fd2}");
        }
    }

    #[test]
    fn hessian_form_agrees_with_direct_difference() {
        let p = profile(0.8);
        for x in [[0.6, 0.1], [0.45, 0.2], [0.8, -0.3], [0.98, 0.05]] {
            for r in [0.04, 0.01, 0.003] {
                for ang in [0.0f64, 0.7, 2.1] {
                    let y = [r * ang.cos(), r * ang.sin()];
                    let a = p.second_difference(&x, &y);
                    let b = direct(&p, &x, &y);
                    assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-3 * r * r), "x={x:?} y={y:?}: {a} vs {b}");
                }
            }
        }
        // the small-|y| limit is the Hessian quadratic form
        let x = [0.7, 0.2];
        let y = [3e-7, -4e-7];
        let q = p.hessian_form(&x, &y);
        assert!((p.second_difference(&x, &y) / q - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cutoff_shape() {
        let phi = CutoffProfile;
        assert_eq!(phi.eval(0.0), 1.0);
        assert_eq!(phi.eval(0.5), 1.0);
        assert_eq!(phi.eval(1.0), 0.0);
        assert_eq!(phi.eval(3.0), 0.0);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let t = 0.5 + 0.5 * i as f64 / 1000.0;
            let v = phi.eval(t);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev);
            prev = v;
        }
    }
}
