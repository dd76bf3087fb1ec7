//! The operator
//!
//! ```text
//! ℐu(x) = ∫_{S^{n-1}} ∫_R (u(x + ϑr) + u(x - ϑr) - 2u(x)) |r|^{-1-2s} dr dμ(ϑ)
//! ```
//!
//! evaluated node by node over the discrete representation of μ, with the radial
//! integral split at `|r| = 1` into ℐ₁ (`|r| < 1`) and ℐ₂ (`|r| >= 1`).

mod field;
mod grid;
mod multiplier;

use rayon::prelude::*;
use serde::Serialize;

pub use field::{FieldKind, GrowthBound, GrowthSide, ScalarField, Smoothness, GROWTH_SAMPLE_POINTS, GROWTH_SAMPLE_RADIUS};
pub use grid::{apply_symbol, fft_nd, lattice_point, wavevector_of, GridField};
pub use multiplier::{multiplier, Multiplier};

pub(crate) use field::{gaussian, random_point};

use crate::error::{Error, Result};
use crate::linalg::{add, dot, mat_vec, norm, quad_form};
use crate::measure::{FractionalOrder, SpectralMeasure};
use crate::quadrature::{
    adaptive_panel_integrate, fractional_constant, near_origin_integrate,
    oscillatory_tail, partial_fractional_constant, RadialQuadPlan, Tolerance,
};

/// Value of ℐu(x) with its split and error budget.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct OperatorEval {
    pub value: f64,
    pub i1_part: f64,
    pub i2_part: f64,
    /// Near-origin segments: a bound where `|r| < r0` is left unsampled, otherwise the
    /// quadrature error estimate of the substituted integral.
    pub near_bound: f64,
    /// Bound on the truncation of the `|r| > R` segments.
    pub tail_bound: f64,
    /// Panel quadrature error estimate (including rounding allowance).
    pub panel_error: f64,
}

impl OperatorEval {
    pub fn total_budget(&self) -> f64 {
        self.near_bound + self.tail_bound + self.panel_error
    }
}

/// `|x+y|^γ + |x-y|^γ - 2|x|^γ` without cancellation for `|y| <= |x|`.
///
/// With `p, m = (±2x·y + |y|²)/|x|²` and `a, b = (γ/2) ln(1+p), (γ/2) ln(1+m)`, the
/// bracket equals `|x|^γ (expm1(a + b) - expm1(a) expm1(b))`, and
/// `(1+p)(1+m) - 1 = (2|y|²|x|² - 4(x·y)² + |y|⁴) / |x|⁴` has no cancellation.
pub fn power_second_difference(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let nx2 = dot(x, x);
    let ny2 = dot(y, y);
    if ny2 == 0.0 {
        return 0.0;
    }
    if nx2 == 0.0 {
        return 2.0 * ny2.powf(0.5 * gamma);
    }
    if ny2 > nx2 {
        let plus = add(x, y);
        let minus = crate::linalg::sub(x, y);
        return norm(&plus).powf(gamma) + norm(&minus).powf(gamma) - 2.0 * nx2.powf(0.5 * gamma);
    }
    let xy = dot(x, y);
    let inv = 1.0 / nx2;
    let p = (2.0 * xy + ny2) * inv;
    let m = (-2.0 * xy + ny2) * inv;
    let q = (2.0 * ny2 * nx2 - 4.0 * xy * xy + ny2 * ny2) * inv * inv;
    let half = 0.5 * gamma;
    let ea = (half * p.ln_1p()).exp_m1();
    let eb = (half * m.ln_1p()).exp_m1();
    let eab = (half * q.ln_1p()).exp_m1();
    nx2.powf(half) * (eab - ea * eb)
}

/// `γ (|γ - 2| + 1)`: bound on `‖D²|z|^γ‖ |z|^{2-γ}`.
pub fn power_hessian_constant(gamma: f64) -> f64 {
    gamma * ((gamma - 2.0).abs() + 1.0)
}

/// Per-direction radial integral, for unit measure weight.
#[derive(Debug, Clone, Copy, Default)]
struct NodeIntegral {
    i1: f64,
    i2: f64,
    near: f64,
    tail: f64,
    panel: f64,
}

impl NodeIntegral {
    fn accumulate(&mut self, c: f64, other: &NodeIntegral) {
        self.i1 += c * other.i1;
        self.i2 += c * other.i2;
        self.near += c.abs() * other.near;
        self.tail += c.abs() * other.tail;
        self.panel += c.abs() * other.panel;
    }
}

/// Closed-form large-`r` behaviour of a radial integrand:
/// `g(r) = Σ c r^p + Σ c cos(a r) + O(B r^q)` for `r >= start`.
struct TailModel {
    start: f64,
    powers: Vec<(f64, f64)>,
    cosines: Vec<(f64, f64)>,
    remainder: Option<(f64, f64)>,
}

/// Everything the radial integrator needs to know about one leaf field along one direction.
///
/// Every leaf evaluates g in cancellation-free form, so `(0, rho)` is integrated
/// directly after the near-origin substitution.
struct RadialModel {
    rho: f64,
    tail: TailModel,
    breakpoints: Vec<f64>,
}

const DEFAULT_RHO: f64 = 0.5;

/// ℐu(x) with split and budget; `tol.abs` is the absolute target for the whole evaluation.
pub fn eval_i(u: &ScalarField, x: &[f64], mu: &SpectralMeasure, s: FractionalOrder, tol: Tolerance) -> Result<OperatorEval> {
    if x.len() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: x.len() });
    }
    if mu.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: mu.dim() });
    }
    if let Some(i) = x.iter().position(|c| !c.is_finite()) {
        return Err(Error::Domain(format!("evaluation point has non-finite component {i}")));
    }
    let nodes = mu.nodes();
    let mass = mu.total_mass();
    if nodes.is_empty() || mass == 0.0 {
        return Ok(OperatorEval::default());
    }
    let node_tol = tol.abs / mass;
    let per_node: Vec<Result<NodeIntegral>> = nodes
        .par_iter()
        .map(|(theta, _)| node_integral(u, x, theta, s, Tolerance::new(node_tol, tol.rel)))
        .collect();
    let mut acc = NodeIntegral::default();
    for ((_, w), r) in nodes.iter().zip(per_node) {
        let r = r.map_err(|e| attach_point(e, x))?;
        acc.accumulate(*w, &r);
    }
    Ok(OperatorEval {
        value: acc.i1 + acc.i2,
        i1_part: acc.i1,
        i2_part: acc.i2,
        near_bound: acc.near,
        tail_bound: acc.tail,
        panel_error: acc.panel,
    })
}

/// ℐ₁u(x): the `|r| < 1` part.
pub fn eval_i1(u: &ScalarField, x: &[f64], mu: &SpectralMeasure, s: FractionalOrder, tol: Tolerance) -> Result<f64> {
    eval_i(u, x, mu, s, tol).map(|e| e.i1_part)
}

/// ℐ₂u(x): the `|r| >= 1` part.
pub fn eval_i2(u: &ScalarField, x: &[f64], mu: &SpectralMeasure, s: FractionalOrder, tol: Tolerance) -> Result<f64> {
    eval_i(u, x, mu, s, tol).map(|e| e.i2_part)
}

/// [`eval_i`] at many points, in parallel, results in input order.
pub fn eval_i_many(
    u: &ScalarField,
    xs: &[Vec<f64>],
    mu: &SpectralMeasure,
    s: FractionalOrder,
    tol: Tolerance,
) -> Result<Vec<OperatorEval>> {
    xs.par_iter().map(|x| eval_i(u, x, mu, s, tol)).collect()
}

fn attach_point(e: Error, x: &[f64]) -> Error {
    match e {
        Error::NonFiniteField { r, point } if point.is_empty() => Error::NonFiniteField { r, point: x.to_vec() },
        Error::NotSmooth { point } if point.is_empty() => Error::NotSmooth { point: x.to_vec() },
        other => other,
    }
}

fn node_integral(u: &ScalarField, x: &[f64], theta: &[f64], s: FractionalOrder, tol: Tolerance) -> Result<NodeIntegral> {
    match u.kind() {
        FieldKind::Sum(terms) => {
            let live = terms.iter().filter(|(c, _)| *c != 0.0).count().max(1);
            let mut acc = NodeIntegral::default();
            for (c, f) in terms {
                if *c == 0.0 {
                    continue;
                }
                let sub_tol = Tolerance::new(tol.abs / (live as f64 * c.abs()), tol.rel);
                let r = node_integral(f, x, theta, s, sub_tol).map_err(|e| flip_divergence(e, *c))?;
                acc.accumulate(*c, &r);
            }
            Ok(acc)
        }
        FieldKind::Translated { field, shift } => node_integral(field, &add(x, shift), theta, s, tol),
        FieldKind::Rotated { field, rotation } => {
            node_integral(field, &mat_vec(rotation, x), &mat_vec(rotation, theta), s, tol)
        }
        FieldKind::Affine { .. } => Ok(NodeIntegral::default()),
        FieldKind::Quadratic { matrix } => {
            let q = quad_form(matrix, theta);
            if q == 0.0 {
                Ok(NodeIntegral::default())
            } else {
                Err(Error::DivergentTail {
                    exponent: 2.0,
                    two_s: s.two_s(),
                    sign: Some(q.signum()),
                })
            }
        }
        FieldKind::Grid(g) => Ok(grid_node_integral(g, x, theta, s)),
        _ => {
            let model = radial_model(u, x, theta, s)?;
            integrate_model(u, x, theta, s, tol, model)
        }
    }
}

fn flip_divergence(e: Error, c: f64) -> Error {
    match e {
        Error::DivergentTail { exponent, two_s, sign } => Error::DivergentTail {
            exponent,
            two_s,
            sign: sign.map(|v| v * c.signum()),
        },
        other => other,
    }
}

fn radial_model(u: &ScalarField, x: &[f64], theta: &[f64], s: FractionalOrder) -> Result<RadialModel> {
    let nx = norm(x);
    match u.kind() {
        FieldKind::Cosine { freq, amplitude, phase } => {
            let a = dot(freq, theta);
            let c = amplitude * (dot(freq, x) + phase).cos();
            // g(r) = -2Ac (1 - cos(a r))
            Ok(RadialModel {
                rho: DEFAULT_RHO,
                tail: TailModel {
                    start: if a == 0.0 { 1.0 } else { 32.0 / a.abs() },
                    powers: vec![(-2.0 * c, 0.0)],
                    cosines: vec![(2.0 * c, a)],
                    remainder: None,
                },
                breakpoints: Vec::new(),
            })
        }
        FieldKind::PurePower { gamma } => {
            let gamma = *gamma;
            if gamma >= s.two_s() {
                return Err(Error::DivergentTail {
                    exponent: gamma,
                    two_s: s.two_s(),
                    sign: Some(1.0),
                });
            }
            if nx == 0.0 {
                return Err(Error::NotSmooth { point: Vec::new() });
            }
            let rho = DEFAULT_RHO.min(0.5 * nx);
            let ch = power_hessian_constant(gamma) * 2f64.powf(2.0 - gamma);
            Ok(RadialModel {
                rho,
                tail: TailModel {
                    start: 2.0 * nx,
                    powers: vec![(2.0, gamma), (-2.0 * nx.powf(gamma), 0.0)],
                    cosines: Vec::new(),
                    remainder: Some((ch * nx * nx, gamma - 2.0)),
                },
                breakpoints: vec![dot(x, theta).abs()],
            })
        }
        FieldKind::Barrier(b) => {
            let gamma = b.gamma();
            if gamma >= s.two_s() {
                return Err(Error::DivergentTail {
                    exponent: gamma,
                    two_s: s.two_s(),
                    sign: Some(1.0),
                });
            }
            let ch = power_hessian_constant(gamma) * 2f64.powf(2.0 - gamma);
            let vx = b.eval_radial(nx);
            let rho = DEFAULT_RHO;
            Ok(RadialModel {
                rho,
                tail: TailModel {
                    start: (2.0 * nx).max(nx + 1.0),
                    powers: vec![(2.0, gamma), (-2.0 * vx, 0.0)],
                    cosines: Vec::new(),
                    remainder: Some((ch * nx * nx, gamma - 2.0)),
                },
                breakpoints: vec![0.5, 1.0],
            })
        }
        _ => unreachable!("composite and closed-form kinds are handled by node_integral"),
    }
}

/// Integrate a leaf field along `theta` using its radial model.
fn integrate_model(
    u: &ScalarField,
    x: &[f64],
    theta: &[f64],
    s: FractionalOrder,
    tol: Tolerance,
    model: RadialModel,
) -> Result<NodeIntegral> {
    let two_s = s.two_s();
    let target = tol.abs;

    let g = |r: f64| {
        let y: Vec<f64> = theta.iter().map(|t| t * r).collect();
        u.second_difference(x, &y)
    };

    let r0 = model.rho;
    let near_part = near_origin_integrate(g, s, r0, Tolerance::new(0.25 * target, tol.rel))?;

    // outer radius: beyond the model start, and far enough for the remainder
    let tail = &model.tail;
    let tail_error = |r: f64| -> f64 {
        let mut e = 0.0;
        for &(c, a) in &tail.cosines {
            e += 2.0 * c.abs() * oscillatory_tail(a, 1.0 + two_s, r).1;
        }
        if let Some((b, q)) = tail.remainder {
            e += 2.0 * b * r.powf(q - two_s) / (two_s - q);
        }
        e
    };
    let cap = 1e8 * norm(x).max(1.0);
    let mut big_r = tail.start.max(2.0).max(2.0 * r0);
    while tail_error(big_r) > 0.25 * target && big_r < cap {
        big_r *= 2.0;
    }
    let mut tail_value = 0.0;
    for &(c, p) in &tail.powers {
        if c == 0.0 {
            continue;
        }
        if p >= two_s {
            return Err(Error::DivergentTail {
                exponent: p,
                two_s,
                sign: Some(c.signum()),
            });
        }
        tail_value += 2.0 * c * big_r.powf(p - two_s) / (two_s - p);
    }
    for &(c, a) in &tail.cosines {
        tail_value += 2.0 * c * oscillatory_tail(a, 1.0 + two_s, big_r).0;
    }
    let tail_err = tail_error(big_r);

    let panel_tol = Tolerance::new(0.25 * target, tol.rel);
    let inner = RadialQuadPlan::new(s, r0, 1.0, &model.breakpoints, panel_tol)?;
    let inner_part = adaptive_panel_integrate(g, &inner)?;
    let outer = RadialQuadPlan::new(s, 1.0, big_r, &model.breakpoints, panel_tol)?;
    let outer_part = adaptive_panel_integrate(g, &outer)?;

    Ok(NodeIntegral {
        i1: near_part.value + inner_part.value,
        i2: outer_part.value + tail_value,
        near: near_part.error,
        tail: tail_err,
        panel: inner_part.error + outer_part.error,
    })
}

/// Spectral route for lattice data: mode `k` contributes `-c_s |k·ϑ|^{2s}`, of which
/// `-2 |k·ϑ|^{2s} Ξ(|k·ϑ|)` comes from `|r| < 1`.
fn grid_node_integral(g: &GridField, x: &[f64], theta: &[f64], s: FractionalOrder) -> NodeIntegral {
    let cs = fractional_constant(s);
    let two_s = s.two_s();
    let mut out = NodeIntegral::default();
    for (k, c) in g.modes() {
        let a = dot(k, theta).abs();
        if a == 0.0 {
            continue;
        }
        let phase = num_complex::Complex64::from_polar(1.0, dot(k, x));
        let amp = (c * phase).re;
        let weight = a.powf(two_s);
        let total = -cs.value * weight * amp;
        let near = -2.0 * weight * partial_fractional_constant(s, a) * amp;
        out.i1 += near;
        out.i2 += total - near;
        out.panel += (cs.error + 1e-14 * cs.value) * weight * c.norm();
    }
    out
}

/// Sign report of ℐu at a (caller-asserted) global maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    pub value: f64,
    pub budget: f64,
    /// `value <= budget`; a tail diverging to `-∞` counts as nonpositive.
    pub nonpositive: bool,
}

pub fn max_principle_check(
    u: &ScalarField,
    x_max: &[f64],
    mu: &SpectralMeasure,
    s: FractionalOrder,
    tol: Tolerance,
) -> Result<MaxPrincipleReport> {
    match eval_i(u, x_max, mu, s, tol) {
        Ok(e) => Ok(MaxPrincipleReport {
            value: e.value,
            budget: e.total_budget(),
            nonpositive: e.value <= e.total_budget() + tol.abs,
        }),
        Err(Error::DivergentTail { sign: Some(sign), .. }) => Ok(MaxPrincipleReport {
            value: sign * f64::INFINITY,
            budget: 0.0,
            nonpositive: sign < 0.0,
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Direction;
    use std::f64::consts::PI;

    fn order(s: f64) -> FractionalOrder {
        FractionalOrder::new(s).unwrap()
    }

    #[test]
    fn power_difference_matches_naive_form() {
        let cases = [
            ([1.0, 0.5], [0.3, -0.2], 0.7),
            ([2.0, 0.0], [2.0, 0.0], 1.3),
            ([0.1, 0.2], [5.0, 1.0], 0.5),
            ([3.0, 4.0], [1e-3, 2e-3], 1.9),
        ];
        for (x, y, g) in cases {
            let naive = norm(&add(&x, &y)).powf(g) + norm(&crate::linalg::sub(&x, &y)).powf(g)
                - 2.0 * norm(&x).powf(g);
            let got = power_second_difference(&x, &y, g);
            assert!((got - naive).abs() < 1e-13 * (1.0 + naive.abs()), "{got} vs {naive}");
        }
    }

    #[test]
    fn power_difference_is_second_order_at_small_steps() {
        // along x: |1+r|^γ + |1-r|^γ - 2 ≈ γ(γ-1) r²
        let g = 0.6;
        let r = 1e-7;
        let v = power_second_difference(&[1.0, 0.0], &[r, 0.0], g);
        assert!((v / (r * r) - g * (g - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn affine_field_has_zero_operator() {
        let u = ScalarField::affine(vec![1.0, -3.0], 2.0).unwrap();
        let mu = SpectralMeasure::uniform(2, 1.0).unwrap();
        let e = eval_i(&u, &[0.3, 0.4], &mu, order(0.5), Tolerance::default()).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.total_budget(), 0.0);
    }

    #[test]
    fn cosine_on_single_atom_gives_minus_two_pi() {
        let u = ScalarField::cosine(vec![1.0, 0.0], 1.0, 0.0).unwrap();
        let mu = SpectralMeasure::atomic(2, vec![(Direction::axis(2, 0), 1.0)]).unwrap();
        let e = eval_i(&u, &[0.0, 0.0], &mu, order(0.5), Tolerance::default()).unwrap();
        assert!((e.value + 2.0 * PI).abs() < 1e-9, "{e:?}");
        assert!(e.total_budget() < 1e-9);
        // ℐ₁ part is 2Ξ(1)
        let xi1 = partial_fractional_constant(order(0.5), 1.0);
        assert!((e.i1_part + 2.0 * xi1).abs() < 1e-10);
    }

    #[test]
    fn quadratic_i1_on_uniform_circle() {
        // δ² = 2r² along unit directions: ∫_{|r|<1} 2r² |r|^{-2} dr = 4 per unit mass
        let u = ScalarField::quadratic(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let mu = SpectralMeasure::uniform(2, 1.5).unwrap();
        // ℐ itself diverges; ℐ₁ follows from the near-origin identity
        let err = eval_i(&u, &[0.0, 0.0], &mu, order(0.5), Tolerance::default()).unwrap_err();
        assert!(matches!(err, Error::DivergentTail { sign: Some(s), .. } if s > 0.0));
        let expected: f64 = 1.5 * 2.0 * 2.0 / (2.0 - 1.0);
        let near = crate::quadrature::near_origin_bound(2.0, order(0.5), 1.0);
        assert!((near * 1.5 - expected).abs() < 1e-14);
        assert!((expected - 4.0 * 1.5).abs() < 1e-14);
    }

    #[test]
    fn max_principle_examples() {
        let mu = SpectralMeasure::uniform(2, 1.0).unwrap();
        let s = order(0.5);
        let tol = Tolerance::default();
        let c = ScalarField::constant(2, 3.0).unwrap();
        let r = max_principle_check(&c, &[1.0, 1.0], &mu, s, tol).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.nonpositive);
        let q = ScalarField::quadratic(2, vec![-1.0, 0.0, 0.0, -1.0]).unwrap();
        let r = max_principle_check(&q, &[0.0, 0.0], &mu, s, tol).unwrap();
        assert!(r.nonpositive && r.value < 0.0);
        let cosine = ScalarField::cosine(vec![1.0, 0.0], 1.0, 0.0).unwrap();
        let r = max_principle_check(&cosine, &[0.0, 0.0], &mu, s, tol).unwrap();
        let m = multiplier(&mu, s).eval(&[1.0, 0.0]);
        assert!(r.value < 0.0 && (r.value - m).abs() < 1e-8);
    }

    #[test]
    fn pure_power_at_origin_is_rejected() {
        let u = ScalarField::pure_power(2, 0.5).unwrap();
        let mu = SpectralMeasure::uniform(2, 1.0).unwrap();
        let err = eval_i(&u, &[0.0, 0.0], &mu, order(0.5), Tolerance::default()).unwrap_err();
        assert!(matches!(err, Error::NotSmooth { .. }));
        let err = eval_i(&u, &[1.0, 0.0], &mu, order(0.2), Tolerance::default()).unwrap_err();
        assert!(matches!(err, Error::DivergentTail { .. }));
    }

    #[test]
    fn grid_field_matches_cosine_field() {
        let s = order(0.6);
        let mu = SpectralMeasure::atomic(
            2,
            vec![(Direction::axis(2, 0), 1.0), (Direction::normalized(&[1.0, 1.0]).unwrap(), 0.5)],
        )
        .unwrap();
        let l = 2.0 * PI;
        let grid = GridField::from_fn(2, 8, l, |x| 0.7 * (x[0] + 2.0 * x[1] + 0.2).cos()).unwrap();
        let g = ScalarField::grid(grid);
        let c = ScalarField::cosine(vec![1.0, 2.0], 0.7, 0.2).unwrap();
        let x = [0.4, -1.1];
        let eg = eval_i(&g, &x, &mu, s, Tolerance::default()).unwrap();
        let ec = eval_i(&c, &x, &mu, s, Tolerance::default()).unwrap();
        assert!((eg.value - ec.value).abs() < 1e-9, "{eg:?} {ec:?}");
        assert!((eg.i1_part - ec.i1_part).abs() < 1e-9);
    }
}
