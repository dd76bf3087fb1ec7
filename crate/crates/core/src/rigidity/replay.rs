//! The sliding-barrier argument: for each ε build
//!
//! ```text
//! w₁(x) = u(x) - u(x₀) + 2ε - ε v(x - x₀),    w₂(x) = u(x) - u(x₀) - 2ε + ε v(x - x₀),
//! ```
//!
//! locate the maximum y₁ of w₁ and the minimum y₂ of w₂, and check the chain of
//! inequalities that forces `f(u(x₀)) = 0` as ε → 0.

use rayon::prelude::*;
use serde::Serialize;

use super::{gamma_rule, Nonlinearity};
use crate::barrier::{build_barrier, certify_barrier, sample_directions, BarrierField};
use crate::error::{Error, Result};
use crate::linalg::{axpy, lex_cmp, norm, sub};
use crate::measure::{FractionalOrder, SpectralMeasure};
use crate::nelder_mead::{minimize, NelderMeadOptions};
use crate::operator::{eval_i, GrowthBound, ScalarField};
use crate::quadrature::Tolerance;

pub const DEFAULT_EPSILONS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
/// Largest admissible search radius.
pub const SEARCH_RADIUS_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplaySide {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    /// Log-spaced radii between `radius·1e-4` and `radius` (plus the center).
    pub radial_points: usize,
    /// Directions per radius; `0` picks a dimension-dependent default.
    pub directions: usize,
    /// Best grid points handed to the local polish.
    pub candidates: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            radial_points: 48,
            directions: 0,
            candidates: 6,
        }
    }
}

impl SearchOptions {
    fn direction_count(&self, n: usize) -> usize {
        if self.directions > 0 {
            return self.directions;
        }
        match n {
            1 => 2,
            2 => 64,
            3 => 256,
            _ => 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayOptions {
    pub epsilons: Vec<f64>,
    /// Declared bound on |ℐu - f(u)| at the sampled points.
    pub residual: f64,
    /// Absolute slack tolerance added to every consistency check.
    pub tolerance: f64,
    pub quadrature: Tolerance,
    pub search: SearchOptions,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            epsilons: DEFAULT_EPSILONS.to_vec(),
            residual: 0.0,
            tolerance: 1e-9,
            quadrature: Tolerance::default(),
            search: SearchOptions::default(),
        }
    }
}

/// Slacks of the w₁ (upper) and w₂ (lower) branches; a branch not run is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlackPair {
    pub upper: Option<f64>,
    pub lower: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Conclusion {
    Consistent,
    Violated {
        inequality: String,
        point: Vec<f64>,
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremum {
    pub point: Vec<f64>,
    /// σ·w at `point` (σ = +1 for a maximum, -1 for a minimum).
    pub value: f64,
    pub grid_resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub epsilon: f64,
    pub x0: Vec<f64>,
    pub u_at_x0: f64,
    pub gamma_used: f64,
    pub certified_c: f64,
    pub search_radius: f64,
    pub grid_resolution: f64,
    pub y1: Option<Vec<f64>>,
    pub y2: Option<Vec<f64>>,
    /// (-ℐw₁(y₁), ℐw₂(y₂))
    pub slack16bis: SlackPair,
    /// (Cε - f(u(y₁)), f(u(y₂)) + Cε)
    pub slack_fx: SlackPair,
    /// (Cε - f(u(x₀) - 2ε), f(u(x₀) + 2ε) + Cε)
    pub slack188: SlackPair,
    /// Interval containing f(u(x₀)) implied by the two x₀ slacks (two-sided runs only).
    pub bracket: Option<[f64; 2]>,
    pub residual: f64,
    /// Each slack must be >= -allowance.
    pub allowance: f64,
    pub conclusion: Conclusion,
}

/// w₁ and w₂ as `Sum` compositions, ordered so that `w₁(x₀) = 2ε` and `w₂(x₀) = -2ε` exactly.
pub fn comparison_fields(
    u: &ScalarField,
    x0: &[f64],
    epsilon: f64,
    barrier: &BarrierField,
) -> Result<(ScalarField, ScalarField)> {
    let growth = declared_growth(u)?;
    let gamma = gamma_rule(barrier.order(), growth.kappa)?;
    if barrier.gamma() != gamma {
        return Err(Error::Domain(format!(
            "barrier exponent {} differs from (2s + κ)/2 = {gamma}",
            barrier.gamma()
        )));
    }
    check_point(u, x0)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("ε must be positive, got {epsilon}")));
    }
    let n = u.dim();
    let u0 = u.eval(x0);
    let shifted = barrier.field().translated(x0.iter().map(|c| -c).collect())?;
    let build = |sign: f64| {
        ScalarField::sum(vec![
            (1.0, u.clone()),
            (1.0, ScalarField::constant(n, -u0)?),
            (1.0, ScalarField::constant(n, sign * 2.0 * epsilon)?),
            (-sign * epsilon, shifted.clone()),
        ])
    };
    Ok((build(1.0)?, build(-1.0)?))
}

fn declared_growth(u: &ScalarField) -> Result<GrowthBound> {
    u.growth()
        .ok_or_else(|| Error::Domain("the field must declare a growth bound K(1 + |x|^κ)".into()))
}

fn check_point(u: &ScalarField, x0: &[f64]) -> Result<()> {
    if x0.len() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: x0.len() });
    }
    if x0.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("x0 must be finite".into()));
    }
    Ok(())
}

/// Smallest ρ >= 1 (up to bisection accuracy, rounded up) with
/// `ε ρ^γ > K (1 + (|x₀| + ρ)^κ) + |u(x₀)|`. Beyond it the majorant of w₁ stays
/// below `w₁(x₀) = 2ε` (and symmetrically for w₂); the quotient of both sides by
/// ρ^γ is increasing because κ < γ, so the inequality persists for all larger ρ.
pub fn search_radius(growth: &GrowthBound, norm_x0: f64, u0: f64, epsilon: f64, gamma: f64) -> Result<f64> {
    let excess = |rho: f64| {
        epsilon - (growth.k * (1.0 + (norm_x0 + rho).powf(growth.kappa)) + u0.abs()) / rho.powf(gamma)
    };
    if excess(1.0) > 0.0 {
        return Ok(1.0);
    }
    if !(excess(SEARCH_RADIUS_LIMIT) > 0.0) {
        return Err(Error::SearchRadius { limit: SEARCH_RADIUS_LIMIT });
    }
    let (mut lo, mut hi) = (0.0f64, SEARCH_RADIUS_LIMIT.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid.exp()) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(hi.exp())
}

/// Grid search of `σ·w` on the ball `B_radius(x₀)`, then Nelder–Mead polish of the
/// best candidates. Ties prefer the point closest to x₀, then lexicographic order.
fn locate(w: &ScalarField, x0: &[f64], radius: f64, sigma: f64, opts: &SearchOptions) -> Extremum {
    let n = x0.len();
    let dirs = sample_directions(n, opts.direction_count(n));
    let m = opts.radial_points.max(2);
    let ratio = (1e-4f64).powf(1.0 / (m - 1) as f64);
    let radii: Vec<f64> = (0..m).map(|i| radius * ratio.powi((m - 1 - i) as i32)).collect();
    let mut grid: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), 0.0)];
    for (i, &r) in radii.iter().enumerate() {
        let step = if i + 1 < m { radii[i + 1] - r } else { r - radii[i - 1] };
        for d in &dirs {
            grid.push((axpy(x0, r, d), step.max(r * std::f64::consts::TAU / dirs.len() as f64)));
        }
    }
    let objective = |x: &[f64]| sigma * w.eval(x);
    let values: Vec<f64> = grid.par_iter().map(|(x, _)| objective(x)).collect();
    let better = |a: (&[f64], f64), b: (&[f64], f64)| -> bool {
        if a.1 != b.1 {
            return a.1 > b.1;
        }
        let da = norm(&sub(a.0, x0));
        let db = norm(&sub(b.0, x0));
        if da != db {
            return da < db;
        }
        lex_cmp(a.0, b.0).is_lt()
    };
    let mut order: Vec<usize> = (0..grid.len()).filter(|&i| values[i].is_finite()).collect();
    order.sort_by(|&i, &j| {
        if better((&grid[i].0, values[i]), (&grid[j].0, values[j])) {
            std::cmp::Ordering::Less
        } else if better((&grid[j].0, values[j]), (&grid[i].0, values[i])) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    let resolution = radius * (1.0 - ratio).max(std::f64::consts::TAU / dirs.len() as f64);
    let Some(&first) = order.first() else {
        return Extremum {
            point: x0.to_vec(),
            value: f64::NAN,
            grid_resolution: resolution,
        };
    };
    let mut best = (grid[first].0.clone(), values[first]);
    let polished: Vec<(Vec<f64>, f64)> = order
        .iter()
        .take(opts.candidates.max(1))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&i| {
            let nm = NelderMeadOptions {
                initial_step: grid[i].1.max(1e-6),
                ..NelderMeadOptions::default()
            };
            let penalized = |x: &[f64]| {
                if norm(&sub(x, x0)) > radius {
                    f64::INFINITY
                } else {
                    -objective(x)
                }
            };
            let (x, fx) = minimize(penalized, &grid[i].0, nm);
            (x, -fx)
        })
        .collect();
    for (x, v) in polished {
        if v.is_finite() && better((&x, v), (&best.0, best.1)) {
            best = (x, v);
        }
    }
    Extremum {
        point: best.0,
        value: best.1,
        grid_resolution: resolution,
    }
}

/// Certified search radius and approximate argmax y₁ of w₁ and argmin y₂ of w₂.
#[allow(clippy::too_many_arguments)]
pub fn locate_extrema(
    w1: &ScalarField,
    w2: &ScalarField,
    x0: &[f64],
    epsilon: f64,
    u0: f64,
    growth: &GrowthBound,
    barrier: &BarrierField,
    opts: &SearchOptions,
) -> Result<(Extremum, Extremum, f64)> {
    let radius = search_radius(growth, norm(x0), u0, epsilon, barrier.gamma())?;
    let y1 = locate(w1, x0, radius, 1.0, opts);
    let y2 = locate(w2, x0, radius, -1.0, opts);
    Ok((y1, y2, radius))
}

/// Two-sided replay over the ε-schedule (requires a two-sided growth bound).
pub fn replay(
    u: &ScalarField,
    f: &Nonlinearity,
    mu: &SpectralMeasure,
    s: FractionalOrder,
    x0: &[f64],
    opts: &ReplayOptions,
) -> Result<Vec<ReplayReport>> {
    run(u, f, mu, s, x0, None, opts)
}

/// Replay of only the w₁ branch (`Upper`) or only the w₂ branch (`Lower`).
pub fn one_sided_replay(
    u: &ScalarField,
    f: &Nonlinearity,
    mu: &SpectralMeasure,
    s: FractionalOrder,
    x0: &[f64],
    side: ReplaySide,
    opts: &ReplayOptions,
) -> Result<Vec<ReplayReport>> {
    run(u, f, mu, s, x0, Some(side), opts)
}

fn run(
    u: &ScalarField,
    f: &Nonlinearity,
    mu: &SpectralMeasure,
    s: FractionalOrder,
    x0: &[f64],
    side: Option<ReplaySide>,
    opts: &ReplayOptions,
) -> Result<Vec<ReplayReport>> {
    check_point(u, x0)?;
    if mu.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: mu.dim() });
    }
    let growth = declared_growth(u)?;
    let (upper, lower) = match side {
        None => (true, true),
        Some(ReplaySide::Upper) => (true, false),
        Some(ReplaySide::Lower) => (false, true),
    };
    if (upper && !growth.side.covers_upper()) || (lower && !growth.side.covers_lower()) {
        return Err(Error::Domain(format!(
            "declared growth bound is {:?}-sided, which does not cover the requested branch",
            growth.side
        )));
    }
    if opts.epsilons.is_empty() || opts.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Domain("ε-schedule must be a nonempty list of positive numbers".into()));
    }
    if opts.epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("ε-schedule must be strictly decreasing".into()));
    }
    if !(opts.residual >= 0.0 && opts.tolerance >= 0.0) {
        return Err(Error::Domain("residual and tolerance must be nonnegative".into()));
    }
    let gamma = gamma_rule(s, growth.kappa)?;
    let barrier = build_barrier(gamma, s, u.dim())?;
    let certified_c = certify_barrier(&barrier, mu, s, opts.quadrature)?.certified_c;
    let u0 = u.eval(x0);

    opts.epsilons
        .par_iter()
        .map(|&eps| {
            let (w1, w2) = comparison_fields(u, x0, eps, &barrier)?;
            let radius = search_radius(&growth, norm(x0), u0, eps, gamma)?;
            let ce = certified_c * eps;
            let mut budget = 0.0f64;
            let mut resolution = 0.0f64;
            let mut y1 = None;
            let mut y2 = None;
            let mut s16 = SlackPair { upper: None, lower: None };
            let mut sfx = s16;
            let mut s188 = s16;
            if upper {
                let ext = locate(&w1, x0, radius, 1.0, &opts.search);
                let e = eval_i(&w1, &ext.point, mu, s, opts.quadrature)?;
                budget = budget.max(e.total_budget());
                resolution = ext.grid_resolution;
                s16.upper = Some(-e.value);
                sfx.upper = Some(ce - f.eval(u.eval(&ext.point)));
                s188.upper = Some(ce - f.eval(u0 - 2.0 * eps));
                y1 = Some(ext.point);
            }
            if lower {
                let ext = locate(&w2, x0, radius, -1.0, &opts.search);
                let e = eval_i(&w2, &ext.point, mu, s, opts.quadrature)?;
                budget = budget.max(e.total_budget());
                resolution = resolution.max(ext.grid_resolution);
                s16.lower = Some(e.value);
                sfx.lower = Some(f.eval(u.eval(&ext.point)) + ce);
                s188.lower = Some(f.eval(u0 + 2.0 * eps) + ce);
                y2 = Some(ext.point);
            }
            let allowance = opts.tolerance + opts.residual + budget;
            let bracket = if upper && lower {
                // f(u₀) <= f(u₀ - 2ε) + ω <= Cε + ω and symmetrically from below
                let omega = f.eval(u0 + 2.0 * eps) - f.eval(u0 - 2.0 * eps);
                Some([-ce - omega, ce + omega])
            } else {
                None
            };
            let checks = [
                ("16bis upper: 0 >= ℐw₁(y₁)", s16.upper, &y1),
                ("16bis lower: 0 <= ℐw₂(y₂)", s16.lower, &y2),
                ("Fx upper: 0 >= f(u(y₁)) - Cε", sfx.upper, &y1),
                ("Fx lower: 0 <= f(u(y₂)) + Cε", sfx.lower, &y2),
            ];
            let mut conclusion = Conclusion::Consistent;
            for (name, slack, point) in checks {
                if let (Some(v), Some(p)) = (slack, point) {
                    if !(v >= -allowance) {
                        conclusion = Conclusion::Violated {
                            inequality: name.to_string(),
                            point: p.clone(),
                            value: v,
                        };
                        break;
                    }
                }
            }
            if conclusion == Conclusion::Consistent {
                for (name, slack) in [
                    ("188 upper: 0 >= f(u(x₀) - 2ε) - Cε", s188.upper),
                    ("188 lower: 0 <= f(u(x₀) + 2ε) + Cε", s188.lower),
                ] {
                    if let Some(v) = slack {
                        if !(v >= -allowance) {
                            conclusion = Conclusion::Violated {
                                inequality: name.to_string(),
                                point: x0.to_vec(),
                                value: v,
                            };
                            break;
                        }
                    }
                }
            }
            Ok(ReplayReport {
                epsilon: eps,
                x0: x0.to_vec(),
                u_at_x0: u0,
                gamma_used: gamma,
                certified_c,
                search_radius: radius,
                grid_resolution: resolution,
                y1,
                y2,
                slack16bis: s16,
                slack_fx: sfx,
                slack188: s188,
                bracket,
                residual: opts.residual,
                allowance,
                conclusion,
            })
        })
        .collect()
}
