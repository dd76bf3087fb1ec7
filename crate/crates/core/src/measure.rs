//! Spectral measures on the unit sphere and their nondegeneracy constants.
//!
//! A measure is stored together with the discrete rule used to integrate
//! against it, so every consumer (operator, multiplier, λ search) sees the
//! same finite set of weighted directions.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, tangent_basis};
use crate::nelder_mead::{self, NelderMeadOptions};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s < 1.0 {
            Ok(FractionalOrder(s))
        } else {
            Err(Error::InvalidOrder(s))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn two_s(self) -> f64 {
        2.0 * self.0
    }
}

/// A point of the unit sphere S^{n-1}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Direction(Vec<f64>);

impl Direction {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let nrm = norm(&components);
        if components.is_empty() || !((nrm - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidDirection { norm: nrm });
        }
        Ok(Direction(components))
    }

    /// Normalizes `v`; fails on the zero vector.
    pub fn normalized(v: &[f64]) -> Result<Self> {
        let nrm = norm(v);
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(Error::InvalidDirection { norm: nrm });
        }
        Ok(Direction(v.iter().map(|x| x / nrm).collect()))
    }

    pub fn axis(n: usize, k: usize) -> Self {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Direction(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Discrete integration rule on S^{n-1}: two atoms for n = 1, `resolution`
/// equispaced angles for n = 2, and `resolution` Gauss–Legendre nodes in
/// cos θ times `2 * resolution` equispaced azimuths for n = 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereRule {
    pub resolution: usize,
}

impl SphereRule {
    pub fn default_for(n: usize) -> Self {
        match n {
            2 => SphereRule { resolution: 512 },
            3 => SphereRule { resolution: 16 },
            _ => SphereRule { resolution: 1 },
        }
    }

    /// Nodes and surface weights; the weights sum to |S^{n-1}|.
    pub fn nodes(&self, n: usize) -> Result<Vec<(Vec<f64>, f64)>> {
        match n {
            1 => Ok(vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]),
            2 => {
                let m = self.resolution.max(4);
                let w = 2.0 * PI / m as f64;
                Ok((0..m)
                    .map(|j| {
                        let phi = 2.0 * PI * j as f64 / m as f64;
                        (vec![phi.cos(), phi.sin()], w)
                    })
                    .collect())
            }
            3 => {
                let nt = self.resolution.max(2);
                let np = 2 * nt;
                let (zs, ws) = gauss_legendre(nt);
                let dphi = 2.0 * PI / np as f64;
                let mut out = Vec::with_capacity(nt * np);
                for (z, wz) in zs.iter().zip(&ws) {
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    for k in 0..np {
                        let phi = (k as f64 + 0.5) * dphi;
                        out.push((vec![rho * phi.cos(), rho * phi.sin(), *z], wz * dphi));
                    }
                }
                Ok(out)
            }
            _ => Err(Error::InvalidMeasure(format!(
                "sphere rules are available for n = 1, 2, 3, got n = {n}"
            ))),
        }
    }

    /// A coarser rule of the same family, used for convergence checks.
    pub fn coarsened(&self) -> Self {
        SphereRule {
            resolution: (self.resolution / 2).max(1),
        }
    }
}

/// Density K0 of a measure absolutely continuous w.r.t. surface measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DensityProfile {
    Constant(f64),
    /// `base + amplitude (ϑ·axis)^2`
    Axial { base: f64, amplitude: f64, axis: Vec<f64> },
    /// Values at the nodes of the measure's rule, in rule order.
    Tabulated(Vec<f64>),
}

impl DensityProfile {
    fn eval(&self, theta: &[f64], index: usize) -> f64 {
        match self {
            DensityProfile::Constant(c) => *c,
            DensityProfile::Axial { base, amplitude, axis } => {
                let t = dot(theta, axis);
                base + amplitude * t * t
            }
            DensityProfile::Tabulated(values) => values[index],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MeasureKind {
    Atomic(Vec<(Direction, f64)>),
    Density { profile: DensityProfile, rule: SphereRule },
    Uniform { total_mass: f64, rule: SphereRule },
}

/// A finite positive measure μ on S^{n-1}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMeasure {
    dim: usize,
    kind: MeasureKind,
    #[serde(skip)]
    nodes: Vec<(Vec<f64>, f64)>,
    total_mass: f64,
    mass_error: f64,
}

impl SpectralMeasure {
    /// An empty list is allowed and gives the zero measure.
    pub fn atomic(dim: usize, atoms: Vec<(Direction, f64)>) -> Result<Self> {
        for (d, w) in &atoms {
            if d.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: d.dim() });
            }
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atomic weight {w} must be positive")));
            }
        }
        let nodes: Vec<_> = atoms.iter().map(|(d, w)| (d.0.clone(), *w)).collect();
        let total_mass = nodes.iter().map(|(_, w)| w).sum();
        Ok(SpectralMeasure {
            dim,
            kind: MeasureKind::Atomic(atoms),
            nodes,
            total_mass,
            mass_error: 0.0,
        })
    }

    pub fn uniform(dim: usize, total_mass: f64) -> Result<Self> {
        Self::uniform_with_rule(dim, total_mass, SphereRule::default_for(dim))
    }

    pub fn uniform_with_rule(dim: usize, total_mass: f64, rule: SphereRule) -> Result<Self> {
        if !(total_mass > 0.0 && total_mass.is_finite()) {
            return Err(Error::InvalidMeasure(format!("total mass {total_mass} must be positive")));
        }
        let raw = rule.nodes(dim)?;
        let area: f64 = raw.iter().map(|(_, w)| w).sum();
        let nodes = raw.into_iter().map(|(d, w)| (d, w * total_mass / area)).collect();
        Ok(SpectralMeasure {
            dim,
            kind: MeasureKind::Uniform { total_mass, rule },
            nodes,
            total_mass,
            mass_error: 0.0,
        })
    }

    /// Density measure K0 dH^{n-1}. Closed-form profiles are checked for
    /// quadrature convergence of the total mass against a coarser rule.
    pub fn density(dim: usize, profile: DensityProfile, rule: SphereRule) -> Result<Self> {
        let raw = rule.nodes(dim)?;
        if let DensityProfile::Tabulated(values) = &profile {
            if values.len() != raw.len() {
                return Err(Error::InvalidMeasure(format!(
                    "tabulated density has {} samples, rule has {} nodes",
                    values.len(),
                    raw.len()
                )));
            }
        }
        if let DensityProfile::Axial { axis, .. } = &profile {
            if axis.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: axis.len() });
            }
        }
        let mut nodes = Vec::with_capacity(raw.len());
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (i, (d, w)) in raw.into_iter().enumerate() {
            let k = profile.eval(&d, i);
            lo = lo.min(k);
            hi = hi.max(k);
            nodes.push((d, w * k));
        }
        if !(lo > 0.0 && hi.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "density must satisfy 0 < inf K0 <= sup K0 < inf, got [{lo}, {hi}]"
            )));
        }
        let total_mass: f64 = nodes.iter().map(|(_, w)| w).sum();
        let mass_error = match profile {
            DensityProfile::Tabulated(_) => 0.0,
            _ if dim == 1 => 0.0,
            _ => {
                let coarse: f64 = rule
                    .coarsened()
                    .nodes(dim)?
                    .iter()
                    .enumerate()
                    .map(|(i, (d, w))| w * profile.eval(d, i))
                    .sum();
                (coarse - total_mass).abs()
            }
        };
        let tolerance = 1e-6 * total_mass;
        if mass_error > tolerance {
            return Err(Error::QuadratureNonConvergence {
                residual: mass_error,
                tolerance,
            });
        }
        Ok(SpectralMeasure {
            dim,
            kind: MeasureKind::Density { profile, rule },
            nodes,
            total_mass,
            mass_error,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// Weighted directions representing μ.
    pub fn nodes(&self) -> &[(Vec<f64>, f64)] {
        &self.nodes
    }

    /// μ(S^{n-1}), reported as Λ.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Quadrature error of [`total_mass`](Self::total_mass); zero for atomic and uniform measures.
    pub fn total_mass_error(&self) -> f64 {
        self.mass_error
    }

    /// Same measure with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidMeasure(format!("scale factor {factor} must be positive")));
        }
        let kind = match &self.kind {
            MeasureKind::Atomic(a) => MeasureKind::Atomic(a.iter().map(|(d, w)| (d.clone(), w * factor)).collect()),
            MeasureKind::Uniform { total_mass, rule } => MeasureKind::Uniform {
                total_mass: total_mass * factor,
                rule: *rule,
            },
            MeasureKind::Density { profile, rule } => MeasureKind::Density {
                profile: match profile {
                    DensityProfile::Constant(c) => DensityProfile::Constant(c * factor),
                    DensityProfile::Axial { base, amplitude, axis } => DensityProfile::Axial {
                        base: base * factor,
                        amplitude: amplitude * factor,
                        axis: axis.clone(),
                    },
                    DensityProfile::Tabulated(v) => DensityProfile::Tabulated(v.iter().map(|x| x * factor).collect()),
                },
                rule: *rule,
            },
        };
        Ok(SpectralMeasure {
            dim: self.dim,
            kind,
            nodes: self.nodes.iter().map(|(d, w)| (d.clone(), w * factor)).collect(),
            total_mass: self.total_mass * factor,
            mass_error: self.mass_error * factor,
        })
    }

    /// ∫ |ν·ϑ|^{2s} dμ(ϑ).
    pub fn directional_moment(&self, nu: &[f64], s: FractionalOrder) -> f64 {
        let p = s.two_s();
        self.nodes.iter().map(|(d, w)| w * dot(nu, d).abs().powf(p)).sum()
    }
}

pub fn total_mass(mu: &SpectralMeasure) -> f64 {
    mu.total_mass()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizationMethod {
    /// S^0 has two points; both are evaluated.
    Exhaustive,
    /// Equal-area grid followed by Nelder–Mead in tangent coordinates.
    GridPolish,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    /// Smallest value of the directional moment found.
    pub lambda_lower: f64,
    /// Total mass Λ.
    pub lambda_upper: f64,
    pub argmin_direction: Direction,
    pub method: MinimizationMethod,
    /// Grid minimum minus the objective's modulus of continuity over the grid
    /// covering radius: a lower bound for the true infimum.
    pub certified_floor: f64,
    pub degenerate: bool,
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaOptions {
    pub grid_count: usize,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        LambdaOptions { grid_count: 2048 }
    }
}

/// Angular resolution below which a vanishing directional moment counts as degenerate.
const DEGENERACY_RESOLUTION: f64 = 1e-9;

/// Candidate directions for the coarse search; for n = 3 a Fibonacci lattice
/// (equal-area cells), returned with the grid covering radius.
fn search_grid(n: usize, count: usize) -> (Vec<Vec<f64>>, f64) {
    match n {
        1 => (vec![vec![-1.0], vec![1.0]], 0.0),
        2 => {
            // the objective is even, so half the circle suffices
            let m = count.max(8);
            let pts = (0..m)
                .map(|j| {
                    let phi = PI * j as f64 / m as f64;
                    vec![phi.cos(), phi.sin()]
                })
                .collect();
            (pts, 0.5 * PI / m as f64)
        }
        _ => {
            let m = count.max(16);
            let golden = PI * (3.0 - 5f64.sqrt());
            let pts = (0..m)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    vec![rho * phi.cos(), rho * phi.sin(), z]
                })
                .collect();
            (pts, (4.0 * PI / m as f64).sqrt())
        }
    }
}

/// Minimize ν ↦ ∫ |ν·ϑ|^{2s} dμ over the unit sphere.
pub fn lambda_estimate(mu: &SpectralMeasure, s: FractionalOrder) -> NondegeneracyReport {
    lambda_estimate_with(mu, s, LambdaOptions::default())
}

pub fn lambda_estimate_with(mu: &SpectralMeasure, s: FractionalOrder, opts: LambdaOptions) -> NondegeneracyReport {
    let n = mu.dim();
    let big_lambda = mu.total_mass();
    let (grid, cover) = search_grid(n, opts.grid_count);
    let objective = |nu: &[f64]| mu.directional_moment(nu, s);

    // first minimum in grid order wins ties
    let mut best_idx = 0;
    let mut best_val = f64::INFINITY;
    for (i, nu) in grid.iter().enumerate() {
        let v = objective(nu);
        if v < best_val {
            best_val = v;
            best_idx = i;
        }
    }
    let mut best_dir = grid[best_idx].clone();
    let grid_min = best_val;

    let method = if n == 1 {
        MinimizationMethod::Exhaustive
    } else {
        let basis = tangent_basis(&best_dir);
        let origin = best_dir.clone();
        let lift = |t: &[f64]| -> Vec<f64> {
            let mut v = origin.clone();
            for (ti, b) in t.iter().zip(&basis) {
                for (vk, bk) in v.iter_mut().zip(b) {
                    *vk += ti * bk;
                }
            }
            let nv = norm(&v);
            v.iter().map(|x| x / nv).collect()
        };
        let (t, val) = nelder_mead::minimize(
            |t| objective(&lift(t)),
            &vec![0.0; n - 1],
            NelderMeadOptions {
                initial_step: cover.max(1e-6),
                ..Default::default()
            },
        );
        if val < best_val {
            best_val = val;
            best_dir = lift(&t);
        }
        MinimizationMethod::GridPolish
    };

    let two_s = s.two_s();
    let modulus = if two_s <= 1.0 { cover.powf(two_s) } else { two_s * cover };
    let certified_floor = (grid_min - big_lambda * modulus).max(0.0);
    let degenerate = best_val <= big_lambda * DEGENERACY_RESOLUTION.powf(two_s);

    NondegeneracyReport {
        lambda_lower: best_val,
        lambda_upper: big_lambda,
        argmin_direction: Direction(best_dir),
        method,
        certified_floor: certified_floor.min(best_val),
        degenerate,
        grid_points: grid.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(s: f64) -> FractionalOrder {
        FractionalOrder::new(s).unwrap()
    }

    fn two_axes() -> SpectralMeasure {
        SpectralMeasure::atomic(2, vec![(Direction::axis(2, 0), 1.0), (Direction::axis(2, 1), 1.0)]).unwrap()
    }

    #[test]
    fn fractional_order_rejects_boundary() {
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(1.0).is_err());
        assert!(FractionalOrder::new(f64::NAN).is_err());
        assert_eq!(FractionalOrder::new(0.25).unwrap().two_s(), 0.5);
    }

    #[test]
    fn direction_requires_unit_norm() {
        assert!(Direction::new(vec![1.0, 1e-13]).is_ok());
        assert!(Direction::new(vec![1.0, 1e-5]).is_err());
        assert!(Direction::normalized(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn total_mass_examples() {
        assert_eq!(total_mass(&two_axes()), 2.0);
        let u = SpectralMeasure::uniform(2, 2.0 * PI).unwrap();
        assert_eq!(total_mass(&u), 2.0 * PI);
        let d = SpectralMeasure::density(2, DensityProfile::Constant(1.0), SphereRule { resolution: 64 }).unwrap();
        assert!((total_mass(&d) - 2.0 * PI).abs() < 1e-10);
        let d3 = SpectralMeasure::density(3, DensityProfile::Constant(1.0), SphereRule { resolution: 8 }).unwrap();
        assert!((total_mass(&d3) - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn axial_density_mass_converges() {
        // ∫_{S^1} (1 + 2 cos^2 φ) dφ = 2π + 2π = 4π
        let d = SpectralMeasure::density(
            2,
            DensityProfile::Axial { base: 1.0, amplitude: 2.0, axis: vec![1.0, 0.0] },
            SphereRule { resolution: 128 },
        )
        .unwrap();
        assert!((d.total_mass() - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn density_rejects_vanishing_profile() {
        let err = SpectralMeasure::density(2, DensityProfile::Constant(0.0), SphereRule { resolution: 16 });
        assert!(err.is_err());
        let tab = SpectralMeasure::density(2, DensityProfile::Tabulated(vec![1.0; 3]), SphereRule { resolution: 16 });
        assert!(tab.is_err());
    }

    #[test]
    fn atomic_weights_must_be_positive() {
        assert!(SpectralMeasure::atomic(2, vec![(Direction::axis(2, 0), 0.0)]).is_err());
        assert!(SpectralMeasure::atomic(2, vec![(Direction::axis(3, 0), 1.0)]).is_err());
    }

    #[test]
    fn lambda_two_axes_matches_dense_grid_oracle() {
        let mu = two_axes();
        let s = order(0.5);
        // oracle: 10^4 directions on S^1
        let oracle = (0..10_000)
            .map(|j| {
                let phi = 2.0 * PI * j as f64 / 10_000.0;
                phi.cos().abs() + phi.sin().abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((oracle - 1.0).abs() < 1e-12);
        let rep = lambda_estimate(&mu, s);
        assert!((rep.lambda_lower - 1.0).abs() < 1e-12);
        let nu = rep.argmin_direction.as_slice();
        assert!((nu[0] - 1.0).abs() < 1e-12 && nu[1].abs() < 1e-12);
        assert!(!rep.degenerate);
        assert_eq!(rep.lambda_upper, 2.0);
        assert!(rep.certified_floor <= rep.lambda_lower);
    }

    #[test]
    fn lambda_uniform_circle_is_four() {
        let mu = SpectralMeasure::uniform_with_rule(2, 2.0 * PI, SphereRule { resolution: 4096 }).unwrap();
        // 1-D oracle: midpoint rule for ∫_0^{2π} |cos φ| dφ
        let n = 1_000_000;
        let oracle: f64 = (0..n)
            .map(|j| ((j as f64 + 0.5) * 2.0 * PI / n as f64).cos().abs())
            .sum::<f64>()
            * 2.0
            * PI
            / n as f64;
        assert!((oracle - 4.0).abs() < 1e-9);
        let rep = lambda_estimate(&mu, order(0.5));
        assert!((rep.lambda_lower - 4.0).abs() < 1e-5, "{}", rep.lambda_lower);
    }

    #[test]
    fn single_atom_is_degenerate() {
        let mu = SpectralMeasure::atomic(2, vec![(Direction::axis(2, 0), 1.0)]).unwrap();
        for s in [0.25, 0.5, 0.75] {
            let rep = lambda_estimate(&mu, order(s));
            assert!(rep.degenerate, "s = {s}");
            assert!(rep.lambda_lower < 1e-7);
            let nu = rep.argmin_direction.as_slice();
            assert!(nu[0].abs() < 1e-8 && (nu[1].abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn lambda_in_one_dimension() {
        let mu = SpectralMeasure::uniform(1, 3.0).unwrap();
        let rep = lambda_estimate(&mu, order(0.3));
        assert_eq!(rep.method, MinimizationMethod::Exhaustive);
        assert!((rep.lambda_lower - 3.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_three_dimensional_axes() {
        let mu = SpectralMeasure::atomic(
            3,
            (0..3).map(|k| (Direction::axis(3, k), 1.0)).collect(),
        )
        .unwrap();
        // min over the sphere of Σ|ν_k| is 1 (at the axes)
        let rep = lambda_estimate(&mu, order(0.5));
        assert!((rep.lambda_lower - 1.0).abs() < 1e-6, "{}", rep.lambda_lower);
    }
}
