//! The cutoff barrier `v(x) = (1 - φ(|x|)) |x|^γ` and the certification of its properties:
//!
//! 1. `v(0) = 0`,
//! 2. `0 <= v(x) <= |x|^γ`,
//! 3. `v(x) = |x|^γ` for `|x| >= 1`,
//! 4. `sup_x ℐv(x) <= C`.

mod profile;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use profile::{BarrierProfile, CutoffProfile};

use crate::error::{Error, Result};
use crate::lemma_suite::{lemma_p1_constant, lemma_p2_constant, lemma_p3_constant};
use crate::linalg::{lex_cmp, norm, scale};
use crate::measure::{FractionalOrder, SpectralMeasure};
use crate::operator::{eval_i_many, power_hessian_constant, ScalarField};
use crate::quadrature::Tolerance;

/// Radial grid size, direction count and safety factor of the sampled Hessian bound on B₂.
pub const HESSIAN_RADIAL_POINTS: usize = 1000;
pub const HESSIAN_DIRECTIONS: usize = 64;
pub const HESSIAN_SAFETY: f64 = 1.5;
pub const HESSIAN_STEP: f64 = 1e-4;
/// Radii at which `v = |x|^γ` is checked bit for bit.
pub const EXACT_RADII: [f64; 4] = [1.0, 1.0 + 1e-9, 10.0, 100.0];
/// Number of points in the direct ℐv sweep of [`certify_barrier`].
pub const SWEEP_POINTS: usize = 200;
pub const SWEEP_MAX_RADIUS: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificationMode {
    Analytic,
    Sampled,
}

/// Outcome of the exact checks of properties 1–3 on the deterministic sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub value_at_origin: f64,
    pub sample_points: usize,
    /// max over the sample of v(x) - |x|^γ (must be <= 0)
    pub max_upper_excess: f64,
    /// min over the sample of v(x) (must be >= 0)
    pub min_value: f64,
    /// sample points with |x| >= 1 where v(x) != |x|^γ bit for bit
    pub exact_mismatches: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierField {
    profile: BarrierProfile,
    s: FractionalOrder,
    /// Sampled sup of the finite-difference Hessian norm on B₂, before the safety factor.
    sampled_hessian: f64,
    certification_mode: CertificationMode,
    properties: PropertyReport,
}

/// Certified constant of property 4 with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierCertificate {
    pub certified_c: f64,
    /// Lemma 2.1 + Lemma 2.2 bound on B₁.
    pub c_inside: f64,
    /// Lemma 2.3 bound outside B₁.
    pub c_outside: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub hessian_bound: f64,
    pub certification_mode: CertificationMode,
    pub sweep: Vec<SweepPoint>,
    pub sweep_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub point: Vec<f64>,
    pub value: f64,
    pub budget: f64,
}

/// Build v for exponent γ ∈ (0, 2s) in dimension n and check properties 1–3.
pub fn build_barrier(gamma: f64, s: FractionalOrder, n: usize) -> Result<BarrierField> {
    if !(gamma > 0.0 && gamma < s.two_s()) {
        return Err(Error::Domain(format!(
            "barrier exponent must satisfy γ ∈ (0, 2s) = (0, {}), got γ = {gamma}",
            s.two_s()
        )));
    }
    if n == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let mut profile = BarrierProfile {
        gamma,
        dim: n,
        cutoff: CutoffProfile,
        hessian_bound: 0.0,
    };
    let sampled = sampled_hessian_sup(&|x: &[f64]| profile.eval(x), n, 2.0, HESSIAN_STEP);
    // Outside B₂, ‖D²|x|^γ‖ <= γ(|γ-2|+1) |x|^{γ-2} <= γ(|γ-2|+1) 2^{γ-2}.
    let analytic_far = power_hessian_constant(gamma) * 2f64.powf(gamma - 2.0);
    profile.hessian_bound = (HESSIAN_SAFETY * sampled).max(analytic_far);
    let properties = check_properties(&profile);
    if !properties.holds {
        return Err(Error::InvalidField(format!("barrier properties fail on the sample: {properties:?}")));
    }
    Ok(BarrierField {
        profile,
        s,
        sampled_hessian: sampled,
        certification_mode: CertificationMode::Sampled,
        properties,
    })
}

impl BarrierField {
    pub fn gamma(&self) -> f64 {
        self.profile.gamma
    }

    pub fn dim(&self) -> usize {
        self.profile.dim
    }

    pub fn order(&self) -> FractionalOrder {
        self.s
    }

    pub fn profile(&self) -> &BarrierProfile {
        &self.profile
    }

    pub fn hessian_bound(&self) -> f64 {
        self.profile.hessian_bound
    }

    pub fn sampled_hessian(&self) -> f64 {
        self.sampled_hessian
    }

    pub fn certification_mode(&self) -> CertificationMode {
        self.certification_mode
    }

    pub fn properties(&self) -> &PropertyReport {
        &self.properties
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.profile.eval(x)
    }

    pub fn field(&self) -> ScalarField {
        ScalarField::barrier(self.profile.clone())
    }
}

/// `64` deterministic unit directions (or `count` in general) in R^n.
pub fn sample_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => (0..count).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect(),
        2 => (0..count)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1e5);
            (0..count)
                .map(|_| {
                    let v: Vec<f64> = (0..n).map(|_| crate::operator::gaussian(&mut rng)).collect();
                    let nv = norm(&v).max(1e-300);
                    scale(&v, 1.0 / nv)
                })
                .collect()
        }
    }
}

/// Sup of the Frobenius norm of the central-difference Hessian of `f` over the
/// radial grid of [`HESSIAN_RADIAL_POINTS`] radii in `[0, radius]` times
/// [`HESSIAN_DIRECTIONS`] directions.
pub fn sampled_hessian_sup(f: &(dyn Fn(&[f64]) -> f64 + Sync), n: usize, radius: f64, h: f64) -> f64 {
    let dirs = sample_directions(n, HESSIAN_DIRECTIONS);
    let sups: Vec<f64> = (0..HESSIAN_RADIAL_POINTS)
        .into_par_iter()
        .map(|i| {
            let rho = radius * i as f64 / (HESSIAN_RADIAL_POINTS - 1) as f64;
            dirs.iter()
                .map(|d| fd_hessian_norm(f, &scale(d, rho), h))
                .fold(0.0, f64::max)
        })
        .collect();
    sups.into_iter().fold(0.0, f64::max)
}

pub(crate) fn fd_hessian_norm(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
    let n = x.len();
    let fx = f(x);
    let mut sq = 0.0;
    let shifted = |i: usize, a: f64, j: usize, b: f64| {
        let mut y = x.to_vec();
        y[i] += a;
        y[j] += b;
        f(&y)
    };
    for i in 0..n {
        let d = (shifted(i, h, i, 0.0) - 2.0 * fx + shifted(i, -h, i, 0.0)) / (h * h);
        sq += d * d;
        for j in 0..i {
            let d = (shifted(i, h, j, h) - shifted(i, h, j, -h) - shifted(i, -h, j, h) + shifted(i, -h, j, -h))
                / (4.0 * h * h);
            sq += 2.0 * d * d;
        }
    }
    sq.sqrt()
}

/// The deterministic sample of properties 1–3: the Hessian grid plus the exact radii.
fn property_sample(n: usize) -> Vec<Vec<f64>> {
    let dirs = sample_directions(n, HESSIAN_DIRECTIONS);
    let mut pts = Vec::with_capacity(HESSIAN_RADIAL_POINTS * dirs.len() + EXACT_RADII.len() * dirs.len());
    for i in 0..HESSIAN_RADIAL_POINTS {
        let rho = 2.0 * i as f64 / (HESSIAN_RADIAL_POINTS - 1) as f64;
        for d in &dirs {
            pts.push(scale(d, rho));
        }
    }
    for &rho in &EXACT_RADII {
        for d in &dirs {
            pts.push(scale(d, rho));
        }
    }
    pts
}

fn check_properties(profile: &BarrierProfile) -> PropertyReport {
    let value_at_origin = profile.eval(&vec![0.0; profile.dim]);
    let pts = property_sample(profile.dim);
    let mut max_upper_excess = f64::NEG_INFINITY;
    let mut min_value = f64::INFINITY;
    let mut exact_mismatches = 0;
    for x in &pts {
        let v = profile.eval(x);
        let nx = norm(x);
        let power = nx.powf(profile.gamma);
        max_upper_excess = max_upper_excess.max(v - power);
        min_value = min_value.min(v);
        if nx >= 1.0 && v != power {
            exact_mismatches += 1;
        }
    }
    PropertyReport {
        value_at_origin,
        sample_points: pts.len(),
        max_upper_excess,
        min_value,
        exact_mismatches,
        holds: value_at_origin == 0.0 && max_upper_excess <= 0.0 && min_value >= 0.0 && exact_mismatches == 0,
    }
}

/// Sweep points: the origin, then radii log-spaced in [10^-3, 10^3], directions cycling.
pub fn sweep_points(n: usize, count: usize, max_radius: f64) -> Vec<Vec<f64>> {
    let dirs = sample_directions(n, HESSIAN_DIRECTIONS);
    let mut pts = vec![vec![0.0; n]];
    let lo = (1e-3f64).ln();
    let hi = max_radius.ln();
    for i in 1..count {
        let t = (i - 1) as f64 / (count.max(3) - 2) as f64;
        let rho = (lo + t * (hi - lo)).exp();
        pts.push(scale(&dirs[i % dirs.len()], rho));
    }
    pts
}

/// Certified constant C of property 4 with a direct ℐv cross-check at [`SWEEP_POINTS`] points.
pub fn certify_barrier(b: &BarrierField, mu: &SpectralMeasure, s: FractionalOrder, tol: Tolerance) -> Result<BarrierCertificate> {
    if mu.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), got: mu.dim() });
    }
    let gamma = b.gamma();
    let p1 = lemma_p1_constant(b.hessian_bound(), mu, s)?;
    let p2 = lemma_p2_constant(gamma, mu, s)?;
    let p3 = lemma_p3_constant(gamma, mu, s)?;
    let c_inside = p1 + p2;
    let c_outside = p3;
    let certified_c = c_inside.max(c_outside);

    let pts = sweep_points(b.dim(), SWEEP_POINTS, SWEEP_MAX_RADIUS);
    let field = b.field();
    let evals = eval_i_many(&field, &pts, mu, s, tol)?;
    let sweep: Vec<SweepPoint> = pts
        .into_iter()
        .zip(evals)
        .map(|(point, e)| SweepPoint {
            point,
            value: e.value,
            budget: e.total_budget(),
        })
        .collect();
    let mut sweep_max = f64::NEG_INFINITY;
    let mut worst: Option<&SweepPoint> = None;
    for p in &sweep {
        let better = match worst {
            None => true,
            Some(w) => p.value > w.value || (p.value == w.value && lex_cmp(&p.point, &w.point).is_lt()),
        };
        if better {
            worst = Some(p);
        }
        sweep_max = sweep_max.max(p.value);
    }
    if let Some(w) = worst {
        if w.value - w.budget > certified_c + tol.abs {
            return Err(Error::CertificationFailure {
                point: w.point.clone(),
                value: w.value,
                bound: certified_c,
            });
        }
    }
    Ok(BarrierCertificate {
        certified_c,
        c_inside,
        c_outside,
        p1,
        p2,
        p3,
        hessian_bound: b.hessian_bound(),
        certification_mode: b.certification_mode(),
        sweep,
        sweep_max,
    })
}

pub fn certify_barrier_c(b: &BarrierField, mu: &SpectralMeasure, s: FractionalOrder, tol: Tolerance) -> Result<f64> {
    certify_barrier(b, mu, s, tol).map(|c| c.certified_c)
}
