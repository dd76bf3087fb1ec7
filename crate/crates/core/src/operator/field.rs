//! Scalar fields u: R^n -> R from a closed catalog of families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::grid::GridField;
use crate::barrier::BarrierProfile;
use crate::error::{Error, Result};
use crate::linalg::{add, dot, mat_vec, norm, quad_form};

/// Which side of `|u(x)| <= K (1 + |x|^κ)` is asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthSide {
    Both,
    /// `u(x) <= K (1 + |x|^κ)`
    Upper,
    /// `u(x) >= -K (1 + |x|^κ)`
    Lower,
}

impl GrowthSide {
    fn flipped(self) -> Self {
        match self {
            GrowthSide::Both => GrowthSide::Both,
            GrowthSide::Upper => GrowthSide::Lower,
            GrowthSide::Lower => GrowthSide::Upper,
        }
    }

    pub fn covers_upper(self) -> bool {
        matches!(self, GrowthSide::Both | GrowthSide::Upper)
    }

    pub fn covers_lower(self) -> bool {
        matches!(self, GrowthSide::Both | GrowthSide::Lower)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthBound {
    pub k: f64,
    pub kappa: f64,
    pub side: GrowthSide,
}

impl GrowthBound {
    pub fn two_sided(k: f64, kappa: f64) -> Self {
        GrowthBound { k, kappa, side: GrowthSide::Both }
    }

    pub fn envelope(&self, x: &[f64]) -> f64 {
        self.k * (1.0 + norm(x).powf(self.kappa))
    }

    /// Does `value` at `x` respect the bound (with a relative slack for rounding)?
    pub fn admits(&self, x: &[f64], value: f64) -> bool {
        let env = self.envelope(x) * (1.0 + 1e-12) + 1e-300;
        match self.side {
            GrowthSide::Both => value.abs() <= env,
            GrowthSide::Upper => value <= env,
            GrowthSide::Lower => value >= -env,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Everywhere,
    /// Smooth away from the origin only, e.g. |x|^γ.
    AwayFromOrigin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Affine { slope: Vec<f64>, offset: f64 },
    /// x·Ax with A symmetric, row-major.
    Quadratic { matrix: Vec<f64> },
    /// amplitude · cos(ξ·x + phase)
    Cosine { freq: Vec<f64>, amplitude: f64, phase: f64 },
    PurePower { gamma: f64 },
    Barrier(BarrierProfile),
    Grid(GridField),
    /// Σ coefficient · field, evaluated left to right.
    Sum(Vec<(f64, ScalarField)>),
    /// x ↦ u(x + shift)
    Translated { field: Box<ScalarField>, shift: Vec<f64> },
    /// x ↦ u(Q x) for an orthogonal, row-major Q.
    Rotated { field: Box<ScalarField>, rotation: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarField {
    dim: usize,
    kind: FieldKind,
    growth: Option<GrowthBound>,
    smoothness: Smoothness,
}

/// Number of points and radius of the construction-time growth check.
pub const GROWTH_SAMPLE_POINTS: usize = 10_000;
pub const GROWTH_SAMPLE_RADIUS: f64 = 1e3;

impl ScalarField {
    pub fn affine(slope: Vec<f64>, offset: f64) -> Result<Self> {
        check_finite(&slope, "affine slope")?;
        check_finite(&[offset], "affine offset")?;
        let dim = slope.len();
        if dim == 0 {
            return Err(Error::InvalidField("affine field needs n >= 1".into()));
        }
        let slope_norm = norm(&slope);
        let growth = if slope_norm == 0.0 {
            GrowthBound::two_sided(0.5 * offset.abs(), 0.0)
        } else {
            GrowthBound::two_sided(slope_norm.max(offset.abs()), 1.0)
        };
        Ok(ScalarField {
            dim,
            kind: FieldKind::Affine { slope, offset },
            growth: Some(growth),
            smoothness: Smoothness::Everywhere,
        })
    }

    pub fn constant(dim: usize, c: f64) -> Result<Self> {
        Self::affine(vec![0.0; dim], c)
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, 0.0).expect("zero field")
    }

    pub fn quadratic(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != dim * dim || dim == 0 {
            return Err(Error::InvalidField(format!("quadratic form needs {} entries", dim * dim)));
        }
        check_finite(&matrix, "quadratic form")?;
        for i in 0..dim {
            for j in 0..i {
                if (matrix[i * dim + j] - matrix[j * dim + i]).abs() > 1e-12 * (1.0 + matrix[i * dim + j].abs()) {
                    return Err(Error::InvalidField("quadratic form must be symmetric".into()));
                }
            }
        }
        let frob = norm(&matrix);
        Ok(ScalarField {
            dim,
            kind: FieldKind::Quadratic { matrix },
            growth: Some(GrowthBound::two_sided(frob, 2.0)),
            smoothness: Smoothness::Everywhere,
        })
    }

    pub fn cosine(freq: Vec<f64>, amplitude: f64, phase: f64) -> Result<Self> {
        check_finite(&freq, "cosine frequency")?;
        check_finite(&[amplitude, phase], "cosine amplitude/phase")?;
        if freq.is_empty() {
            return Err(Error::InvalidField("cosine field needs n >= 1".into()));
        }
        Ok(ScalarField {
            dim: freq.len(),
            kind: FieldKind::Cosine { freq, amplitude, phase },
            growth: Some(GrowthBound::two_sided(0.5 * amplitude.abs(), 0.0)),
            smoothness: Smoothness::Everywhere,
        })
    }

    /// |x|^γ for γ in (0, 2); admissible in ℐ only when γ < 2s.
    pub fn pure_power(dim: usize, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 2.0) || dim == 0 {
            return Err(Error::InvalidField(format!("pure power exponent {gamma} must lie in (0, 2)")));
        }
        Ok(ScalarField {
            dim,
            kind: FieldKind::PurePower { gamma },
            growth: Some(GrowthBound::two_sided(1.0, gamma)),
            smoothness: Smoothness::AwayFromOrigin,
        })
    }

    pub fn barrier(profile: BarrierProfile) -> Self {
        let gamma = profile.gamma();
        ScalarField {
            dim: profile.dim(),
            kind: FieldKind::Barrier(profile),
            growth: Some(GrowthBound::two_sided(1.0, gamma)),
            smoothness: Smoothness::Everywhere,
        }
    }

    pub fn grid(grid: GridField) -> Self {
        let k = 0.5 * grid.sup_norm();
        ScalarField {
            dim: grid.dim(),
            kind: FieldKind::Grid(grid),
            growth: Some(GrowthBound::two_sided(k, 0.0)),
            smoothness: Smoothness::Everywhere,
        }
    }

    pub fn sum(terms: Vec<(f64, ScalarField)>) -> Result<Self> {
        let dim = terms.first().map(|(_, f)| f.dim).ok_or_else(|| Error::InvalidField("empty sum".into()))?;
        for (c, f) in &terms {
            if f.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: f.dim });
            }
            check_finite(&[*c], "sum coefficient")?;
        }
        let growth = sum_growth(&terms);
        let smoothness = if terms.iter().all(|(c, f)| *c == 0.0 || f.smoothness == Smoothness::Everywhere) {
            Smoothness::Everywhere
        } else {
            Smoothness::AwayFromOrigin
        };
        Ok(ScalarField {
            dim,
            kind: FieldKind::Sum(terms),
            growth,
            smoothness,
        })
    }

    pub fn scaled(self, c: f64) -> Result<Self> {
        Self::sum(vec![(c, self)])
    }

    /// x ↦ u(x + shift)
    pub fn translated(self, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: shift.len() });
        }
        check_finite(&shift, "translation")?;
        let growth = self.growth.map(|g| shifted_growth(g, norm(&shift)));
        let smoothness = self.smoothness;
        Ok(ScalarField {
            dim: self.dim,
            growth,
            smoothness,
            kind: FieldKind::Translated { field: Box::new(self), shift },
        })
    }

    /// x ↦ u(Q x); Q must be orthogonal.
    pub fn rotated(self, rotation: Vec<f64>) -> Result<Self> {
        let n = self.dim;
        if rotation.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: rotation.len() });
        }
        for i in 0..n {
            for j in 0..n {
                let g: f64 = (0..n).map(|k| rotation[k * n + i] * rotation[k * n + j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (g - target).abs() > 1e-10 {
                    return Err(Error::InvalidField("rotation matrix is not orthogonal".into()));
                }
            }
        }
        Ok(ScalarField {
            dim: n,
            growth: self.growth,
            smoothness: self.smoothness,
            kind: FieldKind::Rotated { field: Box::new(self), rotation },
        })
    }

    /// Replace the growth metadata by a user-declared bound, verified on the
    /// seeded random sample of [`GROWTH_SAMPLE_POINTS`] points.
    pub fn with_declared_growth(mut self, growth: GrowthBound, seed: u64) -> Result<Self> {
        if !(growth.k >= 0.0 && growth.kappa >= 0.0 && growth.k.is_finite()) {
            return Err(Error::InvalidField(format!("growth bound {growth:?} is not admissible")));
        }
        self.growth = Some(growth);
        self.verify_growth(seed)?;
        Ok(self)
    }

    /// Check the declared growth bound on a seeded sample in the ball of radius 10^3.
    pub fn verify_growth(&self, seed: u64) -> Result<()> {
        let Some(growth) = self.growth else {
            return Err(Error::InvalidField("field has no growth bound".into()));
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..GROWTH_SAMPLE_POINTS {
            let x = random_point(&mut rng, self.dim, GROWTH_SAMPLE_RADIUS);
            let v = self.eval(&x);
            if !v.is_finite() {
                return Err(Error::NonFiniteField { r: norm(&x), point: x });
            }
            if !growth.admits(&x, v) {
                return Err(Error::GrowthViolation {
                    bound: growth.envelope(&x),
                    point: x,
                    value: v,
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn growth(&self) -> Option<GrowthBound> {
        self.growth
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            FieldKind::Affine { slope, offset } => dot(slope, x) + offset,
            FieldKind::Quadratic { matrix } => quad_form(matrix, x),
            FieldKind::Cosine { freq, amplitude, phase } => amplitude * (dot(freq, x) + phase).cos(),
            FieldKind::PurePower { gamma } => norm(x).powf(*gamma),
            FieldKind::Barrier(b) => b.eval(x),
            FieldKind::Grid(g) => g.eval(x),
            FieldKind::Sum(terms) => {
                let mut acc = 0.0;
                for (c, f) in terms {
                    acc += c * f.eval(x);
                }
                acc
            }
            FieldKind::Translated { field, shift } => field.eval(&add(x, shift)),
            FieldKind::Rotated { field, rotation } => field.eval(&mat_vec(rotation, x)),
        }
    }

    /// u(x + y) + u(x - y) - 2 u(x), in cancellation-free form for closed-form families.
    pub fn second_difference(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.kind {
            FieldKind::Affine { .. } => 0.0,
            FieldKind::Quadratic { matrix } => 2.0 * quad_form(matrix, y),
            FieldKind::Cosine { freq, amplitude, phase } => {
                let h = (0.5 * dot(freq, y)).sin();
                -4.0 * amplitude * (dot(freq, x) + phase).cos() * h * h
            }
            FieldKind::PurePower { gamma } => super::power_second_difference(x, y, *gamma),
            FieldKind::Barrier(b) => b.second_difference(x, y),
            FieldKind::Grid(g) => g.second_difference(x, y),
            FieldKind::Sum(terms) => {
                let mut acc = 0.0;
                for (c, f) in terms {
                    acc += c * f.second_difference(x, y);
                }
                acc
            }
            FieldKind::Translated { field, shift } => field.second_difference(&add(x, shift), y),
            FieldKind::Rotated { field, rotation } => {
                field.second_difference(&mat_vec(rotation, x), &mat_vec(rotation, y))
            }
        }
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidField(format!("{what} must be finite")))
    }
}

/// Growth of u(· + h) from that of u, using (a + b)^κ <= c (a^κ + b^κ), c = max(1, 2^{κ-1}).
fn shifted_growth(g: GrowthBound, h: f64) -> GrowthBound {
    let c = 1f64.max(2f64.powf(g.kappa - 1.0));
    GrowthBound {
        k: g.k * c * (1.0 + c * h.powf(g.kappa)),
        kappa: g.kappa,
        side: g.side,
    }
}

fn sum_growth(terms: &[(f64, ScalarField)]) -> Option<GrowthBound> {
    let mut kappa = 0.0f64;
    let mut side = GrowthSide::Both;
    let mut sides = Vec::new();
    for (c, f) in terms {
        if *c == 0.0 {
            continue;
        }
        let g = f.growth?;
        kappa = kappa.max(g.kappa);
        sides.push(if *c < 0.0 { g.side.flipped() } else { g.side });
    }
    for s in sides {
        side = match (side, s) {
            (GrowthSide::Both, t) => t,
            (t, GrowthSide::Both) => t,
            (a, b) if a == b => a,
            _ => return None,
        };
    }
    // 1 + |x|^a <= 2 (1 + |x|^κ) for a <= κ
    let mut k = 0.0;
    for (c, f) in terms {
        if *c == 0.0 {
            continue;
        }
        let g = f.growth?;
        let factor = if g.kappa == kappa { 1.0 } else { 2.0 };
        k += c.abs() * g.k * factor;
    }
    Some(GrowthBound { k, kappa, side })
}

/// Uniform radius in [0, radius], uniform direction.
pub(crate) fn random_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let r = radius * rng.gen::<f64>();
    let mut v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
    let nv = norm(&v).max(1e-300);
    for c in &mut v {
        *c *= r / nv;
    }
    v
}

pub(crate) fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
