//! Replays of the comparison argument behind the Liouville-type theorem, the periodic
//! flow experiment, and classification of candidate solutions.

mod flow;
mod replay;

pub use flow::{periodic_flow, smooth_random_grid, stability_bound, FlowReport};
pub use replay::{
    comparison_fields, locate_extrema, one_sided_replay, replay, search_radius, Conclusion, Extremum, ReplayOptions,
    ReplayReport, ReplaySide, SearchOptions, SlackPair, DEFAULT_EPSILONS,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, solve};
use crate::measure::FractionalOrder;
use crate::operator::{GridField, ScalarField};

/// Continuous nondecreasing nonlinearity f of `ℐu = f(u)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Nonlinearity {
    Zero,
    /// `slope·r + offset`
    Linear { slope: f64, offset: f64 },
    /// `coefficient·r³`
    Cubic { coefficient: f64 },
    /// `scale·atan(r)`
    Arctan { scale: f64 },
    /// Linear interpolation between knots `(t, f(t))`, constant beyond the end knots.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

const MONOTONE_PAIRS: usize = 1000;

impl Nonlinearity {
    pub fn zero() -> Self {
        Nonlinearity::Zero
    }

    pub fn linear(slope: f64, offset: f64) -> Result<Self> {
        Nonlinearity::Linear { slope, offset }.validated()
    }

    pub fn cubic(coefficient: f64) -> Result<Self> {
        Nonlinearity::Cubic { coefficient }.validated()
    }

    pub fn arctan(scale: f64) -> Result<Self> {
        Nonlinearity::Arctan { scale }.validated()
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        Nonlinearity::PiecewiseLinear { knots }.validated()
    }

    /// Check parameter domains, then spot-check monotonicity on sorted random pairs.
    pub fn validated(self) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidNonlinearity(msg));
        match &self {
            Nonlinearity::Zero => {}
            Nonlinearity::Linear { slope, offset } => {
                if !(*slope >= 0.0 && slope.is_finite() && offset.is_finite()) {
                    return bad(format!("linear slope must be finite and >= 0, got {slope} (offset {offset})"));
                }
            }
            Nonlinearity::Cubic { coefficient } => {
                if !(*coefficient >= 0.0 && coefficient.is_finite()) {
                    return bad(format!("cubic coefficient must be finite and >= 0, got {coefficient}"));
                }
            }
            Nonlinearity::Arctan { scale } => {
                if !(*scale >= 0.0 && scale.is_finite()) {
                    return bad(format!("arctan scale must be finite and >= 0, got {scale}"));
                }
            }
            Nonlinearity::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return bad("piecewise-linear nonlinearity needs at least one knot".into());
                }
                if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                    return bad("knots must be finite".into());
                }
                for (i, w) in knots.windows(2).enumerate() {
                    if !(w[1].0 > w[0].0) {
                        return bad(format!("knot abscissae must increase strictly (knot {})", i + 1));
                    }
                    if w[1].1 < w[0].1 {
                        return bad(format!("knot values must be nondecreasing (knot {})", i + 1));
                    }
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f_6e6f);
        let span = self.check_span();
        for _ in 0..MONOTONE_PAIRS {
            let a: f64 = rng.gen_range(-span..span);
            let b: f64 = rng.gen_range(-span..span);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if self.eval(lo) > self.eval(hi) {
                return bad(format!("not nondecreasing: f({lo}) > f({hi})"));
            }
        }
        Ok(self)
    }

    fn check_span(&self) -> f64 {
        match self {
            Nonlinearity::PiecewiseLinear { knots } => {
                2.0 * knots.iter().map(|(t, _)| t.abs()).fold(1.0, f64::max)
            }
            _ => 10.0,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear { slope, offset } => slope * r + offset,
            Nonlinearity::Cubic { coefficient } => coefficient * r * r * r,
            Nonlinearity::Arctan { scale } => scale * r.atan(),
            Nonlinearity::PiecewiseLinear { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if r <= first.0 {
                    return first.1;
                }
                if r >= last.0 {
                    return last.1;
                }
                let i = knots.partition_point(|k| k.0 <= r);
                let (t0, v0) = knots[i - 1];
                let (t1, v1) = knots[i];
                v0 + (v1 - v0) * (r - t0) / (t1 - t0)
            }
        }
    }

    /// Lipschitz constant of f on `[lo, hi]`.
    pub fn lipschitz_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear { slope, .. } => *slope,
            Nonlinearity::Cubic { coefficient } => 3.0 * coefficient * lo.abs().max(hi.abs()).powi(2),
            Nonlinearity::Arctan { scale } => *scale,
            Nonlinearity::PiecewiseLinear { knots } => knots
                .windows(2)
                .filter(|w| w[1].0 > lo && w[0].0 < hi)
                .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                .fold(0.0, f64::max),
        }
    }

    /// `r ↦ -f(-r)`, the nonlinearity satisfied by `-u` when `u` solves `ℐu = f(u)`.
    pub fn mirrored(&self) -> Self {
        match self {
            Nonlinearity::Zero => Nonlinearity::Zero,
            Nonlinearity::Linear { slope, offset } => Nonlinearity::Linear {
                slope: *slope,
                offset: -offset,
            },
            Nonlinearity::Cubic { .. } | Nonlinearity::Arctan { .. } => self.clone(),
            Nonlinearity::PiecewiseLinear { knots } => Nonlinearity::PiecewiseLinear {
                knots: knots.iter().rev().map(|&(t, v)| (-t, -v)).collect(),
            },
        }
    }
}

/// γ = (2s + κ)/2, the barrier exponent strictly between κ and 2s.
pub fn gamma_rule(s: FractionalOrder, kappa: f64) -> Result<f64> {
    let two_s = s.two_s();
    if !(kappa >= 0.0 && kappa < two_s) {
        return Err(Error::Domain(format!("growth exponent must satisfy κ ∈ [0, 2s) = [0, {two_s}), got κ = {kappa}")));
    }
    Ok((two_s + kappa) / 2.0)
}

/// Relative residual below which a least-squares affine fit is accepted.
pub const CLASSIFY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Classification {
    Constant { c: f64 },
    Affine { slope: Vec<f64>, offset: f64 },
    NonAffine { residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub classification: Classification,
    pub sample_points: usize,
    /// max |u - (ϖ·x + c)| over the sample, relative to max(1, max |u|)
    pub relative_residual: f64,
    pub kappa: f64,
    /// An affine fit with nonzero slope although κ < 1.
    pub inconsistent: bool,
}

/// Least-squares affine fit of `values` at `points`, classified with [`CLASSIFY_THRESHOLD`].
///
/// Residual and slope are measured relative to `max(1, max |u|)` so data that has
/// decayed to near zero classifies as constant.
pub fn classify_samples(points: &[Vec<f64>], values: &[f64], kappa: f64) -> Result<ClassificationReport> {
    if points.is_empty() || points.len() != values.len() {
        return Err(Error::Domain(format!(
            "classification needs matching nonempty samples, got {} points and {} values",
            points.len(),
            values.len()
        )));
    }
    let n = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    let m = points.len() as f64;
    let mut center = vec![0.0; n];
    for p in points {
        for (c, x) in center.iter_mut().zip(p) {
            *c += x / m;
        }
    }
    let centered: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&center).map(|(x, c)| x - c).collect())
        .collect();
    // normal equations for the columns [x - center, 1]
    let dim = n + 1;
    let mut ata = vec![0.0; dim * dim];
    let mut atb = vec![0.0; dim];
    for (p, &v) in centered.iter().zip(values) {
        let row: Vec<f64> = p.iter().copied().chain(std::iter::once(1.0)).collect();
        for i in 0..dim {
            atb[i] += row[i] * v;
            for j in 0..dim {
                ata[i * dim + j] += row[i] * row[j];
            }
        }
    }
    let coeffs = solve(ata.clone(), atb.clone())
        .or_else(|| {
            // degenerate sample geometry: fall back to a constant fit
            let mut only_const = vec![0.0; dim];
            only_const[n] = values.iter().sum::<f64>() / m;
            Some(only_const)
        })
        .unwrap_or_default();
    let slope = coeffs[..n].to_vec();
    let offset_centered = coeffs[n];
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let max_resid = centered
        .iter()
        .zip(values)
        .map(|(p, v)| (v - dot(&slope, p) - offset_centered).abs())
        .fold(0.0, f64::max);
    let relative_residual = max_resid / scale;
    let extent = centered.iter().map(|p| norm(p)).fold(0.0, f64::max);
    let classification = if relative_residual > CLASSIFY_THRESHOLD {
        Classification::NonAffine { residual: relative_residual }
    } else if norm(&slope) * extent <= CLASSIFY_THRESHOLD * scale {
        Classification::Constant {
            c: values.iter().sum::<f64>() / m,
        }
    } else {
        Classification::Affine {
            offset: offset_centered - dot(&slope, &center),
            slope,
        }
    };
    let inconsistent = kappa < 1.0 && matches!(classification, Classification::Affine { .. });
    Ok(ClassificationReport {
        classification,
        sample_points: points.len(),
        relative_residual,
        kappa,
        inconsistent,
    })
}

/// Classify a field from `count` seeded points in the ball of radius `radius`.
pub fn classify_field(u: &ScalarField, kappa: f64, count: usize, radius: f64, seed: u64) -> Result<ClassificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..count.max(1))
        .map(|_| crate::operator::random_point(&mut rng, u.dim(), radius))
        .collect();
    let values: Vec<f64> = points.iter().map(|p| u.eval(p)).collect();
    classify_samples(&points, &values, kappa)
}

/// Classify lattice data from its samples.
pub fn classify_grid(g: &GridField, kappa: f64) -> Result<ClassificationReport> {
    let points: Vec<Vec<f64>> = (0..g.values().len()).map(|i| g.lattice_point(i)).collect();
    classify_samples(&points, g.values(), kappa)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_rule_examples() {
        let s = FractionalOrder::new(0.75).unwrap();
        assert_eq!(gamma_rule(s, 0.5).unwrap(), 1.0);
        assert_eq!(gamma_rule(FractionalOrder::new(0.5).unwrap(), 0.0).unwrap(), 0.5);
        assert!(gamma_rule(s, 1.5).is_err());
        let mut prev = 0.0;
        for k in 0..100 {
            let kappa = 1.5 * k as f64 / 100.0;
            let g = gamma_rule(s, kappa).unwrap();
            assert!(g > kappa && g < 1.5 && g > prev);
            prev = g;
        }
    }

    #[test]
    fn nonlinearity_validation() {
        assert!(Nonlinearity::linear(-1.0, 0.0).is_err());
        assert!(Nonlinearity::cubic(-0.1).is_err());
        assert!(Nonlinearity::piecewise_linear(vec![(0.0, 1.0), (1.0, 0.0)]).is_err());
        assert!(Nonlinearity::piecewise_linear(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
        let f = Nonlinearity::piecewise_linear(vec![(0.0, -1.0), (1.0, 0.0), (2.0, 3.0)]).unwrap();
        assert_eq!(f.eval(1.0), 0.0);
        assert_eq!(f.eval(-5.0), -1.0);
        assert_eq!(f.eval(1.5), 1.5);
        assert_eq!(f.eval(7.0), 3.0);
        assert_eq!(f.lipschitz_on(-10.0, 10.0), 3.0);
        assert_eq!(f.lipschitz_on(0.0, 0.5), 1.0);
    }

    #[test]
    fn mirror_is_an_involution() {
        let fs = [
            Nonlinearity::linear(2.0, 0.5).unwrap(),
            Nonlinearity::cubic(1.0).unwrap(),
            Nonlinearity::arctan(3.0).unwrap(),
            Nonlinearity::piecewise_linear(vec![(0.0, -1.0), (1.0, 0.0), (2.0, 3.0)]).unwrap(),
        ];
        for f in fs {
            let g = f.mirrored().validated().unwrap();
            assert_eq!(g.mirrored(), f);
            for r in [-3.0, -0.4, 0.0, 0.7, 2.5] {
                assert_eq!(g.eval(r), -f.eval(-r));
            }
        }
    }

    #[test]
    fn classify_examples() {
        let c = classify_field(&ScalarField::constant(2, 5.0).unwrap(), 0.0, 100, 10.0, 1).unwrap();
        assert_eq!(c.classification, Classification::Constant { c: 5.0 });
        let a = classify_field(&ScalarField::affine(vec![1.0, 0.0], 2.0).unwrap(), 1.0, 100, 10.0, 1).unwrap();
        match a.classification {
            Classification::Affine { slope, offset } => {
                assert!((slope[0] - 1.0).abs() < 1e-12 && slope[1].abs() < 1e-12);
                assert!((offset - 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(a.relative_residual < 1e-14);
        assert!(!a.inconsistent);
        let b = classify_field(&ScalarField::affine(vec![1.0, 0.0], 2.0).unwrap(), 0.5, 100, 10.0, 1).unwrap();
        assert!(b.inconsistent);
        let p = classify_field(&ScalarField::pure_power(2, 1.5).unwrap(), 1.0, 100, 10.0, 1).unwrap();
        assert!(matches!(p.classification, Classification::NonAffine { .. }));
    }
}
