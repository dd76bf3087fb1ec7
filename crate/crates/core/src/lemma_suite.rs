//! Explicit constants of the three estimates used to build the barrier, and a
//! sampler that checks each estimate on its domain:
//!
//! * P1: `|ℐ₁v(x)| <= Λ M / (1 - s)` on B₁ when `‖D²v‖ <= M` on B₂,
//! * P2: `|ℐ₂v(x)| <= (2^{γ+1} + 2) Λ · 2/(2s - γ)` on B₁ when `0 <= v <= |x|^γ`,
//! * P3: `ℐv(x) <= Λ [C_h ∫_{|ϱ|<1/2} |ϱ|^{1-2s} dϱ + 2 ∫_{1/2}^∞ 2((1+ϱ)^γ - 1) ϱ^{-1-2s} dϱ]`
//!   outside B₁ when additionally `v = |x|^γ` there.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::barrier::{fd_hessian_norm, sample_directions, sampled_hessian_sup, HESSIAN_SAFETY, HESSIAN_STEP};
use crate::error::{Error, Result};
use crate::linalg::{lex_cmp, norm, scale};
use crate::measure::{FractionalOrder, SpectralMeasure};
use crate::operator::{eval_i_many, power_hessian_constant, FieldKind, ScalarField, Smoothness};
use crate::quadrature::{adaptive_panel_integrate, near_origin_bound, RadialQuadPlan, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LemmaId {
    P1,
    P2,
    P3,
}

impl std::str::FromStr for LemmaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "P1" => Ok(LemmaId::P1),
            "P2" => Ok(LemmaId::P2),
            "P3" => Ok(LemmaId::P3),
            other => Err(Error::Domain(format!("unknown lemma id {other:?}; expected P1, P2 or P3"))),
        }
    }
}

/// `Λ M ∫_{-1}^{1} |r|^{1-2s} dr = Λ M / (1 - s)`.
pub fn lemma_p1_constant(hessian_bound: f64, mu: &SpectralMeasure, s: FractionalOrder) -> Result<f64> {
    if !(hessian_bound >= 0.0) {
        return Err(Error::Domain(format!("Hessian bound must be nonnegative, got {hessian_bound}")));
    }
    Ok(mu.total_mass() * hessian_bound / (1.0 - s.value()))
}

fn check_gamma(gamma: f64, s: FractionalOrder) -> Result<()> {
    if gamma > 0.0 && gamma < s.two_s() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "exponent must satisfy γ ∈ (0, 2s) = (0, {}), got γ = {gamma}",
            s.two_s()
        )))
    }
}

/// `(2^{γ+1} + 2) Λ ∫_{|r|>=1} |r|^{γ-1-2s} dr = (2^{γ+1} + 2) Λ · 2/(2s - γ)`, from
/// `|δ²v(x; y)| <= |x+y|^γ + |x-y|^γ + 2|x|^γ <= (2^{γ+1} + 2) |y|^γ` for `|x| < 1 <= |y|`.
pub fn lemma_p2_constant(gamma: f64, mu: &SpectralMeasure, s: FractionalOrder) -> Result<f64> {
    check_gamma(gamma, s)?;
    Ok((2f64.powf(gamma + 1.0) + 2.0) * mu.total_mass() * 2.0 / (s.two_s() - gamma))
}

/// Far-field constant. For `|x| >= 1` and `ω = x/|x|`, `ℐv(x) <= |x|^{γ-2s} ℐ|·|^γ(ω)`,
/// and along each direction the integrand `|ω+ϑϱ|^γ + |ω-ϑϱ|^γ - 2` is bounded by
/// `C_h ϱ²` for `|ϱ| < 1/2` (`C_h = 2^{2-γ} γ(|γ-2|+1)` bounds the Hessian of `|·|^γ`
/// on `B_{1/2}(ω)`) and by `2((1+|ϱ|)^γ - 1)` beyond.
pub fn lemma_p3_constant(gamma: f64, mu: &SpectralMeasure, s: FractionalOrder) -> Result<f64> {
    check_gamma(gamma, s)?;
    let c_h = power_hessian_constant(gamma) * 2f64.powf(2.0 - gamma);
    let near = near_origin_bound(c_h, s, 0.5);
    Ok(mu.total_mass() * (near + far_integral_upper(gamma, s)?))
}

/// Upper bound for `2 ∫_{1/2}^∞ 2((1+ϱ)^γ - 1) ϱ^{-1-2s} dϱ`: panels on [1/2, R] plus
/// their error estimate, and beyond R the bound `(1+u)^γ <= 1 + γu max(1, (1+u)^{γ-1})`
/// applied to `(1+ϱ)^γ = ϱ^γ (1 + 1/ϱ)^γ`.
fn far_integral_upper(gamma: f64, s: FractionalOrder) -> Result<f64> {
    let two_s = s.two_s();
    let big_r = 1e6;
    let plan = RadialQuadPlan::new(s, 0.5, big_r, &[], Tolerance::new(1e-13, 1e-12))?;
    let panels = adaptive_panel_integrate(|r: f64| 2.0 * (gamma * r.ln_1p()).exp_m1(), &plan)?;
    let c = 1f64.max((1.0 + 1.0 / big_r).powf(gamma - 1.0));
    let tail = 4.0
        * (big_r.powf(gamma - two_s) / (two_s - gamma) + gamma * c * big_r.powf(gamma - 1.0 - two_s) / (1.0 + two_s - gamma)
            - big_r.powf(-two_s) / two_s);
    Ok(panels.value + panels.error + tail)
}

/// Sample set of [`verify_lemma`]: `count` points with radii on a grid and directions
/// from a fixed set, rotated by a seeded random orthogonal map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSpec {
    pub count: usize,
    pub directions: usize,
    /// Largest radius for P3 (radii log-spaced in [1, max_radius]).
    pub max_radius: f64,
    pub seed: u64,
}

impl SampleSpec {
    pub fn for_lemma(id: LemmaId, seed: u64) -> Self {
        match id {
            LemmaId::P1 | LemmaId::P2 => SampleSpec { count: 200, directions: 16, max_radius: 1.0, seed },
            LemmaId::P3 => SampleSpec { count: 100, directions: 16, max_radius: 1e3, seed },
        }
    }

    pub fn points(&self, id: LemmaId, n: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let offset: f64 = rng.gen();
        let dirs = rotate_directions(sample_directions(n, self.directions.max(1)), &mut rng);
        (0..self.count)
            .map(|i| {
                let d = &dirs[i % dirs.len()];
                let rho = match id {
                    // radii in [0, 1), jittered by the seed
                    LemmaId::P1 | LemmaId::P2 => (i as f64 + offset) / self.count as f64,
                    LemmaId::P3 => {
                        let t = if self.count > 1 { i as f64 / (self.count - 1) as f64 } else { 0.0 };
                        self.max_radius.powf(t)
                    }
                };
                scale(d, rho)
            })
            .collect()
    }
}

fn rotate_directions(dirs: Vec<Vec<f64>>, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = dirs.first().map_or(0, Vec::len);
    if n < 2 {
        return dirs;
    }
    // rotation in a random coordinate plane by a random angle
    let i = rng.gen_range(0..n);
    let j = (i + 1 + rng.gen_range(0..n - 1)) % n;
    let a: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
    let (c, sn) = (a.cos(), a.sin());
    dirs.into_iter()
        .map(|mut d| {
            let (di, dj) = (d[i], d[j]);
            d[i] = c * di - sn * dj;
            d[j] = sn * di + c * dj;
            d
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSample {
    pub point: Vec<f64>,
    pub value: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub lemma_id: LemmaId,
    pub analytic_c: f64,
    /// sup of |ℐ₁v| (P1), |ℐ₂v| (P2) or ℐv (P3) over the sample
    pub empirical_sup: f64,
    pub sample_points: usize,
    pub worst_point: Vec<f64>,
    /// largest quadrature budget over the sample, used as the comparison tolerance
    pub tolerance: f64,
    pub pass: bool,
    pub samples: Vec<LemmaSample>,
}

/// Check the hypotheses of lemma `id` for `field`, then compare the sampled sup of
/// the relevant part of ℐ with the analytic constant.
pub fn verify_lemma(
    id: LemmaId,
    field: &ScalarField,
    gamma: f64,
    mu: &SpectralMeasure,
    s: FractionalOrder,
    spec: &SampleSpec,
    tol: Tolerance,
) -> Result<LemmaReport> {
    let n = field.dim();
    if mu.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: mu.dim() });
    }
    let points = spec.points(id, n);
    let analytic_c = match id {
        LemmaId::P1 => {
            check_c2(field, spec)?;
            lemma_p1_constant(hessian_bound_on_b2(field), mu, s)?
        }
        LemmaId::P2 => {
            check_gamma(gamma, s).map_err(|e| precondition(id, vec![0.0; n], e.to_string()))?;
            check_power_envelope(id, field, gamma, &points, spec)?;
            lemma_p2_constant(gamma, mu, s)?
        }
        LemmaId::P3 => {
            check_gamma(gamma, s).map_err(|e| precondition(id, vec![0.0; n], e.to_string()))?;
            check_power_envelope(id, field, gamma, &points, spec)?;
            check_exact_power(field, gamma, &points)?;
            lemma_p3_constant(gamma, mu, s)?
        }
    };

    let evals = eval_i_many(field, &points, mu, s, tol)?;
    let samples: Vec<LemmaSample> = points
        .into_iter()
        .zip(evals)
        .map(|(point, e)| {
            let value = match id {
                LemmaId::P1 => e.i1_part.abs(),
                LemmaId::P2 => e.i2_part.abs(),
                LemmaId::P3 => e.value,
            };
            LemmaSample {
                point,
                value,
                budget: e.total_budget(),
            }
        })
        .collect();
    let mut worst = 0;
    for (i, p) in samples.iter().enumerate() {
        let w = &samples[worst];
        if p.value > w.value || (p.value == w.value && lex_cmp(&p.point, &w.point).is_lt()) {
            worst = i;
        }
    }
    let empirical_sup = samples.get(worst).map_or(f64::NEG_INFINITY, |p| p.value);
    let tolerance = samples.iter().map(|p| p.budget).fold(0.0, f64::max) + tol.abs;
    Ok(LemmaReport {
        lemma_id: id,
        analytic_c,
        empirical_sup,
        sample_points: samples.len(),
        worst_point: samples.get(worst).map(|p| p.point.clone()).unwrap_or_default(),
        tolerance,
        pass: empirical_sup <= analytic_c + tolerance,
        samples,
    })
}

fn precondition(id: LemmaId, point: Vec<f64>, reason: String) -> Error {
    Error::PreconditionFailure {
        lemma: format!("{id:?}"),
        point,
        reason,
    }
}

/// Bound on ‖D²v‖ over B₂: exact for the barrier, sampled (with safety factor) otherwise.
fn hessian_bound_on_b2(field: &ScalarField) -> f64 {
    if let FieldKind::Barrier(b) = field.kind() {
        return b.hessian_bound();
    }
    HESSIAN_SAFETY * sampled_hessian_sup(&|x: &[f64]| field.eval(x), field.dim(), 2.0, HESSIAN_STEP)
}

/// C² on B₃: finite-difference Hessians at steps h and h/2 agree to 10 %.
fn check_c2(field: &ScalarField, spec: &SampleSpec) -> Result<()> {
    let n = field.dim();
    if field.smoothness() == Smoothness::AwayFromOrigin {
        return Err(precondition(LemmaId::P1, vec![0.0; n], "field is not C² at the origin".into()));
    }
    let dirs = sample_directions(n, spec.directions.max(1));
    let f = |x: &[f64]| field.eval(x);
    for i in 0..60 {
        let x = scale(&dirs[i % dirs.len()], 3.0 * i as f64 / 60.0);
        let h = 1e-3;
        let a = fd_hessian_norm(&f, &x, h);
        let b = fd_hessian_norm(&f, &x, 0.5 * h);
        if (a - b).abs() > 0.1 * a.abs().max(b.abs()) + 1e-6 * (1.0 + field.eval(&x).abs()) {
            return Err(precondition(
                LemmaId::P1,
                x,
                format!("finite-difference Hessian unstable under refinement ({a} vs {b})"),
            ));
        }
    }
    Ok(())
}

/// `0 <= v(x) <= |x|^γ` on B₃ and on the lemma sample.
fn check_power_envelope(id: LemmaId, field: &ScalarField, gamma: f64, points: &[Vec<f64>], spec: &SampleSpec) -> Result<()> {
    let n = field.dim();
    let dirs = sample_directions(n, spec.directions.max(1));
    let ball = (0..300).map(|i| scale(&dirs[i % dirs.len()], 3.0 * i as f64 / 300.0));
    for x in ball.chain(points.iter().cloned()) {
        let v = field.eval(&x);
        let env = norm(&x).powf(gamma);
        if v < 0.0 || v > env * (1.0 + 1e-12) {
            return Err(precondition(id, x, format!("0 <= v <= |x|^γ fails: v = {v}, |x|^γ = {env}")));
        }
    }
    Ok(())
}

/// `v(x) = |x|^γ` on the (outside-B₁) sample.
fn check_exact_power(field: &ScalarField, gamma: f64, points: &[Vec<f64>]) -> Result<()> {
    for x in points {
        let nx = norm(x);
        if nx < 1.0 {
            continue;
        }
        let v = field.eval(x);
        let env = nx.powf(gamma);
        if (v - env).abs() > 1e-12 * env {
            return Err(precondition(LemmaId::P3, x.clone(), format!("v = |x|^γ fails: v = {v}, |x|^γ = {env}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(s: f64) -> FractionalOrder {
        FractionalOrder::new(s).unwrap()
    }

    fn uniform(mass: f64) -> SpectralMeasure {
        SpectralMeasure::uniform(2, mass).unwrap()
    }

    fn atomic_mass(mass: f64) -> SpectralMeasure {
        SpectralMeasure::atomic(2, vec![(crate::measure::Direction::axis(2, 0), mass)]).unwrap()
    }

    #[test]
    fn p1_examples() {
        assert_eq!(lemma_p1_constant(0.0, &uniform(1.0), order(0.5)).unwrap(), 0.0);
        assert!((lemma_p1_constant(1.0, &atomic_mass(1.0), order(0.5)).unwrap() - 2.0).abs() < 1e-14);
        assert!((lemma_p1_constant(3.0, &atomic_mass(2.0), order(0.75)).unwrap() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn p2_examples() {
        let mu = atomic_mass(1.0);
        let near_zero = lemma_p2_constant(1e-12, &mu, order(0.5)).unwrap();
        assert!((near_zero - 8.0).abs() < 1e-9);
        let v = lemma_p2_constant(0.5, &mu, order(0.5)).unwrap();
        assert!((v - (2f64.powf(1.5) + 2.0) * 4.0).abs() < 1e-12);
        assert!((v - 19.31).abs() < 0.01);
        let empty = SpectralMeasure::atomic(2, vec![]).unwrap();
        assert_eq!(lemma_p2_constant(0.5, &empty, order(0.5)).unwrap(), 0.0);
        assert!(lemma_p2_constant(1.0, &mu, order(0.5)).is_err());
    }

    #[test]
    fn p3_far_integral_matches_brute_force() {
        // 2 ∫_{1/2}^∞ 2((1+ϱ)^γ - 1) ϱ^{-2} dϱ at γ = 0.5, s = 0.5; ϱ = 1/u² turns it
        // into 2 ∫_0^{√2} 4(√(1+u²) - u) du with a smooth integrand
        let n = 400_000;
        let h = 2f64.sqrt() / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let u = (i as f64 + 0.5) * h;
            acc += 4.0 * ((1.0 + u * u).sqrt() - u) * h;
        }
        let brute = 2.0 * acc;
        let ours = far_integral_upper(0.5, order(0.5)).unwrap();
        assert!(ours >= brute - 1e-9 && ours - brute < 1e-6, "{ours} vs {brute}");
    }

    #[test]
    fn constants_grow_with_mass() {
        let s = order(0.6);
        for (a, b) in [(1.0, 2.0), (0.5, 0.7)] {
            let (ma, mb) = (uniform(a), uniform(b));
            assert!(lemma_p1_constant(2.0, &ma, s).unwrap() <= lemma_p1_constant(2.0, &mb, s).unwrap());
            assert!(lemma_p2_constant(0.7, &ma, s).unwrap() <= lemma_p2_constant(0.7, &mb, s).unwrap());
            assert!(lemma_p3_constant(0.7, &ma, s).unwrap() <= lemma_p3_constant(0.7, &mb, s).unwrap());
        }
    }

    #[test]
    fn p2_diverges_like_inverse_gap() {
        let s = order(0.6);
        let mu = uniform(1.0);
        let mut prev: Option<f64> = None;
        for k in 3..10 {
            let gap = 2f64.powi(-k);
            let c = lemma_p2_constant(1.2 - gap, &mu, s).unwrap();
            if let Some(p) = prev {
                let ratio = c / p;
                assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
            }
            prev = Some(c);
        }
    }

    #[test]
    fn p1_on_zero_field() {
        let f = ScalarField::zero(2);
        let spec = SampleSpec { count: 20, directions: 8, max_radius: 1.0, seed: 1 };
        let r = verify_lemma(LemmaId::P1, &f, 0.5, &uniform(1.0), order(0.5), &spec, Tolerance::default()).unwrap();
        assert_eq!(r.empirical_sup, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn corrupted_barrier_hits_precondition() {
        let s = order(0.5);
        let b = crate::barrier::build_barrier(0.5, s, 2).unwrap();
        let corrupted = ScalarField::sum(vec![(2.0, b.field())]).unwrap();
        let spec = SampleSpec { count: 10, directions: 4, max_radius: 1e3, seed: 2 };
        let err = verify_lemma(LemmaId::P3, &corrupted, 0.5, &uniform(1.0), s, &spec, Tolerance::default()).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailure { .. }));
    }

    #[test]
    fn lemma_id_parses() {
        assert_eq!("p2".parse::<LemmaId>().unwrap(), LemmaId::P2);
        assert!("P4".parse::<LemmaId>().is_err());
    }
}
