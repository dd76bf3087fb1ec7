//! Run configuration: a fixed JSON schema, parsed with field paths in every error,
//! then validated against the numeric domains and resolved into library objects.

use std::path::Path;

use nonlocal_core::measure::{DensityProfile, Direction, FractionalOrder, SpectralMeasure, SphereRule};
use nonlocal_core::operator::{GridField, GrowthBound, GrowthSide, ScalarField};
use nonlocal_core::quadrature::Tolerance;
use nonlocal_core::rigidity::{smooth_random_grid, Nonlinearity, SearchOptions, DEFAULT_EPSILONS};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerance: ToleranceSpec,
    pub measure: MeasureSpec,
    #[serde(default)]
    pub field: Option<FieldSpec>,
    /// Declared bound `K(1 + |x|^κ)` attached to `field`.
    #[serde(default)]
    pub growth: Option<GrowthSpec>,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default)]
    pub eval: EvalSpec,
    #[serde(default)]
    pub lambda: LambdaSpec,
    #[serde(default)]
    pub barrier: BarrierSpec,
    #[serde(default)]
    pub lemma: LemmaSpec,
    #[serde(default)]
    pub replay: ReplaySpec,
    #[serde(default)]
    pub flow: FlowSpec,
    #[serde(default)]
    pub classify: ClassifySpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSpec {
    pub abs: f64,
    pub rel: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        let t = Tolerance::default();
        ToleranceSpec { abs: t.abs, rel: t.rel }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Uniform {
        total_mass: f64,
        #[serde(default)]
        resolution: Option<usize>,
    },
    Atomic {
        atoms: Vec<AtomSpec>,
    },
    Density {
        profile: DensitySpec,
        #[serde(default)]
        resolution: Option<usize>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    /// Normalized on construction; must be nonzero.
    pub direction: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Constant { value: f64 },
    /// `base + amplitude (ϑ·axis)²`
    Axial { base: f64, amplitude: f64, axis: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    Affine { slope: Vec<f64>, offset: f64 },
    /// Row-major symmetric matrix A of `x·Ax`.
    Quadratic { matrix: Vec<f64> },
    Cosine { freq: Vec<f64>, amplitude: f64, phase: f64 },
    PurePower { gamma: f64 },
    Barrier { gamma: f64 },
    /// Seeded odd trigonometric polynomial on the periodic lattice, oscillation 1.
    RandomGrid { points_per_axis: usize, box_length: f64, max_mode: usize },
    Sum { terms: Vec<TermSpec> },
    Translated { shift: Vec<f64>, field: Box<FieldSpec> },
    Rotated { rotation: Vec<f64>, field: Box<FieldSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coefficient: f64,
    pub field: FieldSpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub k: f64,
    pub kappa: f64,
    #[serde(default = "both")]
    pub side: SideSpec,
}

fn both() -> SideSpec {
    SideSpec::Both
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideSpec {
    Both,
    Upper,
    Lower,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Zero,
    Linear { slope: f64, offset: f64 },
    Cubic { coefficient: f64 },
    Arctan { scale: f64 },
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSpec {
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    /// When set, every value must lie within its budget (plus `tolerance.abs`) of this.
    #[serde(default)]
    pub expected: Option<f64>,
}

/// `count` equispaced points on the segment from `from` to `to`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaSpec {
    pub grid_count: usize,
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec { grid_count: 2048 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    /// Exponent of the barrier; if absent, derived from `kappa` as `(2s + κ)/2`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaSpec {
    /// Exponent γ of the barrier under test; if absent, derived from `kappa` (default 0).
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Sample size; the per-lemma default when absent.
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub directions: Option<usize>,
    #[serde(default)]
    pub max_radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplaySpec {
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub residual: f64,
    #[serde(default = "default_slack_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub search: SearchSpec,
}

fn default_epsilons() -> Vec<f64> {
    DEFAULT_EPSILONS.to_vec()
}

fn default_slack_tolerance() -> f64 {
    1e-9
}

impl Default for ReplaySpec {
    fn default() -> Self {
        ReplaySpec {
            x0: None,
            epsilons: default_epsilons(),
            residual: 0.0,
            tolerance: default_slack_tolerance(),
            search: SearchSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpec {
    pub radial_points: usize,
    /// 0 picks a dimension-dependent default.
    pub directions: usize,
    pub candidates: usize,
}

impl Default for SearchSpec {
    fn default() -> Self {
        let d = SearchOptions::default();
        SearchSpec {
            radial_points: d.radial_points,
            directions: d.directions,
            candidates: d.candidates,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSpec {
    pub points_per_axis: usize,
    pub box_length: f64,
    pub steps: usize,
    /// Explicit Euler step; the stability bound when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Largest Fourier mode of the random initial datum; ignored when `field` is given
    /// (the field is then sampled on the lattice).
    pub max_mode: usize,
    pub kappa: f64,
}

impl Default for FlowSpec {
    fn default() -> Self {
        FlowSpec {
            points_per_axis: 64,
            box_length: std::f64::consts::TAU,
            steps: 2000,
            dt: None,
            max_mode: 3,
            kappa: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySpec {
    pub kappa: f64,
    pub count: usize,
    pub radius: f64,
}

impl Default for ClassifySpec {
    fn default() -> Self {
        ClassifySpec { kappa: 0.0, count: 1000, radius: 10.0 }
    }
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn check(ok: bool, path: &str, msg: impl std::fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(path, msg))
    }
}

fn finite(v: f64, path: &str) -> Result<(), CliError> {
    check(v.is_finite(), path, format!("must be finite, got {v}"))
}

fn positive(v: f64, path: &str) -> Result<(), CliError> {
    check(v > 0.0 && v.is_finite(), path, format!("must be positive and finite, got {v}"))
}

fn all_finite(v: &[f64], path: &str) -> Result<(), CliError> {
    for (i, c) in v.iter().enumerate() {
        finite(*c, &format!("{path}[{i}]"))?;
    }
    Ok(())
}

fn vector(v: &[f64], n: usize, path: &str) -> Result<(), CliError> {
    check(v.len() == n, path, format!("expected {n} components, got {}", v.len()))?;
    all_finite(v, path)
}

impl RunConfig {
    /// Parse JSON text; errors carry the field path and the line/column.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!("{path}: {inner}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Domain checks that do not need the library objects.
    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.dimension;
        check(n >= 1, "dimension", format!("must be at least 1, got {n}"))?;
        check(self.s > 0.0 && self.s < 1.0, "s", format!("s ∈ (0, 1) required, got {}", self.s))?;
        let two_s = 2.0 * self.s;
        positive(self.tolerance.abs, "tolerance.abs")?;
        check(
            self.tolerance.rel >= 0.0 && self.tolerance.rel.is_finite(),
            "tolerance.rel",
            format!("must be nonnegative and finite, got {}", self.tolerance.rel),
        )?;
        match &self.measure {
            MeasureSpec::Uniform { total_mass, resolution } => {
                positive(*total_mass, "measure.total_mass")?;
                check(resolution.map_or(true, |r| r >= 1), "measure.resolution", "must be at least 1")?;
            }
            MeasureSpec::Atomic { atoms } => {
                for (i, a) in atoms.iter().enumerate() {
                    vector(&a.direction, n, &format!("measure.atoms[{i}].direction"))?;
                    check(
                        a.direction.iter().any(|c| *c != 0.0),
                        &format!("measure.atoms[{i}].direction"),
                        "must be nonzero",
                    )?;
                    positive(a.weight, &format!("measure.atoms[{i}].weight"))?;
                }
            }
            MeasureSpec::Density { profile, resolution } => {
                check(resolution.map_or(true, |r| r >= 1), "measure.resolution", "must be at least 1")?;
                match profile {
                    DensitySpec::Constant { value } => positive(*value, "measure.profile.value")?,
                    DensitySpec::Axial { base, amplitude, axis } => {
                        positive(*base, "measure.profile.base")?;
                        finite(*amplitude, "measure.profile.amplitude")?;
                        check(
                            base + amplitude.min(0.0) * dot(axis, axis) > 0.0,
                            "measure.profile",
                            "density must stay positive on the sphere",
                        )?;
                        vector(axis, n, "measure.profile.axis")?;
                    }
                }
            }
        }
        if let Some(f) = &self.field {
            validate_field(f, n, two_s, "field")?;
        }
        if let Some(g) = &self.growth {
            check(g.k >= 0.0 && g.k.is_finite(), "growth.k", format!("must be nonnegative, got {}", g.k))?;
            check(
                g.kappa >= 0.0 && g.kappa < two_s,
                "growth.kappa",
                format!("κ ∈ [0, 2s) = [0, {two_s}) required, got {}", g.kappa),
            )?;
        }
        if let Some(f) = &self.nonlinearity {
            validate_nonlinearity(f)?;
        }

        for (i, p) in self.eval.points.iter().enumerate() {
            vector(p, n, &format!("eval.points[{i}]"))?;
        }
        if let Some(sw) = &self.eval.sweep {
            vector(&sw.from, n, "eval.sweep.from")?;
            vector(&sw.to, n, "eval.sweep.to")?;
            check(sw.count >= 1, "eval.sweep.count", "must be at least 1")?;
        }
        if let Some(e) = self.eval.expected {
            finite(e, "eval.expected")?;
        }
        check(self.lambda.grid_count >= 1, "lambda.grid_count", "must be at least 1")?;

        validate_gamma(self.barrier.gamma, self.barrier.kappa, two_s, "barrier")?;
        validate_gamma(self.lemma.gamma, self.lemma.kappa, two_s, "lemma")?;
        check(self.lemma.count.map_or(true, |c| c >= 1), "lemma.count", "must be at least 1")?;
        check(self.lemma.directions.map_or(true, |c| c >= 1), "lemma.directions", "must be at least 1")?;
        if let Some(r) = self.lemma.max_radius {
            check(r >= 1.0 && r.is_finite(), "lemma.max_radius", format!("must be at least 1, got {r}"))?;
        }

        let r = &self.replay;
        if let Some(x0) = &r.x0 {
            vector(x0, n, "replay.x0")?;
        }
        check(!r.epsilons.is_empty(), "replay.epsilons", "must not be empty")?;
        for (i, e) in r.epsilons.iter().enumerate() {
            positive(*e, &format!("replay.epsilons[{i}]"))?;
        }
        check(r.residual >= 0.0 && r.residual.is_finite(), "replay.residual", "must be nonnegative")?;
        check(r.tolerance >= 0.0 && r.tolerance.is_finite(), "replay.tolerance", "must be nonnegative")?;
        check(r.search.radial_points >= 2, "replay.search.radial_points", "must be at least 2")?;
        check(r.search.candidates >= 1, "replay.search.candidates", "must be at least 1")?;

        let fl = &self.flow;
        check(fl.points_per_axis >= 2, "flow.points_per_axis", "must be at least 2")?;
        positive(fl.box_length, "flow.box_length")?;
        check(fl.max_mode >= 1, "flow.max_mode", "must be at least 1")?;
        if let Some(dt) = fl.dt {
            positive(dt, "flow.dt")?;
        }
        check(fl.kappa >= 0.0 && fl.kappa.is_finite(), "flow.kappa", "must be nonnegative")?;

        let c = &self.classify;
        check(c.kappa >= 0.0 && c.kappa.is_finite(), "classify.kappa", "must be nonnegative")?;
        check(c.count >= 2, "classify.count", "must be at least 2")?;
        positive(c.radius, "classify.radius")?;
        Ok(())
    }

    pub fn order(&self) -> FractionalOrder {
        FractionalOrder::new(self.s).expect("validated")
    }

    pub fn quadrature(&self) -> Tolerance {
        Tolerance::new(self.tolerance.abs, self.tolerance.rel)
    }

    pub fn build_measure(&self) -> Result<SpectralMeasure, CliError> {
        let n = self.dimension;
        let rule = |r: &Option<usize>| r.map_or(SphereRule::default_for(n), |resolution| SphereRule { resolution });
        let built = match &self.measure {
            MeasureSpec::Uniform { total_mass, resolution } => {
                SpectralMeasure::uniform_with_rule(n, *total_mass, rule(resolution))
            }
            MeasureSpec::Atomic { atoms } => atoms
                .iter()
                .map(|a| Direction::normalized(&a.direction).map(|d| (d, a.weight)))
                .collect::<nonlocal_core::Result<Vec<_>>>()
                .and_then(|atoms| SpectralMeasure::atomic(n, atoms)),
            MeasureSpec::Density { profile, resolution } => {
                let p = match profile {
                    DensitySpec::Constant { value } => DensityProfile::Constant(*value),
                    DensitySpec::Axial { base, amplitude, axis } => DensityProfile::Axial {
                        base: *base,
                        amplitude: *amplitude,
                        axis: axis.clone(),
                    },
                };
                SpectralMeasure::density(n, p, rule(resolution))
            }
        };
        built.map_err(|e| invalid("measure", e))
    }

    /// The configured field with its declared growth bound (verified on a seeded sample).
    pub fn build_field(&self) -> Result<ScalarField, CliError> {
        let spec = self.field.as_ref().ok_or_else(|| invalid("field", "required by this command"))?;
        let u = build_field(spec, self, "field")?;
        match self.growth {
            Some(g) => {
                let side = match g.side {
                    SideSpec::Both => GrowthSide::Both,
                    SideSpec::Upper => GrowthSide::Upper,
                    SideSpec::Lower => GrowthSide::Lower,
                };
                u.with_declared_growth(GrowthBound { k: g.k, kappa: g.kappa, side }, self.seed)
                    .map_err(|e| invalid("growth", e))
            }
            None => Ok(u),
        }
    }

    pub fn build_nonlinearity(&self) -> Result<Nonlinearity, CliError> {
        let spec = self
            .nonlinearity
            .as_ref()
            .ok_or_else(|| invalid("nonlinearity", "required by this command"))?;
        let f = match spec {
            NonlinearitySpec::Zero => Ok(Nonlinearity::zero()),
            NonlinearitySpec::Linear { slope, offset } => Nonlinearity::linear(*slope, *offset),
            NonlinearitySpec::Cubic { coefficient } => Nonlinearity::cubic(*coefficient),
            NonlinearitySpec::Arctan { scale } => Nonlinearity::arctan(*scale),
            NonlinearitySpec::PiecewiseLinear { knots } => Nonlinearity::piecewise_linear(knots.clone()),
        };
        f.map_err(|e| invalid("nonlinearity", e))
    }

    pub fn random_grid(&self, points_per_axis: usize, box_length: f64, max_mode: usize) -> Result<GridField, CliError> {
        smooth_random_grid(self.dimension, points_per_axis, box_length, max_mode, self.seed)
            .map_err(|e| invalid("field", e))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `γ` given directly must lie in (0, 2s); otherwise `κ` must lie in [0, 2s).
fn validate_gamma(gamma: Option<f64>, kappa: Option<f64>, two_s: f64, section: &str) -> Result<(), CliError> {
    if let Some(g) = gamma {
        check(
            g > 0.0 && g < two_s,
            &format!("{section}.gamma"),
            format!("γ ∈ (0, 2s) = (0, {two_s}) required, got γ = {g}"),
        )?;
    }
    if let Some(k) = kappa {
        check(
            k >= 0.0 && k < two_s,
            &format!("{section}.kappa"),
            format!("κ ∈ [0, 2s) = [0, {two_s}) required, got κ = {k}"),
        )?;
    }
    check(
        !(gamma.is_some() && kappa.is_some()),
        section,
        "give either gamma or kappa, not both",
    )
}

fn validate_field(f: &FieldSpec, n: usize, two_s: f64, path: &str) -> Result<(), CliError> {
    match f {
        FieldSpec::Constant { value } => finite(*value, &format!("{path}.value")),
        FieldSpec::Affine { slope, offset } => {
            vector(slope, n, &format!("{path}.slope"))?;
            finite(*offset, &format!("{path}.offset"))
        }
        FieldSpec::Quadratic { matrix } => vector(matrix, n * n, &format!("{path}.matrix")),
        FieldSpec::Cosine { freq, amplitude, phase } => {
            vector(freq, n, &format!("{path}.freq"))?;
            finite(*amplitude, &format!("{path}.amplitude"))?;
            finite(*phase, &format!("{path}.phase"))
        }
        FieldSpec::PurePower { gamma } => check(
            *gamma > 0.0 && *gamma < two_s,
            &format!("{path}.gamma"),
            format!("γ ∈ (0, 2s) = (0, {two_s}) required, got γ = {gamma}"),
        ),
        FieldSpec::Barrier { gamma } => check(
            *gamma > 0.0 && *gamma < two_s,
            &format!("{path}.gamma"),
            format!("γ ∈ (0, 2s) = (0, {two_s}) required, got γ = {gamma}"),
        ),
        FieldSpec::RandomGrid { points_per_axis, box_length, max_mode } => {
            check(*points_per_axis >= 2, &format!("{path}.points_per_axis"), "must be at least 2")?;
            positive(*box_length, &format!("{path}.box_length"))?;
            check(*max_mode >= 1, &format!("{path}.max_mode"), "must be at least 1")
        }
        FieldSpec::Sum { terms } => {
            check(!terms.is_empty(), &format!("{path}.terms"), "must not be empty")?;
            for (i, t) in terms.iter().enumerate() {
                let p = format!("{path}.terms[{i}]");
                finite(t.coefficient, &format!("{p}.coefficient"))?;
                validate_field(&t.field, n, two_s, &format!("{p}.field"))?;
            }
            Ok(())
        }
        FieldSpec::Translated { shift, field } => {
            vector(shift, n, &format!("{path}.shift"))?;
            validate_field(field, n, two_s, &format!("{path}.field"))
        }
        FieldSpec::Rotated { rotation, field } => {
            vector(rotation, n * n, &format!("{path}.rotation"))?;
            validate_field(field, n, two_s, &format!("{path}.field"))
        }
    }
}

fn validate_nonlinearity(f: &NonlinearitySpec) -> Result<(), CliError> {
    match f {
        NonlinearitySpec::Zero => Ok(()),
        NonlinearitySpec::Linear { slope, offset } => {
            check(*slope >= 0.0 && slope.is_finite(), "nonlinearity.slope", "must be nonnegative")?;
            finite(*offset, "nonlinearity.offset")
        }
        NonlinearitySpec::Cubic { coefficient } => {
            check(*coefficient >= 0.0 && coefficient.is_finite(), "nonlinearity.coefficient", "must be nonnegative")
        }
        NonlinearitySpec::Arctan { scale } => {
            check(*scale >= 0.0 && scale.is_finite(), "nonlinearity.scale", "must be nonnegative")
        }
        NonlinearitySpec::PiecewiseLinear { knots } => {
            check(!knots.is_empty(), "nonlinearity.knots", "must not be empty")?;
            for (i, (t, v)) in knots.iter().enumerate() {
                finite(*t, &format!("nonlinearity.knots[{i}][0]"))?;
                finite(*v, &format!("nonlinearity.knots[{i}][1]"))?;
            }
            for (i, w) in knots.windows(2).enumerate() {
                let p = format!("nonlinearity.knots[{}]", i + 1);
                check(w[1].0 > w[0].0, &p, "abscissae must be strictly increasing")?;
                check(w[1].1 >= w[0].1, &p, "values must be nondecreasing (f monotone)")?;
            }
            Ok(())
        }
    }
}

fn build_field(spec: &FieldSpec, cfg: &RunConfig, path: &str) -> Result<ScalarField, CliError> {
    let n = cfg.dimension;
    let s = cfg.order();
    let wrap = |r: nonlocal_core::Result<ScalarField>| r.map_err(|e| invalid(path, e));
    match spec {
        FieldSpec::Constant { value } => wrap(ScalarField::constant(n, *value)),
        FieldSpec::Affine { slope, offset } => wrap(ScalarField::affine(slope.clone(), *offset)),
        FieldSpec::Quadratic { matrix } => wrap(ScalarField::quadratic(n, matrix.clone())),
        FieldSpec::Cosine { freq, amplitude, phase } => wrap(ScalarField::cosine(freq.clone(), *amplitude, *phase)),
        FieldSpec::PurePower { gamma } => wrap(ScalarField::pure_power(n, *gamma)),
        FieldSpec::Barrier { gamma } => {
            let b = nonlocal_core::barrier::build_barrier(*gamma, s, n).map_err(|e| invalid(path, e))?;
            Ok(b.field())
        }
        FieldSpec::RandomGrid { points_per_axis, box_length, max_mode } => {
            Ok(ScalarField::grid(cfg.random_grid(*points_per_axis, *box_length, *max_mode)?))
        }
        FieldSpec::Sum { terms } => {
            let built = terms
                .iter()
                .enumerate()
                .map(|(i, t)| Ok((t.coefficient, build_field(&t.field, cfg, &format!("{path}.terms[{i}].field"))?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            wrap(ScalarField::sum(built))
        }
        FieldSpec::Translated { shift, field } => {
            wrap(build_field(field, cfg, &format!("{path}.field"))?.translated(shift.clone()))
        }
        FieldSpec::Rotated { rotation, field } => {
            wrap(build_field(field, cfg, &format!("{path}.field"))?.rotated(rotation.clone()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"dimension": 2, "s": 0.5, "measure": {"kind": "uniform", "total_mass": 1.0}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.replay.epsilons, DEFAULT_EPSILONS.to_vec());
        assert_eq!(cfg.flow.steps, 2000);
    }

    #[test]
    fn type_errors_name_the_field_and_line() {
        let text = "{\n \"dimension\": 2,\n \"s\": \"half\",\n \"measure\": {\"kind\": \"uniform\", \"total_mass\": 1}\n}";
        let err = RunConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("s:"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"dimension": 2, "s": 0.5, "measure": {"kind": "uniform", "total_mass": 1.0, "mass": 2}}"#;
        let err = RunConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("mass"), "{err}");
    }

    #[test]
    fn domain_errors_name_the_field() {
        let text = r#"{"dimension": 2, "s": 0.5, "measure": {"kind": "atomic",
            "atoms": [{"direction": [1, 0], "weight": 1}, {"direction": [0, 1], "weight": -1}]}}"#;
        let err = RunConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("measure.atoms[1].weight:"), "{err}");

        let text = r#"{"dimension": 2, "s": 0.5, "measure": {"kind": "uniform", "total_mass": 1},
            "lemma": {"gamma": 1.0}}"#;
        let err = RunConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("γ ∈ (0, 2s)"), "{err}");
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let again = RunConfig::parse(&text).unwrap();
        assert_eq!(serde_json::to_string(&again).unwrap(), text);
    }
}
