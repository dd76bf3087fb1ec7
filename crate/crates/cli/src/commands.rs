//! One function per subcommand. Each returns the structured result, the named
//! pass/fail checks it performed and an optional table of per-point samples.

use nonlocal_core::barrier::{build_barrier, certify_barrier};
use nonlocal_core::lemma_suite::{verify_lemma, LemmaId, SampleSpec};
use nonlocal_core::measure::{lambda_estimate_with, LambdaOptions};
use nonlocal_core::operator::{eval_i_many, GridField};
use nonlocal_core::rigidity::{
    classify_field, classify_grid, gamma_rule, one_sided_replay, periodic_flow, replay, Conclusion, ReplayOptions,
    ReplayReport, ReplaySide, SearchOptions,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool) -> Self {
        Check { name: name.into(), pass }
    }
}

/// One CSV row: coordinates, value, budget.
pub type Row = (Vec<f64>, f64, f64);

pub struct Outcome {
    pub result: Value,
    pub checks: Vec<Check>,
    pub rows: Vec<Row>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

pub fn eval(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let u = cfg.build_field()?;
    let mu = cfg.build_measure()?;
    let mut points = cfg.eval.points.clone();
    if let Some(sw) = &cfg.eval.sweep {
        for j in 0..sw.count {
            let t = if sw.count > 1 { j as f64 / (sw.count - 1) as f64 } else { 0.0 };
            points.push(sw.from.iter().zip(&sw.to).map(|(a, b)| a + t * (b - a)).collect());
        }
    }
    if points.is_empty() {
        return Err(CliError::Config("eval: give eval.points or eval.sweep".into()));
    }
    let evals = eval_i_many(&u, &points, &mu, cfg.order(), cfg.quadrature())?;
    let mut checks = vec![Check::new("finite", evals.iter().all(|e| e.value.is_finite()))];
    if let Some(expected) = cfg.eval.expected {
        let ok = evals
            .iter()
            .all(|e| (e.value - expected).abs() <= e.total_budget() + cfg.tolerance.abs);
        checks.push(Check::new("expected_value", ok));
    }
    let rows = points
        .iter()
        .zip(&evals)
        .map(|(p, e)| (p.clone(), e.value, e.total_budget()))
        .collect();
    let result = json!({
        "evaluations": points.iter().zip(&evals).map(|(p, e)| json!({
            "point": p,
            "value": e.value,
            "i1_part": e.i1_part,
            "i2_part": e.i2_part,
            "budget": e.total_budget(),
        })).collect::<Vec<_>>(),
    });
    Ok(Outcome { result, checks, rows })
}

pub fn lambda(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mu = cfg.build_measure()?;
    let rep = lambda_estimate_with(&mu, cfg.order(), LambdaOptions { grid_count: cfg.lambda.grid_count });
    let checks = vec![Check::new("nondegenerate", !rep.degenerate)];
    Ok(Outcome {
        result: to_value(&rep),
        checks,
        rows: Vec::new(),
    })
}

/// γ from the section: explicit, or `(2s + κ)/2` with κ defaulting to 0.
fn resolve_gamma(cfg: &RunConfig, gamma: Option<f64>, kappa: Option<f64>) -> Result<f64, CliError> {
    match gamma {
        Some(g) => Ok(g),
        None => Ok(gamma_rule(cfg.order(), kappa.unwrap_or(0.0))?),
    }
}

pub fn barrier(cfg: &mut RunConfig) -> Result<Outcome, CliError> {
    let gamma = resolve_gamma(cfg, cfg.barrier.gamma, cfg.barrier.kappa)?;
    cfg.barrier.gamma = Some(gamma);
    cfg.barrier.kappa = None;
    let mu = cfg.build_measure()?;
    let b = build_barrier(gamma, cfg.order(), cfg.dimension)?;
    let cert = certify_barrier(&b, &mu, cfg.order(), cfg.quadrature())?;
    let rows = cert.sweep.iter().map(|p| (p.point.clone(), p.value, p.budget)).collect();
    let checks = vec![
        Check::new("properties", b.properties().holds),
        Check::new("sweep_below_certified_c", cert.sweep_max <= cert.certified_c),
    ];
    let result = json!({
        "gamma": gamma,
        "hessian_bound": b.hessian_bound(),
        "sampled_hessian": b.sampled_hessian(),
        "properties": b.properties(),
        "certificate": cert,
    });
    Ok(Outcome { result, checks, rows })
}

pub fn lemma(cfg: &mut RunConfig, id: LemmaId) -> Result<Outcome, CliError> {
    let gamma = resolve_gamma(cfg, cfg.lemma.gamma, cfg.lemma.kappa)?;
    cfg.lemma.gamma = Some(gamma);
    cfg.lemma.kappa = None;
    let defaults = SampleSpec::for_lemma(id, cfg.seed);
    let spec = SampleSpec {
        count: *cfg.lemma.count.get_or_insert(defaults.count),
        directions: *cfg.lemma.directions.get_or_insert(defaults.directions),
        max_radius: *cfg.lemma.max_radius.get_or_insert(defaults.max_radius),
        seed: cfg.seed,
    };
    let mu = cfg.build_measure()?;
    let field = match cfg.field {
        Some(_) => cfg.build_field()?,
        None => build_barrier(gamma, cfg.order(), cfg.dimension)?.field(),
    };
    let rep = verify_lemma(id, &field, gamma, &mu, cfg.order(), &spec, cfg.quadrature())?;
    let rows = rep.samples.iter().map(|p| (p.point.clone(), p.value, p.budget)).collect();
    let checks = vec![Check::new(format!("{id:?}_bound"), rep.pass)];
    Ok(Outcome {
        result: to_value(&rep),
        checks,
        rows,
    })
}

fn replay_options(cfg: &RunConfig) -> ReplayOptions {
    let r = &cfg.replay;
    ReplayOptions {
        epsilons: r.epsilons.clone(),
        residual: r.residual,
        tolerance: r.tolerance,
        quadrature: cfg.quadrature(),
        search: SearchOptions {
            radial_points: r.search.radial_points,
            directions: r.search.directions,
            candidates: r.search.candidates,
        },
    }
}

fn replay_outcome(reports: Vec<ReplayReport>) -> Outcome {
    let checks = reports
        .iter()
        .map(|r| Check::new(format!("consistent_eps_{}", r.epsilon), r.conclusion == Conclusion::Consistent))
        .collect();
    Outcome {
        result: json!({ "reports": reports }),
        checks,
        rows: Vec::new(),
    }
}

pub fn replay_cmd(cfg: &mut RunConfig, side: Option<ReplaySide>) -> Result<Outcome, CliError> {
    let n = cfg.dimension;
    let x0 = cfg.replay.x0.get_or_insert_with(|| vec![0.0; n]).clone();
    let u = cfg.build_field()?;
    if u.growth().is_none() {
        return Err(CliError::Config("growth: replay needs a declared growth bound".into()));
    }
    let f = cfg.build_nonlinearity()?;
    let mu = cfg.build_measure()?;
    let opts = replay_options(cfg);
    let reports = match side {
        None => replay(&u, &f, &mu, cfg.order(), &x0, &opts)?,
        Some(side) => one_sided_replay(&u, &f, &mu, cfg.order(), &x0, side, &opts)?,
    };
    Ok(replay_outcome(reports))
}

pub fn flow(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let fl = &cfg.flow;
    let (n, l) = (fl.points_per_axis, fl.box_length);
    let u0 = match cfg.field {
        Some(_) => {
            let u = cfg.build_field()?;
            GridField::from_fn(cfg.dimension, n, l, |x| u.eval(x))?
        }
        None => cfg.random_grid(n, l, fl.max_mode)?,
    };
    let f = cfg.build_nonlinearity()?;
    let mu = cfg.build_measure()?;
    let rep = periodic_flow(&u0, &f, &mu, cfg.order(), fl.dt, fl.steps)?;
    let limit = GridField::new(cfg.dimension, n, l, rep.final_state.clone())?;
    let class = classify_grid(&limit, fl.kappa)?;
    let checks = vec![
        Check::new("oscillation_windows_monotone", rep.windows_monotone),
        Check::new("sup_nonincreasing", rep.sup_nonincreasing),
        Check::new("inf_nondecreasing", rep.inf_nondecreasing),
    ];
    Ok(Outcome {
        result: json!({ "flow": rep, "classification": class }),
        checks,
        rows: Vec::new(),
    })
}

pub fn classify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let u = cfg.build_field()?;
    let c = &cfg.classify;
    let rep = classify_field(&u, c.kappa, c.count, c.radius, cfg.seed)?;
    let checks = vec![Check::new("consistent_with_growth", !rep.inconsistent)];
    Ok(Outcome {
        result: to_value(&rep),
        checks,
        rows: Vec::new(),
    })
}
