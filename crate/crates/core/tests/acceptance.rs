//! Acceptance criteria, one pass/fail line each. Runs every criterion twice and
//! compares the serialized reports byte for byte for the determinism criterion.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nonlocal_core::barrier::{build_barrier, certify_barrier};
use nonlocal_core::lemma_suite::{verify_lemma, LemmaId, SampleSpec};
use nonlocal_core::measure::{Direction, FractionalOrder, SpectralMeasure};
use nonlocal_core::operator::{eval_i, multiplier, ScalarField};
use nonlocal_core::quadrature::{fractional_constant, Tolerance};
use nonlocal_core::rigidity::{
    classify_grid, gamma_rule, one_sided_replay, periodic_flow, replay, smooth_random_grid, Classification, Conclusion,
    Nonlinearity, ReplayOptions, ReplayReport, ReplaySide,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const AFFINE_BUDGET_MAX: f64 = 1e-8;
const MULTIPLIER_REL_TOL: f64 = 1e-6;
const MULTIPLIER_SKIP: f64 = 1e-12;
const CS_TOL: f64 = 1e-8;
const HOMOGENEITY_REL_TOL: f64 = 1e-5;
const BRACKET_RATIO: (f64, f64) = (0.4, 0.6);
const MIRROR_TOL: f64 = 1e-8;
const FLOW_OSC_MAX: f64 = 1e-4;
const FLOW_F_MAX: f64 = 1e-6;
const FLOW_STEPS: usize = 2000;

const LIMIT_AFFINE: Duration = Duration::from_secs(10);
const LIMIT_MULTIPLIER: Duration = Duration::from_secs(60);
const LIMIT_LEMMAS: Duration = Duration::from_secs(300);
const LIMIT_FLOW: Duration = Duration::from_secs(120);

struct Outcome {
    pass: bool,
    detail: String,
    report: Value,
}

fn order(s: f64) -> FractionalOrder {
    FractionalOrder::new(s).unwrap()
}

fn atomic(n: usize) -> SpectralMeasure {
    let atoms = match n {
        1 => vec![(Direction::axis(1, 0), 1.0)],
        2 => vec![(Direction::axis(2, 0), 1.0), (Direction::normalized(&[0.6, 0.8]).unwrap(), 0.7)],
        _ => vec![
            (Direction::axis(3, 0), 1.0),
            (Direction::normalized(&[0.0, 0.6, 0.8]).unwrap(), 0.5),
            (Direction::normalized(&[1.0, 1.0, 1.0]).unwrap(), 0.25),
        ],
    };
    SpectralMeasure::atomic(n, atoms).unwrap()
}

fn criterion_affine() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let measures = [
        atomic(1),
        atomic(2),
        atomic(3),
        SpectralMeasure::uniform(2, 1.0).unwrap(),
        SpectralMeasure::uniform(3, 1.0).unwrap(),
    ];
    let mut worst_value = 0.0f64;
    let mut worst_budget = 0.0f64;
    let mut pass = true;
    let mut evals = 0;
    for _ in 0..20 {
        for mu in &measures {
            let n = mu.dim();
            let slope: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let offset = rng.gen_range(-10.0..10.0);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
            let u = ScalarField::affine(slope, offset).unwrap();
            for s in [0.25, 0.5, 0.75] {
                let e = eval_i(&u, &x, mu, order(s), Tolerance::default()).unwrap();
                pass &= e.value.abs() <= e.total_budget() && e.total_budget() <= AFFINE_BUDGET_MAX;
                worst_value = worst_value.max(e.value.abs());
                worst_budget = worst_budget.max(e.total_budget());
                evals += 1;
            }
        }
    }
    Outcome {
        pass,
        detail: format!("{evals} evaluations, max |ℐu| = {worst_value:e}, max budget = {worst_budget:e}"),
        report: json!({ "evals": evals, "max_value": worst_value, "max_budget": worst_budget }),
    }
}

fn criterion_multiplier() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let measures = [atomic(2), SpectralMeasure::uniform(2, 1.0).unwrap(), atomic(3), SpectralMeasure::uniform(3, 1.0).unwrap()];
    let mut worst = 0.0f64;
    let mut skipped = 0;
    let mut rows = Vec::new();
    for k in 0..100 {
        let mu = &measures[k % measures.len()];
        let n = mu.dim();
        let s = order(rng.gen_range(0.1..0.95));
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let amp = rng.gen_range(0.1..3.0);
        let phase = rng.gen_range(0.0..2.0 * PI);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let u = ScalarField::cosine(xi.clone(), amp, phase).unwrap();
        let exact = multiplier(mu, s).eval(&xi) * u.eval(&x);
        if exact.abs() < MULTIPLIER_SKIP {
            skipped += 1;
            continue;
        }
        let e = eval_i(&u, &x, mu, s, Tolerance::default()).unwrap();
        let rel = ((e.value - exact) / exact).abs();
        worst = worst.max(rel);
        rows.push(json!([s.value(), e.value, exact]));
    }
    Outcome {
        pass: worst <= MULTIPLIER_REL_TOL,
        detail: format!("max relative error {worst:e} ({skipped} skipped)"),
        report: json!({ "max_relative_error": worst, "rows": rows }),
    }
}

fn criterion_cs() -> Outcome {
    let c = fractional_constant(order(0.5));
    let err = (c.value - 2.0 * PI).abs();
    Outcome {
        pass: err <= CS_TOL,
        detail: format!("c_{{1/2}} = {:.15}, |c - 2π| = {err:e}", c.value),
        report: json!({ "value": c.value, "error_estimate": c.error }),
    }
}

fn criterion_homogeneity() -> Outcome {
    let mu = SpectralMeasure::uniform(2, 1.0).unwrap();
    let x = [0.6, -0.8];
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for s in [0.5, 0.75] {
        let so = order(s);
        for gamma in [0.3, 0.5, 0.9 * 2.0 * s] {
            let u = ScalarField::pure_power(2, gamma).unwrap();
            let base = eval_i(&u, &x, &mu, so, Tolerance::default()).unwrap().value;
            for t in [2.0f64, 4.0, 8.0] {
                let scaled = eval_i(&u, &[t * x[0], t * x[1]], &mu, so, Tolerance::default()).unwrap().value;
                let expected = t.powf(gamma - 2.0 * s) * base;
                let rel = ((scaled - expected) / expected).abs();
                worst = worst.max(rel);
                rows.push(json!([s, gamma, t, scaled, expected]));
            }
        }
    }
    Outcome {
        pass: worst <= HOMOGENEITY_REL_TOL,
        detail: format!("max relative error {worst:e} over 18 scalings"),
        report: json!({ "max_relative_error": worst, "rows": rows }),
    }
}

fn criterion_lemmas() -> Outcome {
    let mu = SpectralMeasure::uniform(2, 1.0).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    let mut reports = Vec::new();
    for (s, kappa) in [(0.5, 0.0), (0.75, 0.5), (0.3, 0.1)] {
        let so = order(s);
        let gamma = gamma_rule(so, kappa).unwrap();
        let b = build_barrier(gamma, so, 2).unwrap();
        for id in [LemmaId::P1, LemmaId::P2, LemmaId::P3] {
            let spec = SampleSpec::for_lemma(id, 7);
            let r = verify_lemma(id, &b.field(), gamma, &mu, so, &spec, Tolerance::default()).unwrap();
            pass &= r.pass && r.empirical_sup <= r.analytic_c + r.tolerance;
            lines.push(format!("{id:?}@s={s}: {:.3e}/{:.3e}", r.empirical_sup, r.analytic_c));
            reports.push(json!({ "s": s, "kappa": kappa, "id": format!("{id:?}"), "sup": r.empirical_sup, "c": r.analytic_c, "pass": r.pass }));
        }
    }
    Outcome {
        pass,
        detail: lines.join(", "),
        report: Value::Array(reports),
    }
}

fn criterion_barrier() -> Outcome {
    let mu = SpectralMeasure::uniform(2, 1.0).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    let mut reports = Vec::new();
    for (s, kappa) in [(0.5, 0.0), (0.75, 0.5), (0.3, 0.1)] {
        let so = order(s);
        let gamma = gamma_rule(so, kappa).unwrap();
        let b = build_barrier(gamma, so, 2).unwrap();
        let props = b.properties().holds && b.properties().value_at_origin == 0.0;
        match certify_barrier(&b, &mu, so, Tolerance::default()) {
            Ok(cert) => {
                let sweep_ok = cert.sweep.len() == 200
                    && cert.sweep.iter().all(|p| p.value <= cert.certified_c + p.budget);
                pass &= props && sweep_ok;
                lines.push(format!("s={s}: sup ℐv = {:.3e} <= C = {:.3e}", cert.sweep_max, cert.certified_c));
                reports.push(json!({ "s": s, "c": cert.certified_c, "sweep_max": cert.sweep_max, "properties": b.properties() }));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("s={s}: {e}"));
            }
        }
    }
    Outcome {
        pass,
        detail: lines.join(", "),
        report: Value::Array(reports),
    }
}

fn bracket_ratios(reports: &[ReplayReport]) -> Vec<f64> {
    let widths: Vec<f64> = reports
        .iter()
        .map(|r| {
            let b = r.bracket.unwrap();
            b[1] - b[0]
        })
        .collect();
    widths.windows(2).map(|w| w[1] / w[0]).collect()
}

fn criterion_replay() -> Outcome {
    let mu = SpectralMeasure::uniform(2, 1.0).unwrap();
    let opts = ReplayOptions::default();
    let constant = ScalarField::constant(2, 1.0).unwrap();
    let f_const = Nonlinearity::piecewise_linear(vec![(0.0, -1.0), (1.0, 0.0), (2.0, 1.0)]).unwrap();
    let r_const = replay(&constant, &f_const, &mu, order(0.5), &[0.3, -0.2], &opts).unwrap();
    let affine = ScalarField::affine(vec![0.02, -0.01], 0.0).unwrap();
    let r_affine = replay(&affine, &Nonlinearity::zero(), &mu, order(0.75), &[0.3, -0.2], &opts).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for (name, reports) in [("constant", &r_const), ("affine", &r_affine)] {
        let consistent = reports.len() == 4 && reports.iter().all(|r| r.conclusion == Conclusion::Consistent);
        let ratios = bracket_ratios(reports);
        let linear = ratios.iter().all(|q| *q >= BRACKET_RATIO.0 && *q <= BRACKET_RATIO.1);
        pass &= consistent && linear;
        lines.push(format!("{name}: consistent={consistent}, width ratios {ratios:.4?}"));
    }
    Outcome {
        pass,
        detail: lines.join("; "),
        report: json!({ "constant": r_const, "affine": r_affine }),
    }
}

fn criterion_mirror() -> Outcome {
    let mu = SpectralMeasure::uniform(2, 1.0).unwrap();
    let s = order(0.75);
    let u = ScalarField::cosine(vec![1.0, 0.5], 0.8, 0.3).unwrap();
    let f = Nonlinearity::arctan(1.0).unwrap();
    // u is not an exact solution; declare sup |ℐu - f(u)| as residual
    let residual = multiplier(&mu, s).eval(&[1.0, 0.5]).abs() * 0.8 + PI / 2.0;
    let opts = ReplayOptions {
        residual,
        ..ReplayOptions::default()
    };
    let x0 = [0.4, 1.1];
    let up = one_sided_replay(&u, &f, &mu, s, &x0, ReplaySide::Upper, &opts).unwrap();
    let neg = u.clone().scaled(-1.0).unwrap();
    let down = one_sided_replay(&neg, &f.mirrored(), &mu, s, &x0, ReplaySide::Lower, &opts).unwrap();
    let mut worst = 0.0f64;
    let mut pass = up.len() == down.len();
    for (a, b) in up.iter().zip(&down) {
        for (p, q) in [
            (a.slack16bis.upper, b.slack16bis.lower),
            (a.slack_fx.upper, b.slack_fx.lower),
            (a.slack188.upper, b.slack188.lower),
        ] {
            match (p, q) {
                (Some(p), Some(q)) => worst = worst.max((p - q).abs()),
                _ => pass = false,
            }
        }
    }
    pass &= worst <= MIRROR_TOL;
    let consistent = up.iter().chain(&down).all(|r| r.conclusion == Conclusion::Consistent);
    Outcome {
        pass,
        detail: format!("max slack mismatch {worst:e}, both sides consistent={consistent}"),
        report: json!({ "upper": up, "lower": down }),
    }
}

fn criterion_flow() -> Outcome {
    let mu = SpectralMeasure::uniform(2, 1.0).unwrap();
    let u0 = smooth_random_grid(2, 64, 2.0 * PI, 3, 9).unwrap();
    let f = Nonlinearity::cubic(1.0).unwrap();
    match periodic_flow(&u0, &f, &mu, order(0.5), None, FLOW_STEPS) {
        Ok(rep) => {
            let grid = nonlocal_core::operator::GridField::new(2, 64, 2.0 * PI, rep.final_state.clone()).unwrap();
            let class = classify_grid(&grid, 0.0).unwrap();
            let constant = matches!(class.classification, Classification::Constant { .. });
            let pass = rep.final_oscillation <= FLOW_OSC_MAX
                && rep.f_at_limit.abs() <= FLOW_F_MAX
                && rep.windows_monotone
                && constant;
            Outcome {
                pass,
                detail: format!(
                    "final oscillation {:e}, f(c) = {:e}, c = {:e}, windows monotone = {}, classified {:?}",
                    rep.final_oscillation, rep.f_at_limit, rep.limit_constant, rep.windows_monotone, class.classification
                ),
                report: json!({ "flow": rep, "classification": class }),
            }
        }
        Err(e) => Outcome {
            pass: false,
            detail: e.to_string(),
            report: Value::Null,
        },
    }
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 9] = [
        ("affine kernel", criterion_affine, Some(LIMIT_AFFINE)),
        ("multiplier oracle", criterion_multiplier, Some(LIMIT_MULTIPLIER)),
        ("c_s at s = 1/2", criterion_cs, None),
        ("homogeneity", criterion_homogeneity, None),
        ("lemma suite", criterion_lemmas, Some(LIMIT_LEMMAS)),
        ("barrier certification", criterion_barrier, None),
        ("proof replay", criterion_replay, None),
        ("one-sided symmetry", criterion_mirror, None),
        ("flow rigidity", criterion_flow, Some(LIMIT_FLOW)),
    ];
    let mut failures = 0;
    let mut first_reports = Vec::new();
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = limit.map_or(true, |l| elapsed <= l);
        let pass = out.pass && in_time;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<22} {} ({:.1} s{}) {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.map_or(String::new(), |l| format!(" / limit {} s", l.as_secs())),
            out.detail
        );
        first_reports.push(serde_json::to_string(&out.report).unwrap());
    }
    let identical = criteria
        .iter()
        .zip(&first_reports)
        .all(|((_, run, _), first)| serde_json::to_string(&run().report).unwrap() == *first);
    if !identical {
        failures += 1;
    }
    println!(
        "criterion 10 {:<22} {} (criteria 1-9 rerun with the same seeds; reports byte-identical = {identical})",
        "determinism",
        if identical { "PASS" } else { "FAIL" }
    );
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
