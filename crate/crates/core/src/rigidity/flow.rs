//! Explicit Euler for `∂ₜu = ℐu - f(u)` on a periodic lattice, ℐ applied exactly
//! through its symbol on the Fourier modes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Nonlinearity;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::measure::{FractionalOrder, SpectralMeasure};
use crate::operator::{apply_symbol, multiplier, GridField};

/// Oscillation is recorded every this many steps.
pub const FLOW_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub grid_size: usize,
    pub dim: usize,
    pub box_length: f64,
    pub time_step: f64,
    pub stability_bound: f64,
    pub steps: usize,
    pub initial_oscillation: f64,
    /// sup - inf of the final state
    pub final_oscillation: f64,
    /// sup |ℐu - f(u)| of the final state
    pub final_residual: f64,
    /// mean of the final state
    pub limit_constant: f64,
    pub f_at_limit: f64,
    /// Oscillation at steps 0, 100, 200, ... and at the last step.
    pub oscillation_history: Vec<f64>,
    pub windows_monotone: bool,
    /// sup u never increased by more than rounding over a step that started with
    /// f(sup u) >= 0 (the only steps where the maximum principle forbids growth)
    pub sup_nonincreasing: bool,
    /// inf u never decreased by more than rounding over a step that started with f(inf u) <= 0
    pub inf_nondecreasing: bool,
    #[serde(skip)]
    pub final_state: Vec<f64>,
}

fn range(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn symbol_of(u0: &GridField, mu: &SpectralMeasure, s: FractionalOrder) -> Vec<f64> {
    let m = multiplier(mu, s);
    u0.wavevectors().iter().map(|k| m.eval(k)).collect()
}

/// `1 / (max |m(k)| + Lip f)`, with the Lipschitz constant taken on the initial
/// range widened by its oscillation on each side.
pub fn stability_bound(u0: &GridField, f: &Nonlinearity, mu: &SpectralMeasure, s: FractionalOrder) -> f64 {
    let symbol = symbol_of(u0, mu, s);
    stability_from(&symbol, u0.values(), f)
}

fn stability_from(symbol: &[f64], values: &[f64], f: &Nonlinearity) -> f64 {
    let m_max = symbol.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let (lo, hi) = range(values);
    let osc = hi - lo;
    1.0 / (m_max + f.lipschitz_on(lo - osc, hi + osc))
}

/// Run `steps` explicit Euler steps. `dt = None` uses the stability bound itself.
pub fn periodic_flow(
    u0: &GridField,
    f: &Nonlinearity,
    mu: &SpectralMeasure,
    s: FractionalOrder,
    dt: Option<f64>,
    steps: usize,
) -> Result<FlowReport> {
    if mu.dim() != u0.dim() {
        return Err(Error::DimensionMismatch { expected: u0.dim(), got: mu.dim() });
    }
    let symbol = symbol_of(u0, mu, s);
    let bound = stability_from(&symbol, u0.values(), f);
    let dt = dt.unwrap_or(bound);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Stability(format!("time step must be positive, got {dt}")));
    }
    if dt > bound {
        return Err(Error::Stability(format!(
            "dt = {dt} exceeds the stability bound {bound}; use dt <= {bound}"
        )));
    }
    let (dim, n) = (u0.dim(), u0.points_per_axis());
    let mut u = u0.values().to_vec();
    let (lo0, hi0) = range(&u);
    let initial_oscillation = hi0 - lo0;
    let sup0 = lo0.abs().max(hi0.abs());
    let blow_up = 2.0 * sup0.max(initial_oscillation).max(1.0);
    let slack = 1e-12 * sup0.max(1.0);

    let mut history = vec![initial_oscillation];
    let (mut sup_ok, mut inf_ok) = (true, true);
    let (mut lo, mut hi) = (lo0, hi0);
    for step in 1..=steps {
        let iu = apply_symbol(&u, dim, n, &symbol);
        for (v, i) in u.iter_mut().zip(&iu) {
            *v += dt * (i - f.eval(*v));
        }
        let (new_lo, new_hi) = range(&u);
        if !(new_lo.is_finite() && new_hi.is_finite()) || new_lo.abs().max(new_hi.abs()) > blow_up {
            return Err(Error::Stability(format!(
                "blow-up at step {step}: sup |u| exceeds {blow_up}; reduce dt below {dt}"
            )));
        }
        sup_ok &= f.eval(hi) < 0.0 || new_hi <= hi + slack;
        inf_ok &= f.eval(lo) > 0.0 || new_lo >= lo - slack;
        (lo, hi) = (new_lo, new_hi);
        if step % FLOW_WINDOW == 0 || step == steps {
            history.push(hi - lo);
        }
    }
    let windows_monotone = history.windows(2).all(|w| w[1] <= w[0] + slack);
    let iu = apply_symbol(&u, dim, n, &symbol);
    let final_residual = u
        .iter()
        .zip(&iu)
        .map(|(v, i)| (i - f.eval(*v)).abs())
        .fold(0.0, f64::max);
    let limit_constant = u.iter().sum::<f64>() / u.len() as f64;
    Ok(FlowReport {
        grid_size: n,
        dim,
        box_length: u0.box_length(),
        time_step: dt,
        stability_bound: bound,
        steps,
        initial_oscillation,
        final_oscillation: hi - lo,
        final_residual,
        limit_constant,
        f_at_limit: f.eval(limit_constant),
        oscillation_history: history,
        windows_monotone,
        sup_nonincreasing: sup_ok,
        inf_nondecreasing: inf_ok,
        final_state: u,
    })
}

/// Random smooth odd periodic data `Σ a_k sin(k·x)` over wavenumbers `0 < |k|_∞ <= max_mode`,
/// rescaled to oscillation 1. Oddness makes the lattice mean vanish, so a flow with
/// odd f has 0 as its only candidate limit.
pub fn smooth_random_grid(dim: usize, points_per_axis: usize, box_length: f64, max_mode: usize, seed: u64) -> Result<GridField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = max_mode.max(1) as i64;
    let mut terms: Vec<(Vec<f64>, f64)> = Vec::new();
    let side = (2 * m + 1) as usize;
    for flat in 0..side.pow(dim as u32) {
        let mut k = vec![0i64; dim];
        let mut rest = flat;
        for c in k.iter_mut().rev() {
            *c = (rest % side) as i64 - m;
            rest /= side;
        }
        // keep one representative of each ±k pair
        let first = k.iter().find(|&&c| c != 0);
        if !matches!(first, Some(&c) if c > 0) {
            continue;
        }
        let amp: f64 = rng.gen_range(-1.0..1.0);
        let wave = k.iter().map(|&c| std::f64::consts::TAU * c as f64 / box_length).collect();
        terms.push((wave, amp));
    }
    let raw = GridField::from_fn(dim, points_per_axis, box_length, |x| {
        terms.iter().map(|(k, a)| a * dot(k, x).sin()).sum()
    })?;
    let (lo, hi) = range(raw.values());
    let osc = hi - lo;
    if !(osc > 0.0) {
        return Err(Error::InvalidField("random data degenerated to a constant".into()));
    }
    GridField::new(dim, points_per_axis, box_length, raw.values().iter().map(|v| v / osc).collect())
}
