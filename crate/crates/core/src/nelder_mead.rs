//! Derivative-free local minimization used to polish grid-search candidates.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 1e-2,
            x_tol: 1e-12,
            f_tol: 1e-15,
            max_iter: 2000,
        }
    }
}

/// Minimize `f` starting from `x0`. Returns the best vertex and its value.
///
/// Standard reflection/expansion/contraction/shrink coefficients (1, 2, 1/2, 1/2).
pub fn minimize<F>(f: F, x0: &[f64], opts: NelderMeadOptions) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    if dim == 0 {
        return (Vec::new(), f(x0));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for k in 0..dim {
        let mut x = x0.to_vec();
        x[k] += opts.initial_step;
        let fx = f(&x);
        simplex.push((x, fx));
    }

    for _ in 0..opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| crate::linalg::lex_cmp(&a.0, &b.0)));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let spread = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .fold(0.0f64, f64::max);
        if (worst - best).abs() <= opts.f_tol * (1.0 + best.abs()) && spread <= opts.x_tol.max(1e-3 * opts.initial_step) {
            break;
        }
        if spread <= opts.x_tol {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (x, _) in simplex.iter().take(dim) {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let towards = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = towards(1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = towards(2.0);
            let fe = f(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[dim].1 {
                let xc = towards(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = towards(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = x_best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    let fx = f(&x);
                    *vertex = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| crate::linalg::lex_cmp(&a.0, &b.0)));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let (x, fx) = minimize(
            |p| (p[0] - 1.0).powi(2) + 3.0 * (p[1] + 2.0).powi(2),
            &[0.0, 0.0],
            NelderMeadOptions { initial_step: 0.5, ..Default::default() },
        );
        assert!((x[0] - 1.0).abs() < 1e-6);
        assert!((x[1] + 2.0).abs() < 1e-6);
        assert!(fx < 1e-11);
    }

    #[test]
    fn handles_nonsmooth_objective() {
        let (x, _) = minimize(
            |p| (p[0] - 0.3).abs().sqrt(),
            &[1.0],
            NelderMeadOptions { initial_step: 0.1, ..Default::default() },
        );
        assert!((x[0] - 0.3).abs() < 1e-8);
    }
}
