use serde::Serialize;

use crate::linalg::dot;
use crate::measure::{FractionalOrder, SpectralMeasure};
use crate::quadrature::{fractional_constant, partial_fractional_constant, FractionalConstant};

/// Symbol of ℐ: `ℐ e^{iξ·x} = m(ξ) e^{iξ·x}` with `m(ξ) = -c_s ∫ |ξ·ϑ|^{2s} dμ(ϑ)`.
///
/// The integral over μ uses the measure's own nodes, so the symbol agrees with the
/// quadrature-based operator node by node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Multiplier {
    s: FractionalOrder,
    cs: FractionalConstant,
    #[serde(skip)]
    nodes: Vec<(Vec<f64>, f64)>,
}

pub fn multiplier(mu: &SpectralMeasure, s: FractionalOrder) -> Multiplier {
    Multiplier {
        s,
        cs: fractional_constant(s),
        nodes: mu.nodes().to_vec(),
    }
}

impl Multiplier {
    pub fn cs(&self) -> f64 {
        self.cs.value
    }

    pub fn cs_error(&self) -> f64 {
        self.cs.error
    }

    pub fn s(&self) -> FractionalOrder {
        self.s
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        let two_s = self.s.two_s();
        let moment: f64 = self.nodes.iter().map(|(t, w)| w * dot(xi, t).abs().powf(two_s)).sum();
        -self.cs.value * moment
    }

    /// The `|r| < 1` part of the symbol.
    pub fn eval_i1(&self, xi: &[f64]) -> f64 {
        let two_s = self.s.two_s();
        -self
            .nodes
            .iter()
            .map(|(t, w)| {
                let a = dot(xi, t).abs();
                if a == 0.0 {
                    0.0
                } else {
                    w * 2.0 * a.powf(two_s) * partial_fractional_constant(self.s, a)
                }
            })
            .sum::<f64>()
    }

    pub fn eval_i2(&self, xi: &[f64]) -> f64 {
        self.eval(xi) - self.eval_i1(xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{lambda_estimate, Direction};
    use std::f64::consts::PI;

    #[test]
    fn examples() {
        let s = FractionalOrder::new(0.5).unwrap();
        let mu = SpectralMeasure::atomic(2, vec![(Direction::axis(2, 0), 1.0)]).unwrap();
        let m = multiplier(&mu, s);
        assert_eq!(m.eval(&[0.0, 0.0]), 0.0);
        for xi in [[1.0, 3.0], [-2.5, 0.1], [0.0, 7.0]] {
            assert!((m.eval(&xi) + 2.0 * PI * xi[0].abs()).abs() < 1e-9);
            assert_eq!(m.eval(&xi), m.eval(&[-xi[0], -xi[1]]));
        }
    }

    #[test]
    fn ellipticity_against_lambda() {
        let s = FractionalOrder::new(0.4).unwrap();
        let mu = SpectralMeasure::atomic(
            2,
            vec![(Direction::axis(2, 0), 1.0), (Direction::normalized(&[1.0, 2.0]).unwrap(), 0.5)],
        )
        .unwrap();
        let report = lambda_estimate(&mu, s);
        let m = multiplier(&mu, s);
        for k in 0..50 {
            let ang = 0.37 * k as f64;
            let r = 0.1 + 0.3 * k as f64;
            let xi = [r * ang.cos(), r * ang.sin()];
            let bound = -m.cs() * report.lambda_lower * r.powf(0.8);
            assert!(m.eval(&xi) <= bound * (1.0 - 1e-9), "{xi:?}");
        }
    }

    #[test]
    fn split_adds_up() {
        let s = FractionalOrder::new(0.7).unwrap();
        let mu = SpectralMeasure::uniform(2, 1.0).unwrap();
        let m = multiplier(&mu, s);
        let xi = [3.0, -0.5];
        assert!((m.eval_i1(&xi) + m.eval_i2(&xi) - m.eval(&xi)).abs() < 1e-12);
        assert!(m.eval_i1(&xi) < 0.0);
    }
}
