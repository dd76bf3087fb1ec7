//! Periodic lattice data on the box [0, L)^n with trigonometric interpolation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridField {
    dim: usize,
    points_per_axis: usize,
    box_length: f64,
    /// Row-major samples, last axis fastest.
    values: Vec<f64>,
    #[serde(skip)]
    modes: Vec<Mode>,
}

#[derive(Debug, Clone, PartialEq)]
struct Mode {
    wavevector: Vec<f64>,
    coeff: Complex64,
}

impl GridField {
    pub fn new(dim: usize, points_per_axis: usize, box_length: f64, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || points_per_axis == 0 {
            return Err(Error::InvalidField("grid needs n >= 1 and at least one point per axis".into()));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::InvalidField(format!("box length must be positive, got {box_length}")));
        }
        let total = points_per_axis.pow(dim as u32);
        if values.len() != total {
            return Err(Error::InvalidField(format!(
                "grid of {points_per_axis}^{dim} points needs {total} samples, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("grid sample {i} is not finite")));
        }
        let mut spectrum: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut spectrum, dim, points_per_axis, false);
        let norm = 1.0 / total as f64;
        let mut modes = Vec::with_capacity(total);
        for (flat, c) in spectrum.iter().enumerate() {
            let wavevector = wavevector_of(flat, dim, points_per_axis, box_length);
            modes.push(Mode {
                wavevector,
                coeff: c * norm,
            });
        }
        Ok(GridField {
            dim,
            points_per_axis,
            box_length,
            values,
            modes,
        })
    }

    /// Sample `f` at the lattice points `L·j/N`.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(dim: usize, points_per_axis: usize, box_length: f64, f: F) -> Result<Self> {
        let total = points_per_axis.pow(dim as u32);
        let values = (0..total)
            .map(|flat| f(&lattice_point(flat, dim, points_per_axis, box_length)))
            .collect();
        Self::new(dim, points_per_axis, box_length, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lattice_point(&self, flat: usize) -> Vec<f64> {
        lattice_point(flat, self.dim, self.points_per_axis, self.box_length)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Iterator over (wavevector, Fourier coefficient) of the interpolant.
    pub fn modes(&self) -> impl Iterator<Item = (&[f64], Complex64)> {
        self.modes.iter().map(|m| (m.wavevector.as_slice(), m.coeff))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|m| (m.coeff * Complex64::from_polar(1.0, dot(&m.wavevector, x))).re)
            .sum()
    }

    /// −4 Re Σ ĉ_k e^{ik·x} sin²(k·y/2)
    pub fn second_difference(&self, x: &[f64], y: &[f64]) -> f64 {
        -4.0 * self
            .modes
            .iter()
            .map(|m| {
                let h = (0.5 * dot(&m.wavevector, y)).sin();
                (m.coeff * Complex64::from_polar(1.0, dot(&m.wavevector, x))).re * h * h
            })
            .sum::<f64>()
    }

    /// Apply a Fourier multiplier on the lattice: returns the samples of Σ m(k) ĉ_k e^{ik·x}.
    pub fn apply_multiplier(&self, symbol: &[f64]) -> Vec<f64> {
        apply_symbol(&self.values, self.dim, self.points_per_axis, symbol)
    }

    /// Wavevectors in FFT order, matching the layout of [`GridField::values`].
    pub fn wavevectors(&self) -> Vec<Vec<f64>> {
        self.modes.iter().map(|m| m.wavevector.clone()).collect()
    }
}

/// Σ m(k) ĉ_k e^{ik·x_j} for real lattice data, via forward and inverse FFT.
pub fn apply_symbol(values: &[f64], dim: usize, points_per_axis: usize, symbol: &[f64]) -> Vec<f64> {
    let mut spectrum: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut spectrum, dim, points_per_axis, false);
    for (c, m) in spectrum.iter_mut().zip(symbol) {
        *c *= m;
    }
    fft_nd(&mut spectrum, dim, points_per_axis, true);
    let norm = 1.0 / values.len() as f64;
    spectrum.iter().map(|c| c.re * norm).collect()
}

/// Wavevector (2π/L)·k of the FFT bin `flat`, frequencies in [−N/2, N/2).
pub fn wavevector_of(flat: usize, dim: usize, points_per_axis: usize, box_length: f64) -> Vec<f64> {
    let n = points_per_axis;
    let mut k = vec![0.0; dim];
    let mut rest = flat;
    for axis in (0..dim).rev() {
        let j = rest % n;
        rest /= n;
        let freq = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
        k[axis] = 2.0 * PI * freq / box_length;
    }
    k
}

pub fn lattice_point(flat: usize, dim: usize, points_per_axis: usize, box_length: f64) -> Vec<f64> {
    let n = points_per_axis;
    let mut x = vec![0.0; dim];
    let mut rest = flat;
    for axis in (0..dim).rev() {
        x[axis] = box_length * (rest % n) as f64 / n as f64;
        rest /= n;
    }
    x
}

/// Unnormalized n-D FFT, one pass of 1-D transforms per axis.
pub fn fft_nd(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, c) in line.iter_mut().enumerate() {
                    *c = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, c) in line.iter().enumerate() {
                    data[base + j * stride] = *c;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolant_reproduces_samples_and_trig_polynomials() {
        let l = 2.0 * PI;
        let f = |x: &[f64]| 0.5 + (x[0]).cos() - 0.25 * (2.0 * x[1] + 0.3).sin();
        let g = GridField::from_fn(2, 16, l, f).unwrap();
        for flat in [0, 5, 37, 200, 255] {
            let p = g.lattice_point(flat);
            assert!((g.eval(&p) - g.values()[flat]).abs() < 1e-13);
        }
        let x = [0.123, 4.5];
        assert!((g.eval(&x) - f(&x)).abs() < 1e-13);
        let y = [0.7, -0.2];
        let direct = f(&[x[0] + y[0], x[1] + y[1]]) + f(&[x[0] - y[0], x[1] - y[1]]) - 2.0 * f(&x);
        assert!((g.second_difference(&x, &y) - direct).abs() < 1e-13);
    }

    #[test]
    fn multiplier_application_matches_modes() {
        let l = 3.0;
        let g = GridField::from_fn(1, 32, l, |x| (2.0 * PI * x[0] / l).cos()).unwrap();
        let symbol: Vec<f64> = g.wavevectors().iter().map(|k| -k[0].abs()).collect();
        let out = g.apply_multiplier(&symbol);
        let k = 2.0 * PI / l;
        for (flat, v) in out.iter().enumerate() {
            let x = g.lattice_point(flat);
            assert!((v + k * (k * x[0]).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_wrong_sample_count() {
        assert!(GridField::new(2, 4, 1.0, vec![0.0; 15]).is_err());
        assert!(GridField::new(1, 4, -1.0, vec![0.0; 4]).is_err());
    }
}
