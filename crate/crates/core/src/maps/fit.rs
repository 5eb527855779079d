//! Numerical conformal map for models without a closed form.
//!
//! `ψ1(x) = (1 − x)^{−π/θ} G(x)` with `G` a real polynomial, chosen so that
//! `Re ψ1` vanishes on the sampled curve in the least-squares sense.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::curve::CurveSample;
use crate::scalar::rational_to_f64;
use crate::series::Series1;
use crate::walk::StepSet;

use super::MapError;

pub const DEFAULT_ORDER: usize = 12;
pub const MAX_RESIDUAL: f64 = 1e-4;
/// Curve samples this close to the corner are left out of the fit.
const CORNER_CUTOFF: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct FittedMap {
    pub exponent: f64,
    /// Ascending coefficients of `G`.
    pub g: Vec<f64>,
    /// `max |Re ψ1| / max |ψ1|` over the fitted samples, with `|1 − x|^{π/θ}` divided out.
    pub residual: f64,
}

pub fn fit_conformal_numeric(model: &StepSet, curve: &CurveSample, order: usize) -> Result<FittedMap, MapError> {
    let cov = model.covariance().map_err(|e| MapError::BackendUnavailable { backend: "fit", reason: e.to_string() })?;
    let a = cov.pi_over_theta;
    let p11 = rational_to_f64(&model.p11());
    let order = order.max(2);
    // Pinned leading coefficients, then the free ones.
    let fixed: Vec<f64> = if p11 != 0.0 { vec![p11] } else { vec![0.0, 1.0] };
    let free = order + 1 - fixed.len();

    let pts: Vec<Complex64> = curve.points.iter().copied().filter(|p| (p - 1.0).norm() > CORNER_CUTOFF).collect();
    if pts.len() < 2 * free {
        return Err(MapError::BackendUnavailable { backend: "fit", reason: "too few curve samples".into() });
    }
    let phase = |x: Complex64| {
        let w = (1.0 - x).powf(-a);
        w / w.norm()
    };
    let mut m = DMatrix::<f64>::zeros(pts.len(), free);
    let mut rhs = DVector::<f64>::zeros(pts.len());
    for (r, &x) in pts.iter().enumerate() {
        let u = phase(x);
        let mut xk = Complex64::new(1.0, 0.0);
        for k in 0..=order {
            let v = (u * xk).re;
            if k < fixed.len() {
                rhs[r] -= fixed[k] * v;
            } else {
                m[(r, k - fixed.len())] = v;
            }
            xk *= x;
        }
    }
    // Column scaling keeps high powers from swamping the SVD cutoff.
    let scales: Vec<f64> = (0..free).map(|c| m.column(c).norm().max(1e-300)).collect();
    for (c, s) in scales.iter().enumerate() {
        m.column_mut(c).scale_mut(1.0 / s);
    }
    let sol = m
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .map_err(|e| MapError::BackendUnavailable { backend: "fit", reason: e.to_string() })?;
    let mut g = fixed.clone();
    g.extend(sol.iter().zip(&scales).map(|(v, s)| v / s));

    let mut map = FittedMap { exponent: a, g, residual: 0.0 };
    // Relative to max |G|: the boundary image may pass through 0.
    let (mut worst, mut size) = (0.0f64, 0.0f64);
    for &x in &pts {
        let g = map.eval(x) * (1.0 - x).powf(a).norm();
        worst = worst.max(g.re.abs());
        size = size.max(g.norm());
    }
    map.residual = worst / size;
    if !(map.residual <= MAX_RESIDUAL) {
        return Err(MapError::IllConditioned { residual: map.residual });
    }
    Ok(map)
}

impl FittedMap {
    pub fn eval(&self, x: Complex64) -> Complex64 {
        let g = self.g.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c);
        (1.0 - x).powf(-self.exponent) * g
    }

    pub fn series(&self, order: usize) -> Series1<f64> {
        // (1 − x)^{−a} = Σ (a)_n / n! x^n
        let mut b = vec![1.0; order + 1];
        for n in 1..=order {
            b[n] = b[n - 1] * (self.exponent + n as f64 - 1.0) / n as f64;
        }
        Series1::new(b).mul(&Series1::from_poly(&self.g, order))
    }
}
