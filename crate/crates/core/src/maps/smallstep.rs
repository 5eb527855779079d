//! Small-step uniformization: `ψ1 = 2 T_{π/θ}(μ(x))` with a Möbius `μ`.

use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::scalar::{rational_to_f64, Rational};
use crate::walk::StepSet;

use super::chebyshev::chebyshev_t;
use super::MapError;

#[derive(Debug, Clone, Serialize)]
pub struct SmallStepConstants {
    pub x1: f64,
    /// `None` when the reduced discriminant has degree one.
    pub x4: Option<f64>,
    pub mu0: f64,
    pub mu1: f64,
    pub s0: Complex64,
    pub s1: Complex64,
    pub rho_unif: Complex64,
    pub theta: f64,
    /// Chebyshev order `π/θ`.
    pub order: f64,
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact quotient by `(x − 1)`; `None` if the remainder is nonzero.
fn deflate_one(p: &[Rational]) -> Option<Vec<Rational>> {
    let n = p.len() - 1;
    if n == 0 {
        return None;
    }
    let mut q = vec![Rational::zero(); n];
    let mut carry = Rational::zero();
    for k in (1..=n).rev() {
        carry = &p[k] + carry;
        q[k - 1] = carry.clone();
    }
    if (&p[0] + carry).is_zero() {
        Some(q)
    } else {
        None
    }
}

/// `a, b, c` with `K(x,y) = a(x)y² + b(x)y + c(x)`, ascending in `x`.
pub fn kernel_quadratic(model: &StepSet) -> [Vec<Rational>; 3] {
    let w = |k: i32, l: i32| model.weight(k, l);
    let one = Rational::from_integer(1.into());
    let a = vec![-w(1, -1), -w(0, -1), -w(-1, -1)];
    let b = vec![-w(1, 0), one - w(0, 0), -w(-1, 0)];
    let c = vec![-w(1, 1), -w(0, 1), -w(-1, 1)];
    [a, b, c]
}

/// `d = b² − 4ac` and its quotient by `(x − 1)²`.
pub fn discriminant(model: &StepSet) -> (Vec<Rational>, Vec<Rational>) {
    let [a, b, c] = kernel_quadratic(model);
    let four = Rational::from_integer(4.into());
    let mut d = poly_mul(&b, &b);
    for (i, v) in poly_mul(&a, &c).into_iter().enumerate() {
        d[i] -= &four * v;
    }
    let q = deflate_one(&d)
        .and_then(|q| deflate_one(&q))
        .expect("zero drift makes 1 a double root of the discriminant");
    let mut q = q;
    while q.len() > 1 && q.last().is_some_and(|c| c.is_zero()) {
        q.pop();
    }
    (d, q)
}

pub fn smallstep_constants(model: &StepSet) -> Result<SmallStepConstants, MapError> {
    if !model.is_small_step() {
        return Err(MapError::NotSmallStep);
    }
    let theta = model.covariance().map_err(|e| MapError::BackendUnavailable {
        backend: "smallstep",
        reason: e.to_string(),
    })?.theta;
    let (_, q) = discriminant(model);
    let unavailable = |r: &str| MapError::BackendUnavailable { backend: "smallstep", reason: r.into() };
    let (x1, x4) = match q.len() {
        2 => (-rational_to_f64(&q[0]) / rational_to_f64(&q[1]), None),
        3 => {
            let (c0, c1, c2) = (rational_to_f64(&q[0]), rational_to_f64(&q[1]), rational_to_f64(&q[2]));
            let disc = &q[1] * &q[1] - Rational::from_integer(4.into()) * &q[2] * &q[0];
            let disc = rational_to_f64(&disc);
            if disc < 0.0 {
                return Err(unavailable("complex branch points"));
            }
            let big = (-c1 - c1.signum() * disc.sqrt()) / (2.0 * c2);
            let small = c0 / (c2 * big);
            if (-1.0..1.0).contains(&small) {
                (small, Some(big))
            } else {
                (big, Some(small))
            }
        }
        _ => return Err(unavailable("degenerate discriminant")),
    };
    if !(-1.0..1.0).contains(&x1) {
        return Err(unavailable("no branch point in [-1, 1)"));
    }
    let (mu0, mu1) = match x4 {
        None => (-2.0, 2.0 * (1.0 - 2.0 * x1)),
        Some(x4) => (
            2.0 * (2.0 - x1 - x4) / (x4 - x1),
            2.0 * (x1 + x4 - 2.0 * x1 * x4) / (x4 - x1),
        ),
    };
    let root = |mu: f64| {
        let m = Complex64::new(mu, 0.0);
        (m + (m * m - 4.0).sqrt()) / 2.0
    };
    Ok(SmallStepConstants {
        x1,
        x4,
        mu0,
        mu1,
        s0: root(mu0),
        s1: root(mu1),
        rho_unif: Complex64::from_polar(1.0, -theta),
        theta,
        order: std::f64::consts::PI / theta,
    })
}

impl SmallStepConstants {
    pub fn mu(&self, x: Complex64) -> Complex64 {
        (self.mu0 * x - self.mu1) / (2.0 * (x - 1.0))
    }

    /// `2 T_{π/θ}(μ(x))` before normalization.
    pub fn psi_raw(&self, x: Complex64) -> Result<Complex64, MapError> {
        Ok(2.0 * chebyshev_t(self.order, self.mu(x))?)
    }

    /// Positive scalar giving `ψ1(0) = p11`, or `ψ1'(0) > 0` when `p11 = 0`.
    pub fn normalization(&self, model: &StepSet) -> Result<f64, MapError> {
        let p11 = rational_to_f64(&model.p11());
        let v0 = self.psi_raw(Complex64::zero())?.re;
        if p11 != 0.0 {
            return Ok(p11 / v0);
        }
        let h = 1e-4;
        let d = (self.psi_raw(Complex64::new(h, 0.0))?.re - self.psi_raw(Complex64::new(-h, 0.0))?.re) / (2.0 * h);
        Ok(if d > 0.0 { 1.0 } else { -1.0 })
    }
}
