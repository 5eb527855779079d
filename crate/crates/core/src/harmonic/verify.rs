use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;

use crate::curve::CurveSample;
use crate::maps::ConformalMap;
use crate::scalar::{Rational, Scalar};
use crate::series::{Polynomial, Series1};
use crate::walk::StepSet;

use super::{abs_f, boundary_rows, HarmonicError, HarmonicSpec, HarmonicTable};

/// `Σ p h(i+k, j+l) − h(i,j)`, or `None` if the stencil leaves the window.
pub fn laplacian_at<S: Scalar>(table: &HarmonicTable<S>, model: &StepSet, i: usize, j: usize) -> Option<S> {
    let mut acc = table.get(i as i64, j as i64)?.neg();
    for ((k, l), w) in model.steps() {
        let v = table.get(i as i64 + *k as i64, j as i64 + *l as i64)?;
        acc = acc + S::from_rational(w) * v;
    }
    Some(acc)
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplacianResidual {
    pub max_abs: f64,
    pub at: (usize, usize),
    /// Every residual is exactly zero (meaningful for the rational field).
    pub exact_zero: bool,
    /// `max_abs` over the largest table entry.
    pub relative: f64,
    pub points: usize,
}

pub fn laplacian_residual<S: Scalar>(table: &HarmonicTable<S>, model: &StepSet) -> Result<LaplacianResidual, HarmonicError> {
    let kmax = model.steps().keys().map(|s| s.0).max().unwrap_or(0).max(0) as usize;
    let lmax = model.steps().keys().map(|s| s.1).max().unwrap_or(0).max(0) as usize;
    let w = table.window();
    if w <= kmax || w <= lmax {
        return Err(HarmonicError::WindowTooSmall { window: w, need: kmax.max(lmax) + 1 });
    }
    let mut out = LaplacianResidual { max_abs: 0.0, at: (1, 1), exact_zero: true, relative: 0.0, points: 0 };
    for i in 1..=w - kmax {
        for j in 1..=w - lmax {
            let r = laplacian_at(table, model, i, j).expect("stencil inside window");
            out.points += 1;
            if !r.is_zero() {
                out.exact_zero = false;
            }
            let a = abs_f(&r);
            if a > out.max_abs {
                out.max_abs = a;
                out.at = (i, j);
            }
        }
    }
    let scale = table.max_abs();
    out.relative = if scale > 0.0 { out.max_abs / scale } else { out.max_abs };
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VanishingPattern {
    /// `h_n = 0` on `i + j <= n`, nonzero on `i + j = n + 1`.
    Triangle,
    /// `h_n = 0` on `i, j <= k` for `n = 2k + ε`.
    Square,
}

#[derive(Debug, Clone, Serialize)]
pub struct VanishingReport {
    pub pattern: VanishingPattern,
    pub n: usize,
    /// Cells that should vanish but do not.
    pub nonzero_in_zone: Vec<(usize, usize)>,
    /// Cells on the frontier that should not vanish but do.
    pub zero_on_frontier: Vec<(usize, usize)>,
    pub pass: bool,
}

/// Checks the zero pattern of `h_n`. For `p11 != 0` the frontier test is that
/// `h_n(k+1,1)` and `h_n(1,k+1)` do not both vanish; invertibility of the
/// blocks is checked with [`block_matrix`].
pub fn vanishing_check<S: Scalar>(table: &HarmonicTable<S>, n: usize, p11: &Rational) -> Result<VanishingReport, HarmonicError> {
    let w = table.window();
    let tol = table.max_abs();
    let zero = |i: usize, j: usize| super::negligible(table.at(i, j), tol, 1e-10);
    let mut rep = VanishingReport {
        pattern: VanishingPattern::Triangle,
        n,
        nonzero_in_zone: vec![],
        zero_on_frontier: vec![],
        pass: false,
    };
    if p11.is_zero() {
        if w < n {
            return Err(HarmonicError::WindowTooSmall { window: w, need: n });
        }
        for i in 1..=w {
            for j in 1..=w {
                if i + j <= n && !zero(i, j) {
                    rep.nonzero_in_zone.push((i, j));
                }
                if i + j == n + 1 && zero(i, j) {
                    rep.zero_on_frontier.push((i, j));
                }
            }
        }
    } else {
        rep.pattern = VanishingPattern::Square;
        let k = n / 2;
        if w < k + 1 {
            return Err(HarmonicError::WindowTooSmall { window: w, need: k + 1 });
        }
        for i in 1..=k {
            for j in 1..=k {
                if !zero(i, j) {
                    rep.nonzero_in_zone.push((i, j));
                }
            }
        }
        if zero(k + 1, 1) && zero(1, k + 1) {
            rep.zero_on_frontier.push((k + 1, 1));
        }
    }
    rep.pass = rep.nonzero_in_zone.is_empty() && rep.zero_on_frontier.is_empty();
    Ok(rep)
}

/// `T_k`: rows `(k+1,1)` and `(1,k+1)`, columns `h_{2k}` and `h_{2k+1}`.
pub fn block_matrix<S: Scalar>(h_even: &HarmonicTable<S>, h_odd: &HarmonicTable<S>, k: usize) -> [[S; 2]; 2] {
    [
        [h_even.at(k + 1, 1).clone(), h_odd.at(k + 1, 1).clone()],
        [h_even.at(1, k + 1).clone(), h_odd.at(1, k + 1).clone()],
    ]
}

pub fn det2<S: Scalar>(m: &[[S; 2]; 2]) -> S {
    m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone()
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalResidual {
    pub order: usize,
    /// `(x, |KH(x,0) + KH(0,x̄) − KH(0,0)|)`.
    pub samples: Vec<(Complex64, f64)>,
    pub max: f64,
}

/// Evaluates `KH(x,0) + KH(0,x̄) − KH(0,0)` on curve samples with `|x − 1| > exclusion`,
/// using `K(x,0) · Σ_{i<=N+1} h(i,1) x^{i−1}` truncated at order `N`.
pub fn functional_equation_residual(
    model: &StepSet,
    map: &ConformalMap,
    spec: &HarmonicSpec,
    curve: &CurveSample,
    order: usize,
    exclusion: f64,
) -> Result<FunctionalResidual, HarmonicError> {
    let ext = order + model.max_neg_jump() as usize + 2;
    let psi = map.psi1_series(ext)?.to_f64();
    let f = Polynomial::new(spec.coeffs().iter().map(crate::scalar::rational_to_f64).collect());
    let (rx, ry) = boundary_rows::<f64>(model, &psi, &f, order)?;
    let kernel = model.kernel();
    let deg = kernel.max_degree() as usize;
    let mut kx = vec![0.0; deg + 1];
    let mut ky = vec![0.0; deg + 1];
    for ((a, b), c) in kernel.coeffs() {
        if *b == 0 {
            kx[*a as usize] = c.to_f64();
        }
        if *a == 0 {
            ky[*b as usize] = c.to_f64();
        }
    }
    let khx = Series1::from_poly(&kx, order).mul(&rx);
    let khy = Series1::from_poly(&ky, order).mul(&ry);
    let kh00 = *khx.coeff(0);
    let samples: Vec<(Complex64, f64)> = curve
        .points
        .iter()
        .filter(|p| (*p - 1.0).norm() > exclusion)
        .map(|&x| {
            let r = khx.eval_complex(x) + khy.eval_complex(x.conj()) - kh00;
            (x, r.norm())
        })
        .collect();
    if samples.is_empty() {
        return Err(HarmonicError::WindowTooSmall { window: curve.len(), need: 1 });
    }
    let max = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(FunctionalResidual { order, samples, max })
}
