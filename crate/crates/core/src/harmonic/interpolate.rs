//! Recovering `Φ` coefficients from boundary values.
//!
//! With `p11 = 0` the matrix `(h_n(i,1))` is lower triangular. Otherwise
//! `a_1` comes from `(1,1)` and each pair `a_{2k}, a_{2k+1}` from the rows
//! `(k+1,1)`, `(1,k+1)` through the 2×2 block `T_k`.

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::maps::ConformalMap;
use crate::scalar::Scalar;
use crate::walk::StepSet;

use super::verify::{block_matrix, det2};
use super::{abs_f, expand_harmonic, negligible, ExpandOptions, HarmonicError, HarmonicSpec, HarmonicTable};

#[derive(Debug, Clone, Serialize)]
pub struct Interpolation<S> {
    /// `a_1..a_N`.
    pub coeffs: Vec<S>,
    /// `a_{N+1}` when the last block forced it (`p11 != 0`, `N` even).
    pub overflow: Option<S>,
    /// Largest mismatch on boundary entries not used by the solve.
    pub unused_residual: f64,
}

/// `h_1..h_n` on a common window.
pub fn basis_tables<S: Scalar>(
    model: &StepSet,
    map: &ConformalMap,
    n: usize,
    window: usize,
) -> Result<Vec<HarmonicTable<S>>, HarmonicError> {
    let p11 = model.p11();
    (1..=n)
        .into_par_iter()
        .map(|k| expand_harmonic(model, map, &HarmonicSpec::basis(k, &p11), window, ExpandOptions::default()))
        .collect()
}

fn reconstruct<S: Scalar>(basis: &[HarmonicTable<S>], a: &[S], i: usize, j: usize) -> S {
    a.iter()
        .zip(basis)
        .fold(S::zero(), |acc, (c, h)| acc + c.clone() * h.at(i, j).clone())
}

/// Solves for `a_1..a_n` given `c_i = h(i,1)` and, when `p11 != 0`, `d_j = h(1,j)`.
pub fn solve_boundary_system<S: Scalar>(
    basis: &[HarmonicTable<S>],
    p11_zero: bool,
    c: &[S],
    d: Option<&[S]>,
    n: usize,
) -> Result<Interpolation<S>, HarmonicError> {
    let w = basis.first().map_or(0, |h| h.window());
    let scale = c.iter().chain(d.unwrap_or(&[]).iter()).map(abs_f).fold(0.0, f64::max);
    let mut a: Vec<S> = Vec::with_capacity(n + 1);
    let mut overflow = None;
    if p11_zero {
        if basis.len() < n || w < n || c.len() < n {
            return Err(HarmonicError::WindowTooSmall { window: w.min(c.len()), need: n });
        }
        for i in 1..=n {
            let pivot = basis[i - 1].at(i, 1).clone();
            if pivot.is_zero() {
                return Err(HarmonicError::SingularDiagonal { index: i });
            }
            let r = c[i - 1].clone() - reconstruct(&basis[..i - 1], &a, i, 1);
            a.push(r / pivot);
        }
        if let Some(d) = d {
            for j in 1..=n.min(d.len()) {
                let diff = d[j - 1].clone() - reconstruct(basis, &a, 1, j);
                if !negligible(&diff, scale, 1e-9) {
                    return Err(HarmonicError::InconsistentData { index: j });
                }
            }
        }
    } else {
        let d = d.ok_or(HarmonicError::MissingData("h(1,j) is needed when p11 != 0"))?;
        let blocks = n / 2;
        let need = 2 * blocks + 1;
        if basis.len() < need || w < blocks + 1 || c.len() < blocks + 1 || d.len() < blocks + 1 {
            return Err(HarmonicError::WindowTooSmall { window: w.min(c.len()).min(d.len()), need: blocks + 1 });
        }
        if !negligible(&(c[0].clone() - d[0].clone()), scale, 1e-9) {
            return Err(HarmonicError::InconsistentData { index: 1 });
        }
        let pivot = basis[0].at(1, 1).clone();
        if pivot.is_zero() {
            return Err(HarmonicError::SingularDiagonal { index: 1 });
        }
        a.push(c[0].clone() / pivot);
        for k in 1..=blocks {
            let t = block_matrix(&basis[2 * k - 1], &basis[2 * k], k);
            let det = det2(&t);
            if det.is_zero() {
                return Err(HarmonicError::SingularDiagonal { index: 2 * k });
            }
            let r1 = c[k].clone() - reconstruct(&basis[..2 * k - 1], &a, k + 1, 1);
            let r2 = d[k].clone() - reconstruct(&basis[..2 * k - 1], &a, 1, k + 1);
            let x = (r1.clone() * t[1][1].clone() - r2.clone() * t[0][1].clone()) / det.clone();
            let y = (t[0][0].clone() * r2 - t[1][0].clone() * r1) / det;
            a.push(x);
            a.push(y);
        }
        if a.len() > n {
            overflow = a.pop();
        }
    }
    let mut unused: f64 = 0.0;
    let used = if p11_zero { n } else { n / 2 + 1 };
    for i in used + 1..=c.len().min(w) {
        unused = unused.max(abs_f(&(c[i - 1].clone() - reconstruct(basis, &a, i, 1))));
    }
    if let Some(d) = d {
        for j in used + 1..=d.len().min(w) {
            unused = unused.max(abs_f(&(d[j - 1].clone() - reconstruct(basis, &a, 1, j))));
        }
    }
    Ok(Interpolation { coeffs: a, overflow, unused_residual: unused })
}

pub fn interpolate_boundary<S: Scalar>(
    model: &StepSet,
    map: &ConformalMap,
    c: &[S],
    d: Option<&[S]>,
    n: usize,
) -> Result<Interpolation<S>, HarmonicError> {
    let p11_zero = model.p11().is_zero();
    let count = if p11_zero { n } else { 2 * (n / 2) + 1 };
    let window = (n + 1).max(c.len()).max(d.map_or(0, <[S]>::len));
    let basis = basis_tables::<S>(model, map, count.max(1), window)?;
    solve_boundary_system(&basis, p11_zero, c, d, n)
}
