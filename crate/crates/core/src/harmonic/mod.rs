//! Discrete harmonic functions `h` with generating function
//! `H(x,y) = Σ h(i,j) x^{i−1} y^{j−1} = (F(ψ1(x)) − F(−ψ1(y))) / K(x,y)`.
//!
//! Tables are filled from the two boundary rows, which are plain univariate
//! divisions, and then by the harmonicity relation itself.

mod interpolate;
mod shape;
mod verify;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::maps::{ConformalMap, MapError};
use crate::scalar::{format_rational, int, parse_rational, Field, Rational, Scalar};
use crate::series::{csv_value, Polynomial, Series1, Series2, SeriesError};
use crate::walk::{Step, StepSet};

pub use interpolate::{basis_tables, interpolate_boundary, solve_boundary_system, Interpolation};
pub use shape::{arc_sign_changes, decompose_symmetry, ray_sign, sign_grid, RaySigns, SignGrid};
pub use verify::{
    block_matrix, det2, functional_equation_residual, laplacian_at, laplacian_residual, vanishing_check,
    FunctionalResidual, LaplacianResidual, VanishingPattern, VanishingReport,
};

/// Relative tolerance for float consistency equations.
/// Boundary rows are taken to carry this relative error.
const ROW_ERROR: f64 = 16.0 * f64::EPSILON;
/// Largest accepted error estimate, relative to the anti-diagonal.
pub const UNSTABLE_TOL: f64 = 1e-8;

pub const FLOAT_CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarmonicError {
    #[error("p11 = p10 = p01 = 0: no interior fill applies")]
    UnsupportedFillPattern,
    #[error("boundary division in {axis} failed: {source}")]
    NotDivisible { axis: char, source: SeriesError },
    #[error("consistency equation on anti-diagonal {diagonal} off by {residual:e}")]
    ConsistencyResidual { diagonal: usize, residual: f64 },
    #[error("float fill unstable: error bound {bound:e} relative to entries at anti-diagonal {diagonal}")]
    Unstable { diagonal: usize, bound: f64 },
    #[error("window {window} too small, need {need}")]
    WindowTooSmall { window: usize, need: usize },
    #[error("zero pivot at basis index {index}")]
    SingularDiagonal { index: usize },
    #[error("boundary data inconsistent at index {index}")]
    InconsistentData { index: usize },
    #[error("recurrence and direct division disagree at ({i},{j})")]
    CrossCheckMismatch { i: usize, j: usize },
    #[error("missing boundary data: {0}")]
    MissingData(&'static str),
    #[error("bad harmonic spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

impl HarmonicError {
    pub fn kind(&self) -> &'static str {
        match self {
            HarmonicError::UnsupportedFillPattern => "UnsupportedFillPattern",
            HarmonicError::NotDivisible { .. } => "NotDivisible",
            HarmonicError::ConsistencyResidual { .. } => "ConsistencyResidual",
            HarmonicError::Unstable { .. } => "Unstable",
            HarmonicError::WindowTooSmall { .. } => "WindowTooSmall",
            HarmonicError::SingularDiagonal { .. } => "SingularDiagonal",
            HarmonicError::InconsistentData { .. } => "InconsistentData",
            HarmonicError::CrossCheckMismatch { .. } => "CrossCheckMismatch",
            HarmonicError::MissingData(_) => "MissingData",
            HarmonicError::BadSpec(_) => "BadSpec",
            HarmonicError::Map(e) => e.kind(),
        }
    }
}

/// `P_n = (X² − p11²)^{⌊n/2⌋} X^{n mod 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPolynomial {
    pub n: usize,
    pub coeffs: Vec<Rational>,
}

impl BasisPolynomial {
    pub fn new(n: usize, p11: &Rational) -> Self {
        let quad = Polynomial::new(vec![-(p11 * p11), Rational::zero(), Rational::one()]);
        let mut p = Polynomial::new(vec![Rational::one()]);
        for _ in 0..n / 2 {
            p = p.mul(&quad);
        }
        if n % 2 == 1 {
            p = p.mul(&Polynomial::new(vec![Rational::zero(), Rational::one()]));
        }
        BasisPolynomial { n, coeffs: p.coeffs().to_vec() }
    }
}

/// The numerator polynomial `F`. Its constant term cancels in
/// `F(ψ1(x)) − F(−ψ1(y))`, so it is stored as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSpec {
    coeffs: Vec<Rational>,
    label: String,
}

impl HarmonicSpec {
    pub fn from_coeffs(mut coeffs: Vec<Rational>, label: impl Into<String>) -> Result<Self, HarmonicError> {
        if coeffs.first().is_some_and(|c| !c.is_zero()) {
            return Err(HarmonicError::BadSpec("F must have zero constant term".into()));
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rational::zero());
        }
        Ok(HarmonicSpec { coeffs, label: label.into() })
    }

    pub fn monomial(n: usize) -> Self {
        let mut c = vec![Rational::zero(); n + 1];
        c[n] = Rational::one();
        HarmonicSpec { coeffs: c, label: format!("t^{n}") }
    }

    pub fn basis(n: usize, p11: &Rational) -> Self {
        let mut coeffs = BasisPolynomial::new(n, p11).coeffs;
        coeffs[0] = Rational::zero();
        HarmonicSpec { coeffs, label: format!("P{n}") }
    }

    /// `Σ a_n P_n`, with `a[0]` the coefficient of `P_1`.
    pub fn from_phi(a: &[Rational], p11: &Rational) -> Self {
        let mut out = vec![Rational::zero(); 2 * a.len() + 2];
        for (k, c) in a.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (d, b) in BasisPolynomial::new(k + 1, p11).coeffs.iter().enumerate() {
                out[d] += c * b;
            }
        }
        out[0] = Rational::zero();
        let label = a.iter().map(format_rational).collect::<Vec<_>>().join(",");
        HarmonicSpec::from_coeffs(out, format!("phi[{label}]")).expect("constant term cleared")
    }

    /// `t`, `t^n`, `Pn`, or a comma list of `Φ` coefficients `a_1,a_2,…`.
    pub fn parse(text: &str, p11: &Rational) -> Result<Self, HarmonicError> {
        let t = text.trim();
        let bad = || HarmonicError::BadSpec(format!("cannot read '{text}'"));
        if t == "t" {
            return Ok(HarmonicSpec::monomial(1));
        }
        if let Some(n) = t.strip_prefix("t^") {
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(HarmonicError::BadSpec("t^0 has a constant term".into()));
            }
            return Ok(HarmonicSpec::monomial(n));
        }
        if let Some(n) = t.strip_prefix('P') {
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(HarmonicError::BadSpec("P0 has a constant term".into()));
            }
            return Ok(HarmonicSpec::basis(n, p11));
        }
        let a: Result<Vec<Rational>, _> = t.split(',').map(|s| parse_rational(s.trim())).collect();
        let a = a.map_err(|e| HarmonicError::BadSpec(e.to_string()))?;
        Ok(HarmonicSpec::from_phi(&a, p11))
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub model_hash: String,
    pub backend: String,
    pub normalization: String,
    pub field: Field,
    pub spec: String,
    pub window: usize,
    pub fill: String,
}

/// Values `h(i,j)` for `1 <= i,j <= W`; zero by convention when `i <= 0` or `j <= 0`.
#[derive(Debug, Clone)]
pub struct HarmonicTable<S> {
    window: usize,
    values: Vec<S>,
    pub provenance: Option<Provenance>,
}

/// Equality ignores provenance.
impl<S: PartialEq> PartialEq for HarmonicTable<S> {
    fn eq(&self, other: &Self) -> bool {
        self.window == other.window && self.values == other.values
    }
}

impl<S: Scalar> HarmonicTable<S> {
    pub fn from_fn(window: usize, f: impl Fn(usize, usize) -> S) -> Self {
        let mut values = Vec::with_capacity(window * window);
        for i in 1..=window {
            for j in 1..=window {
                values.push(f(i, j));
            }
        }
        HarmonicTable { window, values, provenance: None }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// `1 <= i,j <= W`.
    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.values[(i - 1) * self.window + (j - 1)]
    }

    /// Zero outside the quadrant, `None` past the window.
    pub fn get(&self, i: i64, j: i64) -> Option<S> {
        if i <= 0 || j <= 0 {
            return Some(S::zero());
        }
        let w = self.window as i64;
        if i > w || j > w {
            return None;
        }
        Some(self.at(i as usize, j as usize).clone())
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// `h(i,1)` for `i = 1..=W`.
    pub fn row_x(&self) -> Vec<S> {
        (1..=self.window).map(|i| self.at(i, 1).clone()).collect()
    }

    /// `h(1,j)` for `j = 1..=W`.
    pub fn row_y(&self) -> Vec<S> {
        (1..=self.window).map(|j| self.at(1, j).clone()).collect()
    }

    pub fn restrict(&self, window: usize) -> Self {
        let w = window.min(self.window);
        let mut t = HarmonicTable::from_fn(w, |i, j| self.at(i, j).clone());
        t.provenance = self.provenance.clone();
        t
    }

    pub fn transpose(&self) -> Self {
        HarmonicTable::from_fn(self.window, |i, j| self.at(j, i).clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        HarmonicTable::from_fn(self.window, |i, j| self.at(i, j).clone() * c.clone())
    }

    /// Sum on the common window.
    pub fn add(&self, other: &Self) -> Self {
        let w = self.window.min(other.window);
        HarmonicTable::from_fn(w, |i, j| self.at(i, j).clone() + other.at(i, j).clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let w = self.window.min(other.window);
        HarmonicTable::from_fn(w, |i, j| self.at(i, j).clone() - other.at(i, j).clone())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> HarmonicTable<f64> {
        HarmonicTable {
            window: self.window,
            values: self.values.iter().map(Scalar::to_f64).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// `i,j,numerator,denominator` (rational) or `i,j,value` (float).
    pub fn to_csv(&self) -> String {
        let mut out = match S::FIELD {
            Field::Rational => String::from("i,j,numerator,denominator\n"),
            Field::Float => String::from("i,j,value\n"),
        };
        for i in 1..=self.window {
            for j in 1..=self.window {
                out.push_str(&format!("{i},{j},{}\n", csv_value(self.at(i, j))));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExpandOptions {
    /// Recompute by bivariate division and compare (only when `p11 != 0`).
    pub cross_check: bool,
    /// Float field only: refill from perturbed boundary rows and fail with
    /// `Unstable` once rounding could have grown past `UNSTABLE_TOL`.
    /// Conservative: dyadic data that never rounds is flagged too.
    pub stability_check: bool,
}

impl Default for ExpandOptions {
    fn default() -> Self {
        ExpandOptions { cross_check: false, stability_check: true }
    }
}

/// Jump weights as scalars, without `(1,1)`.
fn stencil<S: Scalar>(model: &StepSet) -> Vec<(Step, S)> {
    model
        .steps()
        .iter()
        .filter(|(s, _)| **s != (1, 1))
        .map(|(s, w)| (*s, S::from_rational(w)))
        .collect()
}

pub(crate) fn abs_f(x: &impl Scalar) -> f64 {
    x.to_f64().abs()
}

/// Exact zero for rationals, `|d| <= rel · scale` for floats.
pub(crate) fn negligible<S: Scalar>(d: &S, scale: f64, rel: f64) -> bool {
    match S::FIELD {
        Field::Rational => d.is_zero(),
        Field::Float => abs_f(d) <= rel * scale,
    }
}

/// Square working grid indexed from 1, zero outside.
struct Grid<S> {
    n: usize,
    v: Vec<S>,
}

impl<S: Scalar> Grid<S> {
    fn new(n: usize) -> Self {
        Grid { n, v: vec![S::zero(); (n + 1) * (n + 1)] }
    }
    fn get(&self, i: i64, j: i64) -> S {
        if i <= 0 || j <= 0 || i as usize > self.n || j as usize > self.n {
            S::zero()
        } else {
            self.v[i as usize * (self.n + 1) + j as usize].clone()
        }
    }
    fn set(&mut self, i: usize, j: usize, x: S) {
        self.v[i * (self.n + 1) + j] = x;
    }
}

/// `F(ψ(x)) − F(−p11)` and `F(p11) − F(−ψ(y))` divided by `K(x,0)`, `K(0,y)`.
pub(crate) fn boundary_rows<S: Scalar>(
    model: &StepSet,
    psi: &Series1<S>,
    f: &Polynomial<S>,
    order: usize,
) -> Result<(Series1<S>, Series1<S>), HarmonicError> {
    let kernel = model.kernel();
    let p11 = S::from_rational(&model.p11());
    let deg = kernel.max_degree() as usize;
    let mut kx = vec![S::zero(); deg + 1];
    let mut ky = vec![S::zero(); deg + 1];
    for ((a, b), c) in kernel.coeffs() {
        if *b == 0 {
            kx[*a as usize] = S::from_rational(c);
        }
        if *a == 0 {
            ky[*b as usize] = S::from_rational(c);
        }
    }
    let val = |k: &[S]| k.iter().position(|c| !c.is_zero()).unwrap_or(0);
    let ext = order + val(&kx).max(val(&ky));
    let psi = psi.truncate(ext);
    let mut a = f.compose(&psi);
    let mut b = f.compose(&psi.neg()).neg();
    let c_minus = f.eval(&p11.clone().neg());
    let c_plus = f.eval(&p11);
    let mut ac = a.clone().into_coeffs();
    ac[0] = ac[0].clone() - c_minus;
    a = Series1::new(ac);
    let mut bc = b.into_coeffs();
    bc[0] = bc[0].clone() + c_plus;
    b = Series1::new(bc);
    let rx = a
        .div_valuation(&Series1::from_poly(&kx, ext))
        .map_err(|source| HarmonicError::NotDivisible { axis: 'x', source })?;
    let ry = b
        .div_valuation(&Series1::from_poly(&ky, ext))
        .map_err(|source| HarmonicError::NotDivisible { axis: 'y', source })?;
    if rx.order() < order || ry.order() < order {
        return Err(HarmonicError::NotDivisible { axis: 'x', source: SeriesError::ZeroDivisor });
    }
    Ok((rx.truncate(order), ry.truncate(order)))
}

fn provenance<S: Scalar>(model: &StepSet, map: &ConformalMap, spec: &HarmonicSpec, window: usize, fill: &str) -> Provenance {
    Provenance {
        model_hash: model.hash(),
        backend: map.backend().name().to_string(),
        normalization: map.normalization(),
        field: S::FIELD,
        spec: spec.label().to_string(),
        window,
        fill: fill.to_string(),
    }
}

/// Taylor coefficients of `(F(ψ1(x)) − F(−ψ1(y)))/K(x,y)` on a `W × W` window.
pub fn expand_harmonic<S: Scalar>(
    model: &StepSet,
    map: &ConformalMap,
    spec: &HarmonicSpec,
    window: usize,
    opts: ExpandOptions,
) -> Result<HarmonicTable<S>, HarmonicError> {
    if window == 0 {
        return Err(HarmonicError::WindowTooSmall { window, need: 1 });
    }
    let p11 = model.p11();
    let (p10, p01) = (model.weight(1, 0), model.weight(0, 1));
    let diagonal = !p11.is_zero();
    if !diagonal && p10.is_zero() && p01.is_zero() {
        return Err(HarmonicError::UnsupportedFillPattern);
    }
    // The anti-diagonal solve needs whole anti-diagonals up to 2W.
    let depth = if diagonal { window } else { 2 * window };
    let ext = depth + model.max_neg_jump() as usize + 2;
    let psi: Series1<S> = map.psi1_series(ext)?.into_field()?;
    let f = Polynomial::new(spec.coeffs().iter().map(S::from_rational).collect());
    let (rx, ry) = boundary_rows(model, &psi, &f, depth - 1)?;

    let scale0 = abs_f(rx.coeff(0)).max(abs_f(ry.coeff(0)));
    if !negligible(&(rx.coeff(0).clone() - ry.coeff(0).clone()), scale0, FLOAT_CONSISTENCY_TOL) {
        return Err(HarmonicError::ConsistencyResidual {
            diagonal: 2,
            residual: abs_f(&(rx.coeff(0).clone() - ry.coeff(0).clone())),
        });
    }
    let mut g = Grid::<S>::new(depth);
    for k in 1..=depth {
        g.set(k, 1, rx.coeff(k - 1).clone());
        g.set(1, k, ry.coeff(k - 1).clone());
    }
    let others = stencil::<S>(model);
    let (p10, p01, p11) = (S::from_rational(&p10), S::from_rational(&p01), S::from_rational(&p11));
    let fill = |g: &mut Grid<S>, check: bool| {
        if diagonal {
            fill_diagonal(g, &others, &p11, window);
            Ok(())
        } else {
            fill_antidiagonal(g, &others, &p10, &p01, check)
        }
    };
    fill(&mut g, true)?;
    if S::FIELD == Field::Float && opts.stability_check {
        sensitivity(&g, |p| fill(p, false))?;
    }
    let mut table = HarmonicTable::from_fn(window, |i, j| g.get(i as i64, j as i64));
    table.provenance = Some(provenance::<S>(
        model,
        map,
        spec,
        window,
        if diagonal { "diagonal" } else { "antidiagonal" },
    ));
    if diagonal && opts.cross_check {
        let direct = expand_direct::<S>(model, map, spec, window)?;
        let tol = table.max_abs();
        for i in 1..=window {
            for j in 1..=window {
                let d = table.at(i, j).clone() - direct.at(i, j).clone();
                if !negligible(&d, tol, 1e-8) {
                    return Err(HarmonicError::CrossCheckMismatch { i, j });
                }
            }
        }
    }
    Ok(table)
}

fn stencil_rhs<S: Scalar>(g: &Grid<S>, others: &[(Step, S)], a: i64, b: i64) -> (S, f64) {
    let mut r = g.get(a, b);
    let mut scale = abs_f(&r);
    for ((k, l), w) in others {
        let t = w.clone() * g.get(a + *k as i64, b + *l as i64);
        scale += abs_f(&t);
        r = r - t;
    }
    (r, scale)
}

/// `h(a+1,b+1) = [h(a,b) − Σ_{others} p h(a+k,b+l)] / p11`, by anti-diagonals.
fn fill_diagonal<S: Scalar>(g: &mut Grid<S>, others: &[(Step, S)], p11: &S, window: usize) {
    for s in 4..=2 * window {
        let lo = 2.max(s.saturating_sub(window));
        let hi = window.min(s - 2);
        if lo > hi {
            continue;
        }
        let vals: Vec<S> = (lo..=hi)
            .into_par_iter()
            .map(|i| {
                let (a, b) = (i as i64 - 1, (s - i) as i64 - 1);
                stencil_rhs(g, others, a, b).0 / p11.clone()
            })
            .collect();
        for (i, v) in (lo..=hi).zip(vals) {
            g.set(i, s - i, v);
        }
    }
}

/// Anti-diagonal `s` from the previous ones: a bidiagonal chain started at one
/// boundary, with the equation next to the other boundary kept as a check.
fn fill_antidiagonal<S: Scalar>(g: &mut Grid<S>, others: &[(Step, S)], p10: &S, p01: &S, check: bool) -> Result<(), HarmonicError> {
    // others include (1,0) and (0,1); drop them from the right-hand side.
    let rest: Vec<(Step, S)> = others.iter().filter(|(s, _)| *s != (1, 0) && *s != (0, 1)).cloned().collect();
    let from_x = !p01.is_zero();
    let mut prev_scale = 0.0f64;
    for s in 3..=g.n {
        // Largest entry on the two latest anti-diagonals sets the float tolerance.
        let mut diag_scale = prev_scale.max(abs_f(&g.get(s as i64 - 1, 1))).max(abs_f(&g.get(1, s as i64 - 1)));
        for step in 1..=s - 2 {
            // Equation at (a,b) with a + b = s − 1.
            let (a, b) = if from_x { (s - 1 - step, step) } else { (step, s - 1 - step) };
            let (r, _) = stencil_rhs(g, &rest, a as i64, b as i64);
            if step == s - 2 {
                let lhs = p10.clone() * g.get(a as i64 + 1, b as i64) + p01.clone() * g.get(a as i64, b as i64 + 1);
                let d = lhs - r;
                if check && !negligible(&d, diag_scale, FLOAT_CONSISTENCY_TOL) {
                    return Err(HarmonicError::ConsistencyResidual {
                        diagonal: s,
                        residual: abs_f(&d) / diag_scale.max(f64::MIN_POSITIVE),
                    });
                }
            } else if from_x {
                let v = (r - p10.clone() * g.get(a as i64 + 1, b as i64)) / p01.clone();
                diag_scale = diag_scale.max(abs_f(&v));
                g.set(a, b + 1, v);
            } else {
                let v = (r - p01.clone() * g.get(a as i64, b as i64 + 1)) / p10.clone();
                diag_scale = diag_scale.max(abs_f(&v));
                g.set(a + 1, b, v);
            }
        }
        prev_scale = diag_scale;
    }
    Ok(())
}

/// Both fills are linear in the boundary rows, so refilling from rows with a
/// known relative perturbation measures how much their rounding is amplified.
/// Fails at the first anti-diagonal whose estimated error passes `UNSTABLE_TOL`.
fn sensitivity<S: Scalar>(g: &Grid<S>, fill: impl Fn(&mut Grid<S>) -> Result<(), HarmonicError>) -> Result<(), HarmonicError> {
    let n = g.n;
    let mut p = Grid::<S>::new(n);
    let delta = 1e-6;
    for k in 1..=n {
        // Deterministic signs spread the perturbation over all modes.
        let sign = if (k.wrapping_mul(2654435761) >> 7) & 1 == 0 { 1.0 } else { -1.0 };
        let f = S::from_f64(sign * delta).expect("finite");
        p.set(k, 1, g.get(k as i64, 1) * f.clone());
        p.set(1, k, g.get(1, k as i64) * f);
    }
    fill(&mut p)?;
    for s in 3..=2 * n {
        let (lo, hi) = (1.max(s.saturating_sub(n)), n.min(s - 1));
        let mut scale = 0.0f64;
        let mut diff = 0.0f64;
        for i in lo..=hi {
            scale = scale.max(abs_f(&g.get(i as i64, (s - i) as i64)));
            diff = diff.max(abs_f(&p.get(i as i64, (s - i) as i64)));
        }
        let est = diff / delta * ROW_ERROR;
        if est > UNSTABLE_TOL * scale {
            return Err(HarmonicError::Unstable { diagonal: s, bound: est / scale.max(f64::MIN_POSITIVE) });
        }
    }
    Ok(())
}

/// Same table by bivariate division of the numerator by `K` (needs `p11 != 0`).
pub fn expand_direct<S: Scalar>(
    model: &StepSet,
    map: &ConformalMap,
    spec: &HarmonicSpec,
    window: usize,
) -> Result<HarmonicTable<S>, HarmonicError> {
    if model.p11().is_zero() {
        return Err(HarmonicError::UnsupportedFillPattern);
    }
    let n = window - 1;
    let psi: Series1<S> = map.psi1_series(n)?.into_field()?;
    let f = Polynomial::new(spec.coeffs().iter().map(S::from_rational).collect());
    let a = f.compose(&psi);
    let b = f.compose(&psi.neg()).neg();
    let num = Series2::from_parts(&a, &b, n, n);
    let terms: Vec<((usize, usize), S)> = model
        .kernel()
        .coeffs()
        .iter()
        .map(|((i, j), c)| ((*i as usize, *j as usize), S::from_rational(c)))
        .collect();
    let k = Series2::from_terms(&terms, n, n);
    let q = num
        .div_unit(&k)
        .map_err(|source| HarmonicError::NotDivisible { axis: 'K', source })?;
    let mut t = HarmonicTable::from_fn(window, |i, j| q.get(i - 1, j - 1).clone());
    t.provenance = Some(provenance::<S>(model, map, spec, window, "direct"));
    Ok(t)
}

/// Table of an integer-valued closed form.
pub fn integer_table(window: usize, f: impl Fn(i64, i64) -> i64) -> HarmonicTable<Rational> {
    HarmonicTable::from_fn(window, |i, j| int(f(i as i64, j as i64)))
}
