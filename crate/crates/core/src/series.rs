//! Truncated power series in one and two variables.
//!
//! A `Series1` of order `N` stores `c_0..c_N`; coefficient `n` of any result
//! only depends on input coefficients of index `<= n`. Binary operations on
//! series of different orders truncate to the smaller order.

use num_complex::Complex64;
use num_traits::Zero;

use crate::scalar::{format_f64, Field, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("divisor has zero constant term")]
    NonUnitDivisor,
    #[error("constant term is not a square in the field")]
    NonSquareConstant,
    #[error("outer series needs an inner series with zero constant term")]
    CompositionDivergence,
    #[error("numerator not divisible: coefficient {index} does not vanish")]
    NotDivisible { index: usize },
    #[error("divisor is zero to the available order")]
    ZeroDivisor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Mul,
    DivUnit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series1<S> {
    coeffs: Vec<S>,
}

fn max_abs<S: Scalar>(c: &[S]) -> f64 {
    c.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

impl<S: Scalar> Series1<S> {
    /// Panics on an empty coefficient vector (order is `len - 1`).
    pub fn new(coeffs: Vec<S>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least c_0");
        Series1 { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Series1 { coeffs: vec![S::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = S::one();
        s
    }

    /// `x^k` truncated to `order`.
    pub fn monomial(k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = S::one();
        }
        s
    }

    /// Pads with zeros or truncates a finite coefficient list.
    pub fn from_poly(poly: &[S], order: usize) -> Self {
        let mut s = Self::zero(order);
        for (k, c) in poly.iter().enumerate().take(order + 1) {
            s.coeffs[k] = c.clone();
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &S {
        &self.coeffs[n]
    }

    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order());
        Series1 { coeffs: self.coeffs[..=order].to_vec() }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Series1<T> {
        Series1 { coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Series1 {
            coeffs: (0..=n)
                .map(|k| self.coeffs[k].clone() + other.coeffs[k].clone())
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Series1 {
            coeffs: (0..=n)
                .map(|k| self.coeffs[k].clone() - other.coeffs[k].clone())
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.map(|c| -c.clone())
    }

    pub fn scale(&self, a: &S) -> Self {
        self.map(|c| c.clone() * a.clone())
    }

    /// `f(-x)`.
    pub fn reflect(&self) -> Self {
        Series1 {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| if k % 2 == 1 { -c.clone() } else { c.clone() })
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut out = vec![S::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Series1 { coeffs: out }
    }

    pub fn div_unit(&self, den: &Self) -> Result<Self, SeriesError> {
        let d0 = den.coeffs[0].clone();
        if d0.is_negligible(max_abs(&den.coeffs)) {
            return Err(SeriesError::NonUnitDivisor);
        }
        let n = self.order().min(den.order());
        let mut q: Vec<S> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = self.coeffs[k].clone();
            for j in 1..=k {
                if !den.coeffs[j].is_zero() {
                    acc = acc - den.coeffs[j].clone() * q[k - j].clone();
                }
            }
            q.push(acc / d0.clone());
        }
        Ok(Series1 { coeffs: q })
    }

    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        let r0 = self.coeffs[0]
            .sqrt_exact()
            .ok_or(SeriesError::NonSquareConstant)?;
        let two_r0 = r0.clone() + r0.clone();
        let n = self.order();
        let mut r: Vec<S> = Vec::with_capacity(n + 1);
        r.push(r0);
        for k in 1..=n {
            let mut acc = self.coeffs[k].clone();
            for j in 1..k {
                acc = acc - r[j].clone() * r[k - j].clone();
            }
            r.push(acc / two_r0.clone());
        }
        Ok(Series1 { coeffs: r })
    }

    /// Index of the first coefficient that is not zero (relative test for floats).
    pub fn valuation(&self) -> Option<usize> {
        let scale = max_abs(&self.coeffs);
        self.coeffs.iter().position(|c| !c.is_negligible(scale))
    }

    /// Strips the valuation of `den` from both sides, then divides.
    pub fn div_valuation(&self, den: &Self) -> Result<Self, SeriesError> {
        let v = den.valuation().ok_or(SeriesError::ZeroDivisor)?;
        let scale = max_abs(&self.coeffs);
        for (i, c) in self.coeffs.iter().enumerate().take(v) {
            if !c.is_negligible(scale) {
                return Err(SeriesError::NotDivisible { index: i });
            }
        }
        if v > self.order() || v > den.order() {
            return Err(SeriesError::ZeroDivisor);
        }
        let num = Series1 { coeffs: self.coeffs[v..].to_vec() };
        let d = Series1 { coeffs: den.coeffs[v..].to_vec() };
        num.div_unit(&d)
    }

    /// `self ∘ inner` for an infinite outer series; needs `inner_0 = 0`.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        if !inner.coeffs[0].is_zero() {
            return Err(SeriesError::CompositionDivergence);
        }
        let n = self.order().min(inner.order());
        let inner = inner.truncate(n);
        let mut acc = Series1::zero(n);
        for c in self.coeffs[..=n].iter().rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] = acc.coeffs[0].clone() + c.clone();
        }
        Ok(acc)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64())
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::zero(), |acc, c| acc * z + c.to_f64())
    }

    pub fn to_f64_series(&self) -> Series1<f64> {
        self.map(|c| c.to_f64())
    }

    /// `degree,numerator,denominator` for rationals, `degree,value` for floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match S::FIELD {
            Field::Rational => out.push_str("degree,numerator,denominator\n"),
            Field::Float => out.push_str("degree,value\n"),
        }
        for (k, c) in self.coeffs.iter().enumerate() {
            out.push_str(&format!("{k},{}\n", csv_value(c)));
        }
        out
    }
}

/// The value columns of one CSV row.
pub fn csv_value<S: Scalar>(c: &S) -> String {
    match S::FIELD {
        Field::Rational => {
            let s = c.to_string();
            match s.split_once('/') {
                Some((n, d)) => format!("{n},{d}"),
                None => format!("{s},1"),
            }
        }
        Field::Float => format_f64(c.to_f64()),
    }
}

pub fn series_arith<S: Scalar>(
    a: &Series1<S>,
    b: &Series1<S>,
    op: SeriesOp,
) -> Result<Series1<S>, SeriesError> {
    match op {
        SeriesOp::Add => Ok(a.add(b)),
        SeriesOp::Mul => Ok(a.mul(b)),
        SeriesOp::DivUnit => a.div_unit(b),
    }
}

/// Dense polynomial, ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn new(mut coeffs: Vec<S>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(S::zero());
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: &S) -> S {
        self.coeffs
            .iter()
            .rev()
            .fold(S::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::zero(), |acc, c| acc * z + c.to_f64())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![S::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial::new(out)
    }

    /// Polynomial outer: any inner constant is fine.
    pub fn compose(&self, inner: &Series1<S>) -> Series1<S> {
        let n = inner.order();
        let mut acc = Series1::zero(n);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(inner);
            acc.coeffs[0] = acc.coeffs[0].clone() + c.clone();
        }
        acc
    }

    pub fn compose_poly(&self, inner: &Self) -> Self {
        let mut acc = Polynomial::new(vec![S::zero()]);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(inner);
            acc.coeffs[0] = acc.coeffs[0].clone() + c.clone();
        }
        Polynomial::new(acc.coeffs)
    }
}

pub fn series_compose_poly<S: Scalar>(outer: &Polynomial<S>, inner: &Series1<S>) -> Series1<S> {
    outer.compose(inner)
}

/// Rectangular bivariate series: `coeffs[a][b]` multiplies `x^a y^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series2<S> {
    nx: usize,
    ny: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> Series2<S> {
    pub fn zero(nx: usize, ny: usize) -> Self {
        Series2 { nx, ny, coeffs: vec![S::zero(); (nx + 1) * (ny + 1)] }
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn get(&self, a: usize, b: usize) -> &S {
        &self.coeffs[a * (self.ny + 1) + b]
    }

    pub fn set(&mut self, a: usize, b: usize, v: S) {
        self.coeffs[a * (self.ny + 1) + b] = v;
    }

    /// `A(x) + B(y)` with the two constants added.
    pub fn from_parts(a: &Series1<S>, b: &Series1<S>, nx: usize, ny: usize) -> Self {
        let mut s = Self::zero(nx, ny);
        for i in 0..=nx.min(a.order()) {
            s.set(i, 0, a.coeff(i).clone());
        }
        for j in 0..=ny.min(b.order()) {
            let v = s.get(0, j).clone() + b.coeff(j).clone();
            s.set(0, j, v);
        }
        s
    }

    /// Sparse constructor from `(a, b, value)` triples; terms past the window are dropped.
    pub fn from_terms(terms: &[((usize, usize), S)], nx: usize, ny: usize) -> Self {
        let mut s = Self::zero(nx, ny);
        for ((a, b), v) in terms {
            if *a <= nx && *b <= ny {
                let w = s.get(*a, *b).clone() + v.clone();
                s.set(*a, *b, w);
            }
        }
        s
    }

    pub fn mul(&self, other: &Self) -> Self {
        let nx = self.nx.min(other.nx);
        let ny = self.ny.min(other.ny);
        let mut out = Self::zero(nx, ny);
        for a1 in 0..=nx {
            for b1 in 0..=ny {
                let u = self.get(a1, b1);
                if u.is_zero() {
                    continue;
                }
                for a2 in 0..=nx - a1 {
                    for b2 in 0..=ny - b1 {
                        let w = other.get(a2, b2);
                        if w.is_zero() {
                            continue;
                        }
                        let v = out.get(a1 + a2, b1 + b2).clone() + u.clone() * w.clone();
                        out.set(a1 + a2, b1 + b2, v);
                    }
                }
            }
        }
        out
    }

    /// Division by a series with unit constant term, solved in lexicographic order.
    pub fn div_unit(&self, den: &Self) -> Result<Self, SeriesError> {
        let d0 = den.get(0, 0).clone();
        if d0.is_negligible(max_abs(&den.coeffs)) {
            return Err(SeriesError::NonUnitDivisor);
        }
        let nx = self.nx.min(den.nx);
        let ny = self.ny.min(den.ny);
        let support: Vec<(usize, usize, S)> = (0..=nx)
            .flat_map(|a| (0..=ny).map(move |b| (a, b)))
            .filter(|&(a, b)| (a, b) != (0, 0) && !den.get(a, b).is_zero())
            .map(|(a, b)| (a, b, den.get(a, b).clone()))
            .collect();
        let mut q = Self::zero(nx, ny);
        for a in 0..=nx {
            for b in 0..=ny {
                let mut acc = self.get(a, b).clone();
                for (da, db, d) in &support {
                    if *da <= a && *db <= b {
                        acc = acc - d.clone() * q.get(a - da, b - db).clone();
                    }
                }
                q.set(a, b, acc / d0.clone());
            }
        }
        Ok(q)
    }

    /// `i,j,numerator,denominator` (degrees) or `i,j,value`.
    pub fn to_csv(&self) -> String {
        let mut out = match S::FIELD {
            Field::Rational => String::from("i,j,numerator,denominator\n"),
            Field::Float => String::from("i,j,value\n"),
        };
        for a in 0..=self.nx {
            for b in 0..=self.ny {
                out.push_str(&format!("{a},{b},{}\n", csv_value(self.get(a, b))));
            }
        }
        out
    }
}

/// Parses a one-variable series CSV in either field layout.
pub fn parse_series_csv(text: &str) -> Result<Series1<Rational>, String> {
    let mut coeffs: Vec<(usize, Rational)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("degree") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("line {}: expected degree,numerator,denominator", ln + 1));
        }
        let k: usize = parts[0].parse().map_err(|_| format!("line {}: bad degree", ln + 1))?;
        let v = crate::scalar::parse_rational(&format!("{}/{}", parts[1], parts[2]))
            .map_err(|e| format!("line {}: {e}", ln + 1))?;
        coeffs.push((k, v));
    }
    let n = coeffs.iter().map(|c| c.0).max().ok_or("empty series")?;
    let mut s = Series1::zero(n);
    for (k, v) in coeffs {
        s.coeffs[k] = v;
    }
    Ok(s)
}
