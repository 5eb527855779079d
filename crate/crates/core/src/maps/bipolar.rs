//! The bipolar family: a `(1,1)` jump of weight `z` and, for each `r`, all
//! jumps `(k,l)` with `k,l <= 0`, `k + l = −r`, of common weight `z_r`.
//!
//! With `I0(x) = x + z/x − Σ z_r x^{r+1}`, `t` the critical point of `I0` in
//! `[-1, 1)`, `a = I0(t)` and `b = I0(1)`, the map is
//! `ρ(x) = z·sqrt((I0(x) − a)/(I0(x) − b))`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::scalar::{rational_to_f64, Rational};
use crate::series::Series1;
use crate::walk::StepSet;

use super::{MapError, PsiSeries};

#[derive(Debug, Clone, PartialEq)]
pub enum CriticalPoint {
    Exact(Rational),
    Approx(f64),
}

impl CriticalPoint {
    pub fn to_f64(&self) -> f64 {
        match self {
            CriticalPoint::Exact(r) => rational_to_f64(r),
            CriticalPoint::Approx(x) => *x,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BipolarConstants {
    pub z: Rational,
    pub zr: Vec<(u32, Rational)>,
    pub t: CriticalPoint,
    /// `I0(t)`, exact when `t` is.
    pub a_exact: Option<Rational>,
    pub a_val: f64,
    pub b_val: Rational,
    /// `x(I0 − a) = (x − t)² · num` in floats.
    num: Vec<f64>,
    t_f: f64,
    /// `x(I0 − b) = (x − 1)^m · den`, split exactly.
    den: Vec<f64>,
    den_mult: i32,
}

/// Coefficients (ascending) of `x·(I0(x) − c)`.
fn shifted_numerator(z: &Rational, zr: &[(u32, Rational)], c: &Rational) -> Vec<Rational> {
    let deg = zr.iter().map(|(r, _)| *r as usize + 2).max().unwrap_or(2).max(2);
    let mut p = vec![Rational::zero(); deg + 1];
    p[0] = z.clone();
    p[1] = -c.clone();
    p[2] = Rational::one();
    for (r, w) in zr {
        p[*r as usize + 2] -= w;
    }
    p
}

/// `x² I0'(x) = K(x,x)`, ascending.
fn critical_polynomial(z: &Rational, zr: &[(u32, Rational)]) -> Vec<Rational> {
    let deg = zr.iter().map(|(r, _)| *r as usize + 2).max().unwrap_or(2).max(2);
    let mut p = vec![Rational::zero(); deg + 1];
    p[0] = -z.clone();
    p[2] = Rational::one();
    for (r, w) in zr {
        p[*r as usize + 2] -= Rational::from_integer(BigInt::from(*r + 1)) * w;
    }
    p
}

fn eval_rat(p: &[Rational], x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

fn eval_f(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn deflate_ones(mut p: Vec<Rational>) -> Vec<Rational> {
    loop {
        if p.len() <= 1 || !eval_rat(&p, &Rational::one()).is_zero() {
            return p;
        }
        let n = p.len() - 1;
        let mut q = vec![Rational::zero(); n];
        let mut carry = Rational::zero();
        for k in (1..=n).rev() {
            carry = &p[k] + carry;
            q[k - 1] = carry.clone();
        }
        p = q;
    }
}

fn small_divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.abs().to_u64()?;
    if n == 0 || n > 1_000_000_000_000 {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(BigInt::from(d));
            if d * d != n {
                out.push(BigInt::from(n / d));
            }
        }
        d += 1;
    }
    Some(out)
}

/// Rational roots in `[-1, 1)` by the rational root theorem.
fn rational_roots_in_range(p: &[Rational]) -> Vec<Rational> {
    let lcm = p.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = p.iter().map(|c| (c * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let Some(low) = ints.iter().position(|c| !c.is_zero()) else { return vec![] };
    let ints = &ints[low..];
    let mut roots = Vec::new();
    if low > 0 {
        roots.push(Rational::zero());
    }
    let (Some(ps), Some(qs)) = (small_divisors(&ints[0]), small_divisors(ints.last().unwrap())) else {
        return roots;
    };
    for a in &ps {
        for b in &qs {
            for s in [1, -1] {
                let x = Rational::new(a * s, b.clone());
                if x >= -Rational::one() && x < Rational::one() && !roots.contains(&x) && eval_rat(p, &x).is_zero() {
                    roots.push(x);
                }
            }
        }
    }
    roots.sort();
    roots
}

/// Parses the step set into `(z, [(r, z_r)])`.
pub fn family_weights(model: &StepSet) -> Result<(Rational, Vec<(u32, Rational)>), MapError> {
    let z = model.p11();
    if z.is_zero() {
        return Err(MapError::NotBipolarFamily("no (1,1) jump".into()));
    }
    let mut by_r: BTreeMap<u32, Vec<(i32, Rational)>> = BTreeMap::new();
    for ((k, l), w) in model.steps() {
        if (*k, *l) == (1, 1) {
            continue;
        }
        if *k > 0 || *l > 0 {
            return Err(MapError::NotBipolarFamily(format!("jump ({k},{l})")));
        }
        by_r.entry((-(k + l)) as u32).or_default().push((*k, w.clone()));
    }
    let mut zr = Vec::new();
    for (r, v) in by_r {
        if v.len() != r as usize + 1 || v.iter().any(|(_, w)| w != &v[0].1) {
            return Err(MapError::NotBipolarFamily(format!("level r = {r} is not uniformly filled")));
        }
        zr.push((r, v[0].1.clone()));
    }
    Ok((z, zr))
}

pub fn bipolar_constants(model: &StepSet) -> Result<BipolarConstants, MapError> {
    let (z, zr) = family_weights(model)?;
    let q = deflate_ones(critical_polynomial(&z, &zr));
    let i0 = |x: &Rational| -> Rational {
        let mut v = x + &z / x;
        for (r, w) in &zr {
            v -= w * num_traits::pow(x.clone(), *r as usize + 1);
        }
        v
    };
    let exact = rational_roots_in_range(&q).into_iter().find(|x| !x.is_zero());
    let b_val = i0(&Rational::one());
    let (t, a_exact, a_val) = match exact {
        Some(t) => {
            let a = i0(&t);
            let af = rational_to_f64(&a);
            (CriticalPoint::Exact(t), Some(a), af)
        }
        None => {
            let qf: Vec<f64> = q.iter().map(rational_to_f64).collect();
            let t = float_root(&qf).ok_or(MapError::NoInteriorCriticalPoint)?;
            let mut a = t + rational_to_f64(&z) / t;
            for (r, w) in &zr {
                a -= rational_to_f64(w) * t.powi(*r as i32 + 1);
            }
            (CriticalPoint::Approx(t), None, a)
        }
    };
    if !(a_val < 0.0 && b_val.is_positive()) {
        return Err(MapError::NoInteriorCriticalPoint);
    }
    let mut num: Vec<f64> = shifted_numerator(&z, &zr, &Rational::zero()).iter().map(rational_to_f64).collect();
    num[1] -= a_val;
    let t_f = t.to_f64();
    let num = divide_root(&divide_root(&num, t_f), t_f);
    let full = shifted_numerator(&z, &zr, &b_val);
    let reduced = deflate_ones(full.clone());
    let den_mult = (full.len() - reduced.len()) as i32;
    let den = reduced.iter().map(rational_to_f64).collect();
    Ok(BipolarConstants { z, zr, t, a_exact, a_val, b_val, num, t_f, den, den_mult })
}

/// Quotient by `(x − r)`, remainder dropped.
fn divide_root(p: &[f64], r: f64) -> Vec<f64> {
    let n = p.len() - 1;
    let mut q = vec![0.0; n];
    let mut carry = 0.0;
    for k in (1..=n).rev() {
        carry = p[k] + carry * r;
        q[k - 1] = carry;
    }
    q
}

/// Sign change on `[-1, 0)` refined by bisection and Newton.
fn float_root(p: &[f64]) -> Option<f64> {
    let n = 4000;
    let dp: Vec<f64> = p.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
    let grid: Vec<f64> = (0..=n).map(|k| -1.0 + k as f64 / n as f64).collect();
    for w in grid.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1].min(-1e-12));
        let (flo, fhi) = (eval_f(p, lo), eval_f(p, hi));
        if flo == 0.0 {
            return Some(lo);
        }
        if flo * fhi > 0.0 {
            continue;
        }
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            if eval_f(p, mid) * flo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..50 {
            let d = eval_f(&dp, x);
            if d == 0.0 {
                break;
            }
            let step = eval_f(p, x) / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        return Some(x);
    }
    None
}

impl BipolarConstants {
    pub fn is_exact(&self) -> bool {
        self.a_exact.is_some()
    }

    pub fn i0(&self, x: Complex64) -> Complex64 {
        let mut v = x + rational_to_f64(&self.z) / x;
        for (r, w) in &self.zr {
            v -= rational_to_f64(w) * x.powu(*r + 1);
        }
        v
    }

    fn ratio(&self, x: Complex64) -> Complex64 {
        let horner = |p: &[f64]| p.iter().rev().fold(Complex64::zero(), |acc, c| acc * x + c);
        (x - self.t_f).powi(2) * horner(&self.num) / (horner(&self.den) * (x - 1.0).powi(self.den_mult))
    }

    /// The map sends the domain into the right half-plane, so the principal root is the right branch there.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.ratio(x).sqrt() * rational_to_f64(&self.z)
    }

    pub fn series(&self, order: usize) -> Result<PsiSeries, MapError> {
        match &self.a_exact {
            Some(a) => {
                let n = Series1::from_poly(&shifted_numerator(&self.z, &self.zr, a), order);
                let d = Series1::from_poly(&shifted_numerator(&self.z, &self.zr, &self.b_val), order);
                let rho = n.div_unit(&d)?.sqrt()?.scale(&self.z);
                Ok(PsiSeries::Exact(rho))
            }
            None => {
                let to_f = |p: Vec<Rational>| p.iter().map(rational_to_f64).collect::<Vec<f64>>();
                let mut n = to_f(shifted_numerator(&self.z, &self.zr, &Rational::zero()));
                let mut d = n.clone();
                n[1] -= self.a_val;
                d[1] -= rational_to_f64(&self.b_val);
                let n = Series1::from_poly(&n, order);
                let d = Series1::from_poly(&d, order);
                let rho = n.div_unit(&d)?.sqrt()?.scale(&rational_to_f64(&self.z));
                Ok(PsiSeries::Float(rho))
            }
        }
    }
}
