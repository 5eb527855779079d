//! Step sets, the kernel polynomial and covariance data.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::scalar::{format_rational, parse_rational, rational_to_f64, Rational};

pub type Step = (i32, i32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    EmptyModel,
    DuplicateStep { k: i32, l: i32 },
    NegativeWeight { k: i32, l: i32 },
    SumNotOne { sum: String },
    AsymmetricWeights { k: i32, l: i32 },
    PositiveJumpTooLarge { k: i32, l: i32 },
    NonzeroDrift { drift_x: String, drift_y: String },
    Reducible,
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Violation::EmptyModel => "EmptyModel",
            Violation::DuplicateStep { .. } => "DuplicateStep",
            Violation::NegativeWeight { .. } => "NegativeWeight",
            Violation::SumNotOne { .. } => "SumNotOne",
            Violation::AsymmetricWeights { .. } => "AsymmetricWeights",
            Violation::PositiveJumpTooLarge { .. } => "PositiveJumpTooLarge",
            Violation::NonzeroDrift { .. } => "NonzeroDrift",
            Violation::Reducible => "Reducible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid step set: {}", names(.0))]
    Invalid(Vec<Violation>),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: float weight {text:?}; weights must be exact rationals")]
    FloatWeight { line: usize, text: String },
    #[error("degenerate covariance")]
    DegenerateCovariance,
}

fn names(v: &[Violation]) -> String {
    v.iter().map(Violation::name).collect::<Vec<_>>().join(", ")
}

impl ModelError {
    pub fn kind(&self) -> String {
        match self {
            ModelError::Invalid(v) => names(v),
            ModelError::Parse { .. } => "ParseError".into(),
            ModelError::FloatWeight { .. } => "FloatWeight".into(),
            ModelError::DegenerateCovariance => "DegenerateCovariance".into(),
        }
    }
}

/// A validated symmetric zero-drift step set with jumps at most 1 upwards.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSet {
    steps: BTreeMap<Step, Rational>,
    max_neg_jump: u32,
    irreducible: bool,
}

pub fn validate_stepset(raw: &[(Step, Rational)]) -> Result<StepSet, ModelError> {
    StepSet::validate(raw, false)
}

impl StepSet {
    /// Collects every violated hypothesis instead of stopping at the first.
    pub fn validate(raw: &[(Step, Rational)], allow_reducible: bool) -> Result<StepSet, ModelError> {
        let mut v = Vec::new();
        let mut steps: BTreeMap<Step, Rational> = BTreeMap::new();
        for ((k, l), w) in raw {
            if steps.contains_key(&(*k, *l)) {
                v.push(Violation::DuplicateStep { k: *k, l: *l });
                continue;
            }
            if w.is_negative() {
                v.push(Violation::NegativeWeight { k: *k, l: *l });
            }
            if !w.is_zero() {
                steps.insert((*k, *l), w.clone());
            }
        }
        if steps.is_empty() {
            v.push(Violation::EmptyModel);
            return Err(ModelError::Invalid(v));
        }
        let sum: Rational = steps.values().cloned().sum();
        if !sum.is_one() {
            v.push(Violation::SumNotOne { sum: format_rational(&sum) });
        }
        for ((k, l), w) in &steps {
            if k < l && steps.get(&(*l, *k)) != Some(w) {
                v.push(Violation::AsymmetricWeights { k: *k, l: *l });
            } else if k > l && !steps.contains_key(&(*l, *k)) {
                v.push(Violation::AsymmetricWeights { k: *l, l: *k });
            }
        }
        for (k, l) in steps.keys() {
            if *k >= 2 || *l >= 2 {
                v.push(Violation::PositiveJumpTooLarge { k: *k, l: *l });
            }
        }
        let dx: Rational = steps.iter().map(|((k, _), w)| w * Rational::from_integer((*k).into())).sum();
        let dy: Rational = steps.iter().map(|((_, l), w)| w * Rational::from_integer((*l).into())).sum();
        if !dx.is_zero() || !dy.is_zero() {
            v.push(Violation::NonzeroDrift {
                drift_x: format_rational(&dx),
                drift_y: format_rational(&dy),
            });
        }
        let irreducible = generates_lattice(steps.keys());
        if !irreducible && !allow_reducible {
            v.push(Violation::Reducible);
        }
        if !v.is_empty() {
            return Err(ModelError::Invalid(v));
        }
        let max_neg_jump = steps
            .keys()
            .map(|(k, l)| (-k).max(-l).max(0) as u32)
            .max()
            .unwrap_or(0);
        Ok(StepSet { steps, max_neg_jump, irreducible })
    }

    pub fn from_model_text(text: &str, allow_reducible: bool) -> Result<StepSet, ModelError> {
        StepSet::validate(&parse_model(text)?, allow_reducible)
    }

    pub fn steps(&self) -> &BTreeMap<Step, Rational> {
        &self.steps
    }

    pub fn weight(&self, k: i32, l: i32) -> Rational {
        self.steps.get(&(k, l)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn p11(&self) -> Rational {
        self.weight(1, 1)
    }

    pub fn max_neg_jump(&self) -> u32 {
        self.max_neg_jump
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    pub fn is_small_step(&self) -> bool {
        self.steps.keys().all(|(k, l)| k.abs() <= 1 && l.abs() <= 1)
    }

    /// Canonical model text: one `k l n/d` line per step, sorted.
    pub fn to_model_text(&self) -> String {
        format_model(self.steps.iter().map(|(s, w)| (*s, w.clone())))
    }

    /// SHA-256 of the canonical model text, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_model_text().as_bytes());
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn kernel(&self) -> KernelPoly {
        kernel_poly(self)
    }

    pub fn covariance(&self) -> Result<CovarianceData, ModelError> {
        covariance_angle(self)
    }
}

/// True when the support generates Z^2 as a group.
fn generates_lattice<'a>(steps: impl Iterator<Item = &'a Step>) -> bool {
    let s: Vec<&Step> = steps.collect();
    let mut g = BigInt::zero();
    for (i, a) in s.iter().enumerate() {
        for b in &s[i + 1..] {
            let det = a.0 as i64 * b.1 as i64 - a.1 as i64 * b.0 as i64;
            g = g.gcd(&BigInt::from(det));
        }
    }
    g.is_one()
}

pub fn parse_model(text: &str) -> Result<Vec<(Step, Rational)>, ModelError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let parts: Vec<&str> = body.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(ModelError::Parse {
                line: line_no,
                message: format!("expected `k l weight`, got {body:?}"),
            });
        }
        let k: i32 = parts[0].parse().map_err(|_| ModelError::Parse {
            line: line_no,
            message: format!("bad jump {:?}", parts[0]),
        })?;
        let l: i32 = parts[1].parse().map_err(|_| ModelError::Parse {
            line: line_no,
            message: format!("bad jump {:?}", parts[1]),
        })?;
        let w = parse_rational(parts[2]).map_err(|e| match e {
            crate::scalar::RationalParseError::Decimal(t) => ModelError::FloatWeight { line: line_no, text: t },
            other => ModelError::Parse { line: line_no, message: other.to_string() },
        })?;
        out.push(((k, l), w));
    }
    Ok(out)
}

pub fn format_model(steps: impl IntoIterator<Item = (Step, Rational)>) -> String {
    let mut out = String::new();
    for ((k, l), w) in steps {
        let _ = writeln!(out, "{k} {l} {}", format_rational(&w));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceData {
    #[serde(serialize_with = "ser_rat")]
    pub sigma1: Rational,
    #[serde(serialize_with = "ser_rat")]
    pub sigma2: Rational,
    #[serde(serialize_with = "ser_rat")]
    pub sigma12: Rational,
    pub theta: f64,
    pub pi_over_theta: f64,
}

fn ser_rat<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

pub fn covariance_angle(model: &StepSet) -> Result<CovarianceData, ModelError> {
    let mut s1 = Rational::zero();
    let mut s2 = Rational::zero();
    let mut s12 = Rational::zero();
    for ((k, l), w) in &model.steps {
        let k = Rational::from_integer((*k).into());
        let l = Rational::from_integer((*l).into());
        s1 += w * &k * &k;
        s2 += w * &l * &l;
        s12 += w * &k * &l;
    }
    if s1.is_zero() || s2.is_zero() {
        return Err(ModelError::DegenerateCovariance);
    }
    let c = -rational_to_f64(&s12) / (rational_to_f64(&s1) * rational_to_f64(&s2)).sqrt();
    if c.abs() >= 1.0 {
        return Err(ModelError::DegenerateCovariance);
    }
    let theta = c.acos();
    Ok(CovarianceData {
        sigma1: s1,
        sigma2: s2,
        sigma12: s12,
        theta,
        pi_over_theta: std::f64::consts::PI / theta,
    })
}

/// `K(x,y) = xy - Σ p_{k,l} x^{1-k} y^{1-l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPoly {
    coeffs: BTreeMap<(u32, u32), Rational>,
    /// `K(ηs, η/s)` as a Laurent map `(η power, s power) -> coefficient`,
    /// divided by `η` when `p11 = 0`.
    slice: BTreeMap<(u32, i32), Rational>,
    reduced: bool,
    p11: Rational,
}

pub fn kernel_poly(model: &StepSet) -> KernelPoly {
    let mut coeffs: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
    coeffs.insert((1, 1), Rational::one());
    for ((k, l), w) in &model.steps {
        let key = ((1 - k) as u32, (1 - l) as u32);
        let e = coeffs.entry(key).or_insert_with(Rational::zero);
        *e -= w;
    }
    coeffs.retain(|_, v| !v.is_zero());
    let p11 = model.p11();
    let reduced = p11.is_zero();
    let shift = u32::from(reduced);
    let mut slice: BTreeMap<(u32, i32), Rational> = BTreeMap::new();
    for ((a, b), c) in &coeffs {
        // x^a y^b at x = ηs, y = η/s gives η^{a+b} s^{a-b}.
        let key = (a + b - shift, *a as i32 - *b as i32);
        *slice.entry(key).or_insert_with(Rational::zero) += c;
    }
    slice.retain(|_, v| !v.is_zero());
    KernelPoly { coeffs, slice, reduced, p11 }
}

impl KernelPoly {
    pub fn coeffs(&self) -> &BTreeMap<(u32, u32), Rational> {
        &self.coeffs
    }

    pub fn coeff(&self, a: u32, b: u32) -> Rational {
        self.coeffs.get(&(a, b)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn p11(&self) -> &Rational {
        &self.p11
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn is_symmetric(&self) -> bool {
        self.coeffs.iter().all(|((a, b), c)| self.coeffs.get(&(*b, *a)) == Some(c))
    }

    pub fn max_degree(&self) -> u32 {
        self.coeffs.keys().map(|(a, b)| (*a).max(*b)).max().unwrap_or(0)
    }

    pub fn eval_rational(&self, x: &Rational, y: &Rational) -> Rational {
        self.coeffs
            .iter()
            .map(|((a, b), c)| c * num_traits::pow(x.clone(), *a as usize) * num_traits::pow(y.clone(), *b as usize))
            .sum()
    }

    pub fn eval_complex(&self, x: Complex64, y: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|((a, b), c)| rational_to_f64(c) * x.powu(*a) * y.powu(*b))
            .sum()
    }

    /// Coefficients of `K(x, 0)` in `x`, ascending.
    pub fn row_at_y0(&self) -> Vec<Rational> {
        let deg = self.max_degree() as usize;
        let mut out = vec![Rational::zero(); deg + 1];
        for ((a, b), c) in &self.coeffs {
            if *b == 0 {
                out[*a as usize] += c;
            }
        }
        out
    }

    /// Real coefficients of `η ↦ K(ηe^{it}, ηe^{-it})` (divided by `η` when
    /// `p11 = 0`), ascending in `η`.
    pub fn eta_slice(&self, t: f64) -> Vec<f64> {
        let deg = self.slice.keys().map(|(e, _)| *e).max().unwrap_or(0) as usize;
        let mut out = vec![0.0; deg + 1];
        for ((e, s), c) in &self.slice {
            out[*e as usize] += rational_to_f64(c) * (*s as f64 * t).cos();
        }
        out
    }
}

/// Raw step lists for the bundled models.
pub mod bundled {
    use super::*;
    use crate::scalar::rat;

    pub fn srw() -> Vec<(Step, Rational)> {
        [(1, 0), (0, 1), (-1, 0), (0, -1)].iter().map(|s| (*s, rat(1, 4))).collect()
    }

    pub fn king() -> Vec<(Step, Rational)> {
        let mut v = Vec::new();
        for k in -1..=1 {
            for l in -1..=1 {
                if (k, l) != (0, 0) {
                    v.push(((k, l), rat(1, 8)));
                }
            }
        }
        v
    }

    pub fn kreweras() -> Vec<(Step, Rational)> {
        vec![((1, 1), rat(1, 3)), ((-1, 0), rat(1, 3)), ((0, -1), rat(1, 3))]
    }

    /// `(1,1)` with weight `z`, and every `(k,l)` with `k,l <= 0`, `k+l = -r` with weight `z_r`.
    pub fn bipolar(z: Rational, zr: &[(u32, Rational)]) -> Vec<(Step, Rational)> {
        let mut v = vec![((1, 1), z)];
        for (r, w) in zr {
            let r = *r as i32;
            for i in 0..=r {
                v.push(((-i, -(r - i)), w.clone()));
            }
        }
        v
    }

    /// The reducible example `z = 1/2`, `z_2 = 1/6`.
    pub fn big_jumps() -> Vec<(Step, Rational)> {
        bipolar(rat(1, 2), &[(2, rat(1, 6))])
    }

    pub fn srw_model() -> StepSet {
        StepSet::validate(&srw(), false).expect("bundled model")
    }

    pub fn king_model() -> StepSet {
        StepSet::validate(&king(), false).expect("bundled model")
    }

    pub fn kreweras_model() -> StepSet {
        StepSet::validate(&kreweras(), false).expect("bundled model")
    }

    pub fn big_jumps_model() -> StepSet {
        StepSet::validate(&big_jumps(), true).expect("bundled model")
    }
}
