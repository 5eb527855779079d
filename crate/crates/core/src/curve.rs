//! The curve `S1 = {η(s)s : |s| = 1}` cut out by the kernel on `|x| = |y|`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::scalar::rational_to_f64;
use crate::walk::{KernelPoly, StepSet};

pub const DEFAULT_EXCLUSION: f64 = 1e-4;
/// Radius of the disk around the corner `1` treated as outside `S1+`.
pub const CORNER_EXCLUSION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurveError {
    #[error("no sign change bracketing the kernel root at t = {t}")]
    RootNotBracketed { t: f64 },
    #[error("need at least 16 curve points, got {0}")]
    TooFewPoints(usize),
    #[error("curve too coarse near the corner to estimate its angle")]
    InsufficientResolution,
}

impl CurveError {
    pub fn kind(&self) -> &'static str {
        match self {
            CurveError::RootNotBracketed { .. } => "RootNotBracketed",
            CurveError::TooFewPoints(_) => "TooFewPoints",
            CurveError::InsufficientResolution => "InsufficientResolution",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `p11 = 0`: the single root in `[-1, 1]`.
    Unique,
    /// `p11 != 0`: the positive root `η1`.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaSolution {
    pub t: f64,
    pub eta: f64,
    pub branch: Branch,
    /// `|K(ηs, η/s)|` at the returned root.
    pub residual: f64,
}

impl EtaSolution {
    pub fn point(&self) -> Complex64 {
        Complex64::from_polar(self.eta, self.t)
    }
}

/// Precomputed real slice of the kernel for repeated root solves.
#[derive(Debug, Clone)]
pub struct EtaSolver {
    terms: Vec<(u32, f64, f64)>,
    reduced: bool,
    exclusion: f64,
}

impl EtaSolver {
    pub fn new(kernel: &KernelPoly) -> Self {
        Self::with_exclusion(kernel, DEFAULT_EXCLUSION)
    }

    pub fn with_exclusion(kernel: &KernelPoly, exclusion: f64) -> Self {
        // Re-derive the slice terms from the coefficient map.
        let shift = u32::from(kernel.is_reduced());
        let mut terms: Vec<(u32, f64, f64)> = Vec::new();
        for ((a, b), c) in kernel.coeffs() {
            terms.push((a + b - shift, *a as f64 - *b as f64, rational_to_f64(c)));
        }
        EtaSolver { terms, reduced: kernel.is_reduced(), exclusion }
    }

    fn poly(&self, t: f64) -> Vec<f64> {
        let deg = self.terms.iter().map(|x| x.0).max().unwrap_or(0) as usize;
        let mut c = vec![0.0; deg + 1];
        for (e, s, w) in &self.terms {
            c[*e as usize] += w * (s * t).cos();
        }
        c
    }

    pub fn solve(&self, t: f64) -> Result<EtaSolution, CurveError> {
        let branch = if self.reduced { Branch::Unique } else { Branch::Positive };
        let c = self.poly(t);
        let f = |x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
        let df = |x: f64| {
            c.iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, v)| acc * x + k as f64 * v)
        };
        let full_residual = |eta: f64| {
            let r = f(eta).abs();
            if self.reduced {
                r * eta.abs()
            } else {
                r
            }
        };
        let tm = t.rem_euclid(2.0 * PI);
        let near = |a: f64| (tm - a).abs() < self.exclusion || (tm - a - 2.0 * PI).abs() < self.exclusion;
        if near(0.0) {
            return Ok(EtaSolution { t, eta: 1.0, branch, residual: full_residual(1.0) });
        }
        if self.reduced && near(PI) {
            return Ok(EtaSolution { t, eta: -1.0, branch, residual: full_residual(-1.0) });
        }
        let (mut lo, mut hi) = if self.reduced { (-1.0, 1.0) } else { (0.0, 1.0) };
        let (flo, fhi) = (f(lo), f(hi));
        if fhi.abs() <= 1e-15 {
            return Ok(EtaSolution { t, eta: hi, branch, residual: full_residual(hi) });
        }
        if self.reduced && flo.abs() <= 1e-15 {
            return Ok(EtaSolution { t, eta: lo, branch, residual: full_residual(lo) });
        }
        if !(flo < 0.0 && fhi > 0.0) {
            return Err(CurveError::RootNotBracketed { t });
        }
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let fx = f(x);
            if fx == 0.0 {
                break;
            }
            if fx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = df(x);
            let mut nx = if d != 0.0 { x - fx / d } else { f64::NAN };
            if !(nx > lo && nx < hi) {
                nx = 0.5 * (lo + hi);
            }
            if (nx - x).abs() <= 1e-17 {
                x = nx;
                break;
            }
            x = nx;
        }
        Ok(EtaSolution { t, eta: x, branch, residual: full_residual(x) })
    }
}

pub fn eta_at(model: &StepSet, t: f64) -> Result<EtaSolution, CurveError> {
    EtaSolver::new(&model.kernel()).solve(t)
}

/// Counterclockwise samples of `S1`, starting at the corner `1`.
///
/// The angle grid covers `[0, 2π)`, or `[0, π)` when `p11 = 0` (the map
/// `s ↦ η(s)s` is then two-to-one). Point `k` and point `n - k` are conjugate.
#[derive(Debug, Clone, Serialize)]
pub struct CurveSample {
    pub params: Vec<f64>,
    pub points: Vec<Complex64>,
    pub closed: bool,
    pub reduced: bool,
}

pub fn trace_s1(model: &StepSet, n_points: usize) -> Result<CurveSample, CurveError> {
    if n_points < 16 {
        return Err(CurveError::TooFewPoints(n_points));
    }
    let kernel = model.kernel();
    let solver = EtaSolver::new(&kernel);
    let span = if kernel.is_reduced() { PI } else { 2.0 * PI };
    let params: Vec<f64> = (0..n_points).map(|k| span * k as f64 / n_points as f64).collect();
    let sols: Result<Vec<EtaSolution>, CurveError> = params.par_iter().map(|&t| solver.solve(t)).collect();
    let points = sols?.iter().map(EtaSolution::point).collect();
    Ok(CurveSample { params, points, closed: true, reduced: kernel.is_reduced() })
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = cross(p2 - p1, q1 - p1);
    let d2 = cross(p2 - p1, q2 - p1);
    let d3 = cross(q2 - q1, p1 - q1);
    let d4 = cross(q2 - q1, p2 - q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn dist_to_segment(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    if l2 == 0.0 {
        return (z - a).norm();
    }
    let u = ((z - a).re * ab.re + (z - a).im * ab.im) / l2;
    (z - (a + ab * u.clamp(0.0, 1.0))).norm()
}

impl CurveSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn edge(&self, i: usize) -> (Complex64, Complex64) {
        (self.points[i], self.points[(i + 1) % self.len()])
    }

    pub fn conjugate_symmetry_residual(&self) -> f64 {
        let n = self.len();
        (1..n)
            .map(|k| (self.points[k] - self.points[n - k].conj()).norm())
            .fold((self.points[0].im).abs(), f64::max)
    }

    /// Number of properly crossing pairs of non-adjacent polygon edges.
    pub fn self_intersections(&self) -> usize {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let (a, b) = self.edge(i);
                (i + 2..n)
                    .filter(|&j| !(i == 0 && j == n - 1))
                    .filter(|&j| {
                        let (c, d) = self.edge(j);
                        segments_cross(a, b, c, d)
                    })
                    .count()
            })
            .sum()
    }

    pub fn distance_to_boundary(&self, z: Complex64) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                dist_to_segment(z, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn winding_number(&self, z: Complex64) -> i32 {
        let mut w = 0;
        for i in 0..self.len() {
            let (a, b) = self.edge(i);
            if a.im <= z.im {
                if b.im > z.im && cross(b - a, z - a) > 0.0 {
                    w += 1;
                }
            } else if b.im <= z.im && cross(b - a, z - a) < 0.0 {
                w -= 1;
            }
        }
        w
    }

    /// Strict interior by winding number, minus the disk around the corner.
    pub fn contains(&self, z: Complex64) -> bool {
        (z - 1.0).norm() >= CORNER_EXCLUSION && self.winding_number(z) != 0
    }

    /// Closure of the interior (boundary within `tol`), minus the corner disk.
    pub fn contains_closed(&self, z: Complex64, tol: f64) -> bool {
        (z - 1.0).norm() >= CORNER_EXCLUSION && (self.winding_number(z) != 0 || self.distance_to_boundary(z) <= tol)
    }

    /// Left end of the real segment inside the curve.
    pub fn real_left_end(&self) -> f64 {
        self.points
            .iter()
            .filter(|p| p.im.abs() < 1e-12)
            .map(|p| p.re)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            b.0 = b.0.min(p.re);
            b.1 = b.1.max(p.re);
            b.2 = b.2.min(p.im);
            b.3 = b.3.max(p.im);
        }
        b
    }
}

fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

/// Interior angle at `1` from secant directions of the first few samples on
/// each side, extrapolated to zero parameter.
pub fn corner_angle_estimate(curve: &CurveSample) -> Result<f64, CurveError> {
    const TERMS: usize = 4;
    let n = curve.len();
    if n < 16 || curve.params[TERMS] > 0.5 {
        return Err(CurveError::InsufficientResolution);
    }
    let ts: Vec<f64> = curve.params[1..=TERMS].to_vec();
    let up: Vec<f64> = (1..=TERMS).map(|k| (curve.points[k] - 1.0).arg()).collect();
    let down: Vec<f64> = (1..=TERMS).map(|k| -(curve.points[n - k] - 1.0).arg()).collect();
    let a = 0.5 * (neville_at_zero(&ts, &up) + neville_at_zero(&ts, &down));
    Ok(2.0 * (PI - a))
}

#[derive(Debug, Clone, Serialize)]
pub struct NoZeroReport {
    pub samples: usize,
    pub min_abs_k: f64,
    pub argmin: (f64, f64, f64, f64),
    /// `|K(0,0)|` when `0` is interior, i.e. when `p11 != 0`.
    pub k_at_origin: Option<f64>,
    /// `|K(1,1)|`, zero for every model.
    pub k_at_corner: f64,
}

/// Samples pairs in `S1+ × S1+` by rejection and records the smallest `|K|`.
pub fn no_zero_check(model: &StepSet, curve: &CurveSample, n_samples: usize, seed: u64) -> NoZeroReport {
    let kernel = model.kernel();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x0, x1, y0, y1) = curve.bounding_box();
    let draw = |rng: &mut ChaCha8Rng| loop {
        let z = Complex64::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1));
        if curve.contains(z) {
            return z;
        }
    };
    let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for _ in 0..n_samples {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let k = kernel.eval_complex(x, y).norm();
        if k < best.0 {
            best = (k, x, y);
        }
    }
    let origin = Complex64::new(0.0, 0.0);
    let k_at_origin = if curve.contains(origin) {
        Some(kernel.eval_complex(origin, origin).norm())
    } else {
        None
    };
    let one = Complex64::new(1.0, 0.0);
    NoZeroReport {
        samples: n_samples,
        min_abs_k: best.0,
        argmin: (best.1.re, best.1.im, best.2.re, best.2.im),
        k_at_origin,
        k_at_corner: kernel.eval_complex(one, one).norm(),
    }
}
