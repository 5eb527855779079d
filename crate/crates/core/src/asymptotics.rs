//! Laplace transforms of harmonic tables and their continuous limits.
//!
//! The continuous harmonic function of index `n` for corner angle `θ` is
//! `Im((x/sinθ + y cotθ + iy)^{nπ/θ})`; its Laplace transform has a closed
//! form. A table `h_n` should satisfy `ℒh_n(x/m, y/m) ≈ c · m^{α+2} ℒh^σ(x,y)`
//! with `α = nπ/θ` and one constant `c` for all `(x, y)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::harmonic::HarmonicTable;
use crate::maps::gamma;
use crate::scalar::Scalar;

/// Tail estimates above this fraction of the partial sum are rejected.
pub const MAX_TAIL_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AsympError {
    #[error("denominator x² − 2xy cosθ + y² vanishes")]
    PoleOnDiagonal,
    #[error("tail estimate {fraction:e} of the partial sum exceeds {MAX_TAIL_FRACTION}")]
    TailDominates { fraction: f64, partial: f64, tail: f64 },
    #[error("window {window} too small, need {need}")]
    WindowTooSmall { window: usize, need: usize },
    #[error("Laplace variables must be positive")]
    NonPositive,
}

impl AsympError {
    pub fn kind(&self) -> &'static str {
        match self {
            AsympError::PoleOnDiagonal => "PoleOnDiagonal",
            AsympError::TailDominates { .. } => "TailDominates",
            AsympError::WindowTooSmall { .. } => "WindowTooSmall",
            AsympError::NonPositive => "NonPositive",
        }
    }
}

/// `Im((x/sinθ + y cotθ + iy)^{nπ/θ})`.
pub fn continuous_harmonic(n: u32, theta: f64, x: f64, y: f64) -> f64 {
    let z = Complex64::new(x / theta.sin() + y / theta.tan(), y);
    if z.norm() == 0.0 {
        return 0.0;
    }
    z.powf(n as f64 * PI / theta).im
}

/// `Im((x + iy)^{nπ/θ})`.
pub fn g_n(n: u32, theta: f64, x: f64, y: f64) -> f64 {
    let z = Complex64::new(x, y);
    if z.norm() == 0.0 {
        return 0.0;
    }
    z.powf(n as f64 * PI / theta).im
}

/// Closed-form `∫∫ h^σ_n(u,v) e^{−(ux+vy)} du dv`.
pub fn continuous_laplace(n: u32, theta: f64, x: f64, y: f64) -> Result<f64, AsympError> {
    if x <= 0.0 || y <= 0.0 {
        return Err(AsympError::NonPositive);
    }
    let a = n as f64 * PI / theta;
    let den = x * x - 2.0 * x * y * theta.cos() + y * y;
    if den.abs() < 1e-300 {
        return Err(AsympError::PoleOnDiagonal);
    }
    let e = PI / theta;
    let num = x.powf(-e).powi(n as i32) - (-y.powf(-e)).powi(n as i32);
    Ok(gamma(a + 2.0) / ((a + 1.0) * theta.sin().powf(a - 1.0)) * num / den)
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplaceEstimate {
    pub partial: f64,
    /// Envelope bound on the part outside the window.
    pub tail: f64,
    pub tail_fraction: f64,
}

/// `Σ_{s >= 2} s^p Σ_{i+j=s, (i,j) outside [1,W]²} e^{−(ix+jy)}`.
fn envelope_tail(w: usize, x: f64, y: f64, p: f64) -> f64 {
    let rate = x.min(y);
    // Stop once s^p e^{−s·rate} is far below the first outside term.
    let s_max = ((w as f64 + 1.0) + (60.0 + p * ((w as f64 + 2.0) / rate.min(1.0)).ln().max(1.0)) / rate) as usize;
    let mut total = 0.0;
    for s in (w + 2)..=s_max.max(w + 2) {
        let all = geometric_diag(s, 1, s - 1, x, y);
        let lo = 1.max(s.saturating_sub(w));
        let hi = w.min(s - 1);
        let inside = if lo <= hi { geometric_diag(s, lo, hi, x, y) } else { 0.0 };
        total += (s as f64).powf(p) * (all - inside).max(0.0);
    }
    total
}

/// `Σ_{i=a}^{b} e^{−ix − (s−i)y}`.
fn geometric_diag(s: usize, a: usize, b: usize, x: f64, y: f64) -> f64 {
    let n = (b - a + 1) as f64;
    let d = x - y;
    if d.abs() < 1e-14 {
        return n * (-(s as f64) * x).exp();
    }
    // Sum from the larger end so the ratio is below one.
    let (first, q) = if d > 0.0 {
        ((-(a as f64) * x - (s - a) as f64 * y).exp(), (-d).exp())
    } else {
        ((-(b as f64) * x - (s - b) as f64 * y).exp(), d.exp())
    };
    first * (1.0 - q.powf(n)) / (1.0 - q)
}

fn partial_sum<S: Scalar>(table: &HarmonicTable<S>, x: f64, y: f64) -> f64 {
    let w = table.window();
    let ey: Vec<f64> = (1..=w).map(|j| (-(j as f64) * y).exp()).collect();
    let mut total = 0.0;
    for i in 1..=w {
        let ex = (-(i as f64) * x).exp();
        if ex == 0.0 {
            break;
        }
        let row: f64 = (1..=w).map(|j| table.at(i, j).to_f64() * ey[j - 1]).sum();
        total += ex * row;
    }
    total
}

/// Partial Laplace sum plus an envelope tail `|h(i,j)| <= C (i+j)^{α+2}`
/// with `C` fitted on the outer rim.
pub fn laplace_with_envelope<S: Scalar>(table: &HarmonicTable<S>, x: f64, y: f64, alpha: f64) -> Result<LaplaceEstimate, AsympError> {
    if x <= 0.0 || y <= 0.0 {
        return Err(AsympError::NonPositive);
    }
    let w = table.window();
    let partial = partial_sum(table, x, y);
    let p = alpha + 2.0;
    let mut c: f64 = 0.0;
    for k in 1..=w {
        for (i, j) in [(w, k), (k, w)] {
            c = c.max(table.at(i, j).to_f64().abs() / ((i + j) as f64).powf(p));
        }
    }
    let tail = c * envelope_tail(w, x, y, p);
    let tail_fraction = if partial != 0.0 { tail / partial.abs() } else if tail == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(LaplaceEstimate { partial, tail, tail_fraction })
}

/// `ℒh(x,y) = Σ h(i,j) e^{−(ix+jy)}` over the window; fails if the tail may matter.
pub fn table_laplace<S: Scalar>(table: &HarmonicTable<S>, x: f64, y: f64, alpha: f64) -> Result<LaplaceEstimate, AsympError> {
    let est = laplace_with_envelope(table, x, y, alpha)?;
    if est.tail_fraction > MAX_TAIL_FRACTION {
        return Err(AsympError::TailDominates { fraction: est.tail_fraction, partial: est.partial, tail: est.tail });
    }
    Ok(est)
}

/// Tail from extending rows and columns past the window as `(i/W)^{α−1}`,
/// the boundary behaviour of the continuous limit.
pub fn rim_extrapolated_tail<S: Scalar>(table: &HarmonicTable<S>, x: f64, y: f64, alpha: f64) -> f64 {
    let w = table.window();
    let wf = w as f64;
    let ext = |rate: f64| -> f64 {
        let mut acc = 0.0;
        let mut k = w + 1;
        loop {
            let t = (k as f64 / wf).powf(alpha - 1.0) * (-(k as f64) * rate).exp();
            acc += t;
            if t < 1e-18 * acc || k > w + 10_000_000 {
                break;
            }
            k += 1;
        }
        acc
    };
    let (tx, ty) = (ext(x), ext(y));
    let col: f64 = (1..=w).map(|j| table.at(w, j).to_f64() * (-(j as f64) * y).exp()).sum();
    let row: f64 = (1..=w).map(|i| table.at(i, w).to_f64() * (-(i as f64) * x).exp()).sum();
    col * tx + row * ty + table.at(w, w).to_f64() * tx * ty
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub m: f64,
    pub ratios: Vec<f64>,
    /// `(max − min) / |mean|` over the samples.
    pub spread: f64,
    /// Extrapolated tail over the corrected sum, per sample.
    pub tail_fractions: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub n: u32,
    pub theta: f64,
    pub alpha: f64,
    pub samples: Vec<(f64, f64)>,
    pub rows: Vec<ScalingRow>,
    /// Mean ratio at the largest `m`.
    pub c_estimate: f64,
    pub monotone: bool,
}

/// Ratios `ℒh(x/m, y/m) m^{−(α+2)} / ℒh^σ(x,y)` for each `m` and sample.
/// Samples where the continuous transform vanishes are rejected up front.
pub fn scaling_convergence<S: Scalar>(
    table: &HarmonicTable<S>,
    n: u32,
    theta: f64,
    samples: &[(f64, f64)],
    ms: &[f64],
) -> Result<ScalingReport, AsympError> {
    let alpha = n as f64 * PI / theta;
    let w = table.window();
    let mmax = ms.iter().copied().fold(0.0, f64::max);
    let cmax = samples.iter().map(|(x, y)| x.max(*y)).fold(0.0, f64::max);
    let need = (3.0 * mmax * cmax).ceil() as usize;
    if w < need {
        return Err(AsympError::WindowTooSmall { window: w, need });
    }
    let mut cont = Vec::with_capacity(samples.len());
    for (x, y) in samples {
        let c = continuous_laplace(n, theta, *x, *y)?;
        if c.abs() < 1e-12 {
            return Err(AsympError::PoleOnDiagonal);
        }
        cont.push(c);
    }
    let rows: Vec<ScalingRow> = ms
        .iter()
        .map(|&m| {
            let norm = m.powf(-(alpha + 2.0));
            let mut ratios = Vec::new();
            let mut tails = Vec::new();
            for ((x, y), c) in samples.iter().zip(&cont) {
                let (u, v) = (x / m, y / m);
                let partial = partial_sum(table, u, v);
                let tail = rim_extrapolated_tail(table, u, v, alpha);
                ratios.push((partial + tail) * norm / c);
                tails.push((tail / (partial + tail)).abs());
            }
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(*r), b.max(*r)));
            ScalingRow { m, spread: (hi - lo) / mean.abs(), ratios, tail_fractions: tails }
        })
        .collect();
    let last = rows.last().map(|r| r.ratios.iter().sum::<f64>() / r.ratios.len() as f64).unwrap_or(f64::NAN);
    let monotone = rows.windows(2).all(|p| p[1].spread <= p[0].spread);
    Ok(ScalingReport { n, theta, alpha, samples: samples.to_vec(), rows, c_estimate: last, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{expand_harmonic, integer_table, ExpandOptions, HarmonicSpec};
    use crate::maps::{Backend, ConformalMap};
    use crate::walk::bundled::*;
    use crate::Rational;

    /// `∫_0^∞ f`, via `u = t/(1−t)`.
    fn half_line(f: impl Fn(f64) -> f64) -> f64 {
        quadrature::integrate(
            |t: f64| {
                let s = 1.0 - t;
                f(t / s) / (s * s)
            },
            0.0,
            1.0,
            1e-12,
        )
        .integral
    }

    fn laplace_by_quadrature(n: u32, theta: f64, x: f64, y: f64) -> f64 {
        half_line(|u| half_line(|v| continuous_harmonic(n, theta, u, v) * (-(u * x + v * y)).exp()))
    }

    #[test]
    fn continuous_harmonic_examples() {
        let r = PI / 2.0;
        for (x, y) in [(0.3, 0.7), (1.0, 2.0), (2.5, 0.1)] {
            assert!((continuous_harmonic(1, r, x, y) - 2.0 * x * y).abs() < 1e-12);
            assert!((continuous_harmonic(2, r, x, y) - 4.0 * x * y * (x * x - y * y)).abs() < 1e-11);
            assert!((g_n(1, r, x, y) - 2.0 * x * y).abs() < 1e-12);
        }
        for theta in [PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
            for n in 1..=3 {
                assert_eq!(continuous_harmonic(n, theta, 1.7, 0.0), 0.0);
                // The other edge of the cone: x = 0 in these coordinates.
                assert!(continuous_harmonic(n, theta, 0.0, 1.3).abs() < 1e-12);
            }
        }
    }

    /// Fourth-order central differences at step `h`.
    fn limit_operator(f: impl Fn(f64, f64) -> f64, theta: f64, x: f64, y: f64, h: f64) -> f64 {
        const W2: [(f64, f64); 5] = [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)];
        const W1: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
        let fxx: f64 = W2.iter().map(|(k, c)| c * f(x + k * h, y)).sum::<f64>() / (12.0 * h * h);
        let fyy: f64 = W2.iter().map(|(k, c)| c * f(x, y + k * h)).sum::<f64>() / (12.0 * h * h);
        let mut fxy = 0.0;
        for (a, ca) in W1 {
            for (b, cb) in W1 {
                fxy += ca * cb * f(x + a * h, y + b * h);
            }
        }
        fxy /= 144.0 * h * h;
        fxx - 2.0 * theta.cos() * fxy + fyy
    }

    #[test]
    fn continuous_harmonic_solves_the_limit_equation() {
        for theta in [PI / 2.0, 2.0 * PI / 3.0, PI / 3.0] {
            for n in 1..=3 {
                let f = |x: f64, y: f64| continuous_harmonic(n, theta, x, y);
                for (x, y) in [(1.0, 1.0), (0.7, 1.4), (1.5, 0.4)] {
                    let r = limit_operator(f, theta, x, y, 1e-3);
                    assert!(r.abs() < 1e-5, "θ={theta} n={n}: {r}");
                }
            }
        }
        // g_n is harmonic for the ordinary Laplacian.
        let r = limit_operator(|x, y| g_n(2, 2.0 * PI / 3.0, x, y), PI / 2.0, 0.8, 0.9, 1e-3);
        assert!(r.abs() < 1e-5);
    }

    #[test]
    fn continuous_laplace_examples() {
        assert!((continuous_laplace(1, PI / 2.0, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(continuous_laplace(2, PI / 2.0, 1.0, 1.0).unwrap().abs() < 1e-12);
        let q = laplace_by_quadrature(1, 2.0 * PI / 3.0, 1.0, 2.0);
        assert!((continuous_laplace(1, 2.0 * PI / 3.0, 1.0, 2.0).unwrap() - q).abs() < 1e-6);
        assert_eq!(continuous_laplace(1, PI / 2.0, 0.0, 1.0), Err(AsympError::NonPositive));
    }

    #[test]
    fn continuous_laplace_matches_quadrature_grid() {
        for theta in [PI / 2.0, 2.0 * PI / 3.0] {
            for n in 1..=3 {
                for x in [0.8, 1.0, 1.7] {
                    for y in [0.9, 1.3, 2.0] {
                        let c = continuous_laplace(n, theta, x, y).unwrap();
                        let q = laplace_by_quadrature(n, theta, x, y);
                        assert!((c - q).abs() < 1e-6, "n={n} θ={theta} ({x},{y}): {c} vs {q}");
                    }
                }
            }
        }
    }

    #[test]
    fn table_laplace_examples() {
        let ij = integer_table(60, |i, j| i * j);
        let e = std::f64::consts::E;
        let want = (e / ((e - 1.0) * (e - 1.0))).powi(2);
        let got = table_laplace(&ij, 1.0, 1.0, 2.0).unwrap();
        assert!((got.partial - want).abs() < 1e-12);
        assert!((want - 0.847640).abs() < 1e-6);
        let far = table_laplace(&ij, 30.0, 25.0, 2.0).unwrap();
        assert!((far.partial / (-55.0f64).exp() - 1.0).abs() < 1e-10);
        // A short window cannot resolve slow decay.
        let short = integer_table(10, |i, j| i * j);
        assert_eq!(table_laplace(&short, 0.05, 0.05, 2.0).unwrap_err().kind(), "TailDominates");
    }

    fn kreweras_h1(window: usize) -> HarmonicTable<f64> {
        let m = kreweras_model();
        let map = ConformalMap::new(&m, Backend::BipolarFamily).unwrap();
        let t: HarmonicTable<Rational> =
            expand_harmonic(&m, &map, &HarmonicSpec::monomial(1), window, ExpandOptions::default()).unwrap();
        t.to_f64()
    }

    #[test]
    fn kreweras_transform_is_window_stable() {
        let t100 = kreweras_h1(100);
        let a = table_laplace(&t100, 1.0, 1.0, 1.5).unwrap();
        assert!(a.partial.is_finite() && a.tail_fraction < 0.01);
        let b = table_laplace(&t100.restrict(50), 1.0, 1.0, 1.5).unwrap();
        assert!(((a.partial - b.partial) / a.partial).abs() < 0.005);
    }

    #[test]
    fn rim_extrapolation_is_exact_for_products() {
        let w = 40;
        let t = integer_table(w, |i, j| i * j);
        let (x, y) = (0.05, 0.08);
        let full = |r: f64| r.exp() / ((r.exp() - 1.0) * (r.exp() - 1.0));
        let est = partial_sum(&t, x, y) + rim_extrapolated_tail(&t, x, y, 2.0);
        assert!((est / (full(x) * full(y)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn srw_scaling_small() {
        let t = integer_table(300, |i, j| -4 * i * j).to_f64();
        let r = scaling_convergence(&t, 1, PI / 2.0, &[(1.0, 1.0), (1.0, 2.0), (2.0, 1.0)], &[10.0, 50.0]).unwrap();
        assert!(r.monotone);
        assert!(r.rows[1].spread < 0.01);
        // ℒ(ij)(x/m,y/m) ≈ m⁴/(x²y²) and ℒh^σ = 2/(x²y²): c → −2.
        assert!((r.c_estimate + 2.0).abs() < 0.01);
        assert!(scaling_convergence(&t, 1, PI / 2.0, &[(1.0, 1.0)], &[200.0]).is_err());
    }

    #[test]
    fn kreweras_scaling_spread_decreases() {
        let t = kreweras_h1(300);
        let theta = 2.0 * PI / 3.0;
        let r = scaling_convergence(&t, 1, theta, &[(1.0, 1.0), (1.0, 2.0), (2.0, 1.0)], &[10.0, 50.0]).unwrap();
        assert!(r.monotone, "{:?}", r.rows);
    }

    #[test]
    fn antisymmetric_transforms_vanish_on_the_diagonal() {
        let t = integer_table(80, |i, j| i * j * (i - j) * (i + j));
        assert!(partial_sum(&t, 0.3, 0.3).abs() < 1e-9);
        assert!(continuous_laplace(2, PI / 2.0, 0.7, 0.7).unwrap().abs() < 1e-12);
        assert_eq!(
            scaling_convergence(&t.to_f64(), 2, PI / 2.0, &[(1.0, 1.0)], &[10.0]).unwrap_err(),
            AsympError::PoleOnDiagonal
        );
    }
}
