//! Chebyshev functions of real order, `T_a(x) = 2F1(-a, a; 1/2; (1-x)/2)`.

use num_complex::Complex64;

use crate::series::Series1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChebyshevError {
    #[error("argument {0} lies on the branch cut (-inf, -1)")]
    BranchCut(f64),
    #[error("expansion center {0} outside (-1, inf)")]
    BadCenter(f64),
}

/// Gauss series `2F1(a, b; c; z)` for `|z| < 1`, summed until terms stall.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for n in 0..10_000 {
        let n = n as f64;
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

fn check_cut(x: Complex64) -> Result<(), ChebyshevError> {
    if x.im == 0.0 && x.re < -1.0 {
        Err(ChebyshevError::BranchCut(x.re))
    } else {
        Ok(())
    }
}

fn w_of(x: Complex64) -> Complex64 {
    x + (x - 1.0).sqrt() * (x + 1.0).sqrt()
}

/// `½((x+√(x²−1))^a + (x−√(x²−1))^a)` on principal branches.
pub fn chebyshev_t(a: f64, x: Complex64) -> Result<Complex64, ChebyshevError> {
    check_cut(x)?;
    let w = w_of(x);
    Ok(0.5 * (w.powf(a) + w.powf(-a)))
}

/// `T_a'(x)`, with the removable singularity at `x = 1` filled in.
pub fn chebyshev_t_prime(a: f64, x: Complex64) -> Result<Complex64, ChebyshevError> {
    check_cut(x)?;
    if (x - 1.0).norm() < 1e-3 {
        return Ok(a * a * hyp2f1(1.0 - a, 1.0 + a, 1.5, (1.0 - x) / 2.0));
    }
    let w = w_of(x);
    let sh = (x - 1.0).sqrt() * (x + 1.0).sqrt();
    Ok(a * 0.5 * (w.powf(a) - w.powf(-a)) / sh)
}

/// Seeds from the hypergeometric series where it converges fast, closed form elsewhere.
fn seeds(a: f64, c: f64) -> (f64, f64) {
    let z = Complex64::new((1.0 - c) / 2.0, 0.0);
    if z.norm() <= 0.5 {
        (hyp2f1(-a, a, 0.5, z).re, a * a * hyp2f1(1.0 - a, 1.0 + a, 1.5, z).re)
    } else {
        let x = Complex64::new(c, 0.0);
        (
            chebyshev_t(a, x).map(|v| v.re).unwrap_or(f64::NAN),
            chebyshev_t_prime(a, x).map(|v| v.re).unwrap_or(f64::NAN),
        )
    }
}

/// Taylor coefficients of `T_a` at `c` from the Chebyshev ODE recurrence
/// `(1−c²)(n+2)(n+1)t_{n+2} = c(n+1)(2n+1)t_{n+1} + (n²−a²)t_n`.
///
/// At `c = 1` the recurrence collapses to first order. For `c > 0` the
/// forward recurrence follows a dominant parasitic solution, so long
/// expansions there lose relative accuracy roughly like `((1+c)/(1−c))^n`.
pub fn taylor_at(a: f64, c: f64, order: usize) -> Result<Series1<f64>, ChebyshevError> {
    if c <= -1.0 || !c.is_finite() {
        return Err(ChebyshevError::BadCenter(c));
    }
    let mut t = vec![0.0; order + 1];
    if c == 1.0 {
        t[0] = 1.0;
        for n in 0..order {
            let nf = n as f64;
            t[n + 1] = (a * a - nf * nf) * t[n] / ((nf + 1.0) * (2.0 * nf + 1.0));
        }
        return Ok(Series1::new(t));
    }
    let (t0, t1) = seeds(a, c);
    t[0] = t0;
    if order >= 1 {
        t[1] = t1;
    }
    for n in 0..order.saturating_sub(1) {
        let nf = n as f64;
        t[n + 2] = (c * (nf + 1.0) * (2.0 * nf + 1.0) * t[n + 1] + (nf * nf - a * a) * t[n])
            / ((1.0 - c * c) * (nf + 2.0) * (nf + 1.0));
    }
    Ok(Series1::new(t))
}
