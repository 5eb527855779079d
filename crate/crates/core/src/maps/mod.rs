//! The conformal map `ψ1` from the interior of `S1` onto the right half-plane.
//!
//! `ψ2 = -ψ1` is never stored. Every backend keeps the positive scalar that
//! normalizes its raw formula: `ψ1(0) = p11` when `p11 != 0`, and
//! `ψ1(0) = 0`, `ψ1'(0) > 0` otherwise.

pub mod bipolar;
pub mod chebyshev;
pub mod explicit;
pub mod fit;
pub mod smallstep;

use num_complex::Complex64;
use num_traits::Zero;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::curve::{trace_s1, CurveError, CurveSample};
use crate::scalar::{rational_to_f64, Field, Rational, Scalar};
use crate::series::{SeriesError, Series1};
use crate::walk::StepSet;

pub use bipolar::{bipolar_constants, BipolarConstants, CriticalPoint};
pub use chebyshev::{chebyshev_t, taylor_at, ChebyshevError};
pub use explicit::ExplicitMap;
pub use fit::{fit_conformal_numeric, FittedMap};
pub use smallstep::{smallstep_constants, SmallStepConstants};

/// Curve resolution used for domain membership tests.
pub const DOMAIN_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Backend {
    ExplicitRational,
    SmallStepChebyshev,
    BipolarFamily,
    FittedNumeric,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::ExplicitRational => "explicit",
            Backend::SmallStepChebyshev => "smallstep",
            Backend::BipolarFamily => "bipolar",
            Backend::FittedNumeric => "fit",
        }
    }

    pub fn parse(s: &str) -> Option<Backend> {
        match s {
            "explicit" => Some(Backend::ExplicitRational),
            "smallstep" => Some(Backend::SmallStepChebyshev),
            "bipolar" => Some(Backend::BipolarFamily),
            "fit" => Some(Backend::FittedNumeric),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("backend {backend} unavailable: {reason}")]
    BackendUnavailable { backend: &'static str, reason: String },
    #[error("model has a jump outside {{-1,0,1}}^2")]
    NotSmallStep,
    #[error("model is not in the bipolar family: {0}")]
    NotBipolarFamily(String),
    #[error("no critical point of I0 in [-1, 1)")]
    NoInteriorCriticalPoint,
    #[error("boundary residual {residual:e} above threshold")]
    IllConditioned { residual: f64 },
    #[error("point {re}+{im}i is outside the mapped domain")]
    OutsideDomain { re: f64, im: f64 },
    #[error("map produces float coefficients; the exact field cannot accept them")]
    FieldMismatch,
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Chebyshev(#[from] ChebyshevError),
}

impl MapError {
    pub fn kind(&self) -> &'static str {
        match self {
            MapError::BackendUnavailable { .. } => "BackendUnavailable",
            MapError::NotSmallStep => "NotSmallStep",
            MapError::NotBipolarFamily(_) => "NotBipolarFamily",
            MapError::NoInteriorCriticalPoint => "NoInteriorCriticalPoint",
            MapError::IllConditioned { .. } => "IllConditioned",
            MapError::OutsideDomain { .. } => "OutsideDomain",
            MapError::FieldMismatch => "FieldMismatch",
            MapError::Curve(_) => "CurveError",
            MapError::Series(_) => "SeriesError",
            MapError::Chebyshev(_) => "BranchCut",
        }
    }
}

/// Taylor coefficients of `ψ1` in whatever field the backend produces.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiSeries {
    Exact(Series1<Rational>),
    Float(Series1<f64>),
}

impl PsiSeries {
    pub fn field(&self) -> Field {
        match self {
            PsiSeries::Exact(_) => Field::Rational,
            PsiSeries::Float(_) => Field::Float,
        }
    }

    pub fn into_field<S: Scalar>(&self) -> Result<Series1<S>, MapError> {
        match self {
            PsiSeries::Exact(s) => Ok(s.map(S::from_rational)),
            PsiSeries::Float(s) => {
                let c: Option<Vec<S>> = s.coeffs().iter().map(|x| S::from_f64(*x)).collect();
                c.map(Series1::new).ok_or(MapError::FieldMismatch)
            }
        }
    }

    pub fn to_f64(&self) -> Series1<f64> {
        match self {
            PsiSeries::Exact(s) => s.to_f64_series(),
            PsiSeries::Float(s) => s.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        match self {
            PsiSeries::Exact(s) => s.to_csv(),
            PsiSeries::Float(s) => s.to_csv(),
        }
    }
}

#[derive(Debug, Clone)]
enum MapKind {
    Explicit(ExplicitMap),
    SmallStep(SmallStepConstants, f64),
    Bipolar(BipolarConstants),
    Fitted(FittedMap),
}

#[derive(Debug, Clone)]
pub struct ConformalMap {
    backend: Backend,
    kind: MapKind,
    p11: Rational,
    domain: CurveSample,
}

#[derive(Debug, Clone, Serialize)]
pub struct MapReport {
    pub backend: &'static str,
    pub normalization: String,
    pub psi_at_zero: f64,
    pub boundary_residual: f64,
}

impl ConformalMap {
    pub fn new(model: &StepSet, backend: Backend) -> Result<ConformalMap, MapError> {
        let domain = trace_s1(model, DOMAIN_POINTS)?;
        let kind = match backend {
            Backend::ExplicitRational => MapKind::Explicit(ExplicitMap::recognize(model)?),
            Backend::SmallStepChebyshev => {
                let c = smallstep_constants(model)?;
                let scale = c.normalization(model)?;
                MapKind::SmallStep(c, scale)
            }
            Backend::BipolarFamily => MapKind::Bipolar(bipolar_constants(model)?),
            Backend::FittedNumeric => MapKind::Fitted(fit_conformal_numeric(model, &domain, fit::DEFAULT_ORDER)?),
        };
        Ok(ConformalMap { backend, kind, p11: model.p11(), domain })
    }

    /// Explicit map if the model is recognized, else bipolar, else small-step, else a fit.
    pub fn auto(model: &StepSet) -> Result<ConformalMap, MapError> {
        for b in [
            Backend::ExplicitRational,
            Backend::BipolarFamily,
            Backend::SmallStepChebyshev,
            Backend::FittedNumeric,
        ] {
            match ConformalMap::new(model, b) {
                Ok(m) => return Ok(m),
                Err(MapError::BackendUnavailable { .. })
                | Err(MapError::NotSmallStep)
                | Err(MapError::NotBipolarFamily(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(MapError::BackendUnavailable { backend: "fit", reason: "no backend applies".into() })
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn domain(&self) -> &CurveSample {
        &self.domain
    }

    pub fn p11(&self) -> &Rational {
        &self.p11
    }

    /// Field in which `psi1_series` is delivered.
    pub fn native_field(&self) -> Field {
        match &self.kind {
            MapKind::Explicit(_) => Field::Rational,
            MapKind::Bipolar(b) if b.is_exact() => Field::Rational,
            _ => Field::Float,
        }
    }

    pub fn psi1_series(&self, order: usize) -> Result<PsiSeries, MapError> {
        match &self.kind {
            MapKind::Explicit(e) => Ok(PsiSeries::Exact(e.series(order))),
            MapKind::Bipolar(b) => b.series(order),
            MapKind::SmallStep(c, scale) => {
                let mut s = cauchy_coefficients(|x| c.psi_raw(x).unwrap_or(Complex64::new(f64::NAN, 0.0)), order);
                for v in s.iter_mut() {
                    *v *= scale;
                }
                s[0] = rational_to_f64(&self.p11);
                Ok(PsiSeries::Float(Series1::new(s)))
            }
            MapKind::Fitted(f) => Ok(PsiSeries::Float(f.series(order))),
        }
    }

    /// Formula value with no domain check.
    pub fn psi1_eval_unchecked(&self, x: Complex64) -> Complex64 {
        match &self.kind {
            MapKind::Explicit(e) => e.eval(x),
            MapKind::SmallStep(c, scale) => c.psi_raw(x).map(|v| v * scale).unwrap_or(Complex64::new(f64::NAN, 0.0)),
            MapKind::Bipolar(b) => b.eval(x),
            MapKind::Fitted(f) => f.eval(x),
        }
    }

    /// `ψ1(x)` for `x` in the closure of the interior, away from the corner.
    pub fn psi1_eval(&self, x: Complex64) -> Result<Complex64, MapError> {
        if !self.domain.contains_closed(x, 1e-9) {
            return Err(MapError::OutsideDomain { re: x.re, im: x.im });
        }
        Ok(self.psi1_eval_unchecked(x))
    }

    pub fn normalization(&self) -> String {
        match &self.kind {
            MapKind::Explicit(e) => crate::scalar::format_rational(e.scale()),
            MapKind::SmallStep(_, s) => crate::scalar::format_f64(*s),
            MapKind::Bipolar(_) => "1/1".into(),
            MapKind::Fitted(_) => "1/1".into(),
        }
    }

    /// `max ||π1(x)| − 1|` over curve samples away from `1`, with
    /// `π1 = (ψ − κ)/(ψ + κ)` and `κ = ψ1` at the middle of the real segment.
    pub fn boundary_residual(&self) -> f64 {
        let a = 0.5 * (self.domain.real_left_end() + 1.0);
        let kappa = self.psi1_eval_unchecked(Complex64::new(a, 0.0));
        self.domain
            .points
            .iter()
            .filter(|p| (*p - 1.0).norm() > 1e-3)
            .map(|&p| {
                let v = self.psi1_eval_unchecked(p);
                (((v - kappa) / (v + kappa)).norm() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn report(&self) -> MapReport {
        MapReport {
            backend: self.backend.name(),
            normalization: self.normalization(),
            psi_at_zero: self.psi1_eval_unchecked(Complex64::zero()).re,
            boundary_residual: self.boundary_residual(),
        }
    }
}

/// Taylor coefficients of a function analytic in the unit disk, by the
/// trapezoidal rule on a circle of radius `1 − 1/(N+2)`.
///
/// The radius keeps `r^{-N}` bounded by `e`, so roundoff stays near
/// `ε · max|f|` even though `f` blows up at the boundary.
pub fn cauchy_coefficients(f: impl Fn(Complex64) -> Complex64 + Sync, order: usize) -> Vec<f64> {
    use rayon::prelude::*;
    let r = 1.0 - 1.0 / (order as f64 + 2.0);
    let m = (64 * (order + 1)).max(256).next_power_of_two();
    let mut buf: Vec<Complex64> = (0..m)
        .into_par_iter()
        .map(|k| f(Complex64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / m as f64)))
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut buf);
    (0..=order)
        .map(|n| buf[n].re / m as f64 / r.powi(n as i32))
        .collect()
}

/// `Γ(x)` for real arguments.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}
