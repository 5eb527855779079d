//! Closed-form maps for the simple random walk and the king walk.

use num_complex::Complex64;

use crate::scalar::{int, rat, rational_to_f64, Rational};
use crate::series::Series1;
use crate::walk::{bundled, StepSet};

use super::MapError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplicitModel {
    /// `x/(1−x)²`.
    Simple,
    /// `(x²+4x+1)/(1−x)²`, scaled by `1/8`.
    King,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitMap {
    model: ExplicitModel,
    scale: Rational,
}

impl ExplicitMap {
    pub fn recognize(model: &StepSet) -> Result<ExplicitMap, MapError> {
        let srw = StepSet::validate(&bundled::srw(), false).map(|m| m.steps().clone());
        let king = StepSet::validate(&bundled::king(), false).map(|m| m.steps().clone());
        if srw.as_ref() == Ok(model.steps()) {
            Ok(ExplicitMap { model: ExplicitModel::Simple, scale: int(1) })
        } else if king.as_ref() == Ok(model.steps()) {
            Ok(ExplicitMap { model: ExplicitModel::King, scale: rat(1, 8) })
        } else {
            Err(MapError::BackendUnavailable {
                backend: "explicit",
                reason: "closed forms exist only for the simple and king walks".into(),
            })
        }
    }

    pub fn model(&self) -> ExplicitModel {
        self.model
    }

    pub fn scale(&self) -> &Rational {
        &self.scale
    }

    fn numerator(&self) -> [i64; 3] {
        match self.model {
            ExplicitModel::Simple => [0, 1, 0],
            ExplicitModel::King => [1, 4, 1],
        }
    }

    pub fn series(&self, order: usize) -> Series1<Rational> {
        // [x^n] (c0 + c1 x + c2 x²)/(1−x)² = c0(n+1) + c1 n + c2 (n−1)
        let [c0, c1, c2] = self.numerator();
        Series1::new(
            (0..=order as i64)
                .map(|n| int(c0 * (n + 1) + c1 * n + c2 * (n - 1).max(0)) * &self.scale)
                .collect(),
        )
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        let [c0, c1, c2] = self.numerator();
        let num = c0 as f64 + x * (c1 as f64 + x * c2 as f64);
        num / ((1.0 - x) * (1.0 - x)) * rational_to_f64(&self.scale)
    }
}
