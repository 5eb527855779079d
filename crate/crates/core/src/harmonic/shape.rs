use serde::Serialize;

use crate::scalar::{rat, Scalar};

use super::{negligible, HarmonicTable};

/// `(h + hᵀ)/2` and `(h − hᵀ)/2`.
pub fn decompose_symmetry<S: Scalar>(table: &HarmonicTable<S>) -> (HarmonicTable<S>, HarmonicTable<S>) {
    let half = S::from_rational(&rat(1, 2));
    let w = table.window();
    let sym = HarmonicTable::from_fn(w, |i, j| (table.at(i, j).clone() + table.at(j, i).clone()) * half.clone());
    let anti = HarmonicTable::from_fn(w, |i, j| (table.at(i, j).clone() - table.at(j, i).clone()) * half.clone());
    (sym, anti)
}

#[derive(Debug, Clone, Serialize)]
pub struct SignGrid {
    pub window: usize,
    /// Row-major, `(i,j)` at `(i−1)·W + (j−1)`, after normalization.
    pub signs: Vec<i8>,
    /// Sign of the first nonzero entry; the grid is divided by it.
    pub normalization: i8,
    pub all_positive: bool,
    pub negative_count: usize,
    /// Sign changes along each row `i`, zeros skipped.
    pub row_sign_changes: Vec<usize>,
}

fn sign_of<S: Scalar>(v: &S, scale: f64) -> i8 {
    if negligible(v, scale, 1e-12) {
        0
    } else {
        v.sign()
    }
}

fn changes(seq: impl Iterator<Item = i8>) -> usize {
    let mut last = 0;
    let mut n = 0;
    for s in seq.filter(|s| *s != 0) {
        if last != 0 && s != last {
            n += 1;
        }
        last = s;
    }
    n
}

pub fn sign_grid<S: Scalar>(table: &HarmonicTable<S>) -> SignGrid {
    let w = table.window();
    let scale = table.max_abs();
    let raw: Vec<i8> = table.values().iter().map(|v| sign_of(v, scale)).collect();
    let normalization = raw.iter().copied().find(|s| *s != 0).unwrap_or(1);
    let signs: Vec<i8> = raw.iter().map(|s| s * normalization).collect();
    let row_sign_changes = (0..w).map(|r| changes(signs[r * w..(r + 1) * w].iter().copied())).collect();
    SignGrid {
        window: w,
        all_positive: signs.iter().all(|s| *s > 0),
        negative_count: signs.iter().filter(|s| **s < 0).count(),
        signs,
        normalization,
        row_sign_changes,
    }
}

impl SignGrid {
    pub fn at(&self, i: usize, j: usize) -> i8 {
        self.signs[(i - 1) * self.window + (j - 1)]
    }

    /// Binary graymap: row `i−1`, column `j−1`; 0, 128, 255 for −, 0, +.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.window, self.window).into_bytes();
        out.extend(self.signs.iter().map(|s| match s {
            -1 => 0u8,
            0 => 128,
            _ => 255,
        }));
        out
    }

    /// `i,j,sign`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,sign\n");
        for i in 1..=self.window {
            for j in 1..=self.window {
                out.push_str(&format!("{i},{j},{}\n", self.at(i, j)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RaySigns {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl RaySigns {
    /// `Some(s)` when every sampled entry has sign `s`.
    pub fn uniform(&self) -> Option<i8> {
        match (self.positive, self.negative, self.zero) {
            (p, 0, 0) if p > 0 => Some(1),
            (0, n, 0) if n > 0 => Some(-1),
            (0, 0, z) if z > 0 => Some(0),
            _ => None,
        }
    }
}

/// Signs of `h(i, round(x·i))` over the outer half of the window.
pub fn ray_sign<S: Scalar>(table: &HarmonicTable<S>, x: f64) -> RaySigns {
    let w = table.window();
    let scale = table.max_abs();
    let mut r = RaySigns { positive: 0, negative: 0, zero: 0 };
    for i in 1..=w {
        let j = (x * i as f64).round() as usize;
        if j < 1 || j > w || 2 * i.max(j) < w {
            continue;
        }
        match sign_of(table.at(i, j), scale) {
            1 => r.positive += 1,
            -1 => r.negative += 1,
            _ => r.zero += 1,
        }
    }
    r
}

/// Sign changes of `h` along the lattice points nearest the quarter circle of radius `r`.
pub fn arc_sign_changes<S: Scalar>(table: &HarmonicTable<S>, r: f64) -> usize {
    let w = table.window();
    let scale = table.max_abs();
    let steps = (8.0 * r).ceil() as usize + 16;
    let mut prev = (0, 0);
    let seq = (1..steps).filter_map(|k| {
        let phi = std::f64::consts::FRAC_PI_2 * k as f64 / steps as f64;
        let (i, j) = ((r * phi.cos()).round() as usize, (r * phi.sin()).round() as usize);
        if i < 1 || j < 1 || i > w || j > w || (i, j) == prev {
            return None;
        }
        prev = (i, j);
        Some(sign_of(table.at(i, j), scale))
    });
    changes(seq.collect::<Vec<_>>().into_iter())
}
