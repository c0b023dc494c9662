//! Backward finite differences on a unit-spaced grid, combined into the
//! second-order operator `f_xx + 2 f_xy + f_yy` whose discrete form is the
//! one-quadrant smoothing template.

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use super::Kernel;

/// A sparse linear functional over grid samples, keyed by `(dcol, drow)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OffsetStencil {
    weights: BTreeMap<(isize, isize), i32>,
}

impl OffsetStencil {
    pub fn from_weights(entries: &[((isize, isize), i32)]) -> Self {
        let mut s = OffsetStencil::default();
        for &(offset, w) in entries {
            s.accumulate(offset, w);
        }
        s
    }

    /// The sample itself, `f(x_n, y_m)`.
    pub fn identity() -> Self {
        Self::from_weights(&[((0, 0), 1)])
    }

    /// `f(x_n, y_m) - f(x_{n-1}, y_m)`
    pub fn backward_x() -> Self {
        Self::from_weights(&[((0, 0), 1), ((-1, 0), -1)])
    }

    /// `f(x_n, y_m) - f(x_n, y_{m-1})`
    pub fn backward_y() -> Self {
        Self::from_weights(&[((0, 0), 1), ((0, -1), -1)])
    }

    /// `f(x_n) - 2 f(x_{n-1}) + f(x_{n-2})` along x.
    pub fn second_x() -> Self {
        Self::from_weights(&[((0, 0), 1), ((-1, 0), -2), ((-2, 0), 1)])
    }

    /// `f(y_m) - 2 f(y_{m-1}) + f(y_{m-2})` along y.
    pub fn second_y() -> Self {
        Self::from_weights(&[((0, 0), 1), ((0, -1), -2), ((0, -2), 1)])
    }

    /// Mixed backward difference for `d2f/dxdy`.
    pub fn mixed_xy() -> Self {
        Self::from_weights(&[((0, 0), 1), ((-1, 0), -1), ((0, -1), -1), ((-1, -1), 1)])
    }

    fn accumulate(&mut self, offset: (isize, isize), w: i32) {
        let e = self.weights.entry(offset).or_insert(0);
        *e += w;
        if *e == 0 {
            self.weights.remove(&offset);
        }
    }

    /// Applies `other` and then `self`: the result reads
    /// `Σ a(u)·b(v)·f(p + u + v)`.
    pub fn compose(&self, other: &OffsetStencil) -> OffsetStencil {
        let mut out = OffsetStencil::default();
        for (&(ac, ar), &aw) in &self.weights {
            for (&(bc, br), &bw) in &other.weights {
                out.accumulate((ac + bc, ar + br), aw * bw);
            }
        }
        out
    }

    pub fn weight(&self, dcol: isize, drow: isize) -> i32 {
        self.weights.get(&(dcol, drow)).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = ((isize, isize), i32)> + '_ {
        self.weights.iter().map(|(&k, &v)| (k, v))
    }

    /// Evaluates the functional on a sampled field at `(col, row)`.
    pub fn apply<F: Fn(isize, isize) -> i64>(&self, f: F, col: isize, row: isize) -> i64 {
        self.entries().map(|((dc, dr), w)| i64::from(w) * f(col + dc, row + dr)).sum()
    }

    /// Lays the stencil out on the smallest grid covering its support and the
    /// anchor.
    pub fn to_kernel(&self) -> Kernel {
        let (mut min_c, mut max_c, mut min_r, mut max_r) = (0isize, 0isize, 0isize, 0isize);
        for &(c, r) in self.weights.keys() {
            min_c = min_c.min(c);
            max_c = max_c.max(c);
            min_r = min_r.min(r);
            max_r = max_r.max(r);
        }
        let cols = (max_c - min_c + 1) as usize;
        let rows = (max_r - min_r + 1) as usize;
        let mut coeffs = vec![0; rows * cols];
        for (&(c, r), &w) in &self.weights {
            coeffs[(r - min_r) as usize * cols + (c - min_c) as usize] = w;
        }
        Kernel::new(rows, cols, ((-min_r) as usize, (-min_c) as usize), coeffs)
            .expect("stencil weights stay within 16 bits")
    }
}

impl Add for &OffsetStencil {
    type Output = OffsetStencil;

    fn add(self, rhs: &OffsetStencil) -> OffsetStencil {
        let mut out = self.clone();
        for (&k, &w) in &rhs.weights {
            out.accumulate(k, w);
        }
        out
    }
}

impl Mul<&OffsetStencil> for i32 {
    type Output = OffsetStencil;

    fn mul(self, rhs: &OffsetStencil) -> OffsetStencil {
        let mut out = OffsetStencil::default();
        for (&k, &w) in &rhs.weights {
            out.accumulate(k, self * w);
        }
        out
    }
}

/// Substitutes the backward second differences into
/// `f_xx + 2 f_xy + f_yy` and returns the resulting 3x3 template.
///
/// The anchor sits at the bottom-right cell so that all support lies at
/// non-positive offsets:
///
/// ```text
/// 0  0  1
/// 0  2 -4
/// 1 -4  4   <- anchor is the 4
/// ```
pub fn derive_quadrant_template() -> Kernel {
    let xx = OffsetStencil::second_x();
    let yy = OffsetStencil::second_y();
    let xy = 2 * &OffsetStencil::mixed_xy();
    (&(&xx + &xy) + &yy).to_kernel()
}
