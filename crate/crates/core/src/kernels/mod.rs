//! Integer convolution templates.
//!
//! Coefficients are addressed either by grid cell `(row, col)` or by
//! anchor-relative offset `(dcol, drow)`, where a negative offset points
//! toward decreasing column / row index.

mod derive;
mod text;

pub use derive::{derive_quadrant_template, OffsetStencil};
pub use text::{format_kernel, parse_kernel};

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest coefficient magnitude a kernel may hold.
pub const COEFF_LIMIT: i32 = i16::MAX as i32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Kernel {
    rows: usize,
    cols: usize,
    anchor: (usize, usize),
    coeffs: Vec<i32>,
}

/// A single `Σ k(i,j)·i^p·j^q` value over anchor-relative offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KernelMoment {
    pub p: u32,
    pub q: u32,
    pub value: i64,
}

/// A nonzero kernel cell seen from the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tap {
    pub dcol: isize,
    pub drow: isize,
    pub coeff: i32,
}

impl Kernel {
    /// Builds a kernel from a row-major coefficient grid. `anchor` is `(row, col)`.
    pub fn new(rows: usize, cols: usize, anchor: (usize, usize), coeffs: Vec<i32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Kernel("kernel must have at least one row and column".into()));
        }
        if coeffs.len() != rows * cols {
            return Err(Error::Kernel(format!(
                "expected {} coefficients for a {rows}x{cols} grid, got {}",
                rows * cols,
                coeffs.len()
            )));
        }
        if anchor.0 >= rows || anchor.1 >= cols {
            return Err(Error::Kernel(format!("anchor ({}, {}) outside {rows}x{cols} grid", anchor.0, anchor.1)));
        }
        if let Some(c) = coeffs.iter().find(|c| c.abs() > COEFF_LIMIT) {
            return Err(Error::Kernel(format!("coefficient {c} does not fit in 16 bits")));
        }
        Ok(Kernel { rows, cols, anchor, coeffs })
    }

    /// Builds a kernel from explicit rows with the anchor at the geometric centre.
    /// Both dimensions must be odd.
    pub fn centered<R: AsRef<[i32]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        if height % 2 == 0 || width % 2 == 0 {
            return Err(Error::Kernel(format!("{height}x{width} grid has no central cell; give an explicit anchor")));
        }
        let mut coeffs = Vec::with_capacity(height * width);
        for row in rows {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::Kernel("ragged rows".into()));
            }
            coeffs.extend_from_slice(row);
        }
        Kernel::new(height, width, (height / 2, width / 2), coeffs)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Anchor cell as `(row, col)`.
    pub fn anchor(&self) -> (usize, usize) {
        self.anchor
    }

    /// Row-major coefficients.
    pub fn coeffs(&self) -> &[i32] {
        &self.coeffs
    }

    pub fn get(&self, row: usize, col: usize) -> i32 {
        self.coeffs[row * self.cols + col]
    }

    /// True when the anchor is the geometric centre of an odd-sized grid.
    pub fn is_centered(&self) -> bool {
        self.rows % 2 == 1 && self.cols % 2 == 1 && self.anchor == (self.rows / 2, self.cols / 2)
    }

    /// Coefficient at an anchor-relative offset; zero outside the grid.
    pub fn at_offset(&self, dcol: isize, drow: isize) -> i32 {
        let row = self.anchor.0 as isize + drow;
        let col = self.anchor.1 as isize + dcol;
        if row < 0 || col < 0 || row >= self.rows as isize || col >= self.cols as isize {
            0
        } else {
            self.get(row as usize, col as usize)
        }
    }

    /// Nonzero cells in row-major order.
    pub fn taps(&self) -> impl Iterator<Item = Tap> + '_ {
        let (ar, ac) = (self.anchor.0 as isize, self.anchor.1 as isize);
        self.coeffs.iter().enumerate().filter(|(_, &c)| c != 0).map(move |(idx, &coeff)| Tap {
            dcol: (idx % self.cols) as isize - ac,
            drow: (idx / self.cols) as isize - ar,
            coeff,
        })
    }

    pub fn sum(&self) -> i64 {
        self.coeffs.iter().map(|&c| i64::from(c)).sum()
    }

    pub fn abs_sum(&self) -> i64 {
        self.coeffs.iter().map(|&c| i64::from(c).abs()).sum()
    }

    pub fn nonzero_count(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0).count()
    }

    /// `Σ k(i,j)·i^p·j^q` with `i = dcol`, `j = drow`. `0^0` is taken as 1.
    pub fn moment(&self, p: u32, q: u32) -> i64 {
        self.taps().map(|t| i64::from(t.coeff) * (t.dcol as i64).pow(p) * (t.drow as i64).pow(q)).sum()
    }

    /// All moments with `p + q <= max_order`, ordered by total order then `p` descending.
    pub fn moments(&self, max_order: u32) -> Vec<KernelMoment> {
        let mut out = Vec::new();
        for order in 0..=max_order {
            for q in 0..=order {
                let p = order - q;
                out.push(KernelMoment { p, q, value: self.moment(p, q) });
            }
        }
        out
    }

    /// Swaps rows and columns; the anchor follows.
    pub fn transpose(&self) -> Kernel {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                coeffs.push(self.get(r, c));
            }
        }
        Kernel { rows: self.cols, cols: self.rows, anchor: (self.anchor.1, self.anchor.0), coeffs }
    }

    /// Mirrors columns (left/right).
    pub fn flip_horizontal(&self) -> Kernel {
        let mut coeffs = self.coeffs.clone();
        for row in coeffs.chunks_mut(self.cols) {
            row.reverse();
        }
        Kernel { rows: self.rows, cols: self.cols, anchor: (self.anchor.0, self.cols - 1 - self.anchor.1), coeffs }
    }

    /// Mirrors rows (top/bottom).
    pub fn flip_vertical(&self) -> Kernel {
        let coeffs = self.coeffs.chunks(self.cols).rev().flatten().copied().collect();
        Kernel { rows: self.rows, cols: self.cols, anchor: (self.rows - 1 - self.anchor.0, self.anchor.1), coeffs }
    }

    /// Rotates the grid 180 degrees, turning correlation into convolution and back.
    pub fn rotate_180(&self) -> Kernel {
        self.flip_horizontal().flip_vertical()
    }

    /// Compares two kernels as functions of anchor-relative offset,
    /// ignoring how much zero padding either grid carries.
    pub fn same_weights(&self, other: &Kernel) -> bool {
        let covered = |k: &Kernel, o: &Kernel| k.taps().all(|t| o.at_offset(t.dcol, t.drow) == t.coeff);
        covered(self, other) && covered(other, self)
    }

    /// Invariance under all eight rotations and reflections about the anchor.
    pub fn is_d4_symmetric(&self) -> bool {
        self.same_weights(&self.transpose())
            && self.same_weights(&self.flip_horizontal())
            && self.same_weights(&self.flip_vertical())
    }
}

/// Completes a one-quadrant template into a full template by reflecting it
/// onto the other three quadrants. Reflected copies are overlaid: cells on
/// the axes shared by two copies take their common value once.
///
/// The input support must lie in the closed quadrant `dcol <= 0, drow <= 0`,
/// and the quadrant must read the same along both axes (`Q(a,b) == Q(b,a)`),
/// otherwise the copies conflict and no symmetric result exists.
pub fn symmetrize(quadrant: &Kernel) -> Result<Kernel> {
    let mut radius = 0isize;
    for t in quadrant.taps() {
        if t.dcol > 0 || t.drow > 0 {
            return Err(Error::Kernel(format!(
                "support spans more than one quadrant: nonzero at offset ({}, {})",
                t.dcol, t.drow
            )));
        }
        radius = radius.max(-t.dcol).max(-t.drow);
    }
    for t in quadrant.taps() {
        let mirrored = quadrant.at_offset(t.drow, t.dcol);
        if mirrored != t.coeff {
            return Err(Error::Kernel(format!(
                "reflected copies disagree: {} at ({}, {}) vs {} at ({}, {})",
                t.coeff, t.dcol, t.drow, mirrored, t.drow, t.dcol
            )));
        }
    }

    let side = (2 * radius + 1) as usize;
    let mut coeffs = Vec::with_capacity(side * side);
    for drow in -radius..=radius {
        for dcol in -radius..=radius {
            coeffs.push(quadrant.at_offset(-dcol.abs(), -drow.abs()));
        }
    }
    Kernel::new(side, side, (radius as usize, radius as usize), coeffs)
}

/// The 5x5 gradient-minimisation smoothing template, i.e.
/// `symmetrize(derive_quadrant_template())`.
pub fn smoothing_template() -> Kernel {
    symmetrize(&derive_quadrant_template()).expect("quadrant template is transpose-symmetric")
}

/// The classic 3x3 eight-neighbour Laplacian.
pub fn laplacian_template() -> Kernel {
    Kernel::centered(&[[-1, -1, -1], [-1, 8, -1], [-1, -1, -1]]).expect("valid 3x3 grid")
}

/// Named kernels selectable from the command line and the C API.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKernel {
    Quadrant,
    Smooth5,
    Laplacian3,
}

impl BuiltinKernel {
    pub fn kernel(self) -> Kernel {
        match self {
            BuiltinKernel::Quadrant => derive_quadrant_template(),
            BuiltinKernel::Smooth5 => smoothing_template(),
            BuiltinKernel::Laplacian3 => laplacian_template(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BuiltinKernel::Quadrant => "quadrant",
            BuiltinKernel::Smooth5 => "smooth5",
            BuiltinKernel::Laplacian3 => "laplacian3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "quadrant" => Some(BuiltinKernel::Quadrant),
            "smooth5" => Some(BuiltinKernel::Smooth5),
            "laplacian3" => Some(BuiltinKernel::Laplacian3),
            _ => None,
        }
    }
}
