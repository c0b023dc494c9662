//! Exact integer correlation of a kernel over bands.
//!
//! `out(r, c) = Σ k(i, j) · in(r + j, c + i)` over anchor-relative offsets
//! `(i, j) = (dcol, drow)`. The template is applied as printed, without the
//! 180° flip of textbook convolution; use [`Kernel::rotate_180`] for that.
//!
//! Work is split into horizontal tiles of `tile_rows` rows handed out to
//! `workers` threads. Every output pixel is computed by the same sequence of
//! integer operations whatever the split, so results are bit-identical.

use std::num::NonZeroUsize;
use std::str::FromStr;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::raster::{Band, MultibandImage, ResponseField};

/// How reads outside the band are answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Clamp to the nearest edge sample.
    #[default]
    Replicate,
    /// Mirror about the edge, repeating the edge sample (`b a | a b c`).
    Reflect,
    /// Treat outside samples as 0.
    Zero,
}

impl BoundaryMode {
    /// Maps a possibly out-of-range coordinate onto `0..len`, or `None` for a
    /// zero read. `len` must be nonzero.
    #[inline]
    pub fn resolve(self, idx: isize, len: usize) -> Option<usize> {
        let n = len as isize;
        if (0..n).contains(&idx) {
            return Some(idx as usize);
        }
        match self {
            BoundaryMode::Replicate => Some(idx.clamp(0, n - 1) as usize),
            BoundaryMode::Reflect => {
                let m = idx.rem_euclid(2 * n);
                Some(if m < n { m } else { 2 * n - 1 - m } as usize)
            }
            BoundaryMode::Zero => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryMode::Replicate => "replicate",
            BoundaryMode::Reflect => "reflect",
            BoundaryMode::Zero => "zero",
        }
    }
}

impl FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replicate" => Ok(BoundaryMode::Replicate),
            "reflect" => Ok(BoundaryMode::Reflect),
            "zero" => Ok(BoundaryMode::Zero),
            other => Err(Error::Usage(format!("unknown boundary mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvolveOptions {
    pub workers: usize,
    pub tile_rows: usize,
}

impl Default for ConvolveOptions {
    fn default() -> Self {
        ConvolveOptions { workers: thread::available_parallelism().map_or(1, NonZeroUsize::get), tile_rows: 64 }
    }
}

impl ConvolveOptions {
    pub fn single_threaded() -> Self {
        ConvolveOptions { workers: 1, ..Default::default() }
    }

    pub fn with_workers(workers: usize) -> Self {
        ConvolveOptions { workers, ..Default::default() }
    }
}

/// Taps sharing one row offset.
struct RowTaps {
    drow: isize,
    cols: Vec<(isize, i32)>,
}

fn group_taps(kernel: &Kernel) -> Vec<RowTaps> {
    let mut groups: Vec<RowTaps> = Vec::new();
    for t in kernel.taps() {
        match groups.last_mut() {
            Some(g) if g.drow == t.drow => g.cols.push((t.dcol, t.coeff)),
            _ => groups.push(RowTaps { drow: t.drow, cols: vec![(t.dcol, t.coeff)] }),
        }
    }
    groups
}

fn check_inputs(band: &Band, kernel: &Kernel) -> Result<()> {
    if band.is_empty() {
        return Err(Error::Convolve(format!("band is empty ({}x{})", band.width(), band.height())));
    }
    let worst = kernel.abs_sum() * i64::from(band.dtype().max_value());
    if worst > i64::from(i32::MAX) {
        return Err(Error::Convolve(format!(
            "kernel with absolute sum {} can overflow 32-bit accumulation on {} samples",
            kernel.abs_sum(),
            band.dtype().name()
        )));
    }
    Ok(())
}

fn convolve_row(band: &Band, groups: &[RowTaps], boundary: BoundaryMode, r: usize, out: &mut [i32]) {
    let w = band.width();
    out.fill(0);
    for g in groups {
        let Some(src_r) = boundary.resolve(r as isize + g.drow, band.height()) else {
            continue;
        };
        let src = band.row(src_r);
        for &(dcol, k) in &g.cols {
            // columns whose read c + dcol stays inside the row
            let c0 = (-dcol).clamp(0, w as isize) as usize;
            let c1 = (w as isize - dcol).clamp(0, w as isize) as usize;
            if c0 < c1 {
                let s0 = (c0 as isize + dcol) as usize;
                for (o, &s) in out[c0..c1].iter_mut().zip(&src[s0..s0 + (c1 - c0)]) {
                    *o += k * i32::from(s);
                }
            }
            for c in (0..c0.min(w)).chain(c1.max(c0)..w) {
                if let Some(sc) = boundary.resolve(c as isize + dcol, w) {
                    out[c] += k * i32::from(src[sc]);
                }
            }
        }
    }
}

pub fn convolve(band: &Band, kernel: &Kernel, boundary: BoundaryMode) -> Result<ResponseField> {
    convolve_with(band, kernel, boundary, &ConvolveOptions::default())
}

pub fn convolve_with(
    band: &Band,
    kernel: &Kernel,
    boundary: BoundaryMode,
    opts: &ConvolveOptions,
) -> Result<ResponseField> {
    check_inputs(band, kernel)?;
    let (w, h) = (band.width(), band.height());
    let groups = group_taps(kernel);
    let tile_rows = opts.tile_rows.max(1);
    let mut out = vec![0i32; w * h];

    let run_tile = |first_row: usize, tile: &mut [i32]| {
        for (i, row) in tile.chunks_mut(w).enumerate() {
            convolve_row(band, &groups, boundary, first_row + i, row);
        }
    };

    let tiles: Vec<(usize, &mut [i32])> =
        out.chunks_mut(tile_rows * w).enumerate().map(|(t, s)| (t * tile_rows, s)).collect();
    let workers = opts.workers.clamp(1, tiles.len());
    if workers == 1 {
        for (r0, tile) in tiles {
            run_tile(r0, tile);
        }
    } else {
        let mut buckets: Vec<Vec<(usize, &mut [i32])>> = (0..workers).map(|_| Vec::new()).collect();
        for (i, tile) in tiles.into_iter().enumerate() {
            buckets[i % workers].push(tile);
        }
        thread::scope(|s| {
            let run_tile = &run_tile;
            let mut buckets = buckets.into_iter();
            let local = buckets.next().expect("at least one bucket");
            for bucket in buckets {
                s.spawn(move || {
                    for (r0, tile) in bucket {
                        run_tile(r0, tile);
                    }
                });
            }
            for (r0, tile) in local {
                run_tile(r0, tile);
            }
        });
    }

    ResponseField::new(w, h, out)
}

/// Convolves every band, keeping band order.
pub fn convolve_image(image: &MultibandImage, kernel: &Kernel, boundary: BoundaryMode) -> Result<Vec<ResponseField>> {
    convolve_image_with(image, kernel, boundary, &ConvolveOptions::default())
}

pub fn convolve_image_with(
    image: &MultibandImage,
    kernel: &Kernel,
    boundary: BoundaryMode,
    opts: &ConvolveOptions,
) -> Result<Vec<ResponseField>> {
    image.bands().iter().map(|b| convolve_with(b, kernel, boundary, opts)).collect()
}
