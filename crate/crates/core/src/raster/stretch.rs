use serde::{Deserialize, Serialize};

use super::{Band, Dtype, ResponseField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StretchMode {
    /// Response magnitude, clipped at the given percentiles of `|v|`.
    AbsLinear,
    /// Signed response, clipped at the given percentiles of `v`.
    SignedLinear,
}

/// Nearest-rank percentile of sorted data: index `round((n-1)·pct/100)`.
fn percentile(sorted: &[i64], pct: f64) -> i64 {
    let idx = ((sorted.len() - 1) as f64 * pct / 100.0).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// `(v - lo)·255 / (hi - lo)` rounded to nearest, exact halves rounding down.
fn map_linear(v: i64, lo: i64, hi: i64) -> u16 {
    let v = v.clamp(lo, hi);
    let num = i128::from(v - lo) * 255;
    let den = i128::from(hi - lo);
    ((2 * num + den - 1) / (2 * den)) as u16
}

/// Maps a response field to an 8-bit display band.
///
/// Values are clipped to the `[lo_pct, hi_pct]` percentile range and mapped
/// linearly onto `0..=255`. In `AbsLinear` mode a clip range that collapses
/// (common for sparse edge maps) widens to the full `|v|` range. A field with
/// no spread at all maps to zeros.
pub fn stretch(field: &ResponseField, mode: StretchMode, lo_pct: f64, hi_pct: f64) -> Result<Band> {
    if field.is_empty() {
        return Err(Error::Raster("cannot stretch an empty field".into()));
    }
    if !(0.0..=100.0).contains(&lo_pct) || !(0.0..=100.0).contains(&hi_pct) || lo_pct >= hi_pct {
        return Err(Error::Raster(format!("percentiles must satisfy 0 <= lo < hi <= 100, got {lo_pct}/{hi_pct}")));
    }

    let values: Vec<i64> = match mode {
        StretchMode::AbsLinear => field.samples().iter().map(|&v| i64::from(v).abs()).collect(),
        StretchMode::SignedLinear => field.samples().iter().map(|&v| i64::from(v)).collect(),
    };
    let mut sorted = values.clone();
    sorted.sort_unstable();
    let (mut lo, mut hi) = (percentile(&sorted, lo_pct), percentile(&sorted, hi_pct));
    if lo == hi && mode == StretchMode::AbsLinear {
        lo = sorted[0];
        hi = sorted[sorted.len() - 1];
    }

    let samples =
        if lo == hi { vec![0; values.len()] } else { values.iter().map(|&v| map_linear(v, lo, hi)).collect() };
    Band::new(field.width(), field.height(), Dtype::U8, samples)
}
