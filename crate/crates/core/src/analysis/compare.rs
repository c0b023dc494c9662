//! Side-by-side statistics of two operator responses over the same scene.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::ResponseField;

pub const HISTOGRAM_BINS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSummary {
    /// Mean of `|v|`.
    pub mean_abs: f64,
    /// Population standard deviation of `|v|`.
    pub stddev_abs: f64,
    pub max_abs: u32,
    /// Fraction of pixels with `|v| > threshold`.
    pub edge_density: f64,
    /// Pixel counts per log-spaced magnitude bin; edges in the report.
    pub histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub width: usize,
    pub height: usize,
    pub threshold: f64,
    /// `HISTOGRAM_BINS + 1` magnitude edges shared by both histograms:
    /// `(M + 1)^(k / 32) - 1` where `M` is the largest magnitude in either field.
    pub histogram_edges: Vec<f64>,
    pub a: FieldSummary,
    pub b: FieldSummary,
    /// Pearson correlation of `|a|` and `|b|`; `None` when either is constant.
    pub abs_correlation: Option<f64>,
    /// Fraction of pixels where `a` and `b` have the same sign (zero counts as its own sign).
    pub sign_agreement: f64,
}

fn bin_of(mag: u32, log_top: f64) -> usize {
    if log_top == 0.0 {
        return 0;
    }
    let b = (HISTOGRAM_BINS as f64 * (f64::from(mag) + 1.0).ln() / log_top) as usize;
    b.min(HISTOGRAM_BINS - 1)
}

fn summarize(mags: &[u32], threshold: f64, log_top: f64) -> FieldSummary {
    let n = mags.len() as f64;
    let mean = mags.iter().map(|&m| f64::from(m)).sum::<f64>() / n;
    let var = mags.iter().map(|&m| (f64::from(m) - mean).powi(2)).sum::<f64>() / n;
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    for &m in mags {
        histogram[bin_of(m, log_top)] += 1;
    }
    FieldSummary {
        mean_abs: mean,
        stddev_abs: var.sqrt(),
        max_abs: mags.iter().copied().max().unwrap_or(0),
        edge_density: mags.iter().filter(|&&m| f64::from(m) > threshold).count() as f64 / n,
        histogram,
    }
}

fn pearson(x: &[u32], y: &[u32]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let my = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (f64::from(a) - mx, f64::from(b) - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn compare_responses(a: &ResponseField, b: &ResponseField, threshold: f64) -> Result<ComparisonReport> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::Dimension(format!(
            "fields are {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if a.is_empty() {
        return Err(Error::Analysis("cannot compare empty fields".into()));
    }
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::Analysis(format!("threshold must be positive, got {threshold}")));
    }

    let ma: Vec<u32> = a.samples().iter().map(|v| v.unsigned_abs()).collect();
    let mb: Vec<u32> = b.samples().iter().map(|v| v.unsigned_abs()).collect();
    let top = ma.iter().chain(&mb).copied().max().unwrap_or(0);
    let log_top = (f64::from(top) + 1.0).ln();
    let histogram_edges = (0..=HISTOGRAM_BINS)
        .map(|k| {
            if k == HISTOGRAM_BINS {
                f64::from(top)
            } else {
                (log_top * k as f64 / HISTOGRAM_BINS as f64).exp() - 1.0
            }
        })
        .collect();

    let agree = a.samples().iter().zip(b.samples()).filter(|(x, y)| x.signum() == y.signum()).count();

    Ok(ComparisonReport {
        width: a.width(),
        height: a.height(),
        threshold,
        histogram_edges,
        a: summarize(&ma, threshold, log_top),
        b: summarize(&mb, threshold, log_top),
        abs_correlation: pearson(&ma, &mb),
        sign_agreement: agree as f64 / ma.len() as f64,
    })
}
