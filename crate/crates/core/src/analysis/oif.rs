//! Optimum Index Factor: for each band triple, the summed standard deviation
//! over the summed absolute pairwise correlation. High scores mark triples
//! that carry much variance with little redundancy.

use std::cmp::Ordering;

use serde::Serialize;

use super::stats::{band_stats, correlation, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::raster::MultibandImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OifScore {
    /// Zero-based band indices, ascending.
    pub triple: [usize; 3],
    /// `+inf` when all three pairwise correlations are exactly zero.
    pub score: f64,
}

impl OifScore {
    /// One-based band numbers, as bands are usually named.
    pub fn band_numbers(&self) -> [usize; 3] {
        self.triple.map(|b| b + 1)
    }
}

/// Scores every triple from precomputed standard deviations and correlations,
/// sorted by descending score, ties in lexicographic triple order.
pub fn score_triples(stddevs: &[f64], corr: &CorrelationMatrix) -> Result<Vec<OifScore>> {
    let n = stddevs.len();
    if corr.len() != n {
        return Err(Error::Dimension(format!("{n} deviations for a {}-band correlation matrix", corr.len())));
    }
    let r = |i: usize, j: usize| {
        corr.get(i, j)
            .map(f64::abs)
            .ok_or_else(|| Error::Analysis(format!("correlation of bands {} and {} undefined", i + 1, j + 1)))
    };
    let mut scores = Vec::with_capacity(n * n.saturating_sub(1) * n.saturating_sub(2) / 6);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let num = stddevs[i] + stddevs[j] + stddevs[k];
                let den = r(i, j)? + r(i, k)? + r(j, k)?;
                let score = if den > 0.0 { num / den } else { f64::INFINITY };
                scores.push(OifScore { triple: [i, j, k], score });
            }
        }
    }
    scores.sort_by(|a, b| match b.score.total_cmp(&a.score) {
        Ordering::Equal => a.triple.cmp(&b.triple),
        o => o,
    });
    Ok(scores)
}

pub fn oif_rank(image: &MultibandImage) -> Result<Vec<OifScore>> {
    let n = image.band_count();
    if n < 3 {
        return Err(Error::Analysis(format!("OIF needs at least 3 bands, image has {n}")));
    }
    let stddevs = image.bands().iter().map(|b| band_stats(b).map(|s| s.stddev)).collect::<Result<Vec<_>>>()?;
    if let Some(b) = stddevs.iter().position(|&s| s == 0.0) {
        return Err(Error::ZeroVariance { name: image.band_label(b) });
    }
    let corr = correlation(image)?;
    score_triples(&stddevs, &corr)
}
