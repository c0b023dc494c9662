use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{Band, MultibandImage};

/// Population statistics of one band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandStats {
    pub mean: f64,
    pub stddev: f64,
    pub min: u16,
    pub max: u16,
}

fn mean_of(samples: &[u16]) -> f64 {
    // exact: u64 sums of u16 samples cannot overflow below 2^48 pixels
    samples.iter().map(|&s| u64::from(s)).sum::<u64>() as f64 / samples.len() as f64
}

pub fn band_stats(band: &Band) -> Result<BandStats> {
    let s = band.samples();
    if s.is_empty() {
        return Err(Error::Analysis("statistics of an empty band".into()));
    }
    let mean = mean_of(s);
    let var = s.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / s.len() as f64;
    Ok(BandStats {
        mean,
        stddev: var.sqrt(),
        min: *s.iter().min().expect("non-empty"),
        max: *s.iter().max().expect("non-empty"),
    })
}

/// Pearson correlation between every pair of bands. Entries involving a
/// band with zero variance are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    n: usize,
    r: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.r[i * self.n + j]
    }

    /// Bands whose rows are undefined.
    pub fn undefined_bands(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.get(i, i).is_none()).collect()
    }
}

pub fn correlation(image: &MultibandImage) -> Result<CorrelationMatrix> {
    let n = image.band_count();
    if n < 2 {
        return Err(Error::Analysis(format!("correlation needs at least 2 bands, image has {n}")));
    }
    let pixels = image.width() * image.height();
    if pixels == 0 {
        return Err(Error::Analysis("correlation of an empty image".into()));
    }
    let means: Vec<f64> = image.bands().iter().map(|b| mean_of(b.samples())).collect();

    let mut cov = vec![0.0f64; n * n];
    let mut dev = vec![0.0f64; n];
    for p in 0..pixels {
        for (b, d) in dev.iter_mut().enumerate() {
            *d = f64::from(image.band(b).samples()[p]) - means[b];
        }
        for i in 0..n {
            for j in i..n {
                cov[i * n + j] += dev[i] * dev[j];
            }
        }
    }

    let mut r = vec![None; n * n];
    for i in 0..n {
        for j in i..n {
            let (vi, vj) = (cov[i * n + i], cov[j * n + j]);
            if vi > 0.0 && vj > 0.0 {
                let v = if i == j { 1.0 } else { (cov[i * n + j] / (vi.sqrt() * vj.sqrt())).clamp(-1.0, 1.0) };
                r[i * n + j] = Some(v);
                r[j * n + i] = Some(v);
            }
        }
    }
    Ok(CorrelationMatrix { n, r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Dtype;

    #[test]
    fn constant_band() {
        let s = band_stats(&Band::filled(4, 3, Dtype::U8, 9).unwrap()).unwrap();
        assert_eq!((s.mean, s.stddev, s.min, s.max), (9.0, 0.0, 9, 9));
    }

    #[test]
    fn two_level_band() {
        let s = band_stats(&Band::from_u8(2, 2, &[0, 0, 255, 255]).unwrap()).unwrap();
        assert_eq!(s.mean, 127.5);
        assert_eq!(s.stddev, 127.5);
    }

    #[test]
    fn empty_band_is_error() {
        assert!(band_stats(&Band::new(0, 0, Dtype::U8, vec![]).unwrap()).is_err());
    }

    #[test]
    fn identical_and_inverted_bands() {
        let a = Band::from_u8(3, 2, &[1, 5, 9, 2, 200, 31]).unwrap();
        let inv = Band::new(3, 2, Dtype::U8, a.samples().iter().map(|&v| 255 - v).collect()).unwrap();
        let img = MultibandImage::new(vec![a.clone(), a, inv], None).unwrap();
        let c = correlation(&img).unwrap();
        assert!((c.get(0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((c.get(0, 2).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(c.get(2, 2), Some(1.0));
        assert_eq!(c.get(1, 2), c.get(2, 1));
    }

    #[test]
    fn zero_variance_flagged() {
        let a = Band::from_u8(2, 2, &[1, 2, 3, 4]).unwrap();
        let k = Band::filled(2, 2, Dtype::U8, 7).unwrap();
        let c = correlation(&MultibandImage::new(vec![a, k], None).unwrap()).unwrap();
        assert_eq!(c.get(0, 1), None);
        assert_eq!(c.get(1, 1), None);
        assert_eq!(c.get(0, 0), Some(1.0));
        assert_eq!(c.undefined_bands(), vec![1]);
    }

    #[test]
    fn single_band_is_error() {
        let img = MultibandImage::single(Band::filled(2, 2, Dtype::U8, 1).unwrap());
        assert!(correlation(&img).is_err());
    }
}
