//! Single- and multi-band rasters plus the signed response grid produced by
//! convolution.

pub mod bsq;
pub mod pgm;
mod stretch;

pub use stretch::{stretch, StretchMode};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_BANDS: usize = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U8,
    U16,
}

impl Dtype {
    pub fn max_value(self) -> u16 {
        match self {
            Dtype::U8 => u8::MAX as u16,
            Dtype::U16 => u16::MAX,
        }
    }

    pub fn bytes(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::U16 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dtype::U8 => "u8",
            Dtype::U16 => "u16",
        }
    }
}

/// One unsigned scalar channel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Band {
    width: usize,
    height: usize,
    dtype: Dtype,
    samples: Vec<u16>,
}

impl Band {
    pub fn new(width: usize, height: usize, dtype: Dtype, samples: Vec<u16>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::Raster(format!(
                "{width}x{height} band needs {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        let max = dtype.max_value();
        if let Some(s) = samples.iter().find(|&&s| s > max) {
            return Err(Error::Raster(format!("sample {s} exceeds {} range", dtype.name())));
        }
        Ok(Band { width, height, dtype, samples })
    }

    pub fn from_u8(width: usize, height: usize, samples: &[u8]) -> Result<Self> {
        Band::new(width, height, Dtype::U8, samples.iter().map(|&s| u16::from(s)).collect())
    }

    /// A band filled with `value`.
    pub fn filled(width: usize, height: usize, dtype: Dtype, value: u16) -> Result<Self> {
        Band::new(width, height, dtype, vec![value; width * height])
    }

    /// Samples `f(col, row)` over the grid.
    pub fn from_fn<F: FnMut(usize, usize) -> u16>(width: usize, height: usize, dtype: Dtype, mut f: F) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                samples.push(f(c, r));
            }
        }
        Band::new(width, height, dtype, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u16> {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, col: usize, row: usize) -> u16 {
        self.samples[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[u16] {
        &self.samples[row * self.width..(row + 1) * self.width]
    }
}

/// Equal-sized bands of one sample type, in acquisition order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultibandImage {
    bands: Vec<Band>,
    band_names: Option<Vec<String>>,
}

impl MultibandImage {
    pub fn new(bands: Vec<Band>, band_names: Option<Vec<String>>) -> Result<Self> {
        let first = bands.first().ok_or_else(|| Error::Raster("image has no bands".into()))?;
        if bands.len() > MAX_BANDS {
            return Err(Error::Raster(format!("{} bands exceeds the limit of {MAX_BANDS}", bands.len())));
        }
        for (i, b) in bands.iter().enumerate() {
            if (b.width, b.height, b.dtype) != (first.width, first.height, first.dtype) {
                return Err(Error::Dimension(format!(
                    "band {} is {}x{} {}, band 1 is {}x{} {}",
                    i + 1,
                    b.width,
                    b.height,
                    b.dtype.name(),
                    first.width,
                    first.height,
                    first.dtype.name()
                )));
            }
        }
        if let Some(names) = &band_names {
            if names.len() != bands.len() {
                return Err(Error::Raster(format!("{} band names for {} bands", names.len(), bands.len())));
            }
        }
        Ok(MultibandImage { bands, band_names })
    }

    pub fn single(band: Band) -> Self {
        MultibandImage { bands: vec![band], band_names: None }
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn band(&self, idx: usize) -> &Band {
        &self.bands[idx]
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn band_names(&self) -> Option<&[String]> {
        self.band_names.as_deref()
    }

    /// Label for band `idx`: its name if present, else `band <idx+1>`.
    pub fn band_label(&self, idx: usize) -> String {
        match &self.band_names {
            Some(n) => n[idx].clone(),
            None => format!("band {}", idx + 1),
        }
    }

    pub fn width(&self) -> usize {
        self.bands[0].width
    }

    pub fn height(&self) -> usize {
        self.bands[0].height
    }

    pub fn dtype(&self) -> Dtype {
        self.bands[0].dtype
    }

    pub fn into_bands(self) -> Vec<Band> {
        self.bands
    }
}

/// Raw signed convolution output, before any display mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseField {
    width: usize,
    height: usize,
    samples: Vec<i32>,
}

impl ResponseField {
    pub fn new(width: usize, height: usize, samples: Vec<i32>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::Raster(format!(
                "{width}x{height} field needs {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        Ok(ResponseField { width, height, samples })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[i32] {
        &self.samples
    }

    pub fn get(&self, col: usize, row: usize) -> i32 {
        self.samples[row * self.width + col]
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_validation() {
        assert!(Band::new(2, 2, Dtype::U8, vec![0, 1, 2]).is_err());
        assert!(Band::new(1, 1, Dtype::U8, vec![256]).is_err());
        assert!(Band::new(1, 1, Dtype::U16, vec![65535]).is_ok());
        let b = Band::from_fn(3, 2, Dtype::U8, |c, r| (10 * r + c) as u16).unwrap();
        assert_eq!(b.get(2, 1), 12);
        assert_eq!(b.row(1), &[10, 11, 12]);
    }

    #[test]
    fn image_validation() {
        let a = Band::filled(2, 2, Dtype::U8, 1).unwrap();
        let b = Band::filled(2, 3, Dtype::U8, 1).unwrap();
        let c = Band::filled(2, 2, Dtype::U16, 1).unwrap();
        assert!(MultibandImage::new(vec![], None).is_err());
        assert!(MultibandImage::new(vec![a.clone(), b], None).is_err());
        assert!(MultibandImage::new(vec![a.clone(), c], None).is_err());
        assert!(MultibandImage::new(vec![a.clone(); 256], None).is_err());
        assert!(MultibandImage::new(vec![a.clone(); 2], Some(vec!["x".into()])).is_err());
        let img = MultibandImage::new(vec![a; 2], None).unwrap();
        assert_eq!(img.band_label(1), "band 2");
    }
}
