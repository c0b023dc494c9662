//! Parallelepiped (box) classification.
//!
//! Each class is an axis-aligned box of closed per-feature intervals. A pixel
//! takes the first class, in list order, whose box contains it; pixels inside
//! no box stay unclassified (label 0).

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Band, Dtype, MultibandImage, ResponseField};

/// One per-pixel feature plane with the range its values may take.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureLayer {
    pub name: String,
    pub values: Vec<i32>,
    pub min: i32,
    pub max: i32,
}

/// Co-registered feature planes fed to the classifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureStack {
    width: usize,
    height: usize,
    layers: Vec<FeatureLayer>,
}

impl FeatureStack {
    pub fn new(width: usize, height: usize, layers: Vec<FeatureLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Analysis("feature stack has no layers".into()));
        }
        for l in &layers {
            if l.values.len() != width * height {
                return Err(Error::Dimension(format!(
                    "feature {} has {} values for a {width}x{height} grid",
                    l.name,
                    l.values.len()
                )));
            }
        }
        Ok(FeatureStack { width, height, layers })
    }

    /// Raw band samples, bounded by the dtype range.
    pub fn from_image(image: &MultibandImage) -> Self {
        let max = i32::from(image.dtype().max_value());
        let layers = image
            .bands()
            .iter()
            .enumerate()
            .map(|(i, b)| FeatureLayer {
                name: image.band_label(i),
                values: b.samples().iter().map(|&s| i32::from(s)).collect(),
                min: 0,
                max,
            })
            .collect();
        FeatureStack { width: image.width(), height: image.height(), layers }
    }

    /// Response magnitudes `|v|`.
    pub fn from_responses(fields: &[ResponseField]) -> Result<Self> {
        let first = fields.first().ok_or_else(|| Error::Analysis("no response fields".into()))?;
        let layers = fields
            .iter()
            .enumerate()
            .map(|(i, f)| FeatureLayer {
                name: format!("response {}", i + 1),
                values: f.samples().iter().map(|v| v.saturating_abs()).collect(),
                min: 0,
                max: i32::MAX,
            })
            .collect();
        FeatureStack::new(first.width(), first.height(), layers)
    }

    /// Layers of `self` followed by layers of `other`.
    pub fn concat(mut self, other: FeatureStack) -> Result<Self> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Dimension("cannot stack features of different sizes".into()));
        }
        self.layers.extend(other.layers);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn layers(&self) -> &[FeatureLayer] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    fn value(&self, layer: usize, idx: usize) -> i32 {
        self.layers[layer].values[idx]
    }
}

/// Which planes to classify on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    Raw,
    /// Magnitude of the smoothing-template response, per band.
    #[default]
    Smoothed,
    /// Raw bands followed by smoothed magnitudes.
    Both,
}

impl FromStr for FeatureSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(FeatureSource::Raw),
            "smoothed" => Ok(FeatureSource::Smoothed),
            "both" => Ok(FeatureSource::Both),
            other => Err(Error::Usage(format!("unknown feature source {other:?}"))),
        }
    }
}

/// A training region: pixel coordinates `(col, row)` of one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roi {
    pub name: String,
    pub pixels: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrainingMode {
    /// Box spans the per-feature extrema of the training pixels.
    MinMax,
    /// Box spans `mean ± k·σ` (population σ), clamped to the feature range.
    MeanSigma(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub name: String,
    /// Closed `[lo, hi]` interval per feature.
    pub bounds: Vec<(f64, f64)>,
}

impl ClassSpec {
    pub fn new(name: impl Into<String>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        let name = name.into();
        if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi) {
            return Err(Error::Analysis(format!("class {name}: interval [{lo}, {hi}] is empty")));
        }
        Ok(ClassSpec { name, bounds })
    }

    pub fn contains(&self, values: impl IntoIterator<Item = i32>) -> bool {
        self.bounds.iter().zip(values).all(|(&(lo, hi), v)| {
            let v = f64::from(v);
            lo <= v && v <= hi
        })
    }
}

pub fn fit_classes(features: &FeatureStack, rois: &[Roi], mode: TrainingMode) -> Result<Vec<ClassSpec>> {
    if let TrainingMode::MeanSigma(k) = mode {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::Analysis(format!("sigma multiplier must be finite and non-negative, got {k}")));
        }
    }
    rois.iter()
        .map(|roi| {
            if roi.pixels.is_empty() {
                return Err(Error::Analysis(format!("training region {} is empty", roi.name)));
            }
            let mut idx = Vec::with_capacity(roi.pixels.len());
            for &(c, r) in &roi.pixels {
                if c >= features.width || r >= features.height {
                    return Err(Error::Analysis(format!(
                        "training region {}: pixel ({c}, {r}) outside {}x{} image",
                        roi.name, features.width, features.height
                    )));
                }
                idx.push(r * features.width + c);
            }
            let bounds = features
                .layers
                .iter()
                .map(|layer| {
                    let vals = idx.iter().map(|&i| layer.values[i]);
                    match mode {
                        TrainingMode::MinMax => {
                            let lo = vals.clone().min().expect("non-empty");
                            let hi = vals.max().expect("non-empty");
                            (f64::from(lo), f64::from(hi))
                        }
                        TrainingMode::MeanSigma(k) => {
                            let n = idx.len() as f64;
                            let mean = vals.clone().map(f64::from).sum::<f64>() / n;
                            let var = vals.map(|v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
                            let half = k * var.sqrt();
                            let (min, max) = (f64::from(layer.min), f64::from(layer.max));
                            ((mean - half).clamp(min, max), (mean + half).clamp(min, max))
                        }
                    }
                })
                .collect();
            ClassSpec::new(roi.name.clone(), bounds)
        })
        .collect()
}

/// Per-pixel labels; 0 means unclassified, `k` the k-th class (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationMap {
    width: usize,
    height: usize,
    labels: Vec<u16>,
}

impl ClassificationMap {
    pub fn new(width: usize, height: usize, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::Dimension(format!("{} labels for a {width}x{height} map", labels.len())));
        }
        Ok(ClassificationMap { width, height, labels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn get(&self, col: usize, row: usize) -> u16 {
        self.labels[row * self.width + col]
    }

    pub fn max_label(&self) -> u16 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// 8-bit band when every label fits, 16-bit otherwise.
    pub fn to_band(&self) -> Band {
        let dtype = if self.max_label() <= 255 { Dtype::U8 } else { Dtype::U16 };
        Band::new(self.width, self.height, dtype, self.labels.clone()).expect("labels fit dtype")
    }

    pub fn from_band(band: &Band) -> Self {
        ClassificationMap { width: band.width(), height: band.height(), labels: band.samples().to_vec() }
    }
}

pub fn classify(features: &FeatureStack, specs: &[ClassSpec]) -> Result<ClassificationMap> {
    if let Some(s) = specs.iter().find(|s| s.bounds.len() != features.layer_count()) {
        return Err(Error::Dimension(format!(
            "class {} has {} intervals, features have {} layers",
            s.name,
            s.bounds.len(),
            features.layer_count()
        )));
    }
    if specs.len() > usize::from(u16::MAX) {
        return Err(Error::Analysis(format!("{} classes exceed the label range", specs.len())));
    }
    let n = features.width * features.height;
    let layers = features.layer_count();
    let labels = (0..n)
        .map(|p| {
            specs.iter().position(|s| s.contains((0..layers).map(|l| features.value(l, p)))).map_or(0, |i| i as u16 + 1)
        })
        .collect();
    ClassificationMap::new(features.width, features.height, labels)
}

/// Confusion counts over pixels with a nonzero truth label.
///
/// `counts[t - 1][p]` is the number of pixels of true class `t` predicted as
/// `p`; column 0 collects pixels left unclassified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
    pub correct: u64,
    pub overall_accuracy: f64,
}

pub fn accuracy(map: &ClassificationMap, truth: &ClassificationMap) -> Result<ConfusionMatrix> {
    if (map.width, map.height) != (truth.width, truth.height) {
        return Err(Error::Dimension(format!(
            "map is {}x{}, truth is {}x{}",
            map.width, map.height, truth.width, truth.height
        )));
    }
    let classes = usize::from(map.max_label().max(truth.max_label()));
    let mut counts = vec![vec![0u64; classes + 1]; classes];
    for (&p, &t) in map.labels.iter().zip(&truth.labels) {
        if t > 0 {
            counts[usize::from(t) - 1][usize::from(p)] += 1;
        }
    }
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return Err(Error::Analysis("truth map has no labelled pixels".into()));
    }
    let correct: u64 = (0..classes).map(|t| counts[t][t + 1]).sum();
    Ok(ConfusionMatrix { classes, counts, total, correct, overall_accuracy: correct as f64 / total as f64 })
}

#[derive(Debug, Serialize, Deserialize)]
struct RoiRun {
    row: usize,
    col: usize,
    #[serde(default = "one")]
    len: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Serialize, Deserialize)]
struct RoiClass {
    name: String,
    runs: Vec<RoiRun>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RoiDocument {
    classes: Vec<RoiClass>,
}

/// Reads training regions from JSON:
/// `{"classes": [{"name": "sea", "runs": [{"row": 0, "col": 4, "len": 10}]}]}`.
/// Each run covers `len` pixels starting at `(col, row)` and moving right.
pub fn parse_rois_json(text: &str) -> Result<Vec<Roi>> {
    let doc: RoiDocument = serde_json::from_str(text)?;
    Ok(doc
        .classes
        .into_iter()
        .map(|c| Roi {
            name: c.name,
            pixels: c.runs.iter().flat_map(|r| (0..r.len).map(move |i| (r.col + i, r.row))).collect(),
        })
        .collect())
}

/// Inverse of [`parse_rois_json`], merging horizontally adjacent pixels into runs.
pub fn rois_to_json(rois: &[Roi]) -> Result<String> {
    let classes = rois
        .iter()
        .map(|roi| {
            let mut runs: Vec<RoiRun> = Vec::new();
            for &(col, row) in &roi.pixels {
                match runs.last_mut() {
                    Some(r) if r.row == row && r.col + r.len == col => r.len += 1,
                    _ => runs.push(RoiRun { row, col, len: 1 }),
                }
            }
            RoiClass { name: roi.name.clone(), runs }
        })
        .collect();
    Ok(serde_json::to_string_pretty(&RoiDocument { classes })?)
}

/// One region per label `1..=max` of a label raster, named `class <k>`.
/// Labels that never occur yield empty regions.
pub fn rois_from_labels(labels: &ClassificationMap) -> Vec<Roi> {
    let mut rois: Vec<Roi> =
        (1..=labels.max_label()).map(|k| Roi { name: format!("class {k}"), pixels: Vec::new() }).collect();
    for r in 0..labels.height {
        for c in 0..labels.width {
            let l = labels.get(c, r);
            if l > 0 {
                rois[usize::from(l) - 1].pixels.push((c, r));
            }
        }
    }
    rois
}
