//! Seeded synthetic multiband scenes with known class labels.
//!
//! Generation is fully specified so that a `(spec, seed)` pair yields the same
//! bytes everywhere:
//!
//! 1. The truth map starts as the background class; regions are painted in
//!    list order, later regions overwriting earlier ones. A pixel `(c, r)`
//!    lies in `rect{x,y,w,h}` when `x <= c < x+w` and `y <= r < y+h`, and in
//!    `disk{cx,cy,r}` when `(c-cx)² + (r-cy)² <= r²`.
//! 2. Bands are filled in order, each row-major. Every sample draws exactly
//!    one standard normal `z` from the stream below (also when the class
//!    noise is zero) and stores `clamp(round(mean + noise·z))`, rounding
//!    halves away from zero.
//! 3. Uniforms come from SplitMix64 seeded with `seed`: `u = ((x >> 11) + 1)·2⁻⁵³`,
//!    which lies in `(0, 1]`. Normals come from Box–Muller in pairs:
//!    with `u1`, `u2` drawn in that order, `ρ = sqrt(-2·ln u1)`, `θ = 2π·u2`,
//!    the pair is `(ρ·cos θ, ρ·sin θ)`, consumed first element first.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::analysis::ClassificationMap;
use crate::error::{Error, Result};
use crate::raster::{Band, Dtype, MultibandImage, MAX_BANDS};

/// SplitMix64 (Steele, Lea & Flood). One 64-bit state word.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `(0, 1]`.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Box–Muller standard normals over a [`SplitMix64`] stream.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        GaussianStream { rng: SplitMix64::new(seed), spare: None }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.rng.next_open01();
        let u2 = self.rng.next_open01();
        let rho = (-2.0 * u1.ln()).sqrt();
        let theta = TAU * u2;
        self.spare = Some(rho * theta.sin());
        rho * theta.cos()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Rect { x: usize, y: usize, w: usize, h: usize },
    Disk { cx: f64, cy: f64, r: f64 },
}

impl Shape {
    fn contains(&self, c: usize, r: usize) -> bool {
        match *self {
            Shape::Rect { x, y, w, h } => (x..x + w).contains(&c) && (y..y + h).contains(&r),
            Shape::Disk { cx, cy, r: radius } => {
                let (dx, dy) = (c as f64 - cx, r as f64 - cy);
                dx * dx + dy * dy <= radius * radius
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub shape: Shape,
    /// 1-based index into `SceneSpec::classes`.
    pub class: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSignature {
    pub mean: f64,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSignature {
    pub name: String,
    /// One entry per band.
    pub bands: Vec<BandSignature>,
}

fn default_background() -> u16 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub dtype: Dtype,
    #[serde(default = "default_background")]
    pub background: u16,
    #[serde(default)]
    pub regions: Vec<Region>,
    pub classes: Vec<ClassSignature>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_names: Option<Vec<String>>,
}

impl SceneSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn band_count(&self) -> usize {
        self.classes.first().map_or(0, |c| c.bands.len())
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n_classes = self.classes.len();
        let check_class = |k: u16, what: &str| {
            if k == 0 || usize::from(k) > n_classes {
                Err(Error::Scene(format!("{what} references class {k}, but signatures exist for 1..={n_classes}")))
            } else {
                Ok(())
            }
        };
        check_class(self.background, "background")?;
        for (i, r) in self.regions.iter().enumerate() {
            check_class(r.class, &format!("region {}", i + 1))?;
            if let Shape::Disk { cx, cy, r } = r.shape {
                if !(cx.is_finite() && cy.is_finite() && r.is_finite() && r >= 0.0) {
                    return Err(Error::Scene(format!("region {}: invalid disk", i + 1)));
                }
            }
        }
        let bands = self.band_count();
        if bands == 0 || bands > MAX_BANDS {
            return Err(Error::Scene(format!("band count {bands} not in 1..={MAX_BANDS}")));
        }
        let max = f64::from(self.dtype.max_value());
        for c in &self.classes {
            if c.bands.len() != bands {
                return Err(Error::Scene(format!(
                    "class {} has {} band signatures, expected {bands}",
                    c.name,
                    c.bands.len()
                )));
            }
            for (b, s) in c.bands.iter().enumerate() {
                if !(0.0..=max).contains(&s.mean) {
                    return Err(Error::Scene(format!(
                        "class {} band {}: mean {} outside 0..={max}",
                        c.name,
                        b + 1,
                        s.mean
                    )));
                }
                if !(s.noise.is_finite() && s.noise >= 0.0) {
                    return Err(Error::Scene(format!("class {} band {}: bad noise {}", c.name, b + 1, s.noise)));
                }
            }
        }
        if let Some(names) = &self.band_names {
            if names.len() != bands {
                return Err(Error::Scene(format!("{} band names for {bands} bands", names.len())));
            }
        }
        Ok(())
    }
}

pub fn synth_scene(spec: &SceneSpec) -> Result<(MultibandImage, ClassificationMap)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);

    let mut labels = vec![spec.background; w * h];
    for region in &spec.regions {
        for r in 0..h {
            for c in 0..w {
                if region.shape.contains(c, r) {
                    labels[r * w + c] = region.class;
                }
            }
        }
    }

    let max = f64::from(spec.dtype.max_value());
    let mut normals = GaussianStream::new(spec.seed);
    let bands = (0..spec.band_count())
        .map(|b| {
            let samples = labels
                .iter()
                .map(|&k| {
                    let sig = spec.classes[usize::from(k) - 1].bands[b];
                    let z = normals.next_normal();
                    (sig.mean + sig.noise * z).round().clamp(0.0, max) as u16
                })
                .collect();
            Band::new(w, h, spec.dtype, samples)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok((MultibandImage::new(bands, spec.band_names.clone())?, ClassificationMap::new(w, h, labels)?))
}

fn signature(means: &[f64], noise: &[f64]) -> Vec<BandSignature> {
    means.iter().zip(noise).map(|(&mean, &noise)| BandSignature { mean, noise }).collect()
}

fn landsat_band_names() -> Option<Vec<String>> {
    Some((1..=7).map(|b| format!("B{b}")).collect())
}

/// Sea / forest / soil, 7 bands of 8-bit data, noise σ = 2 everywhere and
/// class means at least 20 apart in every band.
pub fn three_class_scene(seed: u64) -> SceneSpec {
    let noise = [2.0; 7];
    SceneSpec {
        width: 128,
        height: 128,
        dtype: Dtype::U8,
        background: 1,
        regions: vec![
            Region { shape: Shape::Rect { x: 0, y: 80, w: 128, h: 48 }, class: 3 },
            Region { shape: Shape::Disk { cx: 40.0, cy: 40.0, r: 22.0 }, class: 2 },
            Region { shape: Shape::Disk { cx: 95.0, cy: 90.0, r: 18.0 }, class: 2 },
            Region { shape: Shape::Rect { x: 80, y: 10, w: 30, h: 20 }, class: 3 },
        ],
        classes: vec![
            ClassSignature {
                name: "sea".into(),
                bands: signature(&[30.0, 25.0, 20.0, 15.0, 10.0, 100.0, 8.0], &noise),
            },
            ClassSignature {
                name: "forest".into(),
                bands: signature(&[60.0, 55.0, 50.0, 120.0, 70.0, 130.0, 40.0], &noise),
            },
            ClassSignature {
                name: "soil".into(),
                bands: signature(&[110.0, 100.0, 95.0, 90.0, 140.0, 160.0, 120.0], &noise),
            },
        ],
        seed,
        band_names: landsat_band_names(),
    }
}

/// A 7-band scene whose best OIF triple is bands (1, 4, 5).
///
/// Bands 1, 4 and 5 carry strong independent noise over a weak shared class
/// pattern, so they have the largest deviations and are mutually almost
/// uncorrelated. The other bands follow the class pattern closely and are
/// nearly collinear with each other.
pub fn oif_forced_scene(seed: u64) -> SceneSpec {
    let noisy = |m: f64| BandSignature { mean: m, noise: 30.0 };
    let quiet = |m: f64| BandSignature { mean: m, noise: 3.0 };
    let class = |name: &str, a: f64| ClassSignature {
        name: name.into(),
        bands: vec![
            noisy(128.0 + a),
            quiet(100.0 + a),
            quiet(90.0 + a),
            noisy(128.0 + a),
            noisy(128.0 + a),
            quiet(110.0 + a),
            quiet(80.0 + a),
        ],
    };
    SceneSpec {
        width: 128,
        height: 128,
        dtype: Dtype::U8,
        background: 1,
        regions: vec![
            Region { shape: Shape::Rect { x: 0, y: 0, w: 64, h: 128 }, class: 2 },
            Region { shape: Shape::Disk { cx: 90.0, cy: 64.0, r: 30.0 }, class: 3 },
            Region { shape: Shape::Disk { cx: 30.0, cy: 40.0, r: 20.0 }, class: 3 },
        ],
        classes: vec![class("a", -15.0), class("b", 0.0), class("c", 15.0)],
        seed,
        band_names: landsat_band_names(),
    }
}

/// Built-in scene presets by name.
pub fn preset(name: &str, seed: u64) -> Option<SceneSpec> {
    match name {
        "three-class" => Some(three_class_scene(seed)),
        "oif-forced" => Some(oif_forced_scene(seed)),
        _ => None,
    }
}

pub const PRESET_NAMES: &[&str] = &["three-class", "oif-forced"];
