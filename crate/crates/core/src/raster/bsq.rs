//! GSTK1 band-sequential container: a `key=value` text header plus a raw
//! little-endian payload holding each band in full, one after another.
//!
//! ```text
//! magic=GSTK1
//! width=<cols>
//! height=<rows>
//! bands=<count>
//! dtype=u8|u16|i32
//! byteorder=le
//! names=<name>,<name>,...      (optional)
//! ```
//!
//! `u8`/`u16` hold images. `i32` holds raw convolution responses.
//! On disk the header lives in `<stem>.hdr` and the payload in `<stem>.bsq`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{Band, Dtype, MultibandImage, ResponseField, MAX_BANDS};
use crate::error::{Error, Result};
use crate::fsio;

const FORMAT: &str = "GSTK1";
pub const MAGIC: &str = "GSTK1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleType {
    U8,
    U16,
    I32,
}

impl SampleType {
    fn bytes(self) -> usize {
        match self {
            SampleType::U8 => 1,
            SampleType::U16 => 2,
            SampleType::I32 => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SampleType::U8 => "u8",
            SampleType::U16 => "u16",
            SampleType::I32 => "i32",
        }
    }
}

impl From<Dtype> for SampleType {
    fn from(d: Dtype) -> Self {
        match d {
            Dtype::U8 => SampleType::U8,
            Dtype::U16 => SampleType::U16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BsqHeader {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub sample_type: SampleType,
    pub names: Option<Vec<String>>,
}

impl BsqHeader {
    pub fn parse(text: &str) -> Result<Self> {
        let mut fields = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format(FORMAT, format!("header line without '=': {line:?}")))?;
            if fields.insert(k.trim(), v.trim()).is_some() {
                return Err(Error::format(FORMAT, format!("duplicate header key {k:?}")));
            }
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::format(FORMAT, format!("missing {k}")));
        let num = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| Error::format(FORMAT, format!("{k} is not a non-negative integer")))
        };

        if get("magic")? != MAGIC {
            return Err(Error::format(FORMAT, format!("magic mismatch: {:?}", get("magic")?)));
        }
        let sample_type = match get("dtype")? {
            "u8" => SampleType::U8,
            "u16" => SampleType::U16,
            "i32" => SampleType::I32,
            other => return Err(Error::format(FORMAT, format!("unknown dtype {other:?}"))),
        };
        if get("byteorder")? != "le" {
            return Err(Error::format(FORMAT, "only byteorder=le is supported"));
        }
        let bands = num("bands")?;
        if bands == 0 || bands > MAX_BANDS {
            return Err(Error::format(FORMAT, format!("band count {bands} not in 1..={MAX_BANDS}")));
        }
        let names = fields.get("names").map(|s| s.split(',').map(str::to_owned).collect::<Vec<_>>());
        if let Some(n) = &names {
            if n.len() != bands {
                return Err(Error::format(FORMAT, format!("{} names for {bands} bands", n.len())));
            }
        }
        for k in fields.keys() {
            if !matches!(*k, "magic" | "width" | "height" | "bands" | "dtype" | "byteorder" | "names") {
                return Err(Error::format(FORMAT, format!("unknown header key {k:?}")));
            }
        }
        Ok(BsqHeader { width: num("width")?, height: num("height")?, bands, sample_type, names })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "magic={MAGIC}\nwidth={}\nheight={}\nbands={}\ndtype={}\nbyteorder=le\n",
            self.width,
            self.height,
            self.bands,
            self.sample_type.name()
        );
        if let Some(names) = &self.names {
            s.push_str("names=");
            s.push_str(&names.join(","));
            s.push('\n');
        }
        s
    }

    fn band_len(&self) -> usize {
        self.width * self.height
    }

    fn check_payload(&self, payload: &[u8]) -> Result<()> {
        let expected = self
            .band_len()
            .checked_mul(self.bands * self.sample_type.bytes())
            .ok_or_else(|| Error::format(FORMAT, "dimensions overflow"))?;
        if payload.len() != expected {
            return Err(Error::format(
                FORMAT,
                format!("payload is {} bytes, header implies {expected}", payload.len()),
            ));
        }
        Ok(())
    }
}

fn check_names(names: Option<&[String]>) -> Result<()> {
    for n in names.unwrap_or_default() {
        if n.contains([',', '\n', '\r']) || n.trim() != n {
            return Err(Error::format(FORMAT, format!("band name {n:?} cannot be stored in a header")));
        }
    }
    Ok(())
}

pub fn read_bsq(header: &str, payload: &[u8]) -> Result<MultibandImage> {
    let h = BsqHeader::parse(header)?;
    let dtype = match h.sample_type {
        SampleType::U8 => Dtype::U8,
        SampleType::U16 => Dtype::U16,
        SampleType::I32 => return Err(Error::format(FORMAT, "dtype i32 holds responses, not an image")),
    };
    h.check_payload(payload)?;
    let per_band = h.band_len() * dtype.bytes();
    let mut bands = Vec::with_capacity(h.bands);
    for chunk in payload.chunks(per_band.max(1)).take(h.bands) {
        let samples = match dtype {
            Dtype::U8 => chunk.iter().map(|&b| u16::from(b)).collect(),
            Dtype::U16 => chunk.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect(),
        };
        bands.push(Band::new(h.width, h.height, dtype, samples)?);
    }
    // zero-area images have an empty payload
    while bands.len() < h.bands {
        bands.push(Band::new(h.width, h.height, dtype, Vec::new())?);
    }
    MultibandImage::new(bands, h.names)
}

pub fn write_bsq(image: &MultibandImage) -> Result<(String, Vec<u8>)> {
    check_names(image.band_names())?;
    let header = BsqHeader {
        width: image.width(),
        height: image.height(),
        bands: image.band_count(),
        sample_type: image.dtype().into(),
        names: image.band_names().map(<[String]>::to_vec),
    };
    let mut payload = Vec::with_capacity(header.band_len() * header.bands * header.sample_type.bytes());
    for band in image.bands() {
        match band.dtype() {
            Dtype::U8 => payload.extend(band.samples().iter().map(|&s| s as u8)),
            Dtype::U16 => {
                for s in band.samples() {
                    payload.extend_from_slice(&s.to_le_bytes());
                }
            }
        }
    }
    Ok((header.to_text(), payload))
}

pub fn read_response_bsq(header: &str, payload: &[u8]) -> Result<Vec<ResponseField>> {
    let h = BsqHeader::parse(header)?;
    if h.sample_type != SampleType::I32 {
        return Err(Error::format(FORMAT, format!("expected dtype i32, found {}", h.sample_type.name())));
    }
    h.check_payload(payload)?;
    let per_band = h.band_len();
    let values: Vec<i32> = payload.chunks_exact(4).map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    (0..h.bands)
        .map(|b| ResponseField::new(h.width, h.height, values[b * per_band..(b + 1) * per_band].to_vec()))
        .collect()
}

pub fn write_response_bsq(fields: &[ResponseField], names: Option<&[String]>) -> Result<(String, Vec<u8>)> {
    let first = fields.first().ok_or_else(|| Error::Raster("no response fields to write".into()))?;
    if fields.len() > MAX_BANDS {
        return Err(Error::Raster(format!("{} fields exceeds the limit of {MAX_BANDS}", fields.len())));
    }
    if fields.iter().any(|f| (f.width(), f.height()) != (first.width(), first.height())) {
        return Err(Error::Dimension("response fields differ in size".into()));
    }
    if let Some(n) = names {
        if n.len() != fields.len() {
            return Err(Error::Raster(format!("{} names for {} fields", n.len(), fields.len())));
        }
    }
    check_names(names)?;
    let header = BsqHeader {
        width: first.width(),
        height: first.height(),
        bands: fields.len(),
        sample_type: SampleType::I32,
        names: names.map(<[String]>::to_vec),
    };
    let mut payload = Vec::with_capacity(header.band_len() * header.bands * 4);
    for f in fields {
        for v in f.samples() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok((header.to_text(), payload))
}

/// `(<stem>.hdr, <stem>.bsq)` for a path naming either file or the bare stem.
pub fn file_pair(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("hdr"), path.with_extension("bsq"))
}

pub fn load_image(path: &Path) -> Result<MultibandImage> {
    let (hdr, data) = file_pair(path);
    read_bsq(&fsio::read_text(&hdr)?, &fsio::read_bytes(&data)?)
}

pub fn save_image(path: &Path, image: &MultibandImage) -> Result<()> {
    let (header, payload) = write_bsq(image)?;
    let (hdr, data) = file_pair(path);
    fsio::write_all_atomic(&[(&data, &payload), (&hdr, header.as_bytes())])
}

pub fn load_responses(path: &Path) -> Result<Vec<ResponseField>> {
    let (hdr, data) = file_pair(path);
    read_response_bsq(&fsio::read_text(&hdr)?, &fsio::read_bytes(&data)?)
}

pub fn save_responses(path: &Path, fields: &[ResponseField], names: Option<&[String]>) -> Result<()> {
    let (header, payload) = write_response_bsq(fields, names)?;
    let (hdr, data) = file_pair(path);
    fsio::write_all_atomic(&[(&data, &payload), (&hdr, header.as_bytes())])
}
