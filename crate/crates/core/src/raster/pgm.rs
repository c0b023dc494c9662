//! Binary PGM (`P5`). `maxval <= 255` stores one byte per sample; larger
//! values store two bytes, most significant first.

use super::{Band, Dtype};
use crate::error::{Error, Result};

const FORMAT: &str = "PGM";

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.buf.len() {
            match self.buf[self.pos] {
                b'#' => {
                    while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.buf.len() && self.buf[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(FORMAT, format!("missing {what}")));
        }
        std::str::from_utf8(&self.buf[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(FORMAT, format!("{what} out of range")))
    }
}

pub fn read_pgm(bytes: &[u8]) -> Result<Band> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::format(FORMAT, "bad magic, expected P5"));
    }
    let mut cur = Cursor { buf: bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > u16::MAX as usize {
        return Err(Error::format(FORMAT, format!("maxval {maxval} not in 1..=65535")));
    }
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::format(FORMAT, "header not terminated by whitespace")),
    }

    let dtype = if maxval <= 255 { Dtype::U8 } else { Dtype::U16 };
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(dtype.bytes()))
        .ok_or_else(|| Error::format(FORMAT, "dimensions overflow"))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(Error::format(FORMAT, format!("truncated payload: {} of {expected} bytes", payload.len())));
    }
    if payload.len() > expected {
        return Err(Error::format(FORMAT, format!("{} trailing bytes after payload", payload.len() - expected)));
    }

    let samples: Vec<u16> = match dtype {
        Dtype::U8 => payload.iter().map(|&b| u16::from(b)).collect(),
        Dtype::U16 => payload.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect(),
    };
    if let Some(s) = samples.iter().find(|&&s| usize::from(s) > maxval) {
        return Err(Error::format(FORMAT, format!("sample {s} exceeds maxval {maxval}")));
    }
    Band::new(width, height, dtype, samples)
}

/// Writes `P5\n<w> <h>\n<maxval>\n` followed by the samples; `maxval` is the
/// full range of the band's dtype.
pub fn write_pgm(band: &Band) -> Vec<u8> {
    let header = format!("P5\n{} {}\n{}\n", band.width(), band.height(), band.dtype().max_value());
    let mut out = Vec::with_capacity(header.len() + band.samples().len() * band.dtype().bytes());
    out.extend_from_slice(header.as_bytes());
    match band.dtype() {
        Dtype::U8 => out.extend(band.samples().iter().map(|&s| s as u8)),
        Dtype::U16 => {
            for s in band.samples() {
                out.extend_from_slice(&s.to_be_bytes());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_pixel_u8() {
        let b = read_pgm(b"P5\n1 1\n255\n\x7f").unwrap();
        assert_eq!(b, Band::new(1, 1, Dtype::U8, vec![127]).unwrap());
    }

    #[test]
    fn u16_big_endian_golden() {
        let band = Band::new(2, 2, Dtype::U16, vec![0x0102, 0xA0B0, 0, 65535]).unwrap();
        let mut expect = b"P5\n2 2\n65535\n".to_vec();
        expect.extend_from_slice(&[0x01, 0x02, 0xA0, 0xB0, 0x00, 0x00, 0xFF, 0xFF]);
        assert_eq!(write_pgm(&band), expect);
        assert_eq!(read_pgm(&expect).unwrap(), band);
    }

    #[test]
    fn header_comments_and_small_maxval() {
        let b = read_pgm(b"P5 # made by hand\n2 # w\n1\n15\n\x03\x0f").unwrap();
        assert_eq!(b.samples(), &[3, 15]);
        assert_eq!(b.dtype(), Dtype::U8);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_pgm(b"P2\n1 1\n255\n\x00").is_err());
        assert!(read_pgm(b"P5\n2 2\n255\n\x00\x00\x00").is_err());
        assert!(read_pgm(b"P5\n1 1\n255\n\x00\x00").is_err());
        assert!(read_pgm(b"P5\n1 1\n0\n\x00").is_err());
        assert!(read_pgm(b"P5\n1 1\n65536\n\x00\x00").is_err());
        assert!(read_pgm(b"P5\n1 1\n10\n\x0b").is_err());
        assert!(read_pgm(b"P5\n1 1\n255").is_err());
        assert!(read_pgm(b"P5\n1\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(w in 0usize..12, h in 0usize..12, wide in any::<bool>(), seed in any::<u64>()) {
            let dtype = if wide { Dtype::U16 } else { Dtype::U8 };
            let mut x = seed;
            let band = Band::from_fn(w, h, dtype, |_, _| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((x >> 33) as u16) & dtype.max_value()
            }).unwrap();
            prop_assert_eq!(read_pgm(&write_pgm(&band)).unwrap(), band);
        }
    }
}
