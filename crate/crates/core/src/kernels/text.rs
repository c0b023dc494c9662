//! Plain-text kernel files.
//!
//! One grid row per line, top to bottom, integers separated by whitespace.
//! An optional first line `anchor R C` pins the anchor cell; without it the
//! grid must have odd dimensions and the anchor is its centre. Blank lines and
//! lines starting with `#` are ignored when reading.

use std::fmt;
use std::str::FromStr;

use super::Kernel;
use crate::error::{Error, Result};

pub fn parse_kernel(text: &str) -> Result<Kernel> {
    let mut anchor = None;
    let mut rows: Vec<Vec<i32>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::KernelParse { line: line_no, msg };

        if let Some(rest) = line.strip_prefix("anchor") {
            if anchor.is_some() || !rows.is_empty() {
                return Err(err("anchor header must come before the grid, once".into()));
            }
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(err("expected `anchor <row> <col>`".into()));
            }
            let r = parts[0].parse::<usize>().map_err(|_| err(format!("bad anchor row {:?}", parts[0])))?;
            let c = parts[1].parse::<usize>().map_err(|_| err(format!("bad anchor col {:?}", parts[1])))?;
            anchor = Some((r, c));
            continue;
        }

        let row = line
            .split_whitespace()
            .map(|tok| tok.parse::<i32>().map_err(|_| err(format!("not an integer: {tok:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(err(format!("ragged row: {} values, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::KernelParse { line: 0, msg: "no grid rows".into() });
    }
    let (height, width) = (rows.len(), rows[0].len());
    let anchor = match anchor {
        Some(a) => a,
        None if height % 2 == 1 && width % 2 == 1 => (height / 2, width / 2),
        None => {
            return Err(Error::KernelParse {
                line: 0,
                msg: format!("{height}x{width} grid has even dimensions and no anchor header"),
            })
        }
    };
    Kernel::new(height, width, anchor, rows.into_iter().flatten().collect())
}

/// Canonical text: the anchor header only when the anchor is not the centre,
/// single spaces between values, `\n` after every row.
pub fn format_kernel(k: &Kernel) -> String {
    k.to_string()
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.is_centered() {
            writeln!(f, "anchor {} {}", self.anchor.0, self.anchor.1)?;
        }
        for row in self.coeffs.chunks(self.cols) {
            let mut first = true;
            for v in row {
                if !first {
                    f.write_str(" ")?;
                }
                write!(f, "{v}")?;
                first = false;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_kernel(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{derive_quadrant_template, smoothing_template};
    use proptest::prelude::*;

    const FIG2_TEXT: &str = "0 0 1 0 0\n0 2 -4 2 0\n1 -4 4 -4 1\n0 2 -4 2 0\n0 0 1 0 0\n";

    #[test]
    fn parses_smoothing_grid() {
        assert_eq!(parse_kernel(FIG2_TEXT).unwrap(), smoothing_template());
        assert_eq!(format_kernel(&smoothing_template()), FIG2_TEXT);
    }

    #[test]
    fn single_value() {
        let k = parse_kernel("1").unwrap();
        assert_eq!((k.rows(), k.cols(), k.anchor(), k.coeffs()), (1, 1, (0, 0), &[1][..]));
    }

    #[test]
    fn quadrant_carries_anchor_header() {
        let text = format_kernel(&derive_quadrant_template());
        assert_eq!(text, "anchor 2 2\n0 0 1\n0 2 -4\n1 -4 4\n");
        assert_eq!(parse_kernel(&text).unwrap(), derive_quadrant_template());
    }

    #[test]
    fn comments_and_blank_lines() {
        let k = parse_kernel("# laplacian\n\n-1 -1 -1\n-1  8 -1\n\t-1 -1 -1\n").unwrap();
        assert_eq!(k, crate::kernels::laplacian_template());
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_kernel("1 x 2"), Err(Error::KernelParse { line: 1, .. })));
        assert!(matches!(parse_kernel("1 2 3\n4 5\n6 7 8"), Err(Error::KernelParse { line: 2, .. })));
        assert!(matches!(parse_kernel("1 2\n3 4"), Err(Error::KernelParse { .. })));
        assert!(parse_kernel("anchor 0 1\n1 2\n3 4").is_ok());
        assert!(parse_kernel("anchor 5 1\n1 2\n3 4").is_err());
        assert!(parse_kernel("1 2\nanchor 0 0\n").is_err());
        assert!(parse_kernel("").is_err());
        assert!(parse_kernel("anchor 0\n1").is_err());
    }

    fn arb_kernel() -> impl Strategy<Value = Kernel> {
        (1usize..=5, 1usize..=5).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), 0..r, 0..c, prop::collection::vec(-99i32..=99, r * c))
                .prop_map(|(r, c, ar, ac, v)| Kernel::new(r, c, (ar, ac), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn round_trip(k in arb_kernel()) {
            let text = format_kernel(&k);
            let back = parse_kernel(&text).unwrap();
            prop_assert_eq!(&back, &k);
            prop_assert_eq!(format_kernel(&back), text);
        }
    }
}
