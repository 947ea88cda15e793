//! Plain PGM (P2/P5) and CSV grid readers. Intensities come back in `[0, 1]` for PGM
//! (divided by the declared maximum) and as written for CSV.

use ndarray::Array2;

use crate::error::{Error, Result};

fn parse_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

/// Header tokens of a PGM file, skipping `#` comments; returns the byte offset after the last token.
fn header_tokens(bytes: &[u8], count: usize) -> Result<(Vec<(usize, String)>, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while out.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() {
            return Err(parse_error(format!("byte {i}"), "truncated header"));
        }
        if bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        out.push((start, String::from_utf8_lossy(&bytes[start..i]).into_owned()));
    }
    Ok((out, i))
}

fn header_number(tok: &(usize, String), what: &str) -> Result<usize> {
    tok.1
        .parse::<usize>()
        .ok()
        .filter(|v| *v > 0)
        .ok_or_else(|| parse_error(format!("byte {}", tok.0), format!("bad {what} '{}'", tok.1)))
}

pub fn read_pgm(bytes: &[u8]) -> Result<Array2<f64>> {
    let (head, end) = header_tokens(bytes, 4)?;
    let binary = match head[0].1.as_str() {
        "P2" => false,
        "P5" => true,
        other => return Err(parse_error("byte 0", format!("unsupported magic '{other}'"))),
    };
    let width = header_number(&head[1], "width")?;
    let height = header_number(&head[2], "height")?;
    let maxval = header_number(&head[3], "maxval")?;
    if maxval > 65535 {
        return Err(parse_error(format!("byte {}", head[3].0), "maxval above 65535"));
    }
    let n = width * height;
    let values: Vec<usize> = if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = end + 1;
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        let raster = bytes
            .get(start..start + need)
            .ok_or_else(|| parse_error(format!("byte {start}"), format!("raster needs {need} bytes")))?;
        if wide {
            raster.chunks(2).map(|c| (c[0] as usize) << 8 | c[1] as usize).collect()
        } else {
            raster.iter().map(|c| *c as usize).collect()
        }
    } else {
        let (toks, _) = header_tokens(bytes, 4 + n)?;
        toks[4..]
            .iter()
            .map(|t| {
                t.1.parse::<usize>()
                    .map_err(|_| parse_error(format!("byte {}", t.0), format!("bad sample '{}'", t.1)))
            })
            .collect::<Result<_>>()?
    };
    if let Some(pos) = values.iter().position(|v| *v > maxval) {
        return Err(parse_error(format!("sample {pos}"), "sample exceeds maxval"));
    }
    Ok(Array2::from_shape_fn((height, width), |(i, j)| {
        values[i * width + j] as f64 / maxval as f64
    }))
}

/// One image row per non-empty line, comma-separated.
pub fn read_csv_grid(text: &str) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, cell)| {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    parse_error(format!("line {}, column {}", ln + 1, col + 1), format!("bad number '{}'", cell.trim()))
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_error(format!("line {}, column {}", ln + 1, col + 1), "non-finite value"))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_error(
                    format!("line {}", ln + 1),
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let h = rows.len();
    if h == 0 {
        return Err(parse_error("line 1", "empty grid"));
    }
    let w = rows[0].len();
    Ok(Array2::from_shape_fn((h, w), |(i, j)| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_pgm_with_comment() {
        let img = read_pgm(b"P2\n# tiny\n3 2\n4\n0 1 2\n3 4 4\n").unwrap();
        assert_eq!(img.dim(), (2, 3));
        assert_eq!(img[[0, 1]], 0.25);
        assert_eq!(img[[1, 2]], 1.0);
    }

    #[test]
    fn binary_pgm() {
        let mut data = b"P5 2 2 255\n".to_vec();
        data.extend([0u8, 255, 51, 102]);
        let img = read_pgm(&data).unwrap();
        assert_eq!(img[[0, 1]], 1.0);
        assert!((img[[1, 0]] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn malformed_inputs_report_locations() {
        assert!(matches!(read_pgm(b"P3 1 1 1 0"), Err(Error::Parse { .. })));
        assert!(matches!(read_pgm(b"P2 2 2 1 0 1"), Err(Error::Parse { .. })));
        assert!(matches!(read_pgm(b"P2 1 1 1 5"), Err(Error::Parse { .. })));
        assert!(matches!(read_pgm(b"P5 2 2 255\n\x00"), Err(Error::Parse { .. })));
        let Err(Error::Parse { location, .. }) = read_csv_grid("1,2\n3,x\n") else { panic!() };
        assert_eq!(location, "line 2, column 2");
        assert!(read_csv_grid("1,2\n3\n").is_err());
        assert!(read_csv_grid("\n").is_err());
    }

    #[test]
    fn csv_grid() {
        let g = read_csv_grid("0.1, 0.2\n0.3,0.4\n").unwrap();
        assert_eq!(g.dim(), (2, 2));
        assert_eq!(g[[1, 0]], 0.3);
    }
}
