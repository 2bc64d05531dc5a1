//! Text formats: the `cmatrix` matrix format and the transceiver container.
//!
//! Matrix format: a header line `cmatrix <rows> <cols>` followed by row-major
//! entries as `re:im` pairs separated by whitespace. Floats are written as
//! shortest-round-trip decimals, so files reproduce the original 64-bit
//! values exactly.

use std::fmt::Write as _;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::transceiver::{Transceiver, TransceiverKind};

/// Shortest round-trip decimal of a finite f64.
pub fn format_f64(x: f64) -> String {
    debug_assert!(x.is_finite());
    format!("{x}")
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad float `{s}`")))?;
    if !v.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite value `{s}`")));
    }
    Ok(v)
}

/// Serialize a matrix into the text format.
pub fn write_matrix(m: &CMatrix) -> Result<String> {
    for z in m.iter() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::InvalidInput("matrix contains NaN or Inf".into()));
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "cmatrix {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let mut line = String::new();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(' ');
            }
            let z = m[(i, j)];
            let _ = write!(line, "{}:{}", format_f64(z.re), format_f64(z.im));
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Parse one matrix from a token stream that may contain comments (`#`).
fn parse_from_tokens<'a, I: Iterator<Item = &'a str>>(tokens: &mut I) -> Result<CMatrix> {
    let head = tokens
        .next()
        .ok_or_else(|| Error::InvalidInput("missing `cmatrix` header".into()))?;
    if head != "cmatrix" {
        return Err(Error::InvalidInput(format!(
            "expected `cmatrix` header, found `{head}`"
        )));
    }
    let rows: usize = tokens
        .next()
        .ok_or_else(|| Error::InvalidInput("missing row count".into()))?
        .parse()
        .map_err(|_| Error::InvalidInput("bad row count".into()))?;
    let cols: usize = tokens
        .next()
        .ok_or_else(|| Error::InvalidInput("missing column count".into()))?
        .parse()
        .map_err(|_| Error::InvalidInput("bad column count".into()))?;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
    }
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let tok = tokens.next().ok_or_else(|| {
                Error::InvalidInput(format!("matrix ends early at entry ({i},{j})"))
            })?;
            let (re, im) = tok
                .split_once(':')
                .ok_or_else(|| Error::InvalidInput(format!("entry `{tok}` is not re:im")))?;
            m[(i, j)] = Complex64::new(parse_f64(re)?, parse_f64(im)?);
        }
    }
    Ok(m)
}

fn tokens_of(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace())
}

/// Parse a single matrix from text.
pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let mut toks = tokens_of(text);
    let m = parse_from_tokens(&mut toks)?;
    if toks.next().is_some() {
        return Err(Error::InvalidInput("trailing data after matrix".into()));
    }
    Ok(m)
}

/// Read a matrix from any reader.
pub fn read_matrix<R: Read>(reader: R) -> Result<CMatrix> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    parse_matrix(&text)
}

/// Load a matrix from a file.
pub fn load_matrix(path: &Path) -> Result<CMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

/// Save a matrix to a file.
pub fn save_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(write_matrix(m)?.as_bytes())?;
    Ok(())
}

/// Serialize a transceiver: scalar metadata then named F, W, B blocks.
pub fn save_transceiver(path: &Path, t: &Transceiver) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "kind {}", t.kind.name());
    let _ = writeln!(out, "q_active {}", t.q_active);
    let _ = writeln!(
        out,
        "predicted_mse {}",
        format_f64(crate::linalg::trace(&t.predicted_ree).re / t.block_len() as f64)
    );
    for (name, m) in [("F", &t.f), ("W", &t.w), ("B", &t.b)] {
        let _ = writeln!(out, "{name}");
        out.push_str(&write_matrix(m)?);
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Load a transceiver saved by [`save_transceiver`]. The predicted error
/// covariance is restored as the scaled identity `predicted_mse * I`.
pub fn load_transceiver(path: &Path) -> Result<Transceiver> {
    let text = std::fs::read_to_string(path)?;
    let mut kind = None;
    let mut q_active = None;
    let mut predicted_mse = None;
    let mut blocks: Vec<(String, CMatrix)> = Vec::new();

    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap();
        match key {
            "kind" => {
                let v = parts
                    .next()
                    .ok_or_else(|| Error::InvalidInput("missing kind value".into()))?;
                kind = Some(TransceiverKind::parse(v)?);
            }
            "q_active" => {
                let v = parts
                    .next()
                    .ok_or_else(|| Error::InvalidInput("missing q_active value".into()))?;
                q_active = Some(
                    v.parse::<usize>()
                        .map_err(|_| Error::InvalidInput("bad q_active".into()))?,
                );
            }
            "predicted_mse" => {
                let v = parts
                    .next()
                    .ok_or_else(|| Error::InvalidInput("missing predicted_mse value".into()))?;
                predicted_mse = Some(parse_f64(v)?);
            }
            "F" | "W" | "B" => {
                // Collect this block's matrix from the following lines.
                let mut chunk = String::new();
                while let Some(next) = lines.peek() {
                    let t = next.trim_start();
                    if t.starts_with("cmatrix")
                        || t.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+')
                    {
                        chunk.push_str(lines.next().unwrap());
                        chunk.push('\n');
                    } else {
                        break;
                    }
                }
                blocks.push((key.to_string(), parse_matrix(&chunk)?));
            }
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown transceiver file key `{other}`"
                )))
            }
        }
    }

    let kind = kind.ok_or_else(|| Error::InvalidInput("missing `kind`".into()))?;
    let find = |name: &str| -> Result<CMatrix> {
        blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| Error::InvalidInput(format!("missing `{name}` block")))
    };
    let f = find("F")?;
    let w = find("W")?;
    let b = find("B")?;
    let m = b.nrows();
    if !b.is_square() || f.ncols() != m || w.nrows() != m {
        return Err(Error::InvalidInput("inconsistent F/W/B dimensions".into()));
    }
    let mse = predicted_mse.ok_or_else(|| Error::InvalidInput("missing `predicted_mse`".into()))?;
    Ok(Transceiver {
        f,
        w,
        b,
        kind,
        predicted_ree: CMatrix::identity(m, m).scale(mse),
        q_active: q_active.unwrap_or(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{rayleigh_mimo_channel, ChannelModel};
    use crate::rng::{stream, StreamPurpose};
    use crate::transceiver::{design_mmse_bdfd, DesignSpec};
    use proptest::prelude::*;

    #[test]
    fn matrix_round_trip_exact() {
        let m = rayleigh_mimo_channel(3, 2, &mut stream(1, 0, StreamPurpose::Channel));
        let text = write_matrix(&m).unwrap();
        let back = parse_matrix(&text).unwrap();
        assert_eq!(m.as_slice(), back.as_slice());
    }

    #[test]
    fn matrix_parse_errors() {
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("cmatrix 2 2\n1:0 2:0\n3:0").is_err());
        assert!(parse_matrix("matrix 1 1\n1:0").is_err());
        assert!(parse_matrix("cmatrix 1 1\n1.0").is_err());
        assert!(parse_matrix("cmatrix 1 1\nnan:0").is_err());
        assert!(parse_matrix("cmatrix 1 1\n1:0 extra:0").is_err());
    }

    #[test]
    fn comments_are_ignored() {
        let m =
            parse_matrix("# channel file\ncmatrix 1 2 # header\n1:0 0:-1 # row\n").unwrap();
        assert_eq!(m[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(m[(0, 1)], Complex64::new(0.0, -1.0));
    }

    #[test]
    fn transceiver_round_trip() {
        let dir = std::env::temp_dir().join(format!("bdfd_textio_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.txt");

        let h = rayleigh_mimo_channel(4, 3, &mut stream(2, 0, StreamPurpose::Channel));
        let ch = ChannelModel::with_awgn(h, 0.3).unwrap();
        let t = design_mmse_bdfd(&ch, &DesignSpec::new(3, 3.0).unwrap()).unwrap();
        save_transceiver(&path, &t).unwrap();
        let back = load_transceiver(&path).unwrap();
        assert_eq!(back.kind, t.kind);
        assert_eq!(back.q_active, t.q_active);
        assert_eq!(back.f.as_slice(), t.f.as_slice());
        assert_eq!(back.w.as_slice(), t.w.as_slice());
        assert_eq!(back.b.as_slice(), t.b.as_slice());
        std::fs::remove_dir_all(&dir).ok();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn floats_survive_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let s = format_f64(x);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
