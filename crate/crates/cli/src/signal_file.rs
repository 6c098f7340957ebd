//! Signal-block text files: a `M N` header, then one line of `M`
//! comma-separated `re+imj` literals per snapshot.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use aoa_pla::array_model::{Origin, SignalBlock};
use aoa_pla::C64;

pub fn parse_complex(s: &str) -> Result<C64> {
    let t = s.trim();
    let Some(body) = t.strip_suffix('j').or_else(|| t.strip_suffix('i')) else {
        return Ok(C64::new(
            t.parse()
                .with_context(|| format!("bad complex literal {s:?}"))?,
            0.0,
        ));
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "+" | "" => "1",
        "-" => "-1",
        other => other,
    };
    let re: f64 = re
        .parse()
        .with_context(|| format!("bad real part in {s:?}"))?;
    let im: f64 = im
        .trim_start_matches('+')
        .parse()
        .with_context(|| format!("bad imaginary part in {s:?}"))?;
    Ok(C64::new(re, im))
}

pub fn format_complex(z: C64) -> String {
    format!("{:.17e}{:+.17e}j", z.re, z.im)
}

pub fn parse_block(text: &str) -> Result<SignalBlock> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().context("empty signal file")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|v| v.parse().with_context(|| format!("bad header {header:?}")))
        .collect::<Result<_>>()?;
    let [m, n] = dims[..] else {
        bail!("header must be `M N`, got {header:?}");
    };
    let mut samples = Vec::with_capacity(m * n);
    for (j, line) in lines.enumerate() {
        if j >= n {
            bail!("more than {n} snapshot lines");
        }
        let row = line
            .split(',')
            .map(parse_complex)
            .collect::<Result<Vec<_>>>()?;
        if row.len() != m {
            bail!("snapshot {} has {} entries, expected {m}", j + 1, row.len());
        }
        samples.extend(row);
    }
    if samples.len() != m * n {
        bail!(
            "expected {n} snapshot lines, got {}",
            samples.len() / m.max(1)
        );
    }
    Ok(SignalBlock::from_columns(
        m,
        n,
        samples,
        Origin::Legitimate,
    )?)
}

pub fn format_block(block: &SignalBlock) -> String {
    let mut out = format!("{} {}\n", block.num_elements(), block.num_snapshots());
    for col in block.columns() {
        let cells: Vec<String> = col.iter().map(|z| format_complex(*z)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1.5+2j").unwrap(), C64::new(1.5, 2.0));
        assert_eq!(
            parse_complex("-1e-3-2.5E+2j").unwrap(),
            C64::new(-1e-3, -250.0)
        );
        assert_eq!(parse_complex("3").unwrap(), C64::new(3.0, 0.0));
        assert_eq!(parse_complex("-2j").unwrap(), C64::new(0.0, -2.0));
        assert_eq!(parse_complex("1-j").unwrap(), C64::new(1.0, -1.0));
        assert!(parse_complex("1+xj").is_err());
    }

    #[test]
    fn block_round_trip() {
        let z = C64::new(0.123_456_789_012_345_67, -9.876_543_21e-7);
        assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        let block = SignalBlock::from_columns(
            2,
            2,
            vec![z, -z, z * 2.0, C64::new(1.0, 0.0)],
            Origin::Legitimate,
        )
        .unwrap();
        let back = parse_block(&format_block(&block)).unwrap();
        assert_eq!(back.samples(), block.samples());
    }

    #[test]
    fn malformed_blocks() {
        assert!(parse_block("").is_err());
        assert!(parse_block("2 1\n1+0j\n").is_err());
        assert!(parse_block("2 2\n1+0j,1+0j\n").is_err());
        assert!(parse_block("2\n").is_err());
    }
}
