//! Figure parameters: defaults, overrides, and their text form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig3dSame,
    Fig3dDiff,
    Fig5,
    Fig6,
    Fig7,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::Fig2,
        FigureId::Fig3,
        FigureId::Fig3dSame,
        FigureId::Fig3dDiff,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig7,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig3dSame => "fig3d_same",
            FigureId::Fig3dDiff => "fig3d_diff",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Scalar(v) => write!(f, "{v}"),
            ParamValue::List(vs) => {
                f.write_str("[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Parse a number, converting a trailing `deg` to radians.
pub fn parse_number(s: &str) -> Result<f64> {
    let t = s.trim();
    let (body, scale) = match t.strip_suffix("deg") {
        Some(b) => (b.trim(), std::f64::consts::PI / 180.0),
        None => (t, 1.0),
    };
    let v: f64 = body
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))?;
    Ok(v * scale)
}

/// Parse `a,b,c` or `[a,b,c]`; a single number is a one-element list.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let t = s.trim();
    let t = t
        .strip_prefix('[')
        .map_or(t, |r| r.strip_suffix(']').unwrap_or(r));
    if t.trim().is_empty() {
        return Ok(Vec::new());
    }
    t.split(',').map(parse_number).collect()
}

impl ParamValue {
    /// Parse `text` with the same shape as `self`.
    fn parse_like(&self, text: &str) -> Result<ParamValue> {
        match self {
            ParamValue::Scalar(_) => parse_number(text).map(ParamValue::Scalar),
            ParamValue::List(_) => parse_list(text).map(ParamValue::List),
        }
    }
}

/// Resolved, ordered parameter set of one figure.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    figure: FigureId,
    values: BTreeMap<String, ParamValue>,
}

fn s(v: f64) -> ParamValue {
    ParamValue::Scalar(v)
}

fn l(v: &[f64]) -> ParamValue {
    ParamValue::List(v.to_vec())
}

impl ParamSet {
    pub fn defaults(figure: FigureId) -> Self {
        let mut p: Vec<(&str, ParamValue)> = vec![("spacing", s(0.5))];
        match figure {
            FigureId::Fig2 => p.extend([
                ("theta", s(0.4)),
                ("theta_hat", s(0.2)),
                ("attacker_antennas", s(2.0)),
                ("snr_db", l(&[-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0])),
                ("num_rx", l(&[2.0, 4.0, 8.0, 16.0])),
                ("snapshots", s(2000.0)),
                ("trials", s(200.0)),
                ("grid_step", s(0.001)),
                ("noiseless", s(0.0)),
            ]),
            FigureId::Fig3 => p.extend([
                ("theta", s(0.4)),
                ("theta_hat0", s(0.4)),
                ("theta_hat1", s(0.4)),
                ("num_rx", s(16.0)),
                ("snr_db", s(15.0)),
                ("phi_step", s(0.05)),
                ("beta_pairs", l(&[0.5, 0.5, 0.3, 0.7, 0.4, 0.4, 0.6, 0.6])),
                ("trials", s(10_000.0)),
            ]),
            FigureId::Fig3dSame | FigureId::Fig3dDiff => {
                let (t0, t1) = if figure == FigureId::Fig3dSame {
                    (0.4, 0.4)
                } else {
                    (0.39, 0.41)
                };
                p.extend([
                    ("theta", s(0.4)),
                    ("theta_hat0", s(t0)),
                    ("theta_hat1", s(t1)),
                    ("beta0", s(0.5)),
                    ("beta1", s(0.5)),
                    ("num_rx", s(16.0)),
                    ("snr_db", s(15.0)),
                    ("phi_step", s(0.05)),
                ])
            }
            FigureId::Fig5 => p.extend([
                ("theta", s(0.4)),
                ("theta_hat", s(0.4)),
                ("num_rx", s(16.0)),
                ("snr_alice_db", s(15.0)),
                ("snr_eve_db", l(&[0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])),
                ("attacker_antennas", l(&[1.0, 2.0, 4.0, 12.0])),
                ("trials", s(10_000.0)),
            ]),
            FigureId::Fig6 => p.extend([
                ("thetas", l(&[0.2, 0.4, 0.6, 0.8])),
                ("num_rx", s(20.0)),
                ("attacker_antennas", s(12.0)),
                ("snr_db", s(30.0)),
                ("coarse_step", s(0.01)),
                ("fine_step", s(0.001)),
                ("refine_halfwidth", s(0.01)),
            ]),
            FigureId::Fig7 => p.extend([
                ("theta", s(0.4)),
                ("num_rx", s(10.0)),
                ("snr_db", s(15.0)),
                (
                    "attacker_antennas",
                    l(&(1..=32).map(f64::from).collect::<Vec<_>>()),
                ),
                ("misalign_gap", s(0.2)),
                ("trials", s(10_000.0)),
            ]),
        }
        Self {
            figure,
            values: p.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn figure(&self) -> FigureId {
        self.figure
    }

    pub fn set(&mut self, name: &str, text: &str) -> Result<()> {
        let current = self
            .values
            .get(name)
            .ok_or_else(|| Error::UnknownParameter {
                figure: self.figure.to_string(),
                name: name.to_string(),
            })?;
        let v = current.parse_like(text)?;
        self.values.insert(name.to_string(), v);
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamValue)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn get(&self, name: &str) -> &ParamValue {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("{} has no parameter {name}", self.figure))
    }

    pub fn scalar(&self, name: &str) -> f64 {
        match self.get(name) {
            ParamValue::Scalar(v) => *v,
            ParamValue::List(_) => panic!("{name} is a list"),
        }
    }

    pub fn list(&self, name: &str) -> &[f64] {
        match self.get(name) {
            ParamValue::List(v) => v,
            ParamValue::Scalar(_) => panic!("{name} is a scalar"),
        }
    }

    /// A non-negative integer parameter.
    pub fn count(&self, name: &str) -> Result<usize> {
        as_count(name, self.scalar(name))
    }

    pub fn counts(&self, name: &str) -> Result<Vec<usize>> {
        self.list(name).iter().map(|&v| as_count(name, v)).collect()
    }

    pub fn flag(&self, name: &str) -> bool {
        self.scalar(name) != 0.0
    }
}

fn as_count(name: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be a non-negative integer, got {v}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_ids_round_trip() {
        for f in FigureId::ALL {
            assert_eq!(f.as_str().parse::<FigureId>().unwrap(), f);
        }
        assert!("fig4".parse::<FigureId>().is_err());
    }

    #[test]
    fn numbers_and_lists() {
        assert_eq!(parse_number(" 0.25 ").unwrap(), 0.25);
        assert!((parse_number("180deg").unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert!(parse_number("abc").is_err());
        assert_eq!(parse_list("[1,2, 3]").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_list("4").unwrap(), vec![4.0]);
        assert_eq!(parse_list("[]").unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn overrides_are_validated() {
        let mut p = ParamSet::defaults(FigureId::Fig3);
        p.set("trials", "500").unwrap();
        assert_eq!(p.count("trials").unwrap(), 500);
        assert!(matches!(
            p.set("bogus", "1"),
            Err(Error::UnknownParameter { .. })
        ));
        assert!(p.set("trials", "x").is_err());
        p.set("trials", "1.5").unwrap();
        assert!(p.count("trials").is_err());
    }

    #[test]
    fn display_round_trips() {
        let p = ParamSet::defaults(FigureId::Fig2);
        let mut q = ParamSet::defaults(FigureId::Fig2);
        for (k, v) in p.iter() {
            q.set(k, &v.to_string()).unwrap();
        }
        assert_eq!(p, q);
    }
}
