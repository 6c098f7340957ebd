//! `key = value` configuration files with `[section]` headers.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use aoa_pla::experiments::{parse_list, parse_number};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CliConfig {
    pub num_elements: Option<usize>,
    pub spacing: Option<f64>,
    pub snr_legit_db: Option<f64>,
    pub snr_attacker_db: Option<f64>,
    pub theta: Option<f64>,
    pub snapshots: Option<usize>,
    pub grid_step: Option<f64>,
    pub attacker_angles: Option<Vec<f64>>,
    pub attacker_amplitudes: Option<Vec<f64>>,
    pub attacker_phases: Option<Vec<f64>>,
    pub figure: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Figure parameter overrides, checked when the figure runs.
    pub overrides: Vec<(String, String)>,
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .with_context(|| format!("{key}: expected a non-negative integer, got {v:?}"))
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = CliConfig::default();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if ![
                    "array",
                    "noise",
                    "scenario",
                    "attacker",
                    "experiment",
                    "overrides",
                ]
                .contains(&section.as_str())
                {
                    bail!("line {}: unknown section [{section}]", n + 1);
                }
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key = value", n + 1))?;
            let (k, v) = (k.trim(), v.trim());
            let key = format!("{section}.{k}");
            let num = || parse_number(v).with_context(|| format!("line {}: {key}", n + 1));
            let list = || parse_list(v).with_context(|| format!("line {}: {key}", n + 1));
            match (section.as_str(), k) {
                ("array", "num_elements") => c.num_elements = Some(count(&key, v)?),
                ("array", "spacing") => c.spacing = Some(num()?),
                ("noise", "snr_legit_db") => c.snr_legit_db = Some(num()?),
                ("noise", "snr_attacker_db") => c.snr_attacker_db = Some(num()?),
                ("scenario", "theta") => c.theta = Some(num()?),
                ("scenario", "snapshots") => c.snapshots = Some(count(&key, v)?),
                ("scenario", "grid_step") => c.grid_step = Some(num()?),
                ("attacker", "angles") => c.attacker_angles = Some(list()?),
                ("attacker", "amplitudes") => c.attacker_amplitudes = Some(list()?),
                ("attacker", "phases") => c.attacker_phases = Some(list()?),
                ("experiment", "figure") => c.figure = Some(v.to_string()),
                ("experiment", "seed") => {
                    c.seed = Some(
                        v.parse()
                            .with_context(|| format!("line {}: {key} must be an integer", n + 1))?,
                    )
                }
                ("experiment", "output_dir") => c.output_dir = Some(PathBuf::from(v)),
                ("overrides", _) => c.overrides.push((k.to_string(), v.to_string())),
                _ => bail!("line {}: unknown config key `{key}`", n + 1),
            }
        }
        Ok(c)
    }
}
