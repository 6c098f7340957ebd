//! Deterministic figure runs: parameter sweeps, CSV tables, SVG plots, and
//! the automated checks attached to every figure.

mod figures;
mod params;
mod plot;
mod table;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

pub use figures::{run_fig2, run_fig3, run_fig3d, run_fig5, run_fig6, run_fig7};
pub use params::{parse_list, parse_number, FigureId, ParamSet, ParamValue};
pub use plot::{emit_plot, render, LineSpec, PlotSpec, SurfaceSpec};
pub use table::{Column, ResultTable};

use crate::{Error, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub figure: FigureId,
    overrides: BTreeMap<String, String>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(figure: FigureId, seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            figure,
            overrides: BTreeMap::new(),
            seed,
            output_dir: output_dir.into(),
        }
    }

    /// Add an override; unknown names and malformed values are rejected.
    pub fn with_override(mut self, name: &str, value: &str) -> Result<Self> {
        ParamSet::defaults(self.figure).set(name, value)?;
        self.overrides.insert(name.to_string(), value.to_string());
        Ok(self)
    }

    pub fn overrides(&self) -> &BTreeMap<String, String> {
        &self.overrides
    }

    pub fn params(&self) -> Result<ParamSet> {
        let mut p = ParamSet::defaults(self.figure);
        for (k, v) in &self.overrides {
            p.set(k, v)?;
        }
        Ok(p)
    }

    /// Rebuild the configuration recorded in a table's metadata.
    pub fn from_table(table: &ResultTable, output_dir: impl Into<PathBuf>) -> Result<Self> {
        let get = |k: &str| {
            table
                .metadata_value(k)
                .ok_or_else(|| Error::Parse(format!("table metadata lacks {k:?}")))
        };
        let figure: FigureId = get("figure")?.parse()?;
        let seed = get("seed")?
            .parse()
            .map_err(|_| Error::Parse("seed is not an integer".into()))?;
        let mut config = Self::new(figure, seed, output_dir);
        for (k, v) in table.metadata() {
            if let Some(name) = k.strip_prefix("param.") {
                config = config.with_override(name, v)?;
            }
        }
        Ok(config)
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output_dir
            .join(format!("{}__{}.csv", self.figure, self.seed))
    }

    pub fn svg_path(&self) -> PathBuf {
        self.output_dir
            .join(format!("{}__{}.svg", self.figure, self.seed))
    }
}

/// Outcome of one automated figure check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureRun {
    pub table: ResultTable,
    pub checks: Vec<Check>,
}

impl FigureRun {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn run(config: &ExperimentConfig) -> Result<FigureRun> {
    match config.figure {
        FigureId::Fig2 => run_fig2(config),
        FigureId::Fig3 => run_fig3(config),
        FigureId::Fig3dSame | FigureId::Fig3dDiff => run_fig3d(config),
        FigureId::Fig5 => run_fig5(config),
        FigureId::Fig6 => run_fig6(config),
        FigureId::Fig7 => run_fig7(config),
    }
}

fn line(title: &str, x: &str, ys: &[&str], series_by: &[&str], log_y: bool) -> PlotSpec {
    PlotSpec::Line(LineSpec {
        title: title.into(),
        x: x.into(),
        ys: ys.iter().map(|s| s.to_string()).collect(),
        series_by: series_by.iter().map(|s| s.to_string()).collect(),
        log_y,
    })
}

/// Default chart for a figure's table.
pub fn plot_spec(figure: FigureId) -> PlotSpec {
    match figure {
        FigureId::Fig2 => line(
            "MUSIC AoA estimates vs SNR",
            "snr_db",
            &["mean_est_alice_rad", "mean_est_eve_rad"],
            &["num_rx_antennas"],
            false,
        ),
        FigureId::Fig3 => line(
            "MSE vs common precoder phase",
            "phi0_rad",
            &["zeta_theory", "zeta_sim"],
            &["beta0", "beta1"],
            true,
        ),
        FigureId::Fig3dSame | FigureId::Fig3dDiff => PlotSpec::Surface(SurfaceSpec {
            title: format!("MSE over precoder phases ({figure})"),
            x: "phi0_rad".into(),
            y: "phi1_rad".into(),
            z: "zeta_theory".into(),
        }),
        FigureId::Fig5 => line(
            "MSE vs attacker SNR",
            "snr_eve_db",
            &["zeta_theory", "zeta_sim"],
            &["num_attacker_antennas"],
            true,
        ),
        FigureId::Fig6 => line(
            "MSE vs attacker angle",
            "theta_hat_e_rad",
            &["zeta_theory"],
            &["theta_rad"],
            true,
        ),
        FigureId::Fig7 => line(
            "MSE vs attacker antenna count",
            "num_attacker_antennas",
            &["zeta_theory", "zeta_sim"],
            &["misaligned"],
            true,
        ),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reproduction {
    pub run: FigureRun,
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
}

/// Run a figure and write `<figure>__<seed>.csv` and `.svg` to the output directory.
pub fn reproduce(config: &ExperimentConfig) -> Result<Reproduction> {
    let run = run(config)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let csv_path = config.csv_path();
    let svg_path = config.svg_path();
    write_atomic(&csv_path, run.table.to_csv().as_bytes())?;
    emit_plot(&run.table, &plot_spec(config.figure), &svg_path)?;
    Ok(Reproduction {
        run,
        csv_path,
        svg_path,
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Metadata shared by every figure table.
pub(crate) fn stamp(table: &mut ResultTable, config: &ExperimentConfig, params: &ParamSet) {
    table.push_metadata("figure", config.figure);
    table.push_metadata("seed", config.seed);
    table.push_metadata("version", ARTIFACT_VERSION);
    for (k, v) in params.iter() {
        table.push_metadata(&format!("param.{k}"), v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_override_is_rejected() {
        let c = ExperimentConfig::new(FigureId::Fig5, 1, "out");
        assert!(matches!(
            c.clone().with_override("nope", "1"),
            Err(Error::UnknownParameter { .. })
        ));
        assert!(c.with_override("trials", "100").is_ok());
    }

    #[test]
    fn file_names() {
        let c = ExperimentConfig::new(FigureId::Fig3dSame, 42, "/tmp/x");
        assert_eq!(c.csv_path(), PathBuf::from("/tmp/x/fig3d_same__42.csv"));
        assert_eq!(c.svg_path(), PathBuf::from("/tmp/x/fig3d_same__42.svg"));
    }
}
