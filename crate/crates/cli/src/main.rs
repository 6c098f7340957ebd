//! `aoa-pla` command-line front end.

mod config;
mod signal_file;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use aoa_pla::array_model::{
    db_to_linear, synthesize_attack, synthesize_legitimate, ArrayGeometry, NoiseModel,
};
use aoa_pla::attack::{mse_gradient_single, optimal_single_precoder, AttackerConfig};
use aoa_pla::auth::{enroll, far_frr_sweep, verify_with, AccessControlList, SweepSetup};
use aoa_pla::experiments::{parse_list, parse_number, reproduce, ExperimentConfig, FigureId};
use aoa_pla::music::{sample_covariance, MusicEstimator, DEFAULT_GRID_STEP};
use aoa_pla::rng::SeedSequence;
use clap::{Args, Parser, Subcommand};

use config::CliConfig;

const DEFAULT_SEED: u64 = 2024;
const DEFAULT_ELEMENTS: usize = 16;
const DEFAULT_SNR_DB: f64 = 15.0;
const DEFAULT_SNAPSHOTS: usize = 2000;

fn angle(s: &str) -> Result<f64, String> {
    parse_number(s).map_err(|e| e.to_string())
}

/// Comma-separated numbers as one flag value.
#[derive(Debug, Clone)]
struct List(Vec<f64>);

fn angles(s: &str) -> Result<List, String> {
    parse_list(s).map(List).map_err(|e| e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "aoa-pla",
    version,
    about = "AoA-based physical layer authentication simulator"
)]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for generated files.
    #[arg(long, global = true, env = "AOA_PLA_OUT")]
    out: Option<PathBuf>,
    /// Configuration file (`key = value` with `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a figure, write CSV and SVG, and report its checks.
    Reproduce {
        /// fig2, fig3, fig3d_same, fig3d_diff, fig5, fig6 or fig7.
        figure: Option<String>,
        /// Parameter override `name=value`; repeatable.
        #[arg(long = "set", value_name = "NAME=VALUE")]
        overrides: Vec<String>,
    },
    /// Optimal single-antenna precoder for an attacker at `theta_hat`.
    AttackOpt {
        #[command(flatten)]
        array: ArrayArgs,
        #[arg(long, value_parser = angle, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long = "theta-hat", value_parser = angle, allow_hyphen_values = true)]
        theta_hat: f64,
        #[arg(long = "snr-legit-db", allow_hyphen_values = true)]
        snr_legit_db: Option<f64>,
        #[arg(long = "snr-attacker-db", allow_hyphen_values = true)]
        snr_attacker_db: Option<f64>,
    },
    /// Estimate angles of arrival with MUSIC.
    Music {
        /// Signal-block file; synthesizes a block when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        synth: SynthArgs,
        /// Number of sources.
        #[arg(long, default_value_t = 1)]
        sources: usize,
        #[arg(long = "grid-step")]
        grid_step: Option<f64>,
        /// Write the pseudospectrum as CSV to this file name in the output directory.
        #[arg(long)]
        spectrum: Option<String>,
        /// Write the synthesized block to this file name in the output directory.
        #[arg(long = "save-block")]
        save_block: Option<String>,
    },
    /// Enroll an identity into an access control list.
    Enroll {
        #[arg(long)]
        acl: PathBuf,
        #[arg(long)]
        identity: String,
        #[command(flatten)]
        synth: SynthArgs,
        /// Number of enrollment blocks.
        #[arg(long, default_value_t = 10)]
        blocks: usize,
    },
    /// Verify one block against an enrolled identity (exit 0 accept, 1 reject, 2 error).
    Verify {
        #[arg(long)]
        acl: PathBuf,
        #[arg(long)]
        identity: String,
        /// Signal-block file; synthesizes a block when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        synth: SynthArgs,
        /// Angle threshold in radians; defaults to the profile's own.
        #[arg(long, value_parser = angle)]
        threshold: Option<f64>,
    },
    /// FAR and FRR over a list of thresholds.
    SweepFarFrr {
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long, value_parser = angles, default_value = "0.005,0.01,0.02,0.05,0.1")]
        thresholds: List,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

#[derive(Args, Debug, Clone)]
struct ArrayArgs {
    /// Number of receive antennas.
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long)]
    spacing: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct SynthArgs {
    #[command(flatten)]
    array: ArrayArgs,
    /// Legitimate transmitter angle.
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// SNR on both links, in dB.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    snapshots: Option<usize>,
    /// Synthesize an attack block from these attacker antenna angles.
    #[arg(long = "attacker-angles", value_parser = angles, allow_hyphen_values = true)]
    attacker_angles: Option<List>,
    /// Attacker amplitudes; equal split summing to 1 by default.
    #[arg(long = "attacker-amplitudes", value_parser = angles)]
    attacker_amplitudes: Option<List>,
    /// Attacker phases; zero by default.
    #[arg(long = "attacker-phases", value_parser = angles, allow_hyphen_values = true)]
    attacker_phases: Option<List>,
}

/// Flags merged over the config file.
struct Ctx {
    cfg: CliConfig,
    seed: u64,
    out: PathBuf,
}

impl Ctx {
    fn geometry(&self, a: &ArrayArgs) -> Result<ArrayGeometry> {
        let m = a.m.or(self.cfg.num_elements).unwrap_or(DEFAULT_ELEMENTS);
        let spacing = a.spacing.or(self.cfg.spacing).unwrap_or(0.5);
        Ok(ArrayGeometry::new(m, spacing)?)
    }

    fn theta(&self, t: Option<f64>) -> Result<f64> {
        t.or(self.cfg.theta)
            .context("missing --theta (or scenario.theta in the config)")
    }

    fn noise(&self, snr_db: Option<f64>) -> Result<NoiseModel> {
        let legit = snr_db.or(self.cfg.snr_legit_db).unwrap_or(DEFAULT_SNR_DB);
        let attacker = snr_db.or(self.cfg.snr_attacker_db).unwrap_or(legit);
        Ok(NoiseModel::from_db(legit, attacker)?)
    }

    fn attacker(&self, s: &SynthArgs) -> Result<Option<AttackerConfig>> {
        let Some(angles) = s
            .attacker_angles
            .clone()
            .map(|l| l.0)
            .or_else(|| self.cfg.attacker_angles.clone())
        else {
            return Ok(None);
        };
        let l = angles.len();
        let amps = s
            .attacker_amplitudes
            .clone()
            .map(|l| l.0)
            .or_else(|| self.cfg.attacker_amplitudes.clone())
            .unwrap_or_else(|| vec![1.0 / l as f64; l]);
        let phases = s
            .attacker_phases
            .clone()
            .map(|l| l.0)
            .or_else(|| self.cfg.attacker_phases.clone())
            .unwrap_or_else(|| vec![0.0; l]);
        Ok(Some(AttackerConfig::from_polar(angles, amps, phases)?))
    }

    fn snapshots(&self, s: &SynthArgs) -> usize {
        s.snapshots
            .or(self.cfg.snapshots)
            .unwrap_or(DEFAULT_SNAPSHOTS)
    }

    fn grid_step(&self, g: Option<f64>) -> f64 {
        g.or(self.cfg.grid_step).unwrap_or(DEFAULT_GRID_STEP)
    }

    /// Synthesize one block: the attacker's if attacker angles are given.
    fn synth_block(&self, s: &SynthArgs, seed: u64) -> Result<aoa_pla::array_model::SignalBlock> {
        let geom = self.geometry(&s.array)?;
        let noise = self.noise(s.snr_db)?;
        let n = self.snapshots(s);
        Ok(match self.attacker(s)? {
            Some(att) => synthesize_attack(&geom, &att, &noise, n, seed)?,
            None => synthesize_legitimate(&geom, self.theta(s.theta)?, &noise, n, seed)?,
        })
    }

    fn out_file(&self, name: &str) -> Result<PathBuf> {
        if Path::new(name).components().count() != 1 {
            bail!("output file name {name:?} must not contain directories");
        }
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        Ok(self.out.join(name))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = match &cli.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    let ctx = Ctx {
        seed: cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        out: cli
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        cfg,
    };
    match cli.command {
        Command::Reproduce { figure, overrides } => cmd_reproduce(&ctx, figure, &overrides),
        Command::AttackOpt {
            array,
            theta,
            theta_hat,
            snr_legit_db,
            snr_attacker_db,
        } => cmd_attack_opt(
            &ctx,
            &array,
            theta,
            theta_hat,
            snr_legit_db,
            snr_attacker_db,
        ),
        Command::Music {
            input,
            synth,
            sources,
            grid_step,
            spectrum,
            save_block,
        } => cmd_music(
            &ctx, input, &synth, sources, grid_step, spectrum, save_block,
        ),
        Command::Enroll {
            acl,
            identity,
            synth,
            blocks,
        } => cmd_enroll(&ctx, &acl, &identity, &synth, blocks),
        Command::Verify {
            acl,
            identity,
            input,
            synth,
            threshold,
        } => cmd_verify(&ctx, &acl, &identity, input, &synth, threshold),
        Command::SweepFarFrr {
            synth,
            thresholds,
            trials,
        } => cmd_sweep(&ctx, &synth, &thresholds.0, trials),
    }
}

fn cmd_reproduce(ctx: &Ctx, figure: Option<String>, overrides: &[String]) -> Result<ExitCode> {
    let name = figure
        .or_else(|| ctx.cfg.figure.clone())
        .context("missing figure (e.g. `reproduce fig3`)")?;
    let figure: FigureId = name.parse()?;
    let mut config = ExperimentConfig::new(figure, ctx.seed, &ctx.out);
    for (k, v) in &ctx.cfg.overrides {
        config = config.with_override(k, v)?;
    }
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects NAME=VALUE, got {kv:?}"))?;
        config = config.with_override(k.trim(), v.trim())?;
    }
    let rep = reproduce(&config)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{figure} (seed {})", ctx.seed)?;
    for c in &rep.run.checks {
        writeln!(stdout, "  {c}")?;
    }
    writeln!(stdout, "wrote {}", rep.csv_path.display())?;
    writeln!(stdout, "wrote {}", rep.svg_path.display())?;
    Ok(if rep.run.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_attack_opt(
    ctx: &Ctx,
    array: &ArrayArgs,
    theta: Option<f64>,
    theta_hat: f64,
    snr_legit_db: Option<f64>,
    snr_attacker_db: Option<f64>,
) -> Result<ExitCode> {
    let geom = ctx.geometry(array)?;
    let theta = ctx.theta(theta)?;
    let legit = snr_legit_db
        .or(ctx.cfg.snr_legit_db)
        .unwrap_or(DEFAULT_SNR_DB);
    let attacker = snr_attacker_db
        .or(ctx.cfg.snr_attacker_db)
        .unwrap_or(DEFAULT_SNR_DB);
    let noise = NoiseModel::from_db(legit, attacker)?;
    let opt = optimal_single_precoder(&geom, theta, theta_hat, &noise)?;
    let (gb, gp) = mse_gradient_single(&geom, theta, theta_hat, opt.beta_star, opt.phi_star);
    let floor = 1.0 / db_to_linear(legit) + 1.0 / db_to_linear(attacker);
    println!("M                 = {}", geom.num_elements());
    println!("theta             = {theta}");
    println!("theta_hat         = {theta_hat}");
    println!("beta*             = {}", opt.beta_star);
    println!("phi*              = {}", opt.phi_star);
    println!("branch            = {}", opt.branch);
    println!("hessian det D     = {}", opt.hessian_det);
    println!("zeta*             = {}", opt.zeta_at_opt);
    println!("noise floor       = {floor}");
    println!("gap zeta* - floor = {}", opt.zeta_at_opt - floor);
    println!("gradient residual = {:e}", gb.hypot(gp));
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_music(
    ctx: &Ctx,
    input: Option<PathBuf>,
    synth: &SynthArgs,
    sources: usize,
    grid_step: Option<f64>,
    spectrum: Option<String>,
    save_block: Option<String>,
) -> Result<ExitCode> {
    let block = match &input {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            signal_file::parse_block(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ctx.synth_block(synth, SeedSequence::new(ctx.seed).seed(0))?,
    };
    let spacing = synth.array.spacing.or(ctx.cfg.spacing).unwrap_or(0.5);
    let geom = ArrayGeometry::new(block.num_elements(), spacing)?;
    let est = MusicEstimator::new(geom, ctx.grid_step(grid_step))?;
    let spec = est.pseudospectrum(&sample_covariance(&block)?, sources)?;
    if let Some(name) = spectrum {
        let path = ctx.out_file(&name)?;
        let mut csv = String::from("angle_rad,pseudospectrum\n");
        for (a, v) in spec.grid.iter().zip(&spec.values) {
            csv.push_str(&format!("{a},{v}\n"));
        }
        std::fs::write(&path, csv)?;
        println!("wrote {}", path.display());
    }
    if let Some(name) = save_block {
        let path = ctx.out_file(&name)?;
        std::fs::write(&path, signal_file::format_block(&block))?;
        println!("wrote {}", path.display());
    }
    if spec.peaks.len() < sources {
        bail!(
            "spectrum has {} peaks, {sources} requested",
            spec.peaks.len()
        );
    }
    for (i, p) in spec.peaks[..sources].iter().enumerate() {
        println!(
            "source {i}: angle = {} rad ({:.3} deg), height = {:e}",
            p.angle,
            p.angle.to_degrees(),
            p.height
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_enroll(
    ctx: &Ctx,
    acl_path: &Path,
    identity: &str,
    synth: &SynthArgs,
    blocks: usize,
) -> Result<ExitCode> {
    if blocks == 0 {
        bail!("--blocks must be at least 1");
    }
    let geom = ctx.geometry(&synth.array)?;
    let est = MusicEstimator::new(geom, ctx.grid_step(None))?;
    let seeds = SeedSequence::new(ctx.seed);
    let estimates = (0..blocks as u64)
        .map(|i| Ok(est.estimate(&ctx.synth_block(synth, seeds.seed(i))?, 1)?[0]))
        .collect::<Result<Vec<f64>>>()?;
    let profile = enroll(identity, &estimates)?;
    let acl = if acl_path.exists() {
        AccessControlList::load(acl_path)?
    } else {
        AccessControlList::new()
    };
    acl.insert(profile.clone())?;
    acl.save(acl_path)?;
    println!(
        "enrolled {identity}: angle = {} rad, spread = {:e} rad over {} blocks",
        profile.enrolled_angle, profile.enrollment_spread, profile.num_enrollment_estimates
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(
    ctx: &Ctx,
    acl_path: &Path,
    identity: &str,
    input: Option<PathBuf>,
    synth: &SynthArgs,
    threshold: Option<f64>,
) -> Result<ExitCode> {
    let acl = AccessControlList::load(acl_path)?;
    let profile = acl
        .get(identity)
        .with_context(|| format!("identity {identity:?} is not enrolled"))?;
    let block = match &input {
        Some(p) => signal_file::parse_block(
            &std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?,
        None => ctx.synth_block(synth, SeedSequence::new(ctx.seed).child(1).seed(0))?,
    };
    let spacing = synth.array.spacing.or(ctx.cfg.spacing).unwrap_or(0.5);
    let geom = ArrayGeometry::new(block.num_elements(), spacing)?;
    let step = ctx.grid_step(None);
    let threshold = threshold.unwrap_or_else(|| profile.default_threshold(step));
    let d = verify_with(
        &MusicEstimator::new(geom, step)?,
        &profile,
        &block,
        threshold,
    )?;
    println!("identity      = {identity}");
    println!(
        "decision      = {}",
        if d.accepted { "ACCEPT" } else { "REJECT" }
    );
    match d.measured_angle {
        Some(a) => println!("measured      = {a} rad"),
        None => println!("measured      = none"),
    }
    println!("enrolled      = {} rad", profile.enrolled_angle);
    println!("deviation     = {:e} rad", d.deviation);
    println!("threshold     = {} rad", d.threshold);
    if let Some(msg) = &d.diagnostic {
        println!("diagnostic    = {msg}");
    }
    Ok(if d.accepted {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_sweep(ctx: &Ctx, synth: &SynthArgs, thresholds: &[f64], trials: usize) -> Result<ExitCode> {
    let geom = ctx.geometry(&synth.array)?;
    let theta = ctx.theta(synth.theta)?;
    let attacker = ctx
        .attacker(synth)?
        .context("missing --attacker-angles (or attacker.angles in the config)")?;
    let mut setup = SweepSetup::new(geom, theta, attacker, ctx.noise(synth.snr_db)?);
    setup.num_snapshots = ctx.snapshots(synth);
    setup.grid_step = ctx.grid_step(None);
    let points = far_frr_sweep(&setup, thresholds, trials, ctx.seed)?;
    let mut csv = String::from("threshold_rad,far,frr\n");
    println!("{:>14} {:>8} {:>8}", "threshold_rad", "FAR", "FRR");
    for p in &points {
        println!("{:>14} {:>8.4} {:>8.4}", p.threshold, p.far, p.frr);
        csv.push_str(&format!("{},{},{}\n", p.threshold, p.far, p.frr));
    }
    let path = ctx.out_file(&format!("far_frr__{}.csv", ctx.seed))?;
    std::fs::write(&path, csv)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}
