//! One runner per figure.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use super::{stamp, Check, Column, ExperimentConfig, FigureId, FigureRun, ResultTable};
use crate::array_model::{synthesize_attack, synthesize_legitimate, ArrayGeometry, NoiseModel};
use crate::attack::{monte_carlo_mse, mse_closed_form, multi_optimum_condition, AttackerConfig};
use crate::music::MusicEstimator;
use crate::rng::SeedSequence;
use crate::{Error, Result};

/// Largest acceptable |theory - simulation| / theory.
const SIM_REL_GAP: f64 = 0.02;
/// How far (per phase, circularly) the surface minimum may sit from the origin.
const NEAR_ORIGIN: f64 = 0.3;
const FLOOR_TOL: f64 = 1e-9;
const EXACT_TOL: f64 = 1e-12;

fn require(config: &ExperimentConfig, allowed: &[FigureId]) -> Result<()> {
    if allowed.contains(&config.figure) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "runner for {allowed:?} called with {}",
            config.figure
        )))
    }
}

fn geometry(m: usize, spacing: f64) -> Result<ArrayGeometry> {
    ArrayGeometry::new(m, spacing)
}

/// `n` points from 0 to 2 pi inclusive, about `step` apart.
fn phase_grid(step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && step <= PI) {
        return Err(Error::InvalidArgument(format!("invalid phase step {step}")));
    }
    let n = (TAU / step).round() as usize + 1;
    Ok((0..n).map(|k| TAU * k as f64 / (n - 1) as f64).collect())
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn nearest(grid: &[f64], target: f64) -> f64 {
    grid.iter()
        .copied()
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .expect("non-empty grid")
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty")
}

fn max_rel_gap(theory: &[f64], sim: &[f64]) -> f64 {
    theory
        .iter()
        .zip(sim)
        .map(|(t, s)| (t - s).abs() / t.abs())
        .fold(0.0, f64::max)
}

struct AoaStats {
    mean_alice: f64,
    mean_eve: f64,
    mae_alice: f64,
    mae_eve: f64,
    frac_close: f64,
}

/// MUSIC estimates of the legitimate and attack transmitters vs SNR and M.
pub fn run_fig2(config: &ExperimentConfig) -> Result<FigureRun> {
    require(config, &[FigureId::Fig2])?;
    let p = config.params()?;
    let theta = p.scalar("theta");
    let theta_hat = p.scalar("theta_hat");
    let snrs = p.list("snr_db").to_vec();
    let ms = p.counts("num_rx")?;
    let n = p.count("snapshots")?;
    let trials = p.count("trials")?;
    let step = p.scalar("grid_step");
    let noiseless = p.flag("noiseless");
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let attacker = AttackerConfig::uniform(p.count("attacker_antennas")?, theta_hat, 1.0, 0.0)?;
    let estimators = ms
        .iter()
        .map(|&m| MusicEstimator::new(geometry(m, p.scalar("spacing"))?, step))
        .collect::<Result<Vec<_>>>()?;
    let root = SeedSequence::new(config.seed);

    let mut points = Vec::new();
    for &snr in &snrs {
        for mi in 0..ms.len() {
            points.push((snr, mi));
        }
    }
    let mut stats = Vec::with_capacity(points.len());
    for (idx, &(snr, mi)) in points.iter().enumerate() {
        let est = &estimators[mi];
        let geom = est.geometry();
        let noise = if noiseless {
            NoiseModel::noiseless()
        } else {
            NoiseModel::from_db(snr, snr)?
        };
        let seeds = root.child(idx as u64);
        let pairs = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let legit = synthesize_legitimate(geom, theta, &noise, n, seeds.child(0).seed(t))?;
                let attack = synthesize_attack(geom, &attacker, &noise, n, seeds.child(1).seed(t))?;
                Ok((est.estimate(&legit, 1)?[0], est.estimate(&attack, 1)?[0]))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let k = trials as f64;
        stats.push(AoaStats {
            mean_alice: pairs.iter().map(|p| p.0).sum::<f64>() / k,
            mean_eve: pairs.iter().map(|p| p.1).sum::<f64>() / k,
            mae_alice: pairs.iter().map(|p| (p.0 - theta).abs()).sum::<f64>() / k,
            mae_eve: pairs.iter().map(|p| (p.1 - theta_hat).abs()).sum::<f64>() / k,
            frac_close: pairs.iter().filter(|p| (p.0 - p.1).abs() < 0.1).count() as f64 / k,
        });
    }

    let mut table = ResultTable::new(vec![
        Column::new("snr_db", "dB"),
        Column::new("num_rx_antennas", ""),
        Column::new("mean_est_alice_rad", "rad"),
        Column::new("mean_est_eve_rad", "rad"),
        Column::new("mae_alice_rad", "rad"),
        Column::new("mae_eve_rad", "rad"),
        Column::new("frac_within_0p1_rad", ""),
    ]);
    stamp(&mut table, config, &p);
    for (&(snr, mi), s) in points.iter().zip(&stats) {
        table.push_row(vec![
            snr,
            ms[mi] as f64,
            s.mean_alice,
            s.mean_eve,
            s.mae_alice,
            s.mae_eve,
            s.frac_close,
        ]);
    }

    let mut checks = Vec::new();
    let find = |snr: f64, m: usize| points.iter().position(|&(s, mi)| s == snr && ms[mi] == m);
    if noiseless {
        let mut worst: f64 = 0.0;
        for (&(_, mi), s) in points.iter().zip(&stats) {
            let grid = estimators[mi].grid();
            worst = worst
                .max((s.mean_alice - nearest(grid, theta)).abs())
                .max((s.mean_eve - nearest(grid, theta_hat)).abs());
        }
        checks.push(Check::new(
            "noiseless_grid_exact",
            worst <= EXACT_TOL,
            format!("max distance to nearest grid angle {worst:.3e}"),
        ));
    } else {
        if let Some(i) = find(15.0, 16) {
            let s = &stats[i];
            let ok = (s.mean_alice - theta).abs() <= 0.01
                && (s.mean_eve - theta_hat).abs() <= 0.01
                && s.mae_alice <= 0.01
                && s.mae_eve <= 0.01;
            checks.push(Check::new(
                "high_snr_accuracy",
                ok,
                format!(
                    "15 dB, M=16: mean {:.5}/{:.5}, mean abs error {:.2e}/{:.2e} (limit 0.01)",
                    s.mean_alice, s.mean_eve, s.mae_alice, s.mae_eve
                ),
            ));
        }
        if let Some(i) = find(-10.0, 2) {
            let f = stats[i].frac_close;
            checks.push(Check::new(
                "low_snr_overlap",
                f > 0.5,
                format!(
                    "-10 dB, M=2: {:.1}% of trials within 0.1 rad (need > 50%)",
                    100.0 * f
                ),
            ));
        }
    }
    Ok(FigureRun { table, checks })
}

/// MSE vs a common precoder phase for several amplitude pairs.
pub fn run_fig3(config: &ExperimentConfig) -> Result<FigureRun> {
    require(config, &[FigureId::Fig3])?;
    let p = config.params()?;
    let theta = p.scalar("theta");
    let angles = vec![p.scalar("theta_hat0"), p.scalar("theta_hat1")];
    let geom = geometry(p.count("num_rx")?, p.scalar("spacing"))?;
    let snr = p.scalar("snr_db");
    let noise = NoiseModel::from_db(snr, snr)?;
    let phis = phase_grid(p.scalar("phi_step"))?;
    let trials = p.count("trials")?;
    let pairs = p.list("beta_pairs");
    if pairs.is_empty() || pairs.len() % 2 != 0 {
        return Err(Error::InvalidArgument(
            "beta_pairs needs an even, non-zero count".into(),
        ));
    }
    let root = SeedSequence::new(config.seed);

    let mut table = ResultTable::new(vec![
        Column::new("beta0", ""),
        Column::new("beta1", ""),
        Column::new("phi0_rad", "rad"),
        Column::new("zeta_theory", ""),
        Column::new("zeta_sim", ""),
        Column::new("zeta_sim_stderr", ""),
    ]);
    stamp(&mut table, config, &p);
    let mut checks = Vec::new();
    let mut worst_gap: f64 = 0.0;
    let aligned = angles
        .iter()
        .all(|t| (t.sin() - theta.sin()).abs() <= EXACT_TOL);
    for (ci, pair) in pairs.chunks(2).enumerate() {
        let (b0, b1) = (pair[0], pair[1]);
        let seeds = root.child(ci as u64);
        let mut theory = Vec::with_capacity(phis.len());
        let mut sim = Vec::with_capacity(phis.len());
        for (k, &phi) in phis.iter().enumerate() {
            let attacker =
                AttackerConfig::from_polar(angles.clone(), vec![b0, b1], vec![phi, phi])?;
            let t = mse_closed_form(&geom, theta, &attacker, &noise).zeta;
            let s = monte_carlo_mse(
                &geom,
                theta,
                &attacker,
                &noise,
                trials,
                seeds.seed(k as u64),
            )?;
            table.push_row(vec![b0, b1, phi, t, s.mean, s.std_error]);
            theory.push(t);
            sim.push(s.mean);
        }
        worst_gap = worst_gap.max(max_rel_gap(&theory, &sim));
        let at_zero = AttackerConfig::from_polar(angles.clone(), vec![b0, b1], vec![0.0, 0.0])?;
        if multi_optimum_condition(&at_zero, theta).holds {
            let d = (theory[0] - noise.floor()).abs();
            checks.push(Check::new(
                &format!("noise_floor_at_zero[{b0},{b1}]"),
                d <= FLOOR_TOL,
                format!("zeta(0) = {:.10} vs floor {:.10}", theory[0], noise.floor()),
            ));
        }
        if aligned {
            let last = phis.len() - 1;
            let (it, is) = (argmin(&theory), argmin(&sim));
            checks.push(Check::new(
                &format!("argmin_at_boundary[{b0},{b1}]"),
                [0, last].contains(&it) && [0, last].contains(&is),
                format!(
                    "theory argmin phi={:.4}, simulated argmin phi={:.4}",
                    phis[it], phis[is]
                ),
            ));
        }
    }
    checks.push(Check::new(
        "theory_sim_gap",
        worst_gap <= SIM_REL_GAP,
        format!(
            "max relative gap {:.3}% (limit {}%)",
            100.0 * worst_gap,
            100.0 * SIM_REL_GAP
        ),
    ));
    Ok(FigureRun { table, checks })
}

/// Closed-form MSE surface over the two precoder phases.
pub fn run_fig3d(config: &ExperimentConfig) -> Result<FigureRun> {
    require(config, &[FigureId::Fig3dSame, FigureId::Fig3dDiff])?;
    let p = config.params()?;
    let theta = p.scalar("theta");
    let angles = vec![p.scalar("theta_hat0"), p.scalar("theta_hat1")];
    let betas = vec![p.scalar("beta0"), p.scalar("beta1")];
    let geom = geometry(p.count("num_rx")?, p.scalar("spacing"))?;
    let snr = p.scalar("snr_db");
    let noise = NoiseModel::from_db(snr, snr)?;
    let phis = phase_grid(p.scalar("phi_step"))?;
    let n = phis.len();

    let surface = phis
        .par_iter()
        .map(|&p0| {
            phis.iter()
                .map(|&p1| {
                    let attacker =
                        AttackerConfig::from_polar(angles.clone(), betas.clone(), vec![p0, p1])?;
                    Ok(mse_closed_form(&geom, theta, &attacker, &noise).zeta)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = ResultTable::new(vec![
        Column::new("phi0_rad", "rad"),
        Column::new("phi1_rad", "rad"),
        Column::new("zeta_theory", ""),
    ]);
    stamp(&mut table, config, &p);
    for (i, row) in surface.iter().enumerate() {
        for (j, &z) in row.iter().enumerate() {
            table.push_row(vec![phis[i], phis[j], z]);
        }
    }

    let mut asym: f64 = 0.0;
    for (i, row) in surface.iter().enumerate() {
        for (j, &z) in row.iter().enumerate().take(i) {
            asym = asym.max((z - surface[j][i]).abs());
        }
    }
    let mut checks = Vec::new();
    if config.figure == FigureId::Fig3dSame {
        checks.push(Check::new(
            "swap_symmetry",
            asym <= EXACT_TOL,
            format!("max |zeta(p0,p1) - zeta(p1,p0)| = {asym:.3e}"),
        ));
    } else {
        checks.push(Check::new(
            "swap_asymmetry",
            asym > 1e-6,
            format!("max |zeta(p0,p1) - zeta(p1,p0)| = {asym:.3e} (need > 1e-6)"),
        ));
    }
    let flat: Vec<f64> = surface.concat();
    let k = argmin(&flat);
    let (p0, p1) = (phis[k / n], phis[k % n]);
    checks.push(Check::new(
        "minimum_near_origin",
        circular_distance(p0, 0.0) <= NEAR_ORIGIN && circular_distance(p1, 0.0) <= NEAR_ORIGIN,
        format!("argmin at ({p0:.3}, {p1:.3}), zeta = {:.6}", flat[k]),
    ));
    Ok(FigureRun { table, checks })
}

/// MSE vs attacker SNR for several attacker antenna counts.
pub fn run_fig5(config: &ExperimentConfig) -> Result<FigureRun> {
    require(config, &[FigureId::Fig5])?;
    let p = config.params()?;
    let theta = p.scalar("theta");
    let theta_hat = p.scalar("theta_hat");
    let geom = geometry(p.count("num_rx")?, p.scalar("spacing"))?;
    let snr_alice = p.scalar("snr_alice_db");
    let snr_eve = p.list("snr_eve_db").to_vec();
    let ls = p.counts("attacker_antennas")?;
    let trials = p.count("trials")?;
    let root = SeedSequence::new(config.seed);

    let mut table = ResultTable::new(vec![
        Column::new("num_attacker_antennas", ""),
        Column::new("snr_eve_db", "dB"),
        Column::new("zeta_theory", ""),
        Column::new("zeta_sim", ""),
        Column::new("zeta_sim_stderr", ""),
    ]);
    stamp(&mut table, config, &p);
    let mut curves = Vec::new();
    for (li, &l) in ls.iter().enumerate() {
        let attacker = AttackerConfig::uniform(l, theta_hat, 1.0, 0.0)?;
        let mut curve = Vec::new();
        for (k, &se) in snr_eve.iter().enumerate() {
            let noise = NoiseModel::from_db(snr_alice, se)?;
            let t = mse_closed_form(&geom, theta, &attacker, &noise).zeta;
            let s = monte_carlo_mse(
                &geom,
                theta,
                &attacker,
                &noise,
                trials,
                root.child(li as u64).seed(k as u64),
            )?;
            table.push_row(vec![l as f64, se, t, s.mean, s.std_error]);
            curve.push(t);
        }
        curves.push(curve);
    }

    let mut checks = Vec::new();
    let decreasing = curves.iter().all(|c| c.windows(2).all(|w| w[1] < w[0]));
    checks.push(Check::new(
        "decreasing_in_snr_eve",
        decreasing,
        "closed-form zeta strictly decreasing along every curve".to_string(),
    ));
    let mut spread: f64 = 0.0;
    for k in 0..snr_eve.len() {
        let (lo, hi) = curves
            .iter()
            .map(|c| c[k])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
        spread = spread.max(hi - lo);
    }
    checks.push(Check::new(
        "l_invariance",
        spread <= EXACT_TOL,
        format!("max spread across antenna counts {spread:.3e}"),
    ));
    if let Some(k) = snr_eve.iter().position(|&s| s == snr_alice) {
        if let Some(curve) = curves.first() {
            let floor = NoiseModel::from_db(snr_alice, snr_alice)?.floor();
            let aligned = (theta.sin() - theta_hat.sin()).abs() <= EXACT_TOL;
            checks.push(Check::new(
                "equal_snr_floor",
                aligned && (curve[k] - floor).abs() <= FLOOR_TOL,
                format!("zeta at equal SNR {:.10} vs floor {floor:.10}", curve[k]),
            ));
        }
    }
    Ok(FigureRun { table, checks })
}

/// Attacker angle grid for one legitimate angle: coarse over [-pi, pi], fine
/// around `theta` and its alias `pi - theta`.
fn fig6_grid(theta: f64, coarse: f64, fine: f64, halfwidth: f64) -> Result<Vec<f64>> {
    for (name, v) in [
        ("coarse_step", coarse),
        ("fine_step", fine),
        ("refine_halfwidth", halfwidth),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let alias = {
        let a = PI - theta;
        if a > PI {
            a - TAU
        } else {
            a
        }
    };
    let centers = [theta, alias];
    let inside = |x: f64| centers.iter().any(|&c| (x - c).abs() <= halfwidth);
    let nc = (TAU / coarse).round() as usize;
    let mut grid: Vec<f64> = (0..=nc)
        .map(|k| -PI + TAU * k as f64 / nc as f64)
        .filter(|&x| !inside(x))
        .collect();
    let nf = (halfwidth / fine).round() as i64;
    for c in centers {
        for j in -nf..=nf {
            let x = c + j as f64 * fine;
            if (-PI..=PI).contains(&x) {
                grid.push(x);
            }
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// MSE vs the shared attacker angle, for several legitimate angles.
pub fn run_fig6(config: &ExperimentConfig) -> Result<FigureRun> {
    require(config, &[FigureId::Fig6])?;
    let p = config.params()?;
    let geom = geometry(p.count("num_rx")?, p.scalar("spacing"))?;
    let l = p.count("attacker_antennas")?;
    let snr = p.scalar("snr_db");
    let noise = NoiseModel::from_db(snr, snr)?;
    let zeta = |theta: f64, x: f64| -> Result<f64> {
        Ok(mse_closed_form(
            &geom,
            theta,
            &AttackerConfig::uniform(l, x, 1.0, 0.0)?,
            &noise,
        )
        .zeta)
    };

    let mut table = ResultTable::new(vec![
        Column::new("theta_rad", "rad"),
        Column::new("theta_hat_e_rad", "rad"),
        Column::new("zeta_theory", ""),
    ]);
    stamp(&mut table, config, &p);
    let mut checks = Vec::new();
    for &theta in p.list("thetas") {
        let grid = fig6_grid(
            theta,
            p.scalar("coarse_step"),
            p.scalar("fine_step"),
            p.scalar("refine_halfwidth"),
        )?;
        let values = grid
            .par_iter()
            .map(|&x| zeta(theta, x))
            .collect::<Result<Vec<_>>>()?;
        for (&x, &z) in grid.iter().zip(&values) {
            table.push_row(vec![theta, x, z]);
        }

        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let minima: Vec<f64> = grid
            .iter()
            .zip(&values)
            .filter(|(_, &z)| z <= min + EXACT_TOL)
            .map(|(&x, _)| x)
            .collect();
        let alias = if PI - theta > PI {
            PI - theta - TAU
        } else {
            PI - theta
        };
        let mut expected = vec![nearest(&grid, theta), nearest(&grid, alias)];
        expected.sort_by(f64::total_cmp);
        expected.dedup();
        checks.push(Check::new(
            &format!("alias_minima[{theta}]"),
            minima == expected,
            format!("minima at {minima:?}, expected {expected:?}"),
        ));
        checks.push(Check::new(
            &format!("minimum_value[{theta}]"),
            (min - noise.floor()).abs() <= EXACT_TOL,
            format!("min zeta {min:.15} vs floor {:.15}", noise.floor()),
        ));
        let mut sym: f64 = 0.0;
        for (&x, &z) in grid.iter().zip(&values) {
            sym = sym.max((z - zeta(theta, PI - x)?).abs());
        }
        checks.push(Check::new(
            &format!("alias_symmetry[{theta}]"),
            sym <= EXACT_TOL,
            format!("max |zeta(x) - zeta(pi - x)| = {sym:.3e}"),
        ));
    }
    Ok(FigureRun { table, checks })
}

/// MSE vs attacker antenna count, aligned and misaligned.
pub fn run_fig7(config: &ExperimentConfig) -> Result<FigureRun> {
    require(config, &[FigureId::Fig7])?;
    let p = config.params()?;
    let theta = p.scalar("theta");
    let geom = geometry(p.count("num_rx")?, p.scalar("spacing"))?;
    let snr = p.scalar("snr_db");
    let noise = NoiseModel::from_db(snr, snr)?;
    let ls = p.counts("attacker_antennas")?;
    let gap = p.scalar("misalign_gap");
    let trials = p.count("trials")?;
    let root = SeedSequence::new(config.seed);

    let mut table = ResultTable::new(vec![
        Column::new("num_attacker_antennas", ""),
        Column::new("misaligned", ""),
        Column::new("zeta_theory", ""),
        Column::new("zeta_sim", ""),
        Column::new("zeta_sim_stderr", ""),
    ]);
    stamp(&mut table, config, &p);
    let mut theory = [Vec::new(), Vec::new()];
    let mut worst_z: f64 = 0.0;
    for mis in 0..2 {
        let theta_hat = theta + gap * mis as f64;
        for (li, &l) in ls.iter().enumerate() {
            let attacker = AttackerConfig::uniform(l, theta_hat, 1.0, 0.0)?;
            let t = mse_closed_form(&geom, theta, &attacker, &noise).zeta;
            let s = monte_carlo_mse(
                &geom,
                theta,
                &attacker,
                &noise,
                trials,
                root.child(mis).seed(li as u64),
            )?;
            table.push_row(vec![l as f64, mis as f64, t, s.mean, s.std_error]);
            theory[mis as usize].push(t);
            worst_z = worst_z.max((s.mean - t).abs() / s.std_error);
        }
    }

    let (lo, hi) = theory[0]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let spread = if theory[0].is_empty() { 0.0 } else { hi - lo };
    let higher = theory[0].iter().zip(&theory[1]).all(|(a, m)| m > a);
    let checks = vec![
        Check::new(
            "aligned_constant",
            spread <= EXACT_TOL,
            format!("aligned spread across L {spread:.3e}"),
        ),
        Check::new(
            "misaligned_higher",
            higher,
            format!("misaligned zeta exceeds aligned at every L (gap {gap} rad)"),
        ),
        Check::new(
            "sim_within_3sigma",
            worst_z <= 3.0,
            format!("worst |sim - theory| = {worst_z:.2} standard errors"),
        ),
    ];
    Ok(FigureRun { table, checks })
}
