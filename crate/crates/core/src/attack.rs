//! Impersonation analysis: the mean square error between what Bob receives
//! from the legitimate transmitter and from an adversary that precodes its
//! pilot across `L` antennas.
//!
//! For a legitimate steering vector `a`, attacker steering matrix `A_hat` and
//! precoder `q`, the MSE is
//!
//! ```text
//! zeta = a^H a - a^H A_hat q - q^H A_hat^H a + q^H G q + 1/snr + 1/snr_hat
//! ```
//!
//! with `G = A_hat^H A_hat`. Everything except the noise floor is collected in
//! the deterministic part `delta`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::array_model::{
    add_noise, attacker_response, steering_vector, ArrayGeometry, NoiseModel,
};
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::rng::SeedSequence;
use crate::{Error, Result, C64};

/// Angle gaps (in `sin` units) at or below this are treated as zero.
pub const ALIGNMENT_TOLERANCE: f64 = 1e-12;

/// L transmit antennas, each with an AoA and a precoder `beta e^{j phi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackerConfig {
    angles: Vec<f64>,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl AttackerConfig {
    /// Phases are wrapped into `[0, 2pi)`.
    pub fn from_polar(angles: Vec<f64>, amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidAttacker(
                "attacker needs at least one antenna".into(),
            ));
        }
        if amplitudes.len() != angles.len() || phases.len() != angles.len() {
            return Err(Error::InvalidAttacker(format!(
                "length mismatch: {} angles, {} amplitudes, {} phases",
                angles.len(),
                amplitudes.len(),
                phases.len()
            )));
        }
        if let Some(v) = angles.iter().chain(&phases).find(|v| !v.is_finite()) {
            return Err(Error::InvalidAttacker(format!("non-finite value {v}")));
        }
        if let Some(b) = amplitudes.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::InvalidAttacker(format!(
                "amplitudes must be finite and >= 0, got {b}"
            )));
        }
        Ok(Self {
            angles,
            amplitudes,
            phases: phases.into_iter().map(wrap_phase).collect(),
        })
    }

    pub fn single(angle: f64, amplitude: f64, phase: f64) -> Result<Self> {
        Self::from_polar(vec![angle], vec![amplitude], vec![phase])
    }

    pub fn from_complex(angles: Vec<f64>, precoders: &[C64]) -> Result<Self> {
        let (amps, phases) = precoders.iter().map(|q| (q.norm(), q.arg())).unzip();
        Self::from_polar(angles, amps, phases)
    }

    /// `L` co-located antennas at `angle`, equal amplitudes summing to
    /// `total_amplitude`, common phase.
    pub fn uniform(
        num_antennas: usize,
        angle: f64,
        total_amplitude: f64,
        phase: f64,
    ) -> Result<Self> {
        let n = num_antennas;
        let beta = total_amplitude / n as f64;
        Self::from_polar(vec![angle; n], vec![beta; n], vec![phase; n])
    }

    pub fn num_antennas(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn precoders(&self) -> Vec<C64> {
        self.amplitudes
            .iter()
            .zip(&self.phases)
            .map(|(&b, &p)| C64::from_polar(b, p))
            .collect()
    }

    pub fn aggregate(&self) -> AggregatePrecoder {
        let s: C64 = self.precoders().into_iter().sum();
        AggregatePrecoder { u: s.re, v: s.im }
    }
}

/// `sum_i q_i = u + jv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatePrecoder {
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseBreakdown {
    /// Total expected MSE.
    pub zeta: f64,
    /// Deterministic part `||a - A_hat q||^2`.
    pub delta: f64,
    /// `sin(theta) - sin(theta_hat)`, single-antenna attackers only.
    pub alpha: Option<f64>,
    /// `1/snr + 1/snr_hat`.
    pub noise_floor: f64,
}

/// `sin(M x / 2) / sin(x / 2)` at `x = kappa * alpha`.
///
/// The removable singularities at `x = 2 k pi` evaluate to the limit
/// `(-1)^{k (M-1)} M`.
pub fn dirichlet_ratio(geom: &ArrayGeometry, alpha: f64) -> f64 {
    let m = geom.num_elements() as f64;
    let half = 0.5 * geom.wavenumber_scale() * alpha;
    // Shift by the nearest multiple of pi so the denominator is evaluated
    // accurately near every singularity, not only the one at zero.
    let k = (half / PI).round();
    let y = half - k * PI;
    let sign = if (k as i64 * (geom.num_elements() as i64 - 1)).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    if y == 0.0 {
        sign * m
    } else {
        sign * (m * y).sin() / y.sin()
    }
}

/// `sum_{m=0}^{M-1} exp(j m kappa x)` in closed form.
fn steering_inner_product(geom: &ArrayGeometry, x: f64) -> C64 {
    let m = geom.num_elements() as f64;
    let ratio = dirichlet_ratio(geom, x);
    C64::from_polar(ratio, 0.5 * (m - 1.0) * geom.wavenumber_scale() * x)
}

/// Deterministic MSE part for a single-antenna attacker.
pub fn mse_delta_single(
    geom: &ArrayGeometry,
    theta: f64,
    theta_hat: f64,
    beta: f64,
    phi: f64,
) -> f64 {
    let m = geom.num_elements() as f64;
    let alpha = theta.sin() - theta_hat.sin();
    if alpha.abs() <= ALIGNMENT_TOLERANCE {
        m * ((beta - phi.cos()).powi(2) + phi.sin().powi(2))
    } else {
        let ratio = dirichlet_ratio(geom, alpha);
        let c = 0.5 * (m - 1.0) * geom.wavenumber_scale() * alpha;
        (beta * beta + 1.0) * m - 2.0 * beta * ratio * (c + phi).cos()
    }
}

/// Analytic `(d zeta / d beta, d zeta / d phi)` for a single-antenna attacker.
pub fn mse_gradient_single(
    geom: &ArrayGeometry,
    theta: f64,
    theta_hat: f64,
    beta: f64,
    phi: f64,
) -> (f64, f64) {
    let m = geom.num_elements() as f64;
    let alpha = theta.sin() - theta_hat.sin();
    let ratio = dirichlet_ratio(geom, alpha);
    let c = 0.5 * (m - 1.0) * geom.wavenumber_scale() * alpha;
    let d_beta = 2.0 * beta * m - 2.0 * ratio * (c + phi).cos();
    let d_phi = 2.0 * beta * ratio * (c + phi).sin();
    (d_beta, d_phi)
}

/// Analytic Hessian `[[zeta_bb, zeta_bp], [zeta_pb, zeta_pp]]`.
pub fn mse_hessian_single(
    geom: &ArrayGeometry,
    theta: f64,
    theta_hat: f64,
    beta: f64,
    phi: f64,
) -> [[f64; 2]; 2] {
    let m = geom.num_elements() as f64;
    let alpha = theta.sin() - theta_hat.sin();
    let ratio = dirichlet_ratio(geom, alpha);
    let c = 0.5 * (m - 1.0) * geom.wavenumber_scale() * alpha;
    let cross = 2.0 * ratio * (c + phi).sin();
    [
        [2.0 * m, cross],
        [cross, 2.0 * beta * ratio * (c + phi).cos()],
    ]
}

/// Critical point of the single-antenna MSE surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalSinglePrecoder {
    pub beta_star: f64,
    /// In `[0, 2pi)`.
    pub phi_star: f64,
    /// Integer `u` with `phi_star = -(M-1) kappa alpha / 2 + u pi`.
    pub branch: i64,
    /// Determinant of the Hessian at the critical point.
    pub hessian_det: f64,
    pub zeta_at_opt: f64,
}

/// Best single-antenna precoder for an attacker at `theta_hat`.
///
/// The branch parity is chosen so that `beta_star >= 0`.
pub fn optimal_single_precoder(
    geom: &ArrayGeometry,
    theta: f64,
    theta_hat: f64,
    noise: &NoiseModel,
) -> Result<OptimalSinglePrecoder> {
    let m = geom.num_elements() as f64;
    let alpha = theta.sin() - theta_hat.sin();
    let (beta_star, phi_star, branch, hessian_det) = if alpha.abs() <= ALIGNMENT_TOLERANCE {
        (1.0, 0.0, 0, 4.0 * m * m)
    } else {
        let ratio = dirichlet_ratio(geom, alpha);
        let c = 0.5 * (m - 1.0) * geom.wavenumber_scale() * alpha;
        let u: i64 = if ratio >= 0.0 { 0 } else { 1 };
        let raw = -c + u as f64 * PI;
        let wraps = (raw / TAU).floor();
        let phi = wrap_phase(raw);
        (
            ratio.abs() / m,
            phi,
            u - 2 * wraps as i64,
            4.0 * ratio * ratio,
        )
    };
    let attacker = AttackerConfig::single(theta_hat, beta_star, phi_star)?;
    let zeta_at_opt = mse_closed_form(geom, theta, &attacker, noise).zeta;
    Ok(OptimalSinglePrecoder {
        beta_star,
        phi_star,
        branch,
        hessian_det,
        zeta_at_opt,
    })
}

/// Hermitian `L x L` matrix `G = A_hat^H A_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(HermitianMatrix);

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn entry(&self, l: usize, z: usize) -> C64 {
        self.0.as_matrix()[(l, z)]
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.0
    }
}

/// `g_lz = sum_m exp(j m kappa (sin theta_l - sin theta_z))`, `g_ll = M`.
pub fn gram_matrix(geom: &ArrayGeometry, angles: &[f64]) -> Result<GramMatrix> {
    if angles.is_empty() {
        return Err(Error::InvalidAttacker(
            "gram matrix needs at least one angle".into(),
        ));
    }
    let l = angles.len();
    let sines: Vec<f64> = angles.iter().map(|t| t.sin()).collect();
    let m = geom.num_elements() as f64;
    let mut g = CMatrix::zeros(l, l);
    for i in 0..l {
        g[(i, i)] = C64::new(m, 0.0);
        for j in i + 1..l {
            let v = steering_inner_product(geom, sines[i] - sines[j]);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(GramMatrix(HermitianMatrix::new_unchecked(g)))
}

/// General `L`-antenna closed form.
pub fn mse_closed_form(
    geom: &ArrayGeometry,
    theta: f64,
    attacker: &AttackerConfig,
    noise: &NoiseModel,
) -> MseBreakdown {
    let m = geom.num_elements() as f64;
    let s = theta.sin();
    let q = attacker.precoders();
    // a^H A_hat q
    let cross: C64 = attacker
        .angles()
        .iter()
        .zip(&q)
        .map(|(t, qi)| steering_inner_product(geom, s - t.sin()) * qi)
        .sum();
    let gram = gram_matrix(geom, attacker.angles()).expect("attacker has >= 1 antenna");
    let quad = gram.0.as_matrix().quadratic_form(&q);
    // ||a - A_hat q||^2 >= 0; clamp round-off near perfect impersonation.
    let delta = (m - 2.0 * cross.re + quad).max(0.0);
    let noise_floor = noise.floor();
    let alpha = (attacker.num_antennas() == 1).then(|| s - attacker.angles()[0].sin());
    MseBreakdown {
        zeta: delta + noise_floor,
        delta,
        alpha,
        noise_floor,
    }
}

/// Coefficients of the two-antenna MSE expansion
/// `zeta = M - b0 q0 - b1 q1 - c0 q0* - c1 q1* + (|q0|^2 + |q1|^2) M
///         + q0 q1* d0 + q0* q1 d1 + floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAntennaCoefficients {
    pub b0: C64,
    pub b1: C64,
    pub c0: C64,
    pub c1: C64,
    pub d0: C64,
    pub d1: C64,
}

pub fn two_antenna_coefficients(
    geom: &ArrayGeometry,
    theta: f64,
    theta_hat0: f64,
    theta_hat1: f64,
) -> TwoAntennaCoefficients {
    let s = theta.sin();
    let s0 = theta_hat0.sin();
    let s1 = theta_hat1.sin();
    let b0 = steering_inner_product(geom, s - s0);
    let b1 = steering_inner_product(geom, s - s1);
    let d1 = steering_inner_product(geom, s0 - s1);
    TwoAntennaCoefficients {
        b0,
        b1,
        c0: b0.conj(),
        c1: b1.conj(),
        d0: d1.conj(),
        d1,
    }
}

/// Two-antenna MSE assembled from [`TwoAntennaCoefficients`].
pub fn mse_two_antenna(
    geom: &ArrayGeometry,
    theta: f64,
    attacker: &AttackerConfig,
    noise: &NoiseModel,
) -> Result<f64> {
    if attacker.num_antennas() != 2 {
        return Err(Error::InvalidAttacker(format!(
            "expected 2 antennas, got {}",
            attacker.num_antennas()
        )));
    }
    let m = geom.num_elements() as f64;
    let k = two_antenna_coefficients(geom, theta, attacker.angles()[0], attacker.angles()[1]);
    let q = attacker.precoders();
    let (q0, q1) = (q[0], q[1]);
    let z = C64::new(m, 0.0) - k.b0 * q0 - k.b1 * q1 - k.c0 * q0.conj() - k.c1 * q1.conj()
        + (q0.norm_sqr() + q1.norm_sqr()) * m
        + q0 * q1.conj() * k.d0
        + q0.conj() * q1 * k.d1;
    Ok(z.re + noise.floor())
}

/// Outcome of checking the global-minimum condition.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimumCheck {
    pub holds: bool,
    /// Indices of antennas with `sin(theta_hat_i) != sin(theta)`.
    pub misaligned: Vec<usize>,
    pub aggregate: AggregatePrecoder,
    pub diagnostic: String,
}

/// The MSE reaches its floor iff every attacker antenna satisfies
/// `sin(theta_hat_i) = sin(theta)` and `sum_i q_i = 1`.
pub fn multi_optimum_condition(attacker: &AttackerConfig, theta: f64) -> OptimumCheck {
    let s = theta.sin();
    let misaligned: Vec<usize> = attacker
        .angles()
        .iter()
        .enumerate()
        .filter(|(_, t)| (t.sin() - s).abs() > ALIGNMENT_TOLERANCE)
        .map(|(i, _)| i)
        .collect();
    let aggregate = attacker.aggregate();
    let sum_ok = (aggregate.u - 1.0).abs() <= ALIGNMENT_TOLERANCE
        && aggregate.v.abs() <= ALIGNMENT_TOLERANCE;
    let mut problems = Vec::new();
    if !misaligned.is_empty() {
        problems.push(format!("angle mismatch at antennas {misaligned:?}"));
    }
    if !sum_ok {
        problems.push(format!(
            "aggregate precoder {} + {}j differs from 1",
            aggregate.u, aggregate.v
        ));
    }
    let holds = problems.is_empty();
    let diagnostic = if holds {
        "all antennas aligned and precoders sum to 1".to_string()
    } else {
        problems.join("; ")
    };
    OptimumCheck {
        holds,
        misaligned,
        aggregate,
        diagnostic,
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

impl MonteCarloEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Self {
            mean,
            std_error,
            trials: n,
        }
    }
}

/// Average of `||x - x_hat||^2` over independent single-snapshot trials.
pub fn monte_carlo_mse(
    geom: &ArrayGeometry,
    theta: f64,
    attacker: &AttackerConfig,
    noise: &NoiseModel,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let a = steering_vector(geom, theta);
    let a_hat = attacker_response(geom, attacker);
    let seeds = SeedSequence::new(seed);
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeds.rng(t);
            let mut x = a.clone();
            add_noise(&mut x, noise.snr_legit(), &mut rng);
            let mut x_hat = a_hat.clone();
            add_noise(&mut x_hat, noise.snr_attacker(), &mut rng);
            x.iter().zip(&x_hat).map(|(u, v)| (u - v).norm_sqr()).sum()
        })
        .collect();
    Ok(MonteCarloEstimate::from_samples(&samples))
}
