//! Receiver array geometry, steering vectors, and synthesis of the signal
//! blocks Bob receives from a legitimate transmitter or an impersonator.
//!
//! Conventions used throughout the crate:
//!
//! * The pilot is the deterministic unit symbol `s0 = 1 + 0j`.
//! * SNR values are linear and refer to the whole array: noise is circularly
//!   symmetric with per-element variance `1 / (M * snr)`, so that
//!   `E||n||^2 = 1 / snr`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::attack::AttackerConfig;
use crate::rng::SeedSequence;
use crate::{Error, Result, C64};

/// Uniform linear array at the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    num_elements: usize,
    spacing: f64,
    wavenumber_scale: f64,
}

impl ArrayGeometry {
    /// `spacing` is the element distance in wavelengths (`d / lambda`).
    pub fn new(num_elements: usize, spacing: f64) -> Result<Self> {
        if num_elements < 2 {
            return Err(Error::InvalidGeometry(format!(
                "need at least 2 elements, got {num_elements}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        Ok(Self {
            num_elements,
            spacing,
            wavenumber_scale: 2.0 * std::f64::consts::PI * spacing,
        })
    }

    /// Half-wavelength array with `num_elements` antennas.
    pub fn half_wavelength(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, 0.5)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// kappa = 2 pi d / lambda.
    pub fn wavenumber_scale(&self) -> f64 {
        self.wavenumber_scale
    }
}

/// Steering vector `a(theta)` with elements `exp(-j kappa m sin(theta))`.
pub fn steering_vector(geom: &ArrayGeometry, angle: f64) -> Vec<C64> {
    let step = geom.wavenumber_scale * angle.sin();
    (0..geom.num_elements)
        .map(|m| C64::from_polar(1.0, -(m as f64) * step))
        .collect()
}

/// Noise levels of the legitimate and adversarial links (linear SNR).
///
/// An infinite SNR denotes a noiseless link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    snr_legit: f64,
    snr_attacker: f64,
}

impl NoiseModel {
    pub fn new(snr_legit: f64, snr_attacker: f64) -> Result<Self> {
        for (name, v) in [("legitimate", snr_legit), ("attacker", snr_attacker)] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidNoise(format!(
                    "{name} SNR must be > 0, got {v}"
                )));
            }
        }
        Ok(Self {
            snr_legit,
            snr_attacker,
        })
    }

    pub fn from_db(snr_legit_db: f64, snr_attacker_db: f64) -> Result<Self> {
        Self::new(db_to_linear(snr_legit_db), db_to_linear(snr_attacker_db))
    }

    pub fn noiseless() -> Self {
        Self {
            snr_legit: f64::INFINITY,
            snr_attacker: f64::INFINITY,
        }
    }

    pub fn snr_legit(&self) -> f64 {
        self.snr_legit
    }

    pub fn snr_attacker(&self) -> f64 {
        self.snr_attacker
    }

    /// `1/snr_legit + 1/snr_attacker`, the irreducible part of the MSE.
    pub fn floor(&self) -> f64 {
        self.snr_legit.recip() + self.snr_attacker.recip()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Legitimate,
    Attack,
}

/// M x N block of received snapshots, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBlock {
    num_elements: usize,
    num_snapshots: usize,
    samples: Vec<C64>,
    origin: Origin,
}

impl SignalBlock {
    /// Build a block from column-major samples.
    pub fn from_columns(
        num_elements: usize,
        num_snapshots: usize,
        samples: Vec<C64>,
        origin: Origin,
    ) -> Result<Self> {
        if num_elements == 0 || num_snapshots == 0 {
            return Err(Error::InvalidArgument(format!(
                "signal block must be non-empty, got {num_elements}x{num_snapshots}"
            )));
        }
        if samples.len() != num_elements * num_snapshots {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples for a {num_elements}x{num_snapshots} block, got {}",
                num_elements * num_snapshots,
                samples.len()
            )));
        }
        Ok(Self {
            num_elements,
            num_snapshots,
            samples,
            origin,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn num_snapshots(&self) -> usize {
        self.num_snapshots
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn column(&self, j: usize) -> &[C64] {
        &self.samples[j * self.num_elements..(j + 1) * self.num_elements]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[C64]> {
        self.samples.chunks_exact(self.num_elements)
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }
}

/// Add circularly symmetric Gaussian noise with `E||n||^2 = 1/snr` to `x`.
pub(crate) fn add_noise<R: Rng>(x: &mut [C64], snr: f64, rng: &mut R) {
    if snr.is_infinite() {
        return;
    }
    let sigma = (0.5 / (x.len() as f64 * snr)).sqrt();
    for v in x.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += C64::new(sigma * re, sigma * im);
    }
}

fn synthesize(
    geom: &ArrayGeometry,
    clean: &[C64],
    snr: f64,
    num_snapshots: usize,
    seed: u64,
    origin: Origin,
) -> Result<SignalBlock> {
    if num_snapshots == 0 {
        return Err(Error::InvalidArgument("num_snapshots must be >= 1".into()));
    }
    let m = geom.num_elements;
    let mut rng = SeedSequence::new(seed).rng(0);
    let mut samples = Vec::with_capacity(m * num_snapshots);
    for _ in 0..num_snapshots {
        let start = samples.len();
        samples.extend_from_slice(clean);
        add_noise(&mut samples[start..], snr, &mut rng);
    }
    SignalBlock::from_columns(m, num_snapshots, samples, origin)
}

/// Legitimate block: every column is `a(theta) * s0 + n`.
pub fn synthesize_legitimate(
    geom: &ArrayGeometry,
    theta: f64,
    noise: &NoiseModel,
    num_snapshots: usize,
    seed: u64,
) -> Result<SignalBlock> {
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "angle must be finite, got {theta}"
        )));
    }
    let a = steering_vector(geom, theta);
    synthesize(
        geom,
        &a,
        noise.snr_legit,
        num_snapshots,
        seed,
        Origin::Legitimate,
    )
}

/// Noise-free array response to an attacker: `sum_i q_i a(theta_hat_i)`.
pub fn attacker_response(geom: &ArrayGeometry, attacker: &AttackerConfig) -> Vec<C64> {
    let mut acc = vec![C64::new(0.0, 0.0); geom.num_elements];
    for (&angle, q) in attacker.angles().iter().zip(attacker.precoders()) {
        for (acc, a) in acc.iter_mut().zip(steering_vector(geom, angle)) {
            *acc += q * a;
        }
    }
    acc
}

/// Attack block: every column is `(sum_i q_i a(theta_hat_i)) * s0 + n_hat`.
pub fn synthesize_attack(
    geom: &ArrayGeometry,
    attacker: &AttackerConfig,
    noise: &NoiseModel,
    num_snapshots: usize,
    seed: u64,
) -> Result<SignalBlock> {
    let clean = attacker_response(geom, attacker);
    synthesize(
        geom,
        &clean,
        noise.snr_attacker,
        num_snapshots,
        seed,
        Origin::Attack,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn geometry_validation() {
        assert!(ArrayGeometry::new(1, 0.5).is_err());
        assert!(ArrayGeometry::new(4, 0.0).is_err());
        assert!(ArrayGeometry::new(4, f64::NAN).is_err());
        let g = ArrayGeometry::new(4, 0.5).unwrap();
        assert_eq!(g.wavenumber_scale(), 2.0 * PI * 0.5);
    }

    #[test]
    fn steering_vector_examples() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        for v in steering_vector(&g, 0.0) {
            assert_eq!(v, C64::new(1.0, 0.0));
        }
        let g = ArrayGeometry::half_wavelength(2).unwrap();
        let a = steering_vector(&g, PI / 2.0);
        assert_eq!(a[0], C64::new(1.0, 0.0));
        assert!(close(a[1], C64::new(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn steering_norm_is_m() {
        let g = ArrayGeometry::new(16, 0.37).unwrap();
        let a = steering_vector(&g, 0.731);
        let n: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        assert!((n - 16.0).abs() <= 16.0 * 1e-12);
    }

    #[test]
    fn noise_validation() {
        assert!(NoiseModel::new(0.0, 1.0).is_err());
        assert!(NoiseModel::new(1.0, -1.0).is_err());
        assert!(NoiseModel::new(f64::NAN, 1.0).is_err());
        assert_eq!(NoiseModel::noiseless().floor(), 0.0);
        let n = NoiseModel::from_db(15.0, 15.0).unwrap();
        assert!((n.floor() - 2.0 * 10f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn noiseless_block_repeats_steering_vector() {
        let g = ArrayGeometry::half_wavelength(16).unwrap();
        let b = synthesize_legitimate(&g, 0.4, &NoiseModel::noiseless(), 5, 1).unwrap();
        let a = steering_vector(&g, 0.4);
        for col in b.columns() {
            assert_eq!(col, &a[..]);
        }
        assert_eq!(b.origin(), Origin::Legitimate);
    }

    #[test]
    fn rejects_empty_block() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let noise = NoiseModel::noiseless();
        assert!(synthesize_legitimate(&g, 0.4, &noise, 0, 1).is_err());
        let att = AttackerConfig::single(0.2, 1.0, 0.0).unwrap();
        assert!(synthesize_attack(&g, &att, &noise, 0, 1).is_err());
    }

    #[test]
    fn synthesis_is_deterministic_per_seed() {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        let noise = NoiseModel::from_db(5.0, 5.0).unwrap();
        let a = synthesize_legitimate(&g, 0.3, &noise, 50, 99).unwrap();
        let b = synthesize_legitimate(&g, 0.3, &noise, 50, 99).unwrap();
        let c = synthesize_legitimate(&g, 0.3, &noise, 50, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn perfect_impersonation_matches_legitimate_when_noiseless() {
        let g = ArrayGeometry::half_wavelength(16).unwrap();
        let noise = NoiseModel::noiseless();
        let legit = synthesize_legitimate(&g, 0.4, &noise, 3, 5).unwrap();

        let one = AttackerConfig::single(0.4, 1.0, 0.0).unwrap();
        let att = synthesize_attack(&g, &one, &noise, 3, 5).unwrap();
        assert_eq!(legit.samples(), att.samples());

        let two =
            AttackerConfig::from_polar(vec![0.4, 0.4], vec![0.5, 0.5], vec![0.0, 0.0]).unwrap();
        let att = synthesize_attack(&g, &two, &noise, 3, 5).unwrap();
        for (x, y) in legit.samples().iter().zip(att.samples()) {
            assert!(close(*x, *y, 1e-15));
        }
    }

    #[test]
    fn three_antenna_attack_matches_explicit_sum() {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        let angles = [0.1, -0.5, 1.1];
        let betas = [0.5, 0.3, 0.2];
        let phases = [0.0, 1.0, 4.0];
        let att =
            AttackerConfig::from_polar(angles.to_vec(), betas.to_vec(), phases.to_vec()).unwrap();
        let block = synthesize_attack(&g, &att, &NoiseModel::noiseless(), 2, 0).unwrap();
        let kappa = PI;
        for m in 0..8 {
            let mut expected = C64::new(0.0, 0.0);
            for i in 0..3 {
                let phase = phases[i] - kappa * m as f64 * angles[i].sin();
                expected += C64::new(betas[i] * phase.cos(), betas[i] * phase.sin());
            }
            assert!(close(block.column(1)[m], expected, 1e-14));
        }
    }

    #[test]
    fn noise_energy_calibration() {
        let g = ArrayGeometry::half_wavelength(16).unwrap();
        let snr = 10f64.powf(1.5);
        let noise = NoiseModel::new(snr, snr).unwrap();
        let n = 1_000_000;
        let block = synthesize_legitimate(&g, 0.4, &noise, n, 2024).unwrap();
        let a = steering_vector(&g, 0.4);
        let mean: f64 = block
            .columns()
            .map(|c| {
                c.iter()
                    .zip(&a)
                    .map(|(x, s)| (x - s).norm_sqr())
                    .sum::<f64>()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0 / snr).abs() <= 0.01 / snr, "mean {mean}");
    }

    proptest! {
        #[test]
        fn conjugate_symmetry(theta in -PI..PI, m in 2usize..33, d in 0.1f64..2.0) {
            let g = ArrayGeometry::new(m, d).unwrap();
            let a = steering_vector(&g, theta);
            let b = steering_vector(&g, -theta);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(close(*x, y.conj(), 1e-12));
            }
        }

        #[test]
        fn norm_is_exactly_m(theta in -PI..PI, m in 2usize..33, d in 0.1f64..2.0) {
            let g = ArrayGeometry::new(m, d).unwrap();
            let n: f64 = steering_vector(&g, theta).iter().map(|v| v.norm_sqr()).sum();
            prop_assert!((n - m as f64).abs() <= 1e-12 * m as f64);
            for v in steering_vector(&g, theta) {
                prop_assert!((v.norm() - 1.0).abs() <= 1e-14);
            }
        }

        #[test]
        fn sine_alias(theta in -PI..PI, m in 2usize..33) {
            let g = ArrayGeometry::half_wavelength(m).unwrap();
            let a = steering_vector(&g, theta);
            let b = steering_vector(&g, PI - theta);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(close(*x, *y, 1e-12));
            }
        }
    }
}
