//! Enrollment and verification of transmitters by their estimated AoA.
//!
//! During enrollment Bob stores the mean of several MUSIC estimates for an
//! identity whose transmissions were vouched for by an upper layer. During
//! verification a fresh estimate is accepted iff it lies within an absolute
//! angular threshold of the enrolled value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::RwLock;

use rayon::prelude::*;

use crate::array_model::{
    synthesize_attack, synthesize_legitimate, ArrayGeometry, NoiseModel, SignalBlock,
};
use crate::attack::AttackerConfig;
use crate::music::{MusicEstimator, DEFAULT_GRID_STEP};
use crate::rng::SeedSequence;
use crate::{Error, Result};

/// Lower bound on the default acceptance threshold, in radians.
pub const MIN_DEFAULT_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct AoaProfile {
    pub identity: String,
    pub enrolled_angle: f64,
    /// Sample standard deviation of the enrollment estimates.
    pub enrollment_spread: f64,
    pub num_enrollment_estimates: usize,
}

impl AoaProfile {
    /// `3 * spread + grid_step`, floored at [`MIN_DEFAULT_THRESHOLD`].
    pub fn default_threshold(&self, grid_step: f64) -> f64 {
        (3.0 * self.enrollment_spread + grid_step).max(MIN_DEFAULT_THRESHOLD)
    }
}

fn check_identity(identity: &str) -> Result<()> {
    if identity.is_empty() || identity.contains([',', '\n', '\r']) || identity.starts_with('#') {
        return Err(Error::InvalidArgument(format!(
            "identity {identity:?} must be non-empty, must not start with '#', and must not contain commas or newlines"
        )));
    }
    Ok(())
}

/// Build a profile from AoA estimates in `(-pi/2, pi/2)`, where the
/// arithmetic mean is a valid angular mean.
pub fn enroll(identity: &str, estimates: &[f64]) -> Result<AoaProfile> {
    check_identity(identity)?;
    if estimates.is_empty() {
        return Err(Error::InvalidArgument(
            "enrollment needs at least one estimate".into(),
        ));
    }
    if let Some(e) = estimates.iter().find(|e| !e.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite estimate {e}")));
    }
    let n = estimates.len();
    let mean = estimates.iter().sum::<f64>() / n as f64;
    let spread = if n > 1 {
        (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(AoaProfile {
        identity: identity.to_string(),
        enrolled_angle: mean,
        enrollment_spread: spread,
        num_enrollment_estimates: n,
    })
}

/// Upper-layer (e.g. cryptographic) confirmation that a request is
/// authentic. Not implemented here; callers plug in their own.
pub trait UpperLayerCheck {
    fn confirm(&self, identity: &str) -> bool;
}

impl<F: Fn(&str) -> bool> UpperLayerCheck for F {
    fn confirm(&self, identity: &str) -> bool {
        self(identity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthDecision {
    pub accepted: bool,
    /// `None` when no AoA could be estimated.
    pub measured_angle: Option<f64>,
    /// `|measured - enrolled|`; NaN when no AoA could be estimated.
    pub deviation: f64,
    pub threshold: f64,
    pub diagnostic: Option<String>,
}

/// Verify one block against a profile with a reusable estimator.
pub fn verify_with(
    estimator: &MusicEstimator,
    profile: &AoaProfile,
    block: &SignalBlock,
    threshold: f64,
) -> Result<AuthDecision> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be > 0, got {threshold}"
        )));
    }
    match estimator.estimate(block, 1) {
        Ok(est) => {
            let deviation = (est[0] - profile.enrolled_angle).abs();
            Ok(AuthDecision {
                accepted: deviation <= threshold,
                measured_angle: Some(est[0]),
                deviation,
                threshold,
                diagnostic: None,
            })
        }
        Err(e @ Error::DegenerateSpectrum { .. }) => Ok(AuthDecision {
            accepted: false,
            measured_angle: None,
            deviation: f64::NAN,
            threshold,
            diagnostic: Some(e.to_string()),
        }),
        Err(e) => Err(e),
    }
}

pub fn verify(
    profile: &AoaProfile,
    block: &SignalBlock,
    geom: &ArrayGeometry,
    threshold: f64,
) -> Result<AuthDecision> {
    let estimator = MusicEstimator::new(*geom, DEFAULT_GRID_STEP)?;
    verify_with(&estimator, profile, block, threshold)
}

/// Identity -> profile map shared between an enrolling writer and concurrent
/// verifiers.
#[derive(Debug, Default)]
pub struct AccessControlList {
    entries: RwLock<BTreeMap<String, AoaProfile>>,
}

impl AccessControlList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, profile: AoaProfile) -> Result<()> {
        check_identity(&profile.identity)?;
        self.entries
            .write()
            .expect("acl lock poisoned")
            .insert(profile.identity.clone(), profile);
        Ok(())
    }

    /// Enroll only if the upper layer vouches for `identity`.
    pub fn enroll_checked(
        &self,
        identity: &str,
        estimates: &[f64],
        upper: &impl UpperLayerCheck,
    ) -> Result<Option<AoaProfile>> {
        if !upper.confirm(identity) {
            return Ok(None);
        }
        let profile = enroll(identity, estimates)?;
        self.insert(profile.clone())?;
        Ok(Some(profile))
    }

    pub fn get(&self, identity: &str) -> Option<AoaProfile> {
        self.entries
            .read()
            .expect("acl lock poisoned")
            .get(identity)
            .cloned()
    }

    pub fn remove(&self, identity: &str) -> Option<AoaProfile> {
        self.entries
            .write()
            .expect("acl lock poisoned")
            .remove(identity)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("acl lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One `identity,enrolled_angle_rad,spread_rad,count` line per profile,
    /// sorted by identity.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in self.entries.read().expect("acl lock poisoned").values() {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{}",
                p.identity, p.enrolled_angle, p.enrollment_spread, p.num_enrollment_estimates
            )
            .unwrap();
        }
        out
    }

    /// Parse the line format; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let acl = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |what: &str| Error::Parse(format!("acl line {}: {what}", lineno + 1));
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(err(&format!("expected 4 fields, got {}", fields.len())));
            }
            let angle: f64 = fields[1]
                .parse()
                .map_err(|_| err("bad enrolled_angle_rad"))?;
            let spread: f64 = fields[2].parse().map_err(|_| err("bad spread_rad"))?;
            let count: usize = fields[3].parse().map_err(|_| err("bad count"))?;
            if !angle.is_finite() || !(spread >= 0.0) || count == 0 {
                return Err(err("out-of-range value"));
            }
            acl.insert(AoaProfile {
                identity: fields[0].to_string(),
                enrolled_angle: angle,
                enrollment_spread: spread,
                num_enrollment_estimates: count,
            })?;
        }
        Ok(acl)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Scenario for a FAR/FRR evaluation.
#[derive(Debug, Clone)]
pub struct SweepSetup {
    pub geom: ArrayGeometry,
    pub theta: f64,
    pub attacker: AttackerConfig,
    pub noise: NoiseModel,
    pub num_snapshots: usize,
    /// Legitimate blocks used to build the enrolled profile.
    pub enrollment_blocks: usize,
    pub grid_step: f64,
}

impl SweepSetup {
    pub fn new(
        geom: ArrayGeometry,
        theta: f64,
        attacker: AttackerConfig,
        noise: NoiseModel,
    ) -> Self {
        Self {
            geom,
            theta,
            attacker,
            noise,
            num_snapshots: 2000,
            enrollment_blocks: 10,
            grid_step: DEFAULT_GRID_STEP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFrrPoint {
    pub threshold: f64,
    /// Fraction of attack blocks accepted.
    pub far: f64,
    /// Fraction of legitimate blocks rejected.
    pub frr: f64,
}

/// Per-trial deviations from the enrolled angle, for legitimate and attack
/// blocks. NaN marks a block whose spectrum had no peak.
#[derive(Debug, Clone)]
pub struct DeviationSamples {
    pub profile: AoaProfile,
    pub legitimate: Vec<f64>,
    pub attack: Vec<f64>,
}

impl DeviationSamples {
    pub fn rates(&self, threshold: f64) -> FarFrrPoint {
        let accepted =
            |v: &[f64]| v.iter().filter(|d| **d <= threshold).count() as f64 / v.len() as f64;
        FarFrrPoint {
            threshold,
            far: accepted(&self.attack),
            frr: 1.0 - accepted(&self.legitimate),
        }
    }
}

/// Enroll from legitimate blocks, then collect verification deviations for
/// `trials` legitimate and `trials` attack blocks.
pub fn collect_deviations(
    setup: &SweepSetup,
    trials: usize,
    seed: u64,
) -> Result<DeviationSamples> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if setup.enrollment_blocks == 0 {
        return Err(Error::InvalidArgument(
            "need at least one enrollment block".into(),
        ));
    }
    let estimator = MusicEstimator::new(setup.geom, setup.grid_step)?;
    let seeds = SeedSequence::new(seed);
    let (enroll_seeds, legit_seeds, attack_seeds) =
        (seeds.child(0), seeds.child(1), seeds.child(2));

    let estimates = (0..setup.enrollment_blocks as u64)
        .into_par_iter()
        .map(|i| {
            let block = synthesize_legitimate(
                &setup.geom,
                setup.theta,
                &setup.noise,
                setup.num_snapshots,
                enroll_seeds.seed(i),
            )?;
            Ok(estimator.estimate(&block, 1)?[0])
        })
        .collect::<Result<Vec<f64>>>()?;
    let profile = enroll("legitimate", &estimates)?;

    let deviation = |block: SignalBlock| -> Result<f64> {
        // The threshold does not matter here, only the deviation.
        Ok(verify_with(&estimator, &profile, &block, 1.0)?.deviation)
    };
    let legitimate = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            deviation(synthesize_legitimate(
                &setup.geom,
                setup.theta,
                &setup.noise,
                setup.num_snapshots,
                legit_seeds.seed(t),
            )?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let attack = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            deviation(synthesize_attack(
                &setup.geom,
                &setup.attacker,
                &setup.noise,
                setup.num_snapshots,
                attack_seeds.seed(t),
            )?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DeviationSamples {
        profile,
        legitimate,
        attack,
    })
}

/// FAR and FRR at each threshold over the same set of blocks.
pub fn far_frr_sweep(
    setup: &SweepSetup,
    thresholds: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<FarFrrPoint>> {
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument("threshold list is empty".into()));
    }
    if let Some(t) = thresholds.iter().find(|t| t.is_nan() || **t < 0.0) {
        return Err(Error::InvalidArgument(format!("invalid threshold {t}")));
    }
    let samples = collect_deviations(setup, trials, seed)?;
    Ok(thresholds.iter().map(|&t| samples.rates(t)).collect())
}

/// Two-sided two-proportion z statistic for `x1/n1` vs `x2/n2` (pooled).
pub fn two_proportion_z(x1: usize, n1: usize, x2: usize, n2: usize) -> f64 {
    let (p1, p2) = (x1 as f64 / n1 as f64, x2 as f64 / n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        0.0
    } else {
        (p1 - p2) / se
    }
}
