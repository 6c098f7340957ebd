//! MUSIC angle-of-arrival estimation.
//!
//! The sample covariance of a block is split into signal and noise subspaces;
//! the pseudospectrum `1 / ||E_n^H a(theta)||^2` peaks where the steering
//! vector is orthogonal to the noise subspace.

use std::f64::consts::FRAC_PI_2;

use crate::array_model::{steering_vector, ArrayGeometry, SignalBlock};
use crate::linalg::{hermitian_eig, CMatrix, HermitianMatrix};
use crate::{Error, Result, C64};

pub const DEFAULT_GRID_STEP: f64 = 0.001;

/// Smallest projection used as a pseudospectrum denominator, keeping values
/// finite for exactly orthogonal steering vectors.
const MIN_PROJECTION: f64 = 1e-300;

/// Spectra whose relative max-min spread is below this carry no peak.
const FLAT_TOLERANCE: f64 = 1e-9;

/// `(1/N) sum_i x_i x_i^H` over the columns of `block`.
pub fn sample_covariance(block: &SignalBlock) -> Result<HermitianMatrix> {
    let m = block.num_elements();
    let n = block.num_snapshots();
    if n == 0 {
        return Err(Error::InvalidArgument("empty signal block".into()));
    }
    let mut r = CMatrix::zeros(m, m);
    for x in block.columns() {
        for i in 0..m {
            let xi = x[i];
            for j in i..m {
                r[(i, j)] += xi * x[j].conj();
            }
        }
    }
    let inv = 1.0 / n as f64;
    for i in 0..m {
        r[(i, i)] = C64::new(r[(i, i)].re * inv, 0.0);
        for j in i + 1..m {
            let v = r[(i, j)] * inv;
            r[(i, j)] = v;
            r[(j, i)] = v.conj();
        }
    }
    Ok(HermitianMatrix::new_unchecked(r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub angle: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MusicSpectrum {
    /// Strictly ascending angles in radians.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Local maxima, highest first; ties go to the smaller angle.
    pub peaks: Vec<Peak>,
}

/// Grid `k * step` over `[-pi/2, pi/2]`, with both endpoints included.
pub fn angle_grid(step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && step < FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("invalid grid step {step}")));
    }
    let k_max = (FRAC_PI_2 / step).floor() as i64;
    let mut grid = Vec::with_capacity(2 * k_max as usize + 3);
    grid.push(-FRAC_PI_2);
    for k in -k_max..=k_max {
        let v = k as f64 * step;
        if v > *grid.last().unwrap() && v < FRAC_PI_2 {
            grid.push(v);
        }
    }
    grid.push(FRAC_PI_2);
    Ok(grid)
}

/// Strict local maxima; the two boundary points compare against their single
/// neighbour.
pub fn find_peaks(grid: &[f64], values: &[f64]) -> Vec<Peak> {
    let n = values.len();
    let mut peaks = Vec::new();
    for i in 0..n {
        let left_ok = i == 0 || values[i] > values[i - 1];
        let right_ok = i + 1 == n || values[i] > values[i + 1];
        if left_ok && right_ok && n > 1 {
            peaks.push(Peak {
                angle: grid[i],
                height: values[i],
            });
        }
    }
    peaks.sort_by(|a, b| {
        b.height
            .total_cmp(&a.height)
            .then(a.angle.total_cmp(&b.angle))
    });
    peaks
}

/// Reusable estimator with a precomputed steering table for one geometry and
/// grid.
#[derive(Debug, Clone)]
pub struct MusicEstimator {
    geom: ArrayGeometry,
    grid: Vec<f64>,
    steering: Vec<Vec<C64>>,
}

impl MusicEstimator {
    pub fn new(geom: ArrayGeometry, grid_step: f64) -> Result<Self> {
        let grid = angle_grid(grid_step)?;
        let steering = grid.iter().map(|&t| steering_vector(&geom, t)).collect();
        Ok(Self {
            geom,
            grid,
            steering,
        })
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geom
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn pseudospectrum(
        &self,
        mat: &HermitianMatrix,
        num_sources: usize,
    ) -> Result<MusicSpectrum> {
        let m = self.geom.num_elements();
        if mat.dim() != m {
            return Err(Error::InvalidArgument(format!(
                "covariance is {}x{}, array has {m} elements",
                mat.dim(),
                mat.dim()
            )));
        }
        if num_sources == 0 || num_sources >= m {
            return Err(Error::InvalidArgument(format!(
                "num_sources must be in 1..{m}, got {num_sources}"
            )));
        }
        let eig = hermitian_eig(mat)?;
        // Noise subspace: eigenvectors of the M - K smallest eigenvalues.
        let noise: Vec<Vec<C64>> = (0..m - num_sources)
            .map(|k| eig.vectors.column(k).iter().map(|v| v.conj()).collect())
            .collect();
        let values: Vec<f64> = self
            .steering
            .iter()
            .map(|a| {
                let proj: f64 = noise
                    .iter()
                    .map(|e| e.iter().zip(a).map(|(x, y)| x * y).sum::<C64>().norm_sqr())
                    .sum();
                1.0 / proj.max(MIN_PROJECTION)
            })
            .collect();
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let peaks = if hi - lo <= FLAT_TOLERANCE * hi {
            Vec::new()
        } else {
            find_peaks(&self.grid, &values)
        };
        Ok(MusicSpectrum {
            grid: self.grid.clone(),
            values,
            peaks,
        })
    }

    pub fn estimate(&self, block: &SignalBlock, num_sources: usize) -> Result<Vec<f64>> {
        if block.num_elements() != self.geom.num_elements() {
            return Err(Error::InvalidArgument(format!(
                "block has {} rows, array has {} elements",
                block.num_elements(),
                self.geom.num_elements()
            )));
        }
        let cov = sample_covariance(block)?;
        let spectrum = self.pseudospectrum(&cov, num_sources)?;
        if spectrum.peaks.len() < num_sources {
            return Err(Error::DegenerateSpectrum {
                found: spectrum.peaks.len(),
                needed: num_sources,
            });
        }
        Ok(spectrum.peaks[..num_sources]
            .iter()
            .map(|p| p.angle)
            .collect())
    }
}

pub fn pseudospectrum(
    mat: &HermitianMatrix,
    geom: &ArrayGeometry,
    grid_step: f64,
    num_sources: usize,
) -> Result<MusicSpectrum> {
    MusicEstimator::new(*geom, grid_step)?.pseudospectrum(mat, num_sources)
}

/// The `num_sources` highest-peak angles, highest first.
///
/// Coherent transmitters (one pilot sent from several antennas) form a single
/// source; call with `num_sources = 1` per transmitting entity.
pub fn estimate_aoa(
    block: &SignalBlock,
    geom: &ArrayGeometry,
    num_sources: usize,
    grid_step: f64,
) -> Result<Vec<f64>> {
    MusicEstimator::new(*geom, grid_step)?.estimate(block, num_sources)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_model::{synthesize_attack, synthesize_legitimate, NoiseModel, Origin};
    use crate::attack::AttackerConfig;

    fn nearest(grid: &[f64], x: f64) -> f64 {
        *grid
            .iter()
            .min_by(|a, b| (*a - x).abs().total_cmp(&(*b - x).abs()))
            .unwrap()
    }

    #[test]
    fn grid_shape() {
        let g = angle_grid(0.001).unwrap();
        assert_eq!(g[0], -FRAC_PI_2);
        assert_eq!(*g.last().unwrap(), FRAC_PI_2);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.contains(&0.4));
        assert!(angle_grid(0.0).is_err());
        assert!(angle_grid(f64::NAN).is_err());
    }

    #[test]
    fn covariance_of_single_column() {
        let x = vec![
            C64::new(1.0, 2.0),
            C64::new(-0.5, 0.25),
            C64::new(0.0, -1.0),
        ];
        let block = SignalBlock::from_columns(3, 1, x.clone(), Origin::Legitimate).unwrap();
        let r = sample_covariance(&block).unwrap();
        assert!(r.as_matrix().max_abs_diff(&CMatrix::outer(&x)) < 1e-15);
    }

    #[test]
    fn noiseless_covariance_is_rank_one() {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        let block = synthesize_legitimate(&g, 0.4, &NoiseModel::noiseless(), 10, 0).unwrap();
        let r = sample_covariance(&block).unwrap();
        let a = steering_vector(&g, 0.4);
        assert!(r.as_matrix().max_abs_diff(&CMatrix::outer(&a)) < 1e-14);
        let eig = hermitian_eig(&r).unwrap();
        assert!(eig.values[..7].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn covariance_trace_is_mean_energy() {
        let g = ArrayGeometry::half_wavelength(6).unwrap();
        let noise = NoiseModel::from_db(0.0, 0.0).unwrap();
        let block = synthesize_legitimate(&g, -0.3, &noise, 300, 17).unwrap();
        let r = sample_covariance(&block).unwrap();
        let mean: f64 = block
            .columns()
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / 300.0;
        assert!((r.as_matrix().trace().re - mean).abs() < 1e-12);
        assert!(r.as_matrix().hermitian_defect() == 0.0);
        let eig = hermitian_eig(&r).unwrap();
        assert!(eig.values[0] >= -1e-12);
    }

    #[test]
    fn noiseless_peak_at_nearest_grid_angle() {
        let g = ArrayGeometry::half_wavelength(16).unwrap();
        for theta in [0.4, -1.0, 0.12345] {
            let block = synthesize_legitimate(&g, theta, &NoiseModel::noiseless(), 4, 0).unwrap();
            let cov = sample_covariance(&block).unwrap();
            let spec = pseudospectrum(&cov, &g, DEFAULT_GRID_STEP, 1).unwrap();
            assert_eq!(spec.peaks[0].angle, nearest(&spec.grid, theta));
            assert!(spec.values.iter().all(|v| v.is_finite() && *v >= 0.0));
            let est = estimate_aoa(&block, &g, 1, DEFAULT_GRID_STEP).unwrap();
            assert_eq!(est, vec![nearest(&spec.grid, theta)]);
        }
    }

    #[test]
    fn noise_subspace_is_orthogonal_to_source() {
        let g = ArrayGeometry::half_wavelength(12).unwrap();
        let a = steering_vector(&g, 0.7);
        let cov = HermitianMatrix::new(CMatrix::outer(&a)).unwrap();
        let eig = hermitian_eig(&cov).unwrap();
        let proj: f64 = (0..11)
            .map(|k| {
                eig.vectors
                    .column(k)
                    .iter()
                    .zip(&a)
                    .map(|(e, x)| e.conj() * x)
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max);
        assert!(proj <= 1e-9);
    }

    #[test]
    fn two_incoherent_sources() {
        let g = ArrayGeometry::half_wavelength(16).unwrap();
        let a1 = steering_vector(&g, 0.2);
        let a2 = steering_vector(&g, 0.9);
        let mut r = CMatrix::outer(&a1);
        let r2 = CMatrix::outer(&a2);
        for i in 0..16 {
            for j in 0..16 {
                r[(i, j)] += r2[(i, j)];
            }
        }
        let cov = HermitianMatrix::new(r).unwrap();
        let spec = pseudospectrum(&cov, &g, DEFAULT_GRID_STEP, 2).unwrap();
        let mut top: Vec<f64> = spec.peaks[..2].iter().map(|p| p.angle).collect();
        top.sort_by(f64::total_cmp);
        assert_eq!(
            top,
            vec![nearest(&spec.grid, 0.2), nearest(&spec.grid, 0.9)]
        );
    }

    #[test]
    fn scaling_covariance_keeps_peaks() {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        let noise = NoiseModel::from_db(5.0, 5.0).unwrap();
        let block = synthesize_legitimate(&g, 0.3, &noise, 200, 4).unwrap();
        let cov = sample_covariance(&block).unwrap();
        let est = MusicEstimator::new(g, 0.002).unwrap();
        let base = est.pseudospectrum(&cov, 1).unwrap();
        for c in [1e-3, 0.5, 7.0, 1e4] {
            let s = est.pseudospectrum(&cov.scale(c), 1).unwrap();
            assert_eq!(s.peaks[0].angle, base.peaks[0].angle);
        }
    }

    #[test]
    fn rejects_bad_source_count() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let cov = HermitianMatrix::new(CMatrix::identity(4)).unwrap();
        assert!(pseudospectrum(&cov, &g, 0.01, 4).is_err());
        assert!(pseudospectrum(&cov, &g, 0.01, 0).is_err());
    }

    #[test]
    fn flat_spectrum_is_degenerate() {
        // A zero block has a constant pseudospectrum, hence no strict maxima.
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let est = MusicEstimator::new(g, 0.01).unwrap();
        let zeros =
            SignalBlock::from_columns(4, 1, vec![C64::new(0.0, 0.0); 4], Origin::Legitimate)
                .unwrap();
        assert!(matches!(
            est.estimate(&zeros, 1),
            Err(Error::DegenerateSpectrum {
                found: 0,
                needed: 1
            })
        ));
    }

    #[test]
    fn peak_tie_break_prefers_smaller_angle() {
        let grid = [0.0, 0.1, 0.2, 0.3, 0.4];
        let values = [0.0, 2.0, 1.0, 2.0, 0.0];
        let peaks = find_peaks(&grid, &values);
        assert_eq!(peaks.len(), 2);
        assert_eq!(peaks[0].angle, 0.1);
        let values = [3.0, 1.0, 1.0, 1.0, 3.0];
        let peaks = find_peaks(&grid, &values);
        assert_eq!(
            peaks.iter().map(|p| p.angle).collect::<Vec<_>>(),
            vec![0.0, 0.4]
        );
    }

    #[test]
    fn fig2_regime_estimate() {
        let g = ArrayGeometry::half_wavelength(16).unwrap();
        let noise = NoiseModel::from_db(15.0, 15.0).unwrap();
        let block = synthesize_legitimate(&g, 0.4, &noise, 2000, 8).unwrap();
        let est = estimate_aoa(&block, &g, 1, DEFAULT_GRID_STEP).unwrap();
        assert!((est[0] - 0.4).abs() <= 0.01);
    }

    #[test]
    fn legit_and_attacker_separate_at_high_snr() {
        let g = ArrayGeometry::half_wavelength(16).unwrap();
        let noise = NoiseModel::from_db(15.0, 15.0).unwrap();
        let est = MusicEstimator::new(g, DEFAULT_GRID_STEP).unwrap();
        let att = AttackerConfig::uniform(2, 0.2, 1.0, 0.0).unwrap();
        let mut separated = 0;
        for t in 0..200u64 {
            let x = synthesize_legitimate(&g, 0.4, &noise, 100, 2 * t).unwrap();
            let y = synthesize_attack(&g, &att, &noise, 100, 2 * t + 1).unwrap();
            let a = est.estimate(&x, 1).unwrap()[0];
            let b = est.estimate(&y, 1).unwrap()[0];
            if (a - b).abs() > 0.1 {
                separated += 1;
            }
        }
        assert!(separated >= 198, "{separated}");
    }

    #[test]
    fn rmse_non_increasing_in_snr() {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        let est = MusicEstimator::new(g, DEFAULT_GRID_STEP).unwrap();
        let mut last = f64::INFINITY;
        for snr_db in [-10.0, 0.0, 10.0, 20.0] {
            let noise = NoiseModel::from_db(snr_db, snr_db).unwrap();
            let mut sq = 0.0;
            for t in 0..200u64 {
                let x = synthesize_legitimate(&g, 0.4, &noise, 50, t).unwrap();
                sq += (est.estimate(&x, 1).unwrap()[0] - 0.4).powi(2);
            }
            let rmse = (sq / 200.0).sqrt();
            assert!(rmse <= last, "rmse {rmse} at {snr_db} dB after {last}");
            last = rmse;
        }
    }
}
