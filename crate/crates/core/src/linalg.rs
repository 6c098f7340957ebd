//! Dense complex matrices and a cyclic Jacobi eigensolver for Hermitian input.
//!
//! Matrices here are small (the receiver array size), so a straightforward
//! row-major layout is all that is needed.

use std::ops::{Index, IndexMut};

use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Self {
        let rows = columns.first().map_or(0, Vec::len);
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    /// `v v^H`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `v^H A v` for Hermitian `A`; the imaginary part is dropped.
    pub fn quadratic_form(&self, v: &[C64]) -> f64 {
        let av = self.matvec(v);
        v.iter().zip(&av).map(|(x, y)| (x.conj() * y).re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix known to satisfy `a_ij = conj(a_ji)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

/// Allowed asymmetry, relative to `max(1, ||A||_F)`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

impl HermitianMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.rows != mat.cols {
            return Err(Error::InvalidArgument(format!(
                "Hermitian matrix must be square, got {}x{}",
                mat.rows, mat.cols
            )));
        }
        let defect = mat.hermitian_defect();
        if !(defect <= HERMITIAN_TOLERANCE * mat.frobenius_norm().max(1.0)) {
            return Err(Error::NotHermitian { asymmetry: defect });
        }
        Ok(Self(mat))
    }

    /// Wrap a matrix assembled to be Hermitian by construction.
    pub(crate) fn new_unchecked(mat: CMatrix) -> Self {
        Self(mat)
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.scale(c))
    }
}

/// Eigen-decomposition `A = V diag(values) V^H`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `k` paired with `values[k]`.
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let scaled = CMatrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j]);
        scaled.matmul(&self.vectors.adjoint())
    }
}

const MAX_SWEEPS: usize = 64;

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation annihilates one off-diagonal pair `(p, q)` with the unitary
/// `J = [[c, s e^{i psi}], [-s e^{-i psi}, c]]` where `psi = arg(a_pq)`.
pub fn hermitian_eig(mat: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = mat.dim();
    let mut a = mat.0.clone();
    // Symmetrize so the iteration sees an exactly Hermitian matrix.
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    let target = f64::EPSILON * scale.max(f64::MIN_POSITIVE);

    let mut sweeps = 0;
    let mut previous = f64::INFINITY;
    loop {
        let off = off_diagonal_norm(&a);
        // Rounding can stall the last sweep a hair above machine precision.
        if off <= target || (off >= previous && off <= 1e-12 * scale) {
            break;
        }
        previous = off;
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                residual: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let jpq = phase * s; // J[p][q]
                let jqp = -phase.conj() * s; // J[q][p]

                // A <- A J (columns p and q)
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * c;
                }
                // A <- J^H A (rows p and q)
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c + aqk * jqp.conj();
                    a[(q, k)] = apk * jpq.conj() + aqk * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                // V <- V J
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(EigenDecomposition { values, vectors })
}
