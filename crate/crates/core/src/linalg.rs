//! Dense complex square matrices and a cyclic Jacobi eigensolver for the
//! small Hermitian matrices (N ≤ 8) that appear here.

pub use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut, Mul};
use thiserror::Error;

pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: max |M - M†| = {defect:e} exceeds {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("Jacobi iteration did not converge: off-diagonal norm {off:e}")]
    NoConvergence { off: f64 },
    #[error("qubit {qubit} out of range for a {dim}x{dim} matrix")]
    QubitOutOfRange { qubit: usize, dim: usize },
    #[error("dimension {0} is not a power of two")]
    NotQubits(usize),
}

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(psi: &[Complex64]) -> Self {
        Self::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of qubits, if the dimension is a power of two.
    pub fn qubits(&self) -> Result<usize, LinalgError> {
        if self.n.is_power_of_two() {
            Ok(self.n.trailing_zeros() as usize)
        } else {
            Err(LinalgError::NotQubits(self.n))
        }
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |M_ij - conj(M_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (n, m) = (self.n, other.n);
        CMatrix::from_fn(n * m, |i, j| self[(i / m, j / m)] * other[(i % m, j % m)])
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `P M P†` for the basis permutation sending index `i` to `perm[i]`.
    pub fn permute_basis(&self, perm: &[usize]) -> CMatrix {
        assert_eq!(perm.len(), self.n);
        let mut out = CMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(perm[i], perm[j])] = self[(i, j)];
            }
        }
        out
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// Eigenvalues in ascending order with matching unit eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    /// `max_j ‖M v_j − λ_j v_j‖`.
    pub fn residual(&self, m: &CMatrix) -> f64 {
        let n = m.dim();
        let mv = m * &self.vectors;
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| (mv[(i, j)] - self.vectors[(i, j)] * self.values[j]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim();
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

/// Cyclic complex Jacobi diagonalisation of a Hermitian matrix.
pub fn eigh(m: &CMatrix, hermitian_tol: f64) -> Result<Eigen, LinalgError> {
    let defect = m.hermitian_defect();
    if !(defect <= hermitian_tol) {
        return Err(LinalgError::NotHermitian {
            defect,
            tol: hermitian_tol,
        });
    }
    let n = m.dim();
    // Work on the exactly Hermitian part.
    let mut a = CMatrix::from_fn(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    let target = 0.5 * f64::EPSILON * scale;

    let mut converged = scale == 0.0;
    let mut prev_off = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        // Stop at the target, or once roundoff stalls progress near it.
        if converged || off <= target || (off >= prev_off && off <= 1e-14 * scale) {
            converged = true;
            break;
        }
        prev_off = off;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        let off = off_diagonal_norm(&a);
        if off > 1e-14 * scale {
            return Err(LinalgError::NoConvergence { off });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Apply one unitary rotation in the (p, q) plane that annihilates `a[p][q]`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let phase = apq / g; // e^{iφ}
    let zeta = (aqq - app) / (2.0 * g);
    let t = if zeta == 0.0 {
        1.0
    } else if zeta.abs() > 1e150 {
        0.5 / zeta
    } else {
        zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // U = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) block.
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -phase.conj() * s;
    let u_qq = phase.conj() * c;
    let n = a.dim();
    for r in 0..n {
        let (xp, xq) = (a[(r, p)], a[(r, q)]);
        a[(r, p)] = xp * u_pp + xq * u_qp;
        a[(r, q)] = xp * u_pq + xq * u_qq;
        let (vp, vq) = (v[(r, p)], v[(r, q)]);
        v[(r, p)] = vp * u_pp + vq * u_qp;
        v[(r, q)] = vp * u_pq + vq * u_qq;
    }
    for col in 0..n {
        let (xp, xq) = (a[(p, col)], a[(q, col)]);
        a[(p, col)] = u_pp.conj() * xp + u_qp.conj() * xq;
        a[(q, col)] = u_pq.conj() * xp + u_qq.conj() * xq;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn eigvals_hermitian(m: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    eigh(m, HERMITIAN_TOL).map(|e| e.values)
}

/// Partial transpose on `qubit` (0 is the most significant tensor factor).
pub fn partial_transpose(m: &CMatrix, qubit: usize) -> Result<CMatrix, LinalgError> {
    let nq = m.qubits()?;
    if qubit >= nq {
        return Err(LinalgError::QubitOutOfRange {
            qubit,
            dim: m.dim(),
        });
    }
    let bit = 1usize << (nq - 1 - qubit);
    Ok(CMatrix::from_fn(m.dim(), |i, j| {
        let (bi, bj) = (i & bit, j & bit);
        m[((i & !bit) | bj, (j & !bit) | bi)]
    }))
}

/// Trace out `qubit` (0 is the most significant tensor factor).
pub fn trace_out(m: &CMatrix, qubit: usize) -> Result<CMatrix, LinalgError> {
    let nq = m.qubits()?;
    if qubit >= nq {
        return Err(LinalgError::QubitOutOfRange {
            qubit,
            dim: m.dim(),
        });
    }
    let low = nq - 1 - qubit; // bit position of the traced qubit
    let expand = |r: usize, b: usize| {
        let hi = (r >> low) << (low + 1);
        let lo = r & ((1 << low) - 1);
        hi | (b << low) | lo
    };
    Ok(CMatrix::from_fn(m.dim() / 2, |i, j| {
        m[(expand(i, 0), expand(j, 0))] + m[(expand(i, 1), expand(j, 1))]
    }))
}
