//! Small dense complex matrices for the verification oracles.
//!
//! Deliberately self-contained: the dense route exists to check the
//! matrix-free kernels against an independent construction, so it shares no
//! code with them. Sizes stay at or below 1024, where cyclic Jacobi is
//! plenty fast and accurate to near machine precision.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{Pauli, PauliString};

/// Row-major dense complex matrix.
#[derive(Clone, Debug)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "rows must form a square matrix");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Kronecker product; `self` indexes the slower (higher) bits.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (a, b) = (self, other);
        let n = a.n * b.n;
        let mut out = CMatrix::zeros(n);
        for ia in 0..a.n {
            for ja in 0..a.n {
                let f = a[(ia, ja)];
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for ib in 0..b.n {
                    for jb in 0..b.n {
                        out[(ia * b.n + ib, ja * b.n + jb)] = f * b[(ib, jb)];
                    }
                }
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let f = self[(i, k)];
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += f * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn add_assign_scaled(&mut self, other: &CMatrix, factor: C64) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += factor * b;
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        for i in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.n {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// 2x2 matrix of a single Pauli letter in the crate's sign convention
/// (index 0 = spin down, 1 = spin up; `Z = diag(-1, +1)`).
pub fn pauli_matrix(p: Pauli) -> CMatrix {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match p {
        Pauli::I => CMatrix::identity(2),
        Pauli::X => CMatrix::from_rows(&[&[o, one], &[one, o]]),
        Pauli::Y => CMatrix::from_rows(&[&[o, i], &[-i, o]]),
        Pauli::Z => CMatrix::from_rows(&[&[-one, o], &[o, one]]),
    }
}

/// Dense matrix of a Pauli string via explicit Kronecker products. Site 0 is
/// the least significant bit, so the fold runs from the highest site down.
pub fn dense_pauli_string(p: &PauliString) -> CMatrix {
    let mut m = CMatrix::identity(1);
    for &letter in p.letters().iter().rev() {
        m = m.kron(&pauli_matrix(letter));
    }
    let coeff = C64::new(p.coeff(), 0.0);
    let mut out = CMatrix::zeros(m.n());
    out.add_assign_scaled(&m, coeff);
    out
}

/// Dense sum of a term list.
pub fn dense_from_terms(n_sites: usize, terms: &[PauliString]) -> Result<CMatrix> {
    let dim = 1usize << n_sites;
    if dim > 1024 {
        return Err(Error::DimensionCap(format!(
            "dense construction limited to dimension 1024, requested {dim}"
        )));
    }
    let mut h = CMatrix::zeros(dim);
    for t in terms {
        if t.n_sites() != n_sites {
            return Err(Error::DimensionMismatch(
                "term site count differs from requested site count".into(),
            ));
        }
        let m = dense_pauli_string(t);
        h.add_assign_scaled(&m, C64::new(1.0, 0.0));
    }
    Ok(h)
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
/// Returns ascending eigenvalues and the unitary `u` with `h = u diag u^†`
/// (eigenvectors in columns).
pub fn jacobi_eigh(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = h.n();
    if h.hermiticity_defect() > 1e-10 * (1.0 + h.frobenius()) {
        return Err(Error::InvalidArgument(
            "jacobi_eigh requires a Hermitian matrix".into(),
        ));
    }
    let mut a = h.clone();
    // symmetrize roundoff
    for i in 0..n {
        for j in (i + 1)..n {
            let m = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = m;
            a[(j, i)] = m.conj();
        }
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut u = CMatrix::identity(n);
    let scale = a.frobenius().max(1e-300);
    let tol = 1e-15 * scale;
    let max_sweeps = 60;
    for _sweep in 0..max_sweeps {
        if a.off_diagonal_norm() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= tol / (n as f64) {
                    continue;
                }
                // phase that makes the off-diagonal element real, then the
                // smaller of the two real Jacobi angles solving
                // tan(2*theta) = 2|a_pq| / (a_qq - a_pp)
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let cs = C64::new(c, 0.0);
                let sp = phase * s;
                // rotation G = [[c, sp], [-conj(sp), c]]; A <- G^H A G
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = arp * cs - arq * sp.conj();
                    a[(r, q)] = arp * sp + arq * cs;
                }
                for col in 0..n {
                    let apc = a[(p, col)];
                    let aqc = a[(q, col)];
                    a[(p, col)] = apc * cs - aqc * sp;
                    a[(q, col)] = apc * sp.conj() + aqc * cs;
                }
                for r in 0..n {
                    let urp = u[(r, p)];
                    let urq = u[(r, q)];
                    u[(r, p)] = urp * cs - urq * sp.conj();
                    u[(r, q)] = urp * sp + urq * cs;
                }
            }
        }
    }
    if a.off_diagonal_norm() > 1e-11 * scale {
        return Err(Error::Convergence(format!(
            "jacobi_eigh: off-diagonal norm {} after {max_sweeps} sweeps",
            a.off_diagonal_norm()
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_u = CMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            sorted_u[(r, new_col)] = u[(r, old_col)];
        }
    }
    Ok((sorted_vals, sorted_u))
}
