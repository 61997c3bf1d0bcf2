//! Measured quantities: Pauli expectations, reduced density matrices of the
//! central system, quadratic entropy, two-spin correlations, and the
//! singlet/triplet (coupled) basis.

use num_complex::Complex64 as C64;

use crate::dense::{jacobi_eigh, CMatrix};
use crate::error::{Error, Result};
use crate::exec;
use crate::hilbert::{apply_pauli_string, Pauli, PauliString, StateVector};

/// Cartesian axis for correlation measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// Basis tag of a [`DensityMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Computational,
    /// Total-spin order `{|s=0>, |1,-1>, |1,0>, |1,+1>}`.
    Coupled,
}

/// Reduced state of the central system: `d x d` Hermitian, unit trace,
/// positive semidefinite up to roundoff (`d` = 2 or 4).
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<C64>,
    basis: Basis,
}

impl DensityMatrix {
    /// Validating constructor; checks Hermiticity (1e-12), unit trace
    /// (1e-12) and positive semidefiniteness (eigenvalues >= -1e-10).
    pub fn new(dim: usize, entries: Vec<C64>, basis: Basis) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::InvalidArgument(format!(
                "density matrix dimension must be 2 or 4, got {dim}"
            )));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let rho = Self { dim, entries, basis };
        rho.validate()?;
        Ok(rho)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let defect = (self[(i, j)] - self[(j, i)].conj()).norm();
                if defect > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "density matrix not Hermitian: defect {defect} at ({i},{j})"
                    )));
                }
            }
        }
        let trace: f64 = (0..d).map(|i| self[(i, i)].re).sum();
        if (trace - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace {trace} deviates from 1"
            )));
        }
        for v in self.eigenvalues()? {
            if v < -1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "density matrix has negative eigenvalue {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)].re).sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut m = CMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self[(i, j)];
            }
        }
        let (vals, _) = jacobi_eigh(&m)?;
        Ok(vals)
    }

    /// `Tr[rho * A]` for a dense observable of matching dimension.
    pub fn expectation(&self, a: &CMatrix) -> C64 {
        let d = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self[(i, j)] * a[(j, i)];
            }
        }
        acc
    }
}

impl std::ops::Index<(usize, usize)> for DensityMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.dim + j]
    }
}

/// An observable time series on a strictly increasing grid.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    label: String,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch(
                "times and values must have equal length".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, values, label: label.into() })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `<s|P|s>` for a Hermitian Pauli string. The imaginary residue must vanish
/// within 1e-12 and is asserted.
pub fn expect_pauli(s: &StateVector, p: &PauliString) -> Result<f64> {
    let ps = apply_pauli_string(p, s)?;
    let v = s.inner(&ps)?;
    assert!(
        v.im.abs() < 1e-12,
        "expectation of Hermitian string has imaginary residue {}",
        v.im
    );
    Ok(v.re)
}

/// Partial trace over all bath spins; returns the reduced state of the
/// central system in the computational basis.
pub fn reduced_density_matrix(s: &StateVector) -> Result<DensityMatrix> {
    let m = s.n_central();
    let d = 1usize << m;
    if d != 2 && d != 4 {
        return Err(Error::InvalidArgument(
            "reduced density matrix supports 1 or 2 central spins".into(),
        ));
    }
    let amps = s.amplitudes();
    let n_configs = s.dim() >> m;

    // rho_ab = sum_m psi[a + d*m] conj(psi[b + d*m]); accumulate the d*d
    // entries chunk-wise in a fixed order
    #[derive(Clone)]
    struct Acc(Vec<C64>);
    impl Default for Acc {
        fn default() -> Self {
            Acc(vec![C64::new(0.0, 0.0); 16])
        }
    }
    impl std::ops::AddAssign for Acc {
        fn add_assign(&mut self, rhs: Self) {
            for (a, b) in self.0.iter_mut().zip(rhs.0) {
                *a += b;
            }
        }
    }
    let acc: Acc = exec::chunked_sum(n_configs, |range| {
        let mut local = Acc::default();
        for cfg in range {
            let base = cfg << m;
            for a in 0..d {
                let pa = amps[base + a];
                for b in 0..d {
                    local.0[a * d + b] += pa * amps[base + b].conj();
                }
            }
        }
        local
    });
    DensityMatrix::new(d, acc.0[..d * d].to_vec(), Basis::Computational)
}

/// Quadratic entropy `1 - Tr rho^2`, between 0 (pure) and `1 - 1/d`.
pub fn quadratic_entropy(rho: &DensityMatrix) -> f64 {
    let purity: f64 = rho.entries().iter().map(|e| e.norm_sqr()).sum();
    1.0 - purity
}

/// Von Neumann entropy in nats; diagnostic only.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let vals = rho.eigenvalues()?;
    Ok(vals
        .iter()
        .filter(|&&p| p > 1e-15)
        .map(|&p| -p * p.ln())
        .sum())
}

/// Two-spin correlation `<sigma_1^alpha sigma_2^beta>` of the central pair.
pub fn correlation(s: &StateVector, alpha: Axis, beta: Axis) -> Result<f64> {
    if s.n_central() != 2 {
        return Err(Error::InvalidArgument(
            "correlation requires two central spins".into(),
        ));
    }
    let p = PauliString::from_ops(
        s.n_sites(),
        1.0,
        &[(0, alpha.pauli()), (1, beta.pauli())],
    )?;
    expect_pauli(s, &p)
}

/// Expectation of a single-site Pauli operator.
pub fn expect_site_pauli(s: &StateVector, site: usize, axis: Axis) -> Result<f64> {
    let p = PauliString::from_ops(s.n_sites(), 1.0, &[(site, axis.pauli())])?;
    expect_pauli(s, &p)
}

/// Total z magnetization (Pauli sum over all sites); conserved by the
/// isotropic two-spin model.
pub fn total_z_magnetization(s: &StateVector) -> f64 {
    let amps = s.amplitudes();
    let n = s.n_sites() as f64;
    exec::chunked_sum(amps.len(), |range| {
        let mut acc = 0.0;
        for i in range {
            let ups = (i as u64).count_ones() as f64;
            acc += amps[i].norm_sqr() * (2.0 * ups - n);
        }
        acc
    })
}

/// Unitary change to the coupled (total-spin) basis, ordered
/// `{|s=0>, |1,-1>, |1,0>, |1,+1>}` with
/// `|0,0> = (|ud> - |du>)/sqrt(2)` and `|1,0> = (|ud> + |du>)/sqrt(2)`.
/// Trace and spectrum are preserved.
pub fn to_coupled_basis(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::InvalidArgument(
            "coupled basis requires a 4x4 density matrix".into(),
        ));
    }
    if rho.basis() != Basis::Computational {
        return Err(Error::InvalidArgument(
            "density matrix is not in the computational basis".into(),
        ));
    }
    // computational index = bit0 (spin 1) + 2*bit1 (spin 2), bit 1 = up:
    // 0 = |dd>, 1 = |ud>, 2 = |du>, 3 = |uu>
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let o = C64::new(0.0, 0.0);
    let rp = C64::new(r, 0.0);
    let rm = C64::new(-r, 0.0);
    let one = C64::new(1.0, 0.0);
    // rows = coupled states in computational coordinates
    let u = [
        [o, rp, rm, o],   // |0,0>
        [one, o, o, o],   // |1,-1>
        [o, rp, rp, o],   // |1,0>
        [o, o, o, one],   // |1,+1>
    ];
    let mut out = vec![C64::new(0.0, 0.0); 16];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..4 {
                for b in 0..4 {
                    acc += u[i][a] * rho[(a, b)] * u[j][b].conj();
                }
            }
            out[i * 4 + j] = acc;
        }
    }
    DensityMatrix::new(4, out, Basis::Coupled)
}

/// Bloch vector of a single central spin, read from its reduced state.
pub fn bloch_vector(rho: &DensityMatrix) -> Result<[f64; 3]> {
    if rho.dim() != 2 {
        return Err(Error::InvalidArgument(
            "Bloch vector requires a 2x2 density matrix".into(),
        ));
    }
    // with Z = diag(-1, +1): <Z> = rho_11 - rho_00
    let x = 2.0 * rho[(0, 1)].re;
    let y = 2.0 * rho[(0, 1)].im;
    let z = rho[(1, 1)].re - rho[(0, 0)].re;
    Ok([x, y, z])
}

/// Mean inner product used by tests: `<sigma_k^z>` for one bath spin.
pub fn bath_spin_z(s: &StateVector, k: usize) -> Result<f64> {
    if k >= s.n_bath() {
        return Err(Error::InvalidArgument(format!(
            "bath spin index {k} out of range"
        )));
    }
    expect_site_pauli(s, s.n_central() + k, Axis::Z)
}

/// Pearson correlation coefficient of two equally long series.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt()).max(1e-300)
}

/// Subtract a centered moving average with the given window length (odd,
/// clamped at the edges); used to isolate the oscillatory part of a series.
pub fn detrend(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1) | 1;
    let half = w / 2;
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let mean: f64 = values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        out.push(values[i] - mean);
    }
    out
}

/// Direct index-summation partial trace, kept as an independent oracle for
/// tests of [`reduced_density_matrix`].
pub fn partial_trace_oracle(s: &StateVector) -> Vec<C64> {
    let m = s.n_central();
    let d = 1usize << m;
    let amps = s.amplitudes();
    let mut rho = vec![C64::new(0.0, 0.0); d * d];
    for a in 0..d {
        for b in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for cfg in 0..amps.len() / d {
                acc += amps[cfg * d + a] * amps[cfg * d + b].conj();
            }
            rho[a * d + b] = acc;
        }
    }
    rho
}
