//! The four model families: a central spin (or pair) coupled to a spin bath.
//!
//! Conventions, fixed once for the whole crate:
//! - bath operators are Pauli matrices (eigenvalues +-1), so the bath-field
//!   variance over a random bath state is exactly the sum of squared
//!   couplings. With spin-1/2 operators instead, couplings would need a
//!   factor-2 rescaling.
//! - central spins enter the two-spin exchange as s = sigma/2, so the
//!   isotropic coupling reads V = sum_k (J_k/2) (sigma_1 + sigma_2) . sigma_k.
//! - energies set hbar = 1.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::hilbert::{Pauli, PauliString, StateVector};

/// Coupling constants used throughout the reference runs: fourteen values
/// randomly distributed between zero and 0.125.
pub const PAPER_COUPLINGS: [f64; 14] = [
    0.123, 0.06425, 0.079, 0.009, 0.0585, 0.03525, 0.012, 0.00525, 0.0945, 0.049, 0.1105,
    0.02575, 0.07625, 0.11225,
];

/// The reference coupling set as a vector.
pub fn paper_couplings() -> Vec<f64> {
    PAPER_COUPLINGS.to_vec()
}

/// Bath-bath exchange pattern for [`ModelSpec::BathExchange`].
#[derive(Clone, Debug, PartialEq)]
pub enum ExchangeSpec {
    /// The same constant on every bath pair.
    Constant(f64),
    /// Per-pair values drawn uniformly from `[0, max]`, deterministic per
    /// seed.
    Random { max: f64, seed: u64 },
}

/// One of the four model families with all physical parameters.
///
/// The variants carry only the fields their family uses, so the
/// "family-irrelevant fields are absent" invariant holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    /// Single spin in a transverse field `2*delta`, Ising-coupled to a
    /// static bath: `H = delta*sigma_x + sigma_z * sum_k J_k sigma_k^z`.
    StaticIsing { delta: f64, couplings: Vec<f64> },
    /// Static-Ising plus a transverse field on every bath spin:
    /// `H_B = h_x * sum_k sigma_k^x`.
    TransverseBath { delta: f64, couplings: Vec<f64>, hx: f64 },
    /// Static-Ising plus Ising-type bath-bath exchange
    /// `H_B = sum_{k<l} A_kl sigma_k^x sigma_l^x`.
    BathExchange {
        delta: f64,
        couplings: Vec<f64>,
        exchange: ExchangeSpec,
    },
    /// Two central spins with exchange `H_0 = 2J s1.s2 + J/2`, isotropically
    /// coupled to a static bath.
    TwoSpinHeisenberg { j_central: f64, couplings: Vec<f64> },
}

impl ModelSpec {
    pub fn n_central(&self) -> usize {
        match self {
            ModelSpec::TwoSpinHeisenberg { .. } => 2,
            _ => 1,
        }
    }

    pub fn n_bath(&self) -> usize {
        self.couplings().len()
    }

    pub fn couplings(&self) -> &[f64] {
        match self {
            ModelSpec::StaticIsing { couplings, .. }
            | ModelSpec::TransverseBath { couplings, .. }
            | ModelSpec::BathExchange { couplings, .. }
            | ModelSpec::TwoSpinHeisenberg { couplings, .. } => couplings,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            ModelSpec::StaticIsing { .. } => "static-ising",
            ModelSpec::TransverseBath { .. } => "transverse-bath",
            ModelSpec::BathExchange { .. } => "bath-exchange",
            ModelSpec::TwoSpinHeisenberg { .. } => "two-spin-heisenberg",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::TransverseBath { hx, .. } => {
                if *hx < 0.0 {
                    return Err(Error::InvalidArgument("hx must be >= 0".into()));
                }
            }
            ModelSpec::BathExchange { exchange, couplings, .. } => {
                let bound = match exchange {
                    ExchangeSpec::Constant(a) => *a,
                    ExchangeSpec::Random { max, .. } => *max,
                };
                if bound < 0.0 {
                    return Err(Error::InvalidArgument(
                        "exchange magnitude must be >= 0".into(),
                    ));
                }
                if couplings.len() < 2 {
                    return Err(Error::InvalidArgument(
                        "bath-exchange model needs at least 2 bath spins".into(),
                    ));
                }
            }
            _ => {}
        }
        if self.n_central() + self.n_bath() > crate::hilbert::MAX_SITES {
            return Err(Error::InvalidArgument(format!(
                "{} total spins exceed the cap of {}",
                self.n_central() + self.n_bath(),
                crate::hilbert::MAX_SITES
            )));
        }
        Ok(())
    }
}

/// A model compiled to an explicit Pauli-string sum plus a fused application
/// kernel. Immutable and shareable across threads.
#[derive(Clone, Debug)]
pub struct CompiledModel {
    terms: Vec<PauliString>,
    n_central: usize,
    n_bath: usize,
    kernel: Kernel,
}

/// Compile a model specification into its Hamiltonian term list.
pub fn compile(spec: &ModelSpec) -> Result<CompiledModel> {
    spec.validate()?;
    let m = spec.n_central();
    let n = spec.n_bath();
    let sites = m + n;
    let mut terms: Vec<PauliString> = Vec::new();

    let central_field = |terms: &mut Vec<PauliString>, delta: f64| {
        terms.push(PauliString::from_ops(sites, delta, &[(0, Pauli::X)]).unwrap());
    };
    let ising_coupling = |terms: &mut Vec<PauliString>, couplings: &[f64]| {
        for (k, &j) in couplings.iter().enumerate() {
            terms.push(
                PauliString::from_ops(sites, j, &[(0, Pauli::Z), (m + k, Pauli::Z)]).unwrap(),
            );
        }
    };

    match spec {
        ModelSpec::StaticIsing { delta, couplings } => {
            central_field(&mut terms, *delta);
            ising_coupling(&mut terms, couplings);
        }
        ModelSpec::TransverseBath { delta, couplings, hx } => {
            central_field(&mut terms, *delta);
            ising_coupling(&mut terms, couplings);
            for k in 0..n {
                terms.push(PauliString::from_ops(sites, *hx, &[(m + k, Pauli::X)]).unwrap());
            }
        }
        ModelSpec::BathExchange { delta, couplings, exchange } => {
            central_field(&mut terms, *delta);
            ising_coupling(&mut terms, couplings);
            let mut rng = match exchange {
                ExchangeSpec::Random { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
                ExchangeSpec::Constant(_) => None,
            };
            for k in 0..n {
                for l in (k + 1)..n {
                    let a = match exchange {
                        ExchangeSpec::Constant(a) => *a,
                        ExchangeSpec::Random { max, .. } => {
                            rng.as_mut().unwrap().gen_range(0.0..=*max)
                        }
                    };
                    if a != 0.0 {
                        terms.push(
                            PauliString::from_ops(
                                sites,
                                a,
                                &[(m + k, Pauli::X), (m + l, Pauli::X)],
                            )
                            .unwrap(),
                        );
                    }
                }
            }
        }
        ModelSpec::TwoSpinHeisenberg { j_central, couplings } => {
            // 2J s1.s2 = (J/2) (XX + YY + ZZ) on the central pair
            let j = *j_central;
            for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
                terms.push(
                    PauliString::from_ops(sites, j / 2.0, &[(0, axis), (1, axis)]).unwrap(),
                );
            }
            // the constant J/2 shifts only the global phase but is kept
            terms.push(PauliString::identity(sites, j / 2.0));
            // V = sum_k (J_k/2) (sigma_1 + sigma_2) . sigma_k
            for (k, &jk) in couplings.iter().enumerate() {
                for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
                    for central in 0..2 {
                        terms.push(
                            PauliString::from_ops(
                                sites,
                                jk / 2.0,
                                &[(central, axis), (m + k, axis)],
                            )
                            .unwrap(),
                        );
                    }
                }
            }
        }
    }

    let kernel = Kernel::build(sites, &terms);
    Ok(CompiledModel { terms, n_central: m, n_bath: n, kernel })
}

impl CompiledModel {
    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn n_central(&self) -> usize {
        self.n_central
    }

    pub fn n_bath(&self) -> usize {
        self.n_bath
    }

    pub fn n_sites(&self) -> usize {
        self.n_central + self.n_bath
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites()
    }

    /// Constant (identity) part of the Hamiltonian.
    pub fn identity_shift(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.is_identity())
            .map(|t| t.coeff())
            .sum()
    }

    /// Sum of absolute non-identity coefficients: a cheap, safe bound on the
    /// spectral radius of `H - shift`.
    pub fn spectral_bound(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| !t.is_identity())
            .map(|t| t.coeff().abs())
            .sum()
    }

    pub(crate) fn kernel(&self) -> &Kernel {
        &self.kernel
    }
}

/// Apply the Hamiltonian to a state: `H|s>`, linear in `s`, matrix-free.
pub fn apply_hamiltonian(m: &CompiledModel, s: &StateVector) -> Result<StateVector> {
    if m.n_sites() != s.n_sites() {
        return Err(Error::DimensionMismatch(format!(
            "model over {} sites applied to state over {} sites",
            m.n_sites(),
            s.n_sites()
        )));
    }
    let mut out = vec![C64::new(0.0, 0.0); s.dim()];
    m.kernel().apply(s.amplitudes(), &mut out);
    Ok(StateVector::from_parts_unchecked(
        s.n_central(),
        s.n_bath(),
        out,
    ))
}

/// Grid step that resolves the fastest observable oscillation by at least
/// ten points per period: `dt = 2*pi / (20 * omega_max)` with `omega_max`
/// the spectral-bound estimate of the oscillation-relevant part of `H`.
pub fn suggested_dt(m: &CompiledModel) -> f64 {
    let omega_max = m.spectral_bound().max(1e-12);
    2.0 * std::f64::consts::PI / (20.0 * omega_max)
}

/// One gather term of the fused kernel:
/// `out[i] += (plain + signed * (-1)^popcount(i & sign_mask)) * in[i ^ flip]`.
///
/// Two strings with the same flip mask merge when their sign masks are equal
/// (coefficients add) or when one of them has no sign mask (it lands in
/// `plain`); that folds XX+YY pairs into a single gather.
#[derive(Clone, Debug)]
struct GatherTerm {
    flip: usize,
    sign_mask: usize,
    plain: C64,
    signed: C64,
}

/// Fused matrix-free form of a compiled Hamiltonian: one precomputed real
/// diagonal (all Z-strings and the identity shift) plus a list of gather
/// terms for the off-diagonal strings.
#[derive(Clone, Debug)]
pub(crate) struct Kernel {
    diag: Vec<f64>,
    gathers: Vec<GatherTerm>,
}

impl Kernel {
    fn build(sites: usize, terms: &[PauliString]) -> Self {
        let dim = 1usize << sites;
        let mut diag = vec![0.0f64; dim];
        let mut gathers: Vec<GatherTerm> = Vec::new();
        for t in terms {
            let (flip, sign, base) = t.gather_parts();
            if flip == 0 {
                // pure Z / identity string: fold into the diagonal
                debug_assert!(base.im == 0.0);
                for (i, d) in diag.iter_mut().enumerate() {
                    let s = if (i & sign).count_ones() & 1 == 1 { -1.0 } else { 1.0 };
                    *d += base.re * s;
                }
            } else if sign == 0 {
                if let Some(g) = gathers.iter_mut().find(|g| g.flip == flip) {
                    g.plain += base;
                } else {
                    gathers.push(GatherTerm {
                        flip,
                        sign_mask: 0,
                        plain: base,
                        signed: C64::new(0.0, 0.0),
                    });
                }
            } else if let Some(g) = gathers
                .iter_mut()
                .find(|g| g.flip == flip && (g.sign_mask == sign || g.sign_mask == 0))
            {
                g.sign_mask = sign;
                g.signed += base;
            } else {
                gathers.push(GatherTerm {
                    flip,
                    sign_mask: sign,
                    plain: C64::new(0.0, 0.0),
                    signed: base,
                });
            }
        }
        Self { diag, gathers }
    }

    /// `out = H * input`.
    pub(crate) fn apply(&self, input: &[C64], out: &mut [C64]) {
        let diag = &self.diag;
        let gathers = &self.gathers;
        exec::fill_chunks(out, |lo, chunk| {
            for (k, slot) in chunk.iter_mut().enumerate() {
                let i = lo + k;
                let mut acc = input[i] * diag[i];
                for g in gathers {
                    let s = 1.0 - 2.0 * (((i & g.sign_mask).count_ones() & 1) as f64);
                    let c = g.plain + g.signed * s;
                    acc += c * input[i ^ g.flip];
                }
                *slot = acc;
            }
        });
    }

    /// One step of the Chebyshev recurrence on the shifted, scaled operator:
    /// `out = scale * (H - shift) * cur - prev_coeff * prev`.
    pub(crate) fn recurrence_step(
        &self,
        scale: f64,
        shift: f64,
        cur: &[C64],
        prev: &[C64],
        prev_coeff: f64,
        out: &mut [C64],
    ) {
        let diag = &self.diag;
        let gathers = &self.gathers;
        exec::fill_chunks(out, |lo, chunk| {
            for (k, slot) in chunk.iter_mut().enumerate() {
                let i = lo + k;
                let mut acc = cur[i] * (diag[i] - shift);
                for g in gathers {
                    let s = 1.0 - 2.0 * (((i & g.sign_mask).count_ones() & 1) as f64);
                    let c = g.plain + g.signed * s;
                    acc += c * cur[i ^ g.flip];
                }
                *slot = acc * scale - prev[i] * prev_coeff;
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::dense_from_terms;
    use crate::hilbert::apply_pauli_string;

    #[test]
    fn paper_couplings_published_values() {
        let j = paper_couplings();
        assert_eq!(j.len(), 14);
        let max = j.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max, 0.123);
        assert!(max <= 0.125);
        let b2: f64 = j.iter().map(|x| x * x).sum();
        // direct summation oracle
        let mut oracle = 0.0;
        for &x in &PAPER_COUPLINGS {
            oracle += x * x;
        }
        assert_eq!(b2, oracle);
        assert!((b2 / 0.0736 - 1.0).abs() < 0.01);
    }

    #[test]
    fn static_ising_term_count() {
        let spec = ModelSpec::StaticIsing { delta: 4.0, couplings: paper_couplings() };
        let m = compile(&spec).unwrap();
        assert_eq!(m.terms().len(), 1 + 14);
        assert_eq!(m.n_sites(), 15);
    }

    #[test]
    fn heisenberg_central_block_spectrum() {
        // 2J s1.s2 + J/2 on the pair alone: singlet at -J, triplet at +J,
        // singlet-triplet gap 2J
        let spec = ModelSpec::TwoSpinHeisenberg { j_central: 8.0, couplings: vec![] };
        let m = compile(&spec).unwrap();
        let h = dense_from_terms(2, m.terms()).unwrap();
        let (vals, _) = crate::dense::jacobi_eigh(&h).unwrap();
        assert!((vals[0] - (-8.0)).abs() < 1e-12);
        for v in &vals[1..] {
            assert!((v - 8.0).abs() < 1e-12);
        }
        assert!((vals[3] - vals[0] - 16.0).abs() < 1e-12);
    }

    #[test]
    fn zero_couplings_leave_bath_trivial() {
        let spec = ModelSpec::StaticIsing { delta: 2.0, couplings: vec![0.0; 3] };
        let m = compile(&spec).unwrap();
        // H acts as delta*sigma_x on the central spin only: an eigenstate of
        // sigma_x stays an eigenstate
        let plus = StateVector::from_bloch([1.0, 0.0, 0.0]).unwrap();
        let s = StateVector::random_bath_product(&plus, 3, 5).unwrap();
        let hs = apply_hamiltonian(&m, &s).unwrap();
        for i in 0..s.dim() {
            let want = s.amplitudes()[i] * 2.0;
            assert!((hs.amplitudes()[i] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn eigenstate_of_pure_z_model() {
        // drop the transverse field: H = sigma_z sum J_k sigma_k^z is
        // diagonal; any basis state is an eigenstate
        let spec = ModelSpec::StaticIsing { delta: 0.0, couplings: vec![0.25, 0.5] };
        let m = compile(&spec).unwrap();
        let s = StateVector::basis_state(1, 2, &[1, 1, 0]).unwrap();
        // central up (+1), bath (+1, -1): eigenvalue 0.25 - 0.5
        let hs = apply_hamiltonian(&m, &s).unwrap();
        let idx = 0b011;
        assert!((hs.amplitudes()[idx] - C64::new(-0.25, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn kernel_matches_per_term_application() {
        let spec = ModelSpec::TwoSpinHeisenberg {
            j_central: 8.0,
            couplings: vec![0.1, 0.07, 0.02],
        };
        let m = compile(&spec).unwrap();
        let central = StateVector::basis_state(2, 0, &[1, 0]).unwrap();
        let s = StateVector::random_bath_product(&central, 3, 11).unwrap();
        let fused = apply_hamiltonian(&m, &s).unwrap();
        // reference route: sum of individual string applications
        let mut acc = vec![C64::new(0.0, 0.0); s.dim()];
        for t in m.terms() {
            let ts = apply_pauli_string(t, &s).unwrap();
            for (a, b) in acc.iter_mut().zip(ts.amplitudes()) {
                *a += b;
            }
        }
        for (f, r) in fused.amplitudes().iter().zip(acc.iter()) {
            assert!((f - r).norm() < 1e-13);
        }
    }

    #[test]
    fn static_ising_matches_dense_oracle() {
        let spec = ModelSpec::StaticIsing {
            delta: 1.3,
            couplings: vec![0.11, 0.05, 0.021, 0.093],
        };
        let m = compile(&spec).unwrap();
        let central = StateVector::from_bloch([0.6, 0.0, 0.8]).unwrap();
        let s = StateVector::random_bath_product(&central, 4, 3).unwrap();
        let hs = apply_hamiltonian(&m, &s).unwrap();
        let dense = dense_from_terms(5, m.terms()).unwrap();
        let want = dense.apply(s.amplitudes());
        for (a, b) in hs.amplitudes().iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn bath_exchange_random_is_seed_deterministic() {
        let mk = |seed| {
            compile(&ModelSpec::BathExchange {
                delta: 4.0,
                couplings: vec![0.1, 0.2, 0.15],
                exchange: ExchangeSpec::Random { max: 0.02, seed },
            })
            .unwrap()
        };
        let a = mk(9);
        let b = mk(9);
        assert_eq!(a.terms().len(), b.terms().len());
        for (ta, tb) in a.terms().iter().zip(b.terms()) {
            assert_eq!(ta.coeff(), tb.coeff());
        }
        let c = mk(10);
        let diff = a
            .terms()
            .iter()
            .zip(c.terms())
            .any(|(x, y)| x.coeff() != y.coeff());
        assert!(diff);
    }
}
