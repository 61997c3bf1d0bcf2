//! Joint system-bath pure states and matrix-free Pauli-string application.
//!
//! Basis convention: amplitudes are stored in a flat array indexed by
//! little-endian bit packing. Bits `0..M-1` are the central spins, bits
//! `M..M+N-1` the bath spins; bit value 1 is the spin-up eigenstate of the
//! z Pauli operator, with the sign convention `Z|1> = +|1>`, `Z|0> = -|0>`.
//! Any self-consistent convention gives the same physics; this one keeps the
//! bit arithmetic direct.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::{self, CSum};

/// Hard cap on the total number of spins; beyond this the flat amplitude
/// array stops being a sensible representation.
pub const MAX_SITES: usize = 24;

/// Tolerance on the state norm after construction and propagation.
pub const NORM_TOL: f64 = 1e-12;

/// A normalized pure state of `n_central + n_bath` spins.
#[derive(Clone, Debug)]
pub struct StateVector {
    amps: Vec<C64>,
    n_central: usize,
    n_bath: usize,
}

impl StateVector {
    /// Build a state from raw amplitudes. The vector length must be
    /// `2^(n_central+n_bath)` and the norm must already be 1 within
    /// [`NORM_TOL`].
    pub fn from_amplitudes(n_central: usize, n_bath: usize, amps: Vec<C64>) -> Result<Self> {
        check_site_counts(n_central, n_bath)?;
        let dim = 1usize << (n_central + n_bath);
        if amps.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "expected 2^{} = {} amplitudes, got {}",
                n_central + n_bath,
                dim,
                amps.len()
            )));
        }
        let state = Self { amps, n_central, n_bath };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state norm {norm} deviates from 1 by more than {NORM_TOL}"
            )));
        }
        Ok(state)
    }

    /// Computational basis state selected by `bits` (one entry per site,
    /// site 0 first; nonzero means spin up).
    pub fn basis_state(n_central: usize, n_bath: usize, bits: &[u8]) -> Result<Self> {
        check_site_counts(n_central, n_bath)?;
        let n = n_central + n_bath;
        if bits.len() != n {
            return Err(Error::InvalidArgument(format!(
                "bitstring length {} does not match site count {}",
                bits.len(),
                n
            )));
        }
        let mut index = 0usize;
        for (site, &b) in bits.iter().enumerate() {
            if b != 0 {
                index |= 1 << site;
            }
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amps, n_central, n_bath })
    }

    /// Pure single-spin state with Bloch vector along `r` (normalized
    /// internally, so `r` may carry rounded entries of norm slightly off 1).
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if len < 1e-12 {
            return Err(Error::InvalidArgument(
                "Bloch vector must be nonzero".into(),
            ));
        }
        let (x, y, z) = (r[0] / len, r[1] / len, r[2] / len);
        let theta = z.clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        // bit 1 = up carries cos(theta/2); bit 0 = down carries the phase
        let a_up = C64::new((theta / 2.0).cos(), 0.0);
        let a_down = C64::from_polar((theta / 2.0).sin(), phi);
        Self::from_amplitudes(1, 0, vec![a_down, a_up])
    }

    /// Tensor a normalized central state with a random bath superposition:
    /// all `2^n_bath` bath coefficients are drawn i.i.d. standard complex
    /// Gaussian and then normalized. Deterministic under a fixed seed.
    pub fn random_bath_product(central: &StateVector, n_bath: usize, seed: u64) -> Result<Self> {
        if central.n_bath != 0 {
            return Err(Error::InvalidArgument(
                "central state must not already contain bath spins".into(),
            ));
        }
        if n_bath == 0 {
            return Err(Error::InvalidArgument("n_bath must be at least 1".into()));
        }
        check_site_counts(central.n_central, n_bath)?;
        let bath_dim = 1usize << n_bath;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;
        let mut bath: Vec<C64> = (0..bath_dim)
            .map(|_| {
                let re: f64 = normal.sample(&mut rng);
                let im: f64 = normal.sample(&mut rng);
                C64::new(re, im)
            })
            .collect();
        let norm: f64 = bath.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut bath {
            *c /= norm;
        }

        let c_dim = central.dim();
        let mut amps = vec![C64::new(0.0, 0.0); c_dim * bath_dim];
        for (m, &b) in bath.iter().enumerate() {
            for (c, &a) in central.amps.iter().enumerate() {
                amps[c + (m << central.n_central)] = a * b;
            }
        }
        Self::from_amplitudes(central.n_central, n_bath, amps)
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
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// 2-norm of the amplitude vector.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        let amps = &self.amps;
        exec::chunked_sum(amps.len(), |r| {
            r.map(|i| amps[i].norm_sqr()).sum::<f64>()
        })
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(
                "inner product of states with different dimensions".into(),
            ));
        }
        let (a, b) = (&self.amps, &other.amps);
        let s: CSum = exec::chunked_sum(a.len(), |r| {
            let mut acc = CSum::default();
            for i in r {
                let v = a[i].conj() * b[i];
                acc.0 += v.re;
                acc.1 += v.im;
            }
            acc
        });
        Ok(C64::new(s.0, s.1))
    }

    /// L2 distance to another state, used by the cross-method checks.
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(
                "distance between states with different dimensions".into(),
            ));
        }
        let (a, b) = (&self.amps, &other.amps);
        let d: f64 = exec::chunked_sum(a.len(), |r| {
            r.map(|i| (a[i] - b[i]).norm_sqr()).sum::<f64>()
        });
        Ok(d.sqrt())
    }

    /// Construct without the norm check; for internal use where the caller
    /// guarantees (and then asserts) normalization.
    pub(crate) fn from_parts_unchecked(n_central: usize, n_bath: usize, amps: Vec<C64>) -> Self {
        Self { amps, n_central, n_bath }
    }

    pub(crate) fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }
}

fn check_site_counts(n_central: usize, n_bath: usize) -> Result<()> {
    if n_central == 0 || n_central > 2 {
        return Err(Error::InvalidArgument(format!(
            "n_central must be 1 or 2, got {n_central}"
        )));
    }
    if n_central + n_bath > MAX_SITES {
        return Err(Error::InvalidArgument(format!(
            "{} total spins exceed the cap of {MAX_SITES}",
            n_central + n_bath
        )));
    }
    Ok(())
}

/// Single-site Pauli operator letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// A real-coefficient tensor product of Pauli operators over all sites.
/// An all-identity string is allowed and represents a constant shift.
#[derive(Clone, Debug)]
pub struct PauliString {
    coeff: f64,
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(coeff: f64, letters: Vec<Pauli>) -> Self {
        Self { coeff, letters }
    }

    /// Identity on `n_sites` sites except for the listed `(site, letter)`
    /// pairs.
    pub fn from_ops(n_sites: usize, coeff: f64, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut letters = vec![Pauli::I; n_sites];
        for &(site, p) in ops {
            if site >= n_sites {
                return Err(Error::InvalidArgument(format!(
                    "site {site} out of range for {n_sites} sites"
                )));
            }
            letters[site] = p;
        }
        Ok(Self { coeff, letters })
    }

    pub fn identity(n_sites: usize, coeff: f64) -> Self {
        Self { coeff, letters: vec![Pauli::I; n_sites] }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn n_sites(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Bit masks and scalar prefactor of the gather form
    /// `out[i] = base * (-1)^popcount(i & sign_mask) * in[i ^ flip_mask]`.
    ///
    /// With the sign convention above: X contributes a flip bit; Z a sign
    /// bit and a factor -1; Y a flip bit, a sign bit and a factor i.
    pub(crate) fn gather_parts(&self) -> (usize, usize, C64) {
        let mut flip = 0usize;
        let mut sign = 0usize;
        let mut base = C64::new(self.coeff, 0.0);
        for (site, &p) in self.letters.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => flip |= 1 << site,
                Pauli::Y => {
                    flip |= 1 << site;
                    sign |= 1 << site;
                    base *= C64::new(0.0, 1.0);
                }
                Pauli::Z => {
                    sign |= 1 << site;
                    base = -base;
                }
            }
        }
        (flip, sign, base)
    }
}

/// Apply a Pauli string to a state without forming any matrix; O(2^n).
pub fn apply_pauli_string(p: &PauliString, s: &StateVector) -> Result<StateVector> {
    if p.n_sites() != s.n_sites() {
        return Err(Error::DimensionMismatch(format!(
            "string over {} sites applied to state over {} sites",
            p.n_sites(),
            s.n_sites()
        )));
    }
    let (flip, sign, base) = p.gather_parts();
    let src = s.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); src.len()];
    exec::fill_chunks(&mut out, |lo, chunk| {
        for (k, slot) in chunk.iter_mut().enumerate() {
            let i = lo + k;
            let v = base * src[i ^ flip];
            *slot = if (i & sign).count_ones() & 1 == 1 { -v } else { v };
        }
    });
    Ok(StateVector::from_parts_unchecked(
        s.n_central(),
        s.n_bath(),
        out,
    ))
}
