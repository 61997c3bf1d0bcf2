//! Time evolution engines.
//!
//! Three routes with very different error profiles, kept deliberately
//! independent so they can cross-check each other:
//! - [`evolve_static_ising`]: closed-form per-bath-configuration rotation,
//!   exact for arbitrary `t` (static-Ising family only);
//! - [`evolve_polynomial`]: Chebyshev expansion of `exp(-iHt)`, matrix-free,
//!   spectrally accurate, for every compiled model;
//! - [`dense_oracle`]: explicit eigendecomposition of the dense Hamiltonian,
//!   reference quality, capped at dimension 1024.

use num_complex::Complex64 as C64;

use crate::bessel::bessel_j_array;
use crate::dense::{dense_from_terms, jacobi_eigh};
use crate::error::{Error, Result};
use crate::exec;
use crate::hilbert::StateVector;
use crate::models::{CompiledModel, ModelSpec};

/// Which evolution engine a run used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ExactStaticIsing,
    Polynomial,
    DenseOracle,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::ExactStaticIsing => "exact-static-ising",
            Method::Polynomial => "polynomial",
            Method::DenseOracle => "dense-oracle",
        };
        write!(f, "{name}")
    }
}

/// Truncation tolerance and output grid step for the polynomial propagator.
#[derive(Clone, Copy, Debug)]
pub struct PropagatorConfig {
    /// Truncation threshold for the Chebyshev coefficient tail.
    pub tolerance: f64,
    /// Output sampling step; only used by the sampled drivers.
    pub dt: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self { tolerance: 1e-12, dt: 0.05 }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be > 0".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument("dt must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-segment Chebyshev degree cap.
const DEGREE_CAP: usize = 10_000;
/// Scaled time per segment for single-shot evolution (degree stays well
/// below the cap).
const SINGLE_SHOT_Z: f64 = 6000.0;
/// Scaled time per segment for the sampled driver; keeps the number of
/// stored Chebyshev vectors small while amortizing them over many samples.
const SAMPLED_Z: f64 = 16.0;

// ---------------------------------------------------------------------------
// Exact propagator for the static Ising bath
// ---------------------------------------------------------------------------

/// Closed-form propagator for the static-Ising family. For every bath basis
/// configuration `m` the central spin sees a static field `B_m`, and the
/// evolution operator on the amplitude pair is the exact 2x2 rotation
/// `U(t) = cos(Omega t) - i (sigma_z B_m + sigma_x Delta) sin(Omega t) / Omega`
/// with `Omega = sqrt(Delta^2 + B_m^2)`. Exact for arbitrary `t`; cost one
/// pass over the amplitudes per evaluation.
#[derive(Clone, Debug)]
pub struct StaticIsingPropagator {
    delta: f64,
    n_bath: usize,
    b_fields: Vec<f64>,
}

impl StaticIsingPropagator {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let ModelSpec::StaticIsing { delta, couplings } = spec else {
            return Err(Error::InvalidArgument(format!(
                "exact propagator requires the static-ising family, got {}",
                spec.family_name()
            )));
        };
        let n = couplings.len();
        let mut b_fields = vec![0.0f64; 1 << n];
        exec::fill_chunks(&mut b_fields, |lo, chunk| {
            for (k, slot) in chunk.iter_mut().enumerate() {
                let m = lo + k;
                let mut b = 0.0;
                for (bit, &j) in couplings.iter().enumerate() {
                    b += if m >> bit & 1 == 1 { j } else { -j };
                }
                *slot = b;
            }
        });
        Ok(Self { delta: *delta, n_bath: n, b_fields })
    }

    pub fn n_bath(&self) -> usize {
        self.n_bath
    }

    /// Collective field value for each bath configuration.
    pub fn b_fields(&self) -> &[f64] {
        &self.b_fields
    }

    pub fn evolve(&self, s0: &StateVector, t: f64) -> Result<StateVector> {
        let mut out = vec![C64::new(0.0, 0.0); s0.dim()];
        self.evolve_into(s0, t, &mut out)?;
        let state = StateVector::from_parts_unchecked(1, self.n_bath, out);
        check_norm(&state)?;
        Ok(state)
    }

    /// Write `U(t)|s0>` into `out` (length `2^(1+n_bath)`).
    pub fn evolve_into(&self, s0: &StateVector, t: f64, out: &mut [C64]) -> Result<()> {
        if s0.n_central() != 1 || s0.n_bath() != self.n_bath {
            return Err(Error::DimensionMismatch(format!(
                "propagator built for 1+{} spins, state has {}+{}",
                self.n_bath,
                s0.n_central(),
                s0.n_bath()
            )));
        }
        if out.len() != s0.dim() {
            return Err(Error::DimensionMismatch("output buffer length".into()));
        }
        let delta = self.delta;
        let src = s0.amplitudes();
        let b_fields = &self.b_fields;
        // each configuration owns the disjoint amplitude pair (2m, 2m+1)
        exec::for_each_chunk_mut(out, 2 * exec::CHUNK, |ci, chunk| {
            let m0 = ci * exec::CHUNK;
            for (k, pair) in chunk.chunks_exact_mut(2).enumerate() {
                let m = m0 + k;
                let b = b_fields[m];
                let omega = (delta * delta + b * b).sqrt();
                let (c, s) = if omega > 1e-300 {
                    let (sin, cos) = (omega * t).sin_cos();
                    (cos, sin / omega)
                } else {
                    (1.0, t)
                };
                let a0 = src[2 * m];
                let a1 = src[2 * m + 1];
                // U = c*I - i*s*[[-b, delta], [delta, b]]
                let ib = C64::new(0.0, s * b);
                let id = C64::new(0.0, s * delta);
                pair[0] = (C64::new(c, 0.0) + ib) * a0 - id * a1;
                pair[1] = -id * a0 + (C64::new(c, 0.0) - ib) * a1;
            }
        });
        Ok(())
    }
}

/// One-shot exact evolution for the static-Ising family.
pub fn evolve_static_ising(spec: &ModelSpec, s0: &StateVector, t: f64) -> Result<StateVector> {
    StaticIsingPropagator::new(spec)?.evolve(s0, t)
}

// ---------------------------------------------------------------------------
// Chebyshev polynomial propagator
// ---------------------------------------------------------------------------

/// Chebyshev coefficient count for scaled time `z`: the smallest degree past
/// the Bessel turning point whose coefficients drop below a hundredth of the
/// requested tolerance. Errors instead of truncating silently.
fn chebyshev_degree(z: f64, tolerance: f64, cap: usize) -> Result<(usize, Vec<f64>)> {
    let tail = tolerance * 1e-2;
    let k_hint = z.ceil() as usize + 60 + (16.0 * z.cbrt()) as usize;
    let k_max = k_hint.min(cap);
    let coeffs = bessel_j_array(z, k_max);
    let mut k = z.floor() as usize;
    while k + 1 < coeffs.len() {
        if coeffs[k].abs() < tail && coeffs[k + 1].abs() < tail {
            return Ok((k, coeffs));
        }
        k += 1;
    }
    Err(Error::Convergence(format!(
        "Chebyshev expansion did not reach tolerance {tolerance} within degree {cap} \
         (scaled time {z:.3})"
    )))
}

/// Coefficient of the k-th Chebyshev vector for evolution over scaled time
/// `z`, including the identity-shift phase: `phase * (2 - delta_k0) * (-i)^k
/// * J_k(z)`.
fn coefficient(k: usize, bessel: &[f64], phase: C64) -> C64 {
    let pre = if k == 0 { 1.0 } else { 2.0 };
    let v = pre * bessel[k];
    let rot = match k % 4 {
        0 => C64::new(v, 0.0),
        1 => C64::new(0.0, -v),
        2 => C64::new(-v, 0.0),
        _ => C64::new(0.0, v),
    };
    phase * rot
}

struct ChebWorkspace {
    prev: Vec<C64>,
    cur: Vec<C64>,
    next: Vec<C64>,
}

impl ChebWorkspace {
    fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Self { prev: z.clone(), cur: z.clone(), next: z }
    }
}

/// Advance `psi` by `span` with a single streamed Chebyshev expansion
/// (one output state).
fn segment_single(
    model: &CompiledModel,
    radius: f64,
    shift: f64,
    tolerance: f64,
    psi: &mut Vec<C64>,
    span: f64,
    ws: &mut ChebWorkspace,
) -> Result<()> {
    let z = radius * span;
    let (degree, bessel) = chebyshev_degree(z, tolerance, DEGREE_CAP)?;
    let phase = C64::from_polar(1.0, -shift * span);
    let kernel = model.kernel();
    let dim = psi.len();

    // phi_0 = psi
    ws.prev.copy_from_slice(psi);
    let mut acc = vec![C64::new(0.0, 0.0); dim];
    let c0 = coefficient(0, &bessel, phase);
    exec::fill_chunks(&mut acc, |lo, chunk| {
        for (k, slot) in chunk.iter_mut().enumerate() {
            *slot = c0 * ws.prev[lo + k];
        }
    });
    if degree >= 1 {
        // phi_1 = (H - shift)/radius * phi_0
        kernel.recurrence_step(1.0 / radius, shift, &ws.prev, &ws.prev, 0.0, &mut ws.cur);
        let c1 = coefficient(1, &bessel, phase);
        axpy(&mut acc, c1, &ws.cur);
        for k in 2..=degree {
            kernel.recurrence_step(2.0 / radius, shift, &ws.cur, &ws.prev, 1.0, &mut ws.next);
            let ck = coefficient(k, &bessel, phase);
            axpy(&mut acc, ck, &ws.next);
            std::mem::swap(&mut ws.prev, &mut ws.cur);
            std::mem::swap(&mut ws.cur, &mut ws.next);
        }
    }
    *psi = acc;
    Ok(())
}

fn axpy(acc: &mut [C64], c: C64, v: &[C64]) {
    exec::fill_chunks(acc, |lo, chunk| {
        for (k, slot) in chunk.iter_mut().enumerate() {
            *slot += c * v[lo + k];
        }
    });
}

/// Approximate `exp(-iHt)|s0>` with truncation error below
/// `cfg.tolerance` in the 2-norm. Long evolutions are split into segments so
/// the per-segment polynomial degree stays modest.
pub fn evolve_polynomial(
    model: &CompiledModel,
    s0: &StateVector,
    t: f64,
    cfg: &PropagatorConfig,
) -> Result<StateVector> {
    cfg.validate()?;
    if t < 0.0 {
        return Err(Error::InvalidArgument("t must be >= 0".into()));
    }
    if model.n_sites() != s0.n_sites() || model.n_central() != s0.n_central() {
        return Err(Error::DimensionMismatch(
            "model and state describe different systems".into(),
        ));
    }
    let radius = model.spectral_bound();
    let shift = model.identity_shift();
    let mut amps = s0.amplitudes().to_vec();
    if radius * t < 1e-14 {
        // constant Hamiltonian part only: a global phase
        let phase = C64::from_polar(1.0, -shift * t);
        for a in &mut amps {
            *a *= phase;
        }
    } else {
        let n_seg = ((radius * t) / SINGLE_SHOT_Z).ceil().max(1.0) as usize;
        let span = t / n_seg as f64;
        let mut ws = ChebWorkspace::new(amps.len());
        for seg in 0..n_seg {
            segment_single(model, radius, shift, cfg.tolerance, &mut amps, span, &mut ws)?;
            if seg + 1 < n_seg {
                let norm = norm_of(&amps);
                if (norm - 1.0).abs() > 1e-15 {
                    let inv = 1.0 / norm;
                    exec::fill_chunks(&mut amps, |_, chunk| {
                        for a in chunk.iter_mut() {
                            *a *= inv;
                        }
                    });
                }
            }
        }
    }
    let state = StateVector::from_parts_unchecked(s0.n_central(), s0.n_bath(), amps);
    check_norm(&state)?;
    Ok(state)
}

/// Evolve `s0` on the uniform grid `t_j = j * cfg.dt`, `j = 0..n_samples`,
/// invoking `sink(j, state_j)` for every sample in order.
///
/// Each segment expands the evolution operator once and reconstructs all
/// samples inside the segment from the shared Chebyshev vectors, so the cost
/// per sample stays far below one expansion per step.
pub fn evolve_polynomial_sampled<F>(
    model: &CompiledModel,
    s0: &StateVector,
    n_samples: usize,
    cfg: &PropagatorConfig,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(usize, &StateVector) -> Result<()>,
{
    cfg.validate()?;
    if model.n_sites() != s0.n_sites() || model.n_central() != s0.n_central() {
        return Err(Error::DimensionMismatch(
            "model and state describe different systems".into(),
        ));
    }
    sink(0, s0)?;
    if n_samples == 0 {
        return Ok(());
    }
    let dt = cfg.dt;
    let radius = model.spectral_bound();
    let shift = model.identity_shift();
    let dim = s0.dim();

    if radius * (dt * n_samples as f64) < 1e-14 {
        for j in 1..=n_samples {
            let phase = C64::from_polar(1.0, -shift * dt * j as f64);
            let amps: Vec<C64> = s0.amplitudes().iter().map(|a| a * phase).collect();
            let state = StateVector::from_parts_unchecked(s0.n_central(), s0.n_bath(), amps);
            sink(j, &state)?;
        }
        return Ok(());
    }

    let per_seg = ((SAMPLED_Z / (radius * dt)).floor() as usize).clamp(1, 256);
    let mut psi = s0.amplitudes().to_vec();
    let mut next_sample = 1usize;
    let scratch_block = 1usize << 12;

    // Chebyshev vectors for the current segment, plus the flat block-major
    // reconstruction buffer (see below)
    let mut phis: Vec<Vec<C64>> = Vec::new();
    let mut outs_flat: Vec<C64> = Vec::new();
    let mut sample_buf = vec![C64::new(0.0, 0.0); dim];

    while next_sample <= n_samples {
        let j_last = (next_sample + per_seg - 1).min(n_samples);
        let n_out = j_last - next_sample + 1;
        let span = dt * n_out as f64;
        let z = radius * span;
        let (degree, _) = chebyshev_degree(z, cfg.tolerance, DEGREE_CAP)?;

        // build and store the Chebyshev vectors for this segment
        while phis.len() < degree + 1 {
            phis.push(vec![C64::new(0.0, 0.0); dim]);
        }
        phis[0].copy_from_slice(&psi);
        if degree >= 1 {
            let (head, tail) = phis.split_at_mut(1);
            model
                .kernel()
                .recurrence_step(1.0 / radius, shift, &head[0], &head[0], 0.0, &mut tail[0]);
        }
        for k in 2..=degree {
            let (before, after) = phis.split_at_mut(k);
            model.kernel().recurrence_step(
                2.0 / radius,
                shift,
                &before[k - 1],
                &before[k - 2],
                1.0,
                &mut after[0],
            );
        }

        // per-sample coefficients (offset tau_j from segment start)
        let mut coeffs: Vec<Vec<C64>> = Vec::with_capacity(n_out);
        for jj in 0..n_out {
            let tau = dt * (jj + 1) as f64;
            let zt = radius * tau;
            let b = bessel_j_array(zt, degree);
            let phase = C64::from_polar(1.0, -shift * tau);
            coeffs.push((0..=degree).map(|k| coefficient(k, &b, phase)).collect());
        }

        // block-major reconstruction: outs_flat holds, for each index block,
        // the n_out sample sub-blocks back to back
        let n_blocks = dim.div_ceil(scratch_block);
        outs_flat.clear();
        outs_flat.resize(n_blocks * n_out * scratch_block, C64::new(0.0, 0.0));
        let phis_ref = &phis;
        let coeffs_ref = &coeffs;
        exec::for_each_chunk_mut(&mut outs_flat, n_out * scratch_block, |b, chunk| {
            let lo = b * scratch_block;
            let hi = ((b + 1) * scratch_block).min(dim);
            let len = hi - lo;
            for k in 0..=degree {
                let phi = &phis_ref[k][lo..hi];
                for (jj, cs) in coeffs_ref.iter().enumerate() {
                    let c = cs[k];
                    let sub = &mut chunk[jj * scratch_block..jj * scratch_block + len];
                    for (s, p) in sub.iter_mut().zip(phi.iter()) {
                        *s += c * p;
                    }
                }
            }
        });

        // emit samples in order and carry the segment-end state forward
        for jj in 0..n_out {
            for b in 0..n_blocks {
                let lo = b * scratch_block;
                let hi = ((b + 1) * scratch_block).min(dim);
                let src = b * n_out * scratch_block + jj * scratch_block;
                sample_buf[lo..hi].copy_from_slice(&outs_flat[src..src + (hi - lo)]);
            }
            if jj == n_out - 1 {
                psi.copy_from_slice(&sample_buf);
                // rescale away per-segment roundoff so it cannot accumulate
                // over tens of thousands of segments (the exact dynamics is
                // unitary; the emitted samples keep their raw norms)
                let norm = norm_of(&psi);
                if (norm - 1.0).abs() > 1e-15 {
                    let inv = 1.0 / norm;
                    exec::fill_chunks(&mut psi, |_, chunk| {
                        for a in chunk.iter_mut() {
                            *a *= inv;
                        }
                    });
                }
            }
            let state = StateVector::from_parts_unchecked(
                s0.n_central(),
                s0.n_bath(),
                std::mem::take(&mut sample_buf),
            );
            check_norm(&state)?;
            sink(next_sample + jj, &state)?;
            sample_buf = state.into_amplitudes();
        }
        next_sample = j_last + 1;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Dense oracle
// ---------------------------------------------------------------------------

/// Reference evolution by explicit eigendecomposition of the dense
/// Hamiltonian. Limited to 10 spins (dimension 1024).
pub fn dense_oracle(model: &CompiledModel, s0: &StateVector, t: f64) -> Result<StateVector> {
    if model.n_sites() > 10 {
        return Err(Error::DimensionCap(format!(
            "dense oracle limited to 10 spins, model has {}",
            model.n_sites()
        )));
    }
    if model.n_sites() != s0.n_sites() || model.n_central() != s0.n_central() {
        return Err(Error::DimensionMismatch(
            "model and state describe different systems".into(),
        ));
    }
    let h = dense_from_terms(model.n_sites(), model.terms())?;
    let (vals, u) = jacobi_eigh(&h)?;
    let dim = s0.dim();
    // v = U^dagger psi; v_i *= exp(-i lambda_i t); psi' = U v
    let mut v = vec![C64::new(0.0, 0.0); dim];
    for i in 0..dim {
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..dim {
            acc += u[(r, i)].conj() * s0.amplitudes()[r];
        }
        v[i] = acc * C64::from_polar(1.0, -vals[i] * t);
    }
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for (r, slot) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (i, vi) in v.iter().enumerate() {
            acc += u[(r, i)] * vi;
        }
        *slot = acc;
    }
    let state = StateVector::from_parts_unchecked(s0.n_central(), s0.n_bath(), out);
    check_norm(&state)?;
    Ok(state)
}

fn norm_of(amps: &[C64]) -> f64 {
    exec::chunked_sum(amps.len(), |r| {
        r.map(|i| amps[i].norm_sqr()).sum::<f64>()
    })
    .sqrt()
}

fn check_norm(s: &StateVector) -> Result<()> {
    let norm = s.norm();
    if (norm - 1.0).abs() > 1e-11 {
        return Err(Error::Convergence(format!(
            "propagated state norm {norm} drifted from 1"
        )));
    }
    Ok(())
}
