//! Exact state-vector dynamics of one or two central spins coupled to a bath
//! of spin-1/2 particles.
//!
//! The crate simulates the compound system-plus-bath Schrödinger equation
//! without approximation: states are full complex amplitude vectors over the
//! joint computational basis, Hamiltonians are sums of Pauli strings applied
//! matrix-free, and time evolution is carried out either by a closed-form
//! per-configuration rotation (static Ising bath) or by a Chebyshev expansion
//! of the evolution operator. Closed-form envelope laws for the decay of
//! central-spin oscillations live in [`theory`] and double as independent
//! oracles for the simulators.
//!
//! Modules:
//! - [`hilbert`] — joint states, Pauli strings, matrix-free application
//! - [`models`] — the four model families compiled to Pauli-string sums
//! - [`propagators`] — exact, polynomial and dense-oracle time evolution
//! - [`observables`] — expectations, reduced density matrices, entropy
//! - [`theory`] — analytic envelopes, Gaussian averages, envelope extraction
//!
//! With the default `parallel` feature the inner loops run on rayon; without
//! it everything falls back to equivalent sequential code. Results are
//! bit-identical across thread counts: reductions use a fixed chunking of the
//! index space and a fixed summation order.

pub mod bessel;
pub mod dense;
pub mod error;
pub mod exec;
pub mod hilbert;
pub mod models;
pub mod observables;
pub mod propagators;
pub mod quadrature;
pub mod theory;

pub use error::{Error, Result};
