//! Property tests over random states, strings and model parameters.

use proptest::prelude::*;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinbath::hilbert::{apply_pauli_string, Pauli, PauliString, StateVector};
use spinbath::models::{apply_hamiltonian, compile, ModelSpec};
use spinbath::observables::{
    quadratic_entropy, reduced_density_matrix, to_coupled_basis, TimeSeries,
};
use spinbath::propagators::{evolve_polynomial, evolve_static_ising, PropagatorConfig};
use spinbath::theory::{envelope_dynamic, envelope_static, extract_envelope, TheoryParams};

fn arb_state(n_central: usize, n_bath: usize) -> impl Strategy<Value = StateVector> {
    any::<u64>().prop_map(move |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 1usize << (n_central + n_bath);
        let mut amps: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector::from_amplitudes(n_central, n_bath, amps).unwrap()
    })
}

fn arb_string(n_sites: usize) -> impl Strategy<Value = PauliString> {
    proptest::collection::vec(0..4u8, n_sites).prop_map(|codes| {
        let letters = codes
            .iter()
            .map(|c| match c {
                0 => Pauli::I,
                1 => Pauli::X,
                2 => Pauli::Y,
                _ => Pauli::Z,
            })
            .collect();
        PauliString::new(1.0, letters)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pauli_strings_are_isometries_and_involutions(
        s in arb_state(1, 4),
        p in arb_string(5),
    ) {
        let once = apply_pauli_string(&p, &s).unwrap();
        prop_assert!((once.norm() - s.norm()).abs() < 1e-14);
        let twice = apply_pauli_string(&p, &once).unwrap();
        for (a, b) in twice.amplitudes().iter().zip(s.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn hamiltonians_are_hermitian(
        u in arb_state(1, 4),
        v in arb_state(1, 4),
        delta in 0.1f64..8.0,
        hx in 0.0f64..1.5,
        j1 in 0.0f64..0.3,
        j2 in 0.0f64..0.3,
    ) {
        let spec = ModelSpec::TransverseBath {
            delta,
            couplings: vec![j1, j2, 0.05, 0.11],
            hx,
        };
        let m = compile(&spec).unwrap();
        let hu = apply_hamiltonian(&m, &u).unwrap();
        let hv = apply_hamiltonian(&m, &v).unwrap();
        let a = u.inner(&hv).unwrap();
        let b = v.inner(&hu).unwrap();
        prop_assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn propagation_preserves_norm_and_entropy_bounds(
        seed in any::<u64>(),
        t in 0.0f64..30.0,
        delta in 0.5f64..6.0,
    ) {
        let central = StateVector::from_bloch([0.447, 0.0, 0.894]).unwrap();
        let s0 = StateVector::random_bath_product(&central, 4, seed).unwrap();
        let spec = ModelSpec::StaticIsing { delta, couplings: vec![0.1, 0.07, 0.21, 0.04] };
        let s = evolve_static_ising(&spec, &s0, t).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        let rho = reduced_density_matrix(&s).unwrap();
        let se = quadratic_entropy(&rho);
        prop_assert!(se >= -1e-12 && se <= 0.5 + 1e-12);
    }

    #[test]
    fn two_spin_entropy_bounds_and_coupled_basis_trace(
        seed in any::<u64>(),
        t in 0.0f64..8.0,
    ) {
        let central = StateVector::basis_state(2, 0, &[1, 0]).unwrap();
        let s0 = StateVector::random_bath_product(&central, 3, seed).unwrap();
        let spec = ModelSpec::TwoSpinHeisenberg {
            j_central: 8.0,
            couplings: vec![0.12, 0.05, 0.09],
        };
        let m = compile(&spec).unwrap();
        let s = evolve_polynomial(&m, &s0, t, &PropagatorConfig::default()).unwrap();
        let rho = reduced_density_matrix(&s).unwrap();
        let se = quadratic_entropy(&rho);
        prop_assert!(se >= -1e-12 && se <= 0.75 + 1e-12);
        let coupled = to_coupled_basis(&rho).unwrap();
        prop_assert!((coupled.trace() - 1.0).abs() < 1e-12);
        let mut va = rho.eigenvalues().unwrap();
        let mut vb = coupled.eigenvalues().unwrap();
        va.sort_by(f64::total_cmp);
        vb.sort_by(f64::total_cmp);
        for (a, b) in va.iter().zip(vb.iter()) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn envelopes_decrease_and_bound_signals(
        b2 in 0.001f64..0.5,
        delta in 1.0f64..8.0,
        t in 0.0f64..500.0,
    ) {
        let p = TheoryParams::new(delta, b2).unwrap();
        let e1 = envelope_static(t, &p, 1.0);
        let e2 = envelope_static(t + 1.0, &p, 1.0);
        prop_assert!(e2 < e1 || t == 0.0 && e2 <= e1);
        let d1 = envelope_dynamic(t, &p, 1.0);
        let d2 = envelope_dynamic(t + 1.0, &p, 1.0);
        prop_assert!(d2 < d1 || t == 0.0 && d2 <= d1);
        let v = spinbath::theory::sigma_z_analytic(t, &p, 1.0);
        prop_assert!(v.abs() <= e1 + 1e-12);
    }

    #[test]
    fn extracted_envelope_of_damped_cosine_tracks_decay(
        amp in 0.2f64..1.0,
        rate in 0.01f64..0.1,
        omega in 5.0f64..12.0,
    ) {
        let dt = 2.0 * std::f64::consts::PI / omega / 60.0;
        let times: Vec<f64> = (0..4000).map(|i| i as f64 * dt).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|t| amp * (-rate * t).exp() * (omega * t).cos())
            .collect();
        let series = TimeSeries::new(times, values, "sig").unwrap();
        let env = extract_envelope(&series).unwrap();
        for (&t, &v) in env.times().iter().zip(env.values()) {
            let want = amp * (-rate * t).exp();
            prop_assert!((v / want - 1.0).abs() < 0.01);
        }
    }
}
