//! Library-versus-dense-reference equivalence. Every core operation is
//! recomputed through explicit full matrices and compared at tight
//! tolerance on small chains.

mod common;

use brickwall::circuit::{CircuitSpec, Evolution};
use brickwall::entanglement::EntanglementSpectrum;
use brickwall::gate::ChargeGate;
use brickwall::rng::{stream, StreamDomain};
use brickwall::state::{SignPattern, Statevector};
use common::*;
use num_complex::Complex64;

const TOL: f64 = 1e-12;

fn lib_signs(seed: u64, len: usize) -> SignPattern {
    SignPattern::random(len, &mut stream(seed, StreamDomain::InitialSigns, 0))
}

#[test]
fn jacobi_recovers_planted_eigenvalues() {
    // H = U diag(d) U' for a random unitary U built by Gram-Schmidt
    let mut rng = TestRng(0x5eed);
    let n = 8;
    let planted = [3.0, 2.25, 1.5, 1.0, 0.5, 0.25, 0.1, 0.0];
    let mut u = DMat::zeros(n);
    for c in 0..n {
        let mut col: Vec<Complex64> = (0..n).map(|_| rng.complex_gaussian()).collect();
        for prev in 0..c {
            let proj: Complex64 = (0..n).map(|r| u.get(r, prev).conj() * col[r]).sum();
            for (r, x) in col.iter_mut().enumerate() {
                *x -= proj * u.get(r, prev);
            }
        }
        let norm = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for (r, x) in col.iter().enumerate() {
            u.set(r, c, x / norm);
        }
    }
    let mut h = DMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = ZERO;
            for (k, d) in planted.iter().enumerate() {
                acc += u.get(i, k) * Complex64::new(*d, 0.0) * u.get(j, k).conj();
            }
            h.set(i, j, acc);
        }
    }
    let eigs = jacobi_eigenvalues(&h);
    for (got, want) in eigs.iter().zip(planted.iter()) {
        assert!((got - want).abs() < 1e-10, "eig {got} vs {want}");
    }
}

#[test]
fn product_states_match_kron_reference() {
    for seed in [1u64, 2, 3] {
        let signs = lib_signs(seed, 6);
        let lib = Statevector::product_x(&signs).unwrap();
        let reference = product_state_reference(&signs, &[]);
        assert!(max_abs_diff(lib.amplitudes(), &reference) < TOL);

        for m in 1..=3usize {
            let block: Vec<usize> = (3 - m + 1..=3 + m).collect();
            let lib = Statevector::zero_block(&signs, m).unwrap();
            let reference = product_state_reference(&signs, &block);
            assert!(max_abs_diff(lib.amplitudes(), &reference) < TOL, "m={m}");
        }
    }
}

#[test]
fn gate_application_matches_embedded_matrix() {
    let num_spins = 6;
    let mut rng = TestRng(77);
    for bond in 1..num_spins {
        let gate = ChargeGate::haar(&mut stream(5, StreamDomain::Gate, bond as u64));
        let amps = random_state(&mut rng, num_spins);
        let full = embed_gate(&gate_matrix(&gate), bond, num_spins);
        let expected = full.matvec(&amps);
        let mut state = Statevector::from_amplitudes(num_spins, amps).unwrap();
        state.apply_gate(&gate, bond).unwrap();
        assert!(
            max_abs_diff(state.amplitudes(), &expected) < TOL,
            "bond {bond}"
        );
    }
}

#[test]
fn embedded_gates_are_unitary_and_charge_conserving() {
    let gate = ChargeGate::haar(&mut stream(9, StreamDomain::Gate, 1));
    let full = embed_gate(&gate_matrix(&gate), 2, 4);
    let product = full.dagger().mul(&full);
    assert!(product.max_abs_diff(&DMat::identity(16)) < TOL);
    // <row| U |col> vanishes unless popcounts agree
    for row in 0..16usize {
        for col in 0..16usize {
            if row.count_ones() != col.count_ones() {
                assert!(full.get(row, col).norm() < TOL);
            }
        }
    }
}

#[test]
fn evolution_matches_matrix_chain() {
    for num_spins in [6usize, 8] {
        let spec = CircuitSpec::new(num_spins, 3, 21).unwrap();
        let signs = lib_signs(4, num_spins);
        for evolution in [Evolution::Unitary, Evolution::CutReplaced] {
            let full = evolution_matrix(&spec, 3, evolution);
            let expected = full.matvec(&product_state_reference(&signs, &[]));
            let mut state = Statevector::product_x(&signs).unwrap();
            spec.evolve(&mut state, 0, 3, evolution).unwrap();
            let diff = max_abs_diff(state.amplitudes(), &expected);
            assert!(diff < 1e-11, "2n={num_spins} {evolution:?}: diff {diff}");
        }
    }
}

#[test]
fn layer_inverse_matches_daggered_matrix() {
    let spec = CircuitSpec::new(6, 2, 55).unwrap();
    let mut rng = TestRng(13);
    let amps = random_state(&mut rng, 6);
    let inverse = layer_matrix(&spec, 1, Evolution::Unitary).dagger();
    let expected = inverse.matvec(&amps);
    let mut state = Statevector::from_amplitudes(6, amps).unwrap();
    spec.apply_layer_inverse(&mut state, 1).unwrap();
    assert!(max_abs_diff(state.amplitudes(), &expected) < TOL);
}

#[test]
fn schmidt_spectrum_matches_density_matrix_eigenvalues() {
    let spec = CircuitSpec::new(6, 4, 3).unwrap();
    let signs = lib_signs(8, 6);
    let mut state = Statevector::product_x(&signs).unwrap();
    spec.evolve(&mut state, 0, 4, Evolution::Unitary).unwrap();
    for cut in [2usize, 3] {
        let spectrum = EntanglementSpectrum::from_state(&state, cut).unwrap();
        let rho = reduced_density(state.amplitudes(), 6, cut);
        let eigs = jacobi_eigenvalues(&rho);
        for (i, c) in spectrum.coefficients().iter().enumerate() {
            assert!(
                (c * c - eigs[i]).abs() < 1e-10,
                "cut {cut} index {i}: {} vs {}",
                c * c,
                eigs[i]
            );
        }
        // entropies recomputed directly from the eigenvalues
        let kept: Vec<f64> = eigs.iter().copied().filter(|p| *p > 1e-24).collect();
        let vn_ref: f64 = -kept.iter().map(|p| p * p.ln()).sum::<f64>();
        let r2_ref = -kept.iter().map(|p| p * p).sum::<f64>().ln();
        let rinf_ref = -kept[0].ln();
        assert!((spectrum.von_neumann() - vn_ref).abs() < 1e-9);
        assert!((spectrum.renyi(2.0).unwrap() - r2_ref).abs() < 1e-9);
        assert!((spectrum.min_entropy() - rinf_ref).abs() < 1e-9);
    }
}

#[test]
fn inner_products_and_norms_match_direct_sums() {
    let mut rng = TestRng(99);
    let a = random_state(&mut rng, 6);
    let b = random_state(&mut rng, 6);
    let direct: Complex64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
    let sa = Statevector::from_amplitudes(6, a.clone()).unwrap();
    let sb = Statevector::from_amplitudes(6, b).unwrap();
    assert!((sa.inner(&sb).unwrap() - direct).norm() < TOL);
    let norm_direct: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    assert!((sa.norm_sqr() - norm_direct).abs() < TOL);
}

#[test]
fn site_observables_match_dense_diagonals() {
    let mut rng = TestRng(123);
    let amps = random_state(&mut rng, 6);
    let state = Statevector::from_amplitudes(6, amps.clone()).unwrap();
    for site in 1..=6usize {
        let expected: f64 = amps
            .iter()
            .enumerate()
            .map(|(idx, x)| {
                let z = if idx >> (site - 1) & 1 == 0 {
                    1.0
                } else {
                    -1.0
                };
                z * x.norm_sqr()
            })
            .sum();
        assert!((state.sigma_z(site).unwrap() - expected).abs() < TOL);
        assert!((state.charge_profile()[site - 1] - expected).abs() < TOL);
    }
}

#[test]
fn projection_matches_dense_projector() {
    let mut rng = TestRng(321);
    let amps = random_state(&mut rng, 6);
    let state = Statevector::from_amplitudes(6, amps.clone()).unwrap();
    let sites = [3usize, 4];
    let mask: usize = sites.iter().map(|s| 1usize << (s - 1)).sum();
    let expected: Vec<Complex64> = amps
        .iter()
        .enumerate()
        .map(|(idx, x)| if idx & mask == 0 { *x } else { ZERO })
        .collect();
    let weight_ref: f64 = expected.iter().map(|x| x.norm_sqr()).sum();
    let (weight, projected) = state.project_zeros(&sites).unwrap();
    assert!((weight - weight_ref).abs() < TOL);
    assert!(max_abs_diff(projected.amplitudes(), &expected) < TOL);
    assert!((state.zero_weight(&sites).unwrap() - weight_ref).abs() < TOL);
}

#[test]
fn overlap_chain_quantities_match_matrix_route() {
    // one full proof-style computation at 2n=6, m=1, t=3, all through
    // dense matrices
    let num_spins = 6;
    let (m, t) = (1usize, 3usize);
    let spec = CircuitSpec::new(num_spins, t, 17).unwrap();
    let signs = lib_signs(2, num_spins);
    let trace = brickwall::proof::run_proof_trace(
        &spec,
        &signs,
        m,
        t,
        2,
        &[brickwall::entanglement::Alpha::Finite(2.0)],
    )
    .unwrap();

    let u = evolution_matrix(&spec, t, Evolution::Unitary);
    let v = evolution_matrix(&spec, t, Evolution::CutReplaced);
    let psi0 = product_state_reference(&signs, &[3, 4]);
    let psi = product_state_reference(&signs, &[]);
    let u_psi = u.matvec(&psi);
    let u_psi0 = u.matvec(&psi0);
    let v_psi0 = v.matvec(&psi0);

    let delta_ref: f64 = u_psi0
        .iter()
        .zip(&v_psi0)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let dot = |a: &[Complex64], b: &[Complex64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
            .norm()
    };
    assert!((trace.delta_norm - delta_ref).abs() < 1e-11);
    assert!((trace.overlap_u - dot(&u_psi0, &u_psi)).abs() < 1e-11);
    assert!((trace.overlap_v - dot(&v_psi0, &u_psi)).abs() < 1e-11);
    assert!((trace.overlap_u - 0.5).abs() < 1e-12);

    let rho = reduced_density(&u_psi, num_spins, 3);
    let eigs = jacobi_eigenvalues(&rho);
    assert!((trace.lambda1_measured - eigs[0].max(0.0).sqrt()).abs() < 1e-10);
}
