//! Protocol outcomes against a dense-matrix oracle. Writing the target as
//! the matrix `M[a][b]`, Eve's outcome `σ` leaves Alice and Bob with
//! `M · C_σ† · M`, where `C_σ[a][b] = U[(a, b), σ]`.

use mbswap::protocol::{enumerate_branches, run_network, SwapConfig};
use mbswap::schmidt::{predicted_fidelity_network, predicted_postselection_prob, schmidt_spectrum};
use mbswap::{QubitPartition, StateVector, UnitaryMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn deposit(local: usize, qubits: &[usize]) -> usize {
    qubits.iter().enumerate().map(|(j, &q)| (local >> j & 1) << q).sum()
}

struct Layout {
    set_a: Vec<usize>,
    set_b: Vec<usize>,
}

impl Layout {
    fn new(set_a: Vec<usize>, n: usize) -> Self {
        let set_b = (0..n).filter(|q| !set_a.contains(q)).collect();
        Self { set_a, set_b }
    }

    fn index(&self, a: usize, b: usize) -> usize {
        deposit(a, &self.set_a) | deposit(b, &self.set_b)
    }

    fn dims(&self) -> (usize, usize) {
        (1 << self.set_a.len(), 1 << self.set_b.len())
    }

    /// `v[(a, b)]` as a `d_A × d_B` matrix.
    fn matrix(&self, v: &[Complex64]) -> DMatrix<Complex64> {
        let (da, db) = self.dims();
        DMatrix::from_fn(da, db, |a, b| v[self.index(a, b)])
    }

    fn partition(&self) -> QubitPartition {
        QubitPartition::from_sets(&self.set_a, &self.set_b).unwrap()
    }
}

/// Unitary from the QR factor of a complex Gaussian matrix.
fn random_unitary(n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 1 << n;
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    g.qr().q()
}

/// |⟨x|y⟩| for a normalized oracle matrix against a simulated state.
fn overlap(layout: &Layout, oracle: &DMatrix<Complex64>, state: &StateVector) -> f64 {
    let sim = layout.matrix(state.amplitudes());
    oracle.iter().zip(sim.iter()).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm()
}

fn check_single_node(layout: &Layout, seed: u64) {
    let n = layout.set_a.len() + layout.set_b.len();
    let u = random_unitary(n, seed);
    let target = StateVector::from_amplitudes(u.column(0).iter().copied().collect()).unwrap();
    let m = layout.matrix(target.amplitudes());
    let cfg = SwapConfig::new(target, layout.partition()).with_generator(UnitaryMatrix::new(u.clone()).unwrap());

    let branches = enumerate_branches(&cfg).unwrap();
    let mut total = 0.0;
    for b in &branches {
        let c = layout.matrix(u.column(b.path[0]).as_slice());
        let shared = &m * c.adjoint() * &m;
        let p = shared.norm_squared();
        assert!((b.probability - p).abs() < 1e-10, "outcome {}: {} vs {p}", b.path[0], b.probability);
        assert!((overlap(layout, &shared.unscale(p.sqrt()), &b.shared_state) - 1.0).abs() < 1e-9);
        assert_eq!(b.accepted, b.path[0] == 0);
        total += b.probability;
    }
    assert!((total - 1.0).abs() < 1e-10);

    // outcomes missing from the enumeration must be impossible
    let seen: Vec<usize> = branches.iter().map(|b| b.path[0]).collect();
    for sigma in (0..1 << n).filter(|s| !seen.contains(s)) {
        let c = layout.matrix(u.column(sigma).as_slice());
        assert!((&m * c.adjoint() * &m).norm_squared() < 1e-12);
    }
}

fn check_network(layout: &Layout, target: &StateVector, k: usize) {
    let m = layout.matrix(target.amplitudes());
    let gram = m.adjoint() * &m;
    let r = run_network(&SwapConfig::new(target.clone(), layout.partition()).with_nodes(k)).unwrap();
    let mut x = m.clone();
    for rec in &r.records {
        let next = &x * &gram;
        let p = next.norm_squared();
        assert!((rec.probability - p).abs() < 1e-10, "node {}: {} vs {p}", rec.node, rec.probability);
        x = next.unscale(p.sqrt());
    }
    assert!((overlap(layout, &x, &r.shared_state) - 1.0).abs() < 1e-9);
    let fidelity = m.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm();
    assert!((r.fidelity_to_target - fidelity).abs() < 1e-9);
}

#[test]
fn single_node_matches_oracle_contiguous() {
    check_single_node(&Layout::new(vec![0], 2), 1);
    check_single_node(&Layout::new(vec![0, 1], 4), 2);
    check_single_node(&Layout::new(vec![0], 3), 3);
}

#[test]
fn single_node_matches_oracle_interleaved() {
    check_single_node(&Layout::new(vec![1, 3], 4), 4);
    check_single_node(&Layout::new(vec![2], 3), 5);
    check_single_node(&Layout::new(vec![0, 2, 3], 5), 6);
}

#[test]
fn network_matches_oracle() {
    let layout = Layout::new(vec![0, 2], 4);
    let target = StateVector::from_amplitudes(random_unitary(4, 9).column(0).iter().copied().collect()).unwrap();
    for k in 1..=3 {
        check_network(&layout, &target, k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn single_node_oracle_prop(n in 2usize..=4, mask in 1usize..15, seed in any::<u64>()) {
        let set_a: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 1).collect();
        prop_assume!(!set_a.is_empty() && set_a.len() < n);
        check_single_node(&Layout::new(set_a, n), seed);
    }

    #[test]
    fn network_oracle_prop(n in 2usize..=4, k in 1usize..=3, seed in any::<u64>()) {
        let layout = Layout::new((0..n / 2).collect(), n);
        let target = StateVector::from_amplitudes(random_unitary(n, seed).column(0).iter().copied().collect()).unwrap();
        check_network(&layout, &target, k);
    }

    #[test]
    fn network_matches_closed_forms(n in 2usize..=5, k in 1usize..=3, seed in any::<u64>()) {
        let layout = Layout::new((0..n / 2).collect(), n);
        let target = StateVector::from_amplitudes(random_unitary(n, seed).column(0).iter().copied().collect()).unwrap();
        let lambda = schmidt_spectrum(&target, &layout.partition()).unwrap();
        let r = run_network(&SwapConfig::new(target, layout.partition()).with_nodes(k)).unwrap();
        let f = predicted_fidelity_network(&lambda, k).unwrap();
        prop_assert!((r.fidelity_to_target - f).abs() < 1e-9);
        let success: f64 = (1..=k).map(|j| predicted_postselection_prob(&lambda, j).unwrap()).product();
        prop_assert!((r.success_probability - success).abs() < 1e-9);
    }
}
