//! Unitaries used by the protocol: completion of a target column to a full
//! generator, the basis reordering onto Eve's register, the flattened
//! generator of the target-like family and Alice's feedforward corrections.
//!
//! # Eve's register layout
//!
//! Eve holds Bob's qubits of the first copy and Alice's qubits of the second
//! copy. On her `n` qubits, local qubit `e < n_B` carries target qubit
//! `set_b[e]` and local qubit `n_B + k` carries target qubit `set_a[k]`. An
//! `n`-qubit operator written in the target layout is moved onto Eve's layout
//! with [`reorder_for_eve`].

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::schmidt::SchmidtDecomposition;
use crate::state::{permute_index, QubitPartition, StateVector, UnitaryMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest register for which a dense generator is synthesized.
pub const MAX_SYNTH_QUBITS: usize = 12;

/// Builds a unitary whose column `position` equals `vector` for every listed
/// pair. The listed vectors must be orthonormal.
///
/// The unspecified columns are filled, in ascending position order, with the
/// trailing columns of the Householder QR factor of the specified block, so
/// the completion is deterministic.
pub fn complete_unitary(dim: usize, columns: &[(usize, Vec<Complex64>)]) -> Result<UnitaryMatrix> {
    if !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch {
            expected: dim.next_power_of_two(),
            actual: dim,
        });
    }
    if dim > 1 << MAX_SYNTH_QUBITS {
        return Err(Error::SizeOverflow {
            requested: dim.trailing_zeros() as usize,
            limit: MAX_SYNTH_QUBITS,
        });
    }
    let r = columns.len();
    let mut taken = vec![false; dim];
    for (position, vector) in columns {
        if vector.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: vector.len(),
            });
        }
        if *position >= dim || taken[*position] {
            return Err(Error::InvalidState(format!("column position {position} invalid or repeated")));
        }
        taken[*position] = true;
    }
    for (i, (_, u)) in columns.iter().enumerate() {
        for (j, (_, v)) in columns.iter().enumerate().take(i + 1) {
            let ip: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            if (ip - expected).norm() > 1e-9 {
                return Err(Error::InvalidState(format!(
                    "specified columns {i} and {j} are not orthonormal (overlap {ip})"
                )));
            }
        }
    }

    // Householder reflections H_k = I - 2 v_k v_k† reducing the specified
    // block to upper-triangular form.
    let mut block: Vec<Vec<Complex64>> = columns.iter().map(|(_, v)| v.clone()).collect();
    let mut reflectors: Vec<Vec<Complex64>> = Vec::with_capacity(r);
    for k in 0..r {
        let x = &block[k][k..];
        let norm = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { Complex64::new(1.0, 0.0) };
        let mut v = x.to_vec();
        v[0] += phase * norm;
        let vnorm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut v {
            *a /= vnorm;
        }
        for col in block.iter_mut().skip(k) {
            reflect(&v, &mut col[k..]);
        }
        reflectors.push(v);
    }

    let mut matrix = DMatrix::zeros(dim, dim);
    for (position, vector) in columns {
        matrix.set_column(*position, &nalgebra::DVector::from_column_slice(vector));
    }
    let mut next = r;
    for position in (0..dim).filter(|p| !taken[*p]) {
        let mut e = vec![ZERO; dim];
        e[next] = Complex64::new(1.0, 0.0);
        for (k, v) in reflectors.iter().enumerate().rev() {
            reflect(v, &mut e[k..]);
        }
        matrix.set_column(position, &nalgebra::DVector::from_vec(e));
        next += 1;
    }
    UnitaryMatrix::new(matrix)
}

fn reflect(v: &[Complex64], x: &mut [Complex64]) {
    let dot: Complex64 = v.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= vi * dot * 2.0;
    }
}

/// A generator `U` with `U|σ₀⟩ = |target⟩`.
pub fn complete_unitary_from_column(target: &StateVector, sigma0: usize) -> Result<UnitaryMatrix> {
    if sigma0 >= target.dim() {
        return Err(Error::InvalidState(format!(
            "sigma0 {sigma0} out of range for {} qubits",
            target.num_qubits()
        )));
    }
    complete_unitary(target.dim(), &[(sigma0, target.amplitudes().to_vec())])
}

/// `perm[q]` is Eve's local qubit carrying target qubit `q`.
pub fn eve_permutation(partition: &QubitPartition) -> Vec<usize> {
    let mut perm = vec![0; partition.num_qubits()];
    for (e, &q) in partition.set_b().iter().enumerate() {
        perm[q] = e;
    }
    for (k, &q) in partition.set_a().iter().enumerate() {
        perm[q] = partition.n_b() + k;
    }
    perm
}

/// Target-layout basis index to Eve-layout basis index.
pub fn to_eve_index(index: usize, partition: &QubitPartition) -> usize {
    permute_index(index, &eve_permutation(partition))
}

/// Eve-layout basis index to target-layout basis index.
pub fn from_eve_index(index: usize, partition: &QubitPartition) -> usize {
    let (b, a) = (
        index & ((1 << partition.n_b()) - 1),
        index >> partition.n_b(),
    );
    partition.join_index(a, b)
}

fn check_register(u: &UnitaryMatrix, partition: &QubitPartition) -> Result<()> {
    if u.num_qubits() != partition.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: partition.num_qubits(),
            actual: u.num_qubits(),
        });
    }
    Ok(())
}

/// `P u P†` where `P` relabels target qubits onto Eve's layout.
pub fn reorder_for_eve(u: &UnitaryMatrix, partition: &QubitPartition) -> Result<UnitaryMatrix> {
    check_register(u, partition)?;
    let perm = eve_permutation(partition);
    let map: Vec<usize> = (0..u.dim()).map(|i| permute_index(i, &perm)).collect();
    let m = u.matrix();
    let mut out = DMatrix::zeros(u.dim(), u.dim());
    for c in 0..u.dim() {
        for r in 0..u.dim() {
            out[(map[r], map[c])] = m[(r, c)];
        }
    }
    UnitaryMatrix::from_matrix_unchecked(out)
}

/// Inverse of [`reorder_for_eve`].
pub fn reorder_from_eve(u: &UnitaryMatrix, partition: &QubitPartition) -> Result<UnitaryMatrix> {
    check_register(u, partition)?;
    let perm = eve_permutation(partition);
    let map: Vec<usize> = (0..u.dim()).map(|i| permute_index(i, &perm)).collect();
    let m = u.matrix();
    UnitaryMatrix::from_matrix_unchecked(DMatrix::from_fn(u.dim(), u.dim(), |r, c| {
        m[(map[r], map[c])]
    }))
}

/// The `d²` target-like states
/// `|ψ_{m,l}⟩ = Σⱼ ω^{jl}/√d |aⱼ⟩|b_{j+m}⟩`, `ω = e^{2πi/d}`, together with
/// the computational basis states they are generated from.
#[derive(Clone, Debug)]
pub struct TargetLikeFamily {
    pub base: SchmidtDecomposition,
    pub partition: QubitPartition,
    /// Indexed by `m * d + l`.
    pub states: Vec<StateVector>,
    /// Target-layout basis index `σ_{m,l}`, indexed by `m * d + l`.
    pub sigma_map: Vec<usize>,
}

impl TargetLikeFamily {
    pub fn rank(&self) -> usize {
        self.base.rank()
    }

    pub fn state(&self, m: usize, l: usize) -> &StateVector {
        let d = self.rank();
        &self.states[(m % d) * d + l % d]
    }

    pub fn sigma(&self, m: usize, l: usize) -> usize {
        let d = self.rank();
        self.sigma_map[(m % d) * d + l % d]
    }

    /// `(m, l)` labels of a target-layout basis index, if it is some `σ_{m,l}`.
    pub fn decode(&self, sigma: usize) -> Option<(usize, usize)> {
        let d = self.rank();
        self.sigma_map
            .iter()
            .position(|&s| s == sigma)
            .map(|t| (t / d, t % d))
    }
}

fn root_of_unity(d: usize, power: i64) -> Complex64 {
    let p = power.rem_euclid(d as i64) as f64;
    Complex64::from_polar(1.0, TAU * p / d as f64)
}

pub fn build_target_like_family(
    dec: &SchmidtDecomposition,
    partition: &QubitPartition,
    sigma0: usize,
) -> Result<TargetLikeFamily> {
    let d = dec.rank();
    let n = partition.num_qubits();
    if sigma0 >= 1 << n {
        return Err(Error::InvalidState(format!("sigma0 {sigma0} out of range")));
    }
    let dim_a = 1 << partition.n_a();
    let dim_b = 1 << partition.n_b();
    if dec.vectors_a.iter().any(|v| v.dim() != dim_a) || dec.vectors_b.iter().any(|v| v.dim() != dim_b) {
        return Err(Error::DimensionMismatch {
            expected: dim_a,
            actual: dec.vectors_a[0].dim(),
        });
    }
    let weight = 1.0 / (d as f64).sqrt();
    let mut states = Vec::with_capacity(d * d);
    for m in 0..d {
        for l in 0..d {
            let mut amps = vec![ZERO; 1 << n];
            for j in 0..d {
                let coeff = root_of_unity(d, (j * l) as i64) * weight;
                let va = &dec.vectors_a[j];
                let vb = &dec.vectors_b[(j + m) % d];
                for b in 0..dim_b {
                    let wb = vb.amplitude(b) * coeff;
                    if wb.norm_sqr() == 0.0 {
                        continue;
                    }
                    for a in 0..dim_a {
                        amps[partition.join_index(a, b)] += va.amplitude(a) * wb;
                    }
                }
            }
            states.push(StateVector::from_amplitudes(amps)?);
        }
    }
    let sigma_map = std::iter::once(sigma0)
        .chain((0..1usize << n).filter(|&s| s != sigma0))
        .take(d * d)
        .collect();
    Ok(TargetLikeFamily {
        base: dec.clone(),
        partition: partition.clone(),
        states,
        sigma_map,
    })
}

/// `Ũ` with `Ũ|σ_{m,l}⟩ = |ψ_{m,l}⟩` for every family member.
pub fn build_flattened_unitary(family: &TargetLikeFamily) -> Result<UnitaryMatrix> {
    let dim = 1 << family.partition.num_qubits();
    let columns: Vec<(usize, Vec<Complex64>)> = family
        .sigma_map
        .iter()
        .zip(&family.states)
        .map(|(&s, psi)| (s, psi.amplitudes().to_vec()))
        .collect();
    complete_unitary(dim, &columns)
}

/// Alice's correction for accumulated labels `(M, L)`:
/// `Σⱼ ω^{jL} |a_{j−M}⟩⟨aⱼ|` on the Schmidt subspace, identity on its
/// complement. Acts on `n_A` qubits, local bit `k` = `set_a[k]`.
pub fn correction_unitary(family: &TargetLikeFamily, m_total: usize, l_total: usize) -> Result<UnitaryMatrix> {
    let d = family.rank();
    let dim_a = 1 << family.partition.n_a();
    let vectors = &family.base.vectors_a;
    let column = |v: &StateVector| nalgebra::DVector::from_column_slice(v.amplitudes());
    let mut matrix = DMatrix::<Complex64>::identity(dim_a, dim_a);
    for j in 0..d {
        let aj = column(&vectors[j]);
        let target = column(&vectors[(j + d - m_total % d) % d]);
        let phase = root_of_unity(d, (j * (l_total % d)) as i64);
        matrix -= &aj * aj.adjoint();
        matrix += target * aj.adjoint() * phase;
    }
    let u = UnitaryMatrix::from_matrix_unchecked(matrix)?;
    let deviation = u.unitarity_deviation();
    if deviation > 1e-9 {
        return Err(Error::NotUnitary(deviation));
    }
    Ok(u)
}

/// True when `coeffs` is flat over its support within `tol`.
pub fn is_uniform_spectrum(coeffs: &[f64], tol: f64) -> bool {
    let support: Vec<f64> = coeffs.iter().copied().filter(|&c| c > 0.0).collect();
    let mean = 1.0 / support.len() as f64;
    support.iter().all(|c| (c - mean).abs() <= tol)
}

/// Max |⟨ψ|φ⟩ − δ| over a list of states.
pub fn orthonormality_defect(states: &[StateVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let ip = a.inner_product(b).map(|z| z.norm()).unwrap_or(f64::INFINITY);
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((ip - expected).abs());
        }
    }
    worst
}
