//! Pure-state linear algebra: amplitude storage, gate application, qubit
//! permutation, projective measurement and overlaps.
//!
//! Basis-index convention used everywhere in this crate: qubit `q` is bit `q`
//! of the amplitude index, so qubit 0 is the least significant bit. Local
//! operators follow the same rule: bit `j` of a matrix row/column index refers
//! to the `j`-th entry of the target list it is applied to.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Allowed deviation of Σ|a|² from one.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Allowed max-entry deviation of U†U from the identity.
pub const UNITARY_TOLERANCE: f64 = 1e-10;
/// Branches below this probability are treated as impossible.
pub const IMPOSSIBLE_OUTCOME: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A normalized pure state on `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros computational basis state.
    pub fn zero(num_qubits: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Self {
            num_qubits,
            amplitudes,
        }
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if index >= 1 << num_qubits {
            return Err(Error::InvalidState(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[index] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::InvalidState("zero or non-finite norm".into()));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub(crate) fn from_raw(num_qubits: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << num_qubits);
        Self {
            num_qubits,
            amplitudes,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub(crate) fn renormalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        for a in &mut self.amplitudes {
            *a /= norm;
        }
    }

    /// `self ⊗ other`, with the qubits of `self` on the low indices.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for b in &other.amplitudes {
            amplitudes.extend(self.amplitudes.iter().map(|a| a * b));
        }
        StateVector::from_raw(self.num_qubits + other.num_qubits, amplitudes)
    }

    /// Applies `u` to the listed qubits; bit `j` of the local index of `u`
    /// refers to `targets[j]`.
    pub fn apply_unitary(&self, u: &UnitaryMatrix, targets: &[usize]) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_unitary_in_place(u, targets)?;
        Ok(out)
    }

    pub fn apply_unitary_in_place(&mut self, u: &UnitaryMatrix, targets: &[usize]) -> Result<()> {
        if u.num_qubits() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: u.num_qubits(),
                actual: targets.len(),
            });
        }
        validate_qubits(targets, self.num_qubits)?;
        apply_local(&mut self.amplitudes, u.matrix(), targets);
        Ok(())
    }

    /// Relabels qubits: old qubit `q` becomes qubit `perm[q]`.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<StateVector> {
        validate_permutation(perm, self.num_qubits)?;
        let mut amplitudes = vec![ZERO; self.dim()];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            amplitudes[permute_index(index, perm)] = *amp;
        }
        Ok(StateVector::from_raw(self.num_qubits, amplitudes))
    }

    /// Marginal Born distribution of the listed qubits; entry `x` is the
    /// probability that qubit `qubits[j]` reads bit `j` of `x`.
    pub fn marginal_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        validate_qubits(qubits, self.num_qubits)?;
        let mut probs = vec![0.0; 1 << qubits.len()];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            probs[extract_bits(index, qubits)] += amp.norm_sqr();
        }
        Ok(probs)
    }

    /// Projects the listed qubits onto `outcome` and factors them out.
    ///
    /// The returned state lives on the remaining qubits, kept in ascending
    /// order of their original indices. Fails with
    /// [`Error::ImpossibleOutcome`] when the branch probability is below
    /// [`IMPOSSIBLE_OUTCOME`].
    pub fn measure_and_project(
        &self,
        qubits: &[usize],
        outcome: usize,
    ) -> Result<(StateVector, f64)> {
        validate_qubits(qubits, self.num_qubits)?;
        if outcome >= 1 << qubits.len() {
            return Err(Error::InvalidState(format!(
                "outcome {outcome} has more than {} bits",
                qubits.len()
            )));
        }
        let mut branch = self.project_unnormalized(qubits, outcome);
        let probability = branch.norm_sqr();
        if probability < IMPOSSIBLE_OUTCOME {
            return Err(Error::ImpossibleOutcome {
                outcome,
                probability,
            });
        }
        branch.renormalize();
        Ok((branch, probability))
    }

    fn project_unnormalized(&self, qubits: &[usize], outcome: usize) -> StateVector {
        let mut sorted = qubits.to_vec();
        sorted.sort_unstable();
        let offset = deposit_bits(outcome, qubits);
        let remaining = self.num_qubits - qubits.len();
        let amplitudes = (0..1usize << remaining)
            .map(|rest| self.amplitudes[insert_zero_bits(rest, &sorted) | offset])
            .collect();
        StateVector::from_raw(remaining, amplitudes)
    }

    /// Every possible outcome of measuring `qubits` together with its
    /// probability and normalized post-measurement state (same layout as
    /// [`measure_and_project`](Self::measure_and_project)). Outcomes below
    /// [`IMPOSSIBLE_OUTCOME`] are omitted; the rest come in ascending order.
    pub fn measurement_branches(&self, qubits: &[usize]) -> Result<Vec<(usize, f64, StateVector)>> {
        validate_qubits(qubits, self.num_qubits)?;
        let remaining = self.num_qubits - qubits.len();
        let mut others: Vec<usize> = (0..self.num_qubits).filter(|q| !qubits.contains(q)).collect();
        others.sort_unstable();
        let rest_dim = 1usize << remaining;
        let mut rows = vec![ZERO; self.dim()];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            let outcome = extract_bits(index, qubits);
            let rest = extract_bits(index, &others);
            rows[outcome * rest_dim + rest] = *amp;
        }
        let mut branches = Vec::new();
        for (outcome, row) in rows.chunks(rest_dim).enumerate() {
            let p: f64 = row.iter().map(|a| a.norm_sqr()).sum();
            if p < IMPOSSIBLE_OUTCOME {
                continue;
            }
            let mut post = StateVector::from_raw(remaining, row.to_vec());
            post.renormalize();
            branches.push((outcome, p, post));
        }
        Ok(branches)
    }

    /// Samples a measurement of `qubits` from the Born rule with a seeded
    /// generator; deterministic for a given seed.
    pub fn sample_measurement(
        &self,
        qubits: &[usize],
        seed: u64,
    ) -> Result<(MeasurementRecord, StateVector)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_measurement_with(qubits, &mut rng)
    }

    pub fn sample_measurement_with<R: Rng + ?Sized>(
        &self,
        qubits: &[usize],
        rng: &mut R,
    ) -> Result<(MeasurementRecord, StateVector)> {
        let probs = self.marginal_probabilities(qubits)?;
        let outcome = sample_index(&probs, rng);
        let (post, probability) = self.measure_and_project(qubits, outcome)?;
        Ok((
            MeasurementRecord {
                bitstring: outcome,
                probability,
                measured_qubits: qubits.to_vec(),
            },
            post,
        ))
    }

    /// ⟨self|other⟩.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|other⟩|, the overlap used as the fidelity figure throughout.
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner_product(other)?.norm())
    }
}

/// Draws an index from an (approximately normalized) distribution using one
/// uniform variate.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = i;
        if u < p {
            return i;
        }
        u -= p;
    }
    last
}

/// Outcome of a sampled projective measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    /// Bit `j` is the reading of `measured_qubits[j]`.
    pub bitstring: usize,
    pub probability: f64,
    pub measured_qubits: Vec<usize>,
}

/// Split of an `n`-qubit register between Alice (`set_a`) and Bob (`set_b`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitPartition {
    set_a: Vec<usize>,
    set_b: Vec<usize>,
}

impl QubitPartition {
    /// Alice holds `set_a`, Bob the complement in `0..num_qubits`.
    pub fn new(set_a: &[usize], num_qubits: usize) -> Result<Self> {
        let mut a = set_a.to_vec();
        a.sort_unstable();
        let b: Vec<usize> = (0..num_qubits).filter(|q| !a.contains(q)).collect();
        Self::from_sets(&a, &b)
    }

    pub fn from_sets(set_a: &[usize], set_b: &[usize]) -> Result<Self> {
        let mut a = set_a.to_vec();
        let mut b = set_b.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidPartition("both sides need at least one qubit".into()));
        }
        let n = a.len() + b.len();
        let mut seen = vec![false; n];
        for &q in a.iter().chain(&b) {
            if q >= n {
                return Err(Error::InvalidPartition(format!(
                    "qubit {q} outside 0..{n}"
                )));
            }
            if seen[q] {
                return Err(Error::InvalidPartition(format!("qubit {q} assigned twice")));
            }
            seen[q] = true;
        }
        Ok(Self { set_a: a, set_b: b })
    }

    /// Alice holds qubits `0..n_a`, Bob `n_a..n_a + n_b`.
    pub fn contiguous(n_a: usize, n_b: usize) -> Result<Self> {
        let a: Vec<usize> = (0..n_a).collect();
        let b: Vec<usize> = (n_a..n_a + n_b).collect();
        Self::from_sets(&a, &b)
    }

    pub fn set_a(&self) -> &[usize] {
        &self.set_a
    }

    pub fn set_b(&self) -> &[usize] {
        &self.set_b
    }

    pub fn n_a(&self) -> usize {
        self.set_a.len()
    }

    pub fn n_b(&self) -> usize {
        self.set_b.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.set_a.len() + self.set_b.len()
    }

    /// Global index of the product of local basis states `a` (over `set_a`)
    /// and `b` (over `set_b`).
    pub fn join_index(&self, a: usize, b: usize) -> usize {
        deposit_bits(a, &self.set_a) | deposit_bits(b, &self.set_b)
    }

    /// Inverse of [`join_index`](Self::join_index).
    pub fn split_index(&self, index: usize) -> (usize, usize) {
        (extract_bits(index, &self.set_a), extract_bits(index, &self.set_b))
    }
}

/// A square unitary matrix acting on `log2(dim)` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    num_qubits: usize,
    matrix: DMatrix<Complex64>,
}

impl UnitaryMatrix {
    /// Wraps `matrix` after checking its shape and unitarity.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let u = Self::from_matrix_unchecked(matrix)?;
        let deviation = u.unitarity_deviation();
        if deviation > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary(deviation));
        }
        Ok(u)
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<Complex64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols || !rows.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: rows.next_power_of_two(),
                actual: cols,
            });
        }
        Ok(Self {
            num_qubits: rows.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn identity(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            matrix: DMatrix::identity(1 << num_qubits, 1 << num_qubits),
        }
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_rows_unchecked(2, &[h, h, h, -h].map(|x| Complex64::new(x, 0.0)))
    }

    pub fn pauli_x() -> Self {
        Self::from_rows_unchecked(2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        Self::from_rows_unchecked(2, &[ZERO, -i, i, ZERO])
    }

    pub fn pauli_z() -> Self {
        Self::from_rows_unchecked(2, &[ONE, ZERO, ZERO, -ONE])
    }

    /// Y rotation exp(-iθY/2).
    pub fn ry(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::from_rows_unchecked(2, &[c, -s, s, c].map(|x| Complex64::new(x, 0.0)))
    }

    /// CNOT with local qubit 0 as control and local qubit 1 as target.
    pub fn cnot() -> Self {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(3, 1)] = ONE;
        m[(2, 2)] = ONE;
        m[(1, 3)] = ONE;
        Self {
            num_qubits: 2,
            matrix: m,
        }
    }

    fn from_rows_unchecked(dim: usize, entries: &[Complex64]) -> Self {
        Self {
            num_qubits: dim.trailing_zeros() as usize,
            matrix: DMatrix::from_row_slice(dim, dim, entries),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.matrix.column(j).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            num_qubits: self.num_qubits,
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &UnitaryMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Max-entry deviation of U†U from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let product = self.matrix.adjoint() * &self.matrix;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for c in 0..n {
            for r in 0..n {
                let expected = if r == c { ONE } else { ZERO };
                worst = worst.max((product[(r, c)] - expected).norm());
            }
        }
        worst
    }
}

pub(crate) fn validate_qubits(qubits: &[usize], num_qubits: usize) -> Result<()> {
    let mut seen = 0usize;
    for &q in qubits {
        if q >= num_qubits {
            return Err(Error::QubitOutOfRange { qubit: q, num_qubits });
        }
        if seen >> q & 1 == 1 {
            return Err(Error::RepeatedQubit(q));
        }
        seen |= 1 << q;
    }
    Ok(())
}

pub(crate) fn validate_permutation(perm: &[usize], num_qubits: usize) -> Result<()> {
    if perm.len() != num_qubits {
        return Err(Error::InvalidPermutation(format!(
            "length {} for {num_qubits} qubits",
            perm.len()
        )));
    }
    let mut seen = vec![false; num_qubits];
    for &p in perm {
        if p >= num_qubits || seen[p] {
            return Err(Error::InvalidPermutation(format!("{perm:?} is not a bijection")));
        }
        seen[p] = true;
    }
    Ok(())
}

#[inline]
pub(crate) fn permute_index(index: usize, perm: &[usize]) -> usize {
    perm.iter()
        .enumerate()
        .fold(0, |acc, (q, &p)| acc | ((index >> q & 1) << p))
}

/// Gathers bit `positions[j]` of `index` into bit `j` of the result.
#[inline]
pub(crate) fn extract_bits(index: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &p)| acc | ((index >> p & 1) << j))
}

/// Scatters bit `j` of `value` to bit `positions[j]`.
#[inline]
pub(crate) fn deposit_bits(value: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &p)| acc | ((value >> j & 1) << p))
}

/// Spreads the bits of `value` over the positions not listed in `sorted`
/// (ascending), leaving zeros at the listed positions.
#[inline]
pub(crate) fn insert_zero_bits(mut value: usize, sorted: &[usize]) -> usize {
    for &p in sorted {
        let low = value & ((1 << p) - 1);
        value = low | ((value ^ low) << 1);
    }
    value
}

/// In-place application of a dense local operator (not necessarily unitary)
/// to an amplitude array.
pub(crate) fn apply_local(amplitudes: &mut [Complex64], matrix: &DMatrix<Complex64>, targets: &[usize]) {
    let k = targets.len();
    let dim = 1usize << k;
    let num_qubits = amplitudes.len().trailing_zeros() as usize;
    let offsets: Vec<usize> = (0..dim).map(|local| deposit_bits(local, targets)).collect();
    let mut sorted = targets.to_vec();
    sorted.sort_unstable();
    // row-major copy for cache-friendly inner products
    let rows: Vec<Complex64> = (0..dim)
        .flat_map(|r| (0..dim).map(move |c| (r, c)))
        .map(|(r, c)| matrix[(r, c)])
        .collect();
    let mut gathered = vec![ZERO; dim];
    for rest in 0..1usize << (num_qubits - k) {
        let base = insert_zero_bits(rest, &sorted);
        for (g, off) in gathered.iter_mut().zip(&offsets) {
            *g = amplitudes[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let row = &rows[r * dim..(r + 1) * dim];
            amplitudes[base | off] = row.iter().zip(&gathered).map(|(m, g)| m * g).sum();
        }
    }
}
