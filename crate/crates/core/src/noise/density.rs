use nalgebra::DMatrix;
use num_complex::Complex64;

use super::KrausChannel;
use crate::error::{Error, Result};
use crate::state::{
    apply_local, deposit_bits, insert_zero_bits, validate_permutation, validate_qubits, StateVector, UnitaryMatrix,
    IMPOSSIBLE_OUTCOME, NORM_TOLERANCE,
};

/// An `n`-qubit density matrix stored as the `2n`-qubit vector `ρ[r + c·2ⁿ]`,
/// so that `E ρ E†` is `E` on the row qubits and `conj(E)` on the column
/// qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &StateVector) -> Self {
        let amps = state.amplitudes();
        let dim = amps.len();
        let mut data = Vec::with_capacity(dim * dim);
        for c in amps {
            let cc = c.conj();
            data.extend(amps.iter().map(|r| r * cc));
        }
        Self {
            num_qubits: state.num_qubits(),
            data,
        }
    }

    /// Checks that `m` is square with power-of-two size, Hermitian and of
    /// unit trace.
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        let dim = m.nrows();
        if m.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: dim.next_power_of_two(),
                actual: m.ncols(),
            });
        }
        let herm = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("matrix is not Hermitian ({herm:e})")));
        }
        let trace = m.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {trace} is not 1")));
        }
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            data: m.as_slice().to_vec(),
        })
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        DMatrix::from_column_slice(dim, dim, &self.data)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row + col * self.dim()]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entry(i, i).re).sum()
    }

    /// Computational-basis populations.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entry(i, i).re.max(0.0)).collect()
    }

    /// Max-entry deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let dim = self.dim();
        (0..dim)
            .flat_map(|r| (0..dim).map(move |c| (r, c)))
            .map(|(r, c)| (self.entry(r, c) - self.entry(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn apply_unitary(&mut self, u: &UnitaryMatrix, targets: &[usize]) -> Result<()> {
        self.check_targets(u.num_qubits(), targets)?;
        self.conjugate_by(u.matrix(), targets);
        Ok(())
    }

    pub fn apply_channel(&self, channel: &KrausChannel, targets: &[usize]) -> Result<DensityMatrix> {
        let mut out = self.clone();
        out.apply_channel_in_place(channel, targets)?;
        Ok(out)
    }

    pub fn apply_channel_in_place(&mut self, channel: &KrausChannel, targets: &[usize]) -> Result<()> {
        self.check_targets(channel.num_qubits(), targets)?;
        let ops = channel.operators();
        if ops.len() == 1 {
            self.conjugate_by(&ops[0], targets);
            return Ok(());
        }
        // one pass of Σ E ⊗ conj(E) over the row and column copies of the targets
        let dim = channel.dim();
        let mut sup = DMatrix::zeros(dim * dim, dim * dim);
        for e in ops {
            sup += e.map(|z| z.conj()).kronecker(e);
        }
        let doubled: Vec<usize> = targets.iter().copied().chain(targets.iter().map(|q| q + self.num_qubits)).collect();
        apply_local(&mut self.data, &sup, &doubled);
        Ok(())
    }

    fn check_targets(&self, op_qubits: usize, targets: &[usize]) -> Result<()> {
        if op_qubits != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: op_qubits,
                actual: targets.len(),
            });
        }
        validate_qubits(targets, self.num_qubits)
    }

    pub(crate) fn conjugate_by(&mut self, e: &DMatrix<Complex64>, targets: &[usize]) {
        let cols: Vec<usize> = targets.iter().map(|q| q + self.num_qubits).collect();
        apply_local(&mut self.data, e, targets);
        apply_local(&mut self.data, &e.map(|z| z.conj()), &cols);
    }

    /// Relabels qubits: old qubit `q` becomes qubit `perm[q]`.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<DensityMatrix> {
        validate_permutation(perm, self.num_qubits)?;
        let n = self.num_qubits;
        let doubled: Vec<usize> = perm.iter().copied().chain(perm.iter().map(|p| p + n)).collect();
        let vector = StateVector::from_raw(2 * n, self.data.clone()).permute_qubits(&doubled)?;
        Ok(Self {
            num_qubits: n,
            data: vector.into_amplitudes(),
        })
    }

    /// Reduced state on `keep`, with `keep[j]` becoming qubit `j`.
    pub fn partial_trace_keep(&self, keep: &[usize]) -> DensityMatrix {
        let n = self.num_qubits;
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let k = keep.len();
        let dk = 1usize << k;
        let mut data = vec![Complex64::new(0.0, 0.0); dk * dk];
        let spread = |local: usize, positions: &[usize]| {
            positions
                .iter()
                .enumerate()
                .fold(0, |acc, (j, &p)| acc | ((local >> j & 1) << p))
        };
        for rest in 0..1usize << traced.len() {
            let env = spread(rest, &traced);
            for c in 0..dk {
                let cc = spread(c, keep) | env;
                for r in 0..dk {
                    data[r + c * dk] += self.entry(spread(r, keep) | env, cc);
                }
            }
        }
        Self { num_qubits: k, data }
    }

    /// Conditions on `qubits` reading `outcome` and factors them out. The
    /// remaining qubits keep their ascending order.
    pub fn postselect(&self, qubits: &[usize], outcome: usize) -> Result<(DensityMatrix, f64)> {
        validate_qubits(qubits, self.num_qubits)?;
        let mut sorted = qubits.to_vec();
        sorted.sort_unstable();
        let offset = deposit_bits(outcome, qubits);
        let m = self.num_qubits - qubits.len();
        let full: Vec<usize> = (0..1usize << m).map(|i| insert_zero_bits(i, &sorted) | offset).collect();
        let mut data = Vec::with_capacity(full.len() * full.len());
        for &c in &full {
            data.extend(full.iter().map(|&r| self.entry(r, c)));
        }
        let mut out = Self { num_qubits: m, data };
        let probability = out.trace();
        if probability < IMPOSSIBLE_OUTCOME {
            return Err(Error::ImpossibleOutcome { outcome, probability });
        }
        out.data.iter_mut().for_each(|z| *z /= probability);
        Ok((out, probability))
    }

    /// `sqrt(⟨ψ|ρ|ψ⟩)`, the mixed-state analog of the overlap `|⟨ψ|φ⟩|`.
    pub fn fidelity_with_pure(&self, state: &StateVector) -> Result<f64> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: state.num_qubits(),
            });
        }
        let psi = state.amplitudes();
        let dim = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..dim {
            let col: Complex64 = (0..dim).map(|r| psi[r].conj() * self.data[r + c * dim]).sum();
            acc += col * psi[c];
        }
        Ok(acc.re.max(0.0).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{ghz_state, random_state};
    use crate::noise::{depolarizing_channel, pad_channel};
    use proptest::prelude::{prop_assert, proptest};

    #[test]
    fn pure_state_roundtrip() {
        let psi = random_state(3, 11);
        let rho = DensityMatrix::from_pure(&psi);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!((rho.fidelity_with_pure(&psi).unwrap() - 1.0).abs() < 1e-12);
        assert!(rho.hermiticity_defect() < 1e-15);
        let again = DensityMatrix::from_matrix(rho.to_matrix()).unwrap();
        assert_eq!(again, rho);
    }

    #[test]
    fn unitary_matches_state_vector() {
        let psi = random_state(3, 2);
        let u = UnitaryMatrix::cnot();
        let mut rho = DensityMatrix::from_pure(&psi);
        rho.apply_unitary(&u, &[2, 0]).unwrap();
        let phi = psi.apply_unitary(&u, &[2, 0]).unwrap();
        assert_eq!(rho.num_qubits(), 3);
        let diff = (rho.to_matrix() - DensityMatrix::from_pure(&phi).to_matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14);
    }

    #[test]
    fn permutation_matches_state_vector() {
        let psi = random_state(3, 5);
        let perm = [2, 0, 1];
        let rho = DensityMatrix::from_pure(&psi).permute_qubits(&perm).unwrap();
        let expected = DensityMatrix::from_pure(&psi.permute_qubits(&perm).unwrap());
        let diff = (rho.to_matrix() - expected.to_matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-15);
    }

    #[test]
    fn ghz_reduced_state_is_classical() {
        let rho = DensityMatrix::from_pure(&ghz_state(3).unwrap()).partial_trace_keep(&[1]);
        assert!((rho.entry(0, 0).re - 0.5).abs() < 1e-15);
        assert!(rho.entry(0, 1).norm() < 1e-15);
    }

    #[test]
    fn postselect_matches_state_vector() {
        let psi = random_state(4, 8);
        let (rho, p) = DensityMatrix::from_pure(&psi).postselect(&[3, 1], 2).unwrap();
        let (phi, q) = psi.measure_and_project(&[3, 1], 2).unwrap();
        assert!((p - q).abs() < 1e-14);
        assert!((rho.fidelity_with_pure(&phi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_matrices() {
        let m = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(DensityMatrix::from_matrix(m).is_err());
        let m = DMatrix::from_element(3, 3, Complex64::new(1.0 / 3.0, 0.0));
        assert!(DensityMatrix::from_matrix(m).is_err());
    }

    proptest! {
        #[test]
        fn channels_preserve_physicality(seed in 0u64..500, eta in 0.0f64..=4.0 / 3.0, t in 0.0f64..50.0) {
            let mut rho = DensityMatrix::from_pure(&random_state(2, seed));
            rho.apply_channel_in_place(&depolarizing_channel(eta).unwrap(), &[1]).unwrap();
            rho.apply_channel_in_place(&pad_channel(30.0, 40.0, t).unwrap(), &[0]).unwrap();
            prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
            prop_assert!(rho.hermiticity_defect() < 1e-12);
            prop_assert!(rho.min_eigenvalue() > -1e-12);
        }
    }
}
