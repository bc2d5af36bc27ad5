//! Schmidt decomposition across a bipartition and the closed-form spectral
//! quantities of the swapping protocol.
//!
//! Every analytic function here takes a spectrum `λ` as a probability vector
//! (squared singular values). For a target with spectrum `λ`:
//!
//! * single-node fidelity `F = Σλ² / √Σλ³`,
//! * shared spectrum after `k` nodes `λ^(2k+1) / Σλ^(2k+1)`,
//! * `k`-node fidelity `Σλ^(k+1) / √Σλ^(2k+1)`,
//! * acceptance probability at node `k`: `Σλ^(2k+1) / Σλ^(2k−1)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{QubitPartition, StateVector};

/// Default cutoff on `λ` (squared singular values) for counting rank.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;
/// Tolerance on `Σλ = 1` for spectra passed to the analytic functions.
pub const SPECTRUM_SUM_TOL: f64 = 1e-9;

const PHASE_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// Descending, normalized to one over the retained rank.
    pub coefficients: Vec<f64>,
    /// States on `n_A` qubits, local bit `j` = `partition.set_a()[j]`.
    pub vectors_a: Vec<StateVector>,
    /// States on `n_B` qubits, local bit `j` = `partition.set_b()[j]`.
    pub vectors_b: Vec<StateVector>,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Same Schmidt vectors with a different spectrum of the same length.
    pub fn with_coefficients(&self, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != self.rank() {
            return Err(Error::DimensionMismatch {
                expected: self.rank(),
                actual: coefficients.len(),
            });
        }
        validate_spectrum(&coefficients)?;
        Ok(Self {
            coefficients,
            vectors_a: self.vectors_a.clone(),
            vectors_b: self.vectors_b.clone(),
        })
    }
}

fn amplitude_matrix(state: &StateVector, partition: &QubitPartition) -> Result<DMatrix<Complex64>> {
    if state.num_qubits() != partition.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: partition.num_qubits(),
            actual: state.num_qubits(),
        });
    }
    let rows = 1 << partition.n_a();
    let cols = 1 << partition.n_b();
    Ok(DMatrix::from_fn(rows, cols, |a, b| {
        state.amplitude(partition.join_index(a, b))
    }))
}

/// Schmidt decomposition via SVD of the `2^{n_A} × 2^{n_B}` amplitude matrix.
///
/// Only terms with `λ > zero_tol` are kept. Each Alice vector is rephased so
/// its first non-negligible amplitude is real and positive; Bob's vector
/// absorbs the conjugate phase.
pub fn schmidt_decompose(
    state: &StateVector,
    partition: &QubitPartition,
    zero_tol: f64,
) -> Result<SchmidtDecomposition> {
    let m = amplitude_matrix(state, partition)?;
    let svd = m.svd(true, true);
    let u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));

    let mut coefficients = Vec::new();
    let mut vectors_a = Vec::new();
    let mut vectors_b = Vec::new();
    for i in order {
        let s = svd.singular_values[i];
        let lambda = s * s;
        if lambda <= zero_tol {
            break;
        }
        let mut a: Vec<Complex64> = u.column(i).iter().copied().collect();
        let mut b: Vec<Complex64> = v_t.row(i).iter().copied().collect();
        if let Some(first) = a.iter().find(|x| x.norm() > PHASE_THRESHOLD) {
            let phase = first / first.norm();
            for x in &mut a {
                *x /= phase;
            }
            for x in &mut b {
                *x *= phase;
            }
        }
        coefficients.push(lambda);
        vectors_a.push(StateVector::from_amplitudes(a)?);
        vectors_b.push(StateVector::from_amplitudes(b)?);
    }
    if coefficients.is_empty() {
        return Err(Error::InvalidState("state has no Schmidt term above tolerance".into()));
    }
    let total: f64 = coefficients.iter().sum();
    for c in &mut coefficients {
        *c /= total;
    }
    Ok(SchmidtDecomposition {
        coefficients,
        vectors_a,
        vectors_b,
    })
}

/// Full descending spectrum (all `min(2^{n_A}, 2^{n_B})` values, zeros
/// included) without computing Schmidt vectors.
pub fn schmidt_spectrum(state: &StateVector, partition: &QubitPartition) -> Result<Vec<f64>> {
    let m = amplitude_matrix(state, partition)?;
    let mut spectrum: Vec<f64> = m.singular_values().iter().map(|s| s * s).collect();
    spectrum.sort_by(|a, b| b.total_cmp(a));
    Ok(spectrum)
}

/// `Σ √λᵢ |aᵢ⟩ ⊗ |bᵢ⟩` placed back onto the partition's qubit layout.
pub fn reconstruct_state(dec: &SchmidtDecomposition, partition: &QubitPartition) -> Result<StateVector> {
    let dim_a = 1 << partition.n_a();
    let dim_b = 1 << partition.n_b();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << partition.num_qubits()];
    for ((lambda, va), vb) in dec.coefficients.iter().zip(&dec.vectors_a).zip(&dec.vectors_b) {
        if va.dim() != dim_a || vb.dim() != dim_b {
            return Err(Error::DimensionMismatch {
                expected: dim_a,
                actual: va.dim(),
            });
        }
        let weight = lambda.sqrt();
        for b in 0..dim_b {
            let vb_b = vb.amplitude(b) * weight;
            if vb_b.norm_sqr() == 0.0 {
                continue;
            }
            for a in 0..dim_a {
                amplitudes[partition.join_index(a, b)] += va.amplitude(a) * vb_b;
            }
        }
    }
    StateVector::from_amplitudes(amplitudes)
}

/// Checks that `coeffs` is a probability vector.
pub fn validate_spectrum(coeffs: &[f64]) -> Result<()> {
    if coeffs.is_empty() {
        return Err(Error::InvalidSpectrum("empty spectrum".into()));
    }
    if let Some(&c) = coeffs.iter().find(|&&c| c < 0.0 || !c.is_finite()) {
        return Err(Error::NegativeCoefficient(c));
    }
    let total: f64 = coeffs.iter().sum();
    if (total - 1.0).abs() > SPECTRUM_SUM_TOL {
        return Err(Error::InvalidSpectrum(format!("coefficients sum to {total}")));
    }
    Ok(())
}

/// `Σ λᵢ^p` over the strictly positive entries.
pub fn power_sum(coeffs: &[f64], p: f64) -> f64 {
    coeffs.iter().filter(|&&c| c > 0.0).map(|c| c.powf(p)).sum()
}

/// Rényi entropy `ln(Σλⁿ) / (1 − n)`, with the Shannon limit at `n = 1`.
pub fn renyi_entropy(coeffs: &[f64], order: f64) -> Result<f64> {
    validate_spectrum(coeffs)?;
    if order <= 0.0 || !order.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("Renyi order {order}")));
    }
    if (order - 1.0).abs() < 1e-12 {
        return Ok(-coeffs
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|c| c * c.ln())
            .sum::<f64>());
    }
    Ok(power_sum(coeffs, order).ln() / (1.0 - order))
}

/// Fidelity of the postselected single-node output, `Σλ² / √Σλ³`.
pub fn predicted_fidelity_single(coeffs: &[f64]) -> Result<f64> {
    predicted_fidelity_network(coeffs, 1)
}

fn check_nodes(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::ParameterOutOfRange("node count must be at least 1".into()));
    }
    Ok(())
}

/// Shared-state spectrum after `k` nodes, `λ^(2k+1) / Σλ^(2k+1)`.
pub fn predicted_shared_coeffs(coeffs: &[f64], k: usize) -> Result<Vec<f64>> {
    validate_spectrum(coeffs)?;
    check_nodes(k)?;
    let p = (2 * k + 1) as f64;
    let norm = power_sum(coeffs, p);
    Ok(coeffs
        .iter()
        .map(|&c| if c > 0.0 { c.powf(p) / norm } else { 0.0 })
        .collect())
}

/// `Σλ^(k+1) / √Σλ^(2k+1)`.
pub fn predicted_fidelity_network(coeffs: &[f64], k: usize) -> Result<f64> {
    validate_spectrum(coeffs)?;
    check_nodes(k)?;
    Ok(power_sum(coeffs, (k + 1) as f64) / power_sum(coeffs, (2 * k + 1) as f64).sqrt())
}

/// Acceptance probability at node `k`, `Σλ^(2k+1) / Σλ^(2k−1)`.
pub fn predicted_postselection_prob(coeffs: &[f64], k: usize) -> Result<f64> {
    validate_spectrum(coeffs)?;
    check_nodes(k)?;
    Ok(power_sum(coeffs, (2 * k + 1) as f64) / power_sum(coeffs, (2 * k - 1) as f64))
}

/// Rank `d` and the central moments `ε̄² = Σεᵢ²/d`, `ε̄³ = Σεᵢ³/d` of the
/// deviations `εᵢ = λᵢ − 1/d` over the support.
pub fn deviation_moments(coeffs: &[f64]) -> Result<(usize, f64, f64)> {
    validate_spectrum(coeffs)?;
    let support: Vec<f64> = coeffs.iter().copied().filter(|&c| c > 0.0).collect();
    let d = support.len();
    let mean = 1.0 / d as f64;
    let var = support.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / d as f64;
    let skew = support.iter().map(|c| (c - mean).powi(3)).sum::<f64>() / d as f64;
    Ok((d, var, skew))
}

/// `(1 + d²ε̄²) / √(1 + 3d²ε̄² + d³ε̄³)`.
pub fn fidelity_from_moments(d: usize, var: f64, skew: f64) -> f64 {
    let d = d as f64;
    let x = d * d * var;
    let y = d * d * d * skew;
    (1.0 + x) / (1.0 + 3.0 * x + y).sqrt()
}

/// Fidelity expressed through the variance and skewness of the spectrum.
pub fn perturbative_fidelity(coeffs: &[f64]) -> Result<f64> {
    let (d, var, skew) = deviation_moments(coeffs)?;
    Ok(fidelity_from_moments(d, var, skew))
}

/// Leading small-deviation behaviour `1 − d²ε̄²/2`.
pub fn leading_order_fidelity(coeffs: &[f64]) -> Result<f64> {
    let (d, var, _) = deviation_moments(coeffs)?;
    Ok(1.0 - (d * d) as f64 * var / 2.0)
}

/// Rényi entropies at several orders plus the deviation moments.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumAnalytics {
    pub rank: usize,
    pub renyi: Vec<(f64, f64)>,
    pub variance: f64,
    pub skewness: f64,
}

impl SpectrumAnalytics {
    pub fn new(coeffs: &[f64], orders: &[f64]) -> Result<Self> {
        let (rank, variance, skewness) = deviation_moments(coeffs)?;
        let renyi = orders
            .iter()
            .map(|&n| renyi_entropy(coeffs, n).map(|s| (n, s)))
            .collect::<Result<_>>()?;
        Ok(Self {
            rank,
            renyi,
            variance,
            skewness,
        })
    }

    pub fn entropy(&self, order: f64) -> Option<f64> {
        self.renyi
            .iter()
            .find(|(n, _)| (n - order).abs() < 1e-12)
            .map(|&(_, s)| s)
    }
}
