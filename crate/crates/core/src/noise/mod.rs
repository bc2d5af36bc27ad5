//! Kraus noise channels, mixed-state simulation, classical readout errors and
//! distribution-level fidelity.

mod density;
mod readout;
mod simulate;

pub use density::DensityMatrix;
pub use readout::{apply_readout, hellinger_fidelity, required_shots, ConfusionMatrix, OutcomeDistribution};
pub use simulate::{noisy_protocol_run, protocol_circuit, NoiseMethod, NoisyResult, TRAJECTORY_BATCHES};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::UnitaryMatrix;

/// Allowed max-entry deviation of `Σ E†E` from the identity.
pub const TRACE_TOLERANCE: f64 = 1e-10;

/// A completely positive map given by its Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    pub label: String,
    operators: Vec<DMatrix<Complex64>>,
}

impl KrausChannel {
    /// Checks shapes and trace preservation.
    pub fn new(label: impl Into<String>, operators: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let dim = operators
            .first()
            .map(|e| e.nrows())
            .ok_or_else(|| Error::InvalidState("channel without operators".into()))?;
        if !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: dim.next_power_of_two(),
                actual: dim,
            });
        }
        if let Some(e) = operators.iter().find(|e| e.shape() != (dim, dim)) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: e.ncols(),
            });
        }
        let channel = Self {
            label: label.into(),
            operators,
        };
        let deviation = channel.trace_deviation();
        if deviation > TRACE_TOLERANCE {
            return Err(Error::NotTracePreserving(deviation));
        }
        Ok(channel)
    }

    pub fn identity(num_qubits: usize) -> Self {
        let dim = 1 << num_qubits;
        Self {
            label: "identity".into(),
            operators: vec![DMatrix::identity(dim, dim)],
        }
    }

    pub fn operators(&self) -> &[DMatrix<Complex64>] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// Max-entry deviation of `Σ E†E` from the identity.
    pub fn trace_deviation(&self) -> f64 {
        let dim = self.dim();
        let sum = self
            .operators
            .iter()
            .fold(DMatrix::<Complex64>::zeros(dim, dim), |acc, e| acc + e.adjoint() * e);
        (sum - DMatrix::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &KrausChannel) -> Result<KrausChannel> {
        let operators = self
            .operators
            .iter()
            .flat_map(|a| other.operators.iter().map(move |b| b * a))
            .filter(|e| e.iter().any(|z| z.norm_sqr() > 0.0))
            .collect();
        KrausChannel::new(format!("{}*{}", other.label, self.label), operators)
    }

    /// `self ⊗ other`, with `self` on the low local qubit(s).
    pub fn tensor(&self, other: &KrausChannel) -> Result<KrausChannel> {
        let operators = other
            .operators
            .iter()
            .flat_map(|b| self.operators.iter().map(move |a| b.kronecker(a)))
            .collect();
        KrausChannel::new(format!("{}(x){}", self.label, other.label), operators)
    }
}

fn scaled(u: UnitaryMatrix, weight: f64) -> DMatrix<Complex64> {
    u.into_matrix() * Complex64::new(weight, 0.0)
}

fn check_probability(name: &str, value: f64, max: f64) -> Result<()> {
    if !(0.0..=max).contains(&value) {
        return Err(Error::ParameterOutOfRange(format!("{name} = {value} outside [0, {max}]")));
    }
    Ok(())
}

/// Pauli channel with `p_x = p_y = p_z = η/4`, i.e. `ρ ↦ (1 − η)ρ + η I/2`.
/// Operators with zero weight are omitted.
pub fn depolarizing_channel(eta: f64) -> Result<KrausChannel> {
    check_probability("eta", eta, 4.0 / 3.0)?;
    let pauli = (eta / 4.0).sqrt();
    let identity = (1.0 - 3.0 * eta / 4.0).max(0.0).sqrt();
    let mut ops = Vec::with_capacity(4);
    if pauli > 0.0 {
        ops.push(scaled(UnitaryMatrix::pauli_x(), pauli));
        ops.push(scaled(UnitaryMatrix::pauli_y(), pauli));
        ops.push(scaled(UnitaryMatrix::pauli_z(), pauli));
    }
    if identity > 0.0 {
        ops.push(scaled(UnitaryMatrix::identity(1), identity));
    }
    KrausChannel::new(format!("depolarizing({eta})"), ops)
}

pub fn amplitude_damping_channel(gamma: f64) -> Result<KrausChannel> {
    check_probability("gamma", gamma, 1.0)?;
    let c = |x: f64| Complex64::new(x, 0.0);
    let mut ops = vec![DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt())])];
    if gamma > 0.0 {
        ops.push(DMatrix::from_row_slice(2, 2, &[c(0.0), c(gamma.sqrt()), c(0.0), c(0.0)]));
    }
    KrausChannel::new(format!("amplitude_damping({gamma})"), ops)
}

/// `√(1−λ) I` and `√λ Z`: off-diagonal elements shrink by `1 − 2λ`.
pub fn phase_damping_channel(lambda: f64) -> Result<KrausChannel> {
    check_probability("lambda", lambda, 1.0)?;
    let mut ops = Vec::with_capacity(2);
    if lambda < 1.0 {
        ops.push(scaled(UnitaryMatrix::identity(1), (1.0 - lambda).sqrt()));
    }
    if lambda > 0.0 {
        ops.push(scaled(UnitaryMatrix::pauli_z(), lambda.sqrt()));
    }
    KrausChannel::new(format!("phase_damping({lambda})"), ops)
}

/// Damping probabilities `(γ, λ)` for an interval `t` with
/// `γ = 1 − e^{−t/T₁}`, `λ = 1 − e^{−t/T_φ}` and `1/T_φ = 1/T₂ − 1/(2T₁)`.
pub fn damping_parameters(t1: f64, t2: f64, t: f64) -> Result<(f64, f64)> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("duration {t}")));
    }
    if t1 <= 0.0 || t2 <= 0.0 || t1.is_nan() || t2.is_nan() {
        return Err(Error::ParameterOutOfRange(format!("T1 = {t1}, T2 = {t2}")));
    }
    if t2 > 2.0 * t1 {
        return Err(Error::UnphysicalCoherence { t2, twice_t1: 2.0 * t1 });
    }
    let rate_phi = (1.0 / t2 - 1.0 / (2.0 * t1)).max(0.0);
    let gamma = -(-t / t1).exp_m1();
    let lambda = -(-t * rate_phi).exp_m1();
    Ok((gamma, lambda))
}

/// Amplitude damping followed by phase damping over a duration `t`.
///
/// All four products `E^PD_j E^AD_i` are kept (zero operators dropped) so the
/// composite is trace preserving.
pub fn pad_channel(t1: f64, t2: f64, t: f64) -> Result<KrausChannel> {
    let (gamma, lambda) = damping_parameters(t1, t2, t)?;
    let mut ch = amplitude_damping_channel(gamma)?.then(&phase_damping_channel(lambda)?)?;
    ch.label = format!("pad(t1={t1}, t2={t2}, t={t})");
    Ok(ch)
}

/// Two-qubit gate error: the tensor square of the depolarizing channel with
/// per-qubit strength `eta` (16 operators for `eta > 0`).
pub fn ecr_channel(eta: f64) -> Result<KrausChannel> {
    let single = depolarizing_channel(eta)?;
    let mut ch = single.tensor(&single)?;
    ch.label = format!("ecr({eta})");
    Ok(ch)
}

/// Device noise model. Times are in microseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// Depolarizing strength after every single-qubit gate.
    pub eta_1q: f64,
    /// Per-qubit depolarizing strength after every two-qubit gate.
    pub eta_ecr: f64,
    pub t1: f64,
    pub t2: f64,
    /// Layer duration used for idle-qubit damping.
    pub gate_time: f64,
    /// Probability of reading 1 when the qubit is in 0.
    pub p01: f64,
    /// Probability of reading 0 when the qubit is in 1.
    pub p10: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            eta_1q: 0.0,
            eta_ecr: 0.0,
            t1: f64::INFINITY,
            t2: f64::INFINITY,
            gate_time: 0.0,
            p01: 0.0,
            p10: 0.0,
        }
    }
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("eta_1q", self.eta_1q, 4.0 / 3.0)?;
        check_probability("eta_ecr", self.eta_ecr, 4.0 / 3.0)?;
        check_probability("p01", self.p01, 1.0)?;
        check_probability("p10", self.p10, 1.0)?;
        damping_parameters(self.t1, self.t2, self.gate_time)?;
        Ok(())
    }

    pub fn single_qubit_channel(&self) -> Result<Option<KrausChannel>> {
        (self.eta_1q > 0.0).then(|| depolarizing_channel(self.eta_1q)).transpose()
    }

    pub fn two_qubit_channel(&self) -> Result<Option<KrausChannel>> {
        (self.eta_ecr > 0.0).then(|| ecr_channel(self.eta_ecr)).transpose()
    }

    pub fn idle_channel(&self) -> Result<Option<KrausChannel>> {
        let (gamma, lambda) = damping_parameters(self.t1, self.t2, self.gate_time)?;
        if gamma == 0.0 && lambda == 0.0 {
            return Ok(None);
        }
        pad_channel(self.t1, self.t2, self.gate_time).map(Some)
    }

    pub fn confusion(&self) -> Result<ConfusionMatrix> {
        ConfusionMatrix::new(self.p01, self.p10)
    }
}
