use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{extract_bits, NORM_TOLERANCE};

/// Independent per-bit readout flips.
///
/// As a column-stochastic matrix indexed `[read][true]`:
/// `[[1 − p01, p10], [p01, 1 − p10]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Probability of reading 1 from a true 0.
    pub p01: f64,
    /// Probability of reading 0 from a true 1.
    pub p10: f64,
}

impl ConfusionMatrix {
    pub fn new(p01: f64, p10: f64) -> Result<Self> {
        for (name, p) in [("p01", p01), ("p10", p10)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ParameterOutOfRange(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(Self { p01, p10 })
    }

    pub fn ideal() -> Self {
        Self { p01: 0.0, p10: 0.0 }
    }

    pub fn is_ideal(&self) -> bool {
        self.p01 == 0.0 && self.p10 == 0.0
    }

    /// Entry `[read][true]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.p01, self.p10], [self.p01, 1.0 - self.p10]]
    }
}

/// Probability distribution over `num_bits`-bit strings (bit `j` of the
/// index is bit `j` of the string).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    num_bits: usize,
    probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    /// Requires non-negative entries summing to one.
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        let dist = Self::unnormalized(probabilities)?;
        let total = dist.total();
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("probabilities sum to {total}")));
        }
        Ok(dist)
    }

    /// Rescales non-negative weights to unit sum.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let mut dist = Self::unnormalized(weights)?;
        let total = dist.total();
        if total <= 0.0 {
            return Err(Error::InvalidState("all weights are zero".into()));
        }
        dist.probabilities.iter_mut().for_each(|p| *p /= total);
        Ok(dist)
    }

    pub fn from_counts(num_bits: usize, counts: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut weights = vec![0.0; 1 << num_bits];
        for (outcome, count) in counts {
            let slot = weights.get_mut(outcome).ok_or_else(|| {
                Error::InvalidState(format!("outcome {outcome} has more than {num_bits} bits"))
            })?;
            *slot += count as f64;
        }
        Self::from_weights(weights)
    }

    fn unnormalized(probabilities: Vec<f64>) -> Result<Self> {
        let len = probabilities.len();
        if !len.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: len.next_power_of_two(),
                actual: len,
            });
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p >= -NORM_TOLERANCE) || !p.is_finite()) {
            return Err(Error::InvalidState(format!("invalid probability {p}")));
        }
        Ok(Self {
            num_bits: len.trailing_zeros() as usize,
            probabilities: probabilities.into_iter().map(|p| p.max(0.0)).collect(),
        })
    }

    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, outcome: usize) -> f64 {
        self.probabilities.get(outcome).copied().unwrap_or(0.0)
    }

    fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Distribution of the listed bits, `bits[j]` becoming bit `j`.
    pub fn marginal(&self, bits: &[usize]) -> Result<OutcomeDistribution> {
        if let Some(&b) = bits.iter().find(|&&b| b >= self.num_bits) {
            return Err(Error::QubitOutOfRange {
                qubit: b,
                num_qubits: self.num_bits,
            });
        }
        let mut out = vec![0.0; 1 << bits.len()];
        for (i, p) in self.probabilities.iter().enumerate() {
            out[extract_bits(i, bits)] += p;
        }
        Ok(Self {
            num_bits: bits.len(),
            probabilities: out,
        })
    }
}

/// Applies independent readout flips to every bit.
pub fn apply_readout(dist: &OutcomeDistribution, confusion: &ConfusionMatrix) -> OutcomeDistribution {
    let mut probs = dist.probabilities.clone();
    if !confusion.is_ideal() {
        let c = confusion.matrix();
        for bit in 0..dist.num_bits {
            let mask = 1 << bit;
            for i in (0..probs.len()).filter(|i| i & mask == 0) {
                let (t0, t1) = (probs[i], probs[i | mask]);
                probs[i] = c[0][0] * t0 + c[0][1] * t1;
                probs[i | mask] = c[1][0] * t0 + c[1][1] * t1;
            }
        }
    }
    OutcomeDistribution {
        num_bits: dist.num_bits,
        probabilities: probs,
    }
}

/// Classical fidelity `(Σ √(p q))²`.
pub fn hellinger_fidelity(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64> {
    if p.num_bits != q.num_bits {
        return Err(Error::DimensionMismatch {
            expected: p.num_bits,
            actual: q.num_bits,
        });
    }
    let bc: f64 = p
        .probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    Ok(bc * bc)
}

/// Shots needed for a binomial estimate of `p` to reach standard error
/// `sigma`, i.e. the smallest `N` with `p(1 − p)/N ≤ σ²` (at least one).
pub fn required_shots(p: f64, sigma: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParameterOutOfRange(format!("p = {p} outside [0, 1]")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("sigma = {sigma} must be positive")));
    }
    let exact = p * (1.0 - p) / (sigma * sigma);
    // guard against round-up of exact integers such as 2500.0000000000005
    Ok(((exact * (1.0 - 1e-12)).ceil() as usize).max(1))
}
