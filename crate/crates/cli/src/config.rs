//! TOML experiment configuration.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use mbswap::circuits::{
    ghz_circuit, random_brickwork, random_state, state_with_spectrum, theta_circuit, BrickworkSpec, Circuit,
};
use mbswap::noise::{NoiseMethod, NoiseParams};
use mbswap::protocol::SwapMode;
use mbswap::{QubitPartition, StateVector};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run depends on. Sections not used by a subcommand keep
/// their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Sampled shots per protocol run; zero disables sampling.
    pub shots: usize,
    pub target: TargetSpec,
    pub protocol: ProtocolSection,
    pub theta_sweep: ThetaSweepSection,
    pub random_circuits: RandomCircuitsSection,
    pub noise_scan: NoiseScanSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            shots: 10_000,
            target: TargetSpec::default(),
            protocol: ProtocolSection::default(),
            theta_sweep: ThetaSweepSection::default(),
            random_circuits: RandomCircuitsSection::default(),
            noise_scan: NoiseScanSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

/// Target state and its bipartition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Random Schmidt vectors with the given spectrum; Alice holds the low
    /// `n_a` qubits.
    Spectrum {
        coefficients: Vec<f64>,
        n_a: usize,
        n_b: usize,
        #[serde(default)]
        seed: u64,
    },
    /// GHZ state on `n` qubits; Alice holds the low `n_a`.
    Ghz { n: usize, n_a: usize },
    /// `cos(θ/2)|00⟩ + sin(θ/2)|11⟩`.
    Theta { theta: f64 },
    /// Gaussian random state.
    Random {
        n: usize,
        n_a: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Random XYZ brickwork circuit applied to |0…0⟩, cut in half.
    Brickwork {
        n: usize,
        cycles: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec::Spectrum {
            coefficients: vec![0.4, 0.3, 0.2, 0.1],
            n_a: 2,
            n_b: 2,
            seed: 0,
        }
    }
}

pub struct Target {
    pub state: StateVector,
    pub partition: QubitPartition,
    /// Gate-level preparation, when the family has one.
    pub preparation: Option<Circuit>,
}

impl TargetSpec {
    pub fn build(&self) -> Result<Target, CliError> {
        let (state, partition, preparation) = match self {
            TargetSpec::Spectrum {
                coefficients,
                n_a,
                n_b,
                seed,
            } => (
                state_with_spectrum(coefficients, *n_a, *n_b, *seed)?,
                QubitPartition::contiguous(*n_a, *n_b)?,
                None,
            ),
            TargetSpec::Ghz { n, n_a } => {
                let prep = ghz_circuit(*n)?;
                let partition = QubitPartition::contiguous(*n_a, n.saturating_sub(*n_a))?;
                (prep.run()?, partition, Some(prep))
            }
            TargetSpec::Theta { theta } => {
                let prep = theta_circuit(*theta)?;
                (prep.run()?, QubitPartition::contiguous(1, 1)?, Some(prep))
            }
            TargetSpec::Random { n, n_a, seed } => (
                random_state(*n, *seed),
                QubitPartition::contiguous(*n_a, n.saturating_sub(*n_a))?,
                None,
            ),
            TargetSpec::Brickwork { n, cycles, seed } => {
                let spec = BrickworkSpec::new(*n, *cycles, *seed)?;
                let prep = spec.circuit();
                (random_brickwork(&spec), QubitPartition::contiguous(n / 2, n - n / 2)?, Some(prep))
            }
        };
        Ok(Target {
            state,
            partition,
            preparation,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub nodes: usize,
    pub mode: SwapMode,
    pub sigma0: usize,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            nodes: 1,
            mode: SwapMode::Postselect,
            sigma0: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaSweepSection {
    pub points: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Adds noisy columns when present.
    pub noise: Option<NoiseParams>,
}

impl Default for ThetaSweepSection {
    fn default() -> Self {
        Self {
            points: 50,
            theta_min: 0.0,
            theta_max: FRAC_PI_2,
            noise: None,
        }
    }
}

impl ThetaSweepSection {
    pub fn grid(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.theta_min],
            p => (0..p)
                .map(|i| self.theta_min + (self.theta_max - self.theta_min) * i as f64 / (p - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomCircuitsSection {
    /// Even system sizes, cut in half.
    pub sizes: Vec<usize>,
    /// Brickwork depth is `cycles_per_qubit · n`.
    pub cycles_per_qubit: usize,
    pub samples: usize,
    /// Largest size also run through the full two-copy simulation.
    pub simulate_max_n: usize,
}

impl Default for RandomCircuitsSection {
    fn default() -> Self {
        Self {
            sizes: vec![4, 6, 8, 10, 12, 14, 16, 18],
            cycles_per_qubit: 2,
            samples: 20,
            simulate_max_n: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMethod {
    Exact,
    Trajectories,
    /// Exact values plus trajectory estimates side by side.
    Both,
}

impl ScanMethod {
    pub fn exact(self) -> bool {
        matches!(self, ScanMethod::Exact | ScanMethod::Both)
    }

    pub fn trajectories(self, count: usize, seed: u64) -> Option<NoiseMethod> {
        matches!(self, ScanMethod::Trajectories | ScanMethod::Both)
            .then_some(NoiseMethod::Trajectories { count, seed })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseScanSection {
    /// GHZ sizes; Alice holds the low half.
    pub sizes: Vec<usize>,
    pub method: ScanMethod,
    pub trajectories: usize,
    /// Parameters shared by every point; the scanned one is overridden.
    pub base: NoiseParams,
    pub eta_1q: Vec<f64>,
    pub eta_ecr: Vec<f64>,
    /// Idle durations for the damping scan, using `pad_t1` and `pad_t2`.
    pub idle_time: Vec<f64>,
    pub pad_t1: f64,
    pub pad_t2: f64,
    /// Symmetric readout flip probabilities.
    pub readout: Vec<f64>,
}

impl Default for NoiseScanSection {
    fn default() -> Self {
        Self {
            sizes: vec![2, 3, 4, 5],
            method: ScanMethod::Exact,
            trajectories: 2000,
            base: NoiseParams::default(),
            eta_1q: vec![0.0, 0.004, 0.008, 0.012, 0.016, 0.02],
            eta_ecr: vec![0.0, 0.005, 0.01, 0.015, 0.02, 0.025],
            idle_time: vec![0.0, 0.5, 1.0, 2.0, 4.0, 8.0],
            pad_t1: 150.0,
            pad_t2: 120.0,
            readout: vec![0.0, 0.01, 0.02, 0.03, 0.04, 0.05],
        }
    }
}
