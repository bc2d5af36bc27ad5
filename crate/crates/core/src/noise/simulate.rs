use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{apply_readout, hellinger_fidelity, DensityMatrix, KrausChannel, NoiseParams, OutcomeDistribution};
use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::protocol::{SwapConfig, SwapMode, MAX_REGISTER_QUBITS};
use crate::state::{apply_local, extract_bits, permute_index, sample_index, StateVector, IMPOSSIBLE_OUTCOME};
use crate::synth::eve_permutation;

/// Largest two-copy register simulated with full density matrices.
pub const MAX_DENSITY_QUBITS: usize = 10;
/// Trajectories are split into this many batches for the error estimate.
pub const TRAJECTORY_BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMethod {
    /// Full density-matrix evolution.
    Exact,
    /// Monte Carlo over Kraus branches.
    Trajectories { count: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyResult {
    /// Hellinger fidelity of the noisy shared-state readout distribution to
    /// the noiseless one, both conditioned on acceptance.
    pub hellinger_fidelity: f64,
    /// Fidelity of the accepted shared state to the target before readout
    /// (exact method only).
    pub state_fidelity: Option<f64>,
    /// Probability that Eve's register reads all zeros, readout errors
    /// included.
    pub acceptance_probability: f64,
    pub ideal_acceptance_probability: f64,
    /// Accepted readout distribution in target layout.
    pub noisy: OutcomeDistribution,
    pub ideal: OutcomeDistribution,
    /// Standard error of the Hellinger fidelity across trajectory batches.
    pub std_error: Option<f64>,
    pub trajectories: usize,
}

/// The single-node postselected protocol as one circuit on the `2n`-qubit
/// register: the preparation on both copies followed by Eve's inverse
/// preparation. Returns the circuit and Eve's qubits in her local order.
pub fn protocol_circuit(config: &SwapConfig) -> Result<(Circuit, Vec<usize>)> {
    let n = config.target.num_qubits();
    if config.nodes != 1 || config.mode != SwapMode::Postselect {
        return Err(Error::InvalidConfig(
            "noisy simulation covers the single-node postselected protocol".into(),
        ));
    }
    if config.sigma0 != 0 {
        return Err(Error::InvalidConfig("noisy simulation needs sigma0 = 0".into()));
    }
    if config.partition.num_qubits() != n {
        return Err(Error::InvalidConfig("partition does not match the target".into()));
    }
    let prep = config
        .preparation
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("noisy simulation needs a preparation circuit".into()))?;
    if prep.num_qubits != n {
        return Err(Error::InvalidConfig("preparation size does not match the target".into()));
    }
    let overlap = prep.run()?.overlap(&config.target)?;
    if (overlap - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "preparation reaches the target with overlap {overlap}"
        )));
    }

    let partition = &config.partition;
    let eve_qubits: Vec<usize> = partition
        .set_b()
        .iter()
        .copied()
        .chain(partition.set_a().iter().map(|&q| n + q))
        .collect();
    let perm = eve_permutation(partition);
    let eve_map: Vec<usize> = (0..n).map(|q| eve_qubits[perm[q]]).collect();
    let copy2: Vec<usize> = (n..2 * n).collect();

    let mut circuit = prep.remap(&(0..n).collect::<Vec<_>>(), 2 * n)?;
    circuit.extend(&prep.remap(&copy2, 2 * n)?)?;
    circuit.extend(&prep.inverse().remap(&eve_map, 2 * n)?)?;
    Ok((circuit, eve_qubits))
}

/// One step of the noisy schedule.
enum Op {
    Gate(DMatrix<Complex64>, Vec<usize>),
    Noise(usize, Vec<usize>),
}

/// Gates in ASAP layers with gate noise after each gate and idle damping on
/// the untouched qubits of each layer. Noise ops index into `channels`.
fn schedule(circuit: &Circuit, params: &NoiseParams) -> Result<(Vec<Op>, Vec<Sampler>)> {
    let mut channels = Vec::new();
    let mut slot = |ch: Option<KrausChannel>| {
        ch.map(|c| {
            channels.push(Sampler::new(c));
            channels.len() - 1
        })
    };
    let one = slot(params.single_qubit_channel()?);
    let two = slot(params.two_qubit_channel()?);
    let idle = slot(params.idle_channel()?);

    let mut ops = Vec::new();
    for layer in circuit.layers() {
        let mut busy = vec![false; circuit.num_qubits];
        for &i in &layer {
            let gate = &circuit.gates[i];
            let qubits = gate.qubits();
            qubits.iter().for_each(|&q| busy[q] = true);
            ops.push(Op::Gate(gate.matrix().into_matrix(), qubits.clone()));
            let noise = if qubits.len() == 1 { one } else { two };
            if let Some(c) = noise {
                ops.push(Op::Noise(c, qubits));
            }
        }
        if let Some(c) = idle {
            for q in (0..circuit.num_qubits).filter(|&q| !busy[q]) {
                ops.push(Op::Noise(c, vec![q]));
            }
        }
    }
    Ok((ops, channels))
}

/// Kraus channel prepared for branch sampling. When every operator is a
/// scaled unitary the branch weights are state independent.
struct Sampler {
    channel: KrausChannel,
    fixed: Option<Vec<f64>>,
}

impl Sampler {
    fn new(channel: KrausChannel) -> Self {
        let weights: Option<Vec<f64>> = channel
            .operators()
            .iter()
            .map(|e| {
                let g = e.adjoint() * e;
                let w = g[(0, 0)].re;
                let dev = (g - DMatrix::identity(e.nrows(), e.nrows()) * Complex64::new(w, 0.0))
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                (dev < 1e-12 && w > 0.0).then_some(w)
            })
            .collect();
        Self { channel, fixed: weights }
    }

    fn apply<R: Rng>(&self, amps: &mut Vec<Complex64>, targets: &[usize], rng: &mut R) {
        let ops = self.channel.operators();
        if let Some(w) = &self.fixed {
            let k = sample_index(w, rng);
            let scaled = &ops[k] * Complex64::new(w[k].sqrt().recip(), 0.0);
            apply_local(amps, &scaled, targets);
            return;
        }
        let branches: Vec<Vec<Complex64>> = ops
            .iter()
            .map(|e| {
                let mut b = amps.clone();
                apply_local(&mut b, e, targets);
                b
            })
            .collect();
        let weights: Vec<f64> = branches.iter().map(|b| b.iter().map(|z| z.norm_sqr()).sum()).collect();
        let k = sample_index(&weights, rng);
        let scale = weights[k].sqrt().recip();
        *amps = branches.into_iter().nth(k).expect("sampled branch exists");
        amps.iter_mut().for_each(|z| *z *= scale);
    }
}

fn run_trajectory(ops: &[Op], channels: &[Sampler], num_qubits: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut amps = StateVector::zero(num_qubits).into_amplitudes();
    for op in ops {
        match op {
            Op::Gate(m, qubits) => apply_local(&mut amps, m, qubits),
            Op::Noise(c, qubits) => channels[*c].apply(&mut amps, qubits, rng),
        }
    }
    amps.iter().map(|z| z.norm_sqr()).collect()
}

fn evolve_density(ops: &[Op], channels: &[Sampler], num_qubits: usize) -> Result<DensityMatrix> {
    let mut rho = DensityMatrix::from_pure(&StateVector::zero(num_qubits));
    for op in ops {
        match op {
            Op::Gate(m, qubits) => rho.conjugate_by(m, qubits),
            Op::Noise(c, qubits) => rho.apply_channel_in_place(&channels[*c].channel, qubits)?,
        }
    }
    Ok(rho)
}

/// Accepted part of a joint `2n`-bit distribution: the outcomes with every
/// Eve bit zero, relabelled into target layout. Returns the conditional
/// distribution and the acceptance probability.
fn accepted_distribution(joint: &[f64], n: usize, eve_qubits: &[usize]) -> Result<(OutcomeDistribution, f64)> {
    let mut remaining: Vec<usize> = (0..2 * n).filter(|q| !eve_qubits.contains(q)).collect();
    remaining.sort_unstable();
    let to_target: Vec<usize> = remaining.iter().map(|&p| p % n).collect();
    let eve_mask = eve_qubits.iter().fold(0usize, |m, &q| m | 1 << q);
    let mut weights = vec![0.0; 1 << n];
    for (i, &p) in joint.iter().enumerate().filter(|(i, _)| i & eve_mask == 0) {
        weights[permute_index(extract_bits(i, &remaining), &to_target)] += p;
    }
    let accepted: f64 = weights.iter().sum();
    if accepted < IMPOSSIBLE_OUTCOME {
        return Err(Error::ImpossibleOutcome {
            outcome: 0,
            probability: accepted,
        });
    }
    Ok((OutcomeDistribution::from_weights(weights)?, accepted))
}

fn readout_joint(joint: Vec<f64>, params: &NoiseParams) -> Result<Vec<f64>> {
    let dist = OutcomeDistribution::from_weights(joint)?;
    Ok(apply_readout(&dist, &params.confusion()?).probabilities().to_vec())
}

/// Runs the single-node postselected protocol under gate, idle and readout
/// noise and compares the accepted readout distribution with the noiseless
/// one.
///
/// The configuration must carry a preparation circuit with `sigma0 = 0`;
/// Eve's unitary is the inverse preparation.
pub fn noisy_protocol_run(config: &SwapConfig, params: &NoiseParams, method: NoiseMethod) -> Result<NoisyResult> {
    params.validate()?;
    let (circuit, eve_qubits) = protocol_circuit(config)?;
    let n = config.target.num_qubits();
    let total = 2 * n;

    let ideal_joint = circuit.run()?.probabilities();
    let (ideal, ideal_acceptance) = accepted_distribution(&ideal_joint, n, &eve_qubits)?;
    let (ops, channels) = schedule(&circuit, params)?;

    match method {
        NoiseMethod::Exact => {
            if total > MAX_DENSITY_QUBITS {
                return Err(Error::SizeOverflow {
                    requested: total,
                    limit: MAX_DENSITY_QUBITS,
                });
            }
            let rho = evolve_density(&ops, &channels, total)?;
            let (post, _) = rho.postselect(&eve_qubits, 0)?;
            let mut remaining: Vec<usize> = (0..total).filter(|q| !eve_qubits.contains(q)).collect();
            remaining.sort_unstable();
            let to_target: Vec<usize> = remaining.iter().map(|&p| p % n).collect();
            let state_fidelity = post.permute_qubits(&to_target)?.fidelity_with_pure(&config.target)?;

            let joint = readout_joint(rho.diagonal(), params)?;
            let (noisy, acceptance) = accepted_distribution(&joint, n, &eve_qubits)?;
            Ok(NoisyResult {
                hellinger_fidelity: hellinger_fidelity(&noisy, &ideal)?,
                state_fidelity: Some(state_fidelity),
                acceptance_probability: acceptance,
                ideal_acceptance_probability: ideal_acceptance,
                noisy,
                ideal,
                std_error: None,
                trajectories: 0,
            })
        }
        NoiseMethod::Trajectories { count, seed } => {
            if count == 0 {
                return Err(Error::ParameterOutOfRange("trajectory count must be positive".into()));
            }
            if total > MAX_REGISTER_QUBITS {
                return Err(Error::SizeOverflow {
                    requested: total,
                    limit: MAX_REGISTER_QUBITS,
                });
            }
            let batches = TRAJECTORY_BATCHES.min(count);
            let sums: Vec<Vec<f64>> = (0..batches)
                .into_par_iter()
                .map(|b| {
                    let mut acc = vec![0.0; 1 << total];
                    for t in b * count / batches..(b + 1) * count / batches {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(t as u64);
                        let probs = run_trajectory(&ops, &channels, total, &mut rng);
                        acc.iter_mut().zip(probs).for_each(|(a, p)| *a += p);
                    }
                    acc
                })
                .collect();

            let mut batch_fidelities = Vec::with_capacity(batches);
            for sum in &sums {
                let (dist, _) = accepted_distribution(&readout_joint(sum.clone(), params)?, n, &eve_qubits)?;
                batch_fidelities.push(hellinger_fidelity(&dist, &ideal)?);
            }
            let mut joint = vec![0.0; 1 << total];
            for sum in &sums {
                joint.iter_mut().zip(sum).for_each(|(a, p)| *a += p);
            }
            let joint = readout_joint(joint, params)?;
            let (noisy, acceptance) = accepted_distribution(&joint, n, &eve_qubits)?;
            let std_error = (batches > 1).then(|| {
                let mean = batch_fidelities.iter().sum::<f64>() / batches as f64;
                let var = batch_fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
                (var / batches as f64).sqrt()
            });
            Ok(NoisyResult {
                hellinger_fidelity: hellinger_fidelity(&noisy, &ideal)?,
                state_fidelity: None,
                acceptance_probability: acceptance,
                ideal_acceptance_probability: ideal_acceptance,
                noisy,
                ideal,
                std_error,
                trajectories: count,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{ghz_circuit, theta_circuit};
    use crate::schmidt::{predicted_postselection_prob, schmidt_spectrum};
    use crate::state::QubitPartition;
    use std::f64::consts::PI;

    fn ghz_config(n_a: usize, n_b: usize) -> SwapConfig {
        let prep = ghz_circuit(n_a + n_b).unwrap();
        SwapConfig::new(prep.run().unwrap(), QubitPartition::contiguous(n_a, n_b).unwrap()).with_preparation(prep)
    }

    #[test]
    fn noiseless_run_reproduces_target() {
        let config = ghz_config(1, 2);
        let res = noisy_protocol_run(&config, &NoiseParams::noiseless(), NoiseMethod::Exact).unwrap();
        assert!((res.hellinger_fidelity - 1.0).abs() < 1e-12);
        assert!((res.state_fidelity.unwrap() - 1.0).abs() < 1e-12);
        assert!((res.acceptance_probability - 0.25).abs() < 1e-12);
        assert!((res.ideal.probability(0) - 0.5).abs() < 1e-12);
        assert!((res.ideal.probability(7) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn theta_acceptance_matches_closed_form() {
        let theta = PI / 3.0;
        let prep = theta_circuit(theta).unwrap();
        let config = SwapConfig::new(prep.run().unwrap(), QubitPartition::contiguous(1, 1).unwrap())
            .with_preparation(prep);
        let res = noisy_protocol_run(&config, &NoiseParams::noiseless(), NoiseMethod::Exact).unwrap();
        let lambda = schmidt_spectrum(&config.target, &config.partition).unwrap();
        let expected = predicted_postselection_prob(&lambda, 1).unwrap();
        assert!((res.acceptance_probability - expected).abs() < 1e-12);
    }

    #[test]
    fn noise_lowers_fidelity() {
        let config = ghz_config(1, 1);
        let params = NoiseParams {
            eta_1q: 0.01,
            eta_ecr: 0.02,
            t1: 100.0,
            t2: 80.0,
            gate_time: 0.5,
            p01: 0.02,
            p10: 0.03,
        };
        let res = noisy_protocol_run(&config, &params, NoiseMethod::Exact).unwrap();
        assert!(res.hellinger_fidelity < 1.0 - 1e-4);
        assert!(res.state_fidelity.unwrap() < 1.0 - 1e-4);
        let sum: f64 = res.noisy.probabilities().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectories_track_exact() {
        let config = ghz_config(1, 1);
        let params = NoiseParams {
            eta_1q: 0.05,
            eta_ecr: 0.1,
            t1: 50.0,
            t2: 40.0,
            gate_time: 1.0,
            p01: 0.0,
            p10: 0.0,
        };
        let exact = noisy_protocol_run(&config, &params, NoiseMethod::Exact).unwrap();
        let method = NoiseMethod::Trajectories { count: 2000, seed: 3 };
        let traj = noisy_protocol_run(&config, &params, method).unwrap();
        let sigma = traj.std_error.unwrap();
        assert!(sigma > 0.0);
        assert!((traj.hellinger_fidelity - exact.hellinger_fidelity).abs() < 5.0 * sigma + 1e-3);
        assert_eq!(traj, noisy_protocol_run(&config, &params, method).unwrap());
    }

    #[test]
    fn rejects_unsupported_configs() {
        let config = ghz_config(3, 3);
        assert!(matches!(
            noisy_protocol_run(&config, &NoiseParams::noiseless(), NoiseMethod::Exact),
            Err(Error::SizeOverflow { .. })
        ));
        let bare = SwapConfig::new(config.target.clone(), config.partition.clone());
        assert!(noisy_protocol_run(&bare, &NoiseParams::noiseless(), NoiseMethod::Exact).is_err());
        let multi = ghz_config(1, 1).with_nodes(2);
        assert!(noisy_protocol_run(&multi, &NoiseParams::noiseless(), NoiseMethod::Exact).is_err());
    }
}
