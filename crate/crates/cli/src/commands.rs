//! The subcommands. Each returns a [`ResultTable`] with a fixed column set.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use mbswap::circuits::{random_brickwork, BrickworkSpec};
use mbswap::noise::{noisy_protocol_run, NoiseMethod, NoiseParams};
use mbswap::protocol::{enumerate_branches, run, SwapConfig, SwapMode, SwapResult, UNIFORM_TOLERANCE};
use mbswap::schmidt::{
    power_sum, predicted_fidelity_network, predicted_postselection_prob, predicted_shared_coeffs, renyi_entropy,
    schmidt_decompose, schmidt_spectrum, DEFAULT_ZERO_TOL,
};
use mbswap::synth::is_uniform_spectrum;
use mbswap::QubitPartition;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Target, TargetSpec};
use crate::table::{Cell, ResultTable};
use crate::{point_seed, CliError};

/// Agreement required between simulated and closed-form values before a
/// table is emitted.
pub const INVARIANT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Swap,
    Network,
    ThetaSweep,
    RandomCircuits,
    NoiseScan,
    FeedforwardDemo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Swap => "swap",
            Command::Network => "network",
            Command::ThetaSweep => "theta-sweep",
            Command::RandomCircuits => "random-circuits",
            Command::NoiseScan => "noise-scan",
            Command::FeedforwardDemo => "feedforward-demo",
        }
    }
}

pub fn run_command(command: Command, config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    match command {
        Command::Swap => cmd_swap(config),
        Command::Network => cmd_network(config),
        Command::ThetaSweep => cmd_theta_sweep(config),
        Command::RandomCircuits => cmd_random_circuits(config),
        Command::NoiseScan => cmd_noise_scan(config),
        Command::FeedforwardDemo => cmd_feedforward_demo(config),
    }
}

fn check(name: &str, expected: f64, actual: f64) -> Result<(), CliError> {
    let diff = (expected - actual).abs();
    if diff > INVARIANT_TOLERANCE {
        return Err(CliError::Invariant(format!(
            "{name}: simulated {actual} vs closed form {expected} (difference {diff:e})"
        )));
    }
    Ok(())
}

fn swap_config(target: &Target, config: &ExperimentConfig, nodes: usize, mode: SwapMode, seed: u64) -> SwapConfig {
    let mut sc = SwapConfig::new(target.state.clone(), target.partition.clone())
        .with_nodes(nodes)
        .with_mode(mode)
        .with_shots(config.shots, seed);
    sc.sigma0 = config.protocol.sigma0;
    sc
}

const SWAP_COLUMNS: [&str; 15] = [
    "nodes",
    "mode",
    "rank",
    "fidelity_analytic",
    "fidelity_simulated",
    "p0_analytic",
    "p0_simulated",
    "success_analytic",
    "success_simulated",
    "spectrum_analytic",
    "spectrum_simulated",
    "shots",
    "completed",
    "success_empirical",
    "mean_repetitions",
];

fn mode_name(mode: SwapMode) -> &'static str {
    match mode {
        SwapMode::Postselect => "postselect",
        SwapMode::FeedforwardUniform => "feedforward_uniform",
        SwapMode::FeedforwardGeneral => "feedforward_general",
    }
}

/// One protocol run at `nodes` nodes against its closed forms.
fn swap_row(target: &Target, config: &ExperimentConfig, nodes: usize, seed: u64) -> Result<Vec<Cell>, CliError> {
    let mode = config.protocol.mode;
    let lambda = schmidt_decompose(&target.state, &target.partition, DEFAULT_ZERO_TOL)?.coefficients;
    let d = lambda.len();
    let result: SwapResult = run(&swap_config(target, config, nodes, mode, seed))?;
    let shared = schmidt_decompose(&result.shared_state, &target.partition, DEFAULT_ZERO_TOL)?.coefficients;
    let p0_simulated = result.records.last().map(|r| r.probability).unwrap_or(0.0);

    let (f_an, p0_an, success_an, spectrum_an) = match mode {
        SwapMode::Postselect => (
            predicted_fidelity_network(&lambda, nodes)?,
            predicted_postselection_prob(&lambda, nodes)?,
            power_sum(&lambda, (2 * nodes + 1) as f64),
            predicted_shared_coeffs(&lambda, nodes)?,
        ),
        _ => (1.0, 1.0 / (d * d) as f64, 1.0, lambda.clone()),
    };
    check("fidelity", f_an, result.fidelity_to_target)?;
    check("success probability", success_an, result.success_probability)?;
    if mode == SwapMode::Postselect {
        check("acceptance probability", p0_an, p0_simulated)?;
    }

    let stats = result.empirical.as_ref();
    Ok(vec![
        nodes.into(),
        mode_name(mode).into(),
        d.into(),
        f_an.into(),
        result.fidelity_to_target.into(),
        p0_an.into(),
        p0_simulated.into(),
        success_an.into(),
        result.success_probability.into(),
        Cell::list(&spectrum_an),
        Cell::list(&shared),
        config.shots.into(),
        stats.map(|s| s.completed).into(),
        stats.map(|s| s.completed as f64 / s.shots as f64).into(),
        stats.and_then(|s| s.mean_repetitions).into(),
    ])
}

/// A single protocol run with the configured node count and mode.
pub fn cmd_swap(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let target = config.target.build()?;
    let mut table = ResultTable::new(&SWAP_COLUMNS);
    table.push(swap_row(&target, config, config.protocol.nodes, config.seed)?);
    Ok(table)
}

/// One row per chain length `1..=nodes`.
pub fn cmd_network(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let target = config.target.build()?;
    if config.protocol.nodes == 0 {
        return Err(CliError::Config("protocol.nodes must be at least 1".into()));
    }
    let rows: Vec<Vec<Cell>> = (1..=config.protocol.nodes)
        .into_par_iter()
        .map(|k| swap_row(&target, config, k, point_seed(config.seed, k - 1)))
        .collect::<Result<_, _>>()?;
    let mut table = ResultTable::new(&SWAP_COLUMNS);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

/// Closed-form single-node fidelity of the θ family.
pub fn theta_fidelity(theta: f64) -> f64 {
    let c = (theta / 2.0).cos().powi(2);
    let s = (theta / 2.0).sin().powi(2);
    (c * c + s * s) / (c.powi(3) + s.powi(3)).sqrt()
}

/// Noiseless (and optionally noisy) single-node fidelity over a θ grid.
pub fn cmd_theta_sweep(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let section = &config.theta_sweep;
    if section.theta_min < 0.0 || section.theta_max > std::f64::consts::PI || section.theta_min > section.theta_max {
        return Err(CliError::Config("theta grid must lie in [0, π] and be increasing".into()));
    }
    if let Some(noise) = &section.noise {
        noise.validate()?;
    }
    let rows: Vec<Vec<Cell>> = section
        .grid()
        .into_par_iter()
        .enumerate()
        .map(|(i, theta)| -> Result<Vec<Cell>, CliError> {
            let target = TargetSpec::Theta { theta }.build()?;
            let seed = point_seed(config.seed, i);
            let sc = swap_config(&target, config, 1, SwapMode::Postselect, seed);
            let result = run(&sc)?;
            let f_ideal = theta_fidelity(theta);
            let c = (theta / 2.0).cos().powi(2);
            let p0_ideal = c.powi(3) + (1.0 - c).powi(3);
            check("theta fidelity", f_ideal, result.fidelity_to_target)?;
            let noisy = match &section.noise {
                Some(params) => {
                    let sc = sc.clone().with_preparation(target.preparation.clone().expect("theta circuit"));
                    Some(noisy_protocol_run(&sc, params, NoiseMethod::Exact)?)
                }
                None => None,
            };
            let stats = result.empirical.as_ref();
            Ok(vec![
                theta.into(),
                f_ideal.into(),
                result.fidelity_to_target.into(),
                p0_ideal.into(),
                result.success_probability.into(),
                stats.map(|s| s.completed as f64 / s.shots as f64).into(),
                noisy.as_ref().map(|r| r.hellinger_fidelity).into(),
                noisy.as_ref().and_then(|r| r.state_fidelity).into(),
            ])
        })
        .collect::<Result<_, _>>()?;
    let mut table = ResultTable::new(&[
        "theta",
        "fidelity_ideal",
        "fidelity_simulated",
        "p0_ideal",
        "p0_simulated",
        "p0_empirical",
        "hellinger_fidelity_noisy",
        "state_fidelity_noisy",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

struct CircuitSample {
    fidelity: f64,
    p0: f64,
    entropy: f64,
    simulated: Option<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Half-cut analytics over random brickwork states, per system size.
pub fn cmd_random_circuits(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let section = &config.random_circuits;
    if section.samples == 0 {
        return Err(CliError::Config("random_circuits.samples must be positive".into()));
    }
    if let Some(n) = section.sizes.iter().find(|&&n| n < 2 || n % 2 == 1) {
        return Err(CliError::Config(format!("system size {n} must be even and at least 2")));
    }
    let points: Vec<(usize, usize)> = section
        .sizes
        .iter()
        .flat_map(|&n| (0..section.samples).map(move |s| (n, s)))
        .collect();
    let samples: Vec<CircuitSample> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(n, _))| -> Result<CircuitSample, CliError> {
            let spec = BrickworkSpec::new(n, section.cycles_per_qubit * n, point_seed(config.seed, i))?;
            let state = random_brickwork(&spec);
            let partition = QubitPartition::contiguous(n / 2, n / 2)?;
            let lambda = schmidt_spectrum(&state, &partition)?;
            let fidelity = predicted_fidelity_network(&lambda, 1)?;
            let simulated = if n <= section.simulate_max_n {
                let target = Target {
                    state,
                    partition,
                    preparation: None,
                };
                let mut quiet = config.clone();
                quiet.shots = 0;
                let result = run(&swap_config(&target, &quiet, 1, SwapMode::Postselect, 0))?;
                check("random-circuit fidelity", fidelity, result.fidelity_to_target)?;
                Some(result.fidelity_to_target)
            } else {
                None
            };
            Ok(CircuitSample {
                fidelity,
                p0: predicted_postselection_prob(&lambda, 1)?,
                entropy: renyi_entropy(&lambda, 1.0)?,
                simulated,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut table = ResultTable::new(&[
        "n",
        "cycles",
        "samples",
        "mean_fidelity",
        "std_fidelity",
        "mean_p0",
        "std_p0",
        "mean_repetitions",
        "p0_times_2n",
        "mean_entropy",
        "entropy_ratio",
        "mean_fidelity_simulated",
    ]);
    for (chunk, &n) in samples.chunks(section.samples).zip(&section.sizes) {
        let f: Vec<f64> = chunk.iter().map(|s| s.fidelity).collect();
        let p: Vec<f64> = chunk.iter().map(|s| s.p0).collect();
        let reps: Vec<f64> = p.iter().map(|p| 1.0 / p).collect();
        let s: Vec<f64> = chunk.iter().map(|s| s.entropy).collect();
        let sim: Option<Vec<f64>> = chunk.iter().map(|s| s.simulated).collect();
        let (mf, sf) = mean_std(&f);
        let (mp, sp) = mean_std(&p);
        let (ms, _) = mean_std(&s);
        table.push(vec![
            n.into(),
            (section.cycles_per_qubit * n).into(),
            section.samples.into(),
            mf.into(),
            sf.into(),
            mp.into(),
            sp.into(),
            mean_std(&reps).0.into(),
            (mp * 2f64.powi(n as i32)).into(),
            ms.into(),
            (ms / ((n / 2) as f64 * LN_2)).into(),
            sim.map(|v| mean_std(&v).0).into(),
        ]);
    }
    Ok(table)
}

/// Noise sources scanned by [`cmd_noise_scan`].
const NOISE_SOURCES: [&str; 4] = ["eta_1q", "eta_ecr", "idle", "readout"];

/// GHZ single-node fidelity under one noise source at a time.
pub fn cmd_noise_scan(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let section = &config.noise_scan;
    section.base.validate()?;
    if let Some(n) = section.sizes.iter().find(|&&n| n < 2) {
        return Err(CliError::Config(format!("GHZ size {n} must be at least 2")));
    }
    let grids = [&section.eta_1q, &section.eta_ecr, &section.idle_time, &section.readout];
    let points: Vec<(&str, f64, usize)> = NOISE_SOURCES
        .iter()
        .zip(grids)
        .flat_map(|(&source, grid)| {
            grid.iter()
                .flat_map(move |&x| section.sizes.iter().map(move |&n| (source, x, n)))
        })
        .collect();

    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(source, strength, n))| -> Result<Vec<Cell>, CliError> {
            let mut params = section.base.clone();
            match source {
                "eta_1q" => params.eta_1q = strength,
                "eta_ecr" => params.eta_ecr = strength,
                "idle" => {
                    params.t1 = section.pad_t1;
                    params.t2 = section.pad_t2;
                    params.gate_time = strength;
                }
                _ => {
                    params.p01 = strength;
                    params.p10 = strength;
                }
            }
            params.validate()?;
            let target = TargetSpec::Ghz { n, n_a: n / 2 }.build()?;
            let sc = SwapConfig::new(target.state, target.partition)
                .with_preparation(target.preparation.expect("GHZ circuit"));
            let exact = if section.method.exact() {
                Some(noisy_protocol_run(&sc, &params, NoiseMethod::Exact)?)
            } else {
                None
            };
            if let Some(r) = &exact {
                if params == NoiseParams::noiseless() || (strength == 0.0 && section.base == NoiseParams::noiseless()) {
                    check("zero-noise fidelity", 1.0, r.hellinger_fidelity)?;
                }
            }
            let traj = match section.method.trajectories(section.trajectories, point_seed(config.seed, i)) {
                Some(method) => Some(noisy_protocol_run(&sc, &params, method)?),
                None => None,
            };
            let acceptance = exact
                .as_ref()
                .or(traj.as_ref())
                .map(|r| r.acceptance_probability)
                .expect("at least one method runs");
            Ok(vec![
                source.into(),
                strength.into(),
                n.into(),
                exact.as_ref().map(|r| r.hellinger_fidelity).into(),
                exact.as_ref().and_then(|r| r.state_fidelity).into(),
                acceptance.into(),
                traj.as_ref().map(|r| r.hellinger_fidelity).into(),
                traj.as_ref().and_then(|r| r.std_error).into(),
                traj.as_ref().map(|r| r.trajectories).into(),
            ])
        })
        .collect::<Result<_, _>>()?;
    let mut table = ResultTable::new(&[
        "source",
        "strength",
        "n",
        "hellinger_exact",
        "state_fidelity",
        "acceptance_probability",
        "hellinger_trajectories",
        "std_error",
        "trajectories",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

/// Postselection-free sharing: sampled frequency of every accumulated
/// correction class against the exact value `1/d²`.
pub fn cmd_feedforward_demo(config: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let target = config.target.build()?;
    let lambda = schmidt_decompose(&target.state, &target.partition, DEFAULT_ZERO_TOL)?.coefficients;
    let d = lambda.len();
    let mode = match config.protocol.mode {
        SwapMode::Postselect if is_uniform_spectrum(&lambda, UNIFORM_TOLERANCE) => SwapMode::FeedforwardUniform,
        SwapMode::Postselect => SwapMode::FeedforwardGeneral,
        m => m,
    };
    if config.shots == 0 {
        return Err(CliError::Config("feedforward-demo needs shots > 0".into()));
    }
    let sc = swap_config(&target, config, config.protocol.nodes, mode, config.seed);
    let result = run(&sc)?;
    let stats = result.empirical.as_ref().expect("shots were requested");

    let mut exact: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut worst = f64::INFINITY;
    for b in enumerate_branches(&sc)? {
        let totals = b
            .labels
            .as_deref()
            .unwrap_or_default()
            .iter()
            .fold((0, 0), |(m, l), &(mi, li)| ((m + mi) % d, (l + li) % d));
        *exact.entry(totals).or_default() += b.probability;
        worst = worst.min(b.corrected_fidelity.unwrap_or(0.0));
    }
    check("corrected fidelity", 1.0, worst)?;
    let sampled_worst = stats.min_corrected_fidelity.unwrap_or(0.0);
    check("sampled corrected fidelity", 1.0, sampled_worst)?;

    let shots = stats.shots as f64;
    let expected = 1.0 / (d * d) as f64;
    let sigma = (expected * (1.0 - expected) / shots).sqrt();
    let mut chi_square = 0.0;
    let mut table = ResultTable::new(&[
        "m",
        "l",
        "count",
        "frequency",
        "exact_probability",
        "expected",
        "z_score",
    ]);
    for m in 0..d {
        for l in 0..d {
            let count = stats.label_counts.get(&(m, l)).copied().unwrap_or(0);
            let freq = count as f64 / shots;
            chi_square += (count as f64 - shots * expected).powi(2) / (shots * expected);
            table.push(vec![
                m.into(),
                l.into(),
                count.into(),
                freq.into(),
                exact.get(&(m, l)).copied().unwrap_or(0.0).into(),
                expected.into(),
                if sigma > 0.0 { (freq - expected) / sigma } else { 0.0 }.into(),
            ]);
        }
    }
    table.summary.extend([
        ("nodes".to_owned(), config.protocol.nodes as f64),
        ("rank".to_owned(), d as f64),
        ("shots".to_owned(), shots),
        ("chi_square".to_owned(), chi_square),
        ("degrees_of_freedom".to_owned(), (d * d - 1) as f64),
        ("min_corrected_fidelity".to_owned(), sampled_worst),
        ("min_corrected_fidelity_exact".to_owned(), worst),
        ("success_probability".to_owned(), result.success_probability),
        (
            "general_mode".to_owned(),
            f64::from(u8::from(mode == SwapMode::FeedforwardGeneral)),
        ),
    ]);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_closed_form() {
        assert!((theta_fidelity(std::f64::consts::PI / 3.0) - 0.944911182523068).abs() < 1e-12);
        assert!((theta_fidelity(0.0) - 1.0).abs() < 1e-15);
        assert!((theta_fidelity(std::f64::consts::FRAC_PI_2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_swap_row() {
        let mut config = ExperimentConfig::default();
        config.shots = 0;
        let table = cmd_swap(&config).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!((table.column("fidelity_simulated")[0] - 0.3 / 0.1f64.sqrt()).abs() < 1e-9);
        assert!((table.column("p0_simulated")[0] - 0.1).abs() < 1e-9);
    }
}
