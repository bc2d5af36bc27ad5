//! The swapping protocols: postselected single-node and network runs, and
//! the postselection-free feedforward variants, with exhaustive branch
//! enumeration as the exact reference for shot sampling.
//!
//! Each node works on a two-copy register: the state held so far by Alice
//! and the latest node occupies qubits `0..n` and a fresh copy occupies
//! `n..2n`. Eve takes Bob's qubits of the first copy and Alice's qubits of
//! the second (see [`crate::synth`] for her layout), applies her unitary and
//! measures. The remaining qubits are relabelled back onto the target layout,
//! so every intermediate and final shared state is an `n`-qubit state in the
//! same layout as the target. Outcomes are always reported as target-layout
//! basis indices, i.e. as the `σ` label of the measured basis state.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::rc::Rc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::schmidt::{schmidt_decompose, SchmidtDecomposition, DEFAULT_ZERO_TOL};
use crate::state::{sample_index, QubitPartition, StateVector, UnitaryMatrix};
use crate::synth::{
    build_flattened_unitary, build_target_like_family, complete_unitary_from_column, correction_unitary,
    from_eve_index, is_uniform_spectrum, reorder_for_eve, to_eve_index, TargetLikeFamily,
};

/// Largest two-copy register simulated.
pub const MAX_REGISTER_QUBITS: usize = 24;
/// Largest number of outcome paths enumerated.
pub const MAX_PATHS: usize = 1_000_000;
/// Outcome probability mass outside the decodable set that is dropped
/// silently; anything above is an error.
pub const DECODE_TOLERANCE: f64 = 1e-9;
/// Spectrum flatness required by the uniform feedforward mode.
pub const UNIFORM_TOLERANCE: f64 = 1e-9;
/// Relative residual allowed when matching an r-matrix to a family pattern.
pub const DECODE_RESIDUAL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapMode {
    /// Keep only runs where every node measures `σ₀`.
    Postselect,
    /// Flat target spectrum; every outcome is corrected by Alice.
    FeedforwardUniform,
    /// Arbitrary spectrum; Alice and the intermediate nodes use the
    /// flattened generator and the final node supplies the target copy.
    FeedforwardGeneral,
}

#[derive(Clone, Debug)]
pub struct SwapConfig {
    pub target: StateVector,
    pub partition: QubitPartition,
    /// Number of intermediate nodes, at least 1.
    pub nodes: usize,
    pub mode: SwapMode,
    pub seed: u64,
    /// Sampled shots; zero means exact results only.
    pub shots: usize,
    /// Target-layout basis index `σ₀` with `U|σ₀⟩ = |target⟩`.
    pub sigma0: usize,
    /// Target-layout generator `U`. When absent it is synthesized from the
    /// target column. Not accepted in the general feedforward mode.
    pub generator: Option<UnitaryMatrix>,
    /// Gate-level preparation of the target from |0…0⟩, used by the noisy
    /// simulator.
    pub preparation: Option<Circuit>,
}

impl SwapConfig {
    pub fn new(target: StateVector, partition: QubitPartition) -> Self {
        Self {
            target,
            partition,
            nodes: 1,
            mode: SwapMode::Postselect,
            seed: 0,
            shots: 0,
            sigma0: 0,
            generator: None,
            preparation: None,
        }
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn with_mode(mut self, mode: SwapMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_shots(mut self, shots: usize, seed: u64) -> Self {
        self.shots = shots;
        self.seed = seed;
        self
    }

    pub fn with_generator(mut self, generator: UnitaryMatrix) -> Self {
        self.generator = Some(generator);
        self
    }

    pub fn with_preparation(mut self, circuit: Circuit) -> Self {
        self.preparation = Some(circuit);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    /// 1-based node index.
    pub node: usize,
    /// Target-layout basis index of Eve's outcome.
    pub outcome: usize,
    /// Probability of this outcome conditioned on the earlier nodes.
    pub probability: f64,
    /// `(m, l)` in the feedforward modes.
    pub labels: Option<(usize, usize)>,
    /// Postselect mode: whether the outcome was `σ₀`.
    pub accepted: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShotStatistics {
    pub shots: usize,
    /// Shots that passed every node (always all shots in feedforward modes).
    pub completed: usize,
    /// Outcome counts per node (index 0 is node 1).
    pub node_counts: Vec<BTreeMap<usize, usize>>,
    /// Counts per full outcome path; postselected paths end at the first
    /// rejection.
    pub path_counts: BTreeMap<Vec<usize>, usize>,
    /// Accumulated `(M, L)` counts in the feedforward modes.
    pub label_counts: BTreeMap<(usize, usize), usize>,
    /// `shots / completed`, the empirical mean number of trials per success.
    pub mean_repetitions: Option<f64>,
    /// Worst corrected fidelity over all shots in the feedforward modes.
    pub min_corrected_fidelity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SwapResult {
    /// Postselect: the state after accepting `σ₀` at every node.
    /// Feedforward: the corrected state of the reported path.
    pub shared_state: StateVector,
    pub records: Vec<NodeRecord>,
    /// Postselect: product of the acceptance probabilities. Feedforward:
    /// total probability of decodable paths.
    pub success_probability: f64,
    /// Postselect: |⟨target|shared⟩|. Feedforward: the minimum corrected
    /// fidelity over every outcome path.
    pub fidelity_to_target: f64,
    /// `(M, L)` applied to the reported path.
    pub correction: Option<(usize, usize)>,
    pub empirical: Option<ShotStatistics>,
}

/// One terminal outcome path.
#[derive(Clone, Debug)]
pub struct Branch {
    /// Target-layout outcome per node.
    pub path: Vec<usize>,
    pub labels: Option<Vec<(usize, usize)>>,
    pub probability: f64,
    /// Uncorrected shared state at the end of the path.
    pub shared_state: StateVector,
    /// Postselect: accepted at every node.
    pub accepted: bool,
    /// Feedforward: fidelity after Alice's correction.
    pub corrected_fidelity: Option<f64>,
}

#[derive(Clone, Debug)]
struct Step {
    outcome: usize,
    probability: f64,
    labels: Option<(usize, usize)>,
    accepted: bool,
    state: Option<Rc<StateVector>>,
}

enum Decoder {
    None,
    Family(HashMap<usize, (usize, usize)>),
    RMatrix,
}

/// A validated configuration with every operator built.
struct Plan {
    nodes: usize,
    mode: SwapMode,
    partition: QubitPartition,
    target: StateVector,
    decomposition: SchmidtDecomposition,
    eve_op: UnitaryMatrix,
    eve_qubits: Vec<usize>,
    restore: Vec<usize>,
    alice_copy: StateVector,
    node_copy: StateVector,
    final_copy: StateVector,
    accept_eve: usize,
    decoder: Decoder,
    family: Option<TargetLikeFamily>,
}

impl Plan {
    fn new(config: &SwapConfig) -> Result<Self> {
        let n = config.target.num_qubits();
        if n != config.partition.num_qubits() {
            return Err(Error::InvalidConfig(format!(
                "target has {n} qubits but the partition covers {}",
                config.partition.num_qubits()
            )));
        }
        if 2 * n > MAX_REGISTER_QUBITS {
            return Err(Error::SizeOverflow {
                requested: 2 * n,
                limit: MAX_REGISTER_QUBITS,
            });
        }
        if config.nodes == 0 {
            return Err(Error::InvalidConfig("at least one node is required".into()));
        }
        if config.sigma0 >= 1 << n {
            return Err(Error::InvalidConfig(format!("sigma0 {} out of range", config.sigma0)));
        }
        let partition = config.partition.clone();
        let decomposition = schmidt_decompose(&config.target, &partition, DEFAULT_ZERO_TOL)?;

        if let Some(u) = &config.generator {
            if config.mode == SwapMode::FeedforwardGeneral {
                return Err(Error::InvalidConfig(
                    "the general feedforward mode builds its own generator".into(),
                ));
            }
            if u.num_qubits() != n {
                return Err(Error::InvalidConfig("generator size does not match the target".into()));
            }
            let column = u.column(config.sigma0);
            let dev = column
                .iter()
                .zip(config.target.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if dev > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "generator column sigma0 differs from the target by {dev:e}"
                )));
            }
        }
        if config.mode == SwapMode::FeedforwardUniform
            && !is_uniform_spectrum(&decomposition.coefficients, UNIFORM_TOLERANCE)
        {
            return Err(Error::InvalidConfig(
                "uniform feedforward mode needs a flat Schmidt spectrum".into(),
            ));
        }

        let mut family = None;
        let mut decoder = Decoder::None;
        let generator = match (config.mode, &config.generator) {
            (SwapMode::Postselect, Some(u)) => u.clone(),
            (SwapMode::Postselect, None) => complete_unitary_from_column(&config.target, config.sigma0)?,
            (SwapMode::FeedforwardUniform, Some(u)) => {
                family = Some(build_target_like_family(&decomposition, &partition, config.sigma0)?);
                decoder = Decoder::RMatrix;
                u.clone()
            }
            (_, _) => {
                let fam = build_target_like_family(&decomposition, &partition, config.sigma0)?;
                let u = build_flattened_unitary(&fam)?;
                let d = fam.rank();
                decoder = Decoder::Family(
                    fam.sigma_map
                        .iter()
                        .enumerate()
                        .map(|(t, &s)| (s, (t / d, t % d)))
                        .collect(),
                );
                family = Some(fam);
                u
            }
        };
        let eve_op = reorder_for_eve(&generator.adjoint(), &partition)?;

        let flat = family.as_ref().map(|f| f.state(0, 0).clone());
        let (alice_copy, node_copy) = match (config.mode, flat) {
            (SwapMode::FeedforwardGeneral, Some(flat)) => (flat.clone(), flat),
            _ => (config.target.clone(), config.target.clone()),
        };

        let eve_qubits: Vec<usize> = partition
            .set_b()
            .iter()
            .copied()
            .chain(partition.set_a().iter().map(|&q| n + q))
            .collect();
        let restore: Vec<usize> = partition
            .set_a()
            .iter()
            .chain(partition.set_b())
            .copied()
            .collect();

        Ok(Self {
            nodes: config.nodes,
            mode: config.mode,
            accept_eve: to_eve_index(config.sigma0, &partition),
            partition,
            target: config.target.clone(),
            decomposition,
            eve_op,
            eve_qubits,
            restore,
            alice_copy,
            node_copy,
            final_copy: config.target.clone(),
            decoder,
            family,
        })
    }

    fn copy_for(&self, node: usize) -> &StateVector {
        if node == self.nodes {
            &self.final_copy
        } else {
            &self.node_copy
        }
    }

    fn feedforward(&self) -> bool {
        self.mode != SwapMode::Postselect
    }

    fn register_after_eve(&self, current: &StateVector, node: usize) -> Result<StateVector> {
        let mut register = current.tensor(self.copy_for(node));
        register.apply_unitary_in_place(&self.eve_op, &self.eve_qubits)?;
        Ok(register)
    }

    fn decode(&self, eve_outcome: usize) -> Result<Option<(usize, usize)>> {
        Ok(match &self.decoder {
            Decoder::None => None,
            Decoder::Family(map) => map.get(&from_eve_index(eve_outcome, &self.partition)).copied(),
            Decoder::RMatrix => {
                let r = compute_r_matrix(&self.eve_op, &self.decomposition, eve_outcome)?;
                decode_r_matrix(&r, DECODE_RESIDUAL)
            }
        })
    }

    /// All outcomes of node `node` given the state held before it.
    fn node_steps(&self, current: &StateVector, node: usize) -> Result<Vec<Step>> {
        let register = self.register_after_eve(current, node)?;
        let mut steps = Vec::new();
        let mut lost = 0.0;
        let mut worst = (0, 0.0);
        for (eve_outcome, probability, post) in register.measurement_branches(&self.eve_qubits)? {
            let outcome = from_eve_index(eve_outcome, &self.partition);
            let accepted = eve_outcome == self.accept_eve;
            let labels = self.decode(eve_outcome)?;
            if self.feedforward() && labels.is_none() {
                lost += probability;
                if probability > worst.1 {
                    worst = (outcome, probability);
                }
                continue;
            }
            let keep_state = self.feedforward() || accepted;
            let state = if keep_state {
                Some(Rc::new(post.permute_qubits(&self.restore)?))
            } else {
                None
            };
            steps.push(Step {
                outcome,
                probability,
                labels,
                accepted,
                state,
            });
        }
        if lost > DECODE_TOLERANCE {
            return Err(Error::Undecodable {
                node,
                outcome: worst.0,
                probability: lost,
            });
        }
        Ok(steps)
    }

    fn correct(&self, state: &StateVector, totals: (usize, usize)) -> Result<StateVector> {
        let family = self.family.as_ref().expect("feedforward plan has a family");
        let u = correction_unitary(family, totals.0, totals.1)?;
        state.apply_unitary(&u, self.partition.set_a())
    }

    fn totals(&self, labels: &[(usize, usize)]) -> (usize, usize) {
        let d = self.decomposition.rank();
        labels
            .iter()
            .fold((0, 0), |(m, l), &(mi, li)| ((m + mi) % d, (l + li) % d))
    }
}

/// Single-node postselected run.
pub fn run_single_node(config: &SwapConfig) -> Result<SwapResult> {
    if config.nodes != 1 || config.mode != SwapMode::Postselect {
        return Err(Error::InvalidConfig(
            "single-node run needs nodes = 1 and postselect mode".into(),
        ));
    }
    run_network(config)
}

/// Postselected `k`-node network.
pub fn run_network(config: &SwapConfig) -> Result<SwapResult> {
    if config.mode != SwapMode::Postselect {
        return Err(Error::InvalidConfig("network run needs postselect mode".into()));
    }
    let plan = Plan::new(config)?;
    let mut current = plan.alice_copy.clone();
    let mut records = Vec::with_capacity(plan.nodes);
    let mut success = 1.0;
    for node in 1..=plan.nodes {
        let register = plan.register_after_eve(&current, node)?;
        let (post, probability) = register.measure_and_project(&plan.eve_qubits, plan.accept_eve)?;
        current = post.permute_qubits(&plan.restore)?;
        success *= probability;
        records.push(NodeRecord {
            node,
            outcome: config.sigma0,
            probability,
            labels: None,
            accepted: true,
        });
    }
    let fidelity_to_target = plan.target.overlap(&current)?;
    let empirical = if config.shots > 0 {
        Some(sample(&plan, config.shots, config.seed)?)
    } else {
        None
    };
    Ok(SwapResult {
        shared_state: current,
        records,
        success_probability: success,
        fidelity_to_target,
        correction: None,
        empirical,
    })
}

/// Postselection-free run: every outcome path is enumerated and corrected;
/// sampled shots are drawn when `config.shots > 0`.
pub fn run_feedforward(config: &SwapConfig) -> Result<SwapResult> {
    if config.mode == SwapMode::Postselect {
        return Err(Error::InvalidConfig("feedforward run needs a feedforward mode".into()));
    }
    let plan = Plan::new(config)?;
    let branches = enumerate_plan(&plan)?;
    let success_probability: f64 = branches.iter().map(|b| b.probability).sum();
    let fidelity_to_target = branches
        .iter()
        .filter_map(|b| b.corrected_fidelity)
        .fold(f64::INFINITY, f64::min);

    let empirical = if config.shots > 0 {
        Some(sample(&plan, config.shots, config.seed)?)
    } else {
        None
    };
    // report the most likely path; ties go to the lowest outcome indices
    let reported = branches
        .iter()
        .fold(None::<&Branch>, |best, b| match best {
            Some(x) if x.probability >= b.probability - 1e-15 => Some(x),
            _ => Some(b),
        })
        .expect("at least one branch");
    let labels = reported.labels.clone().unwrap_or_default();
    let totals = plan.totals(&labels);
    let mut conditional = 1.0;
    let mut records = Vec::new();
    let mut current = plan.alice_copy.clone();
    for (i, &outcome) in reported.path.iter().enumerate() {
        let steps = plan.node_steps(&current, i + 1)?;
        let step = steps
            .into_iter()
            .find(|s| s.outcome == outcome)
            .expect("enumerated outcome");
        conditional *= step.probability;
        records.push(NodeRecord {
            node: i + 1,
            outcome,
            probability: step.probability,
            labels: step.labels,
            accepted: step.accepted,
        });
        current = Rc::unwrap_or_clone(step.state.expect("feedforward keeps states"));
    }
    debug_assert!((conditional - reported.probability).abs() < 1e-9);
    Ok(SwapResult {
        shared_state: plan.correct(&current, totals)?,
        records,
        success_probability,
        fidelity_to_target,
        correction: Some(totals),
        empirical,
    })
}

/// Dispatches on the configured mode.
pub fn run(config: &SwapConfig) -> Result<SwapResult> {
    match config.mode {
        SwapMode::Postselect => run_network(config),
        _ => run_feedforward(config),
    }
}

/// Every outcome path with its probability and shared state. Postselected
/// paths end at the first rejected node.
pub fn enumerate_branches(config: &SwapConfig) -> Result<Vec<Branch>> {
    enumerate_plan(&Plan::new(config)?)
}

fn enumerate_plan(plan: &Plan) -> Result<Vec<Branch>> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    let mut labels = Vec::new();
    descend(plan, &plan.alice_copy, 1, 1.0, &mut path, &mut labels, &mut out)?;
    Ok(out)
}

fn descend(
    plan: &Plan,
    current: &StateVector,
    node: usize,
    probability: f64,
    path: &mut Vec<usize>,
    labels: &mut Vec<(usize, usize)>,
    out: &mut Vec<Branch>,
) -> Result<()> {
    for step in plan.node_steps(current, node)? {
        path.push(step.outcome);
        if let Some(l) = step.labels {
            labels.push(l);
        }
        let p = probability * step.probability;
        let terminal = node == plan.nodes || (!plan.feedforward() && !step.accepted);
        if terminal {
            if out.len() >= MAX_PATHS {
                return Err(Error::PathOverflow { limit: MAX_PATHS });
            }
            let shared_state = match &step.state {
                Some(s) => (**s).clone(),
                None => rejected_state(plan, current, node, step.outcome)?,
            };
            let corrected_fidelity = if plan.feedforward() {
                let corrected = plan.correct(&shared_state, plan.totals(labels))?;
                Some(plan.target.overlap(&corrected)?)
            } else {
                None
            };
            out.push(Branch {
                path: path.clone(),
                labels: plan.feedforward().then(|| labels.clone()),
                probability: p,
                shared_state,
                accepted: !plan.feedforward() && step.accepted && node == plan.nodes,
                corrected_fidelity,
            });
        } else {
            let next = step.state.as_ref().expect("continuing steps keep their state");
            descend(plan, next, node + 1, p, path, labels, out)?;
        }
        path.pop();
        if step.labels.is_some() {
            labels.pop();
        }
    }
    Ok(())
}

fn rejected_state(plan: &Plan, current: &StateVector, node: usize, outcome: usize) -> Result<StateVector> {
    let register = plan.register_after_eve(current, node)?;
    let (post, _) = register.measure_and_project(&plan.eve_qubits, to_eve_index(outcome, &plan.partition))?;
    post.permute_qubits(&plan.restore)
}

/// Shot sampling over the branch tree. Shot `s` draws from ChaCha8 seeded
/// with `seed` on stream `s`, so every shot is independent of the others.
fn sample(plan: &Plan, shots: usize, seed: u64) -> Result<ShotStatistics> {
    let mut tree: HashMap<Vec<usize>, Rc<Vec<Step>>> = HashMap::new();
    let mut corrected: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut stats = ShotStatistics {
        shots,
        node_counts: vec![BTreeMap::new(); plan.nodes],
        ..Default::default()
    };
    let root = Rc::new(plan.alice_copy.clone());
    let mut min_fidelity = f64::INFINITY;
    for shot in 0..shots {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shot as u64);
        let mut path = Vec::with_capacity(plan.nodes);
        let mut labels = Vec::with_capacity(plan.nodes);
        let mut current = root.clone();
        let mut completed = true;
        for node in 1..=plan.nodes {
            let steps = match tree.get(&path) {
                Some(s) => s.clone(),
                None => {
                    let s = Rc::new(plan.node_steps(&current, node)?);
                    tree.insert(path.clone(), s.clone());
                    s
                }
            };
            let probs: Vec<f64> = steps.iter().map(|s| s.probability).collect();
            let step = &steps[sample_index(&probs, &mut rng)];
            path.push(step.outcome);
            *stats.node_counts[node - 1].entry(step.outcome).or_default() += 1;
            if let Some(l) = step.labels {
                labels.push(l);
            }
            if !plan.feedforward() && !step.accepted {
                completed = false;
                break;
            }
            if let Some(s) = &step.state {
                current = s.clone();
            }
        }
        if plan.feedforward() {
            let totals = plan.totals(&labels);
            *stats.label_counts.entry(totals).or_default() += 1;
            let f = match corrected.get(&path) {
                Some(&f) => f,
                None => {
                    let f = plan.target.overlap(&plan.correct(&current, totals)?)?;
                    corrected.insert(path.clone(), f);
                    f
                }
            };
            min_fidelity = min_fidelity.min(f);
        }
        if completed {
            stats.completed += 1;
        }
        *stats.path_counts.entry(path).or_default() += 1;
    }
    if plan.feedforward() && shots > 0 {
        stats.min_corrected_fidelity = Some(min_fidelity);
    }
    if !plan.feedforward() && stats.completed > 0 {
        stats.mean_repetitions = Some(shots as f64 / stats.completed as f64);
    }
    Ok(stats)
}

/// `r_ij = ⟨σ_E| U_E (|bᵢ⟩ ⊗ |aⱼ⟩)` for an Eve-layout operator `u_e` and an
/// Eve-layout outcome index; `bᵢ` sits on Eve's low `n_B` qubits.
pub fn compute_r_matrix(
    u_e: &UnitaryMatrix,
    dec: &SchmidtDecomposition,
    outcome: usize,
) -> Result<DMatrix<Complex64>> {
    let dim_a = dec.vectors_a[0].dim();
    let dim_b = dec.vectors_b[0].dim();
    if u_e.dim() != dim_a * dim_b {
        return Err(Error::DimensionMismatch {
            expected: dim_a * dim_b,
            actual: u_e.dim(),
        });
    }
    if outcome >= u_e.dim() {
        return Err(Error::InvalidState(format!("outcome {outcome} out of range")));
    }
    let row = DMatrix::from_fn(dim_b, dim_a, |xb, xa| u_e.matrix()[(outcome, xb + xa * dim_b)]);
    let d = dec.rank();
    let b = DMatrix::from_fn(dim_b, d, |x, i| dec.vectors_b[i].amplitude(x));
    let a = DMatrix::from_fn(dim_a, d, |x, j| dec.vectors_a[j].amplitude(x));
    Ok(b.transpose() * row * a)
}

/// Finds `(m, l)` with `r ∝ ω^{−jl}/√d δ_{i, j+m}`, accepting a residual
/// up to `rel_tol · ‖r‖` after removing the best-fitting multiple.
pub fn decode_r_matrix(r: &DMatrix<Complex64>, rel_tol: f64) -> Option<(usize, usize)> {
    let d = r.nrows();
    let norm = r.norm();
    if norm < 1e-12 {
        return None;
    }
    for m in 0..d {
        for l in 0..d {
            let mut overlap = Complex64::new(0.0, 0.0);
            for j in 0..d {
                let phase = Complex64::from_polar(1.0, TAU * ((j * l) % d) as f64 / d as f64);
                overlap += phase * r[((j + m) % d, j)];
            }
            let overlap = overlap.norm() / (d as f64).sqrt();
            let residual = (norm * norm - overlap * overlap).max(0.0).sqrt();
            if residual <= rel_tol * norm {
                return Some((m, l));
            }
        }
    }
    None
}

/// Bit patterns of Eve's two blocks for a target-layout outcome: the bits
/// on Bob's qubits (first copy) and on Alice's qubits (second copy).
pub fn eve_block_pattern(outcome: usize, partition: &QubitPartition) -> (usize, usize) {
    let eve = to_eve_index(outcome, partition);
    (eve & ((1 << partition.n_b()) - 1), eve >> partition.n_b())
}
