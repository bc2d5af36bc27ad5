//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and then
//! asserts. Tests hold a shared lock so the runtime bounds are measured
//! without other criteria competing for the CPU.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use mbswap::circuits::{ghz_circuit, ghz_state, random_brickwork, random_state, state_with_spectrum, theta_state, BrickworkSpec};
use mbswap::noise::{
    amplitude_damping_channel, depolarizing_channel, ecr_channel, noisy_protocol_run, pad_channel,
    phase_damping_channel, ConfusionMatrix, KrausChannel, NoiseMethod, NoiseParams, TRACE_TOLERANCE,
};
use mbswap::protocol::{enumerate_branches, run_feedforward, run_network, run_single_node, SwapConfig, SwapMode};
use mbswap::schmidt::{
    fidelity_from_moments, deviation_moments, perturbative_fidelity, power_sum, predicted_fidelity_single,
    predicted_postselection_prob, predicted_shared_coeffs, schmidt_spectrum,
};
use mbswap::QubitPartition;
use mbswap_cli::config::ScanMethod;
use mbswap_cli::{cmd_noise_scan, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

const WORKED_SPECTRUM: [f64; 4] = [0.4, 0.3, 0.2, 0.1];

/// Collects sub-check outcomes for one criterion.
struct Criterion {
    id: &'static str,
    start: Instant,
    limit: Option<Duration>,
    failures: Vec<String>,
    checks: usize,
}

impl Criterion {
    fn new(id: &'static str, limit_secs: Option<f64>) -> Self {
        Self {
            id,
            start: Instant::now(),
            limit: limit_secs.map(Duration::from_secs_f64),
            failures: Vec::new(),
            checks: 0,
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn close(&mut self, label: &str, expected: f64, actual: f64, tol: f64) {
        self.check((expected - actual).abs() <= tol, || {
            format!("{label}: expected {expected} ± {tol}, got {actual}")
        });
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed();
        if let Some(limit) = self.limit {
            self.check(elapsed < limit, || format!("runtime {elapsed:.2?} exceeds {limit:.2?}"));
        }
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("{status} {} ({} checks, {elapsed:.2?})", self.id, self.checks);
        for f in &self.failures {
            println!("    {f}");
        }
        assert!(self.failures.is_empty(), "{} failed: {:?}", self.id, self.failures);
    }
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn worked_config() -> SwapConfig {
    let target = state_with_spectrum(&WORKED_SPECTRUM, 2, 2, 7).unwrap();
    SwapConfig::new(target, QubitPartition::contiguous(2, 2).unwrap())
}

/// Binomial standard error of a frequency estimated from `shots` samples.
fn sigma(p: f64, shots: usize) -> f64 {
    (p * (1.0 - p) / shots as f64).sqrt()
}

#[test]
fn c1_worked_example() {
    let _guard = lock();
    let mut c = Criterion::new("C1 worked example", Some(1.0));
    let r = run_single_node(&worked_config()).unwrap();
    c.close("fidelity vs 0.95", 0.95, r.fidelity_to_target, 0.005);
    c.close("fidelity vs 0.3/sqrt(0.1)", 0.3 / 0.1f64.sqrt(), r.fidelity_to_target, 1e-9);
    c.close("p0", 0.1, r.success_probability, 1e-9);
    let spectrum = schmidt_spectrum(&r.shared_state, &QubitPartition::contiguous(2, 2).unwrap()).unwrap();
    c.check(spectrum.len() == 4, || format!("shared rank {}", spectrum.len()));
    for (i, (got, want)) in spectrum.iter().zip([0.64, 0.27, 0.08, 0.01]).enumerate() {
        c.close(&format!("shared lambda_{i}"), want, *got, 1e-9);
    }
    c.finish();
}

#[test]
fn c2_ghz_outcome_classes() {
    let _guard = lock();
    let mut c = Criterion::new("C2 GHZ outcome classes", Some(10.0));
    const SHOTS: usize = 10_000;
    for n in 2..=6 {
        let n_a = n / 2;
        let cfg = SwapConfig::new(ghz_state(n).unwrap(), QubitPartition::contiguous(n_a, n - n_a).unwrap())
            .with_mode(SwapMode::FeedforwardUniform)
            .with_generator(ghz_circuit(n).unwrap().unitary().unwrap())
            .with_shots(SHOTS, 100 + n as u64);
        let branches = enumerate_branches(&cfg).unwrap();
        c.check(branches.len() == 4, || format!("n={n}: {} outcomes", branches.len()));

        // The generator's inverse leaves at most the phase bit on qubit 0 and
        // the block-parity bit on qubit n_A; those two bits name the class.
        let mut classes = Vec::new();
        for b in &branches {
            let outcome = b.path[0];
            c.check(outcome & !(1 | 1 << n_a) == 0, || format!("n={n}: outcome {outcome:b} outside the class bits"));
            classes.push((outcome & 1, (outcome >> n_a) & 1));
            c.close(&format!("n={n} outcome {outcome:b} probability"), 0.25, b.probability, 1e-9);
            c.close(&format!("n={n} outcome {outcome:b} corrected fidelity"), 1.0, b.corrected_fidelity.unwrap_or(0.0), 1e-9);
        }
        classes.sort_unstable();
        c.check(classes == [(0, 0), (0, 1), (1, 0), (1, 1)], || format!("n={n}: classes {classes:?}"));

        let stats = run_feedforward(&cfg).unwrap().empirical.unwrap();
        let counts = &stats.node_counts[0];
        c.check(counts.values().sum::<usize>() == SHOTS, || format!("n={n}: shot total"));
        for b in &branches {
            let freq = counts.get(&b.path[0]).copied().unwrap_or(0) as f64 / SHOTS as f64;
            let s = sigma(0.25, SHOTS);
            c.check((freq - 0.25).abs() <= 3.0 * s, || {
                format!("n={n}: outcome {:b} frequency {freq} outside 0.25 ± 3σ ({s})", b.path[0])
            });
        }
        c.check(counts.keys().all(|o| branches.iter().any(|b| b.path[0] == *o)), || {
            format!("n={n}: sampled an outcome outside the enumerated set")
        });
        c.close(&format!("n={n} sampled corrected fidelity"), 1.0, stats.min_corrected_fidelity.unwrap_or(0.0), 1e-9);
    }
    c.finish();
}

#[test]
fn c3_network_recursion() {
    let _guard = lock();
    let mut c = Criterion::new("C3 network recursion", Some(10.0));
    let partition = QubitPartition::contiguous(2, 2).unwrap();
    for k in 1..=3 {
        let r = run_network(&worked_config().with_nodes(k)).unwrap();
        let spectrum = schmidt_spectrum(&r.shared_state, &partition).unwrap();
        let norm = power_sum(&WORKED_SPECTRUM, (2 * k + 1) as f64);
        for (i, (&got, &l)) in spectrum.iter().zip(&WORKED_SPECTRUM).enumerate() {
            c.close(&format!("k={k} lambda_{i}"), l.powi(2 * k as i32 + 1) / norm, got, 1e-9);
        }
        c.check(r.records.len() == k, || format!("k={k}: {} node records", r.records.len()));
        for rec in &r.records {
            let j = rec.node as i32;
            let expected =
                power_sum(&WORKED_SPECTRUM, (2 * j + 1) as f64) / power_sum(&WORKED_SPECTRUM, (2 * j - 1) as f64);
            c.close(&format!("k={k} node {j} acceptance"), expected, rec.probability, 1e-9);
        }
        c.close(&format!("k={k} total success"), norm, r.success_probability, 1e-9);
    }
    c.finish();
}

#[test]
fn c4_theta_sweep() {
    let _guard = lock();
    let mut c = Criterion::new("C4 theta sweep", Some(5.0));
    let partition = QubitPartition::contiguous(1, 1).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let theta = PI / 2.0 * i as f64 / 49.0;
        let (s, co) = ((theta / 2.0).sin(), (theta / 2.0).cos());
        let cfg = SwapConfig::new(theta_state(theta).unwrap(), partition.clone());
        let sim = run_single_node(&cfg).unwrap().fidelity_to_target;
        let formula = (co.powi(4) + s.powi(4)) / (co.powi(6) + s.powi(6)).sqrt();
        worst = worst.max((sim - formula).abs());
    }
    c.check(worst <= 1e-9, || format!("max |F_sim - F_formula| = {worst:e}"));
    c.finish();
}

#[test]
fn c5_random_circuits() {
    let _guard = lock();
    let mut c = Criterion::new("C5 random circuits", Some(60.0));
    const SEEDS: u64 = 20;
    for n in (4..=18).step_by(2) {
        let partition = QubitPartition::contiguous(n / 2, n / 2).unwrap();
        let (mut fid, mut p0, mut reps) = (0.0, 0.0, 0.0);
        for seed in 0..SEEDS {
            let spec = BrickworkSpec::new(n, 2 * n, seed).unwrap();
            let lambda = schmidt_spectrum(&random_brickwork(&spec), &partition).unwrap();
            let p = predicted_postselection_prob(&lambda, 1).unwrap();
            fid += predicted_fidelity_single(&lambda).unwrap();
            p0 += p;
            reps += 1.0 / p;
        }
        let (fid, p0, reps) = (fid / SEEDS as f64, p0 / SEEDS as f64, reps / SEEDS as f64);
        let ratio = p0 * 2f64.powi(n as i32);
        println!("    n={n:2} mean F={fid:.4} mean p0={p0:.3e} p0*2^n={ratio:.3} mean 1/p0={reps:.4e}");
        c.check((1.0 / 3.0..=3.0).contains(&ratio), || {
            format!("n={n}: mean p0 = {ratio:.3} x 2^-n, outside a factor 3")
        });
        if n == 18 {
            c.check((0.85..=0.95).contains(&fid), || format!("n=18: mean fidelity {fid:.4} outside [0.85, 0.95]"));
            let r = reps / 2.6e5;
            c.check((1.0 / 3.0..=3.0).contains(&r), || {
                format!("n=18: mean repetitions {reps:.4e} = {r:.3} x 2.6e5, outside a factor 3")
            });
        }
    }
    c.finish();
}

#[test]
fn c6_postselection_free_totality() {
    let _guard = lock();
    let mut c = Criterion::new("C6 postselection-free totality", Some(30.0));
    let flat2 = state_with_spectrum(&[0.5, 0.5], 1, 1, 3).unwrap();
    let flat4 = state_with_spectrum(&[0.25; 4], 2, 2, 3).unwrap();
    let skew2 = theta_state(PI / 5.0).unwrap();
    let skew4 = state_with_spectrum(&WORKED_SPECTRUM, 2, 2, 7).unwrap();
    let cases = [
        (SwapMode::FeedforwardUniform, flat2, 1, 2usize),
        (SwapMode::FeedforwardUniform, flat4, 2, 4),
        (SwapMode::FeedforwardGeneral, skew2, 1, 2),
        (SwapMode::FeedforwardGeneral, skew4, 2, 4),
    ];
    for (mode, target, n_a, d) in cases {
        let partition = QubitPartition::contiguous(n_a, n_a).unwrap();
        for k in 1..=3 {
            let cfg = SwapConfig::new(target.clone(), partition.clone()).with_mode(mode).with_nodes(k);
            let branches = enumerate_branches(&cfg).unwrap();
            let tag = format!("{mode:?} d={d} k={k}");
            let per_node = 1.0 / (d * d) as f64;
            c.check(branches.len() == (d * d).pow(k as u32), || format!("{tag}: {} branches", branches.len()));
            let mut total = 0.0;
            let mut classes: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            let mut worst_prob: f64 = 0.0;
            let mut worst_fid: f64 = 0.0;
            let mut undecoded = 0;
            for b in &branches {
                match &b.labels {
                    Some(labels) if labels.len() == k => {
                        let key = labels.iter().fold((0, 0), |(m, l), &(mi, li)| ((m + mi) % d, (l + li) % d));
                        *classes.entry(key).or_default() += b.probability;
                    }
                    _ => undecoded += 1,
                }
                total += b.probability;
                worst_prob = worst_prob.max((b.probability - per_node.powi(k as i32)).abs());
                worst_fid = worst_fid.max((1.0 - b.corrected_fidelity.unwrap_or(0.0)).abs());
            }
            c.check(undecoded == 0, || format!("{tag}: {undecoded} outcomes failed to decode"));
            c.check(worst_prob <= 1e-9, || format!("{tag}: per-outcome probability off by {worst_prob:e}"));
            c.close(&format!("{tag} total probability"), 1.0, total, 1e-9);
            c.check(classes.len() == d * d, || format!("{tag}: {} (M, L) classes", classes.len()));
            for (key, p) in &classes {
                c.close(&format!("{tag} class {key:?}"), per_node, *p, 1e-9);
            }
            c.check(worst_fid <= 1e-9, || format!("{tag}: corrected fidelity off by {worst_fid:e}"));
        }
    }
    c.finish();
}

#[test]
fn c7_oracle_equivalence() {
    let _guard = lock();
    let mut c = Criterion::new("C7 oracle equivalence", None);
    const SHOTS: usize = 10_000;
    let targets = [(4, 1), (4, 2), (5, 3), (5, 4), (6, 5), (6, 6), (7, 7), (7, 8), (8, 9), (8, 10)];
    let mut z_scores = Vec::new();
    for (n, seed) in targets {
        let partition = QubitPartition::contiguous(n / 2, n - n / 2).unwrap();
        let target = random_state(n, seed);
        let lambda = schmidt_spectrum(&target, &partition).unwrap();
        let cfg = SwapConfig::new(target, partition.clone()).with_shots(SHOTS, 1000 + seed);
        let tag = format!("n={n} seed={seed}");

        let r = run_single_node(&cfg).unwrap();
        c.close(&format!("{tag} fidelity"), predicted_fidelity_single(&lambda).unwrap(), r.fidelity_to_target, 1e-9);
        c.close(&format!("{tag} p0"), predicted_postselection_prob(&lambda, 1).unwrap(), r.success_probability, 1e-9);
        let shared = schmidt_spectrum(&r.shared_state, &partition).unwrap();
        for (i, (got, want)) in shared.iter().zip(predicted_shared_coeffs(&lambda, 1).unwrap()).enumerate() {
            c.close(&format!("{tag} shared lambda_{i}"), want, *got, 1e-9);
        }

        let branches = enumerate_branches(&cfg).unwrap();
        let exact: BTreeMap<usize, f64> = branches.iter().map(|b| (b.path[0], b.probability)).collect();
        let counts = &r.empirical.as_ref().unwrap().node_counts[0];
        c.check(counts.keys().all(|o| exact.contains_key(o)), || format!("{tag}: sampled an unenumerated outcome"));
        for (&outcome, &p) in &exact {
            let freq = counts.get(&outcome).copied().unwrap_or(0) as f64 / SHOTS as f64;
            let s = sigma(p, SHOTS);
            z_scores.push((freq - p) / s);
            c.check((freq - p).abs() <= 3.0 * s, || {
                format!("{tag}: outcome {outcome} frequency {freq} vs {p:.6} (3σ = {:.2e})", 3.0 * s)
            });
        }
    }
    let m = z_scores.len() as f64;
    let mean = z_scores.iter().sum::<f64>() / m;
    let var = z_scores.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / m;
    let beyond = z_scores.iter().filter(|z| z.abs() > 3.0).count();
    println!(
        "    {m} outcomes: z mean {mean:.3}, z variance {var:.3}, {beyond} beyond 3σ (chance alone expects {:.1})",
        m * 0.0027
    );
    c.finish();
}

#[test]
fn c8_noise_suite() {
    let _guard = lock();
    let mut c = Criterion::new("C8 noise suite", Some(60.0));

    let mut channels: Vec<KrausChannel> = Vec::new();
    for eta in [0.0, 1e-3, 0.01, 0.5, 1.0, 4.0 / 3.0] {
        channels.push(depolarizing_channel(eta).unwrap());
        channels.push(ecr_channel(eta).unwrap());
    }
    for g in [0.0, 1e-4, 0.3, 1.0] {
        channels.push(amplitude_damping_channel(g).unwrap());
        channels.push(phase_damping_channel(g).unwrap());
    }
    for (t1, t2) in [(150.0, 120.0), (100.0, 200.0), (50.0, 10.0), (f64::INFINITY, f64::INFINITY)] {
        for t in [0.0, 0.06, 1.0, 100.0] {
            channels.push(pad_channel(t1, t2, t).unwrap());
        }
    }
    let worst = channels.iter().map(KrausChannel::trace_deviation).fold(0.0, f64::max);
    c.check(worst <= TRACE_TOLERANCE, || format!("channel trace deviation {worst:e}"));
    for p in [0.0, 0.01, 0.2, 0.5] {
        let m = ConfusionMatrix::new(p, 0.5 * p).unwrap().matrix();
        for sum in [m[0][0] + m[1][0], m[0][1] + m[1][1]] {
            c.close("confusion column sum", 1.0, sum, 1e-12);
        }
    }

    // Zero-noise density evolution against the pure-state protocol.
    let noiseless = NoiseParams::noiseless();
    let mut prepared = Vec::new();
    for n in 2..=5 {
        prepared.push((ghz_state(n).unwrap(), ghz_circuit(n).unwrap(), n / 2));
    }
    for theta in [PI / 7.0, PI / 3.0] {
        let circuit = mbswap::circuits::theta_circuit(theta).unwrap();
        prepared.push((circuit.run().unwrap(), circuit, 1));
    }
    for (state, circuit, n_a) in prepared {
        let n = state.num_qubits();
        let cfg = SwapConfig::new(state, QubitPartition::contiguous(n_a, n - n_a).unwrap()).with_preparation(circuit);
        let pure = run_single_node(&cfg).unwrap();
        let mixed = noisy_protocol_run(&cfg, &noiseless, NoiseMethod::Exact).unwrap();
        c.close(&format!("n={n} zero-noise state fidelity"), pure.fidelity_to_target, mixed.state_fidelity.unwrap(), 1e-9);
        c.close(&format!("n={n} zero-noise acceptance"), pure.success_probability, mixed.acceptance_probability, 1e-9);
        let gap = mixed
            .noisy
            .probabilities()
            .iter()
            .zip(mixed.ideal.probabilities())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        c.check(gap <= 1e-9, || format!("n={n}: zero-noise distribution differs by {gap:e}"));
    }

    // Trajectories against exact evolution.
    let params = NoiseParams {
        eta_1q: 0.01,
        eta_ecr: 0.03,
        t1: 150.0,
        t2: 120.0,
        gate_time: 2.0,
        p01: 0.02,
        p10: 0.01,
    };
    let cfg = SwapConfig::new(ghz_state(2).unwrap(), QubitPartition::contiguous(1, 1).unwrap())
        .with_preparation(ghz_circuit(2).unwrap());
    let exact = noisy_protocol_run(&cfg, &params, NoiseMethod::Exact).unwrap();
    let traj = noisy_protocol_run(&cfg, &params, NoiseMethod::Trajectories { count: 10_000, seed: 8 }).unwrap();
    let s = traj.std_error.unwrap();
    println!(
        "    GHZ n=2 Hellinger exact {:.6} trajectories {:.6} ± {s:.2e}",
        exact.hellinger_fidelity, traj.hellinger_fidelity
    );
    c.check((exact.hellinger_fidelity - traj.hellinger_fidelity).abs() <= 3.0 * s, || {
        format!(
            "trajectory Hellinger {} vs exact {} exceeds 3σ = {:.2e}",
            traj.hellinger_fidelity,
            exact.hellinger_fidelity,
            3.0 * s
        )
    });

    // Monotone decay along the default grids.
    let mut config = ExperimentConfig::default();
    config.noise_scan.method = ScanMethod::Exact;
    let table = cmd_noise_scan(&config).unwrap();
    let (src, strength, size) = (
        table.column_index("source").unwrap(),
        table.column_index("strength").unwrap(),
        table.column_index("n").unwrap(),
    );
    // (source, n) -> (strength, Hellinger, state fidelity)
    type Series = BTreeMap<(String, i64), Vec<(f64, f64, f64)>>;
    let mut series = Series::new();
    let (h, f) = (table.column_index("hellinger_exact").unwrap(), table.column_index("state_fidelity").unwrap());
    for row in &table.rows {
        series.entry((row[src].to_string(), row[size].as_f64().unwrap() as i64)).or_default().push((
            row[strength].as_f64().unwrap(),
            row[h].as_f64().unwrap(),
            row[f].as_f64().unwrap(),
        ));
    }
    for ((source, n), mut points) in series {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            c.check(w[1].1 <= w[0].1 + 1e-12, || {
                format!("{source} n={n}: Hellinger rises from {} to {} at {}", w[0].1, w[1].1, w[1].0)
            });
            c.check(w[1].2 <= w[0].2 + 1e-12, || {
                format!("{source} n={n}: state fidelity rises from {} to {} at {}", w[0].2, w[1].2, w[1].0)
            });
        }
    }
    c.finish();
}

/// Spectrum on four levels with `d²ε̄² = d³ε̄³ = 1`: deviations
/// `½(cos t·u − sin t·w)` with `t` bisected on the third moment.
fn anchor_spectrum() -> [f64; 4] {
    let u = [1.0, -1.0, 0.0, 0.0].map(|x: f64| x / 2f64.sqrt());
    let w = [1.0, 1.0, 1.0, -3.0].map(|x: f64| x / 12f64.sqrt());
    let eps = |t: f64| -> [f64; 4] { std::array::from_fn(|i| 0.5 * (t.cos() * u[i] - t.sin() * w[i])) };
    let third = |t: f64| eps(t).iter().map(|e| e.powi(3)).sum::<f64>() - 1.0 / 16.0;
    let (mut lo, mut hi) = (0.0, PI / 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if third(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    eps(0.5 * (lo + hi)).map(|e| 0.25 + e)
}

#[test]
fn c9_perturbative_expansion() {
    let _guard = lock();
    let mut c = Criterion::new("C9 perturbative expansion", None);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    for d in [2usize, 3, 4, 8, 16, 64, 256] {
        for target in [1e-6, 1e-4, 1e-3, 5e-3, 1e-2] {
            let raw: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
            let mean = raw.iter().sum::<f64>() / d as f64;
            let centred: Vec<f64> = raw.iter().map(|x| x - mean).collect();
            let var = centred.iter().map(|x| x * x).sum::<f64>() / d as f64;
            let scale = (target / (d * d) as f64 / var).sqrt();
            let spectrum: Vec<f64> = centred.iter().map(|x| 1.0 / d as f64 + scale * x).collect();
            if spectrum.iter().any(|&l| l <= 0.0) {
                continue;
            }
            let total: f64 = spectrum.iter().sum();
            let spectrum: Vec<f64> = spectrum.iter().map(|l| l / total).collect();
            let (_, v, _) = deviation_moments(&spectrum).unwrap();
            c.check((d * d) as f64 * v <= 0.01 + 1e-12, || format!("d={d}: d²ε̄² = {}", (d * d) as f64 * v));
            let gap = (perturbative_fidelity(&spectrum).unwrap() - predicted_fidelity_single(&spectrum).unwrap()).abs();
            worst = worst.max(gap);
            samples += 1;

            if d <= 4 && d.is_power_of_two() {
                let half = d.trailing_zeros() as usize;
                let state = state_with_spectrum(&spectrum, half, half, d as u64).unwrap();
                let sim = run_single_node(&SwapConfig::new(state, QubitPartition::contiguous(half, half).unwrap()))
                    .unwrap()
                    .fidelity_to_target;
                worst = worst.max((perturbative_fidelity(&spectrum).unwrap() - sim).abs());
            }
        }
    }
    println!("    {samples} spectra, max |F_pert - F_exact| = {worst:e}");
    c.check(samples >= 30, || format!("only {samples} admissible spectra"));
    c.check(worst <= 1e-4, || format!("max perturbative error {worst:e}"));

    let anchor = 2.0 / 5f64.sqrt();
    c.close("anchor from moments", anchor, fidelity_from_moments(4, 1.0 / 16.0, 1.0 / 64.0), 1e-12);
    let spectrum = anchor_spectrum();
    let (d, v, s) = deviation_moments(&spectrum).unwrap();
    c.check(d == 4, || format!("anchor rank {d}"));
    c.close("anchor d²ε̄²", 1.0, 16.0 * v, 1e-12);
    c.close("anchor d³ε̄³", 1.0, 64.0 * s, 1e-12);
    c.close("anchor perturbative", anchor, perturbative_fidelity(&spectrum).unwrap(), 1e-12);
    c.close("anchor exact", anchor, predicted_fidelity_single(&spectrum).unwrap(), 1e-12);
    c.finish();
}
