//! Gate-level circuits and the target-state generators: GHZ states, the
//! two-qubit θ family, random XYZ brickwork circuits and states with a
//! prescribed Schmidt spectrum.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::schmidt::validate_spectrum;
use crate::state::{insert_zero_bits, validate_qubits, QubitPartition, StateVector, UnitaryMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    /// exp(-iθY/2)
    Ry(usize, f64),
    /// (control, target)
    Cnot(usize, usize),
    /// exp(i(x XX + y YY + z ZZ)) on a qubit pair.
    Xyz(usize, usize, [f64; 3]),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::Ry(q, _) => vec![q],
            Gate::Cnot(c, t) => vec![c, t],
            Gate::Xyz(a, b, _) => vec![a, b],
        }
    }

    pub fn arity(&self) -> usize {
        self.qubits().len()
    }

    /// Matrix in the local basis of [`qubits`](Self::qubits).
    pub fn matrix(&self) -> UnitaryMatrix {
        match *self {
            Gate::H(_) => UnitaryMatrix::hadamard(),
            Gate::X(_) => UnitaryMatrix::pauli_x(),
            Gate::Y(_) => UnitaryMatrix::pauli_y(),
            Gate::Z(_) => UnitaryMatrix::pauli_z(),
            Gate::Ry(_, theta) => UnitaryMatrix::ry(theta),
            Gate::Cnot(..) => UnitaryMatrix::cnot(),
            Gate::Xyz(_, _, [x, y, z]) => xyz_gate(x, y, z),
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Ry(q, theta) => Gate::Ry(q, -theta),
            Gate::Xyz(a, b, [x, y, z]) => Gate::Xyz(a, b, [-x, -y, -z]),
            ref g => g.clone(),
        }
    }

    pub fn remap(&self, map: &[usize]) -> Gate {
        match *self {
            Gate::H(q) => Gate::H(map[q]),
            Gate::X(q) => Gate::X(map[q]),
            Gate::Y(q) => Gate::Y(map[q]),
            Gate::Z(q) => Gate::Z(map[q]),
            Gate::Ry(q, t) => Gate::Ry(map[q], t),
            Gate::Cnot(c, t) => Gate::Cnot(map[c], map[t]),
            Gate::Xyz(a, b, angles) => Gate::Xyz(map[a], map[b], angles),
        }
    }
}

/// An ordered gate list on a fixed register.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        validate_qubits(&gate.qubits(), self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: state.num_qubits(),
            });
        }
        let mut out = state.clone();
        for gate in &self.gates {
            out.apply_unitary_in_place(&gate.matrix(), &gate.qubits())?;
        }
        Ok(out)
    }

    /// The circuit applied to |0…0⟩.
    pub fn run(&self) -> Result<StateVector> {
        self.apply(&StateVector::zero(self.num_qubits))
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Moves qubit `q` to `map[q]` on a register of `num_qubits`.
    pub fn remap(&self, map: &[usize], num_qubits: usize) -> Result<Circuit> {
        let mut out = Circuit::new(num_qubits);
        for g in &self.gates {
            out.push(g.remap(map))?;
        }
        Ok(out)
    }

    /// Appends every gate of `other` (same register).
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        for g in &other.gates {
            self.push(g.clone())?;
        }
        Ok(())
    }

    /// As-soon-as-possible layering; each layer lists gate indices acting on
    /// disjoint qubits.
    pub fn layers(&self) -> Vec<Vec<usize>> {
        let mut depth = vec![0usize; self.num_qubits];
        let mut layers: Vec<Vec<usize>> = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            let qs = g.qubits();
            let level = qs.iter().map(|&q| depth[q]).max().unwrap_or(0);
            if layers.len() <= level {
                layers.push(Vec::new());
            }
            layers[level].push(i);
            for q in qs {
                depth[q] = level + 1;
            }
        }
        layers
    }

    /// Dense unitary of the whole circuit (small registers only).
    pub fn unitary(&self) -> Result<UnitaryMatrix> {
        let dim = 1usize << self.num_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            let col = self.apply(&StateVector::basis(self.num_qubits, c)?)?;
            for (r, a) in col.amplitudes().iter().enumerate() {
                m[(r, c)] = *a;
            }
        }
        UnitaryMatrix::new(m)
    }
}

/// Hadamard on qubit 0 followed by the CNOT chain `i → i+1`.
pub fn ghz_circuit(n: usize) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::ParameterOutOfRange(format!("GHZ needs at least 2 qubits, got {n}")));
    }
    let mut c = Circuit::new(n);
    c.push(Gate::H(0))?;
    for i in 0..n - 1 {
        c.push(Gate::Cnot(i, i + 1))?;
    }
    Ok(c)
}

/// (|0…0⟩ + |1…1⟩)/√2.
pub fn ghz_state(n: usize) -> Result<StateVector> {
    ghz_circuit(n)?.run()
}

/// RY(θ) on qubit 0 then CNOT 0 → 1.
pub fn theta_circuit(theta: f64) -> Result<Circuit> {
    let mut c = Circuit::new(2);
    c.push(Gate::Ry(0, theta))?;
    c.push(Gate::Cnot(0, 1))?;
    Ok(c)
}

/// cos(θ/2)|00⟩ + sin(θ/2)|11⟩.
pub fn theta_state(theta: f64) -> Result<StateVector> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::ParameterOutOfRange(format!("theta {theta} outside [0, pi]")));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    StateVector::from_amplitudes(vec![
        Complex64::new(c, 0.0),
        ZERO,
        ZERO,
        Complex64::new(s, 0.0),
    ])
}

/// exp(i(x XX + y YY + z ZZ)).
///
/// The generators commute and are diagonal in the Bell basis, so the gate
/// splits into two 2×2 blocks on {|00⟩, |11⟩} and {|01⟩, |10⟩}.
pub fn xyz_gate(x: f64, y: f64, z: f64) -> UnitaryMatrix {
    let [even, odd] = xyz_blocks(x, y, z);
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = even[0];
    m[(3, 3)] = even[0];
    m[(0, 3)] = even[1];
    m[(3, 0)] = even[1];
    m[(1, 1)] = odd[0];
    m[(2, 2)] = odd[0];
    m[(1, 2)] = odd[1];
    m[(2, 1)] = odd[1];
    UnitaryMatrix::from_matrix_unchecked(m).expect("4x4")
}

/// `[diag, offdiag]` entries of the {00,11} and {01,10} blocks.
fn xyz_blocks(x: f64, y: f64, z: f64) -> [[Complex64; 2]; 2] {
    let pair = |p: f64, q: f64| {
        let (ep, eq) = (Complex64::from_polar(1.0, p), Complex64::from_polar(1.0, q));
        [(ep + eq) * 0.5, (ep - eq) * 0.5]
    };
    [pair(x - y + z, -x + y + z), pair(x + y - z, -x - y - z)]
}

fn apply_xyz_in_place(amps: &mut [Complex64], q0: usize, q1: usize, angles: [f64; 3]) {
    let [even, odd] = xyz_blocks(angles[0], angles[1], angles[2]);
    let (b0, b1) = (1usize << q0, 1usize << q1);
    let sorted = if q0 < q1 { [q0, q1] } else { [q1, q0] };
    let n = amps.len().trailing_zeros() as usize;
    for rest in 0..1usize << (n - 2) {
        let i00 = insert_zero_bits(rest, &sorted);
        let (i01, i10, i11) = (i00 | b0, i00 | b1, i00 | b0 | b1);
        let (a00, a11) = (amps[i00], amps[i11]);
        amps[i00] = even[0] * a00 + even[1] * a11;
        amps[i11] = even[1] * a00 + even[0] * a11;
        let (a01, a10) = (amps[i01], amps[i10]);
        amps[i01] = odd[0] * a01 + odd[1] * a10;
        amps[i10] = odd[1] * a01 + odd[0] * a10;
    }
}

/// Random XYZ brickwork on an open chain.
///
/// Each cycle applies the layer on bonds (1,2), (3,4), … followed by the
/// layer on bonds (0,1), (2,3), …. Angles are uniform on [−π, π] and drawn
/// from ChaCha8 in cycle, layer, bond, (x, y, z) order.
#[derive(Clone, Debug, PartialEq)]
pub struct BrickworkSpec {
    pub num_qubits: usize,
    pub cycles: usize,
    pub seed: u64,
}

impl BrickworkSpec {
    pub fn new(num_qubits: usize, cycles: usize, seed: u64) -> Result<Self> {
        if num_qubits < 2 {
            return Err(Error::ParameterOutOfRange("brickwork needs at least 2 qubits".into()));
        }
        if cycles == 0 {
            return Err(Error::ParameterOutOfRange("brickwork needs at least one cycle".into()));
        }
        Ok(Self {
            num_qubits,
            cycles,
            seed,
        })
    }

    /// The bond list of one cycle in application order.
    pub fn cycle_bonds(&self) -> Vec<(usize, usize)> {
        let n = self.num_qubits;
        let odd = (1..n.saturating_sub(1)).step_by(2).map(|i| (i, i + 1));
        let even = (0..n - 1).step_by(2).map(|i| (i, i + 1));
        odd.chain(even).collect()
    }

    pub fn circuit(&self) -> Circuit {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let bonds = self.cycle_bonds();
        let mut c = Circuit::new(self.num_qubits);
        for _ in 0..self.cycles {
            for &(a, b) in &bonds {
                let angles = [0; 3].map(|_| rng.random_range(-PI..=PI));
                c.gates.push(Gate::Xyz(a, b, angles));
            }
        }
        c
    }
}

/// The brickwork output state from |0…0⟩.
pub fn random_brickwork(spec: &BrickworkSpec) -> StateVector {
    let circuit = spec.circuit();
    let mut amps = StateVector::zero(spec.num_qubits).into_amplitudes();
    for gate in &circuit.gates {
        if let Gate::Xyz(a, b, angles) = *gate {
            apply_xyz_in_place(&mut amps, a, b, angles);
        }
    }
    StateVector::from_raw(spec.num_qubits, amps)
}

fn random_orthonormal_columns(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, count, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    g.qr().q()
}

/// `Σ √λᵢ |aᵢ⟩ ⊗ |bᵢ⟩` with seeded random orthonormal sets; Alice holds
/// qubits `0..n_a`, Bob `n_a..n_a + n_b`.
pub fn state_with_spectrum(coeffs: &[f64], n_a: usize, n_b: usize, seed: u64) -> Result<StateVector> {
    validate_spectrum(coeffs)?;
    let capacity = 1usize << n_a.min(n_b);
    if coeffs.len() > capacity {
        return Err(Error::RankExceedsCapacity {
            rank: coeffs.len(),
            capacity,
        });
    }
    let partition = QubitPartition::contiguous(n_a, n_b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_orthonormal_columns(1 << n_a, coeffs.len(), &mut rng);
    let b = random_orthonormal_columns(1 << n_b, coeffs.len(), &mut rng);
    let mut amps = vec![ZERO; 1 << (n_a + n_b)];
    for (i, lambda) in coeffs.iter().enumerate() {
        let w = lambda.sqrt();
        for jb in 0..1 << n_b {
            let vb = b[(jb, i)] * w;
            for ja in 0..1 << n_a {
                amps[partition.join_index(ja, jb)] += a[(ja, i)] * vb;
            }
        }
    }
    StateVector::from_amplitudes(amps)
}

/// A seeded random state with independent complex Gaussian amplitudes.
pub fn random_state(num_qubits: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << num_qubits)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::from_amplitudes(amps).expect("non-zero Gaussian vector")
}
