//! Layered R / controlled-R ansatz shared by all three models.
//!
//! One layer holds `n` single-qubit R gates (one per qubit) and `n` controlled-R
//! gates on a ring. Layer `ℓ` (1-based) uses the shift
//! `s = 1 + (ℓ - 1) mod (n - 1)`: control `k`, target `(k + s) mod n`, so the
//! connectivity rotates from layer to layer and never couples a qubit to itself.
//! The gate order inside each layer is shuffled with the circuit seed, then
//! parameter slots are numbered in the final order: gate `k` owns slots
//! `3k, 3k+1, 3k+2`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::NoiseSpec;
use crate::qsim::{DensityMatrix, GateOp, QsimError, QuantumState, Statevector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("a circuit needs at least one layer")]
    NoLayers,
    #[error("a circuit needs at least one qubit")]
    NoQubits,
    #[error("expected {expected} parameters, got {found}")]
    ParamLength { expected: usize, found: usize },
    #[error("decoherence (p = {0}) needs a density-matrix input")]
    NoiseNeedsDensity(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Qsim(#[from] QsimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitFamily {
    Dqnn,
    Ccq,
    Qcl,
}

impl CircuitFamily {
    fn tag(self) -> u64 {
        match self {
            Self::Dqnn => 1,
            Self::Ccq => 2,
            Self::Qcl => 3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Dqnn => "dqnn",
            Self::Ccq => "ccq",
            Self::Qcl => "qcl",
        }
    }
}

/// A gate whose three angles are read from parameter slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateTemplate {
    pub control: Option<usize>,
    pub target: usize,
    pub slots: [usize; 3],
}

impl GateTemplate {
    fn bind(&self, params: &[f64]) -> GateOp {
        let p = [params[self.slots[0]], params[self.slots[1]], params[self.slots[2]]];
        GateOp { target: self.target, control: self.control, params: p }
    }
}

/// Flat trainable parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayeredCircuit {
    family: CircuitFamily,
    n_qubits: usize,
    n_layers: usize,
    seed: u64,
    gates: Vec<GateTemplate>,
}

/// Control/target pairs of the controlled-R gates of layer `layer` (1-based).
pub fn ring_pairs(n_qubits: usize, layer: usize) -> Vec<(usize, usize)> {
    if n_qubits < 2 {
        return Vec::new();
    }
    let shift = 1 + (layer - 1) % (n_qubits - 1);
    (0..n_qubits).map(|k| (k, (k + shift) % n_qubits)).collect()
}

fn build_layered(
    family: CircuitFamily,
    n_qubits: usize,
    n_layers: usize,
    seed: u64,
) -> Result<LayeredCircuit, CircuitError> {
    if n_layers < 1 {
        return Err(CircuitError::NoLayers);
    }
    if n_qubits < 1 {
        return Err(CircuitError::NoQubits);
    }
    let mut gates = Vec::new();
    for layer in 1..=n_layers {
        let mut layer_gates: Vec<(Option<usize>, usize)> = (0..n_qubits).map(|q| (None, q)).collect();
        layer_gates.extend(ring_pairs(n_qubits, layer).into_iter().map(|(c, t)| (Some(c), t)));
        let mut rng = crate::rng::rng_for(seed, &[family.tag(), layer as u64]);
        layer_gates.shuffle(&mut rng);
        for (control, target) in layer_gates {
            let k = gates.len();
            gates.push(GateTemplate { control, target, slots: [3 * k, 3 * k + 1, 3 * k + 2] });
        }
    }
    Ok(LayeredCircuit { family, n_qubits, n_layers, seed, gates })
}

pub fn build_dqnn_circuit(n_qubits: usize, n_layers: usize, seed: u64) -> Result<LayeredCircuit, CircuitError> {
    build_layered(CircuitFamily::Dqnn, n_qubits, n_layers, seed)
}

pub fn build_ccq_circuit(n_qubits: usize, n_layers: usize, seed: u64) -> Result<LayeredCircuit, CircuitError> {
    build_layered(CircuitFamily::Ccq, n_qubits, n_layers, seed)
}

pub fn build_qcl_circuit(n_qubits: usize, n_layers: usize, seed: u64) -> Result<LayeredCircuit, CircuitError> {
    build_layered(CircuitFamily::Qcl, n_qubits, n_layers, seed)
}

impl LayeredCircuit {
    pub fn family(&self) -> CircuitFamily {
        self.family
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn gates(&self) -> &[GateTemplate] {
        &self.gates
    }

    pub fn n_slots(&self) -> usize {
        3 * self.gates.len()
    }

    /// Elementary rotations: three per R block, controlled or not.
    pub fn n_gate(&self) -> usize {
        3 * self.gates.len()
    }

    fn check_len(&self, len: usize) -> Result<(), CircuitError> {
        if len != self.n_slots() {
            return Err(CircuitError::ParamLength { expected: self.n_slots(), found: len });
        }
        Ok(())
    }

    pub fn bind(&self, params: &[f64]) -> Result<Vec<GateOp>, CircuitError> {
        self.check_len(params.len())?;
        Ok(self.bind_unchecked(params))
    }

    pub(crate) fn bind_unchecked(&self, params: &[f64]) -> Vec<GateOp> {
        self.gates.iter().map(|g| g.bind(params)).collect()
    }

    /// Recovers the parameter vector from gates bound by this circuit.
    pub fn read_params(&self, gates: &[GateOp]) -> Result<ParamVector, CircuitError> {
        if gates.len() != self.gates.len() {
            return Err(CircuitError::ParamLength { expected: self.gates.len(), found: gates.len() });
        }
        let mut out = vec![0.0; self.n_slots()];
        for (t, g) in self.gates.iter().zip(gates) {
            for (s, v) in t.slots.iter().zip(g.params) {
                out[*s] = v;
            }
        }
        Ok(ParamVector(out))
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

/// Text format, one directive per line:
///
/// ```text
/// circuit <family> qubits <n> layers <L> seed <s>
/// R  - <target> <slot> <slot> <slot>
/// CR <control> <target> <slot> <slot> <slot>
/// ```
impl fmt::Display for LayeredCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "circuit {} qubits {} layers {} seed {}",
            self.family.name(),
            self.n_qubits,
            self.n_layers,
            self.seed
        )?;
        for g in &self.gates {
            let [a, b, c] = g.slots;
            match g.control {
                None => writeln!(f, "R - {} {a} {b} {c}", g.target)?,
                Some(ctl) => writeln!(f, "CR {ctl} {} {a} {b} {c}", g.target)?,
            }
        }
        Ok(())
    }
}

impl FromStr for LayeredCircuit {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |line: usize, message: &str| CircuitError::Parse { line, message: message.to_string() };
        let mut lines = s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or_else(|| err(1, "empty circuit text"))?;
        let h: Vec<&str> = head.split_whitespace().collect();
        if h.len() != 8 || h[0] != "circuit" || h[2] != "qubits" || h[4] != "layers" || h[6] != "seed" {
            return Err(err(1, "expected `circuit <family> qubits <n> layers <L> seed <s>`"));
        }
        let family = match h[1] {
            "dqnn" => CircuitFamily::Dqnn,
            "ccq" => CircuitFamily::Ccq,
            "qcl" => CircuitFamily::Qcl,
            _ => return Err(err(1, "unknown circuit family")),
        };
        let num = |line: usize, t: &str| t.parse::<usize>().map_err(|_| err(line, "expected an integer"));
        let n_qubits = num(1, h[3])?;
        let n_layers = num(1, h[5])?;
        let seed = h[7].parse::<u64>().map_err(|_| err(1, "bad seed"))?;
        let mut gates = Vec::new();
        for (i, l) in lines {
            let line = i + 1;
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 6 {
                return Err(err(line, "expected 6 fields"));
            }
            let control = match (t[0], t[1]) {
                ("R", "-") => None,
                ("CR", c) => Some(num(line, c)?),
                _ => return Err(err(line, "expected `R -` or `CR <control>`")),
            };
            let target = num(line, t[2])?;
            let slots = [num(line, t[3])?, num(line, t[4])?, num(line, t[5])?];
            let gate = GateTemplate { control, target, slots };
            GateOp { target, control, params: [0.0; 3] }.validate(n_qubits)?;
            gates.push(gate);
        }
        let mut seen = vec![false; 3 * gates.len()];
        for s in gates.iter().flat_map(|g| g.slots) {
            if s >= seen.len() || std::mem::replace(&mut seen[s], true) {
                return Err(err(0, "slot indices are not a bijection onto 0..3·gates"));
            }
        }
        Ok(LayeredCircuit { family, n_qubits, n_layers, seed, gates })
    }
}

/// Runs a bound circuit. With `noise.delta > 0` the parameters are perturbed
/// first (using `noise.seed`); with `noise.p > 0` every controlled-R is followed by
/// the two-qubit depolarizing map, which requires a mixed input.
pub fn run_circuit(
    state: &QuantumState,
    circuit: &LayeredCircuit,
    params: &[f64],
    noise: Option<&NoiseSpec>,
) -> Result<QuantumState, CircuitError> {
    circuit.check_len(params.len())?;
    if state.n_qubits() != circuit.n_qubits {
        return Err(QsimError::RegisterMismatch { expected: circuit.n_qubits, found: state.n_qubits() }.into());
    }
    let perturbed;
    let params = match noise {
        Some(n) if n.delta > 0.0 => {
            perturbed = crate::noise::perturb(params, n);
            &perturbed.0[..]
        }
        _ => params,
    };
    let p = noise.map_or(0.0, |n| n.p);
    let gates = circuit.bind_unchecked(params);
    match state {
        QuantumState::Pure(psi) => {
            if p > 0.0 {
                return Err(CircuitError::NoiseNeedsDensity(p));
            }
            Ok(QuantumState::Pure(run_pure(psi.clone(), &gates)))
        }
        QuantumState::Mixed(rho) => Ok(QuantumState::Mixed(run_mixed(rho.clone(), &gates, p)?)),
    }
}

pub(crate) fn run_pure(mut psi: Statevector, gates: &[GateOp]) -> Statevector {
    for g in gates {
        psi.apply_mat2_unchecked(g.target, g.control, &g.matrix());
    }
    psi
}

pub(crate) fn run_mixed(mut rho: DensityMatrix, gates: &[GateOp], p: f64) -> Result<DensityMatrix, CircuitError> {
    crate::qsim::check_probability(p)?;
    for g in gates {
        rho.conjugate_unchecked(g.target, g.control, &g.matrix());
        if let (Some(c), true) = (g.control, p > 0.0) {
            rho.depolarize_pair_mut(c, g.target, p)?;
        }
    }
    Ok(rho)
}

/// Cost accounting, `C = n_gate · n_obs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub n_gate: usize,
    pub n_obs: usize,
    pub c: usize,
    pub n_copy: usize,
    pub n_data: usize,
    pub n_tot: usize,
    pub n_lay: usize,
}

impl ComplexityReport {
    pub fn new(n_gate: usize, n_obs: usize, n_copy: usize, n_data: usize, n_lay: usize) -> Self {
        Self { n_gate, n_obs, c: n_gate * n_obs, n_copy, n_data, n_tot: n_data * n_copy, n_lay }
    }
}

pub fn complexity(model: &crate::models::ModelSpec) -> ComplexityReport {
    model.complexity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::test_support::{dense_gate, matmul, random_state};
    use num_complex::Complex64 as C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(c: &LayeredCircuit, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..c.n_slots()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
    }

    #[test]
    fn two_qubit_one_layer_counts() {
        let c = build_dqnn_circuit(2, 1, 3).unwrap();
        assert_eq!(c.gates().len(), 4);
        assert_eq!(c.n_slots(), 12);
        assert_eq!(c.n_gate(), 12);
    }

    #[test]
    fn slot_count_and_layer_multiset() {
        for n in 1..=5 {
            for l in 1..=4 {
                for seed in 0..3 {
                    let c = build_ccq_circuit(n, l, seed).unwrap();
                    let expect = if n == 1 { 3 * l } else { 6 * n * l };
                    assert_eq!(c.n_slots(), expect);
                    let mut slots: Vec<usize> = c.gates().iter().flat_map(|g| g.slots).collect();
                    slots.sort_unstable();
                    assert_eq!(slots, (0..expect).collect::<Vec<_>>());
                    let per = if n == 1 { 1 } else { 2 * n };
                    for (li, chunk) in c.gates().chunks(per).enumerate() {
                        let mut got: Vec<_> = chunk.iter().map(|g| (g.control, g.target)).collect();
                        let mut want: Vec<_> = (0..n).map(|q| (None, q)).collect();
                        want.extend(ring_pairs(n, li + 1).into_iter().map(|(a, b)| (Some(a), b)));
                        got.sort_unstable();
                        want.sort_unstable();
                        assert_eq!(got, want);
                    }
                }
            }
        }
    }

    #[test]
    fn ring_never_self_couples() {
        for n in 2..=8 {
            for l in 1..=10 {
                assert!(ring_pairs(n, l).iter().all(|(c, t)| c != t));
            }
        }
        assert_eq!(ring_pairs(3, 1), vec![(0, 1), (1, 2), (2, 0)]);
        assert_eq!(ring_pairs(3, 2), vec![(0, 2), (1, 0), (2, 1)]);
    }

    #[test]
    fn construction_is_deterministic() {
        assert_eq!(build_dqnn_circuit(3, 2, 9).unwrap(), build_dqnn_circuit(3, 2, 9).unwrap());
        assert_eq!(build_ccq_circuit(2, 4, 1).unwrap(), build_ccq_circuit(2, 4, 1).unwrap());
        assert!(matches!(build_qcl_circuit(2, 0, 1), Err(CircuitError::NoLayers)));
    }

    #[test]
    fn bind_and_read_round_trip() {
        let c = build_dqnn_circuit(3, 2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_params(&c, &mut rng);
        let gates = c.bind(&p).unwrap();
        for (k, g) in gates.iter().enumerate() {
            assert_eq!(g.params, [p[3 * k], p[3 * k + 1], p[3 * k + 2]]);
        }
        assert_eq!(c.read_params(&gates).unwrap().0, p);
        assert!(c.bind(&p[1..]).is_err());
        let zero = c.bind(&vec![0.0; c.n_slots()]).unwrap();
        assert!(zero.iter().all(|g| g.params == [0.0; 3]));
    }

    #[test]
    fn identity_circuit_and_norm() {
        let c = build_qcl_circuit(3, 2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi: QuantumState = random_state(3, &mut rng).into();
        let out = run_circuit(&psi, &c, &vec![0.0; c.n_slots()], None).unwrap();
        assert_eq!(out, psi);
        let p = random_params(&c, &mut rng);
        let QuantumState::Pure(out) = run_circuit(&psi, &c, &p, None).unwrap() else { panic!() };
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    fn composed_matrix(c: &LayeredCircuit, p: &[f64]) -> Vec<C64> {
        let n = c.n_qubits();
        let dim = 1 << n;
        let mut u: Vec<C64> = (0..dim * dim).map(|i| C64::new((i % (dim + 1) == 0) as u8 as f64, 0.0)).collect();
        for g in c.bind(p).unwrap() {
            u = matmul(&dense_gate(&g, n), &u, dim);
        }
        u
    }

    #[test]
    fn circuit_matches_explicit_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            let c = build_dqnn_circuit(n, 2, 6).unwrap();
            let p = random_params(&c, &mut rng);
            let u = composed_matrix(&c, &p);
            let dim = 1 << n;
            let psi = random_state(n, &mut rng);
            let QuantumState::Pure(fast) = run_circuit(&psi.clone().into(), &c, &p, None).unwrap() else {
                panic!()
            };
            let slow = crate::qsim::test_support::matvec(&u, psi.amplitudes());
            for (a, b) in fast.amplitudes().iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12);
            }
            // U†U = I
            let udag: Vec<C64> = (0..dim * dim).map(|i| u[(i % dim) * dim + i / dim].conj()).collect();
            let prod = matmul(&udag, &u, dim);
            for r in 0..dim {
                for col in 0..dim {
                    let want = if r == col { 1.0 } else { 0.0 };
                    assert!((prod[r * dim + col] - C64::new(want, 0.0)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn noise_requires_density_input() {
        let c = build_dqnn_circuit(2, 1, 0).unwrap();
        let noise = NoiseSpec::new(0.0, 0.1, 0).unwrap();
        let psi: QuantumState = Statevector::zero(2).into();
        let p = vec![0.3; 12];
        assert!(matches!(run_circuit(&psi, &c, &p, Some(&noise)), Err(CircuitError::NoiseNeedsDensity(_))));
        let rho: QuantumState = Statevector::zero(2).to_density().into();
        let QuantumState::Mixed(out) = run_circuit(&rho, &c, &p, Some(&noise)).unwrap() else { panic!() };
        assert!((out.trace() - 1.0).abs() < 1e-10);
        assert!(out.purity() < 1.0 - 1e-6);
        assert!(run_circuit(&Statevector::zero(3).into(), &c, &p, None).is_err());
    }

    #[test]
    fn text_round_trip() {
        let c = build_ccq_circuit(3, 2, 77).unwrap();
        let text = c.to_text();
        assert!(text.starts_with("circuit ccq qubits 3 layers 2 seed 77\n"));
        let back: LayeredCircuit = text.parse().unwrap();
        assert_eq!(back, c);
        let bad = text.replace("CR", "XX");
        assert!(matches!(bad.parse::<LayeredCircuit>(), Err(CircuitError::Parse { .. })));
    }
}
