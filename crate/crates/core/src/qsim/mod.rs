//! Exact simulation core: statevectors, density matrices, R gates, Pauli
//! observables and the two-qubit depolarizing channel.
//!
//! All operations are pure functions of their inputs. Qubit 0 is the most
//! significant bit of the amplitude index: `|q₀q₁…q_{n-1}>` has index
//! `Σ q_k 2^{n-1-k}`.

mod density;
mod gate;
pub(crate) mod kernel;
mod pauli;
mod state;

pub use density::DensityMatrix;
pub use gate::{r_matrix, r_matrix_derivative, GateKind, GateOp};
pub use kernel::Mat2;
pub use pauli::{Pauli, PauliString};
pub use state::Statevector;

pub(crate) use density::check_probability;

use thiserror::Error;

pub(crate) const NORM_TOL: f64 = 1e-10;
pub(crate) const IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("control qubit {0} equals the target")]
    ControlIsTarget(usize),
    #[error("observable has {observable} letters but the register has {register} qubits")]
    LengthMismatch { observable: usize, register: usize },
    #[error("squared norm / trace {0} is not 1")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("matrix has negative eigenvalue {0}")]
    NotPositive(f64),
    #[error("length {0} is not a power of two of at least 2")]
    BadLength(usize),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("decoherence channel needs a two-qubit controlled gate")]
    NotTwoQubit,
    #[error("expectation value has imaginary part {0}")]
    ComplexExpectation(f64),
    #[error("invalid Pauli letter {0:?}")]
    BadPauli(char),
    #[error("register size mismatch: expected {expected} qubits, got {found}")]
    RegisterMismatch { expected: usize, found: usize },
}

/// Either kind of register state.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(Statevector),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Pure(s) => s.n_qubits(),
            Self::Mixed(r) => r.n_qubits(),
        }
    }

    pub fn expectation(&self, obs: &PauliString) -> Result<f64, QsimError> {
        match self {
            Self::Pure(s) => s.expectation(obs),
            Self::Mixed(r) => r.expectation(obs),
        }
    }

    pub fn into_mixed(self) -> DensityMatrix {
        match self {
            Self::Pure(s) => s.to_density(),
            Self::Mixed(r) => r,
        }
    }
}

impl From<Statevector> for QuantumState {
    fn from(s: Statevector) -> Self {
        Self::Pure(s)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(r: DensityMatrix) -> Self {
        Self::Mixed(r)
    }
}


#[cfg(test)]
mod proptests {
    use super::test_support::*;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn gates_preserve_norm(seed in any::<u64>(), n in 1usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut psi = random_state(n, &mut rng);
            for _ in 0..8 {
                psi.apply_gate_mut(&random_gate(n, &mut rng)).unwrap();
            }
            prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn pauli_expectations_are_bounded(seed in any::<u64>(), n in 1usize..=4, idx in any::<usize>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = random_state(n, &mut rng);
            let obs = PauliString::from_index(n, idx % (1 << (2 * n)));
            let e = psi.expectation(&obs).unwrap();
            prop_assert!(e.abs() <= 1.0 + 1e-9);
            if obs.is_identity() {
                prop_assert_eq!(e, 1.0);
            }
        }

        #[test]
        fn mixed_gate_matches_pure_gate(seed in any::<u64>(), n in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = random_state(n, &mut rng);
            let g = random_gate(n, &mut rng);
            let a = psi.apply_gate(&g).unwrap().to_density();
            let b = psi.to_density().apply_gate(&g).unwrap();
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
