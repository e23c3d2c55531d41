use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::kernel::{self, Mat2};
use super::{DensityMatrix, GateOp, PauliString, QsimError, IMAG_TOL, NORM_TOL};

/// A pure state of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<C64>,
}

pub(crate) fn qubits_for_len(len: usize) -> Result<usize, QsimError> {
    if len < 2 || !len.is_power_of_two() {
        return Err(QsimError::BadLength(len));
    }
    Ok(len.trailing_zeros() as usize)
}

impl Statevector {
    /// `|0…0>`.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(n_qubits >= 1, "register needs at least one qubit");
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = C64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, QsimError> {
        let n_qubits = qubits_for_len(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn from_real(values: &[f64]) -> Result<Self, QsimError> {
        Self::from_amplitudes(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// Builds a state without the normalization check. Callers guarantee the invariant.
    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }


    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply_gate(&self, gate: &GateOp) -> Result<Statevector, QsimError> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    pub fn apply_gate_mut(&mut self, gate: &GateOp) -> Result<(), QsimError> {
        gate.validate(self.n_qubits)?;
        self.apply_mat2_unchecked(gate.target, gate.control, &gate.matrix());
        Ok(())
    }

    pub(crate) fn apply_mat2_unchecked(&mut self, target: usize, control: Option<usize>, m: &Mat2) {
        kernel::apply_mat2(&mut self.amps, self.n_qubits, target, control, m);
    }

    /// Applies a dense `dim x dim` row-major matrix. Used for fixed circuits.
    pub(crate) fn apply_dense_unchecked(&mut self, matrix: &[C64]) {
        let dim = self.amps.len();
        let out: Vec<C64> = (0..dim)
            .map(|r| {
                matrix[r * dim..(r + 1) * dim]
                    .iter()
                    .zip(&self.amps)
                    .map(|(m, a)| m * a)
                    .sum()
            })
            .collect();
        self.amps = out;
    }

    pub fn expectation(&self, obs: &PauliString) -> Result<f64, QsimError> {
        obs.check_len(self.n_qubits)?;
        if obs.is_identity() {
            // states are normalized, so skip the rounding in Σ|a|²
            return Ok(1.0);
        }
        let m = obs.masks();
        let mut acc = C64::new(0.0, 0.0);
        for (i, &a) in self.amps.iter().enumerate() {
            acc += self.amps[i ^ m.flip].conj() * m.phase(i) * a;
        }
        finish_expectation(acc)
    }

    /// `|self><self|`.
    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// Kronecker product; `self` occupies the leading (most significant) qubits.
    pub fn tensor(&self, other: &Statevector) -> Statevector {
        Statevector {
            n_qubits: self.n_qubits + other.n_qubits,
            amps: kernel::kron(&self.amps, &other.amps),
        }
    }

    /// Multiplies by a global phase so the first amplitude with modulus above
    /// `tol` is real and positive.
    pub fn fix_global_phase(&mut self, tol: f64) {
        if let Some(first) = self.amps.iter().find(|a| a.norm() > tol) {
            let phase = first.conj() / first.norm();
            for a in &mut self.amps {
                *a *= phase;
            }
        }
    }
}

pub(crate) fn finish_expectation(acc: C64) -> Result<f64, QsimError> {
    if acc.im.abs() >= IMAG_TOL {
        return Err(QsimError::ComplexExpectation(acc.im));
    }
    Ok(acc.re.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::test_support::{dense_gate, matvec, random_gate, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn bell() -> Statevector {
        Statevector::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap()
    }

    #[test]
    fn identity_gate_leaves_state_alone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_state(3, &mut rng);
        let out = psi.apply_gate(&GateOp::rotation(1, [0.0; 3])).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn half_pi_rotation_on_zero() {
        let out = Statevector::zero(1)
            .apply_gate(&GateOp::rotation(0, [FRAC_PI_2, 0.0, 0.0]))
            .unwrap();
        let a = out.amplitudes();
        assert!(a[0].norm() < 1e-15);
        assert!((a[1] - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn inactive_control_is_identity() {
        // |0> on the control, anything on the target
        let psi = Statevector::from_real(&[0.6, 0.8, 0.0, 0.0]).unwrap();
        let out = psi.apply_gate(&GateOp::controlled(0, 1, [1.2, 0.4, -2.0])).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn expectation_examples() {
        let zz: PauliString = "ZZ".parse().unwrap();
        let xx: PauliString = "XX".parse().unwrap();
        let zi: PauliString = "ZI".parse().unwrap();
        assert_eq!(Statevector::zero(2).expectation(&zz).unwrap(), 1.0);
        assert!((bell().expectation(&xx).unwrap() - 1.0).abs() < 1e-12);
        assert!(bell().expectation(&zi).unwrap().abs() < 1e-12);
        let yy: PauliString = "YY".parse().unwrap();
        assert!((bell().expectation(&yy).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_rejects_length_mismatch() {
        let z: PauliString = "Z".parse().unwrap();
        assert!(matches!(
            Statevector::zero(2).expectation(&z),
            Err(QsimError::LengthMismatch { observable: 1, register: 2 })
        ));
    }

    #[test]
    fn bad_gate_indices_are_errors() {
        let psi = Statevector::zero(2);
        assert!(psi.apply_gate(&GateOp::rotation(2, [0.0; 3])).is_err());
        assert!(psi.apply_gate(&GateOp::controlled(0, 0, [0.0; 3])).is_err());
    }

    #[test]
    fn kernel_matches_kronecker_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..=3 {
            for _ in 0..50 {
                let psi = random_state(n, &mut rng);
                let g = random_gate(n, &mut rng);
                let fast = psi.apply_gate(&g).unwrap();
                let slow = matvec(&dense_gate(&g, n), psi.amplitudes());
                for (a, b) in fast.amplitudes().iter().zip(&slow) {
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn global_phase_fix() {
        let i = C64::new(0.0, 1.0);
        let mut psi =
            Statevector::from_amplitudes(vec![C64::new(0.0, 0.0), i * 0.6, i * 0.8, C64::new(0.0, 0.0)])
                .unwrap();
        psi.fix_global_phase(1e-12);
        assert!((psi.amplitudes()[1] - C64::new(0.6, 0.0)).norm() < 1e-15);
    }
}
