use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::kernel::Mat2;
use super::QsimError;

/// A parameterized `R(θ₁, θ₂, θ₃)` rotation, optionally controlled.
///
/// ```text
/// R = [  e^{iθ₂} cos θ₁    e^{iθ₃} sin θ₁ ]
///     [ -e^{-iθ₃} sin θ₁   e^{-iθ₂} cos θ₁ ]
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub target: usize,
    pub control: Option<usize>,
    pub params: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rotation,
    ControlledRotation,
}

impl GateOp {
    pub fn rotation(target: usize, params: [f64; 3]) -> Self {
        Self { target, control: None, params }
    }

    pub fn controlled(control: usize, target: usize, params: [f64; 3]) -> Self {
        Self { target, control: Some(control), params }
    }

    pub fn kind(&self) -> GateKind {
        match self.control {
            None => GateKind::Rotation,
            Some(_) => GateKind::ControlledRotation,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.control.is_some()
    }

    pub fn validate(&self, n_qubits: usize) -> Result<(), QsimError> {
        if self.target >= n_qubits {
            return Err(QsimError::QubitOutOfRange { index: self.target, n_qubits });
        }
        if let Some(c) = self.control {
            if c >= n_qubits {
                return Err(QsimError::QubitOutOfRange { index: c, n_qubits });
            }
            if c == self.target {
                return Err(QsimError::ControlIsTarget(c));
            }
        }
        Ok(())
    }

    /// The 2x2 block applied to the target qubit.
    pub fn matrix(&self) -> Mat2 {
        r_matrix(self.params)
    }

    /// Derivative of the 2x2 block with respect to parameter `which` (0..3).
    pub fn matrix_derivative(&self, which: usize) -> Mat2 {
        r_matrix_derivative(self.params, which)
    }

    /// Dense unitary on the addressed qubits: 2x2 for a rotation, 4x4 with
    /// basis order |control, target> for a controlled rotation.
    pub fn local_unitary(&self) -> Vec<Vec<C64>> {
        let m = self.matrix();
        match self.control {
            None => vec![m[0].to_vec(), m[1].to_vec()],
            Some(_) => {
                let z = C64::new(0.0, 0.0);
                let o = C64::new(1.0, 0.0);
                vec![
                    vec![o, z, z, z],
                    vec![z, o, z, z],
                    vec![z, z, m[0][0], m[0][1]],
                    vec![z, z, m[1][0], m[1][1]],
                ]
            }
        }
    }
}

pub fn r_matrix(params: [f64; 3]) -> Mat2 {
    let [t1, t2, t3] = params;
    let (s, c) = t1.sin_cos();
    [
        [C64::from_polar(c, t2), C64::from_polar(s, t3)],
        [-C64::from_polar(s, -t3), C64::from_polar(c, -t2)],
    ]
}

pub fn r_matrix_derivative(params: [f64; 3], which: usize) -> Mat2 {
    let [t1, t2, t3] = params;
    let (s, c) = t1.sin_cos();
    let i = C64::new(0.0, 1.0);
    let z = C64::new(0.0, 0.0);
    match which {
        0 => [
            [-C64::from_polar(s, t2), C64::from_polar(c, t3)],
            [-C64::from_polar(c, -t3), -C64::from_polar(s, -t2)],
        ],
        1 => [
            [i * C64::from_polar(c, t2), z],
            [z, -i * C64::from_polar(c, -t2)],
        ],
        2 => [
            [z, i * C64::from_polar(s, t3)],
            [i * C64::from_polar(s, -t3), z],
        ],
        _ => panic!("R gate has three parameters, got index {which}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_unitarity_defect(u: &[Vec<C64>]) -> f64 {
        let n = u.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += u[k][i].conj() * u[k][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    #[test]
    fn random_gates_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let p = [
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            ];
            assert!(max_unitarity_defect(&GateOp::rotation(0, p).local_unitary()) < 1e-12);
            assert!(max_unitarity_defect(&GateOp::controlled(0, 1, p).local_unitary()) < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = [0.3, -1.1, 2.4];
        let h = 1e-6;
        for which in 0..3 {
            let mut plus = p;
            let mut minus = p;
            plus[which] += h;
            minus[which] -= h;
            let (a, b) = (r_matrix(plus), r_matrix(minus));
            let d = r_matrix_derivative(p, which);
            for r in 0..2 {
                for c in 0..2 {
                    let fd = (a[r][c] - b[r][c]) / (2.0 * h);
                    assert!((fd - d[r][c]).norm() < 1e-8, "param {which} entry {r}{c}");
                }
            }
        }
    }

    #[test]
    fn validation_rejects_bad_indices() {
        assert!(GateOp::rotation(2, [0.0; 3]).validate(2).is_err());
        assert!(matches!(
            GateOp::controlled(1, 1, [0.0; 3]).validate(2),
            Err(QsimError::ControlIsTarget(1))
        ));
        assert!(GateOp::controlled(3, 0, [0.0; 3]).validate(2).is_err());
        assert!(GateOp::controlled(0, 1, [0.0; 3]).validate(2).is_ok());
    }
}
