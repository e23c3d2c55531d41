use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::kernel::{self, bit, Mat2};
use super::state::{finish_expectation, qubits_for_len};
use super::{GateOp, PauliString, QsimError, Statevector, NORM_TOL};

/// A mixed state stored as a dense row-major `2^n x 2^n` matrix.
///
/// Row-major storage makes the matrix a `2n`-qubit amplitude buffer whose
/// first `n` qubits index rows and last `n` index columns, so `U ρ U†` is
/// `U` on row qubit `k` followed by `conj(U)` on column qubit `n + k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &Statevector) -> Self {
        let a = psi.amplitudes();
        let dim = a.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            data.extend(a.iter().map(|c| a[r] * c.conj()));
        }
        Self { n_qubits: psi.n_qubits(), data }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Self { n_qubits, data }
    }

    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(data: Vec<C64>) -> Result<Self, QsimError> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(QsimError::BadLength(data.len()));
        }
        let n_qubits = qubits_for_len(dim)?;
        let rho = Self { n_qubits, data };
        if !rho.is_hermitian(NORM_TOL) {
            return Err(QsimError::NotHermitian);
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(QsimError::NotNormalized(tr));
        }
        let min = rho.min_eigenvalue();
        if min < -1e-9 {
            return Err(QsimError::NotPositive(min));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(n_qubits: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), 1 << (2 * n_qubits));
        Self { n_qubits, data }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }


    pub fn trace(&self) -> f64 {
        let dim = self.dim();
        (0..dim).map(|i| self.data[i * dim + i].re).sum()
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        let dim = self.dim();
        let mut acc = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                acc += (self.data[r * dim + c] * self.data[c * dim + r]).re;
            }
        }
        acc
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let dim = self.dim();
        (0..dim).all(|r| (r..dim).all(|c| (self.get(r, c) - self.get(c, r).conj()).norm() <= tol))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.dim();
        let m = DMatrix::from_fn(dim, dim, |r, c| {
            // symmetrize against round-off before the Hermitian solver
            (self.get(r, c) + self.get(c, r).conj()) * 0.5
        });
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn apply_gate(&self, gate: &GateOp) -> Result<DensityMatrix, QsimError> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    pub fn apply_gate_mut(&mut self, gate: &GateOp) -> Result<(), QsimError> {
        gate.validate(self.n_qubits)?;
        self.conjugate_unchecked(gate.target, gate.control, &gate.matrix());
        Ok(())
    }

    /// `ρ -> M ρ M†` for a (controlled) 2x2 block `M`.
    pub(crate) fn conjugate_unchecked(&mut self, target: usize, control: Option<usize>, m: &Mat2) {
        self.left_mul_unchecked(target, control, m);
        self.right_mul_dagger_unchecked(target, control, m);
    }

    /// `ρ -> M ρ`.
    pub(crate) fn left_mul_unchecked(&mut self, target: usize, control: Option<usize>, m: &Mat2) {
        let n2 = 2 * self.n_qubits;
        kernel::apply_mat2(&mut self.data, n2, target, control, m);
    }

    /// `ρ -> ρ M†`.
    pub(crate) fn right_mul_dagger_unchecked(&mut self, target: usize, control: Option<usize>, m: &Mat2) {
        let n = self.n_qubits;
        kernel::apply_mat2(&mut self.data, 2 * n, n + target, control.map(|c| n + c), &kernel::conj_mat2(m));
    }

    /// `ρ -> (|1><1|_c (x) M) ρ`, the left factor of a controlled-gate derivative.
    pub(crate) fn left_mul_projected_unchecked(&mut self, target: usize, control: Option<usize>, m: &Mat2) {
        let n2 = 2 * self.n_qubits;
        kernel::apply_mat2_projected(&mut self.data, n2, target, control, m);
    }

    /// Dense conjugation `ρ -> U ρ U†` by a full-register unitary.
    pub(crate) fn conjugate_dense_unchecked(&mut self, u: &[C64]) {
        let dim = self.dim();
        let mut tmp = vec![C64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for k in 0..dim {
                let urk = u[r * dim + k];
                if urk == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..dim {
                    tmp[r * dim + c] += urk * self.data[k * dim + c];
                }
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += tmp[r * dim + k] * u[c * dim + k].conj();
                }
                out[r * dim + c] = acc;
            }
        }
        self.data = out;
    }

    /// Two-qubit depolarizing map on qubits `a` and `b`:
    /// `ρ -> (1-p) ρ + (p/16) Σ_P P ρ P†` over all sixteen Paulis on `(a, b)`,
    /// evaluated through the identity `(1/16) Σ_P P ρ P† = Tr_ab(ρ) ⊗ I/4`.
    pub fn depolarize_pair_mut(&mut self, a: usize, b: usize, p: f64) -> Result<(), QsimError> {
        check_probability(p)?;
        let n = self.n_qubits;
        for q in [a, b] {
            if q >= n {
                return Err(QsimError::QubitOutOfRange { index: q, n_qubits: n });
            }
        }
        if a == b {
            return Err(QsimError::ControlIsTarget(a));
        }
        if p == 0.0 {
            return Ok(());
        }
        let dim = self.dim();
        let (ba, bb) = (bit(n, a), bit(n, b));
        let mask = ba | bb;
        let subs = [0, bb, ba, ba | bb];
        let mut twirled = vec![C64::new(0.0, 0.0); dim * dim];
        for r0 in (0..dim).filter(|r| r & mask == 0) {
            for c0 in (0..dim).filter(|c| c & mask == 0) {
                let s: C64 = subs.iter().map(|&s| self.data[(r0 | s) * dim + (c0 | s)]).sum();
                let v = s * 0.25;
                for &s in &subs {
                    twirled[(r0 | s) * dim + (c0 | s)] = v;
                }
            }
        }
        for (x, t) in self.data.iter_mut().zip(&twirled) {
            *x = *x * (1.0 - p) + t * p;
        }
        Ok(())
    }

    /// Applies a controlled-R gate followed by depolarizing noise on the two
    /// qubits it addresses.
    pub fn apply_channel(&self, gate: &GateOp, p: f64) -> Result<DensityMatrix, QsimError> {
        check_probability(p)?;
        let control = gate.control.ok_or(QsimError::NotTwoQubit)?;
        let mut out = self.apply_gate(gate)?;
        out.depolarize_pair_mut(control, gate.target, p)?;
        Ok(out)
    }

    pub fn expectation(&self, obs: &PauliString) -> Result<f64, QsimError> {
        obs.check_len(self.n_qubits)?;
        if obs.is_identity() {
            // states are normalized, so skip the rounding in Σ|a|²
            return Ok(1.0);
        }
        let dim = self.dim();
        let m = obs.masks();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..dim {
            acc += self.data[i * dim + (i ^ m.flip)] * m.phase(i);
        }
        finish_expectation(acc)
    }

    /// `Tr(ρ O)` for a dense row-major operator `O`.
    pub(crate) fn trace_with(&self, op: &[C64]) -> C64 {
        let dim = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..dim {
            for c in 0..dim {
                acc += self.data[r * dim + c] * op[c * dim + r];
            }
        }
        acc
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let (da, db) = (self.dim(), other.dim());
        let d = da * db;
        let mut data = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..da {
            for j in 0..da {
                let x = self.data[i * da + j];
                for k in 0..db {
                    for l in 0..db {
                        data[(i * db + k) * d + (j * db + l)] = x * other.data[k * db + l];
                    }
                }
            }
        }
        DensityMatrix { n_qubits: self.n_qubits + other.n_qubits, data }
    }
}

pub(crate) fn check_probability(p: f64) -> Result<(), QsimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QsimError::BadProbability(p));
    }
    Ok(())
}
