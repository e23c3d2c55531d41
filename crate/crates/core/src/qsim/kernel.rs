//! Low-level amplitude kernels shared by the pure and mixed simulators.
//!
//! Qubit 0 is the most significant bit of the amplitude index, so qubit `k`
//! of an `n`-qubit register lives at bit `n - 1 - k`.

use num_complex::Complex64 as C64;

pub type Mat2 = [[C64; 2]; 2];

#[inline]
pub(crate) fn bit(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

/// Applies a 2x2 matrix to `target`, optionally conditioned on `control` = 1.
pub(crate) fn apply_mat2(
    amps: &mut [C64],
    n_qubits: usize,
    target: usize,
    control: Option<usize>,
    m: &Mat2,
) {
    let t = bit(n_qubits, target);
    let cmask = control.map_or(0, |c| bit(n_qubits, c));
    let len = amps.len();
    let mut base = 0;
    while base < len {
        for i in base..base + t {
            if i & cmask != cmask {
                continue;
            }
            let a = amps[i];
            let b = amps[i | t];
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[i | t] = m[1][0] * a + m[1][1] * b;
        }
        base += t << 1;
    }
}

/// Like [`apply_mat2`] but zeroes the control = 0 subspace, giving the action
/// of `|1><1| (x) m` rather than the full controlled operator. This is the
/// derivative of a controlled gate with respect to its parameters.
pub(crate) fn apply_mat2_projected(
    amps: &mut [C64],
    n_qubits: usize,
    target: usize,
    control: Option<usize>,
    m: &Mat2,
) {
    if let Some(c) = control {
        let cmask = bit(n_qubits, c);
        for (i, a) in amps.iter_mut().enumerate() {
            if i & cmask == 0 {
                *a = C64::new(0.0, 0.0);
            }
        }
    }
    apply_mat2(amps, n_qubits, target, control, m);
}

/// `Re⟨lam| (|1><1| (x) m_k) |psi⟩` for each `m_k`, in one sweep.
pub(crate) fn projected_overlaps<const K: usize>(
    lam: &[C64],
    psi: &[C64],
    n_qubits: usize,
    target: usize,
    control: Option<usize>,
    ms: &[Mat2; K],
) -> [f64; K] {
    let t = bit(n_qubits, target);
    let cmask = control.map_or(0, |c| bit(n_qubits, c));
    let mut acc = [0.0; K];
    let len = psi.len();
    let mut base = 0;
    while base < len {
        for i in base..base + t {
            if i & cmask != cmask {
                continue;
            }
            let (a, b) = (psi[i], psi[i | t]);
            let (la, lb) = (lam[i].conj(), lam[i | t].conj());
            for (s, m) in acc.iter_mut().zip(ms) {
                *s += (la * (m[0][0] * a + m[0][1] * b) + lb * (m[1][0] * a + m[1][1] * b)).re;
            }
        }
        base += t << 1;
    }
    acc
}

pub(crate) fn conj_mat2(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[0][1].conj()],
        [m[1][0].conj(), m[1][1].conj()],
    ]
}

pub(crate) fn dagger_mat2(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

pub(crate) fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::test_support::{random_gate, random_state};
    use rand::SeedableRng;

    #[test]
    fn fused_overlaps_match_projected_apply() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let g = random_gate(3, &mut rng);
            let psi = random_state(3, &mut rng).into_amplitudes();
            let lam = random_state(3, &mut rng).into_amplitudes();
            let ms = [0, 1, 2].map(|w| g.matrix_derivative(w));
            let fused = projected_overlaps(&lam, &psi, 3, g.target, g.control, &ms);
            for (k, m) in ms.iter().enumerate() {
                let mut x = psi.clone();
                apply_mat2_projected(&mut x, 3, g.target, g.control, m);
                let want: f64 = lam.iter().zip(&x).map(|(l, v)| (l.conj() * v).re).sum();
                assert!((fused[k] - want).abs() < 1e-14);
            }
        }
    }
}
