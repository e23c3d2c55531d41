use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::kernel::bit;
use super::QsimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i & 3]
    }

    pub fn matrix(self) -> [[C64; 2]; 2] {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => [[o, z], [z, o]],
            Pauli::X => [[z, o], [o, z]],
            Pauli::Y => [[z, -i], [i, z]],
            Pauli::Z => [[o, z], [z, -o]],
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product `A₁ ⊗ … ⊗ Aₙ` of single-qubit Paulis, letter `k` acting on qubit `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

/// Bit-level form of a Pauli string: `P|i> = phase(i) |i ^ flip>`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PauliMasks {
    pub flip: usize,
    pub sign: usize,
    pub i_pow: u32,
}

impl PauliMasks {
    #[inline]
    pub fn phase(&self, index: usize) -> C64 {
        let base = match self.i_pow % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        if (index & self.sign).count_ones() % 2 == 1 {
            -base
        } else {
            base
        }
    }
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { letters: vec![Pauli::I; n_qubits] }
    }

    /// `Z` on every qubit.
    pub fn all_z(n_qubits: usize) -> Self {
        Self { letters: vec![Pauli::Z; n_qubits] }
    }

    /// A single `Z` on `qubit`, identity elsewhere.
    pub fn z_on(n_qubits: usize, qubit: usize) -> Self {
        let mut letters = vec![Pauli::I; n_qubits];
        letters[qubit] = Pauli::Z;
        Self { letters }
    }

    /// The string whose base-4 digits (qubit 0 most significant) are `index`.
    pub fn from_index(n_qubits: usize, mut index: usize) -> Self {
        let mut letters = vec![Pauli::I; n_qubits];
        for k in (0..n_qubits).rev() {
            letters[k] = Pauli::from_index(index);
            index >>= 2;
        }
        Self { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    pub(crate) fn check_len(&self, n_qubits: usize) -> Result<(), QsimError> {
        if self.letters.len() != n_qubits {
            return Err(QsimError::LengthMismatch {
                observable: self.letters.len(),
                register: n_qubits,
            });
        }
        Ok(())
    }

    pub(crate) fn masks(&self) -> PauliMasks {
        let n = self.letters.len();
        let mut flip = 0;
        let mut sign = 0;
        let mut i_pow = 0;
        for (k, &p) in self.letters.iter().enumerate() {
            let b = bit(n, k);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= b,
                Pauli::Y => {
                    flip |= b;
                    sign |= b;
                    i_pow += 1;
                }
                Pauli::Z => sign |= b,
            }
        }
        PauliMasks { flip, sign, i_pow }
    }

    /// Accumulates `weight * P * amps` into `out`.
    pub(crate) fn apply_accumulate(&self, amps: &[C64], weight: f64, out: &mut [C64]) {
        let m = self.masks();
        for (i, &a) in amps.iter().enumerate() {
            out[i ^ m.flip] += m.phase(i) * a * weight;
        }
    }

    /// Dense `2^n x 2^n` matrix, row-major.
    pub fn to_matrix(&self) -> Vec<C64> {
        let dim = 1usize << self.letters.len();
        let m = self.masks();
        let mut out = vec![C64::new(0.0, 0.0); dim * dim];
        for col in 0..dim {
            out[(col ^ m.flip) * dim + col] = m.phase(col);
        }
        out
    }

    /// Tensor product with another string (self acts on the leading qubits).
    pub fn tensor(&self, other: &PauliString) -> PauliString {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        PauliString { letters }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let letters = s
            .trim()
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(QsimError::BadPauli(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PauliString { letters })
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kron_dense(a: &[C64], da: usize, b: &[C64], db: usize) -> Vec<C64> {
        let d = da * db;
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..da {
            for j in 0..da {
                for k in 0..db {
                    for l in 0..db {
                        out[(i * db + k) * d + (j * db + l)] = a[i * da + j] * b[k * db + l];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn dense_matrix_matches_kronecker_product() {
        for s in ["XY", "ZI", "YZ", "IYX", "ZZZ", "XIY"] {
            let p: PauliString = s.parse().unwrap();
            let mut acc = vec![C64::new(1.0, 0.0)];
            let mut dim = 1;
            for &l in p.letters() {
                let m = l.matrix();
                let flat = [m[0][0], m[0][1], m[1][0], m[1][1]];
                acc = kron_dense(&acc, dim, &flat, 2);
                dim *= 2;
            }
            assert_eq!(acc, p.to_matrix(), "{s}");
        }
    }

    #[test]
    fn index_round_trip_and_display() {
        let p = PauliString::from_index(2, 0b0111);
        assert_eq!(p.to_string(), "XZ");
        assert!(PauliString::from_index(3, 0).is_identity());
        assert!("XQ".parse::<PauliString>().is_err());
    }
}
