//! Classical-to-quantum data maps.
//!
//! * Amplitude encoding with the norm-dependent padding amplitude, used by DQNN and CCQ:
//!   `x ↦ γ⁻¹ (x₁, …, x_d, x̃, 0, …, 0)` with `x̃ = ‖x‖ / (1 + ‖x‖)` and
//!   `γ = (‖x‖² + x̃²)^{1/2}`.
//! * The QCL product encoding `⊗ᵢ R_Y(arcsin xᵢ)|0>`.
//! * Tensor-power duplication of either.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qsim::{DensityMatrix, QuantumState, Statevector};

/// Largest register any encoder will build.
pub const MAX_QUBITS: usize = 15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodingError {
    #[error("amplitude encoding needs a nonzero, finite input vector")]
    ZeroVector,
    #[error("empty input vector")]
    Empty,
    #[error("feature {index} = {value} outside [-1, 1] for the QCL encoding")]
    OutOfDomain { index: usize, value: f64 },
    #[error("padding amplitude {value} outside the admissible interval [{lo}, {hi}]")]
    PaddingOutOfBounds { value: f64, lo: f64, hi: f64 },
    #[error("state has {found} amplitudes, need at least {needed} for d = {d}")]
    DimensionMismatch { d: usize, needed: usize, found: usize },
    #[error("register of {0} qubits exceeds the {MAX_QUBITS}-qubit limit")]
    TooManyQubits(usize),
    #[error("n_copy must be at least 1")]
    ZeroCopies,
}

/// Raw model input: classical features, or a quantum state supplied directly
/// (the phase-recognition task feeds ground states to the circuits).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Input {
    Features(Vec<f64>),
    State(Statevector),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Label {
    Real(f64),
    Class(usize),
}

impl Label {
    pub fn as_f64(self) -> f64 {
        match self {
            Self::Real(v) => v,
            Self::Class(k) => k as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub input: Input,
    pub label: Label,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Amplitude,
    QclProduct,
    CcqCopies,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedState {
    pub state: QuantumState,
    pub n_copy: usize,
    pub scheme: Scheme,
}

/// Number of qubits needed to amplitude-encode a `d`-dimensional vector.
pub fn amplitude_qubits(d: usize) -> usize {
    let slots = d + 1;
    (usize::BITS - (slots - 1).leading_zeros()).max(1) as usize
}

/// Open interval that the padding amplitude `x̄_{d+1}` occupies when
/// `κ₁ ≤ ‖x‖ ≤ κ₂`; the endpoints are attained at the norm bounds themselves.
pub fn padding_bounds(kappa1: f64, kappa2: f64) -> (f64, f64) {
    let lo = (1.0 + (1.0 + kappa2).powi(2)).powf(-0.5);
    let hi = (1.0 + (1.0 + kappa1).powi(2)).powf(-0.5);
    (lo, hi)
}

pub fn amplitude_encode(x: &[f64]) -> Result<Statevector, EncodingError> {
    if x.is_empty() {
        return Err(EncodingError::Empty);
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(EncodingError::ZeroVector);
    }
    let n = amplitude_qubits(x.len());
    if n > MAX_QUBITS {
        return Err(EncodingError::TooManyQubits(n));
    }
    let pad = norm / (1.0 + norm);
    let gamma = (norm * norm + pad * pad).sqrt();
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    for (a, &v) in amps.iter_mut().zip(x) {
        *a = C64::new(v / gamma, 0.0);
    }
    amps[x.len()] = C64::new(pad / gamma, 0.0);
    Ok(Statevector::from_raw(n, amps))
}

/// Inverts [`amplitude_encode`] for `d`-dimensional data whose norms lie in `[κ₁, κ₂]`.
pub fn amplitude_decode(
    state: &Statevector,
    d: usize,
    kappa1: f64,
    kappa2: f64,
) -> Result<Vec<f64>, EncodingError> {
    let amps = state.amplitudes();
    if amps.len() < d + 1 || d == 0 {
        return Err(EncodingError::DimensionMismatch { d, needed: d + 1, found: amps.len() });
    }
    let pad = amps[d].re;
    let (lo, hi) = padding_bounds(kappa1, kappa2);
    let slack = 1e-12;
    if !(pad >= lo - slack && pad <= hi + slack) || pad <= 0.0 {
        return Err(EncodingError::PaddingOutOfBounds { value: pad, lo, hi });
    }
    let head_norm = amps[..d].iter().map(|a| a.re * a.re).sum::<f64>().sqrt();
    // pad / head_norm = x̃ / ‖x‖ = 1 / (1 + ‖x‖)
    let norm = head_norm / pad - 1.0;
    let x_pad = norm / (1.0 + norm);
    let gamma = (norm * norm + x_pad * x_pad).sqrt();
    Ok(amps[..d].iter().map(|a| a.re * gamma).collect())
}

/// `⊗ᵢ R_Y(arcsin xᵢ)|0>`, whose density operator is
/// `2^{-d} ⊗ᵢ (I + xᵢ X + √(1 - xᵢ²) Z)`.
pub fn qcl_state(x: &[f64]) -> Result<Statevector, EncodingError> {
    if x.is_empty() {
        return Err(EncodingError::Empty);
    }
    if x.len() > MAX_QUBITS {
        return Err(EncodingError::TooManyQubits(x.len()));
    }
    let mut amps = vec![C64::new(1.0, 0.0)];
    for (index, &value) in x.iter().enumerate() {
        if !(-1.0..=1.0).contains(&value) {
            return Err(EncodingError::OutOfDomain { index, value });
        }
        let half = value.asin() / 2.0;
        let (s, c) = half.sin_cos();
        amps = crate::qsim::kernel::kron(&amps, &[C64::new(c, 0.0), C64::new(s, 0.0)]);
    }
    Ok(Statevector::from_raw(x.len(), amps))
}

pub fn qcl_encode(x: &[f64]) -> Result<DensityMatrix, EncodingError> {
    Ok(qcl_state(x)?.to_density())
}

/// `n_copy`-fold tensor power of an encoded state.
pub fn duplicate(encoded: &EncodedState, n_copy: usize) -> Result<EncodedState, EncodingError> {
    if n_copy == 0 {
        return Err(EncodingError::ZeroCopies);
    }
    let total = encoded.state.n_qubits() * n_copy;
    if total > MAX_QUBITS {
        return Err(EncodingError::TooManyQubits(total));
    }
    let state = match &encoded.state {
        QuantumState::Pure(s) => {
            let mut acc = s.clone();
            for _ in 1..n_copy {
                acc = acc.tensor(s);
            }
            QuantumState::Pure(acc)
        }
        QuantumState::Mixed(r) => {
            let mut acc = r.clone();
            for _ in 1..n_copy {
                acc = acc.tensor(r);
            }
            QuantumState::Mixed(acc)
        }
    };
    Ok(EncodedState { state, n_copy: encoded.n_copy * n_copy, scheme: encoded.scheme })
}

/// Statevector power without the wrapper, used on the hot path of the baselines.
pub(crate) fn tensor_power(s: &Statevector, n_copy: usize) -> Result<Statevector, EncodingError> {
    if n_copy == 0 {
        return Err(EncodingError::ZeroCopies);
    }
    let total = s.n_qubits() * n_copy;
    if total > MAX_QUBITS {
        return Err(EncodingError::TooManyQubits(total));
    }
    let mut acc = s.clone();
    for _ in 1..n_copy {
        acc = acc.tensor(s);
    }
    Ok(acc)
}
