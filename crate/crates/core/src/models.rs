//! The three QNN models and their analytic gradients.
//!
//! * DQNN: `u = Σ_j Σ_i α_ij σ(a_ij (⟨B_i⟩_j − c_ij))`, optionally wrapped as
//!   `σ(a₅ (u − c₅))`. `⟨B_i⟩_j` is measured after circuit `j` on the
//!   amplitude-encoded input.
//! * CCQ: `(⟨Z₁⟩ + 1) / 2` on `|x̄⟩^{⊗n_copy}`.
//! * QCL: `a ⟨Z₁⟩` on `ρ(x)^{⊗n_copy}`.
//!
//! Multi-output models give each output its own head over shared circuits and
//! observables (DQNN), or read `Z` on qubit `k` for output `k` (baselines).
//!
//! The DQNN constraints `a > 0`, `c ∈ (0, 1)` hold by construction: the
//! trainable values are `a_raw`, `c_raw` with `a = softplus(a_raw)` and
//! `c = logistic(c_raw)`.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{self, CircuitError, ComplexityReport, LayeredCircuit, ParamVector};
use crate::encoding::{self, EncodingError, Input};
use crate::noise::NoiseSpec;
use crate::qsim::kernel::{self, dagger_mat2, Mat2};
use crate::qsim::{DensityMatrix, GateOp, PauliString, QsimError, QuantumState, Statevector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("requested {requested} observables but only {available} non-identity strings exist")]
    TooManyObservables { requested: usize, available: usize },
    #[error("operation needs a {expected:?} model, got {found:?}")]
    WrongKind { expected: ModelKind, found: ModelKind },
    #[error("model expects {expected} parameters, got {found}")]
    ParamLength { expected: usize, found: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dqnn,
    Ccq,
    Qcl,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn inv_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

/// Inverse of the logistic function for `y ∈ (0, 1)`.
pub fn logit(y: f64) -> f64 {
    (y / (1.0 - y)).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Observable {
    Pauli(PauliString),
    /// Rank-one projector `|b><b|`.
    Projector(Statevector),
}

impl Observable {
    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Pauli(p) => p.len(),
            Self::Projector(b) => b.n_qubits(),
        }
    }

    fn check(&self, n: usize) -> Result<(), QsimError> {
        if self.n_qubits() != n {
            return Err(QsimError::LengthMismatch { observable: self.n_qubits(), register: n });
        }
        Ok(())
    }

    pub fn expectation(&self, state: &QuantumState) -> Result<f64, QsimError> {
        match state {
            QuantumState::Pure(s) => self.expect_pure(s),
            QuantumState::Mixed(r) => self.expect_mixed(r),
        }
    }

    fn expect_pure(&self, psi: &Statevector) -> Result<f64, QsimError> {
        self.check(psi.n_qubits())?;
        match self {
            Self::Pauli(p) => psi.expectation(p),
            Self::Projector(b) => Ok(b.inner(psi).norm_sqr()),
        }
    }

    fn expect_mixed(&self, rho: &DensityMatrix) -> Result<f64, QsimError> {
        self.check(rho.n_qubits())?;
        match self {
            Self::Pauli(p) => rho.expectation(p),
            Self::Projector(b) => {
                let amps = b.amplitudes();
                let dim = amps.len();
                let data = rho.data();
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..dim {
                    for c in 0..dim {
                        acc += amps[r].conj() * data[r * dim + c] * amps[c];
                    }
                }
                Ok(acc.re)
            }
        }
    }

    /// `out += w · O |ψ>`.
    fn accumulate(&self, amps: &[C64], w: f64, out: &mut [C64]) {
        match self {
            Self::Pauli(p) => p.apply_accumulate(amps, w, out),
            Self::Projector(b) => {
                let ov: C64 = b.amplitudes().iter().zip(amps).map(|(x, y)| x.conj() * y).sum();
                for (o, x) in out.iter_mut().zip(b.amplitudes()) {
                    *o += x * ov * w;
                }
            }
        }
    }

    fn dense(&self) -> Vec<C64> {
        match self {
            Self::Pauli(p) => p.to_matrix(),
            Self::Projector(b) => {
                let a = b.amplitudes();
                a.iter().flat_map(|r| a.iter().map(move |c| r * c.conj())).collect()
            }
        }
    }
}

/// A circuit of a model: the trainable layered ansatz, or a fixed dense
/// unitary (used by the explicit universality construction).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CircuitUnit {
    Layered(LayeredCircuit),
    Fixed { n_qubits: usize, unitary: Vec<C64> },
}

impl CircuitUnit {
    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Layered(c) => c.n_qubits(),
            Self::Fixed { n_qubits, .. } => *n_qubits,
        }
    }

    pub fn n_slots(&self) -> usize {
        match self {
            Self::Layered(c) => c.n_slots(),
            Self::Fixed { .. } => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub circuits: Vec<CircuitUnit>,
    pub observables: Vec<Observable>,
    pub n_copy: usize,
    pub n_outputs: usize,
    pub final_sigmoid: bool,
}

/// Effective (constrained) head values of one DQNN term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeadTerm {
    pub alpha: f64,
    pub a: f64,
    pub c: f64,
}

/// Draws `n_obs` distinct non-identity Pauli strings uniformly.
pub fn sample_observables(n_qubits: usize, n_obs: usize, seed: u64) -> Result<Vec<PauliString>, ModelError> {
    let available = (1usize << (2 * n_qubits)) - 1;
    if n_obs > available {
        return Err(ModelError::TooManyObservables { requested: n_obs, available });
    }
    let mut rng = crate::rng::rng_for(seed, &[0x0b5]);
    Ok(rand::seq::index::sample(&mut rng, available, n_obs)
        .into_iter()
        .map(|i| PauliString::from_index(n_qubits, i + 1))
        .collect())
}

/// Like [`sample_observables`] but allows `n_obs` beyond the pool size by
/// concatenating independent full-pool rounds, so each string appears at most
/// `ceil(n_obs / (4^n - 1))` times.
pub fn sample_observables_cycled(n_qubits: usize, n_obs: usize, seed: u64) -> Vec<PauliString> {
    let available = (1usize << (2 * n_qubits)) - 1;
    let mut out = Vec::with_capacity(n_obs);
    let mut round = 0u64;
    while out.len() < n_obs {
        let take = (n_obs - out.len()).min(available);
        out.extend(sample_observables(n_qubits, take, crate::rng::derive_seed(seed, &[round])).expect("take ≤ pool"));
        round += 1;
    }
    out
}

impl ModelSpec {
    /// DQNN with `n_cir` independent layered circuits sharing `observables`.
    pub fn dqnn(
        n_qubits: usize,
        n_cir: usize,
        n_layers: usize,
        observables: Vec<PauliString>,
        n_outputs: usize,
        final_sigmoid: bool,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if n_cir == 0 || observables.is_empty() || n_outputs == 0 {
            return Err(ModelError::Invalid("DQNN needs n_cir ≥ 1, n_obs ≥ 1 and n_outputs ≥ 1".into()));
        }
        let circuits = (0..n_cir)
            .map(|j| {
                circuits::build_dqnn_circuit(n_qubits, n_layers, crate::rng::derive_seed(seed, &[j as u64]))
                    .map(CircuitUnit::Layered)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let spec = Self {
            kind: ModelKind::Dqnn,
            circuits,
            observables: observables.into_iter().map(Observable::Pauli).collect(),
            n_copy: 1,
            n_outputs,
            final_sigmoid,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// CCQ over `n_copy` copies of an `n_data_qubits`-qubit amplitude encoding.
    pub fn ccq(n_data_qubits: usize, n_copy: usize, n_layers: usize, n_outputs: usize, seed: u64) -> Result<Self, ModelError> {
        Self::baseline(ModelKind::Ccq, n_data_qubits, n_copy, n_layers, n_outputs, seed)
    }

    /// QCL over `n_copy` copies of the `n_features`-qubit product encoding.
    pub fn qcl(n_features: usize, n_copy: usize, n_layers: usize, n_outputs: usize, seed: u64) -> Result<Self, ModelError> {
        Self::baseline(ModelKind::Qcl, n_features, n_copy, n_layers, n_outputs, seed)
    }

    fn baseline(
        kind: ModelKind,
        n_data: usize,
        n_copy: usize,
        n_layers: usize,
        n_outputs: usize,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if n_copy == 0 {
            return Err(EncodingError::ZeroCopies.into());
        }
        let n = n_data * n_copy;
        if n > encoding::MAX_QUBITS {
            return Err(EncodingError::TooManyQubits(n).into());
        }
        let circuit = match kind {
            ModelKind::Ccq => circuits::build_ccq_circuit(n, n_layers, seed)?,
            _ => circuits::build_qcl_circuit(n, n_layers, seed)?,
        };
        let spec = Self {
            kind,
            circuits: vec![CircuitUnit::Layered(circuit)],
            observables: (0..n_outputs).map(|k| Observable::Pauli(PauliString::z_on(n, k))).collect(),
            n_copy,
            n_outputs,
            final_sigmoid: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n_qubits();
        if self.circuits.iter().any(|c| c.n_qubits() != n) {
            return Err(ModelError::Invalid("all circuits must act on the same register".into()));
        }
        for o in &self.observables {
            o.check(n)?;
        }
        match self.kind {
            ModelKind::Dqnn => {
                if self.circuits.is_empty() || self.observables.is_empty() || self.n_outputs == 0 || self.n_copy != 1 {
                    return Err(ModelError::Invalid("DQNN needs circuits, observables, outputs and n_copy = 1".into()));
                }
            }
            ModelKind::Ccq | ModelKind::Qcl => {
                if self.circuits.len() != 1 || self.observables.len() != self.n_outputs || self.final_sigmoid {
                    return Err(ModelError::Invalid("baselines have one circuit and one Z read-out per output".into()));
                }
                if self.n_outputs == 0 || self.n_outputs > n {
                    return Err(ModelError::Invalid(format!("{} outputs need as many qubits, have {n}", self.n_outputs)));
                }
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.circuits.first().map_or(0, |c| c.n_qubits())
    }

    pub fn n_cir(&self) -> usize {
        self.circuits.len()
    }

    pub fn n_obs(&self) -> usize {
        self.observables.len()
    }

    fn n_terms(&self) -> usize {
        self.n_cir() * self.n_obs()
    }

    fn per_output(&self) -> usize {
        match self.kind {
            ModelKind::Dqnn => 3 * self.n_terms() + if self.final_sigmoid { 2 } else { 0 },
            ModelKind::Ccq => 0,
            ModelKind::Qcl => 1,
        }
    }

    pub fn n_circuit_params(&self) -> usize {
        self.circuits.iter().map(CircuitUnit::n_slots).sum()
    }

    pub fn n_head_params(&self) -> usize {
        self.per_output() * self.n_outputs
    }

    pub fn n_params(&self) -> usize {
        self.n_circuit_params() + self.n_head_params()
    }

    pub fn complexity(&self) -> ComplexityReport {
        let n_gate = self
            .circuits
            .iter()
            .map(|c| match c {
                CircuitUnit::Layered(l) => l.n_gate(),
                CircuitUnit::Fixed { .. } => 0,
            })
            .sum();
        let n_lay = self
            .circuits
            .iter()
            .find_map(|c| match c {
                CircuitUnit::Layered(l) => Some(l.n_layers()),
                CircuitUnit::Fixed { .. } => None,
            })
            .unwrap_or(0);
        let n_data = if self.n_copy == 0 { 0 } else { self.n_qubits() / self.n_copy };
        ComplexityReport::new(n_gate, self.n_obs(), self.n_copy, n_data, n_lay)
    }

    /// Default initialization: circuit angles ~ U(0, 2π), α ~ N(0, 1),
    /// `a_raw = c_raw = 0`, final sigmoid `a₅_raw = c₅ = 0`, QCL scale 1.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        let mut rng = crate::rng::rng_for(seed, &[0x1a17]);
        let mut p: Vec<f64> = (0..self.n_circuit_params())
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let t = self.n_terms();
        for _ in 0..self.n_outputs {
            match self.kind {
                ModelKind::Dqnn => {
                    p.extend((0..t).map(|_| rng.sample::<f64, _>(StandardNormal)));
                    p.extend(std::iter::repeat_n(0.0, 2 * t));
                    if self.final_sigmoid {
                        p.extend([0.0, 0.0]);
                    }
                }
                ModelKind::Ccq => {}
                ModelKind::Qcl => p.push(1.0),
            }
        }
        ParamVector(p)
    }

    /// Effective head terms of output `k`, in `(circuit j, observable i)` order.
    pub fn head_terms(&self, params: &[f64], k: usize) -> Vec<HeadTerm> {
        if self.kind != ModelKind::Dqnn {
            return Vec::new();
        }
        let t = self.n_terms();
        let base = self.n_circuit_params() + k * self.per_output();
        (0..t)
            .map(|idx| HeadTerm {
                alpha: params[base + idx],
                a: softplus(params[base + t + idx]),
                c: sigmoid(params[base + 2 * t + idx]),
            })
            .collect()
    }

    /// Encodes a raw input into the register the circuits act on.
    pub fn prepare(&self, input: &Input, mixed: bool) -> Result<QuantumState, ModelError> {
        let pure = match (self.kind, input) {
            (ModelKind::Dqnn, Input::Features(x)) => encoding::amplitude_encode(x)?,
            (ModelKind::Dqnn, Input::State(s)) => s.clone(),
            (ModelKind::Ccq, Input::Features(x)) => encoding::tensor_power(&encoding::amplitude_encode(x)?, self.n_copy)?,
            (ModelKind::Ccq, Input::State(s)) => encoding::tensor_power(s, self.n_copy)?,
            (ModelKind::Qcl, Input::Features(x)) => encoding::tensor_power(&encoding::qcl_state(x)?, self.n_copy)?,
            (ModelKind::Qcl, Input::State(_)) => {
                return Err(ModelError::Invalid("QCL needs classical features".into()));
            }
        };
        if pure.n_qubits() != self.n_qubits() {
            return Err(QsimError::RegisterMismatch { expected: self.n_qubits(), found: pure.n_qubits() }.into());
        }
        Ok(if mixed { QuantumState::Mixed(pure.to_density()) } else { QuantumState::Pure(pure) })
    }

    fn check_params(&self, params: &[f64]) -> Result<(), ModelError> {
        if params.len() != self.n_params() {
            return Err(ModelError::ParamLength { expected: self.n_params(), found: params.len() });
        }
        Ok(())
    }

    /// Circuit angles after coherent noise; circuit `j` draws from `noise.derive([j])`.
    fn circuit_params(&self, params: &[f64], noise: Option<&NoiseSpec>) -> Vec<f64> {
        let cp = &params[..self.n_circuit_params()];
        match noise {
            Some(n) if n.delta > 0.0 => {
                let mut out = Vec::with_capacity(cp.len());
                let mut off = 0;
                for (j, c) in self.circuits.iter().enumerate() {
                    let len = c.n_slots();
                    out.extend(crate::noise::perturb(&cp[off..off + len], &n.derive(&[j as u64])).0);
                    off += len;
                }
                out
            }
            _ => cp.to_vec(),
        }
    }

    /// Evaluates every circuit's gate blocks once for `params`, after
    /// coherent noise. Reusable across samples that share the same draws.
    pub fn bind(&self, params: &[f64], noise: Option<&NoiseSpec>) -> Result<BoundModel, ModelError> {
        self.check_params(params)?;
        let cp = self.circuit_params(params, noise);
        let mut off = 0;
        let circuits = self
            .circuits
            .iter()
            .map(|unit| {
                let len = unit.n_slots();
                let bound = match unit {
                    CircuitUnit::Layered(c) => Some(c.bind_unchecked(&cp[off..off + len]).iter().map(BoundGate::new).collect()),
                    CircuitUnit::Fixed { .. } => None,
                };
                off += len;
                bound
            })
            .collect();
        Ok(BoundModel { circuits, p: noise.map_or(0.0, |n| n.p) })
    }

    pub fn forward(&self, params: &[f64], state: &QuantumState, noise: Option<&NoiseSpec>) -> Result<Vec<f64>, ModelError> {
        self.forward_bound(&self.bind(params, noise)?, params, state)
    }

    /// [`forward`](Self::forward) with circuits already bound from `params`.
    pub fn forward_bound(&self, bound: &BoundModel, params: &[f64], state: &QuantumState) -> Result<Vec<f64>, ModelError> {
        self.check_params(params)?;
        let mut m = Vec::with_capacity(self.n_terms());
        for (unit, gates) in self.circuits.iter().zip(&bound.circuits) {
            let out = Tape::record(unit, gates.as_deref(), state, bound.p, false)?.last();
            for o in &self.observables {
                m.push(o.expectation(&out)?);
            }
        }
        Ok(self.head(&params[self.n_circuit_params()..], &m))
    }

    fn head(&self, hp: &[f64], m: &[f64]) -> Vec<f64> {
        let per = self.per_output();
        let t = self.n_terms();
        (0..self.n_outputs)
            .map(|k| match self.kind {
                ModelKind::Dqnn => {
                    let h = &hp[k * per..(k + 1) * per];
                    let u: f64 = (0..t)
                        .map(|i| h[i] * sigmoid(softplus(h[t + i]) * (m[i] - sigmoid(h[2 * t + i]))))
                        .sum();
                    if self.final_sigmoid {
                        sigmoid(softplus(h[3 * t]) * (u - h[3 * t + 1]))
                    } else {
                        u
                    }
                }
                ModelKind::Ccq => (m[k] + 1.0) / 2.0,
                ModelKind::Qcl => hp[k] * m[k],
            })
            .collect()
    }

    /// Head gradient and `∂L/∂m` given upstream `∂L/∂out`.
    fn head_backward(&self, hp: &[f64], m: &[f64], upstream: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let per = self.per_output();
        let t = self.n_terms();
        let mut gh = vec![0.0; hp.len()];
        let mut gm = vec![0.0; m.len()];
        for (k, &g) in upstream.iter().enumerate() {
            match self.kind {
                ModelKind::Dqnn => {
                    let h = &hp[k * per..(k + 1) * per];
                    let gk = &mut gh[k * per..(k + 1) * per];
                    let mut sig = Vec::with_capacity(t);
                    let mut u = 0.0;
                    for i in 0..t {
                        let a = softplus(h[t + i]);
                        let c = sigmoid(h[2 * t + i]);
                        let s = sigmoid(a * (m[i] - c));
                        u += h[i] * s;
                        sig.push((a, c, s));
                    }
                    let du = if self.final_sigmoid {
                        let a5 = softplus(h[3 * t]);
                        let q = sigmoid(a5 * (u - h[3 * t + 1]));
                        let dq = q * (1.0 - q);
                        gk[3 * t] = g * dq * (u - h[3 * t + 1]) * sigmoid(h[3 * t]);
                        gk[3 * t + 1] = -g * dq * a5;
                        g * dq * a5
                    } else {
                        g
                    };
                    for (i, &(a, c, s)) in sig.iter().enumerate() {
                        let ds = s * (1.0 - s);
                        gk[i] = du * s;
                        gk[t + i] = du * h[i] * ds * (m[i] - c) * sigmoid(h[t + i]);
                        gk[2 * t + i] = -du * h[i] * ds * a * c * (1.0 - c);
                        gm[i] += du * h[i] * ds * a;
                    }
                }
                ModelKind::Ccq => gm[k] += 0.5 * g,
                ModelKind::Qcl => {
                    gh[k] = g * m[k];
                    gm[k] += g * hp[k];
                }
            }
        }
        (gh, gm)
    }

    /// Outputs and the gradient of `L` with respect to every parameter, where
    /// `upstream(outputs)` returns `∂L/∂outputs`. Under coherent noise the
    /// gradient is taken at the perturbed angles.
    pub fn forward_backward<F>(
        &self,
        params: &[f64],
        state: &QuantumState,
        noise: Option<&NoiseSpec>,
        upstream: F,
    ) -> Result<(Vec<f64>, Vec<f64>), ModelError>
    where
        F: FnOnce(&[f64]) -> Vec<f64>,
    {
        self.forward_backward_bound(&self.bind(params, noise)?, params, state, upstream)
    }

    /// [`forward_backward`](Self::forward_backward) with circuits already bound.
    pub fn forward_backward_bound<F>(
        &self,
        bound: &BoundModel,
        params: &[f64],
        state: &QuantumState,
        upstream: F,
    ) -> Result<(Vec<f64>, Vec<f64>), ModelError>
    where
        F: FnOnce(&[f64]) -> Vec<f64>,
    {
        self.check_params(params)?;
        let n_obs = self.n_obs();
        let mut m = Vec::with_capacity(self.n_terms());
        let mut tapes = Vec::with_capacity(self.n_cir());
        for (unit, gates) in self.circuits.iter().zip(&bound.circuits) {
            let tape = Tape::record(unit, gates.as_deref(), state, bound.p, true)?;
            let last = tape.last();
            for o in &self.observables {
                m.push(o.expectation(&last)?);
            }
            tapes.push(tape);
        }
        let hp = &params[self.n_circuit_params()..];
        let outputs = self.head(hp, &m);
        let up = upstream(&outputs);
        let (gh, gm) = self.head_backward(hp, &m, &up);
        let mut grad = vec![0.0; self.n_circuit_params()];
        let mut off = 0;
        for (j, ((unit, tape), gates)) in self.circuits.iter().zip(tapes).zip(&bound.circuits).enumerate() {
            let len = unit.n_slots();
            if let (CircuitUnit::Layered(c), Some(gates)) = (unit, gates) {
                let weights: Vec<(&Observable, f64)> =
                    self.observables.iter().zip(&gm[j * n_obs..(j + 1) * n_obs]).map(|(o, &w)| (o, w)).collect();
                tape.backward(c, gates, &weights, bound.p, &mut grad[off..off + len]);
            }
            off += len;
        }
        grad.extend(gh);
        Ok((outputs, grad))
    }
}

/// A gate with its block, inverse and parameter derivatives evaluated.
#[derive(Clone, Debug)]
pub struct BoundGate {
    target: usize,
    control: Option<usize>,
    u: Mat2,
    udag: Mat2,
    du: [Mat2; 3],
}

impl BoundGate {
    fn new(g: &GateOp) -> Self {
        let u = g.matrix();
        Self {
            target: g.target,
            control: g.control,
            u,
            udag: dagger_mat2(&u),
            du: [0, 1, 2].map(|w| g.matrix_derivative(w)),
        }
    }
}

/// Model circuits bound to one parameter vector; see [`ModelSpec::bind`].
#[derive(Clone, Debug)]
pub struct BoundModel {
    circuits: Vec<Option<Vec<BoundGate>>>,
    p: f64,
}

fn run_fixed(unitary: &[C64], state: &QuantumState) -> QuantumState {
    match state {
        QuantumState::Pure(psi) => {
            let mut out = psi.clone();
            out.apply_dense_unchecked(unitary);
            QuantumState::Pure(out)
        }
        QuantumState::Mixed(rho) => {
            let mut out = rho.clone();
            out.conjugate_dense_unchecked(unitary);
            QuantumState::Mixed(out)
        }
    }
}

/// Forward record: the final pure state, or (when the adjoint pass needs it)
/// every intermediate density matrix, since the channel is not invertible.
enum Tape {
    Pure(Statevector),
    Mixed(Vec<DensityMatrix>),
    Fixed(QuantumState),
}

impl Tape {
    fn record(
        unit: &CircuitUnit,
        gates: Option<&[BoundGate]>,
        state: &QuantumState,
        p: f64,
        keep: bool,
    ) -> Result<Self, ModelError> {
        if state.n_qubits() != unit.n_qubits() {
            return Err(QsimError::RegisterMismatch { expected: unit.n_qubits(), found: state.n_qubits() }.into());
        }
        let (CircuitUnit::Layered(_), Some(gates)) = (unit, gates) else {
            let CircuitUnit::Fixed { unitary, .. } = unit else { unreachable!("layered circuits are always bound") };
            return Ok(Tape::Fixed(run_fixed(unitary, state)));
        };
        crate::qsim::check_probability(p)?;
        match state {
            QuantumState::Pure(psi) => {
                if p > 0.0 {
                    return Err(CircuitError::NoiseNeedsDensity(p).into());
                }
                let mut out = psi.clone();
                for g in gates {
                    out.apply_mat2_unchecked(g.target, g.control, &g.u);
                }
                Ok(Tape::Pure(out))
            }
            QuantumState::Mixed(rho) => {
                let mut rhos = Vec::with_capacity(if keep { gates.len() + 1 } else { 1 });
                rhos.push(rho.clone());
                for g in gates {
                    let mut next = if keep { rhos.last().expect("non-empty").clone() } else { rhos.pop().expect("non-empty") };
                    next.conjugate_unchecked(g.target, g.control, &g.u);
                    if let (Some(c), true) = (g.control, p > 0.0) {
                        next.depolarize_pair_mut(c, g.target, p)?;
                    }
                    rhos.push(next);
                }
                Ok(Tape::Mixed(rhos))
            }
        }
    }

    fn last(&self) -> QuantumState {
        match self {
            Tape::Pure(out) => QuantumState::Pure(out.clone()),
            Tape::Mixed(rhos) => QuantumState::Mixed(rhos.last().expect("non-empty").clone()),
            Tape::Fixed(s) => s.clone(),
        }
    }

    /// Adds `Σ_i w_i ∂⟨B_i⟩/∂θ` into `grad` (indexed by circuit slot).
    fn backward(self, circuit: &LayeredCircuit, gates: &[BoundGate], weights: &[(&Observable, f64)], p: f64, grad: &mut [f64]) {
        match self {
            Tape::Pure(out) => adjoint_pure(circuit, gates, out, weights, grad),
            Tape::Mixed(rhos) => adjoint_mixed(circuit, gates, &rhos, weights, p, grad),
            Tape::Fixed(_) => {}
        }
    }
}

fn adjoint_pure(
    circuit: &LayeredCircuit,
    gates: &[BoundGate],
    out: Statevector,
    weights: &[(&Observable, f64)],
    grad: &mut [f64],
) {
    let n = out.n_qubits();
    let mut psi = out.into_amplitudes();
    let mut lam = vec![C64::new(0.0, 0.0); psi.len()];
    for (o, w) in weights {
        o.accumulate(&psi, *w, &mut lam);
    }
    for (g, t) in gates.iter().zip(circuit.gates()).rev() {
        kernel::apply_mat2(&mut psi, n, g.target, g.control, &g.udag);
        let ov = kernel::projected_overlaps(&lam, &psi, n, g.target, g.control, &g.du);
        for (v, &slot) in ov.iter().zip(&t.slots) {
            grad[slot] += 2.0 * v;
        }
        kernel::apply_mat2(&mut lam, n, g.target, g.control, &g.udag);
    }
}

fn adjoint_mixed(
    circuit: &LayeredCircuit,
    gates: &[BoundGate],
    rhos: &[DensityMatrix],
    weights: &[(&Observable, f64)],
    p: f64,
    grad: &mut [f64],
) {
    let n = rhos[0].n_qubits();
    let dim = 1usize << n;
    let mut op = vec![C64::new(0.0, 0.0); dim * dim];
    for (o, w) in weights {
        for (x, y) in op.iter_mut().zip(o.dense()) {
            *x += y * *w;
        }
    }
    // Heisenberg-picture observable, pulled back one gate at a time.
    let mut lam = DensityMatrix::from_raw(n, op);
    for (k, (g, t)) in gates.iter().zip(circuit.gates()).enumerate().rev() {
        if let (Some(c), true) = (g.control, p > 0.0) {
            lam.depolarize_pair_mut(c, g.target, p).expect("validated gate");
        }
        for (du, &slot) in g.du.iter().zip(&t.slots) {
            let mut x = rhos[k].clone();
            x.left_mul_projected_unchecked(g.target, g.control, du);
            x.right_mul_dagger_unchecked(g.target, g.control, &g.u);
            grad[slot] += 2.0 * x.trace_with(lam.data()).re;
        }
        lam.conjugate_unchecked(g.target, g.control, &g.udag);
    }
}

fn single_output(model: &ModelSpec, kind: ModelKind, params: &[f64], x: &Input, noise: Option<&NoiseSpec>) -> Result<f64, ModelError> {
    if model.kind != kind {
        return Err(ModelError::WrongKind { expected: kind, found: model.kind });
    }
    let mixed = noise.is_some_and(|n| n.p > 0.0);
    let state = model.prepare(x, mixed)?;
    Ok(model.forward(params, &state, noise)?[0])
}

pub fn dqnn_forward(model: &ModelSpec, params: &[f64], x: &Input, noise: Option<&NoiseSpec>) -> Result<f64, ModelError> {
    single_output(model, ModelKind::Dqnn, params, x, noise)
}

pub fn ccq_forward(model: &ModelSpec, params: &[f64], x: &Input, noise: Option<&NoiseSpec>) -> Result<f64, ModelError> {
    single_output(model, ModelKind::Ccq, params, x, noise)
}

pub fn qcl_forward(model: &ModelSpec, params: &[f64], x: &Input, noise: Option<&NoiseSpec>) -> Result<f64, ModelError> {
    single_output(model, ModelKind::Qcl, params, x, noise)
}

/// `Σ_j α_j σ(a_j (|<x̄|z_j>|² − c_j))`.
pub fn sigmoid_basis_eval(z: &[Statevector], a: &[f64], c: &[f64], alpha: &[f64], xbar: &Statevector) -> Result<f64, ModelError> {
    if a.len() != z.len() || c.len() != z.len() || alpha.len() != z.len() {
        return Err(ModelError::Invalid("basis coefficient lengths differ".into()));
    }
    let mut acc = 0.0;
    for (j, zj) in z.iter().enumerate() {
        let norm = zj.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QsimError::NotNormalized(norm).into());
        }
        if zj.n_qubits() != xbar.n_qubits() {
            return Err(QsimError::RegisterMismatch { expected: xbar.n_qubits(), found: zj.n_qubits() }.into());
        }
        acc += alpha[j] * sigmoid(a[j] * (zj.inner(xbar).norm_sqr() - c[j]));
    }
    Ok(acc)
}

/// Unitary with `U|from> = |to>`: a phase times the Householder reflection
/// that swaps `|from>` with the phase-aligned `|to>`.
pub fn householder_unitary(from: &Statevector, to: &Statevector) -> Vec<C64> {
    let ov = from.inner(to);
    let phase = if ov.norm() > 1e-300 { ov / ov.norm() } else { C64::new(1.0, 0.0) };
    // to' = conj(phase)·to has a real, non-negative overlap with from
    let v: Vec<C64> = from.amplitudes().iter().zip(to.amplitudes()).map(|(f, t)| f - phase.conj() * t).collect();
    let vv: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    let dim = v.len();
    let mut u = vec![C64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let id = if r == c { 1.0 } else { 0.0 };
            let refl = if vv > 1e-24 { 2.0 * v[r] * v[c].conj() / vv } else { C64::new(0.0, 0.0) };
            u[r * dim + c] = phase * (C64::new(id, 0.0) - refl);
        }
    }
    u
}

/// The explicit DQNN realizing a sigmoid-of-overlap expansion: one fixed
/// circuit per basis state with `U_j|b> = |z_j>` and the single observable `|b><b|`.
pub fn expansion_model(
    b: &Statevector,
    z: &[Statevector],
    a: &[f64],
    c: &[f64],
    alpha: &[f64],
) -> Result<(ModelSpec, ParamVector), ModelError> {
    if z.is_empty() || a.len() != z.len() || c.len() != z.len() || alpha.len() != z.len() {
        return Err(ModelError::Invalid("need matching non-empty basis coefficient lists".into()));
    }
    if a.iter().any(|&v| v <= 0.0) || c.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(ModelError::Invalid("need a > 0 and c ∈ (0, 1)".into()));
    }
    let n = b.n_qubits();
    let spec = ModelSpec {
        kind: ModelKind::Dqnn,
        circuits: z
            .iter()
            .map(|zj| CircuitUnit::Fixed { n_qubits: n, unitary: householder_unitary(b, zj) })
            .collect(),
        observables: vec![Observable::Projector(b.clone())],
        n_copy: 1,
        n_outputs: 1,
        final_sigmoid: false,
    };
    spec.validate()?;
    let mut params = alpha.to_vec();
    params.extend(a.iter().map(|&v| inv_softplus(v)));
    params.extend(c.iter().map(|&v| logit(v)));
    Ok((spec, ParamVector(params)))
}
