//! Losses, metrics, gradients and the hybrid optimization loop.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::{ComplexityReport, ParamVector};
use crate::datasets::{Dataset, Task};
use crate::encoding::Label;
use crate::models::{BoundModel, ModelError, ModelSpec};
use crate::noise::NoiseSpec;
use crate::qsim::QuantumState;

const CE_CLAMP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("relative error undefined for zero label at index {0}")]
    ZeroLabel(usize),
    #[error("non-finite loss at iteration {0}")]
    NonFinite(usize),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("model has {model} outputs but the task needs {task}")]
    OutputMismatch { model: usize, task: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GradMode {
    CentralFd { h: f64 },
    Adjoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Batch {
    Full,
    #[serde(untagged)]
    Size(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mse,
    Ce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    RelativeError,
    Accuracy,
}

/// Missing fields take their [`Default`] values when deserializing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub iterations: usize,
    pub batch: Batch,
    pub grad: GradMode,
    pub loss: LossKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Adam,
            learning_rate: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            iterations: 200,
            batch: Batch::Full,
            grad: GradMode::Adjoint,
            loss: LossKind::Mse,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("beta1 and beta2 must lie in (0, 1)");
        }
        if self.eps <= 0.0 {
            return bad("eps must be positive");
        }
        if let GradMode::CentralFd { h } = self.grad {
            if !(h > 0.0) {
                return bad("finite-difference step h must be positive");
            }
        }
        if self.batch == Batch::Size(0) {
            return bad("batch size must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub loss_trace: Vec<f64>,
    pub final_metric: f64,
    pub train_metric: f64,
    pub metric_kind: MetricKind,
    pub complexity: ComplexityReport,
    pub param_count: usize,
    pub wall_time: f64,
    pub seed: u64,
    pub diverged: bool,
    pub params: ParamVector,
}

pub fn loss_mse(preds: &[f64], labels: &[f64]) -> Result<f64, TrainError> {
    check_len(preds.len(), labels.len())?;
    if preds.is_empty() {
        return Ok(0.0);
    }
    Ok(preds.iter().zip(labels).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / preds.len() as f64)
}

/// Mean binary cross-entropy with predictions clamped to `[1e-12, 1 - 1e-12]`.
pub fn loss_ce(preds: &[f64], labels: &[f64]) -> Result<f64, TrainError> {
    check_len(preds.len(), labels.len())?;
    if preds.is_empty() {
        return Ok(0.0);
    }
    Ok(preds.iter().zip(labels).map(|(&p, &y)| bce(p, y)).sum::<f64>() / preds.len() as f64)
}

fn bce(p: f64, y: f64) -> f64 {
    let q = p.clamp(CE_CLAMP, 1.0 - CE_CLAMP);
    -(y * q.ln() + (1.0 - y) * (1.0 - q).ln())
}

fn bce_grad(p: f64, y: f64) -> f64 {
    let q = p.clamp(CE_CLAMP, 1.0 - CE_CLAMP);
    -y / q + (1.0 - y) / (1.0 - q)
}

pub fn relative_error(preds: &[f64], labels: &[f64]) -> Result<f64, TrainError> {
    check_len(preds.len(), labels.len())?;
    if let Some(i) = labels.iter().position(|&y| y == 0.0) {
        return Err(TrainError::ZeroLabel(i));
    }
    Ok(preds.iter().zip(labels).map(|(q, y)| ((q - y) / y).abs()).sum::<f64>() / preds.len().max(1) as f64)
}

pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64, TrainError> {
    check_len(preds.len(), labels.len())?;
    let hits = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / preds.len().max(1) as f64)
}

fn check_len(a: usize, b: usize) -> Result<(), TrainError> {
    if a != b {
        return Err(TrainError::LengthMismatch(a, b));
    }
    Ok(())
}

/// Class read-out: threshold one output at 0.5, else argmax.
pub fn predict_class(outputs: &[f64]) -> usize {
    if outputs.len() == 1 {
        return usize::from(outputs[0] >= 0.5);
    }
    outputs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
        .0
}

/// Per-output regression/classification targets.
fn targets(task: Task, label: Label) -> Vec<f64> {
    match (task, label) {
        (Task::Multiclass(k), Label::Class(c)) => (0..k).map(|i| if i == c { 1.0 } else { 0.0 }).collect(),
        (_, l) => vec![l.as_f64()],
    }
}

/// Per-sample loss and its gradient with respect to the model outputs.
fn sample_loss(kind: LossKind, out: &[f64], t: &[f64]) -> (f64, Vec<f64>) {
    let k = out.len() as f64;
    match kind {
        LossKind::Mse => (
            out.iter().zip(t).map(|(o, y)| (o - y).powi(2)).sum::<f64>() / k,
            out.iter().zip(t).map(|(o, y)| 2.0 * (o - y) / k).collect(),
        ),
        LossKind::Ce => (
            out.iter().zip(t).map(|(&o, &y)| bce(o, y)).sum::<f64>() / k,
            out.iter().zip(t).map(|(&o, &y)| bce_grad(o, y) / k).collect(),
        ),
    }
}

/// A dataset encoded for one model.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub states: Vec<QuantumState>,
    pub labels: Vec<Label>,
    pub task: Task,
}

impl Prepared {
    pub fn new(model: &ModelSpec, data: &Dataset, mixed: bool) -> Result<Self, TrainError> {
        if model.n_outputs != data.task.n_outputs() {
            return Err(TrainError::OutputMismatch { model: model.n_outputs, task: data.task.n_outputs() });
        }
        let states = data
            .samples
            .par_iter()
            .map(|s| model.prepare(&s.input, mixed))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { states, labels: data.samples.iter().map(|s| s.label).collect(), task: data.task })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Noise for sample `i` at iteration `iter`; `None` when silent.
fn eval_noise(noise: Option<&NoiseSpec>, i: usize, iter: u64) -> Option<NoiseSpec> {
    noise.filter(|n| !n.is_silent()).map(|n| n.derive(&[i as u64, iter]))
}

/// Iteration tag used for evaluation passes, kept apart from training iterations.
const EVAL_TAG: u64 = u64::MAX;

/// Circuits bound once for the whole batch when no per-sample draws are needed.
fn shared_binding(model: &ModelSpec, params: &[f64], noise: Option<&NoiseSpec>) -> Result<Option<BoundModel>, ModelError> {
    match noise {
        Some(n) if n.delta > 0.0 => Ok(None),
        _ => model.bind(params, noise).map(Some),
    }
}

fn binding_for<'a>(
    model: &ModelSpec,
    params: &[f64],
    shared: &'a Option<BoundModel>,
    noise: Option<&NoiseSpec>,
    i: usize,
    iter: u64,
) -> Result<std::borrow::Cow<'a, BoundModel>, ModelError> {
    match shared {
        Some(b) => Ok(std::borrow::Cow::Borrowed(b)),
        None => model.bind(params, eval_noise(noise, i, iter).as_ref()).map(std::borrow::Cow::Owned),
    }
}

pub fn predict(
    model: &ModelSpec,
    params: &[f64],
    data: &Prepared,
    noise: Option<&NoiseSpec>,
) -> Result<Vec<Vec<f64>>, TrainError> {
    let shared = shared_binding(model, params, noise)?;
    Ok(data
        .states
        .par_iter()
        .enumerate()
        .map(|(i, s)| model.forward_bound(&*binding_for(model, params, &shared, noise, i, EVAL_TAG)?, params, s))
        .collect::<Result<Vec<_>, _>>()?)
}

pub fn metric_kind(task: Task) -> MetricKind {
    match task {
        Task::Regression => MetricKind::RelativeError,
        _ => MetricKind::Accuracy,
    }
}

pub fn evaluate(model: &ModelSpec, params: &[f64], data: &Prepared, noise: Option<&NoiseSpec>) -> Result<f64, TrainError> {
    let outs = predict(model, params, data, noise)?;
    match data.task {
        Task::Regression => {
            let p: Vec<f64> = outs.iter().map(|o| o[0]).collect();
            let y: Vec<f64> = data.labels.iter().map(|l| l.as_f64()).collect();
            relative_error(&p, &y)
        }
        _ => {
            let p: Vec<usize> = outs.iter().map(|o| predict_class(o)).collect();
            let y: Vec<usize> = data.labels.iter().map(|l| l.as_f64() as usize).collect();
            accuracy(&p, &y)
        }
    }
}

/// Mean loss over `batch` (indices into `data`).
pub fn batch_loss(
    model: &ModelSpec,
    params: &[f64],
    data: &Prepared,
    batch: &[usize],
    loss: LossKind,
    noise: Option<&NoiseSpec>,
    iter: u64,
) -> Result<f64, TrainError> {
    let shared = shared_binding(model, params, noise)?;
    let losses = batch
        .par_iter()
        .map(|&i| {
            let out = model.forward_bound(&*binding_for(model, params, &shared, noise, i, iter)?, params, &data.states[i])?;
            Ok(sample_loss(loss, &out, &targets(data.task, data.labels[i])).0)
        })
        .collect::<Result<Vec<f64>, ModelError>>()?;
    Ok(losses.iter().sum::<f64>() / batch.len().max(1) as f64)
}

/// Mean batch loss and its gradient over every trainable slot. Both finite
/// difference evaluations of a slot see the same noise draws.
#[allow(clippy::too_many_arguments)]
pub fn gradient(
    model: &ModelSpec,
    params: &[f64],
    data: &Prepared,
    batch: &[usize],
    loss: LossKind,
    mode: GradMode,
    noise: Option<&NoiseSpec>,
    iter: u64,
) -> Result<(f64, Vec<f64>), TrainError> {
    let scale = 1.0 / batch.len().max(1) as f64;
    match mode {
        GradMode::Adjoint => {
            let shared = shared_binding(model, params, noise)?;
            let parts = batch
                .par_iter()
                .map(|&i| {
                    let t = targets(data.task, data.labels[i]);
                    let mut l = 0.0;
                    let bound = binding_for(model, params, &shared, noise, i, iter)?;
                    let (_, g) = model.forward_backward_bound(&bound, params, &data.states[i], |out| {
                        let (li, gi) = sample_loss(loss, out, &t);
                        l = li;
                        gi
                    })?;
                    Ok((l, g))
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            let mut total = 0.0;
            let mut grad = vec![0.0; params.len()];
            for (l, g) in parts {
                total += l;
                grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
            grad.iter_mut().for_each(|v| *v *= scale);
            Ok((total * scale, grad))
        }
        GradMode::CentralFd { h } => {
            let l0 = batch_loss(model, params, data, batch, loss, noise, iter)?;
            let grad = (0..params.len())
                .map(|k| {
                    let mut p = params.to_vec();
                    p[k] = params[k] + h;
                    let up = batch_loss(model, &p, data, batch, loss, noise, iter)?;
                    p[k] = params[k] - h;
                    let down = batch_loss(model, &p, data, batch, loss, noise, iter)?;
                    Ok((up - down) / (2.0 * h))
                })
                .collect::<Result<Vec<_>, TrainError>>()?;
            Ok((l0, grad))
        }
    }
}

/// First/second-moment state of ADAM.
#[derive(Clone, Debug)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for (k, (p, &g)) in params.iter_mut().zip(grad).enumerate() {
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * g;
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * g * g;
            let mhat = self.m[k] / c1;
            let vhat = self.v[k] / c2;
            *p -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
}

pub fn sgd_step(params: &mut [f64], grad: &[f64], lr: f64) {
    params.iter_mut().zip(grad).for_each(|(p, g)| *p -= lr * g);
}

fn batch_indices(n: usize, batch: Batch, seed: u64, iter: usize) -> Vec<usize> {
    match batch {
        Batch::Size(k) if k < n => {
            let mut rng = crate::rng::rng_for(seed, &[0xba7c, iter as u64]);
            let mut idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..n).collect(),
    }
}

/// Trains from `init` and reports the metric on `eval`. A non-finite loss
/// stops the loop and returns the partial report with `diverged = true`.
pub fn optimize(
    model: &ModelSpec,
    init: &ParamVector,
    train: &Prepared,
    eval: &Prepared,
    cfg: &TrainConfig,
    noise: Option<&NoiseSpec>,
) -> Result<RunReport, TrainError> {
    cfg.validate()?;
    if init.len() != model.n_params() {
        return Err(ModelError::ParamLength { expected: model.n_params(), found: init.len() }.into());
    }
    let start = Instant::now();
    let mut params = init.0.clone();
    let mut adam = Adam::new(params.len());
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut diverged = false;
    for iter in 0..cfg.iterations {
        let batch = batch_indices(train.len(), cfg.batch, cfg.seed, iter);
        let (l, g) = gradient(model, &params, train, &batch, cfg.loss, cfg.grad, noise, iter as u64)?;
        if !l.is_finite() || g.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        trace.push(l);
        match cfg.optimizer {
            Optimizer::Sgd => sgd_step(&mut params, &g, cfg.learning_rate),
            Optimizer::Adam => adam.step(&mut params, &g, cfg),
        }
    }
    let (final_metric, train_metric) = if diverged {
        (f64::NAN, f64::NAN)
    } else {
        (evaluate(model, &params, eval, noise)?, evaluate(model, &params, train, noise)?)
    };
    Ok(RunReport {
        loss_trace: trace,
        final_metric,
        train_metric,
        metric_kind: metric_kind(train.task),
        complexity: model.complexity(),
        param_count: model.n_params(),
        wall_time: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
        diverged,
        params: ParamVector(params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::models::sample_observables;
    use crate::qsim::PauliString;

    #[test]
    fn loss_examples() {
        assert_eq!(loss_mse(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(loss_mse(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!((loss_ce(&[0.5], &[1.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(loss_ce(&[0.0], &[1.0]).unwrap().is_finite());
        assert!(matches!(loss_mse(&[1.0], &[]), Err(TrainError::LengthMismatch(1, 0))));
    }

    #[test]
    fn metric_examples() {
        assert_eq!(relative_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((relative_error(&[1.1], &[1.0]).unwrap() - 0.1).abs() < 1e-12);
        assert!((relative_error(&[0.9], &[1.0]).unwrap() - 0.1).abs() < 1e-12);
        assert!(matches!(relative_error(&[0.9], &[0.0]), Err(TrainError::ZeroLabel(0))));
        assert_eq!(accuracy(&[1, 0, 2], &[1, 0, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1], &[0, 0]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 0, 1]).unwrap(), 0.5);
        assert_eq!(predict_class(&[0.5]), 1);
        assert_eq!(predict_class(&[0.49]), 0);
        assert_eq!(predict_class(&[0.1, 0.7, 0.3]), 1);
    }

    #[test]
    fn optimizer_steps() {
        let mut p = vec![1.0, 2.0, -1.0];
        sgd_step(&mut p, &[1.0, 1.0, 1.0], 0.1);
        assert!(p.iter().zip([0.9, 1.9, -1.1]).all(|(a, b)| (a - b).abs() < 1e-15));
        let cfg = TrainConfig::default();
        let mut adam = Adam::new(3);
        let before = p.clone();
        adam.step(&mut p, &[0.0; 3], &cfg);
        assert_eq!(p, before);
    }

    fn regression_setup() -> (ModelSpec, Prepared) {
        let model = ModelSpec::dqnn(2, 1, 1, sample_observables(2, 4, 1).unwrap(), 1, false, 1).unwrap();
        let data = datasets::gen_regression(12, 3);
        let prep = Prepared::new(&model, &data, false).unwrap();
        (model, prep)
    }

    #[test]
    fn zero_alpha_with_zero_labels_is_stationary_in_alpha() {
        let (model, mut prep) = regression_setup();
        prep.labels.iter_mut().for_each(|l| *l = Label::Real(0.0));
        let mut p = model.init_params(0).0;
        let off = model.n_circuit_params();
        p[off..].iter_mut().for_each(|v| *v = 0.0);
        let batch: Vec<usize> = (0..prep.len()).collect();
        let (l, g) = gradient(&model, &p, &prep, &batch, LossKind::Mse, GradMode::Adjoint, None, 0).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn head_sigmoid_derivative_at_center() {
        // L = output = σ(a(m − c)) with a = 1, m = c: ∂L/∂c = −σ'(0)·a = −0.25, times logistic'(c_raw)
        let model = ModelSpec::dqnn(2, 1, 1, vec![PauliString::all_z(2)], 1, false, 0).unwrap();
        let mut p = vec![0.0; model.n_params()];
        let off = model.n_circuit_params();
        p[off] = 1.0;
        p[off + 1] = crate::models::inv_softplus(1.0);
        p[off + 2] = crate::models::logit(0.6);
        let s = model.prepare(&crate::encoding::Input::Features(vec![1.0, 0.0]), false).unwrap();
        let (_, g) = model.forward_backward(&p, &s, None, |_| vec![1.0]).unwrap();
        assert!((g[off + 2] - (-0.25 * 0.6 * 0.4)).abs() < 1e-12);
    }

    #[test]
    fn adjoint_and_fd_training_gradients_agree() {
        let (model, prep) = regression_setup();
        let p = model.init_params(5).0;
        let batch: Vec<usize> = (0..prep.len()).collect();
        for loss in [LossKind::Mse, LossKind::Ce] {
            let (la, ga) = gradient(&model, &p, &prep, &batch, loss, GradMode::Adjoint, None, 0).unwrap();
            let (lf, gf) = gradient(&model, &p, &prep, &batch, loss, GradMode::CentralFd { h: 1e-4 }, None, 0).unwrap();
            assert!((la - lf).abs() < 1e-12);
            for (a, f) in ga.iter().zip(&gf) {
                assert!((a - f).abs() <= 1e-6 + 1e-4 * f.abs(), "{a} vs {f}");
            }
        }
    }

    #[test]
    fn optimize_basics() {
        let (model, prep) = regression_setup();
        let init = model.init_params(2);
        let zero = TrainConfig { iterations: 0, ..TrainConfig::default() };
        let r = optimize(&model, &init, &prep, &prep, &zero, None).unwrap();
        assert!(r.loss_trace.is_empty());
        assert_eq!(r.params, init);
        assert_eq!(r.final_metric, evaluate(&model, &init.0, &prep, None).unwrap());

        let cfg = TrainConfig { iterations: 40, ..TrainConfig::default() };
        let a = optimize(&model, &init, &prep, &prep, &cfg, None).unwrap();
        let b = optimize(&model, &init, &prep, &prep, &cfg, None).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
        assert_eq!(a.params, b.params);
        assert_eq!(a.loss_trace.len(), 40);
        assert!(a.loss_trace[39] < a.loss_trace[0]);
        for t in model.head_terms(&a.params.0, 0) {
            assert!(t.a > 0.0 && t.c > 0.0 && t.c < 1.0);
        }
    }

    #[test]
    fn divergence_stops_early() {
        let (model, mut prep) = regression_setup();
        prep.labels[0] = Label::Real(f64::NAN);
        let cfg = TrainConfig { iterations: 5, ..TrainConfig::default() };
        let r = optimize(&model, &model.init_params(0), &prep, &prep, &cfg, None).unwrap();
        assert!(r.diverged);
        assert!(r.loss_trace.is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { learning_rate: 0.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { beta1: 1.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { grad: GradMode::CentralFd { h: 0.0 }, ..TrainConfig::default() }.validate().is_err());
    }

    #[test]
    fn mini_batches_are_seeded_subsets() {
        let a = batch_indices(100, Batch::Size(10), 3, 7);
        assert_eq!(a, batch_indices(100, Batch::Size(10), 3, 7));
        assert_eq!(a.len(), 10);
        assert_ne!(a, batch_indices(100, Batch::Size(10), 3, 8));
        assert_eq!(batch_indices(5, Batch::Size(10), 3, 0), vec![0, 1, 2, 3, 4]);
    }
}
