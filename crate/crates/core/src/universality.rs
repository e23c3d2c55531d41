//! Least-squares fits of sigmoid-of-overlap expansions
//! `q(x̄) = Σ_j α_j σ(a_j(|⟨z_j|x̄⟩|² − c_j))` on amplitude-encoded inputs.
//!
//! The linear weights `α` are eliminated by variable projection: for fixed
//! `(z, a, c)` they are the exact least-squares solution, and the remaining
//! parameters follow Adam on the reduced objective.  Because `α` is optimal,
//! the reduced gradient is the ordinary gradient at frozen `α`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{amplitude_encode, EncodingError};
use crate::models::{inv_softplus, sigmoid, sigmoid_basis_eval, softplus, ModelError};
use crate::qsim::Statevector;
use crate::training::{Adam, TrainConfig};

#[derive(Debug, Error)]
pub enum UniversalityError {
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unknown target {0:?} (expected constant, indicator or regression)")]
    UnknownTarget(String),
    #[error("invalid fit request: {0}")]
    Invalid(String),
}

/// Functions on the input square, evaluated through the encoded state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Target {
    Constant { value: f64 },
    /// `1` where `x̄` is near `z* = x̄(center)`, with nearness measured
    /// between the decoded inputs: `‖x − center‖ < radius`.  (A cap
    /// `‖x̄ − z*‖ < r` on the sphere is the sharp limit of a single basis
    /// element, so it says nothing about density.)
    Indicator { center: [f64; 2], radius: f64 },
    /// The synthetic regression surface.
    Regression,
}

impl Target {
    pub fn from_id(id: &str) -> Result<Self, UniversalityError> {
        match id {
            "constant" => Ok(Target::Constant { value: 1.0 }),
            "indicator" => Ok(Target::Indicator { center: [-0.4, 0.1], radius: 0.3 }),
            "regression" => Ok(Target::Regression),
            other => Err(UniversalityError::UnknownTarget(other.into())),
        }
    }

    pub fn values(&self, grid: &QuadratureGrid) -> Result<Vec<f64>, UniversalityError> {
        Ok(match self {
            Target::Constant { value } => vec![*value; grid.len()],
            Target::Indicator { center, radius } => grid
                .inputs
                .iter()
                .map(|x| f64::from(u8::from((x[0] - center[0]).hypot(x[1] - center[1]) < *radius)))
                .collect(),
            Target::Regression => grid.inputs.iter().map(|x| crate::datasets::regression_target(x[0], x[1])).collect(),
        })
    }
}

fn real_amplitudes(s: &Statevector) -> Vec<f64> {
    s.amplitudes().iter().map(|a| a.re).collect()
}

/// Uniform tensor grid on `[−half, half]²` with equal weights, together with
/// the (real) encoded amplitudes of each node.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    pub inputs: Vec<[f64; 2]>,
    pub states: Vec<Vec<f64>>,
}

impl QuadratureGrid {
    /// `side × side` cell centres, so the origin is never a node.
    pub fn square(side: usize, half: f64) -> Result<Self, UniversalityError> {
        if side == 0 || half <= 0.0 {
            return Err(UniversalityError::Invalid("grid needs a positive side and half-width".into()));
        }
        let h = 2.0 * half / side as f64;
        let coord = |i: usize| -half + (i as f64 + 0.5) * h;
        let inputs: Vec<[f64; 2]> = (0..side).flat_map(|i| (0..side).map(move |k| [coord(i), coord(k)])).collect();
        let states = inputs.iter().map(|x| Ok(real_amplitudes(&amplitude_encode(x)?))).collect::<Result<_, UniversalityError>>()?;
        Ok(Self { inputs, states })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Discrete L² norm `sqrt(mean f²)`.
    pub fn norm(&self, f: &[f64]) -> f64 {
        (f.iter().map(|v| v * v).sum::<f64>() / f.len() as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub iterations: usize,
    pub restarts: usize,
    pub learning_rate: f64,
    /// Levenberg-Marquardt steps after the Adam phase.
    pub polish_steps: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { iterations: 100, restarts: 5, learning_rate: 0.1, polish_steps: 20, seed: 0 }
    }
}

/// Raw parameters of one basis element: `z = (u + iv)/‖u + iv‖`,
/// `a = softplus(a_raw)`, `c = σ(c_raw)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a_raw: f64,
    pub c_raw: f64,
}

impl Unit {
    /// Generic draw: Gaussian `u`, `v`, raw slope and threshold.
    fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let mut g = || rng.sample::<f64, _>(StandardNormal);
        Unit { u: (0..dim).map(|_| g()).collect(), v: (0..dim).map(|_| g()).collect(), a_raw: 2.0 * g(), c_raw: g() }
    }

    /// A bump around a random grid node: `z` near that node's state, a steep
    /// slope and a threshold close to full overlap.
    fn seeded<R: Rng>(grid: &QuadratureGrid, rng: &mut R) -> Self {
        let node = rng.random_range(0..grid.len());
        Self::bump_at(grid, node, rng)
    }

    fn bump_at<R: Rng>(grid: &QuadratureGrid, node: usize, rng: &mut R) -> Self {
        let node = &grid.states[node];
        let mut g = || 0.05 * rng.sample::<f64, _>(StandardNormal);
        let u = node.iter().map(|x| x + g()).collect();
        let v = node.iter().map(|_| g()).collect();
        let a = rng.random_range(5.0..40.0);
        let c: f64 = rng.random_range(0.6..0.98);
        Unit { u, v, a_raw: inv_softplus(a), c_raw: (c / (1.0 - c)).ln() }
    }

    pub fn z(&self) -> Statevector {
        let n = self.norm2().sqrt();
        let amps = self.u.iter().zip(&self.v).map(|(&u, &v)| Complex64::new(u / n, v / n)).collect();
        Statevector::from_amplitudes(amps).expect("unit vector of power-of-two length")
    }

    pub fn a(&self) -> f64 {
        softplus(self.a_raw)
    }

    pub fn c(&self) -> f64 {
        sigmoid(self.c_raw)
    }

    fn norm2(&self) -> f64 {
        self.u.iter().chain(&self.v).map(|t| t * t).sum()
    }

    const fn n_params(dim: usize) -> usize {
        2 * dim + 2
    }

    fn flatten(&self, out: &mut Vec<f64>) {
        out.extend(&self.u);
        out.extend(&self.v);
        out.extend([self.a_raw, self.c_raw]);
    }

    fn unflatten(p: &[f64], dim: usize) -> Self {
        Unit { u: p[..dim].to_vec(), v: p[dim..2 * dim].to_vec(), a_raw: p[2 * dim], c_raw: p[2 * dim + 1] }
    }

    /// `|⟨z|x⟩|²` for a real `x`.
    fn overlap(&self, x: &[f64]) -> f64 {
        let (pu, pv) = x.iter().zip(self.u.iter().zip(&self.v)).fold((0.0, 0.0), |(a, b), (xi, (u, v))| (a + u * xi, b + v * xi));
        (pu * pu + pv * pv) / self.norm2()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub units: Vec<Unit>,
    pub alpha: Vec<f64>,
    /// Discrete L² error `sqrt(mean (q − f)²)` on the grid.
    pub error: f64,
}

impl Fit {
    pub fn n_s(&self) -> usize {
        self.units.len()
    }

    /// Evaluates the expansion through [`sigmoid_basis_eval`].
    pub fn evaluate(&self, xbar: &Statevector) -> Result<f64, UniversalityError> {
        let z: Vec<Statevector> = self.units.iter().map(Unit::z).collect();
        let a: Vec<f64> = self.units.iter().map(Unit::a).collect();
        let c: Vec<f64> = self.units.iter().map(Unit::c).collect();
        Ok(sigmoid_basis_eval(&z, &a, &c, &self.alpha, xbar)?)
    }
}

/// Column matrix `Φ_ij = σ(a_j(m_ij − c_j))` plus the overlaps `m_ij`.
fn design(grid: &QuadratureGrid, units: &[Unit]) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, k) = (grid.len(), units.len());
    let mut phi = DMatrix::zeros(n, k);
    let mut m = DMatrix::zeros(n, k);
    for (j, unit) in units.iter().enumerate() {
        let (a, c) = (unit.a(), unit.c());
        for (i, x) in grid.states.iter().enumerate() {
            let mij = unit.overlap(x);
            m[(i, j)] = mij;
            phi[(i, j)] = sigmoid(a * (mij - c));
        }
    }
    (phi, m)
}

/// Least-squares weights; normal equations with a tiny ridge, SVD if those
/// are numerically singular.
fn solve_alpha(phi: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let k = phi.ncols();
    if k == 0 {
        return DVector::zeros(0);
    }
    let mut gram = phi.transpose() * phi;
    let scale = (0..k).map(|j| gram[(j, j)]).fold(0.0, f64::max).max(1e-300);
    for j in 0..k {
        gram[(j, j)] += 1e-13 * scale;
    }
    let rhs = phi.transpose() * f;
    match gram.cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => phi.clone().svd(true, true).solve(f, 1e-12).expect("SVD with both factors"),
    }
}

fn rms(r: &DVector<f64>) -> f64 {
    (r.norm_squared() / r.len() as f64).sqrt()
}

/// Projected residual, error and weights for one parameter set.
fn project(grid: &QuadratureGrid, units: &[Unit], f: &DVector<f64>) -> (Fit, DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let (phi, m) = design(grid, units);
    let alpha = solve_alpha(&phi, f);
    let r = &phi * &alpha - f;
    let fit = Fit { units: units.to_vec(), alpha: alpha.iter().copied().collect(), error: rms(&r) };
    (fit, phi, m, r)
}

/// Jacobian of the residual `Φα − f` at frozen `α` with respect to the raw
/// parameters of units `from..`.
fn jacobian(grid: &QuadratureGrid, fit: &Fit, phi: &DMatrix<f64>, m: &DMatrix<f64>, from: usize) -> DMatrix<f64> {
    let dim = grid.dim();
    let np = Unit::n_params(dim);
    let mut jac = DMatrix::zeros(grid.len(), np * (fit.n_s() - from));
    for (j, unit) in fit.units.iter().enumerate().skip(from) {
        let (a, c, nrm) = (unit.a(), unit.c(), unit.norm2());
        let (da, dc) = (sigmoid(unit.a_raw), c * (1.0 - c));
        let col = (j - from) * np;
        for (i, x) in grid.states.iter().enumerate() {
            let s = phi[(i, j)];
            // d residual / d pre-activation
            let w = fit.alpha[j] * s * (1.0 - s);
            let mij = m[(i, j)];
            let (pu, pv) = x.iter().zip(unit.u.iter().zip(&unit.v)).fold((0.0, 0.0), |(p, q), (xi, (u, v))| (p + u * xi, q + v * xi));
            for k in 0..dim {
                jac[(i, col + k)] = w * a * 2.0 * (pu * x[k] - mij * unit.u[k]) / nrm;
                jac[(i, col + dim + k)] = w * a * 2.0 * (pv * x[k] - mij * unit.v[k]) / nrm;
            }
            jac[(i, col + 2 * dim)] = w * (mij - c) * da;
            jac[(i, col + 2 * dim + 1)] = -w * a * dc;
        }
    }
    jac
}

/// Gradient of `mean r²` at frozen `α`, which equals the gradient of the
/// projected objective because `α` is its least-squares optimum.
fn reduced_gradient(jac: &DMatrix<f64>, r: &DVector<f64>) -> Vec<f64> {
    let g = jac.transpose() * r * (2.0 / r.len() as f64);
    g.iter().copied().collect()
}

fn flatten(units: &[Unit]) -> Vec<f64> {
    let mut p = Vec::new();
    units.iter().for_each(|u| u.flatten(&mut p));
    p
}

fn unflatten(p: &[f64], dim: usize) -> Vec<Unit> {
    p.chunks(Unit::n_params(dim)).map(|c| Unit::unflatten(c, dim)).collect()
}

/// `fixed` followed by the units encoded in `free`.
fn assemble(fixed: &[Unit], free: &[f64], dim: usize) -> Vec<Unit> {
    fixed.iter().cloned().chain(unflatten(free, dim)).collect()
}

/// Adam on units `from..` of `start`; returns the best iterate seen (the start included).
fn adam_phase(grid: &QuadratureGrid, start: Vec<Unit>, from: usize, f: &DVector<f64>, cfg: &FitConfig) -> Fit {
    let dim = grid.dim();
    let fixed = &start[..from];
    let mut params = flatten(&start[from..]);
    let adam_cfg = TrainConfig { learning_rate: cfg.learning_rate, ..TrainConfig::default() };
    let mut adam = Adam::new(params.len());
    let mut best: Option<Fit> = None;
    for it in 0..=cfg.iterations {
        let (fit, phi, m, r) = project(grid, &assemble(fixed, &params, dim), f);
        if it < cfg.iterations && !params.is_empty() {
            let grad = reduced_gradient(&jacobian(grid, &fit, &phi, &m, from), &r);
            adam.step(&mut params, &grad, &adam_cfg);
        }
        if best.as_ref().is_none_or(|b| fit.error < b.error) {
            best = Some(fit);
        }
    }
    best.expect("at least one iterate")
}

/// Levenberg-Marquardt on units `from..` with Kaufman's variable-projection
/// Jacobian `(I − QQᵀ) J`, `Q` an orthonormal basis of the columns of `Φ`;
/// `α` is re-projected after every trial step and only improving steps are kept.
fn lm_polish(grid: &QuadratureGrid, start: Fit, from: usize, f: &DVector<f64>, steps: usize) -> Fit {
    let dim = grid.dim();
    let mut best = start;
    let mut lambda = 1e-3;
    for _ in 0..steps {
        if best.error == 0.0 || best.n_s() <= from {
            break;
        }
        let (_, phi, m, r) = project(grid, &best.units, f);
        let mut jac = jacobian(grid, &best, &phi, &m, from);
        let q = phi.qr().q();
        jac -= &q * (q.transpose() * &jac);
        let jtj = jac.transpose() * &jac;
        let rhs = -(jac.transpose() * &r);
        let p0 = flatten(&best.units[from..]);
        // Marquardt scaling with a floor, so flat (saturated) directions stay damped
        let floor = 1e-6 * (0..jtj.nrows()).map(|k| jtj[(k, k)]).fold(1e-300, f64::max);
        let mut accepted = false;
        while lambda < 1e12 {
            let mut lhs = jtj.clone();
            for k in 0..lhs.nrows() {
                lhs[(k, k)] += lambda * jtj[(k, k)].max(floor);
            }
            if let Some(step) = lhs.cholesky().map(|ch| ch.solve(&rhs)) {
                let trial: Vec<f64> = p0.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
                let fit = project(grid, &assemble(&best.units[..from], &trial, dim), f).0;
                if fit.error < best.error {
                    best = fit;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    best
}

fn descend(grid: &QuadratureGrid, start: Vec<Unit>, from: usize, f: &DVector<f64>, cfg: &FitConfig) -> Fit {
    let explored = adam_phase(grid, start, from, f, cfg);
    lm_polish(grid, explored, from, f, cfg.polish_steps)
}

/// Slopes and thresholds of the cap dictionary scanned for each new unit.
const ATOM_SLOPES: [f64; 3] = [10.0, 40.0, 160.0];
const ATOM_THRESHOLDS: [f64; 6] = [0.5, 0.7, 0.8, 0.9, 0.95, 0.98];

/// The dictionary atom (a cap centred on a grid node) whose column removes
/// the most residual once orthogonalized against the current columns.
fn best_atom(grid: &QuadratureGrid, current: &Fit, f: &DVector<f64>) -> Unit {
    let (phi, _, r) = {
        let (_, phi, m, r) = project(grid, &current.units, f);
        (phi, m, r)
    };
    let q = (phi.ncols() > 0).then(|| phi.qr().q());
    let dim = grid.dim();
    let mut best = (f64::NEG_INFINITY, Unit { u: grid.states[0].clone(), v: vec![0.0; dim], a_raw: 0.0, c_raw: 0.0 });
    for node in &grid.states {
        let probe = Unit { u: node.clone(), v: vec![0.0; dim], a_raw: 0.0, c_raw: 0.0 };
        let m: Vec<f64> = grid.states.iter().map(|x| probe.overlap(x)).collect();
        for &a in &ATOM_SLOPES {
            for &c in &ATOM_THRESHOLDS {
                let mut col = DVector::from_iterator(m.len(), m.iter().map(|mi| sigmoid(a * (mi - c))));
                if let Some(q) = &q {
                    col -= q * (q.transpose() * &col);
                }
                let nn = col.norm_squared();
                if nn < 1e-12 {
                    continue;
                }
                let gain = col.dot(&r).powi(2) / nn;
                if gain > best.0 {
                    best = (gain, Unit { u: node.clone(), v: vec![0.0; dim], a_raw: inv_softplus(a), c_raw: (c / (1.0 - c)).ln() });
                }
            }
        }
    }
    best.1
}

/// Greedy fit with `n_s` units, grown one unit at a time from `warm` (or
/// from the empty expansion).  Each growth step tries `cfg.restarts`
/// candidates for the new unit (restart 0: the best cap atom from a
/// matching-pursuit scan; then alternating random bumps and generic draws),
/// trains only that unit and keeps the best; a joint polish of all units
/// follows.  Adding a column cannot raise the least-squares error and every
/// descent keeps its best iterate, so the result is never worse than `warm`.
/// Without `warm` (or from an empty one), `cfg.restarts` joint fits of all `n_s` units from fresh
/// draws compete as well.
pub fn fit_sigmoid_basis(
    grid: &QuadratureGrid,
    f: &[f64],
    n_s: usize,
    cfg: &FitConfig,
    warm: Option<&Fit>,
) -> Result<Fit, UniversalityError> {
    if f.len() != grid.len() || grid.is_empty() {
        return Err(UniversalityError::Invalid(format!("{} target values for {} grid nodes", f.len(), grid.len())));
    }
    let fv = DVector::from_column_slice(f);
    let mut current = match warm {
        Some(w) if w.n_s() > n_s => {
            return Err(UniversalityError::Invalid(format!("warm start has {} units, more than n_s = {n_s}", w.n_s())))
        }
        Some(w) => project(grid, &w.units, &fv).0,
        None => project(grid, &[], &fv).0,
    };
    let grew = current.n_s() < n_s;
    while current.n_s() < n_s {
        let k = current.n_s();
        let mut best: Option<Fit> = None;
        for restart in 0..cfg.restarts.max(1) {
            let mut rng = crate::rng::rng_for(cfg.seed, &[0x5e7, k as u64, restart as u64]);
            let new = match restart {
                0 => best_atom(grid, &current, &fv),
                r if r % 2 == 1 => Unit::seeded(grid, &mut rng),
                _ => Unit::random(grid.dim(), &mut rng),
            };
            let mut units = current.units.clone();
            units.push(new);
            let fit = descend(grid, units, k, &fv, cfg);
            if best.as_ref().is_none_or(|b| fit.error < b.error) {
                best = Some(fit);
            }
        }
        current = best.expect("at least one restart");
    }
    if grew {
        current = lm_polish(grid, current, 0, &fv, cfg.polish_steps);
    }
    // joint fresh fits guard against greedy paths that miss a good
    // configuration of all units together
    let fresh = warm.is_none_or(|w| w.n_s() == 0);
    for restart in 0..if fresh && n_s > 0 { cfg.restarts } else { 0 } {
        let mut rng = crate::rng::rng_for(cfg.seed, &[0x10f7, n_s as u64, restart as u64]);
        let units = (0..n_s).map(|_| if restart % 2 == 0 { Unit::seeded(grid, &mut rng) } else { Unit::random(grid.dim(), &mut rng) }).collect();
        let fit = descend(grid, units, 0, &fv, cfg);
        if fit.error < current.error {
            current = fit;
        }
    }
    Ok(current)
}

/// Fits for each `n_s` in ascending order, warm-starting from the previous one.
pub fn convergence(grid: &QuadratureGrid, target: &Target, n_s: &[usize], cfg: &FitConfig) -> Result<Vec<Fit>, UniversalityError> {
    let f = target.values(grid)?;
    let mut sorted = n_s.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out: Vec<Fit> = Vec::with_capacity(sorted.len());
    for &k in &sorted {
        let fit = fit_sigmoid_basis(grid, &f, k, cfg, out.last())?;
        out.push(fit);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::logit;

    fn grid() -> QuadratureGrid {
        QuadratureGrid::square(20, 0.8).unwrap()
    }

    #[test]
    fn empty_expansion_error_is_target_norm() {
        let g = grid();
        let f = Target::from_id("regression").unwrap().values(&g).unwrap();
        let fit = fit_sigmoid_basis(&g, &f, 0, &FitConfig::default(), None).unwrap();
        assert!((fit.error - g.norm(&f)).abs() < 1e-15);
    }

    #[test]
    fn saturated_unit_reproduces_a_constant() {
        let g = grid();
        let f = vec![0.7; g.len()];
        // closed form: z = |10⟩ (the padding amplitude) has overlap
        // 1/(1 + (1 + ‖x‖)²) ≥ 0.12 on the patch, so with c = 0.05 and a = 400
        // the unit saturates at 1 and LS picks α = 0.7
        let unit = Unit { u: vec![0.0, 0.0, 1.0, 0.0], v: vec![0.0; 4], a_raw: 400.0, c_raw: logit(0.05) };
        let m_min = g.states.iter().map(|x| unit.overlap(x)).fold(f64::INFINITY, f64::min);
        assert!(m_min > 0.12, "{m_min}");
        let closed = project(&g, &[unit], &DVector::from_column_slice(&f)).0;
        assert!(closed.error < 1e-12, "{}", closed.error);
        assert!((closed.alpha[0] - 0.7).abs() < 1e-12);

        let fitted = fit_sigmoid_basis(&g, &f, 1, &FitConfig { iterations: 600, ..FitConfig::default() }, None).unwrap();
        assert!(fitted.error < 1e-6, "{}", fitted.error);
    }

    #[test]
    fn error_sequence_is_non_increasing() {
        let g = grid();
        let cfg = FitConfig { iterations: 150, restarts: 5, ..FitConfig::default() };
        let fits = convergence(&g, &Target::from_id("indicator").unwrap(), &[0, 1, 2, 4, 6], &cfg).unwrap();
        assert_eq!(fits.iter().map(Fit::n_s).collect::<Vec<_>>(), vec![0, 1, 2, 4, 6]);
        for w in fits.windows(2) {
            assert!(w[1].error <= w[0].error, "{} > {}", w[1].error, w[0].error);
        }
    }

    #[test]
    fn grid_evaluation_matches_basis_eval() {
        let g = grid();
        let mut rng = crate::rng::rng_for(3, &[]);
        let units: Vec<Unit> = (0..3).map(|_| Unit::seeded(&g, &mut rng)).collect();
        let f = Target::from_id("regression").unwrap().values(&g).unwrap();
        let (fit, phi, _, _) = project(&g, &units, &DVector::from_column_slice(&f));
        let fast = &phi * DVector::from_column_slice(&fit.alpha);
        for i in (0..g.len()).step_by(37) {
            let xbar = amplitude_encode(&g.inputs[i]).unwrap();
            assert!((fit.evaluate(&xbar).unwrap() - fast[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_gradient_matches_finite_differences() {
        let g = QuadratureGrid::square(6, 0.8).unwrap();
        let f = Target::from_id("regression").unwrap().values(&g).unwrap();
        let fv = DVector::from_column_slice(&f);
        let mut rng = crate::rng::rng_for(9, &[]);
        let units: Vec<Unit> = (0..2).map(|_| Unit::seeded(&g, &mut rng)).collect();
        let (fit, phi, m, r) = project(&g, &units, &fv);
        let grad = reduced_gradient(&jacobian(&g, &fit, &phi, &m, 0), &r);
        let flat = flatten(&units);
        let loss = |p: &[f64]| {
            let us: Vec<Unit> = p.chunks(10).map(|c| Unit::unflatten(c, 4)).collect();
            project(&g, &us, &fv).0.error.powi(2)
        };
        let h = 1e-6;
        for k in 0..flat.len() {
            let (mut up, mut dn) = (flat.clone(), flat.clone());
            up[k] += h;
            dn[k] -= h;
            let fd = (loss(&up) - loss(&dn)) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-6 * (1.0 + fd.abs()), "param {k}: fd {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn target_ids() {
        assert!(matches!(Target::from_id("nope"), Err(UniversalityError::UnknownTarget(_))));
        let g = grid();
        let ind = Target::from_id("indicator").unwrap().values(&g).unwrap();
        let inside = ind.iter().filter(|&&v| v == 1.0).count();
        assert!(inside > 0 && inside < g.len() / 2, "{inside}");
    }
}
