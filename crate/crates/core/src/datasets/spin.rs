use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{blank_card, Dataset, DatasetError, Recipe, Task};
use crate::encoding::{DataPoint, Input, Label};
use crate::qsim::Statevector;

const MAX_SITES: usize = 15;
const RESIDUAL_TOL: f64 = 1e-8;
const MAX_KRYLOV: usize = 120;
const MAX_RESTARTS: usize = 60;
/// Gaps below this count as a degenerate ground space.
const DEGENERACY_TOL: f64 = 1e-8;

/// Open chain `H = −J Σ ZXZ − h₁ Σ X − h₂ Σ XX` on `n` sites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinChainSpec {
    pub n: usize,
    pub j: f64,
    pub h1: f64,
    pub h2: f64,
}

impl SpinChainSpec {
    pub fn new(n: usize, j: f64, h1: f64, h2: f64) -> Result<Self, DatasetError> {
        let s = Self { n, j, h1, h2 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if !(3..=MAX_SITES).contains(&self.n) {
            return Err(DatasetError::Spin(format!("{} sites, need 3..={MAX_SITES}", self.n)));
        }
        if ![self.j, self.h1, self.h2].iter().all(|v| v.is_finite()) {
            return Err(DatasetError::Spin("non-finite coupling".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }
}

/// `out = H psi`. The Hamiltonian is real in the computational basis; site 0
/// is the most significant bit.
pub fn apply_hamiltonian(spec: &SpinChainSpec, psi: &[f64], out: &mut [f64]) {
    let n = spec.n;
    let mask = |site: usize| 1usize << (n - 1 - site);
    let sign = |idx: usize, site: usize| if idx & mask(site) == 0 { 1.0 } else { -1.0 };
    let row = |idx: usize| {
        let mut acc = 0.0;
        // ZXZ: the Z phases sit on bits the X does not flip
        for a in 0..n - 2 {
            acc -= spec.j * sign(idx, a) * sign(idx, a + 2) * psi[idx ^ mask(a + 1)];
        }
        for i in 0..n {
            acc -= spec.h1 * psi[idx ^ mask(i)];
        }
        for i in 0..n - 1 {
            acc -= spec.h2 * psi[idx ^ mask(i) ^ mask(i + 1)];
        }
        acc
    };
    if psi.len() >= 1 << 12 {
        out.par_iter_mut().enumerate().for_each(|(idx, o)| *o = row(idx));
    } else {
        out.iter_mut().enumerate().for_each(|(idx, o)| *o = row(idx));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundState {
    pub state: Statevector,
    pub energy: f64,
    pub residual: f64,
    /// Distance to the next eigenvalue.
    pub gap: f64,
    pub degenerate: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(u, v)| *u += alpha * v);
}

fn normalize(v: &mut [f64]) -> f64 {
    let nrm = dot(v, v).sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes keep the basis orthogonal to working precision
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            axpy(v, -c, b);
        }
    }
}

/// Lowest eigenpair of `spec` restricted to the complement of `deflate`, by
/// restarted Lanczos with full reorthogonalization.
fn lanczos(spec: &SpinChainSpec, start: Vec<f64>, deflate: &[Vec<f64>]) -> Result<(f64, Vec<f64>, f64), DatasetError> {
    let dim = spec.dim();
    let room = dim - deflate.len();
    let mut x = start;
    let mut hv = vec![0.0; dim];
    for _ in 0..MAX_RESTARTS {
        orthogonalize(&mut x, deflate);
        if normalize(&mut x) == 0.0 {
            return Err(DatasetError::Spin("start vector lies in the deflated space".into()));
        }
        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let coeffs: Vec<f64> = loop {
            let k = basis.len() - 1;
            apply_hamiltonian(spec, &basis[k], &mut hv);
            let mut w = hv.clone();
            alpha.push(dot(&w, &basis[k]));
            orthogonalize(&mut w, deflate);
            orthogonalize(&mut w, &basis);
            let b = normalize(&mut w);
            let m = alpha.len();
            let full = b < 1e-13 || m >= MAX_KRYLOV.min(room);
            if m % 8 != 0 && !full {
                beta.push(b);
                basis.push(w);
                continue;
            }
            let t = DMatrix::from_fn(m, m, |r, c| match r.abs_diff(c) {
                0 => alpha[r],
                1 => beta[r.min(c)],
                _ => 0.0,
            });
            let eig = SymmetricEigen::new(t);
            let lo = eig.eigenvalues.imin();
            let ritz = eig.eigenvectors.column(lo);
            if full || (b * ritz[m - 1]).abs() < 0.1 * RESIDUAL_TOL {
                break ritz.iter().copied().collect();
            }
            beta.push(b);
            basis.push(w);
        };
        x = vec![0.0; dim];
        for (c, v) in coeffs.iter().zip(&basis) {
            axpy(&mut x, *c, v);
        }
        orthogonalize(&mut x, deflate);
        normalize(&mut x);
        apply_hamiltonian(spec, &x, &mut hv);
        orthogonalize(&mut hv, deflate);
        let e = dot(&hv, &x);
        axpy(&mut hv, -e, &x);
        let residual = dot(&hv, &hv).sqrt();
        if residual < RESIDUAL_TOL {
            return Ok((e, x, residual));
        }
    }
    Err(DatasetError::Spin(format!("Lanczos did not reach residual {RESIDUAL_TOL:e} for {spec:?}")))
}

fn start_vector(dim: usize, stream: u64) -> Vec<f64> {
    let mut rng = crate::rng::rng_for(0x5c1a, &[dim as u64, stream]);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Ground state by iterative eigensolution, with the sign fixed so the first
/// nonzero amplitude is positive. A deflated second solve gives the gap.
pub fn haldane_ground_state(spec: &SpinChainSpec) -> Result<GroundState, DatasetError> {
    spec.validate()?;
    let dim = spec.dim();
    let (energy, mut psi, residual) = lanczos(spec, start_vector(dim, 0), &[])?;
    if let Some(first) = psi.iter().find(|a| a.abs() > 1e-10) {
        if *first < 0.0 {
            psi.iter_mut().for_each(|a| *a = -*a);
        }
    }
    let (e1, _, _) = lanczos(spec, start_vector(dim, 1), std::slice::from_ref(&psi))?;
    let gap = e1 - energy;
    let state = Statevector::from_real(&psi).map_err(|e| DatasetError::Spin(e.to_string()))?;
    Ok(GroundState { state, energy, residual, gap, degenerate: gap < DEGENERACY_TOL })
}

/// Real polynomial with coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Least-squares fit of the given degree.
    pub fn fit(points: &[(f64, f64)], degree: usize) -> Result<Self, DatasetError> {
        if points.len() <= degree {
            return Err(DatasetError::Invalid(format!("{} points cannot fix degree {degree}", points.len())));
        }
        let a = DMatrix::from_fn(points.len(), degree + 1, |r, c| points[r].0.powi(c as i32));
        let b = nalgebra::DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
        let coef = a.svd(true, true).solve(&b, 1e-14).map_err(|e| DatasetError::Invalid(e.to_string()))?;
        Ok(Self(coef.iter().copied().collect()))
    }
}

/// `⟨Z_a X_{a+1} X_{a+3} ⋯ X_{b−1} Z_b⟩`, the product of the ZXZ stabilizers
/// centred on `a+1, a+3, …, b−1`. Needs `b − a` even; 1 on the cluster state.
pub fn string_order(state: &Statevector, a: usize, b: usize) -> f64 {
    let n = state.n_qubits();
    assert!(a < b && b < n && (b - a) % 2 == 0, "string ({a}, {b}) invalid on {n} sites");
    let mask = |s: usize| 1usize << (n - 1 - s);
    let flip = (a + 1..b).step_by(2).fold(0, |m, s| m | mask(s));
    let amps = state.amplitudes();
    (0..amps.len())
        .map(|i| {
            let z = if (i & mask(a) == 0) == (i & mask(b) == 0) { 1.0 } else { -1.0 };
            z * (amps[i].conj() * amps[i ^ flip]).re
        })
        .sum()
}

/// SPT boundary points on a chain: for each `h₁`, the `h₂` values above and
/// below the SPT band where the end-to-end [`string_order`] crosses `level`.
/// Columns where the band does not cross the window edge contribute nothing.
pub fn string_order_contour(
    n_sites: usize,
    h1s: &[f64],
    h2_range: (f64, f64),
    level: f64,
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>), DatasetError> {
    if n_sites < 5 {
        return Err(DatasetError::Spin(format!("string order needs 5 sites, got {n_sites}")));
    }
    let order = |h1: f64, h2: f64| -> Result<f64, DatasetError> {
        let g = haldane_ground_state(&SpinChainSpec::new(n_sites, 1.0, h1, h2)?)?;
        Ok(string_order(&g.state, 1, n_sites - 2 - (n_sites - 3) % 2))
    };
    let bisect = |h1: f64, inside: f64, outside: f64| -> Result<f64, DatasetError> {
        let (mut i, mut o) = (inside, outside);
        for _ in 0..30 {
            let mid = 0.5 * (i + o);
            if order(h1, mid)? >= level {
                i = mid;
            } else {
                o = mid;
            }
        }
        Ok(0.5 * (i + o))
    };
    let cols = h1s
        .par_iter()
        .map(|&h1| -> Result<(Option<(f64, f64)>, Option<(f64, f64)>), DatasetError> {
            // coarse scan for the peak of the band
            let steps = 64;
            let grid: Vec<f64> = linspace(steps + 1, h2_range).collect();
            let vals = grid.iter().map(|&h2| order(h1, h2)).collect::<Result<Vec<_>, _>>()?;
            let peak = (0..vals.len()).max_by(|&x, &y| vals[x].total_cmp(&vals[y])).unwrap_or(0);
            if vals[peak] < level {
                return Ok((None, None));
            }
            let up = (vals[steps] < level).then(|| bisect(h1, grid[peak], h2_range.1)).transpose()?;
            let lo = (vals[0] < level).then(|| bisect(h1, grid[peak], h2_range.0)).transpose()?;
            Ok((up.map(|h2| (h1, h2)), lo.map(|h2| (h1, h2))))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((cols.iter().filter_map(|c| c.0).collect(), cols.iter().filter_map(|c| c.1).collect()))
}

/// Equally spaced `(h₁, h₂)` samples labelled against boundary curves.
///
/// A point is SPT (class 0) when `h₂ ≤ boundary(h₁)` and, if `lower_boundary`
/// is set, also `h₂ > lower_boundary(h₁)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGrid {
    pub n1: usize,
    pub n2: usize,
    pub h1_range: (f64, f64),
    pub h2_range: (f64, f64),
    pub n_sites: usize,
    #[serde(default = "unit")]
    pub j: f64,
    pub boundary: Polynomial,
    #[serde(default)]
    pub lower_boundary: Option<Polynomial>,
}

fn unit() -> f64 {
    1.0
}

fn linspace(n: usize, (lo, hi): (f64, f64)) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

impl PhaseGrid {
    /// Cheap grid over the full parameter window on a 5-site chain.
    pub fn small_test(n: usize) -> Self {
        Self {
            n1: n,
            n2: n,
            h1_range: (0.0, 1.6),
            h2_range: (-1.6, 1.6),
            n_sites: 5,
            j: 1.0,
            boundary: Polynomial(vec![1.0, -1.0]),
            lower_boundary: None,
        }
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        linspace(self.n1, self.h1_range).flat_map(|h1| linspace(self.n2, self.h2_range).map(move |h2| (h1, h2))).collect()
    }

    /// `(is_spt, on_a_boundary)`.
    pub fn classify(&self, h1: f64, h2: f64) -> (bool, bool) {
        let up = self.boundary.eval(h1);
        let lo = self.lower_boundary.as_ref().map(|p| p.eval(h1));
        let touch = |b: f64| (h2 - b).abs() < 1e-12;
        let spt = h2 <= up && lo.is_none_or(|l| h2 > l);
        (spt, touch(up) || lo.is_some_and(touch))
    }
}

/// Ground states over the grid, `h₁` outer and `h₂` inner; class 0 is SPT.
pub fn gen_phase_dataset(grid: &PhaseGrid) -> Result<Dataset, DatasetError> {
    if grid.n1 == 0 || grid.n2 == 0 {
        return Err(DatasetError::Invalid("empty phase grid".into()));
    }
    let points = grid.points();
    let states = points
        .par_iter()
        .map(|&(h1, h2)| haldane_ground_state(&SpinChainSpec::new(grid.n_sites, grid.j, h1, h2)?))
        .collect::<Result<Vec<_>, _>>()?;
    let mut notes = Vec::new();
    let samples = points
        .iter()
        .zip(states)
        .map(|(&(h1, h2), g)| {
            let (spt, edge) = grid.classify(h1, h2);
            if edge {
                notes.push(format!("(h1, h2) = ({h1}, {h2}) lies on a boundary; labelled by the <= convention"));
            }
            if g.degenerate {
                notes.push(format!("(h1, h2) = ({h1}, {h2}) has a degenerate ground space (gap {:.2e})", g.gap));
            }
            DataPoint { input: Input::State(g.state), label: Label::Class(usize::from(!spt)) }
        })
        .collect();
    let mut card = blank_card(
        "phase",
        &format!("open {}-site cluster-Ising chain ground states", grid.n_sites),
        "none",
        Recipe::Phase { grid: grid.clone() },
    );
    card.notes = notes;
    Ok(Dataset::new(samples, Task::Multiclass(2), card))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::test_support::random_state;
    use rand::SeedableRng;

    fn dense(spec: &SpinChainSpec) -> DMatrix<f64> {
        let d = spec.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        let mut col = vec![0.0; d];
        for c in 0..d {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            apply_hamiltonian(spec, &e, &mut col);
            m.set_column(c, &nalgebra::DVector::from_column_slice(&col));
        }
        m
    }

    fn expect(spec: &SpinChainSpec, psi: &Statevector) -> f64 {
        let d = spec.dim();
        let mut out = vec![0.0; d];
        let mut total = 0.0;
        for part in [|a: &num_complex::Complex64| a.re, |a: &num_complex::Complex64| a.im] {
            let v: Vec<f64> = psi.amplitudes().iter().map(part).collect();
            apply_hamiltonian(spec, &v, &mut out);
            total += dot(&v, &out);
        }
        total
    }

    #[test]
    fn paramagnetic_limit() {
        let spec = SpinChainSpec::new(6, 0.0, 1.0, 0.0).unwrap();
        let g = haldane_ground_state(&spec).unwrap();
        assert!((g.energy + 6.0).abs() < 1e-10);
        let plus = 1.0 / 8.0;
        assert!(g.state.amplitudes().iter().all(|a| (a.re - plus).abs() < 1e-8 && a.im == 0.0));
        assert!(!g.degenerate && (g.gap - 2.0).abs() < 1e-8);
    }

    #[test]
    fn three_site_cluster_matches_dense() {
        let spec = SpinChainSpec::new(3, 1.0, 0.0, 0.0).unwrap();
        let g = haldane_ground_state(&spec).unwrap();
        assert!((g.energy + 1.0).abs() < 1e-10);
        let h = dense(&spec);
        assert_eq!(h, h.transpose());
        let lo = SymmetricEigen::new(h).eigenvalues.min();
        assert!((lo - g.energy).abs() < 1e-10);
        // one stabilizer on three sites leaves a fourfold ground space
        assert!(g.degenerate);
    }

    #[test]
    fn dense_oracle_and_eigen_relation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..6 {
            let spec = SpinChainSpec::new(5, 1.0, rng.random_range(0.0..1.6), rng.random_range(-1.6..1.6)).unwrap();
            let g = haldane_ground_state(&spec).unwrap();
            let ev = SymmetricEigen::new(dense(&spec)).eigenvalues;
            let mut sorted: Vec<f64> = ev.iter().copied().collect();
            sorted.sort_by(f64::total_cmp);
            assert!((sorted[0] - g.energy).abs() < 1e-9, "{spec:?}");
            assert!((sorted[1] - sorted[0] - g.gap).abs() < 1e-7, "{spec:?}");
            assert!(g.residual < 1e-8);
            assert!((expect(&spec, &g.state) - g.energy).abs() < 1e-8);
            assert!((g.state.norm_sqr() - 1.0).abs() < 1e-12);
            let first = g.state.amplitudes().iter().find(|a| a.norm() > 1e-10).unwrap();
            assert!(first.re > 0.0);
        }
    }

    #[test]
    fn energy_is_variationally_minimal() {
        let spec = SpinChainSpec::new(6, 1.0, 0.7, -0.4).unwrap();
        let g = haldane_ground_state(&spec).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let phi = random_state(6, &mut rng);
            assert!(g.energy <= expect(&spec, &phi) + 1e-8);
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let spec = SpinChainSpec::new(7, 1.0, 0.3, 0.9).unwrap();
        assert_eq!(haldane_ground_state(&spec).unwrap(), haldane_ground_state(&spec).unwrap());
        assert!(SpinChainSpec::new(2, 1.0, 0.0, 0.0).is_err());
        assert!(SpinChainSpec::new(16, 1.0, 0.0, 0.0).is_err());
        assert!(SpinChainSpec::new(4, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn grid_counts_and_labels() {
        let mut grid = PhaseGrid::small_test(2);
        let d = gen_phase_dataset(&grid).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.task, Task::Multiclass(2));
        assert!(d.samples.iter().all(|s| matches!(s.label, Label::Class(0 | 1))));

        grid.n1 = 3;
        grid.n2 = 3;
        grid.boundary = Polynomial(vec![1.6, -1.0]);
        grid.lower_boundary = Some(Polynomial(vec![-1.0]));
        // (0, 0) is the cluster point
        let (spt, _) = grid.classify(0.0, 0.0);
        assert!(spt);
        assert_eq!(grid.classify(0.0, 1.6), (true, true));
        assert_eq!(grid.classify(0.0, -1.0), (false, true));
        assert_eq!(grid.classify(1.6, 0.5), (false, false));
        let d = gen_phase_dataset(&grid).unwrap();
        assert!(d.card.notes.iter().any(|n| n.contains("boundary")));
        assert_eq!(d.samples[4].label, Label::Class(0));
    }

    #[test]
    fn string_order_limits() {
        // deep in the SPT phase the bulk stabilizers are pinned
        let spt = haldane_ground_state(&SpinChainSpec::new(7, 1.0, 0.05, 0.0).unwrap()).unwrap();
        assert!(string_order(&spt.state, 1, 5) > 0.99);
        let para = haldane_ground_state(&SpinChainSpec::new(7, 0.0, 1.0, 0.0).unwrap()).unwrap();
        assert!(string_order(&para.state, 1, 5).abs() < 1e-8);
        assert!(string_order_contour(4, &[0.0], (-1.6, 1.6), 0.2).is_err());
    }

    #[test]
    fn polynomial_fit_recovers_quadratic() {
        let truth = Polynomial(vec![0.9, -1.1, 0.25]);
        let pts: Vec<(f64, f64)> = (0..9).map(|i| 0.2 * i as f64).map(|x| (x, truth.eval(x))).collect();
        let fit = Polynomial::fit(&pts, 2).unwrap();
        assert!(fit.0.iter().zip(&truth.0).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(Polynomial::fit(&pts[..2], 2).is_err());
    }

    #[test]
    fn polynomial_horner() {
        let p = Polynomial(vec![1.0, -2.0, 0.5]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 2.0);
        assert_eq!(Polynomial(vec![]).eval(3.0), 0.0);
    }
}
