//! Coherent (parameter) noise. Decoherence is executed by the circuit runner;
//! this module only carries its probability.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuits::ParamVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("noise intensity delta = {0} must be finite and non-negative")]
    BadDelta(f64),
    #[error("decoherence probability p = {0} outside [0, 1]")]
    BadProbability(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation of the Gaussian offset on every circuit angle, radians.
    pub delta: f64,
    /// Depolarizing probability after every controlled-R.
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { delta: 0.0, p: 0.0, seed: 0 }
    }
}

impl NoiseSpec {
    pub fn new(delta: f64, p: f64, seed: u64) -> Result<Self, NoiseError> {
        let spec = Self { delta, p, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(NoiseError::BadDelta(self.delta));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(NoiseError::BadProbability(self.p));
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.delta == 0.0 && self.p == 0.0
    }

    /// Same intensities with a seed derived from `path`, e.g. `[sample, iteration]`.
    pub fn derive(&self, path: &[u64]) -> Self {
        Self { seed: crate::rng::derive_seed(self.seed, path), ..*self }
    }
}

/// Adds i.i.d. `N(0, Δ²)` offsets to every entry, seeded by `spec.seed`.
pub fn perturb(params: &[f64], spec: &NoiseSpec) -> ParamVector {
    if spec.delta == 0.0 {
        return ParamVector(params.to_vec());
    }
    let normal = Normal::new(0.0, spec.delta).expect("validated delta");
    let mut rng = crate::rng::rng_for(spec.seed, &[]);
    ParamVector(params.iter().map(|&v| v + normal.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_delta_is_identity() {
        let p = vec![0.1, -2.0, 3.5];
        assert_eq!(perturb(&p, &NoiseSpec::new(0.0, 0.0, 9).unwrap()).0, p);
    }

    #[test]
    fn seeded_and_reproducible() {
        let p = vec![0.0; 16];
        let s = NoiseSpec::new(0.2, 0.0, 4).unwrap();
        assert_eq!(perturb(&p, &s), perturb(&p, &s));
        assert_ne!(perturb(&p, &s), perturb(&p, &s.derive(&[1])));
        assert_ne!(s.derive(&[1, 2]).seed, s.derive(&[2, 1]).seed);
    }

    #[test]
    fn sample_variance_matches_delta() {
        let draws = perturb(&vec![0.0; 100_000], &NoiseSpec::new(0.1, 0.0, 123).unwrap()).0;
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.0095..=0.0105).contains(&var), "variance {var}");
    }

    #[test]
    fn validation() {
        assert!(NoiseSpec::new(-0.1, 0.0, 0).is_err());
        assert!(NoiseSpec::new(0.1, 1.5, 0).is_err());
        assert!(NoiseSpec::new(f64::NAN, 0.0, 0).is_err());
        assert!(NoiseSpec::default().is_silent());
    }
}
