use rand::Rng;

use super::{blank_card, Dataset, Recipe, Task};
use crate::encoding::{DataPoint, Input, Label};

/// `f(x) = g(x₁) g(x₂)` with `g(t) = 0.7156 − 1.0125 t² + t⁴`.
pub fn regression_target(x1: f64, x2: f64) -> f64 {
    let g = |t: f64| 0.7156 - 1.0125 * t * t + t.powi(4);
    g(x1) * g(x2)
}

/// Class 0 on the annulus `0.16 ≤ r² ≤ 0.81`, class 1 inside and outside it.
pub fn ring_label(x1: f64, x2: f64) -> usize {
    let r2 = x1 * x1 + x2 * x2;
    usize::from(!(0.16..=0.81).contains(&r2))
}

/// `m` points uniform on `[−0.8, 0.8]²` labelled by [`regression_target`].
pub fn gen_regression(m: usize, seed: u64) -> Dataset {
    let mut rng = crate::rng::rng_for(seed, &[0x4e6]);
    let samples = (0..m)
        .map(|_| {
            let x = [rng.random_range(-0.8..=0.8), rng.random_range(-0.8..=0.8)];
            DataPoint { input: Input::Features(x.to_vec()), label: Label::Real(regression_target(x[0], x[1])) }
        })
        .collect();
    let card = blank_card(
        "regression",
        "synthetic separable quartic on [-0.8, 0.8]^2",
        "none",
        Recipe::Regression { m, seed },
    );
    Dataset::new(samples, Task::Regression, card)
}

/// `m` points uniform on `[−1, 1]²` labelled by [`ring_label`].
pub fn gen_ring(m: usize, seed: u64) -> Dataset {
    let mut rng = crate::rng::rng_for(seed, &[0x41a6]);
    let samples = (0..m)
        .map(|_| {
            let x = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
            DataPoint { input: Input::Features(x.to_vec()), label: Label::Class(ring_label(x[0], x[1])) }
        })
        .collect();
    let card = blank_card(
        "ring",
        "synthetic annulus 0.16 <= r^2 <= 0.81 on [-1, 1]^2 (annulus = class 0)",
        "none",
        Recipe::Ring { m, seed },
    );
    Dataset::new(samples, Task::Binary, card)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_examples() {
        assert!((regression_target(0.0, 0.0) - 0.51208).abs() < 1e-5);
        assert!((regression_target(0.0, 0.0) - 0.7156f64.powi(2)).abs() < 1e-15);
        let g8 = 0.7156 - 0.648 + 0.4096;
        assert!((regression_target(0.8, 0.8) - g8 * g8).abs() < 1e-12);
        assert!((regression_target(0.8, 0.8) - 0.22772).abs() < 1e-5);
        assert_eq!(regression_target(0.3, -0.7), regression_target(-0.7, 0.3));
    }

    #[test]
    fn ring_examples() {
        assert_eq!(ring_label(0.0, 0.0), 1);
        assert_eq!(ring_label(0.5, 0.5), 0);
        assert_eq!(ring_label(1.0, 1.0), 1);
        assert_eq!(ring_label(0.4, 0.0), 0);
        assert_eq!(ring_label(0.9, 0.0), 0);
    }

    #[test]
    fn generators_are_seeded_and_in_range() {
        let a = gen_regression(400, 5);
        assert_eq!(a, gen_regression(400, 5));
        assert_eq!(a.len(), 400);
        assert_eq!(a.card.n_features, 2);
        for s in &a.samples {
            let Input::Features(x) = &s.input else { panic!() };
            assert!(x.iter().all(|v| (-0.8..=0.8).contains(v)));
            assert!(s.label.as_f64() > 0.2);
        }
        assert!(a.card.kappa1 > 0.0 && a.card.kappa2 <= 0.8 * 2f64.sqrt());
        let r = gen_ring(400, 5);
        let ones = r.samples.iter().filter(|s| s.label == Label::Class(1)).count();
        // annulus area π(0.81 − 0.16) ≈ 2.04 of 4
        assert!((150..250).contains(&ones), "{ones}");
    }
}
