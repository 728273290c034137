//! Shared helpers for the integration suites: closed-form oracles kept
//! independent of the code paths they check, and seeded instance builders.

// Each integration test binary compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use simulability::catalog::random_povm;
use simulability::quantum::{HermitianMatrix, Povm};
use simulability::relabeling::RelabelingScheme;

/// Two-state minimum-error discrimination optimum in closed form:
/// (tr(r0 + r1) + ||r0 - r1||_1) / 2.
pub fn helstrom_value(r0: &HermitianMatrix, r1: &HermitianMatrix) -> f64 {
    0.5 * (r0.trace() + r1.trace() + r0.sub(r1).trace_norm())
}

/// Seeded mixing weights: a normalized vector of positive entries.
pub fn random_weights(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..count).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// A measurement that is n-outcome simulable by construction: a seeded
/// mixture of random n-outcome POVMs pushed through the relabeling scheme.
pub fn random_simulable_povm(d: usize, m: usize, n: usize, seed: u64) -> Povm {
    let scheme = RelabelingScheme::enumerate(m, n).unwrap();
    let subs: Vec<Povm> = (0..scheme.count())
        .map(|x| random_povm(d, n, seed.wrapping_mul(131).wrapping_add(x as u64)).unwrap())
        .collect();
    let weights = random_weights(scheme.count(), seed.wrapping_add(17));
    scheme.simulate(&subs, &weights).unwrap()
}
