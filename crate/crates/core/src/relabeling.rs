//! Deterministic classical post-processings that turn a family of n-outcome
//! measurements into one m-outcome measurement.
//!
//! A post-processing is indexed by a size-n combination x of the m outcome
//! labels (0-based, strictly increasing); sub-outcome a of the measurement
//! attached to x is relabeled to `x[a]`. Mixing over combinations with weights
//! p(x) spans the whole simulable set: merged or duplicated labels are
//! reached by choosing sub-measurements whose effects are themselves merged,
//! so restricting to increasing injective relabelings loses no generality.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{HermitianMatrix, Povm};

/// All size-n combinations of the m outcome labels, in lexicographic order.
///
/// The fixed ordering makes SDP variable indexing reproducible across runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelabelingScheme {
    m: usize,
    n: usize,
    combinations: Vec<Vec<usize>>,
}

impl RelabelingScheme {
    /// Enumerates the C(m, n) combinations. Requires 1 <= n <= m.
    pub fn enumerate(m: usize, n: usize) -> Result<Self> {
        if n < 1 || n > m {
            return Err(Error::Domain(format!(
                "need 1 <= n <= m, got n = {n}, m = {m}"
            )));
        }
        let combinations: Vec<Vec<usize>> = (0..m).combinations(n).collect();
        Ok(Self { m, n, combinations })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of combinations C(m, n).
    pub fn count(&self) -> usize {
        self.combinations.len()
    }

    pub fn combinations(&self) -> &[Vec<usize>] {
        &self.combinations
    }

    pub fn combination(&self, x: usize) -> &[usize] {
        &self.combinations[x]
    }

    /// The outcome label that sub-outcome `a` of combination `x` maps to.
    pub fn label(&self, x: usize, a: usize) -> usize {
        self.combinations[x][a]
    }

    /// The deterministic relabeling indicator: true iff outcome `b` is the
    /// image of sub-outcome `a` under combination `x`.
    pub fn d_value(&self, b: usize, a: usize, x: usize) -> Result<bool> {
        if b >= self.m {
            return Err(Error::Domain(format!(
                "outcome {b} out of range 0..{}",
                self.m
            )));
        }
        if a >= self.n {
            return Err(Error::Domain(format!(
                "sub-outcome {a} out of range 0..{}",
                self.n
            )));
        }
        let combo = self
            .combinations
            .get(x)
            .ok_or_else(|| Error::Domain(format!("combination {x} out of range")))?;
        Ok(combo[a] == b)
    }

    /// Mixes one n-outcome POVM per combination with weights p(x) and
    /// relabels: O_b = sum_{a,x} p(x) [b = x_a] Q_{a|x}.
    pub fn simulate(&self, sub_povms: &[Povm], weights: &[f64]) -> Result<Povm> {
        if sub_povms.len() != self.count() {
            return Err(Error::Mismatch(format!(
                "expected {} sub-POVMs (one per combination), got {}",
                self.count(),
                sub_povms.len()
            )));
        }
        if weights.len() != self.count() {
            return Err(Error::Mismatch(format!(
                "expected {} weights, got {}",
                self.count(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| w < -1e-15) {
            return Err(Error::Domain("negative mixing weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "mixing weights sum to {total}, expected 1 within 1e-12"
            )));
        }
        let dim = sub_povms[0].dim();
        for (x, q) in sub_povms.iter().enumerate() {
            if q.dim() != dim {
                return Err(Error::Mismatch(format!(
                    "sub-POVM {x} has dim {} but sub-POVM 0 has dim {dim}",
                    q.dim()
                )));
            }
            if q.outcomes() != self.n {
                return Err(Error::Mismatch(format!(
                    "sub-POVM {x} has {} outcomes, expected {}",
                    q.outcomes(),
                    self.n
                )));
            }
        }

        let mut effects = vec![HermitianMatrix::zeros(dim); self.m];
        for (x, combo) in self.combinations.iter().enumerate() {
            for (a, &b) in combo.iter().enumerate() {
                let term = sub_povms[x].effect(a).scale(weights[x]);
                effects[b] = effects[b].add(&term);
            }
        }
        Povm::new(effects)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::HermitianMatrix;
    use approx::assert_abs_diff_eq;

    #[test]
    fn enumerate_matches_binomials() {
        let s = RelabelingScheme::enumerate(3, 2).unwrap();
        assert_eq!(s.combinations(), &[vec![0, 1], vec![0, 2], vec![1, 2]]);

        let s = RelabelingScheme::enumerate(2, 2).unwrap();
        assert_eq!(s.combinations(), &[vec![0, 1]]);

        let s = RelabelingScheme::enumerate(4, 2).unwrap();
        assert_eq!(s.count(), 6);

        assert!(RelabelingScheme::enumerate(2, 3).is_err());
        assert!(RelabelingScheme::enumerate(3, 0).is_err());
    }

    #[test]
    fn d_value_indicator() {
        let s = RelabelingScheme::enumerate(3, 2).unwrap();
        // combination index 1 is (0, 2)
        assert!(s.d_value(2, 1, 1).unwrap());
        assert!(!s.d_value(1, 1, 1).unwrap());

        let s = RelabelingScheme::enumerate(2, 2).unwrap();
        assert!(s.d_value(0, 0, 0).unwrap());

        assert!(s.d_value(5, 0, 0).is_err());
        assert!(s.d_value(0, 5, 0).is_err());
        assert!(s.d_value(0, 0, 5).is_err());
    }

    #[test]
    fn each_sub_outcome_maps_to_exactly_one_label() {
        for (m, n) in [(3usize, 2usize), (4, 2), (5, 3), (4, 4), (4, 1)] {
            let s = RelabelingScheme::enumerate(m, n).unwrap();
            for x in 0..s.count() {
                for a in 0..n {
                    let hits = (0..m).filter(|&b| s.d_value(b, a, x).unwrap()).count();
                    assert_eq!(hits, 1);
                }
            }
        }
    }

    #[test]
    fn identity_relabeling_returns_the_input() {
        let s = RelabelingScheme::enumerate(2, 2).unwrap();
        let q = Povm::new(vec![
            HermitianMatrix::diagonal(&[1.0, 0.0]),
            HermitianMatrix::diagonal(&[0.0, 1.0]),
        ])
        .unwrap();
        let out = s.simulate(std::slice::from_ref(&q), &[1.0]).unwrap();
        for b in 0..2 {
            assert!(out.effect(b).max_abs_diff(q.effect(b)) <= 1e-15);
        }
    }

    #[test]
    fn basis_projector_simulation_is_a_valid_povm() {
        // d = 3, m = 3, n = 2: sub-POVM for combination (b0, b1) is the
        // projector pair onto those basis states, completed so the two
        // effects sum to the identity.
        let s = RelabelingScheme::enumerate(3, 2).unwrap();
        let proj = |k: usize| {
            let mut diag = [0.0; 3];
            diag[k] = 1.0;
            HermitianMatrix::diagonal(&diag)
        };
        let subs: Vec<Povm> = s
            .combinations()
            .iter()
            .map(|combo| {
                let p0 = proj(combo[0]);
                let p1 = proj(combo[1]);
                let rest = HermitianMatrix::identity(3).sub(&p0).sub(&p1).scale(0.5);
                Povm::new(vec![p0.add(&rest), p1.add(&rest)]).unwrap()
            })
            .collect();
        let weights = vec![1.0 / 3.0; 3];
        let out = s.simulate(&subs, &weights).unwrap();

        // Hand-computed: O_b picks up projector b from the two combinations
        // containing b, each with weight 1/3, plus half the complement of
        // the pair span from every combination.
        let expected_trace = 1.0;
        for b in 0..3 {
            assert_abs_diff_eq!(out.effect(b).trace(), expected_trace, epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_sub_povms_give_a_trace_split_of_identity() {
        let s = RelabelingScheme::enumerate(3, 2).unwrap();
        let uniform = Povm::new(vec![
            HermitianMatrix::identity(2).scale(0.5),
            HermitianMatrix::identity(2).scale(0.5),
        ])
        .unwrap();
        let weights = [0.5, 0.25, 0.25];
        let out = s
            .simulate(&[uniform.clone(), uniform.clone(), uniform], &weights)
            .unwrap();
        // O_b = (sum_{a,x} p(x) [b = x_a] / 2) I
        for b in 0..3 {
            let mut scalar = 0.0;
            for (x, w) in weights.iter().enumerate() {
                for a in 0..2 {
                    if s.d_value(b, a, x).unwrap() {
                        scalar += w / 2.0;
                    }
                }
            }
            let expected = HermitianMatrix::identity(2).scale(scalar);
            assert!(out.effect(b).max_abs_diff(&expected) <= 1e-12);
        }
    }
}
