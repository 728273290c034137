//! State-discrimination scores and optima.
//!
//! The central game: a state is drawn from a known subnormalized ensemble
//! and must be identified by a measurement; the score is the probability of
//! guessing the label correctly. The module computes the score of a given
//! measurement, the optimum over all k-outcome measurements (an SDP), the
//! optimum over the n-outcome-simulable set (a maximum over label
//! combinations), the resulting advantage ratio, and the outcome count
//! certified by an observed score.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::{Ensemble, HermitianMatrix, Povm};
use crate::relabeling::RelabelingScheme;
use crate::sdp::{MatExpr, SdpProblem, Sense, VarDomain};

/// Correct-guess probability of measurement `m` on ensemble `e`:
/// sum_b tr(rho_b M_b).
pub fn guess_probability(e: &Ensemble, m: &Povm) -> Result<f64> {
    if e.dim() != m.dim() {
        return Err(Error::Mismatch(format!(
            "ensemble dim {} vs POVM dim {}",
            e.dim(),
            m.dim()
        )));
    }
    if e.len() != m.outcomes() {
        return Err(Error::Mismatch(format!(
            "ensemble has {} states but POVM has {} outcomes",
            e.len(),
            m.outcomes()
        )));
    }
    Ok(e.states()
        .iter()
        .zip(m.effects())
        .map(|(rho, eff)| rho.inner(eff))
        .sum())
}

/// Optimal discrimination of a list of subnormalized states by a k-outcome
/// measurement. States beyond the first k never contribute score. The states
/// need not have unit total trace, so combination sub-ensembles can be passed
/// unnormalized.
pub fn optimal_guess_states(states: &[HermitianMatrix], k: usize) -> Result<(f64, Povm)> {
    if k < 1 {
        return Err(Error::Domain("need at least one outcome".into()));
    }
    let first = states
        .first()
        .ok_or_else(|| Error::Invalid("empty state list".into()))?;
    let d = first.dim();
    for (b, s) in states.iter().enumerate() {
        if s.dim() != d {
            return Err(Error::Mismatch(format!(
                "state {b} has dim {} but state 0 has dim {d}",
                s.dim()
            )));
        }
    }

    // A single outcome forces M_0 = I; no optimization left.
    if k == 1 {
        return Ok((
            states[0].trace(),
            Povm::new(vec![HermitianMatrix::identity(d)])?,
        ));
    }

    let mut problem = SdpProblem::new(Sense::Maximize);
    let vars: Vec<_> = (0..k)
        .map(|b| problem.add_var(format!("M{b}"), d, VarDomain::PsdCone))
        .collect();
    let mut completeness = MatExpr::zero(d).plus_constant(&HermitianMatrix::identity(d), -1.0);
    for &v in &vars {
        completeness = completeness.plus_var(v, 1.0);
    }
    problem.add_equality(completeness)?;
    for (b, &v) in vars.iter().enumerate() {
        if b < states.len() {
            problem.add_objective_term(v, states[b].clone())?;
        }
    }
    // Tighter than the default: downstream checks compare this optimum
    // against closed forms at 1e-8.
    let solution = problem.solve_with_tol(1e-9)?.require_optimal()?;
    let povm = Povm::sanitized(solution.variables, 1e-6)?;

    // The iterate's objective inherits the solver's primal residual floor.
    // Both sides of the optimum have cheap exact certificates, so polish:
    // any feasible POVM gives an attainable lower bound, and the
    // completeness multiplier K gives the upper bound min tr(K') over
    // K' >= every scored state, after shifting K by its own infeasibility.
    let score_of = |povm: &Povm| -> f64 {
        states
            .iter()
            .take(k)
            .zip(povm.effects())
            .map(|(rho, eff)| rho.inner(eff))
            .sum()
    };
    let k_dual = &solution.equality_duals[0];
    let mut deficit = k_dual.min_eigenvalue().min(0.0);
    for rho in states.iter().take(k) {
        deficit = deficit.min(k_dual.sub(rho).min_eigenvalue());
    }
    let k_shifted = k_dual.add_scaled_identity(-deficit);
    let upper = k_shifted.trace();

    // Candidate from complementary slackness: optimal effects live in the
    // kernel of K - rho_b. Rebuilding from those kernels beats the raw
    // iterate exactly when the solver stalled; keep whichever scores best.
    let mut best_povm = povm;
    let mut lower = score_of(&best_povm);
    if let Some(candidate) = kernel_candidate(states, k, &k_shifted) {
        let candidate_score = score_of(&candidate);
        if candidate_score > lower {
            lower = candidate_score;
            best_povm = candidate;
        }
    }
    let value = if upper >= lower - 1e-9 && upper - lower <= 1e-6 {
        0.5 * (upper + lower)
    } else {
        // Bounds disagree beyond slop; fall back to the solver objective.
        solution.objective_value
    };
    Ok((value, best_povm))
}

/// Rounds the dual certificate to a primal candidate: effect b spans the
/// near-kernel of K - rho_b, the family is renormalized to a POVM, and any
/// unused directions are spread uniformly. Returns None when the rounding
/// degenerates; the caller only uses the candidate if it scores better.
fn kernel_candidate(
    states: &[HermitianMatrix],
    k: usize,
    k_shifted: &HermitianMatrix,
) -> Option<Povm> {
    const KERNEL_TOL: f64 = 1e-6;
    const SUPPORT_TOL: f64 = 1e-8;
    let d = k_shifted.dim();
    let mut kernels = Vec::with_capacity(k);
    for b in 0..k {
        let slack = match states.get(b) {
            Some(rho) => k_shifted.sub(rho),
            None => k_shifted.clone(),
        };
        let eig = slack.eigendecompose();
        let weights: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|&l| if l < KERNEL_TOL { 1.0 } else { 0.0 })
            .collect();
        kernels.push(eig.reassemble(&weights));
    }
    let mut total = HermitianMatrix::zeros(d);
    for p in &kernels {
        total = total.add(p);
    }
    let eig = total.eigendecompose();
    let inv_sqrt: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > SUPPORT_TOL { 1.0 / l.sqrt() } else { 0.0 })
        .collect();
    let support: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > SUPPORT_TOL { 1.0 } else { 0.0 })
        .collect();
    let half = eig.reassemble(&inv_sqrt);
    let rest = HermitianMatrix::identity(d)
        .sub(&eig.reassemble(&support))
        .scale(1.0 / k as f64);
    let effects: Vec<HermitianMatrix> = kernels
        .iter()
        .map(|p| {
            let mat = half.matrix() * p.matrix() * half.matrix();
            HermitianMatrix::hermitian_part(&mat)
                .expect("square by construction")
                .add(&rest)
        })
        .collect();
    Povm::sanitized(effects, 1e-7).ok()
}

/// Optimal k-outcome discrimination of an ensemble.
///
/// The value is never below the best constant guess max_b tr(rho_b) as long
/// as the best label is addressable (always true in the standard game
/// k = |E|).
pub fn optimal_guess(e: &Ensemble, k: usize) -> Result<(f64, Povm)> {
    optimal_guess_states(e.states(), k)
}

/// Optimum of one ensemble over the n-outcome-simulable set.
#[derive(Debug, Clone, Serialize)]
pub struct FreeGuessReport {
    /// max over combinations of the optimal n-outcome discrimination of the
    /// unnormalized sub-ensemble.
    pub value: f64,
    /// Lexicographically first combination attaining the max.
    pub best_combination: usize,
    /// The combination labels themselves (0-based outcome indices).
    pub best_labels: Vec<usize>,
    pub per_combination: Vec<f64>,
}

/// Best correct-guess probability achievable on `e` by any measurement
/// simulable from n-outcome ones.
///
/// Mixing weights enter the score linearly, so the optimum sits on a vertex:
/// a single combination x with its sub-ensemble discriminated optimally.
/// Sub-ensembles stay unnormalized; their mass multiplies the sub-game score
/// without ever dividing by it.
pub fn optimal_free_guess(e: &Ensemble, n: usize) -> Result<FreeGuessReport> {
    let m = e.len();
    if n > m {
        return Err(Error::Domain(format!(
            "free set parameter n = {n} exceeds ensemble size m = {m}"
        )));
    }
    let scheme = RelabelingScheme::enumerate(m, n)?;
    let mut per_combination = Vec::with_capacity(scheme.count());
    for combo in scheme.combinations() {
        let sub = e.sub_states(combo);
        let (value, _) = optimal_guess_states(&sub, n)?;
        per_combination.push(value);
    }
    // Lexicographically first winner; numerical ties within solver noise
    // must not switch it.
    const TIE_TOL: f64 = 1e-9;
    let mut best_combination = 0usize;
    let mut value = per_combination[0];
    for (i, &v) in per_combination.iter().enumerate().skip(1) {
        if v > value + TIE_TOL {
            best_combination = i;
            value = v;
        }
    }
    Ok(FreeGuessReport {
        value,
        best_combination,
        best_labels: scheme.combination(best_combination).to_vec(),
        per_combination,
    })
}

/// Discrimination advantage of a measurement over the n-outcome-simulable
/// set on one ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct DiscriminationReport {
    pub ensemble: Ensemble,
    pub p_guess: f64,
    pub optimal_free: f64,
    /// p_guess / optimal_free.
    pub advantage_ratio: f64,
    pub best_combination: usize,
    pub per_combination: Vec<f64>,
}

/// Scores `m` against the best n-outcome-simulable measurement on `e`.
pub fn advantage(e: &Ensemble, m: &Povm, n: usize) -> Result<DiscriminationReport> {
    let p_guess = guess_probability(e, m)?;
    let free = optimal_free_guess(e, n)?;
    if free.value <= 0.0 {
        return Err(Error::Degenerate(format!(
            "simulable-set optimum {} is not positive",
            free.value
        )));
    }
    Ok(DiscriminationReport {
        ensemble: e.clone(),
        p_guess,
        optimal_free: free.value,
        advantage_ratio: p_guess / free.value,
        best_combination: free.best_combination,
        per_combination: free.per_combination,
    })
}

/// Outcome-count certificate from an observed guessing probability.
#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    /// Smallest outcome count k not excluded by the observation: every
    /// device with fewer than k outcomes is ruled out. When the observation
    /// beats even the unrestricted optimum (k = m), this is m + 1 and the
    /// statistics are inconsistent with the declared ensemble.
    pub certified_min_outcomes: usize,
    /// thresholds[k-1] = best simulable score with k outcomes.
    pub thresholds: Vec<f64>,
    pub observed: f64,
    pub stat_tol: f64,
}

/// Certifies a lower bound on the number of outcomes from an observed
/// score, assuming perfect knowledge of the preparation. `stat_tol` widens
/// every threshold; statistical confidence handling stays with the caller.
/// The thresholds themselves are solver outputs, so comparisons always
/// carry their numerical accuracy: an exclusion is never declared on a
/// margin the solver cannot resolve.
pub fn certify_outcomes(e: &Ensemble, observed: f64, stat_tol: f64) -> Result<CertificationReport> {
    const THRESHOLD_ACCURACY: f64 = 1e-8;
    if !(0.0..=1.0).contains(&observed) {
        return Err(Error::Domain(format!(
            "observed probability {observed} outside [0, 1]"
        )));
    }
    let m = e.len();
    let mut thresholds = Vec::with_capacity(m);
    let mut certified = m + 1;
    for k in 1..=m {
        let t = optimal_free_guess(e, k)?.value;
        thresholds.push(t);
        if certified > m && observed <= t + stat_tol + THRESHOLD_ACCURACY {
            certified = k;
        }
    }
    Ok(CertificationReport {
        certified_min_outcomes: certified,
        thresholds,
        observed,
        stat_tol,
    })
}
