//! Maximal discrimination advantage: the m/n bound, the saturating
//! construction for d >= m, the pre-measurement-information game, and a
//! see-saw search for the best measurement/ensemble pair.

use num_integer::binomial;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{basis_projector, random_povm, trine, uniform_orthogonal_ensemble};
use crate::discrimination::{advantage, optimal_guess, optimal_guess_states};
use crate::error::{Error, Result};
use crate::quantum::{Ensemble, HermitianMatrix, Povm};
use crate::relabeling::RelabelingScheme;
use crate::robustness::robustness;

/// Upper bound on the advantage of any m-outcome measurement over the
/// n-outcome-simulable set, as an exact rational m/n.
pub fn max_advantage_bound(m: usize, n: usize) -> Result<Ratio<u64>> {
    if n < 1 || n > m {
        return Err(Error::Domain(format!(
            "need 1 <= n <= m, got n = {n}, m = {m}"
        )));
    }
    Ok(Ratio::new(m as u64, n as u64))
}

/// An instance attaining the m/n bound, available whenever d >= m.
#[derive(Debug, Clone, Serialize)]
pub struct SaturatingInstance {
    /// m uniformly weighted orthogonal states.
    pub ensemble: Ensemble,
    /// Projectors onto those states; for d > m the orthogonal complement is
    /// folded into the last effect, where the ensemble never reaches it.
    pub measurement: Povm,
    /// Uniform weights over the C(m, n) combinations of the simulable side.
    pub free_weights: Vec<f64>,
    /// Per combination: projectors onto its n states, completed to identity
    /// on the last effect.
    pub free_sub_povms: Vec<Povm>,
}

/// Builds the bound-saturating instance: ensemble, optimal measurement, and
/// the optimal simulable model. Requires d >= m.
pub fn saturating_instance(d: usize, m: usize, n: usize) -> Result<SaturatingInstance> {
    if n < 1 || n > m {
        return Err(Error::Domain(format!(
            "need 1 <= n <= m, got n = {n}, m = {m}"
        )));
    }
    if d < m {
        return Err(Error::Domain(format!(
            "saturation needs d >= m, got d = {d}, m = {m}"
        )));
    }
    let ensemble = uniform_orthogonal_ensemble(d, m)?;

    let mut effects: Vec<HermitianMatrix> = (0..m).map(|b| basis_projector(d, b)).collect();
    if d > m {
        let mut completion = HermitianMatrix::identity(d);
        for eff in &effects {
            completion = completion.sub(eff);
        }
        let last = effects.last_mut().expect("m >= 1");
        *last = last.add(&completion);
    }
    let measurement = Povm::new(effects)?;

    let scheme = RelabelingScheme::enumerate(m, n)?;
    let free_weights = vec![1.0 / scheme.count() as f64; scheme.count()];
    let free_sub_povms = scheme
        .combinations()
        .iter()
        .map(|combo| {
            let mut effects: Vec<HermitianMatrix> =
                combo.iter().map(|&b| basis_projector(d, b)).collect();
            let mut completion = HermitianMatrix::identity(d);
            for eff in &effects {
                completion = completion.sub(eff);
            }
            let last = effects.last_mut().expect("n >= 1");
            *last = last.add(&completion);
            Povm::new(effects)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SaturatingInstance {
        ensemble,
        measurement,
        free_weights,
        free_sub_povms,
    })
}

/// Score of the discrimination game where the measurement may depend on a
/// prior announcement of which n-label sub-ensemble the state came from:
/// the mass-weighted mean of the per-combination optima,
/// sum_x s_x / C(m-1, n-1). Side information never hurts, so this is at
/// least the unrestricted optimum of the whole ensemble.
pub fn pre_measurement_info_game(e: &Ensemble, n: usize) -> Result<f64> {
    let m = e.len();
    if n > m || n < 1 {
        return Err(Error::Domain(format!(
            "need 1 <= n <= m, got n = {n}, m = {m}"
        )));
    }
    let scheme = RelabelingScheme::enumerate(m, n)?;
    let mut total = 0.0;
    for combo in scheme.combinations() {
        let sub = e.sub_states(combo);
        let (value, _) = optimal_guess_states(&sub, n)?;
        total += value;
    }
    // Each label appears in C(m-1, n-1) combinations, which is exactly the
    // factor normalizing the combination masses to a distribution.
    Ok(total / binomial(m as u64 - 1, n as u64 - 1) as f64)
}

/// One see-saw iteration: the ensemble extracted from the robustness dual,
/// the best m-outcome measurement for it, and their advantage ratio.
#[derive(Debug, Clone, Serialize)]
pub struct SeesawIterate {
    pub ensemble: Ensemble,
    pub povm: Povm,
    pub ratio: f64,
}

/// Trace of the best restart of a see-saw run.
#[derive(Debug, Clone, Serialize)]
pub struct SeesawTrace {
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub iterations: Vec<SeesawIterate>,
    pub final_ratio: f64,
    /// True when the ratio improvement fell below the tolerance before the
    /// iteration cap.
    pub converged: bool,
    /// Restarts that ran to completion (failed restarts are skipped with a
    /// warning).
    pub restarts_used: usize,
    pub warnings: Vec<String>,
}

/// See-saw options; `Default` matches the documented CLI defaults.
#[derive(Debug, Clone, Copy)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Convergence threshold on the ratio improvement.
    pub tol: f64,
    /// Base seed for the random restart measurements.
    pub seed: u64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 100,
            tol: 1e-7,
            seed: 0,
        }
    }
}

/// Searches for the measurement with maximal discrimination advantage over
/// the n-outcome-simulable set by alternating two exact half-steps:
///
/// 1. for the current measurement, solve the robustness dual and take its
///    extracted ensemble (the best ensemble for that measurement);
/// 2. for that ensemble, take the best m-outcome measurement.
///
/// Each half-step solves its subproblem exactly, so the recorded ratio
/// sequence is nondecreasing and capped by m/n. The heuristic carries no
/// global-optimality certificate beyond that cap. Restart seeds are the
/// saturating projectors (d >= m), the trine (d = 2, m = 3), then seeded
/// random POVMs.
pub fn seesaw(d: usize, m: usize, n: usize, options: &SeesawOptions) -> Result<SeesawTrace> {
    if n < 1 || n > m {
        return Err(Error::Domain(format!(
            "need 1 <= n <= m, got n = {n}, m = {m}"
        )));
    }
    if d < 2 {
        return Err(Error::Domain("need dimension d >= 2".into()));
    }
    if options.restarts < 1 {
        return Err(Error::Domain("need at least one restart".into()));
    }

    let bound = m as f64 / n as f64;
    let mut seeds: Vec<Povm> = Vec::new();
    if d >= m {
        seeds.push(saturating_instance(d, m, n)?.measurement);
    }
    if d == 2 && m == 3 {
        seeds.push(trine());
    }
    let mut next_seed = options.seed;
    while seeds.len() < options.restarts {
        seeds.push(random_povm(d, m, next_seed)?);
        next_seed = next_seed.wrapping_add(1);
    }
    seeds.truncate(options.restarts);

    // Restarts are independent; run them on the rayon pool and reduce in
    // restart order so the result does not depend on scheduling.
    let outcomes: Vec<(usize, Result<SeesawTrace>)> = seeds
        .into_par_iter()
        .enumerate()
        .map(|(restart, seed_povm)| (restart, run_restart(d, m, n, seed_povm, options, bound)))
        .collect();

    let mut best: Option<SeesawTrace> = None;
    let mut warnings: Vec<String> = Vec::new();
    let mut restarts_used = 0usize;
    for (restart, outcome) in outcomes {
        match outcome {
            Ok(trace) => {
                restarts_used += 1;
                let better = match &best {
                    None => true,
                    Some(b) => trace.final_ratio > b.final_ratio,
                };
                if better {
                    best = Some(trace);
                }
            }
            Err(err) => {
                log::warn!("see-saw restart {restart} failed: {err}");
                warnings.push(format!("restart {restart} skipped: {err}"));
            }
        }
    }

    let mut trace = best.ok_or_else(|| Error::Solver("every see-saw restart failed".into()))?;
    trace.restarts_used = restarts_used;
    trace.warnings = warnings;
    Ok(trace)
}

fn run_restart(
    d: usize,
    m: usize,
    n: usize,
    seed_povm: Povm,
    options: &SeesawOptions,
    bound: f64,
) -> Result<SeesawTrace> {
    let mut current = seed_povm;
    let mut iterations: Vec<SeesawIterate> = Vec::new();
    let mut converged = false;
    for _ in 0..options.max_iter {
        let rob = robustness(&current, n)?;
        let ensemble = rob
            .extracted_ensemble
            .ok_or_else(|| Error::Degenerate("dual returned no ensemble".into()))?;
        let (_, next_povm) = optimal_guess(&ensemble, m)?;
        let report = advantage(&ensemble, &next_povm, n)?;
        let ratio = report.advantage_ratio;

        if ratio > bound + 1e-6 {
            return Err(Error::Solver(format!(
                "ratio {ratio} exceeds the m/n bound {bound}; solver output is inconsistent"
            )));
        }
        if let Some(prev) = iterations.last() {
            let delta = ratio - prev.ratio;
            // Both half-steps are exact optimizations, so a real decrease
            // beyond accumulated solver error means lost optimality.
            if delta < -1e-6 {
                return Err(Error::Solver(format!(
                    "ratio decreased from {} to {ratio}; half-steps lost optimality",
                    prev.ratio
                )));
            }
            if delta < options.tol {
                // Stagnation. Record the step only when it did not lose
                // to solver noise, keeping the reported sequence monotone.
                if delta >= 0.0 {
                    iterations.push(SeesawIterate {
                        ensemble,
                        povm: next_povm,
                        ratio,
                    });
                }
                converged = true;
                break;
            }
        }
        iterations.push(SeesawIterate {
            ensemble,
            povm: next_povm.clone(),
            ratio,
        });
        current = next_povm;
    }
    let final_ratio = iterations
        .last()
        .map(|it| it.ratio)
        .ok_or_else(|| Error::Solver("no iteration completed".into()))?;
    Ok(SeesawTrace {
        d,
        m,
        n,
        iterations,
        final_ratio,
        converged,
        restarts_used: 1,
        warnings: Vec::new(),
    })
}
