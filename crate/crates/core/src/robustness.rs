//! Noise robustness of a measurement with respect to the
//! n-outcome-simulable set.
//!
//! The robustness of an m-outcome POVM M is the least t >= 0 such that
//! (M_b + t N_b)/(1 + t) is simulable from n-outcome measurements for some
//! POVM N. Both directions are solved as SDPs over the scaled sub-POVM
//! variables Q_{a|x} (primal, optimum 1 + t) and the witness variables
//! Y_b, Z_x (dual, same optimum by strong duality; the scaled identity is a
//! strictly feasible primal point). The two programs are built and solved
//! independently and their optima are required to agree, which turns every
//! robustness evaluation into a self-checking computation.
//!
//! The witness side is what gives the number operational meaning: the
//! normalized Y_b form a state-discrimination ensemble on which M beats
//! every simulable measurement by exactly the factor 1 + t.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::{Ensemble, HermitianMatrix, Povm};
use crate::relabeling::RelabelingScheme;
use crate::sdp::{MatExpr, SdpProblem, Sense, VarDomain, VarId};

/// Primal and dual optima must agree within this bound.
pub const GAP_TOL: f64 = 1e-6;
/// Robustness at or below this threshold counts as "simulable".
pub const SIMULABLE_TOL: f64 = 1e-7;
/// Combinations with recovered weight below this are reported as unused.
/// The interior-point solve leaves masses of order its tolerance on
/// combinations the optimum does not use; dividing those out would produce
/// noise, so they are floored to zero instead.
pub const WEIGHT_FLOOR: f64 = 1e-6;

/// Builds the minimization over scaled sub-POVMs Q_{a|x} (PSD, one per
/// sub-outcome and combination):
///
/// ```text
/// min (1/d) sum_{a,x,b} D(b|a,x) tr(Q_{a|x})
/// s.t. sum_{a,x} D(b|a,x) Q_{a|x} - M_b          >= 0   for all b
///      sum_a Q_{a|x} - (1/d) sum_a tr(Q_{a|x}) I  = 0   for all x
/// ```
///
/// The optimum equals 1 + robustness. Variables are declared combination-
/// major: Q_{a|x} is variable number x * n + a.
pub fn build_primal(m: &Povm, n: usize) -> Result<SdpProblem> {
    let num_outcomes = m.outcomes();
    let scheme = RelabelingScheme::enumerate(num_outcomes, n)?;
    let d = m.dim();
    let mut problem = SdpProblem::new(Sense::Minimize);

    let mut vars: Vec<Vec<VarId>> = Vec::with_capacity(scheme.count());
    for x in 0..scheme.count() {
        let mut per_a = Vec::with_capacity(n);
        for a in 0..n {
            per_a.push(problem.add_var(format!("Q[a={a}|x={x}]"), d, VarDomain::PsdCone));
        }
        vars.push(per_a);
    }

    // Objective: sum_b D(b|a,x) = 1 for every (a, x), so each variable
    // contributes tr(Q)/d.
    let id_over_d = HermitianMatrix::identity(d).scale(1.0 / d as f64);
    for per_a in &vars {
        for &v in per_a {
            problem.add_objective_term(v, id_over_d.clone())?;
        }
    }

    // Simulation dominance: sum over the (a, x) relabeled onto b.
    for b in 0..num_outcomes {
        let mut expr = MatExpr::zero(d).plus_constant(m.effect(b), -1.0);
        for (x, combo) in scheme.combinations().iter().enumerate() {
            for (a, &label) in combo.iter().enumerate() {
                if label == b {
                    expr = expr.plus_var(vars[x][a], 1.0);
                }
            }
        }
        problem.add_psd_constraint(expr)?;
    }

    // Per-combination proportionality to the identity.
    for per_a in &vars {
        let mut expr = MatExpr::zero(d);
        for &v in per_a {
            expr = expr
                .plus_var(v, 1.0)
                .plus_trace_identity(v, -1.0 / d as f64);
        }
        problem.add_equality(expr)?;
    }

    Ok(problem)
}

/// Builds the witness maximization:
///
/// ```text
/// max sum_b tr(M_b Y_b)
/// s.t. Z_x - (1/d) tr(Z_x) I + Y_{x_a} <= (1/d) I   for all a, x
///      Y_b >= 0, Z_x Hermitian
/// ```
///
/// Variables are the m witness effects Y_b followed by the C(m, n) free
/// Hermitian Z_x. The Z_x are kept as explicit variables rather than
/// eliminated, so the reported solution matches the program one-to-one.
pub fn build_dual(m: &Povm, n: usize) -> Result<SdpProblem> {
    let num_outcomes = m.outcomes();
    let scheme = RelabelingScheme::enumerate(num_outcomes, n)?;
    let d = m.dim();
    let mut problem = SdpProblem::new(Sense::Maximize);

    let y_vars: Vec<VarId> = (0..num_outcomes)
        .map(|b| problem.add_var(format!("Y[{b}]"), d, VarDomain::PsdCone))
        .collect();
    let z_vars: Vec<VarId> = (0..scheme.count())
        .map(|x| problem.add_var(format!("Z[{x}]"), d, VarDomain::Free))
        .collect();

    for (b, &y) in y_vars.iter().enumerate() {
        problem.add_objective_term(y, m.effect(b).clone())?;
    }

    let id_over_d = HermitianMatrix::identity(d).scale(1.0 / d as f64);
    for (x, combo) in scheme.combinations().iter().enumerate() {
        for &label in combo.iter() {
            // (1/d) I - Z_x + (1/d) tr(Z_x) I - Y_{x_a} >= 0
            let expr = MatExpr::from_constant(&id_over_d)
                .plus_var(z_vars[x], -1.0)
                .plus_trace_identity(z_vars[x], 1.0 / d as f64)
                .plus_var(y_vars[label], -1.0);
            problem.add_psd_constraint(expr)?;
        }
    }

    Ok(problem)
}

/// Everything the primal/dual pair says about one measurement.
#[derive(Debug, Clone, Serialize)]
pub struct RobustnessResult {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    /// The robustness t, equal to primal_value - 1.
    pub robustness: f64,
    /// Primal optimum 1 + t.
    pub primal_value: f64,
    /// Dual optimum; agrees with the primal within [`GAP_TOL`].
    pub dual_value: f64,
    /// |primal - dual|.
    pub gap: f64,
    /// Scaled sub-POVMs Q_{a|x}, combination-major: `scaled_sub_povms[x][a]`.
    pub scaled_sub_povms: Vec<Vec<HermitianMatrix>>,
    /// Witness effects Y_b from the dual optimum.
    pub witness_effects: Vec<HermitianMatrix>,
    /// Free Hermitian duals Z_x from the dual optimum.
    pub free_duals: Vec<HermitianMatrix>,
    /// The recovered noise t * N_b = sum_{a,x} D(b|a,x) Q_{a|x} - M_b.
    /// Feasible noise is not unique; this is the one the primal optimizer
    /// chose.
    pub scaled_noise_effects: Vec<HermitianMatrix>,
    /// Discrimination ensemble Y_b / tr(sum Y_b). Absent when the witness
    /// mass vanishes, which the dual's unit-objective feasible point rules
    /// out for any valid POVM; absence therefore signals solver failure.
    pub extracted_ensemble: Option<Ensemble>,
    pub warnings: Vec<String>,
}

impl RobustnessResult {
    /// True when the measurement is n-outcome simulable at [`SIMULABLE_TOL`].
    pub fn is_simulable(&self) -> bool {
        self.robustness <= SIMULABLE_TOL
    }

    /// Recovers the explicit simulable model of the noisy measurement
    /// (M + tN)/(1 + t): mixing weights p(x) and normalized n-outcome
    /// sub-POVMs. Unused combinations (weight below [`WEIGHT_FLOOR`]) get
    /// weight zero and a maximally mixed placeholder sub-POVM.
    pub fn free_decomposition(&self) -> Result<(Vec<f64>, Vec<Povm>)> {
        let n = self.n;
        let mut weights = Vec::with_capacity(self.scaled_sub_povms.len());
        let mut sub_povms = Vec::with_capacity(self.scaled_sub_povms.len());
        for per_a in &self.scaled_sub_povms {
            let mass: f64 = per_a.iter().map(|q| q.trace()).sum();
            let weight = mass / (self.d as f64 * self.primal_value);
            if weight < WEIGHT_FLOOR {
                weights.push(0.0);
                sub_povms.push(Povm::new(vec![
                    HermitianMatrix::identity(self.d)
                        .scale(1.0 / n as f64);
                    n
                ])?);
                continue;
            }
            // Solver residuals on the block scale like tol / weight after
            // normalization; clamp stray negative eigenvalues accordingly,
            // then restore completeness exactly.
            let scale = self.d as f64 / mass;
            let slack = (20.0 * crate::sdp::SOLVER_TOL * self.d as f64 / weight).clamp(1e-8, 1e-3);
            let effects = per_a
                .iter()
                .map(|q| q.scale(scale).sanitized_psd(slack))
                .collect::<Result<Vec<_>>>()?;
            weights.push(weight);
            sub_povms.push(Povm::renormalized(effects)?);
        }
        // The weights sum to one by construction of the primal objective;
        // renormalize the floating-point residue away.
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Degenerate("all combination weights vanish".into()));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok((weights, sub_povms))
    }
}

/// Solves both robustness programs for `povm` against the
/// n-outcome-simulable set and cross-checks them.
pub fn robustness(povm: &Povm, n: usize) -> Result<RobustnessResult> {
    robustness_with_tol(povm, n, crate::sdp::SOLVER_TOL)
}

/// [`robustness`] with an explicit solver tolerance.
pub fn robustness_with_tol(povm: &Povm, n: usize, solver_tol: f64) -> Result<RobustnessResult> {
    let d = povm.dim();
    let m = povm.outcomes();
    let scheme = RelabelingScheme::enumerate(m, n)?;

    let primal = build_primal(povm, n)?;
    let primal_sol = primal.solve_with_tol(solver_tol)?.require_optimal()?;
    let primal_value = primal_sol.objective_value;

    let dual = build_dual(povm, n)?;
    let dual_sol = dual.solve_with_tol(solver_tol)?.require_optimal()?;
    let dual_value = dual_sol.objective_value;

    let gap = (primal_value - dual_value).abs();
    if gap > GAP_TOL {
        return Err(Error::Solver(format!(
            "primal/dual mismatch: {primal_value} vs {dual_value} (gap {gap:.3e})"
        )));
    }

    let robustness = primal_value - 1.0;
    if robustness < -1e-8 {
        return Err(Error::Solver(format!(
            "robustness {robustness:.3e} below -1e-8; the primal lost feasibility"
        )));
    }

    let mut warnings = Vec::new();

    // Primal blocks, combination-major.
    let mut scaled_sub_povms = Vec::with_capacity(scheme.count());
    for x in 0..scheme.count() {
        let mut per_a = Vec::with_capacity(n);
        for a in 0..n {
            per_a.push(primal_sol.variables[x * n + a].clone());
        }
        scaled_sub_povms.push(per_a);
    }

    // Recovered noise t N_b.
    let mut scaled_noise_effects = Vec::with_capacity(m);
    for b in 0..m {
        let mut acc = povm.effect(b).scale(-1.0);
        for (x, combo) in scheme.combinations().iter().enumerate() {
            for (a, &label) in combo.iter().enumerate() {
                if label == b {
                    acc = acc.add(&scaled_sub_povms[x][a]);
                }
            }
        }
        scaled_noise_effects.push(acc);
    }

    // Dual blocks.
    let witness_effects: Vec<HermitianMatrix> = dual_sol.variables[..m].to_vec();
    let free_duals: Vec<HermitianMatrix> = dual_sol.variables[m..].to_vec();

    for (b, y) in witness_effects.iter().enumerate() {
        if !y.is_psd(1e-8) {
            return Err(Error::Solver(format!(
                "dual witness Y[{b}] has eigenvalue {:.3e} below -1e-8",
                y.min_eigenvalue()
            )));
        }
    }
    for (x, per_a) in scaled_sub_povms.iter().enumerate() {
        for (a, q) in per_a.iter().enumerate() {
            if !q.is_psd(1e-8) {
                return Err(Error::Solver(format!(
                    "primal block Q[a={a}|x={x}] has eigenvalue {:.3e} below -1e-8",
                    q.min_eigenvalue()
                )));
            }
        }
    }

    let witness_mass: f64 = witness_effects.iter().map(|y| y.trace()).sum();
    let extracted_ensemble = if witness_mass < 1e-10 {
        warnings.push(format!(
            "witness mass {witness_mass:.3e} below 1e-10; no ensemble extracted (dual should reach at least 1)"
        ));
        None
    } else {
        let states = witness_effects
            .iter()
            .map(|y| y.scale(1.0 / witness_mass).sanitized_psd(1e-8))
            .collect::<Result<Vec<_>>>()?;
        // Exact renormalization after the PSD clamp.
        let total: f64 = states.iter().map(|s| s.trace()).sum();
        let states: Vec<HermitianMatrix> = states.iter().map(|s| s.scale(1.0 / total)).collect();
        Some(Ensemble::new(states)?)
    };

    Ok(RobustnessResult {
        m,
        n,
        d,
        robustness,
        primal_value,
        dual_value,
        gap,
        scaled_sub_povms,
        witness_effects,
        free_duals,
        scaled_noise_effects,
        extracted_ensemble,
        warnings,
    })
}

/// Per-n robustness ledger of one measurement.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveOutcomeReport {
    /// Smallest n with robustness at most [`SIMULABLE_TOL`].
    pub effective_outcomes: usize,
    /// robustness_by_n[k-1] = robustness against the k-outcome-simulable set.
    pub robustness_by_n: Vec<f64>,
}

/// The effective number of outcomes: the least k such that the measurement
/// is k-outcome simulable. Searches k = 1..=m; k = m always terminates the
/// search because the identity relabeling is simulable, and extremality
/// caps the answer at d^2 outcomes.
pub fn effective_outcome_number(povm: &Povm) -> Result<EffectiveOutcomeReport> {
    effective_outcome_number_with_tol(povm, crate::sdp::SOLVER_TOL)
}

/// [`effective_outcome_number`] with an explicit solver tolerance.
pub fn effective_outcome_number_with_tol(
    povm: &Povm,
    solver_tol: f64,
) -> Result<EffectiveOutcomeReport> {
    let m = povm.outcomes();
    let mut robustness_by_n = Vec::with_capacity(m);
    let mut effective = m;
    for k in 1..=m {
        let r = robustness_with_tol(povm, k, solver_tol)?;
        robustness_by_n.push(r.robustness);
        if r.is_simulable() {
            effective = k;
            break;
        }
    }
    Ok(EffectiveOutcomeReport {
        effective_outcomes: effective,
        robustness_by_n,
    })
}
