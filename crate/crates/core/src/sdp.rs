//! Conic adapter: model Hermitian-PSD constrained linear programs in the
//! complex domain and solve them as real symmetric SDPs.
//!
//! Model builders declare d x d Hermitian matrix variables (free or in the
//! PSD cone), affine matrix equalities `E = 0`, affine matrix inequalities
//! `E >= 0`, and a linear objective `sum_k tr(C_k V_k) + const`. Lowering
//! parametrizes each variable by its d^2 real degrees of freedom and maps
//! every PSD condition through the real embedding
//!
//! ```text
//! T(H) = [ Re H  -Im H ]
//!        [ Im H   Re H ]
//! ```
//!
//! which preserves positive semidefiniteness and doubles every eigenvalue.
//! The doubling means trace functionals on embedded matrices carry a factor
//! 1/2; that bookkeeping lives entirely in this module, so model builders
//! write complex-domain expressions only.
//!
//! The backend is Clarabel's interior-point solver. One solve is
//! single-threaded; distinct solves may run concurrently.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::{CMatrix, HermitianMatrix};

/// Default solver tolerance (duality gap and feasibility residuals).
pub const SOLVER_TOL: f64 = 1e-8;

/// Handle to a declared matrix variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VarId(pub usize);

/// Cone membership of a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarDomain {
    /// Hermitian and positive semidefinite.
    PsdCone,
    /// Hermitian, unconstrained.
    Free,
}

#[derive(Debug, Clone, Serialize)]
struct VarDecl {
    name: String,
    dim: usize,
    domain: VarDomain,
}

/// How a variable enters one term of a matrix expression.
#[derive(Debug, Clone)]
enum TermForm {
    /// coeff * V
    Matrix,
    /// coeff * tr(V) * I
    TraceTimesIdentity,
    /// coeff * tr(C V) * I
    InnerTimesIdentity(HermitianMatrix),
}

#[derive(Debug, Clone)]
struct Term {
    var: VarId,
    coeff: f64,
    form: TermForm,
}

/// Affine Hermitian-matrix-valued expression in the declared variables.
#[derive(Debug, Clone)]
pub struct MatExpr {
    dim: usize,
    constant: HermitianMatrix,
    terms: Vec<Term>,
}

impl MatExpr {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            constant: HermitianMatrix::zeros(dim),
            terms: Vec::new(),
        }
    }

    pub fn from_constant(h: &HermitianMatrix) -> Self {
        Self {
            dim: h.dim(),
            constant: h.clone(),
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `coeff * V`.
    pub fn plus_var(mut self, var: VarId, coeff: f64) -> Self {
        self.terms.push(Term {
            var,
            coeff,
            form: TermForm::Matrix,
        });
        self
    }

    /// Adds `coeff * tr(V) * I`.
    pub fn plus_trace_identity(mut self, var: VarId, coeff: f64) -> Self {
        self.terms.push(Term {
            var,
            coeff,
            form: TermForm::TraceTimesIdentity,
        });
        self
    }

    /// Adds `coeff * tr(C V) * I`.
    pub fn plus_inner_identity(mut self, var: VarId, coeff: f64, c: &HermitianMatrix) -> Self {
        self.terms.push(Term {
            var,
            coeff,
            form: TermForm::InnerTimesIdentity(c.clone()),
        });
        self
    }

    /// Adds a constant Hermitian offset `coeff * H`.
    pub fn plus_constant(mut self, h: &HermitianMatrix, coeff: f64) -> Self {
        self.constant = self.constant.add(&h.scale(coeff));
        self
    }

    /// Evaluates the expression at a full variable assignment.
    pub fn evaluate(&self, values: &[HermitianMatrix]) -> HermitianMatrix {
        let mut acc = self.constant.clone();
        for term in &self.terms {
            let v = &values[term.var.0];
            match &term.form {
                TermForm::Matrix => acc = acc.add(&v.scale(term.coeff)),
                TermForm::TraceTimesIdentity => {
                    acc = acc.add_scaled_identity(term.coeff * v.trace());
                }
                TermForm::InnerTimesIdentity(c) => {
                    acc = acc.add_scaled_identity(term.coeff * c.inner(v));
                }
            }
        }
        acc
    }
}

/// Optimization sense of the linear objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Termination status translated to the model level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// A standard-form conic program over Hermitian matrix variables.
pub struct SdpProblem {
    vars: Vec<VarDecl>,
    equalities: Vec<MatExpr>,
    inequalities: Vec<MatExpr>,
    objective: Vec<(VarId, HermitianMatrix)>,
    objective_constant: f64,
    sense: Sense,
}

impl SdpProblem {
    pub fn new(sense: Sense) -> Self {
        Self {
            vars: Vec::new(),
            equalities: Vec::new(),
            inequalities: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            sense,
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Declares a d x d Hermitian matrix variable.
    pub fn add_var(&mut self, name: impl Into<String>, dim: usize, domain: VarDomain) -> VarId {
        assert!(dim >= 1, "variable dimension must be >= 1");
        let id = VarId(self.vars.len());
        self.vars.push(VarDecl {
            name: name.into(),
            dim,
            domain,
        });
        id
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_dim(&self, var: VarId) -> usize {
        self.vars[var.0].dim
    }

    pub fn num_equalities(&self) -> usize {
        self.equalities.len()
    }

    pub fn num_inequalities(&self) -> usize {
        self.inequalities.len()
    }

    fn validate_expr(&self, e: &MatExpr) -> Result<()> {
        for term in &e.terms {
            let decl = self
                .vars
                .get(term.var.0)
                .ok_or_else(|| Error::Domain(format!("unknown variable id {}", term.var.0)))?;
            let needed = match &term.form {
                TermForm::Matrix => decl.dim == e.dim,
                TermForm::TraceTimesIdentity => true,
                TermForm::InnerTimesIdentity(c) => c.dim() == decl.dim,
            };
            if !needed {
                return Err(Error::Mismatch(format!(
                    "term on variable '{}' (dim {}) does not fit expression dim {}",
                    decl.name, decl.dim, e.dim
                )));
            }
        }
        Ok(())
    }

    /// Adds the matrix equality `expr = 0`.
    pub fn add_equality(&mut self, expr: MatExpr) -> Result<()> {
        self.validate_expr(&expr)?;
        self.equalities.push(expr);
        Ok(())
    }

    /// Adds the linear matrix inequality `expr >= 0`.
    pub fn add_psd_constraint(&mut self, expr: MatExpr) -> Result<()> {
        self.validate_expr(&expr)?;
        self.inequalities.push(expr);
        Ok(())
    }

    /// Sets the objective coefficient of one variable: contributes
    /// `tr(C V)`. At most one coefficient per variable.
    pub fn add_objective_term(&mut self, var: VarId, c: HermitianMatrix) -> Result<()> {
        let decl = self
            .vars
            .get(var.0)
            .ok_or_else(|| Error::Domain(format!("unknown variable id {}", var.0)))?;
        if c.dim() != decl.dim {
            return Err(Error::Mismatch(format!(
                "objective coefficient dim {} does not match variable '{}' dim {}",
                c.dim(),
                decl.name,
                decl.dim
            )));
        }
        self.objective.push((var, c));
        Ok(())
    }

    pub fn set_objective_constant(&mut self, constant: f64) {
        self.objective_constant = constant;
    }

    /// Objective value of an explicit assignment.
    pub fn objective_at(&self, values: &[HermitianMatrix]) -> f64 {
        self.objective_constant
            + self
                .objective
                .iter()
                .map(|(v, c)| c.inner(&values[v.0]))
                .sum::<f64>()
    }

    /// Residuals of an explicit assignment: used to certify feasible points
    /// independently of the solver.
    pub fn check_point(&self, values: &[HermitianMatrix]) -> PointReport {
        assert_eq!(values.len(), self.vars.len(), "assignment length mismatch");
        let mut max_equality_residual: f64 = 0.0;
        for e in &self.equalities {
            let val = e.evaluate(values);
            max_equality_residual =
                max_equality_residual.max(val.max_abs_diff(&HermitianMatrix::zeros(e.dim)));
        }
        let mut min_inequality_eigenvalue = f64::INFINITY;
        for e in &self.inequalities {
            min_inequality_eigenvalue =
                min_inequality_eigenvalue.min(e.evaluate(values).min_eigenvalue());
        }
        let mut min_variable_eigenvalue = f64::INFINITY;
        for (decl, v) in self.vars.iter().zip(values) {
            if matches!(decl.domain, VarDomain::PsdCone) {
                min_variable_eigenvalue = min_variable_eigenvalue.min(v.min_eigenvalue());
            }
        }
        PointReport {
            objective: self.objective_at(values),
            max_equality_residual,
            min_inequality_eigenvalue,
            min_variable_eigenvalue,
        }
    }

    /// Solves with the default tolerance.
    pub fn solve(&self) -> Result<SdpSolution> {
        self.solve_with_tol(SOLVER_TOL)
    }

    /// Solves the program. Infeasibility and unboundedness are reported in
    /// the returned status, never silently. A numerical breakdown triggers
    /// one automatic retry with 10x looser convergence tolerances before the
    /// failure status is surfaced.
    pub fn solve_with_tol(&self, tol: f64) -> Result<SdpSolution> {
        let lowered = self.lower()?;
        let first = self.run_backend(&lowered, tol)?;
        let needs_retry = matches!(first.status, SolveStatus::NumericalFailure);
        if !needs_retry {
            return Ok(first);
        }
        log::warn!("solver reported a numerical failure; retrying once with 10x looser tolerance");
        let mut second = self.run_backend(&lowered, tol * 10.0)?;
        second.retried = true;
        Ok(second)
    }

    /// JSON dump of the lowered real standard form, for external
    /// cross-checking of the model.
    pub fn standard_form_json(&self) -> Result<serde_json::Value> {
        let lowered = self.lower()?;
        let triplets: Vec<(usize, usize, f64)> = lowered.triplets.clone();
        Ok(serde_json::json!({
            "sense": self.sense,
            "num_params": lowered.n_params,
            "objective_constant": self.objective_constant,
            "variables": self.vars.iter().enumerate().map(|(k, v)| {
                serde_json::json!({
                    "name": v.name,
                    "dim": v.dim,
                    "domain": v.domain,
                    "param_offset": lowered.offsets[k],
                })
            }).collect::<Vec<_>>(),
            "cones": lowered.cone_desc,
            "q": lowered.q,
            "b": lowered.b,
            "a_triplets": triplets,
        }))
    }

    // -- lowering -----------------------------------------------------------

    fn lower(&self) -> Result<Lowered> {
        let mut offsets = Vec::with_capacity(self.vars.len());
        let mut n_params = 0usize;
        for decl in &self.vars {
            offsets.push(n_params);
            n_params += decl.dim * decl.dim;
        }

        let mut rows = RowBuilder::new(n_params);

        // Zero cone: all matrix equalities, entry by entry.
        let mut zero_rows = 0usize;
        for expr in &self.equalities {
            zero_rows += self.emit_equality_rows(expr, &offsets, &mut rows)?;
        }

        // PSD cones: variable cones first, then explicit inequalities, each
        // through the real embedding.
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        let mut cone_desc: Vec<serde_json::Value> = Vec::new();
        if zero_rows > 0 {
            cones.push(SupportedConeT::ZeroConeT(zero_rows));
            cone_desc.push(serde_json::json!({"type": "zero", "rows": zero_rows}));
        }
        for (k, decl) in self.vars.iter().enumerate() {
            if matches!(decl.domain, VarDomain::PsdCone) {
                let expr = MatExpr::zero(decl.dim).plus_var(VarId(k), 1.0);
                self.emit_psd_rows(&expr, &offsets, &mut rows)?;
                cones.push(SupportedConeT::PSDTriangleConeT(2 * decl.dim));
                cone_desc.push(serde_json::json!({
                    "type": "psd_triangle",
                    "matrix_dim": 2 * decl.dim,
                    "source": format!("variable cone '{}'", decl.name),
                }));
            }
        }
        for (i, expr) in self.inequalities.iter().enumerate() {
            self.emit_psd_rows(expr, &offsets, &mut rows)?;
            cones.push(SupportedConeT::PSDTriangleConeT(2 * expr.dim));
            cone_desc.push(serde_json::json!({
                "type": "psd_triangle",
                "matrix_dim": 2 * expr.dim,
                "source": format!("inequality {i}"),
            }));
        }

        // Objective vector in the canonical minimization sense.
        let mut q = vec![0.0f64; n_params];
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        for (var, c) in &self.objective {
            let decl = &self.vars[var.0];
            accumulate_functional(&mut q, offsets[var.0], decl.dim, c, sign);
        }

        Ok(Lowered {
            n_params,
            offsets,
            q,
            b: rows.b,
            triplets: rows.triplets,
            n_rows: rows.n_rows,
            cones,
            cone_desc,
            zero_rows,
        })
    }

    fn emit_equality_rows(
        &self,
        expr: &MatExpr,
        offsets: &[usize],
        rows: &mut RowBuilder,
    ) -> Result<usize> {
        let d = expr.dim;
        let mut emitted = 0usize;
        for j in 0..d {
            for i in 0..=j {
                // Re E_ij = 0
                let row = rows.next_row(-expr.constant.entry(i, j).re);
                for term in &expr.terms {
                    self.add_entry_coeffs(rows, row, term, offsets, EntryPart::Re, i, j, 1.0);
                }
                emitted += 1;
                if i < j {
                    // Im E_ij = 0
                    let row = rows.next_row(-expr.constant.entry(i, j).im);
                    for term in &expr.terms {
                        self.add_entry_coeffs(rows, row, term, offsets, EntryPart::Im, i, j, 1.0);
                    }
                    emitted += 1;
                }
            }
        }
        Ok(emitted)
    }

    fn emit_psd_rows(
        &self,
        expr: &MatExpr,
        offsets: &[usize],
        rows: &mut RowBuilder,
    ) -> Result<()> {
        let d = expr.dim;
        let two_d = 2 * d;
        let sqrt2 = std::f64::consts::SQRT_2;
        // svec slots of the embedded matrix, upper triangle column-major.
        for cc in 0..two_d {
            for rr in 0..=cc {
                let scale = if rr == cc { 1.0 } else { sqrt2 };
                // The embedded entry T_{rr,cc} as a signed part of E.
                let (part, i, j, part_sign) = if cc < d {
                    (EntryPart::Re, rr, cc, 1.0)
                } else if rr < d {
                    // T12 = -Im E
                    (EntryPart::Im, rr, cc - d, -1.0)
                } else {
                    (EntryPart::Re, rr - d, cc - d, 1.0)
                };
                let const_val = match part {
                    EntryPart::Re => expr.constant.entry(i, j).re,
                    EntryPart::Im => expr.constant.entry(i, j).im,
                };
                // A x + s = b with s = svec(T(E)): A carries the negated
                // linear part, b the constant part.
                let row = rows.next_row(scale * part_sign * const_val);
                for term in &expr.terms {
                    self.add_entry_coeffs(rows, row, term, offsets, part, i, j, -scale * part_sign);
                }
            }
        }
        Ok(())
    }

    /// Adds to `row` the coefficients of `factor * Part(E_ij)` restricted to
    /// one term of the expression. `Part` is the real or imaginary part; the
    /// (i, j) indices may address the lower triangle for Im parts.
    #[allow(clippy::too_many_arguments)]
    fn add_entry_coeffs(
        &self,
        rows: &mut RowBuilder,
        row: usize,
        term: &Term,
        offsets: &[usize],
        part: EntryPart,
        i: usize,
        j: usize,
        factor: f64,
    ) {
        let decl = &self.vars[term.var.0];
        let off = offsets[term.var.0];
        let d = decl.dim;
        let c = factor * term.coeff;
        match &term.form {
            TermForm::Matrix => match part {
                EntryPart::Re => {
                    if i == j {
                        rows.push(row, off + param_diag(d, i), c);
                    } else {
                        let (a, b) = if i < j { (i, j) } else { (j, i) };
                        rows.push(row, off + param_re(d, a, b), c);
                    }
                }
                EntryPart::Im => {
                    if i == j {
                        // Iminary part of a diagonal entry is identically 0.
                    } else if i < j {
                        rows.push(row, off + param_im(d, i, j), c);
                    } else {
                        rows.push(row, off + param_im(d, j, i), -c);
                    }
                }
            },
            TermForm::TraceTimesIdentity => {
                if matches!(part, EntryPart::Re) && i == j {
                    for l in 0..d {
                        rows.push(row, off + param_diag(d, l), c);
                    }
                }
            }
            TermForm::InnerTimesIdentity(cmat) => {
                if matches!(part, EntryPart::Re) && i == j {
                    let mut coeffs = vec![0.0; d * d];
                    accumulate_functional(&mut coeffs, 0, d, cmat, c);
                    for (p, &v) in coeffs.iter().enumerate() {
                        if v != 0.0 {
                            rows.push(row, off + p, v);
                        }
                    }
                }
            }
        }
    }

    fn run_backend(&self, lowered: &Lowered, tol: f64) -> Result<SdpSolution> {
        let a = triplets_to_csc(lowered.n_rows, lowered.n_params, &lowered.triplets);
        let p = CscMatrix::<f64>::zeros((lowered.n_params, lowered.n_params));
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_gap_abs(tol)
            .tol_gap_rel(tol)
            .tol_feas(tol)
            .build()
            .map_err(|e| Error::Solver(format!("invalid solver settings: {e}")))?;
        let mut solver =
            DefaultSolver::new(&p, &lowered.q, &a, &lowered.b, &lowered.cones, settings)
                .map_err(|e| Error::Solver(format!("backend rejected the problem: {e:?}")))?;
        solver.solve();

        let status = match solver.solution.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            SolverStatus::AlmostSolved
            | SolverStatus::MaxIterations
            | SolverStatus::MaxTime
            | SolverStatus::NumericalError
            | SolverStatus::InsufficientProgress
            | SolverStatus::Unsolved
            | SolverStatus::CallbackTerminated => {
                // The backend can stall an iterate short of declaring
                // success even though the returned certificates already
                // meet the requested tolerance: accept when the gap is in
                // and the residuals are within an order of it. Callers
                // needing tighter objective accuracy than the residual
                // floor should polish through the returned duals.
                let info = &solver.info;
                if (info.gap_abs <= tol || info.gap_rel <= tol)
                    && info.res_primal <= 10.0 * tol
                    && info.res_dual <= 10.0 * tol
                {
                    SolveStatus::Optimal
                } else {
                    log::warn!(
                        "backend ended with {:?}: gap_abs {:.3e} gap_rel {:.3e} res_p {:.3e} res_d {:.3e} at tol {tol:.1e}",
                        solver.solution.status,
                        info.gap_abs,
                        info.gap_rel,
                        info.res_primal,
                        info.res_dual
                    );
                    SolveStatus::NumericalFailure
                }
            }
        };

        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let objective_value = sign * solver.solution.obj_val + self.objective_constant;
        let dual_objective_value = sign * solver.solution.obj_val_dual + self.objective_constant;

        // Reconstruct Hermitian variable values from the parameter vector.
        let x = &solver.solution.x;
        let variables: Vec<HermitianMatrix> = self
            .vars
            .iter()
            .enumerate()
            .map(|(k, decl)| params_to_hermitian(&x[lowered.offsets[k]..], decl.dim))
            .collect();

        // Split the dual vector by cone block and map back to the complex
        // domain. Convention: these are multipliers of the canonical
        // minimization form (Maximize problems are lowered by negating the
        // objective), with the embedding factor 2 already applied to PSD
        // blocks so that complex-domain KKT pairings hold directly.
        let z = &solver.solution.z;
        let mut cursor = 0usize;
        let mut equality_duals = Vec::with_capacity(self.equalities.len());
        if lowered.zero_rows > 0 {
            for expr in &self.equalities {
                let rows_here = expr.dim * expr.dim;
                equality_duals.push(assemble_equality_dual(
                    &z[cursor..cursor + rows_here],
                    expr.dim,
                ));
                cursor += rows_here;
            }
        }
        let mut psd_var_duals: Vec<Option<HermitianMatrix>> = vec![None; self.vars.len()];
        for (k, decl) in self.vars.iter().enumerate() {
            if matches!(decl.domain, VarDomain::PsdCone) {
                let slots = svec_len(2 * decl.dim);
                psd_var_duals[k] = Some(assemble_psd_dual(&z[cursor..cursor + slots], decl.dim));
                cursor += slots;
            }
        }
        let mut inequality_duals = Vec::with_capacity(self.inequalities.len());
        for expr in &self.inequalities {
            let slots = svec_len(2 * expr.dim);
            inequality_duals.push(assemble_psd_dual(&z[cursor..cursor + slots], expr.dim));
            cursor += slots;
        }

        Ok(SdpSolution {
            status,
            objective_value,
            dual_objective_value,
            variables,
            equality_duals,
            psd_var_duals,
            inequality_duals,
            gap: solver.info.gap_abs.abs(),
            iterations: solver.info.iterations,
            retried: false,
        })
    }
}

/// Residual summary of an explicit assignment.
#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub objective: f64,
    pub max_equality_residual: f64,
    /// +infinity when the problem has no inequality constraints.
    pub min_inequality_eigenvalue: f64,
    /// +infinity when no variable lives in the PSD cone.
    pub min_variable_eigenvalue: f64,
}

impl PointReport {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_equality_residual <= tol
            && self.min_inequality_eigenvalue >= -tol
            && self.min_variable_eigenvalue >= -tol
    }
}

/// Solution of an [`SdpProblem`].
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Objective in the declared sense, constant included.
    pub objective_value: f64,
    /// The backend's dual bound mapped to the declared sense.
    pub dual_objective_value: f64,
    /// Values of the declared variables, in declaration order.
    pub variables: Vec<HermitianMatrix>,
    /// One Hermitian multiplier per matrix equality.
    pub equality_duals: Vec<HermitianMatrix>,
    /// Multiplier of each variable's PSD cone (None for free variables).
    pub psd_var_duals: Vec<Option<HermitianMatrix>>,
    /// One PSD multiplier per explicit matrix inequality.
    pub inequality_duals: Vec<HermitianMatrix>,
    /// Absolute duality gap reported by the backend.
    pub gap: f64,
    pub iterations: u32,
    /// True when the automatic loosened retry produced this solution.
    pub retried: bool,
}

impl SdpSolution {
    /// Converts any non-optimal status into a solver error.
    pub fn require_optimal(self) -> Result<SdpSolution> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            other => Err(Error::Solver(format!(
                "expected an optimal solution, got {other:?} (gap {:.3e}, {} iterations)",
                self.gap, self.iterations
            ))),
        }
    }
}

// ---------------------------------------------------------------------------
// Real embedding
// ---------------------------------------------------------------------------

/// Real symmetric embedding T(H) = [[Re H, -Im H], [Im H, Re H]].
///
/// H is PSD iff T(H) is PSD; every eigenvalue of H appears twice in T(H).
pub fn embed_hermitian(h: &HermitianMatrix) -> DMatrix<f64> {
    let d = h.dim();
    DMatrix::from_fn(2 * d, 2 * d, |r, c| {
        let (i, j) = (r % d, c % d);
        let z = h.entry(i, j);
        match (r < d, c < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`embed_hermitian`] for matrices that are only numerically
/// structured: symmetrizes the Re blocks and antisymmetrizes the Im blocks.
pub fn unembed_hermitian(t: &DMatrix<f64>) -> Result<HermitianMatrix> {
    if t.nrows() != t.ncols() || !t.nrows().is_multiple_of(2) || t.nrows() == 0 {
        return Err(Error::Invalid(format!(
            "expected a square even-dimension matrix, got {}x{}",
            t.nrows(),
            t.ncols()
        )));
    }
    let d = t.nrows() / 2;
    let mat = CMatrix::from_fn(d, d, |i, j| {
        let re = 0.5 * (t[(i, j)] + t[(i + d, j + d)]);
        let im = 0.5 * (t[(i + d, j)] - t[(i, j + d)]);
        Complex64::new(re, im)
    });
    HermitianMatrix::hermitian_part(&mat)
}

// ---------------------------------------------------------------------------
// Parameter layout and svec helpers
// ---------------------------------------------------------------------------
//
// A d x d Hermitian variable is parametrized by d^2 reals in upper-triangle
// column-major order: the diagonal entry for i == j, then (Re, Im) adjacent
// for each i < j.

fn param_base(d: usize, i: usize, j: usize) -> usize {
    // Entries strictly above column j plus those at or above (i, j) in
    // column j, counting Re/Im slots.
    debug_assert!(i <= j && j < d);
    let before_col: usize = (0..j).map(|col| 2 * col + 1).sum();
    before_col + 2 * i
}

fn param_diag(d: usize, i: usize) -> usize {
    param_base(d, i, i)
}

fn param_re(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    param_base(d, i, j)
}

fn param_im(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    param_base(d, i, j) + 1
}

fn params_to_hermitian(params: &[f64], d: usize) -> HermitianMatrix {
    let mat = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(params[param_diag(d, i)], 0.0)
        } else if i < j {
            Complex64::new(params[param_re(d, i, j)], params[param_im(d, i, j)])
        } else {
            Complex64::new(params[param_re(d, j, i)], -params[param_im(d, j, i)])
        }
    });
    HermitianMatrix::hermitian_part(&mat).expect("square by construction")
}

/// Gradient of tr(C V) in the parameter layout, scaled by `scale`, written
/// into `out[offset..]`.
fn accumulate_functional(
    out: &mut [f64],
    offset: usize,
    d: usize,
    c: &HermitianMatrix,
    scale: f64,
) {
    for i in 0..d {
        out[offset + param_diag(d, i)] += scale * c.entry(i, i).re;
    }
    for j in 0..d {
        for i in 0..j {
            out[offset + param_re(d, i, j)] += scale * 2.0 * c.entry(i, j).re;
            out[offset + param_im(d, i, j)] += scale * 2.0 * c.entry(i, j).im;
        }
    }
}

fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Unpacks a Clarabel svec block (upper triangle column-major, off-diagonals
/// scaled by sqrt(2)) of an embedded 2d x 2d matrix and maps it back to the
/// complex domain with the pairing factor 2, so that
/// tr_real(S T(A)) = tr_complex(dual * A).
fn assemble_psd_dual(z: &[f64], d: usize) -> HermitianMatrix {
    let two_d = 2 * d;
    let mut s = DMatrix::<f64>::zeros(two_d, two_d);
    let mut idx = 0usize;
    for cc in 0..two_d {
        for rr in 0..=cc {
            if rr == cc {
                s[(rr, cc)] = z[idx];
            } else {
                let v = z[idx] * std::f64::consts::FRAC_1_SQRT_2;
                s[(rr, cc)] = v;
                s[(cc, rr)] = v;
            }
            idx += 1;
        }
    }
    let g = unembed_hermitian(&s).expect("even square by construction");
    g.scale(2.0)
}

/// Assembles the Hermitian multiplier of one matrix equality from its
/// per-entry row multipliers, normalized so tr(dual * E) reproduces the
/// row pairing.
fn assemble_equality_dual(z: &[f64], d: usize) -> HermitianMatrix {
    let mut mat = CMatrix::zeros(d, d);
    let mut idx = 0usize;
    for j in 0..d {
        for i in 0..=j {
            if i == j {
                mat[(i, i)] = Complex64::new(z[idx], 0.0);
                idx += 1;
            } else {
                let re = z[idx] * 0.5;
                let im = z[idx + 1] * 0.5;
                idx += 2;
                mat[(i, j)] = Complex64::new(re, im);
                mat[(j, i)] = Complex64::new(re, -im);
            }
        }
    }
    HermitianMatrix::hermitian_part(&mat).expect("square by construction")
}

// ---------------------------------------------------------------------------
// Sparse assembly
// ---------------------------------------------------------------------------

struct RowBuilder {
    n_params: usize,
    n_rows: usize,
    b: Vec<f64>,
    triplets: Vec<(usize, usize, f64)>,
}

impl RowBuilder {
    fn new(n_params: usize) -> Self {
        Self {
            n_params,
            n_rows: 0,
            b: Vec::new(),
            triplets: Vec::new(),
        }
    }

    fn next_row(&mut self, b: f64) -> usize {
        let row = self.n_rows;
        self.n_rows += 1;
        self.b.push(b);
        row
    }

    fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(col < self.n_params);
        if val != 0.0 {
            self.triplets.push((row, col, val));
        }
    }
}

struct Lowered {
    n_params: usize,
    offsets: Vec<usize>,
    q: Vec<f64>,
    b: Vec<f64>,
    triplets: Vec<(usize, usize, f64)>,
    n_rows: usize,
    cones: Vec<SupportedConeT<f64>>,
    cone_desc: Vec<serde_json::Value>,
    zero_rows: usize,
}

fn triplets_to_csc(
    n_rows: usize,
    n_cols: usize,
    triplets: &[(usize, usize, f64)],
) -> CscMatrix<f64> {
    let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
    sorted.sort_by_key(|&(r, c, _)| (c, r));
    // Merge duplicate coordinates by summing.
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
    for (r, c, v) in sorted {
        match merged.last_mut() {
            Some((lr, lc, lv)) if *lr == r && *lc == c => *lv += v,
            _ => merged.push((r, c, v)),
        }
    }
    let mut colptr = vec![0usize; n_cols + 1];
    let mut rowval: Vec<usize> = Vec::with_capacity(merged.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(merged.len());
    for &(r, c, v) in &merged {
        rowval.push(r);
        nzval.push(v);
        colptr[c + 1] += 1;
    }
    for c in 0..n_cols {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(n_rows, n_cols, colptr, rowval, nzval)
}

#[derive(Clone, Copy)]
enum EntryPart {
    Re,
    Im,
}
