//! Dense complex Hermitian operators and the measurement-theoretic domain
//! types built from them: POVMs, subnormalized state ensembles, and
//! assemblages of measurements.
//!
//! Everything here is immutable after construction and sized for desk-scale
//! dimensions (d up to ~16). Constructors validate their invariants and
//! return [`Error::Invalid`] on violation; the only constructors that repair
//! their input are the explicitly named `sanitized` ones.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hermiticity tolerance applied at construction.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Default tolerance for positive-semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-9;
/// Default tolerance for completeness (sum = identity) and trace checks.
pub const COMPLETENESS_TOL: f64 = 1e-9;

pub type CMatrix = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A d x d complex Hermitian operator.
///
/// Entries satisfy `A[i][j] = conj(A[j][i])` within [`HERMITICITY_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HermitianMatrixDto", into = "HermitianMatrixDto")]
pub struct HermitianMatrix {
    mat: CMatrix,
}

impl HermitianMatrix {
    /// Validating constructor.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::Invalid(format!(
                "expected a nonempty square matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let dev = hermiticity_deviation(&mat);
        if dev > HERMITICITY_TOL {
            return Err(Error::Invalid(format!(
                "matrix is not Hermitian: max |A - A^dagger| entry = {dev:.3e}"
            )));
        }
        // Tidy the representation so arithmetic downstream is exactly
        // Hermitian regardless of rounding in the input.
        let herm = (&mat + mat.adjoint()).scale(0.5);
        Ok(Self { mat: herm })
    }

    /// Builds from the Hermitian part (A + A^dagger)/2 of an arbitrary
    /// square matrix. Used to read back solver output, where rounding makes
    /// strict validation pointless.
    pub fn hermitian_part(mat: &CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::Invalid(format!(
                "expected a nonempty square matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let herm = (mat + mat.adjoint()).scale(0.5);
        Ok(Self { mat: herm })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    /// Real diagonal matrix.
    pub fn diagonal(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut mat = CMatrix::zeros(dim, dim);
        for (i, &v) in entries.iter().enumerate() {
            mat[(i, i)] = c(v, 0.0);
        }
        Self { mat }
    }

    /// Rank-one projector |v><v| / <v|v> onto a (not necessarily normalized)
    /// complex vector.
    pub fn projector_onto(v: &[Complex64]) -> Result<Self> {
        let norm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(Error::Degenerate("projector onto the zero vector".into()));
        }
        let dim = v.len();
        let mat = CMatrix::from_fn(dim, dim, |i, j| v[i] * v[j].conj() / norm_sq);
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    /// Real trace. The imaginary part of the trace of a Hermitian matrix is
    /// identically zero.
    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    /// Hilbert-Schmidt pairing tr(A B), real for a Hermitian pair.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "inner product dim mismatch");
        // tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
        let mut acc = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let a = self.mat[(i, j)];
                let b = other.mat[(i, j)];
                acc += a.re * b.re + a.im * b.im;
            }
        }
        acc
    }

    /// Eigenvalues (descending) and matching orthonormal eigenvectors.
    pub fn eigendecompose(&self) -> Eigendecomposition {
        let se = self.mat.clone().symmetric_eigen();
        let dim = self.dim();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
        let mut eigenvectors = CMatrix::zeros(dim, dim);
        for (col, &i) in order.iter().enumerate() {
            eigenvectors.set_column(col, &se.eigenvectors.column(i));
        }
        Eigendecomposition {
            eigenvalues,
            eigenvectors,
        }
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigendecompose().eigenvalues.last().expect("dim >= 1")
    }

    /// True iff the smallest eigenvalue is >= -tol.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Trace norm: sum of absolute eigenvalues.
    pub fn trace_norm(&self) -> f64 {
        self.eigendecompose()
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .sum()
    }

    /// Largest entrywise absolute deviation from another Hermitian matrix.
    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        (&self.mat - &other.mat)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: f64) -> HermitianMatrix {
        HermitianMatrix {
            mat: self.mat.scale(factor),
        }
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), other.dim(), "add dim mismatch");
        HermitianMatrix {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim(), other.dim(), "sub dim mismatch");
        HermitianMatrix {
            mat: &self.mat - &other.mat,
        }
    }

    /// self + factor * identity.
    pub fn add_scaled_identity(&self, factor: f64) -> HermitianMatrix {
        let mut mat = self.mat.clone();
        for i in 0..self.dim() {
            mat[(i, i)] += c(factor, 0.0);
        }
        HermitianMatrix { mat }
    }

    /// Eigenvalue clamp: negative eigenvalues in [-tol, 0) are set to zero.
    /// Eigenvalues below -tol are an error. This is the only repairing
    /// constructor on this type.
    pub fn sanitized_psd(&self, tol: f64) -> Result<HermitianMatrix> {
        let eig = self.eigendecompose();
        let min = *eig.eigenvalues.last().expect("dim >= 1");
        if min < -tol {
            return Err(Error::Invalid(format!(
                "not PSD within tolerance: min eigenvalue {min:.3e} < -{tol:.1e}"
            )));
        }
        if min >= 0.0 {
            return Ok(self.clone());
        }
        let clamped: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
        Ok(eig.reassemble(&clamped))
    }
}

/// Sorted eigensystem of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    /// Descending real eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, column k matching eigenvalue k.
    pub eigenvectors: CMatrix,
}

impl Eigendecomposition {
    /// V diag(values) V^dagger for a replacement spectrum.
    pub fn reassemble(&self, values: &[f64]) -> HermitianMatrix {
        let dim = self.eigenvectors.nrows();
        assert_eq!(values.len(), dim);
        let diag = CMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                c(values[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let mat = &self.eigenvectors * diag * self.eigenvectors.adjoint();
        HermitianMatrix::hermitian_part(&mat).expect("square by construction")
    }

    /// Max entrywise error of V diag(lambda) V^dagger against `original`.
    pub fn reconstruction_error(&self, original: &HermitianMatrix) -> f64 {
        self.reassemble(&self.eigenvalues).max_abs_diff(original)
    }
}

fn hermiticity_deviation(mat: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..mat.ncols() {
        for i in 0..=j {
            let diff = (mat[(i, j)] - mat[(j, i)].conj()).norm();
            dev = dev.max(diff);
        }
    }
    dev
}

/// An m-outcome POVM: an ordered list of PSD effects summing to identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PovmDto", into = "PovmDto")]
pub struct Povm {
    dim: usize,
    effects: Vec<HermitianMatrix>,
}

impl Povm {
    /// Validating constructor with default tolerances.
    pub fn new(effects: Vec<HermitianMatrix>) -> Result<Self> {
        Self::with_tolerances(effects, PSD_TOL, COMPLETENESS_TOL)
    }

    /// Validating constructor with caller-chosen PSD and completeness
    /// tolerances.
    pub fn with_tolerances(
        effects: Vec<HermitianMatrix>,
        psd_tol: f64,
        sum_tol: f64,
    ) -> Result<Self> {
        let dim = common_dim(&effects, "POVM effect")?;
        for (b, eff) in effects.iter().enumerate() {
            let min = eff.min_eigenvalue();
            if min < -psd_tol {
                return Err(Error::Invalid(format!(
                    "effect {b} is not PSD: min eigenvalue {min:.3e}"
                )));
            }
        }
        let sum = sum_matrices(&effects);
        let dev = sum.max_abs_diff(&HermitianMatrix::identity(dim));
        if dev > sum_tol {
            return Err(Error::Invalid(format!(
                "effects do not sum to identity: max deviation {dev:.3e}"
            )));
        }
        Ok(Self { dim, effects })
    }

    /// Repairing constructor for near-valid numerical output: clamps small
    /// negative eigenvalues of each effect to zero and spreads the residual
    /// of the completeness identity uniformly over the effects. Fails if the
    /// total adjustment exceeds `slack`.
    pub fn sanitized(effects: Vec<HermitianMatrix>, slack: f64) -> Result<Self> {
        let dim = common_dim(&effects, "POVM effect")?;
        let mut fixed = Vec::with_capacity(effects.len());
        for eff in &effects {
            fixed.push(eff.sanitized_psd(slack)?);
        }
        let sum = sum_matrices(&fixed);
        let residual = HermitianMatrix::identity(dim).sub(&sum);
        let dev = residual.max_abs_diff(&HermitianMatrix::zeros(dim));
        if dev > slack {
            return Err(Error::Invalid(format!(
                "completeness residual {dev:.3e} exceeds sanitize slack {slack:.1e}"
            )));
        }
        let share = residual.scale(1.0 / fixed.len() as f64);
        for eff in &mut fixed {
            *eff = eff.add(&share);
        }
        // The spread can push a zero eigenvalue slightly negative again;
        // accept within the usual tolerance.
        Self::with_tolerances(fixed, PSD_TOL.max(2.0 * slack), PSD_TOL.max(2.0 * slack))
    }

    /// Exact repair for effects that are PSD but whose sum S drifted from
    /// the identity: conjugates every effect by S^{-1/2}. The identity map
    /// for already-valid input; fails when S is singular.
    pub fn renormalized(effects: Vec<HermitianMatrix>) -> Result<Self> {
        common_dim(&effects, "POVM effect")?;
        let sum = sum_matrices(&effects);
        let eig = sum.eigendecompose();
        let min = *eig.eigenvalues.last().expect("dim >= 1");
        if min <= 1e-10 {
            return Err(Error::Degenerate(format!(
                "effect sum is singular (min eigenvalue {min:.3e}); cannot renormalize"
            )));
        }
        let inv_sqrt: Vec<f64> = eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
        let s_inv_sqrt = eig.reassemble(&inv_sqrt);
        let effects = effects
            .iter()
            .map(|e| {
                let mat = s_inv_sqrt.matrix() * e.matrix() * s_inv_sqrt.matrix();
                HermitianMatrix::hermitian_part(&mat)
            })
            .collect::<Result<Vec<_>>>()?;
        Povm::new(effects)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of outcome slots, including zero effects.
    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[HermitianMatrix] {
        &self.effects
    }

    pub fn effect(&self, b: usize) -> &HermitianMatrix {
        &self.effects[b]
    }

    /// Number of effects with trace above `eps`: the count of outcomes that
    /// can fire at all. A necessary proxy for the resource-theoretic
    /// effective outcome number, which is computed from robustness instead.
    pub fn effective_outcome_count(&self, eps: f64) -> usize {
        self.effects.iter().filter(|e| e.trace() > eps).count()
    }
}

fn common_dim(mats: &[HermitianMatrix], what: &str) -> Result<usize> {
    let first = mats
        .first()
        .ok_or_else(|| Error::Invalid(format!("empty {what} list")))?;
    let dim = first.dim();
    for (i, m) in mats.iter().enumerate() {
        if m.dim() != dim {
            return Err(Error::Mismatch(format!(
                "{what} {i} has dim {} but {what} 0 has dim {dim}",
                m.dim()
            )));
        }
    }
    Ok(dim)
}

fn sum_matrices(mats: &[HermitianMatrix]) -> HermitianMatrix {
    let dim = mats[0].dim();
    mats.iter()
        .fold(HermitianMatrix::zeros(dim), |acc, m| acc.add(m))
}

/// A state-discrimination instance: subnormalized density operators with the
/// prior probabilities absorbed, so the traces sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleDto", into = "EnsembleDto")]
pub struct Ensemble {
    dim: usize,
    states: Vec<HermitianMatrix>,
}

impl Ensemble {
    pub fn new(states: Vec<HermitianMatrix>) -> Result<Self> {
        Self::with_tolerances(states, PSD_TOL, COMPLETENESS_TOL)
    }

    pub fn with_tolerances(
        states: Vec<HermitianMatrix>,
        psd_tol: f64,
        trace_tol: f64,
    ) -> Result<Self> {
        let dim = common_dim(&states, "ensemble state")?;
        for (b, st) in states.iter().enumerate() {
            let min = st.min_eigenvalue();
            if min < -psd_tol {
                return Err(Error::Invalid(format!(
                    "state {b} is not PSD: min eigenvalue {min:.3e}"
                )));
            }
        }
        let total: f64 = states.iter().map(|s| s.trace()).sum();
        if (total - 1.0).abs() > trace_tol {
            return Err(Error::Invalid(format!(
                "total trace {total} deviates from 1 by more than {trace_tol:.1e}"
            )));
        }
        Ok(Self { dim, states })
    }

    /// Absorbs explicit priors: state b becomes p_b * rho_b.
    pub fn from_weighted(pairs: &[(f64, HermitianMatrix)]) -> Result<Self> {
        let states = pairs
            .iter()
            .map(|(p, rho)| {
                if *p < -1e-12 {
                    return Err(Error::Domain(format!("negative prior {p}")));
                }
                Ok(rho.scale(*p))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(states)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[HermitianMatrix] {
        &self.states
    }

    pub fn state(&self, b: usize) -> &HermitianMatrix {
        &self.states[b]
    }

    /// Unnormalized restriction to the given outcome labels, in order.
    pub fn sub_states(&self, labels: &[usize]) -> Vec<HermitianMatrix> {
        labels.iter().map(|&b| self.states[b].clone()).collect()
    }

    /// Splits each subnormalized state into (prior, normalized state).
    /// Zero-mass states get prior 0 and the maximally mixed placeholder.
    pub fn to_preparations(&self) -> Vec<(f64, HermitianMatrix)> {
        self.states
            .iter()
            .map(|s| {
                let p = s.trace();
                if p > 1e-14 {
                    (p, s.scale(1.0 / p))
                } else {
                    (
                        0.0,
                        HermitianMatrix::identity(self.dim).scale(1.0 / self.dim as f64),
                    )
                }
            })
            .collect()
    }
}

/// A finite family of measurements on the same space, indexed by setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AssemblageDto", into = "AssemblageDto")]
pub struct MeasurementAssemblage {
    dim: usize,
    settings: Vec<Povm>,
}

impl MeasurementAssemblage {
    pub fn new(settings: Vec<Povm>) -> Result<Self> {
        let first = settings
            .first()
            .ok_or_else(|| Error::Invalid("empty assemblage".into()))?;
        let dim = first.dim();
        for (y, povm) in settings.iter().enumerate() {
            if povm.dim() != dim {
                return Err(Error::Mismatch(format!(
                    "setting {y} has dim {} but setting 0 has dim {dim}",
                    povm.dim()
                )));
            }
        }
        Ok(Self { dim, settings })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> &[Povm] {
        &self.settings
    }

    pub fn setting(&self, y: usize) -> &Povm {
        &self.settings[y]
    }

    pub fn num_settings(&self) -> usize {
        self.settings.len()
    }

    /// Outcome count shared by all settings, or an error when they differ.
    pub fn uniform_outcomes(&self) -> Result<usize> {
        let b = self.settings[0].outcomes();
        for (y, povm) in self.settings.iter().enumerate() {
            if povm.outcomes() != b {
                return Err(Error::Mismatch(format!(
                    "setting {y} has {} outcomes but setting 0 has {b}",
                    povm.outcomes()
                )));
            }
        }
        Ok(b)
    }
}

// ---------------------------------------------------------------------------
// JSON wire formats: row-major re/im grids of IEEE-754 doubles.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct HermitianMatrixDto {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<HermitianMatrixDto> for HermitianMatrix {
    type Error = Error;

    fn try_from(dto: HermitianMatrixDto) -> Result<Self> {
        let d = dto.dim;
        if dto.re.len() != d || dto.im.len() != d {
            return Err(Error::Invalid(format!(
                "matrix dim {d} does not match row counts re={} im={}",
                dto.re.len(),
                dto.im.len()
            )));
        }
        for (grid, name) in [(&dto.re, "re"), (&dto.im, "im")] {
            for (i, row) in grid.iter().enumerate() {
                if row.len() != d {
                    return Err(Error::Invalid(format!(
                        "{name} row {i} has {} entries, expected {d}",
                        row.len()
                    )));
                }
            }
        }
        let mat = CMatrix::from_fn(d, d, |i, j| c(dto.re[i][j], dto.im[i][j]));
        HermitianMatrix::new(mat)
    }
}

impl From<HermitianMatrix> for HermitianMatrixDto {
    fn from(h: HermitianMatrix) -> Self {
        let d = h.dim();
        let re = (0..d)
            .map(|i| (0..d).map(|j| h.entry(i, j).re).collect())
            .collect();
        let im = (0..d)
            .map(|i| (0..d).map(|j| h.entry(i, j).im).collect())
            .collect();
        HermitianMatrixDto { dim: d, re, im }
    }
}

#[derive(Serialize, Deserialize)]
struct PovmDto {
    dim: usize,
    effects: Vec<HermitianMatrix>,
}

impl TryFrom<PovmDto> for Povm {
    type Error = Error;

    fn try_from(dto: PovmDto) -> Result<Self> {
        let povm = Povm::new(dto.effects)?;
        if povm.dim() != dto.dim {
            return Err(Error::Mismatch(format!(
                "declared dim {} does not match effect dim {}",
                dto.dim,
                povm.dim()
            )));
        }
        Ok(povm)
    }
}

impl From<Povm> for PovmDto {
    fn from(p: Povm) -> Self {
        PovmDto {
            dim: p.dim,
            effects: p.effects,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct EnsembleDto {
    dim: usize,
    states: Vec<HermitianMatrix>,
}

impl TryFrom<EnsembleDto> for Ensemble {
    type Error = Error;

    fn try_from(dto: EnsembleDto) -> Result<Self> {
        let ensemble = Ensemble::new(dto.states)?;
        if ensemble.dim() != dto.dim {
            return Err(Error::Mismatch(format!(
                "declared dim {} does not match state dim {}",
                dto.dim,
                ensemble.dim()
            )));
        }
        Ok(ensemble)
    }
}

impl From<Ensemble> for EnsembleDto {
    fn from(e: Ensemble) -> Self {
        EnsembleDto {
            dim: e.dim,
            states: e.states,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AssemblageDto {
    dim: usize,
    settings: Vec<Povm>,
}

impl TryFrom<AssemblageDto> for MeasurementAssemblage {
    type Error = Error;

    fn try_from(dto: AssemblageDto) -> Result<Self> {
        let a = MeasurementAssemblage::new(dto.settings)?;
        if a.dim() != dto.dim {
            return Err(Error::Mismatch(format!(
                "declared dim {} does not match setting dim {}",
                dto.dim,
                a.dim()
            )));
        }
        Ok(a)
    }
}

impl From<MeasurementAssemblage> for AssemblageDto {
    fn from(a: MeasurementAssemblage) -> Self {
        AssemblageDto {
            dim: a.dim,
            settings: a.settings,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub fn pauli_x() -> HermitianMatrix {
        HermitianMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ))
        .unwrap()
    }

    fn ket0_proj() -> HermitianMatrix {
        HermitianMatrix::diagonal(&[1.0, 0.0])
    }

    fn ket_plus_proj() -> HermitianMatrix {
        HermitianMatrix::projector_onto(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn rejects_non_hermitian() {
        let mat =
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        assert!(matches!(HermitianMatrix::new(mat), Err(Error::Invalid(_))));
    }

    #[test]
    fn eigendecompose_identity_and_diagonal() {
        let eig = HermitianMatrix::identity(2).eigendecompose();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0]);

        let eig = HermitianMatrix::diagonal(&[3.0, -1.0]).eigendecompose();
        assert_abs_diff_eq!(eig.eigenvalues[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigendecompose_pauli_x() {
        let eig = pauli_x().eigendecompose();
        assert_abs_diff_eq!(eig.eigenvalues[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[1], -1.0, epsilon = 1e-12);
        // Eigenvectors are |+> and |-> up to phase: check componentwise
        // moduli 1/sqrt(2) and the reconstruction.
        for col in 0..2 {
            for row in 0..2 {
                assert_abs_diff_eq!(
                    eig.eigenvectors[(row, col)].norm(),
                    std::f64::consts::FRAC_1_SQRT_2,
                    epsilon = 1e-12
                );
            }
        }
        assert!(eig.reconstruction_error(&pauli_x()) <= 1e-9);
    }

    #[test]
    fn trace_norm_cases() {
        assert_abs_diff_eq!(HermitianMatrix::zeros(2).trace_norm(), 0.0);
        assert_abs_diff_eq!(HermitianMatrix::identity(3).trace_norm(), 3.0);
        let diff = ket0_proj().sub(&ket_plus_proj());
        assert_abs_diff_eq!(diff.trace_norm(), std::f64::consts::SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn is_psd_cases() {
        assert!(HermitianMatrix::identity(2).is_psd(1e-9));
        assert!(!HermitianMatrix::diagonal(&[1.0, -1e-3]).is_psd(1e-9));
        assert!(HermitianMatrix::diagonal(&[1.0, -1e-12]).is_psd(1e-9));
    }

    #[test]
    fn povm_validation_and_outcome_count() {
        let zero_padded = Povm::new(vec![
            ket0_proj(),
            HermitianMatrix::diagonal(&[0.0, 1.0]),
            HermitianMatrix::zeros(2),
        ])
        .unwrap();
        assert_eq!(zero_padded.effective_outcome_count(1e-9), 2);

        let split = Povm::new(vec![
            HermitianMatrix::identity(2).scale(0.5),
            HermitianMatrix::identity(2).scale(0.5),
        ])
        .unwrap();
        assert_eq!(split.effective_outcome_count(1e-9), 2);

        // Sum deviates from identity.
        let bad = Povm::new(vec![ket0_proj(), ket0_proj()]);
        assert!(matches!(bad, Err(Error::Invalid(_))));

        // Effect with a clearly negative eigenvalue.
        let neg = Povm::new(vec![
            HermitianMatrix::diagonal(&[1.5, 1e-3]),
            HermitianMatrix::diagonal(&[-0.5, 1.0 - 1e-3]),
        ]);
        assert!(matches!(neg, Err(Error::Invalid(_))));
    }

    #[test]
    fn ensemble_validation() {
        let e = Ensemble::new(vec![ket0_proj().scale(0.5), ket_plus_proj().scale(0.5)]).unwrap();
        assert_eq!(e.len(), 2);
        assert!(matches!(
            Ensemble::new(vec![ket0_proj(), ket_plus_proj()]),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn sanitized_povm_repairs_small_residuals() {
        let eps = 1e-10;
        let a = HermitianMatrix::diagonal(&[1.0 - eps, -eps * 0.5]);
        let b = HermitianMatrix::diagonal(&[eps, 1.0]);
        let povm = Povm::sanitized(vec![a, b], 1e-8).unwrap();
        let sum = povm.effect(0).add(povm.effect(1));
        assert!(sum.max_abs_diff(&HermitianMatrix::identity(2)) <= 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let povm = Povm::new(vec![ket0_proj(), HermitianMatrix::diagonal(&[0.0, 1.0])]).unwrap();
        let text = serde_json::to_string(&povm).unwrap();
        let back: Povm = serde_json::from_str(&text).unwrap();
        assert_eq!(povm, back);
    }

    #[test]
    fn json_rejects_invalid_povm() {
        let text = r#"{"dim":2,"effects":[{"dim":2,"re":[[1.0,0.0],[0.0,0.0]],"im":[[0.0,0.0],[0.0,0.0]]}]}"#;
        assert!(serde_json::from_str::<Povm>(text).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_hermitian(max_dim: usize) -> impl Strategy<Value = HermitianMatrix> {
            (1..=max_dim).prop_flat_map(|d| {
                proptest::collection::vec(-10.0..10.0f64, 2 * d * d).prop_map(move |vals| {
                    let raw = CMatrix::from_fn(d, d, |i, j| {
                        c(vals[2 * (i * d + j)], vals[2 * (i * d + j) + 1])
                    });
                    HermitianMatrix::hermitian_part(&raw).unwrap()
                })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn eigendecomposition_reconstructs(h in arb_hermitian(6)) {
                let eig = h.eigendecompose();
                prop_assert!(eig.reconstruction_error(&h) <= 1e-9);
                for w in eig.eigenvalues.windows(2) {
                    prop_assert!(w[0] >= w[1]);
                }
            }

            #[test]
            fn psd_sum_stays_psd(a in arb_hermitian(5), b in arb_hermitian(5)) {
                // Shift both into the cone first.
                let a = a.add_scaled_identity(-a.min_eigenvalue() + 0.1);
                let b_dim = b.dim();
                let b = if b_dim == a.dim() { b } else { HermitianMatrix::identity(a.dim()) };
                let b = b.add_scaled_identity(-b.min_eigenvalue() + 0.1);
                prop_assert!(a.is_psd(1e-9));
                prop_assert!(b.is_psd(1e-9));
                prop_assert!(a.add(&b).is_psd(1e-9));
            }

            #[test]
            fn povm_rejects_broken_completeness(h in arb_hermitian(4), eps in 1e-6..1e-2f64) {
                // A two-effect list summing to I + eps * |0><0| must fail.
                let d = h.dim();
                let half = HermitianMatrix::identity(d).scale(0.5);
                let mut bump = vec![0.0; d];
                bump[0] = eps;
                let other = half.add(&HermitianMatrix::diagonal(&bump));
                prop_assert!(Povm::new(vec![half, other]).is_err());
            }

            #[test]
            fn trace_norm_bounds_trace(h in arb_hermitian(6)) {
                prop_assert!(h.trace() <= h.trace_norm() + 1e-12);
                let json = serde_json::to_string(&h).unwrap();
                let back: HermitianMatrix = serde_json::from_str(&json).unwrap();
                prop_assert!(back.max_abs_diff(&h) == 0.0);
            }
        }
    }
}
