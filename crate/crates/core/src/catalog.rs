//! Canonical POVMs and ensembles, plus reproducible random instances.
//!
//! Random kinds draw from ChaCha8 seeded with the spec's 64-bit seed; the
//! generator choice is part of the output contract, so identical specs give
//! bit-identical objects across runs and releases.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{CMatrix, Ensemble, HermitianMatrix, Povm};

/// Instance families available from [`make`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    /// The d rank-one projectors onto the computational basis.
    ProjectiveBasis,
    /// Three qubit effects (2/3)|psi_k><psi_k| at 120 degree separations.
    Trine,
    /// The four-outcome symmetric informationally complete qubit POVM.
    SicQubit,
    /// m uniformly weighted orthogonal pure states in dimension d >= m.
    UniformOrthogonalEnsemble,
    /// Seeded random m-outcome POVM in dimension d.
    RandomPovm,
    /// Seeded random ensemble of m states in dimension d.
    RandomEnsemble,
}

/// Parameters selecting one catalog instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    #[serde(default)]
    pub d: usize,
    #[serde(default)]
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
    /// Random ensembles only: draw the priors from a flat Dirichlet instead
    /// of using uniform weights.
    #[serde(default)]
    pub dirichlet_priors: bool,
}

impl InstanceSpec {
    pub fn new(kind: InstanceKind, d: usize, m: usize) -> Self {
        Self {
            kind,
            d,
            m,
            seed: 0,
            dirichlet_priors: false,
        }
    }

    pub fn seeded(kind: InstanceKind, d: usize, m: usize, seed: u64) -> Self {
        Self {
            kind,
            d,
            m,
            seed,
            dirichlet_priors: false,
        }
    }
}

/// A catalog instance: either a measurement or a state ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CatalogItem {
    Povm(Povm),
    Ensemble(Ensemble),
}

impl CatalogItem {
    pub fn into_povm(self) -> Result<Povm> {
        match self {
            CatalogItem::Povm(p) => Ok(p),
            CatalogItem::Ensemble(_) => Err(Error::Domain(
                "instance is an ensemble, expected a POVM".into(),
            )),
        }
    }

    pub fn into_ensemble(self) -> Result<Ensemble> {
        match self {
            CatalogItem::Ensemble(e) => Ok(e),
            CatalogItem::Povm(_) => Err(Error::Domain(
                "instance is a POVM, expected an ensemble".into(),
            )),
        }
    }
}

/// Builds the instance described by `spec`.
pub fn make(spec: &InstanceSpec) -> Result<CatalogItem> {
    match spec.kind {
        InstanceKind::ProjectiveBasis => {
            let d = require_dim(spec.d)?;
            if spec.m != 0 && spec.m != d {
                return Err(Error::Domain(format!(
                    "projective basis in dimension {d} has exactly {d} outcomes, got m = {}",
                    spec.m
                )));
            }
            Ok(CatalogItem::Povm(projective_basis(d)))
        }
        InstanceKind::Trine => {
            if (spec.d != 0 && spec.d != 2) || (spec.m != 0 && spec.m != 3) {
                return Err(Error::Domain("the trine requires d = 2, m = 3".into()));
            }
            Ok(CatalogItem::Povm(trine()))
        }
        InstanceKind::SicQubit => {
            if (spec.d != 0 && spec.d != 2) || (spec.m != 0 && spec.m != 4) {
                return Err(Error::Domain("the qubit SIC requires d = 2, m = 4".into()));
            }
            Ok(CatalogItem::Povm(sic_qubit()))
        }
        InstanceKind::UniformOrthogonalEnsemble => {
            let d = require_dim(spec.d)?;
            let m = if spec.m == 0 { d } else { spec.m };
            Ok(CatalogItem::Ensemble(uniform_orthogonal_ensemble(d, m)?))
        }
        InstanceKind::RandomPovm => {
            let d = require_dim(spec.d)?;
            if spec.m < 1 {
                return Err(Error::Domain("random POVM needs m >= 1".into()));
            }
            Ok(CatalogItem::Povm(random_povm(d, spec.m, spec.seed)?))
        }
        InstanceKind::RandomEnsemble => {
            let d = require_dim(spec.d)?;
            if spec.m < 1 {
                return Err(Error::Domain("random ensemble needs m >= 1".into()));
            }
            Ok(CatalogItem::Ensemble(random_ensemble(
                d,
                spec.m,
                spec.seed,
                spec.dirichlet_priors,
            )?))
        }
    }
}

fn require_dim(d: usize) -> Result<usize> {
    if d < 1 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    Ok(d)
}

/// Rank-one projector onto computational basis state k.
pub fn basis_projector(d: usize, k: usize) -> HermitianMatrix {
    let mut diag = vec![0.0; d];
    diag[k] = 1.0;
    HermitianMatrix::diagonal(&diag)
}

/// The d projectors onto the computational basis.
pub fn projective_basis(d: usize) -> Povm {
    let effects = (0..d).map(|k| basis_projector(d, k)).collect();
    Povm::new(effects).expect("basis projectors form a POVM")
}

/// Trine: effects (2/3)|psi_k><psi_k| with Bloch vectors at angles 0, 120,
/// 240 degrees in the x-z plane.
pub fn trine() -> Povm {
    let effects = (0..3)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            let v = [
                Complex64::new((angle / 2.0).cos(), 0.0),
                Complex64::new((angle / 2.0).sin(), 0.0),
            ];
            HermitianMatrix::projector_onto(&v)
                .expect("unit vector")
                .scale(2.0 / 3.0)
        })
        .collect();
    Povm::new(effects).expect("trine effects form a POVM")
}

/// Qubit SIC: effects (1/2)|phi_k><phi_k| with Bloch vectors at tetrahedron
/// vertices.
pub fn sic_qubit() -> Povm {
    let s = 1.0 / 3.0_f64.sqrt();
    let bloch = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let effects = bloch
        .iter()
        .map(|n| bloch_state(n[0], n[1], n[2]).scale(0.5))
        .collect();
    Povm::new(effects).expect("tetrahedron effects form a POVM")
}

/// Pure qubit state (I + n . sigma)/2 for a unit Bloch vector.
pub fn bloch_state(nx: f64, ny: f64, nz: f64) -> HermitianMatrix {
    let mat = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.5 * (1.0 + nz), 0.0),
            Complex64::new(0.5 * nx, -0.5 * ny),
            Complex64::new(0.5 * nx, 0.5 * ny),
            Complex64::new(0.5 * (1.0 - nz), 0.0),
        ],
    );
    HermitianMatrix::new(mat).expect("Bloch construction is Hermitian")
}

/// m uniformly weighted orthogonal basis states in dimension d >= m.
pub fn uniform_orthogonal_ensemble(d: usize, m: usize) -> Result<Ensemble> {
    if m < 1 || m > d {
        return Err(Error::Domain(format!(
            "need 1 <= m <= d for orthogonal states, got m = {m}, d = {d}"
        )));
    }
    let states = (0..m)
        .map(|k| basis_projector(d, k).scale(1.0 / m as f64))
        .collect();
    Ensemble::new(states)
}

fn random_complex_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Random m-outcome POVM: effects S^{-1/2} G_b G_b^dagger S^{-1/2} with
/// G_b complex Gaussian and S their Gram sum. Valid for almost every draw;
/// a singular S redraws with the seed incremented.
pub fn random_povm(d: usize, m: usize, seed: u64) -> Result<Povm> {
    let mut attempt_seed = seed;
    for _ in 0..8 {
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
        let grams: Vec<CMatrix> = (0..m)
            .map(|_| {
                let g = random_complex_gaussian(&mut rng, d, d);
                &g * g.adjoint()
            })
            .collect();
        let mut s = CMatrix::zeros(d, d);
        for g in &grams {
            s += g;
        }
        let s_herm = HermitianMatrix::hermitian_part(&s)?;
        let eig = s_herm.eigendecompose();
        let max = eig.eigenvalues[0];
        let min = *eig.eigenvalues.last().expect("d >= 1");
        if min <= 1e-12 * max.max(1.0) {
            attempt_seed = attempt_seed.wrapping_add(1);
            continue;
        }
        let inv_sqrt_vals: Vec<f64> = eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
        let s_inv_sqrt = eig.reassemble(&inv_sqrt_vals);
        let effects: Vec<HermitianMatrix> = grams
            .iter()
            .map(|g| {
                let mat = s_inv_sqrt.matrix() * g * s_inv_sqrt.matrix();
                HermitianMatrix::hermitian_part(&mat).expect("square")
            })
            .collect();
        return Povm::sanitized(effects, 1e-10);
    }
    Err(Error::Degenerate(
        "could not draw a nonsingular Gram sum in 8 attempts".into(),
    ))
}

/// Random ensemble of m normalized Wishart states with uniform or flat
/// Dirichlet priors.
pub fn random_ensemble(d: usize, m: usize, seed: u64, dirichlet_priors: bool) -> Result<Ensemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(m);
    for _ in 0..m {
        let g = random_complex_gaussian(&mut rng, d, d);
        let w = &g * g.adjoint();
        let w_herm = HermitianMatrix::hermitian_part(&w)?;
        let tr = w_herm.trace();
        states.push(w_herm.scale(1.0 / tr));
    }
    let priors: Vec<f64> = if dirichlet_priors {
        // Flat Dirichlet via normalized standard exponentials.
        let draws: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = draws.iter().sum();
        draws.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / m as f64; m]
    };
    let weighted: Vec<(f64, HermitianMatrix)> = priors.into_iter().zip(states).collect();
    Ensemble::from_weighted(&weighted)
}
