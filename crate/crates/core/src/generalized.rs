//! Linear prepare-and-measure scores beyond plain state discrimination.
//!
//! A score S = sum_{x,y,b} c_{x,y,b} p(x) p(b|x,y) pairs preparations with a
//! measurement assemblage through real coefficients. The coefficients induce
//! a linear map f taking the assemblage {M_{b|y}} to the operator family
//! {N_x}, with S = sum_x p(x) tr(rho_x N_x); separating a resourceful family
//! from a convex free set by a witness, then shifting the witness into the
//! PSD cone, turns the separation into a preparation ensemble whose score
//! gap certifies the resource.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{Ensemble, HermitianMatrix, MeasurementAssemblage};
use crate::sdp::{MatExpr, SdpProblem, Sense, SolveStatus, VarDomain};

/// Real score coefficients `c[x][y][b]` of a linear prepare-and-measure game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScoreCoefficientsDto", into = "ScoreCoefficientsDto")]
pub struct ScoreCoefficients {
    x_count: usize,
    y_count: usize,
    b_count: usize,
    /// Flattened as c[(x * y_count + y) * b_count + b].
    c: Vec<f64>,
}

impl ScoreCoefficients {
    pub fn new(x_count: usize, y_count: usize, b_count: usize, c: Vec<f64>) -> Result<Self> {
        if x_count == 0 || y_count == 0 || b_count == 0 {
            return Err(Error::Domain(
                "coefficient index ranges must be nonzero".into(),
            ));
        }
        if c.len() != x_count * y_count * b_count {
            return Err(Error::Mismatch(format!(
                "expected {} coefficients, got {}",
                x_count * y_count * b_count,
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite coefficient".into()));
        }
        Ok(Self {
            x_count,
            y_count,
            b_count,
            c,
        })
    }

    /// The plain discrimination game: one setting, X = B, c = delta_{x,b}.
    pub fn discrimination_form(m: usize) -> Self {
        let mut c = vec![0.0; m * m];
        for x in 0..m {
            c[x * m + x] = 1.0;
        }
        Self {
            x_count: m,
            y_count: 1,
            b_count: m,
            c,
        }
    }

    /// Discrimination with a prior announcement of the measurement setting:
    /// preparations are indexed by pairs x = (w, a) with w the announced
    /// setting and a the target outcome, packed as x = w * b_count + a, and
    /// c = delta_{b,a} delta_{w,y}.
    pub fn pre_measurement_info_form(settings: usize, outcomes: usize) -> Self {
        let x_count = settings * outcomes;
        let mut coeffs = Self {
            x_count,
            y_count: settings,
            b_count: outcomes,
            c: vec![0.0; x_count * settings * outcomes],
        };
        for w in 0..settings {
            for a in 0..outcomes {
                let x = w * outcomes + a;
                let idx = coeffs.index(x, w, a);
                coeffs.c[idx] = 1.0;
            }
        }
        coeffs
    }

    fn index(&self, x: usize, y: usize, b: usize) -> usize {
        (x * self.y_count + y) * self.b_count + b
    }

    pub fn get(&self, x: usize, y: usize, b: usize) -> f64 {
        self.c[self.index(x, y, b)]
    }

    pub fn x_count(&self) -> usize {
        self.x_count
    }

    pub fn y_count(&self) -> usize {
        self.y_count
    }

    pub fn b_count(&self) -> usize {
        self.b_count
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            x_count: self.x_count,
            y_count: self.y_count,
            b_count: self.b_count,
            c: self.c.iter().map(|v| v * factor).collect(),
        }
    }

    /// True when the induced map f is a bijection of operator families:
    /// the coefficient matrix (X rows, Y*B columns) must be square and
    /// numerically full rank. f acts blockwise as this matrix tensored with
    /// the identity on Hermitian space, so matrix rank decides.
    pub fn is_bijective(&self) -> bool {
        if self.x_count != self.y_count * self.b_count {
            return false;
        }
        let mat = DMatrix::<f64>::from_fn(self.x_count, self.y_count * self.b_count, |x, col| {
            self.c[x * self.y_count * self.b_count + col]
        });
        let svd = mat.svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        if smax == 0.0 {
            return false;
        }
        let smin = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        smin > 1e-9 * smax
    }

    fn check_assemblage(&self, assemblage: &MeasurementAssemblage) -> Result<()> {
        if assemblage.num_settings() != self.y_count {
            return Err(Error::Mismatch(format!(
                "coefficients expect {} settings, assemblage has {}",
                self.y_count,
                assemblage.num_settings()
            )));
        }
        let b = assemblage.uniform_outcomes()?;
        if b != self.b_count {
            return Err(Error::Mismatch(format!(
                "coefficients expect {} outcomes, assemblage has {b}",
                self.b_count
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ScoreCoefficientsDto {
    #[serde(rename = "X")]
    x: usize,
    #[serde(rename = "Y")]
    y: usize,
    #[serde(rename = "B")]
    b: usize,
    c: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<ScoreCoefficientsDto> for ScoreCoefficients {
    type Error = Error;

    fn try_from(dto: ScoreCoefficientsDto) -> Result<Self> {
        let mut flat = Vec::with_capacity(dto.x * dto.y * dto.b);
        if dto.c.len() != dto.x {
            return Err(Error::Mismatch("coefficient X extent mismatch".into()));
        }
        for per_x in &dto.c {
            if per_x.len() != dto.y {
                return Err(Error::Mismatch("coefficient Y extent mismatch".into()));
            }
            for per_y in per_x {
                if per_y.len() != dto.b {
                    return Err(Error::Mismatch("coefficient B extent mismatch".into()));
                }
                flat.extend_from_slice(per_y);
            }
        }
        ScoreCoefficients::new(dto.x, dto.y, dto.b, flat)
    }
}

impl From<ScoreCoefficients> for ScoreCoefficientsDto {
    fn from(s: ScoreCoefficients) -> Self {
        let c = (0..s.x_count)
            .map(|x| {
                (0..s.y_count)
                    .map(|y| (0..s.b_count).map(|b| s.get(x, y, b)).collect())
                    .collect()
            })
            .collect();
        ScoreCoefficientsDto {
            x: s.x_count,
            y: s.y_count,
            b: s.b_count,
            c,
        }
    }
}

/// Evaluates S = sum_{x,y,b} c_{x,y,b} p(x) tr(rho_x M_{b|y}).
pub fn score(
    coeffs: &ScoreCoefficients,
    preparations: &[(f64, HermitianMatrix)],
    assemblage: &MeasurementAssemblage,
) -> Result<f64> {
    coeffs.check_assemblage(assemblage)?;
    if preparations.len() != coeffs.x_count {
        return Err(Error::Mismatch(format!(
            "coefficients expect {} preparations, got {}",
            coeffs.x_count,
            preparations.len()
        )));
    }
    let mut total = 0.0;
    for (x, (p, rho)) in preparations.iter().enumerate() {
        if rho.dim() != assemblage.dim() {
            return Err(Error::Mismatch(format!(
                "preparation {x} has dim {} but assemblage has dim {}",
                rho.dim(),
                assemblage.dim()
            )));
        }
        for (y, povm) in assemblage.settings().iter().enumerate() {
            for (b, effect) in povm.effects().iter().enumerate() {
                let c = coeffs.get(x, y, b);
                if c != 0.0 {
                    total += c * p * rho.inner(effect);
                }
            }
        }
    }
    Ok(total)
}

/// The induced linear map f: N_x = sum_{y,b} c_{x,y,b} M_{b|y}. Consistency
/// with [`score`]: S = sum_x p(x) tr(rho_x N_x).
pub fn apply_f(
    coeffs: &ScoreCoefficients,
    assemblage: &MeasurementAssemblage,
) -> Result<Vec<HermitianMatrix>> {
    coeffs.check_assemblage(assemblage)?;
    let d = assemblage.dim();
    let mut images = Vec::with_capacity(coeffs.x_count);
    for x in 0..coeffs.x_count {
        let mut acc = HermitianMatrix::zeros(d);
        for (y, povm) in assemblage.settings().iter().enumerate() {
            for (b, effect) in povm.effects().iter().enumerate() {
                let c = coeffs.get(x, y, b);
                if c != 0.0 {
                    acc = acc.add(&effect.scale(c));
                }
            }
        }
        images.push(acc);
    }
    Ok(images)
}

/// A witness family together with its PSD-shifted version.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessFamily {
    pub raw: Vec<HermitianMatrix>,
    pub shifted: Vec<HermitianMatrix>,
    /// The common shift |lambda|, zero when the family is already PSD.
    pub shift: f64,
}

/// Shifts a Hermitian witness family into the PSD cone by the absolute
/// value of its globally smallest eigenvalue and normalizes it into a
/// preparation ensemble p(x) rho_x = W~_x / sum tr(W~_x).
///
/// The shift adds shift * sum_x tr(N_x) to every pairing, so strict score
/// orderings between operator families of equal total trace survive it.
pub fn witness_to_ensemble(witness: &[HermitianMatrix]) -> Result<(Ensemble, WitnessFamily)> {
    if witness.is_empty() {
        return Err(Error::Invalid("empty witness family".into()));
    }
    let d = witness[0].dim();
    for (x, w) in witness.iter().enumerate() {
        if w.dim() != d {
            return Err(Error::Mismatch(format!(
                "witness {x} has dim {} but witness 0 has dim {d}",
                w.dim()
            )));
        }
    }
    let min_eig = witness
        .iter()
        .map(|w| w.min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let shift = (-min_eig).max(0.0);
    let shifted: Vec<HermitianMatrix> = witness
        .iter()
        .map(|w| w.add_scaled_identity(shift))
        .collect();
    let total: f64 = shifted.iter().map(|w| w.trace()).sum();
    if total <= 1e-12 {
        return Err(Error::Degenerate(
            "shifted witness family has no trace mass (all-zero witness?)".into(),
        ));
    }
    let states: Vec<HermitianMatrix> = shifted
        .iter()
        .map(|w| w.scale(1.0 / total).sanitized_psd(1e-9))
        .collect::<Result<Vec<_>>>()?;
    let ensemble = Ensemble::new(states)?;
    Ok((
        ensemble,
        WitnessFamily {
            raw: witness.to_vec(),
            shifted,
            shift,
        },
    ))
}

/// Outcome of a sampled-free-set separation.
#[derive(Debug, Clone, Serialize)]
pub struct GeneralizedAdvantageReport {
    /// Best score of the assemblage divided by the best sampled free score,
    /// both on the witnessing ensemble.
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub per_sample_scores: Vec<f64>,
    /// The witnessing preparation ensemble.
    pub ensemble: Ensemble,
    /// Whether the coefficient map f is a bijection (a hypothesis of the
    /// separation argument; violation degrades it to a one-sided check).
    pub f_bijective: bool,
}

/// Searches for a preparation ensemble on which `assemblage` outscores every
/// member of `free_samples`, by maximizing the score of the image family
/// f(assemblage) over PSD witness families normalized against the samples.
///
/// Membership in the exact free set is out of reach here; the separation is
/// certified only against the explicitly provided samples. A ratio above 1
/// still lower-bounds the advantage over their convex hull.
pub fn generalized_advantage(
    coeffs: &ScoreCoefficients,
    assemblage: &MeasurementAssemblage,
    free_samples: &[MeasurementAssemblage],
) -> Result<GeneralizedAdvantageReport> {
    if free_samples.is_empty() {
        return Err(Error::Domain("need at least one free sample".into()));
    }
    let f_bijective = coeffs.is_bijective();
    if !f_bijective {
        log::warn!(
            "coefficient map is not a bijection ({}x{} with X = {}); separation is one-sided",
            coeffs.y_count,
            coeffs.b_count,
            coeffs.x_count
        );
    }

    let target = apply_f(coeffs, assemblage)?;
    let sample_images: Vec<Vec<HermitianMatrix>> = free_samples
        .iter()
        .map(|s| apply_f(coeffs, s))
        .collect::<Result<Vec<_>>>()?;

    let d = assemblage.dim();
    let mut problem = SdpProblem::new(Sense::Maximize);
    let w_vars: Vec<_> = (0..coeffs.x_count)
        .map(|x| problem.add_var(format!("W[{x}]"), d, VarDomain::PsdCone))
        .collect();
    for (x, &v) in w_vars.iter().enumerate() {
        problem.add_objective_term(v, target[x].clone())?;
    }
    for images in &sample_images {
        // 1 - sum_x tr(W_x N'_x) >= 0
        let mut expr = MatExpr::from_constant(&HermitianMatrix::identity(1));
        for (x, &v) in w_vars.iter().enumerate() {
            expr = expr.plus_inner_identity(v, -1.0, &images[x]);
        }
        problem.add_psd_constraint(expr)?;
    }
    let solution = problem.solve()?;
    match solution.status {
        SolveStatus::Optimal => {}
        SolveStatus::Unbounded => {
            return Err(Error::Degenerate(
                "separation is unbounded against the given samples; they do not cap any direction"
                    .into(),
            ));
        }
        other => {
            return Err(Error::Solver(format!(
                "witness search ended with status {other:?}"
            )));
        }
    }

    let (ensemble, _family) = witness_to_ensemble(&solution.variables)?;
    let preparations = ensemble.to_preparations();
    let numerator = score(coeffs, &preparations, assemblage)?;
    let per_sample_scores: Vec<f64> = free_samples
        .iter()
        .map(|s| score(coeffs, &preparations, s))
        .collect::<Result<Vec<_>>>()?;
    let denominator = per_sample_scores
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if denominator <= 0.0 {
        return Err(Error::Degenerate(format!(
            "best sampled free score {denominator} is not positive"
        )));
    }
    Ok(GeneralizedAdvantageReport {
        ratio: numerator / denominator,
        numerator,
        denominator,
        per_sample_scores,
        ensemble,
        f_bijective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{basis_projector, random_ensemble, random_povm};
    use crate::quantum::Povm;
    use approx::assert_abs_diff_eq;

    fn single_setting(povm: Povm) -> MeasurementAssemblage {
        MeasurementAssemblage::new(vec![povm]).unwrap()
    }

    #[test]
    fn discrimination_specialization_matches_guess_probability() {
        for seed in 0..5 {
            let e = random_ensemble(2, 3, 300 + seed, false).unwrap();
            let m = random_povm(2, 3, 400 + seed).unwrap();
            let coeffs = ScoreCoefficients::discrimination_form(3);
            let preps = e.to_preparations();
            let s = score(&coeffs, &preps, &single_setting(m.clone())).unwrap();
            let direct = crate::discrimination::guess_probability(&e, &m).unwrap();
            assert_abs_diff_eq!(s, direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn all_zero_coefficients_score_zero() {
        let coeffs = ScoreCoefficients::new(3, 1, 3, vec![0.0; 9]).unwrap();
        let e = random_ensemble(2, 3, 1, false).unwrap();
        let m = random_povm(2, 3, 2).unwrap();
        let s = score(&coeffs, &e.to_preparations(), &single_setting(m)).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn apply_f_identity_form_returns_the_effects() {
        let m = random_povm(2, 3, 9).unwrap();
        let coeffs = ScoreCoefficients::discrimination_form(3);
        let images = apply_f(&coeffs, &single_setting(m.clone())).unwrap();
        for (b, image) in images.iter().enumerate() {
            assert!(image.max_abs_diff(m.effect(b)) <= 1e-15);
        }
    }

    #[test]
    fn apply_f_is_linear() {
        let coeffs = ScoreCoefficients::discrimination_form(3).scale(2.0);
        let m = random_povm(2, 3, 10).unwrap();
        let images = apply_f(&coeffs, &single_setting(m.clone())).unwrap();
        for (b, image) in images.iter().enumerate() {
            assert!(image.max_abs_diff(&m.effect(b).scale(2.0)) <= 1e-15);
        }

        // Mixtures of assemblages map to mixtures of images.
        let m1 = random_povm(2, 3, 11).unwrap();
        let m2 = random_povm(2, 3, 12).unwrap();
        let coeffs = ScoreCoefficients::discrimination_form(3);
        let lambda = 0.25;
        let mixed_effects: Vec<HermitianMatrix> = m1
            .effects()
            .iter()
            .zip(m2.effects())
            .map(|(a, b)| a.scale(lambda).add(&b.scale(1.0 - lambda)))
            .collect();
        let mixed = Povm::new(mixed_effects).unwrap();
        let img_mixed = apply_f(&coeffs, &single_setting(mixed)).unwrap();
        let img1 = apply_f(&coeffs, &single_setting(m1)).unwrap();
        let img2 = apply_f(&coeffs, &single_setting(m2)).unwrap();
        for x in 0..3 {
            let expect = img1[x].scale(lambda).add(&img2[x].scale(1.0 - lambda));
            assert!(img_mixed[x].max_abs_diff(&expect) <= 1e-12);
        }
    }

    #[test]
    fn score_consistency_with_apply_f() {
        for seed in 0..10 {
            let e = random_ensemble(2, 4, 500 + seed, seed % 2 == 0).unwrap();
            let povms: Vec<Povm> = (0..2)
                .map(|y| random_povm(2, 3, 600 + 2 * seed + y).unwrap())
                .collect();
            let assemblage = MeasurementAssemblage::new(povms).unwrap();
            let mut rng_vals = Vec::new();
            for i in 0..(4 * 2 * 3) {
                // Deterministic pseudo-random coefficients in [-1, 1].
                let v = ((seed as f64 + 1.0) * (i as f64 + 0.7)).sin();
                rng_vals.push(v);
            }
            let coeffs = ScoreCoefficients::new(4, 2, 3, rng_vals).unwrap();
            let preps = e.to_preparations();
            let s = score(&coeffs, &preps, &assemblage).unwrap();
            let images = apply_f(&coeffs, &assemblage).unwrap();
            let via_images: f64 = preps
                .iter()
                .zip(&images)
                .map(|((p, rho), n)| p * rho.inner(n))
                .sum();
            assert_abs_diff_eq!(s, via_images, epsilon = 1e-10);
        }
    }

    #[test]
    fn witness_shift_cases() {
        // Already PSD: no shift.
        let w = vec![basis_projector(2, 0), basis_projector(2, 1)];
        let (_, family) = witness_to_ensemble(&w).unwrap();
        assert_eq!(family.shift, 0.0);

        // Two Pauli-Z witnesses: smallest eigenvalue -1, shift 1, states
        // proportional to Z + I = 2|0><0|.
        let z = HermitianMatrix::diagonal(&[1.0, -1.0]);
        let (ensemble, family) = witness_to_ensemble(&[z.clone(), z]).unwrap();
        assert_abs_diff_eq!(family.shift, 1.0, epsilon = 1e-12);
        let expect = basis_projector(2, 0).scale(0.5);
        for state in ensemble.states() {
            assert!(state.max_abs_diff(&expect) <= 1e-12);
        }

        // All-zero family: degenerate.
        assert!(witness_to_ensemble(&[HermitianMatrix::zeros(2)]).is_err());
    }

    #[test]
    fn witness_shift_preserves_strict_ordering_at_equal_trace() {
        let w = vec![
            HermitianMatrix::diagonal(&[0.4, -0.9]),
            HermitianMatrix::diagonal(&[-0.2, 0.3]),
        ];
        let (_, family) = witness_to_ensemble(&w).unwrap();
        // Competitor families with equal total trace.
        let n1 = vec![basis_projector(2, 0), basis_projector(2, 1)];
        let n2 = vec![
            HermitianMatrix::identity(2).scale(0.5),
            HermitianMatrix::identity(2).scale(0.5),
        ];
        let pair = |fam: &[HermitianMatrix], ops: &[HermitianMatrix]| -> f64 {
            fam.iter().zip(ops).map(|(a, b)| a.inner(b)).sum()
        };
        let raw_gap = pair(&family.raw, &n1) - pair(&family.raw, &n2);
        let shifted_gap = pair(&family.shifted, &n1) - pair(&family.shifted, &n2);
        assert_abs_diff_eq!(raw_gap, shifted_gap, epsilon = 1e-12);
        assert!(raw_gap != 0.0);
    }

    #[test]
    fn bijectivity_detection() {
        assert!(ScoreCoefficients::discrimination_form(3).is_bijective());
        // Zero map is not a bijection.
        assert!(!ScoreCoefficients::new(3, 1, 3, vec![0.0; 9])
            .unwrap()
            .is_bijective());
        // Rectangular map cannot be a bijection.
        assert!(!ScoreCoefficients::new(2, 1, 3, vec![1.0; 6])
            .unwrap()
            .is_bijective());
    }

    #[test]
    fn scaling_coefficients_leaves_the_ratio_unchanged() {
        let coeffs = ScoreCoefficients::discrimination_form(3);
        let target = single_setting(crate::catalog::trine());
        let samples: Vec<MeasurementAssemblage> = (0..4)
            .map(|s| single_setting(crate::catalog::random_povm(2, 3, 700 + s).unwrap()))
            .collect();
        let base = generalized_advantage(&coeffs, &target, &samples).unwrap();
        let scaled = generalized_advantage(&coeffs.scale(3.5), &target, &samples).unwrap();
        assert_abs_diff_eq!(base.ratio, scaled.ratio, epsilon = 1e-6);
    }
}
