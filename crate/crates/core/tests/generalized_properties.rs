//! Cross-module checks of the generalized prepare-and-measure machinery.

mod common;

use approx::assert_abs_diff_eq;
use common::random_simulable_povm;
use simulability::advantage::pre_measurement_info_game;
use simulability::catalog::{random_ensemble, trine};
use simulability::discrimination::optimal_guess_states;
use simulability::generalized::{generalized_advantage, score, ScoreCoefficients};
use simulability::quantum::{Ensemble, HermitianMatrix, MeasurementAssemblage, Povm};
use simulability::relabeling::RelabelingScheme;
use simulability::robustness::robustness;

fn single_setting(povm: Povm) -> MeasurementAssemblage {
    MeasurementAssemblage::new(vec![povm]).unwrap()
}

/// Builds the pre-measurement-information instance of the generalized game
/// for (ensemble, n): preparations indexed by (combination, sub-label) with
/// the combination masses as priors, and a per-combination assemblage.
fn info_game_pieces(
    e: &Ensemble,
    n: usize,
) -> (
    ScoreCoefficients,
    Vec<(f64, HermitianMatrix)>,
    MeasurementAssemblage,
) {
    let m = e.len();
    let scheme = RelabelingScheme::enumerate(m, n).unwrap();
    let coeffs = ScoreCoefficients::pre_measurement_info_form(scheme.count(), n);

    let normalizer = num_integer::binomial(m as u64 - 1, n as u64 - 1) as f64;
    let mut preparations = Vec::new();
    let mut settings = Vec::new();
    for combo in scheme.combinations() {
        let sub = e.sub_states(combo);
        let (_, best_povm) = optimal_guess_states(&sub, n).unwrap();
        settings.push(best_povm);
        for state in sub {
            // p(x) rho_x = subnormalized state scaled by the distribution
            // over combinations.
            let mass = state.trace();
            if mass > 1e-14 {
                preparations.push((mass / normalizer, state.scale(1.0 / mass)));
            } else {
                preparations.push((
                    0.0,
                    HermitianMatrix::identity(e.dim()).scale(1.0 / e.dim() as f64),
                ));
            }
        }
    }
    (
        coeffs,
        preparations,
        MeasurementAssemblage::new(settings).unwrap(),
    )
}

#[test]
fn info_game_specialization_matches_the_direct_computation() {
    for seed in 0..4 {
        let e = random_ensemble(2, 3, 50 + seed, false).unwrap();
        for n in 1..=3 {
            let direct = pre_measurement_info_game(&e, n).unwrap();
            let (coeffs, preps, assemblage) = info_game_pieces(&e, n);
            let via_score = score(&coeffs, &preps, &assemblage).unwrap();
            assert_abs_diff_eq!(direct, via_score, epsilon = 1e-6);
        }
    }
}

#[test]
fn trine_separates_from_sampled_simulable_assemblages() {
    let coeffs = ScoreCoefficients::discrimination_form(3);
    let target = single_setting(trine());
    let samples: Vec<MeasurementAssemblage> = (0..6)
        .map(|seed| single_setting(random_simulable_povm(2, 3, 2, 40 + seed)))
        .collect();
    let report = generalized_advantage(&coeffs, &target, &samples).unwrap();
    assert!(
        report.ratio > 1.0 + 1e-4,
        "trine should separate, got ratio {}",
        report.ratio
    );
    assert!(report.f_bijective);

    // Consistency with the robustness module: on the robustness dual's own
    // ensemble, the simulable samples can never push the ratio below the
    // SDP value, and the sampled denominator can only undershoot the true
    // free optimum.
    let r = robustness(&trine(), 2).unwrap();
    let dual_ensemble = r.extracted_ensemble.unwrap();
    let preps = dual_ensemble.to_preparations();
    let numerator = score(&coeffs, &preps, &target).unwrap();
    let best_sample = samples
        .iter()
        .map(|s| score(&coeffs, &preps, s).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        numerator / best_sample >= 1.0 + r.robustness - 1e-6,
        "sampled ratio {} below 1 + R = {}",
        numerator / best_sample,
        1.0 + r.robustness
    );
}

#[test]
fn members_of_the_sampled_set_do_not_separate() {
    let coeffs = ScoreCoefficients::discrimination_form(3);
    let inside = random_simulable_povm(2, 3, 2, 99);
    let mut samples: Vec<MeasurementAssemblage> = (0..4)
        .map(|seed| single_setting(random_simulable_povm(2, 3, 2, 60 + seed)))
        .collect();
    samples.push(single_setting(inside.clone()));
    let report = generalized_advantage(&coeffs, &single_setting(inside), &samples).unwrap();
    assert!(
        report.ratio <= 1.0 + 1e-6,
        "member of the sample set separated with ratio {}",
        report.ratio
    );
}

#[test]
fn uncapped_samples_are_flagged_as_degenerate() {
    // Rank-deficient samples leave witness directions completely uncharged:
    // the projective pair never fires on the off-basis components that the
    // uniform coin does, so the separation objective is unbounded and must
    // be reported, not silently truncated.
    use simulability::catalog::projective_basis;
    use simulability::error::Error;

    let coeffs = ScoreCoefficients::discrimination_form(2);
    let coin = Povm::new(vec![
        HermitianMatrix::identity(2).scale(0.5),
        HermitianMatrix::identity(2).scale(0.5),
    ])
    .unwrap();
    let samples = vec![single_setting(projective_basis(2))];
    let err = generalized_advantage(&coeffs, &single_setting(coin), &samples).unwrap_err();
    assert!(matches!(err, Error::Degenerate(_)), "got {err}");
}
