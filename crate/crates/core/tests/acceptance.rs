//! Acceptance gate: one test per release criterion, each printing a
//! PASS line when it holds. Run with `cargo test --test acceptance`
//! (add `-- --nocapture` to see the lines for passing criteria).

mod common;

use std::time::Instant;

use approx::assert_abs_diff_eq;
use common::{helstrom_value, random_simulable_povm};
use simulability::advantage::{saturating_instance, seesaw, SeesawOptions};
use simulability::catalog::{
    projective_basis, random_ensemble, random_povm, trine, uniform_orthogonal_ensemble,
};
use simulability::discrimination::{
    advantage, certify_outcomes, guess_probability, optimal_free_guess, optimal_guess,
};
use simulability::generalized::{apply_f, score, ScoreCoefficients};
use simulability::quantum::{HermitianMatrix, MeasurementAssemblage, Povm};
use simulability::robustness::robustness;

fn pass(number: usize, name: &str) {
    println!("criterion {number:02} ({name}): PASS");
}

#[test]
fn criterion_01_free_set_zero() {
    let start = Instant::now();
    let grid = [(2usize, 3usize), (2, 4), (3, 3), (3, 4)];
    for seed in 0..50u64 {
        let (d, m) = grid[(seed % 4) as usize];
        let povm = random_simulable_povm(d, m, 2, seed);
        let r = robustness(&povm, 2).unwrap();
        assert!(
            r.robustness <= 1e-7,
            "seed {seed} (d={d}, m={m}): robustness {} above 1e-7",
            r.robustness
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "free-set batch took {elapsed:?}, budget is 60 s"
    );
    pass(1, "free-set zero");
}

#[test]
fn criterion_02_strong_duality() {
    let mut instances: Vec<(String, Povm, usize)> = vec![
        ("trine/n=2".into(), trine(), 2),
        ("qutrit basis/n=2".into(), projective_basis(3), 2),
        ("qubit basis/n=1".into(), projective_basis(2), 1),
    ];
    for seed in 0..12u64 {
        let m = 3 + (seed % 2) as usize;
        instances.push((
            format!("random d=2 m={m} seed={seed}"),
            random_povm(2, m, 90_000 + seed).unwrap(),
            2,
        ));
    }
    for seed in 0..8u64 {
        let d = 2 + (seed % 2) as usize;
        instances.push((
            format!("simulable d={d} seed={seed}"),
            random_simulable_povm(d, 3, 2, 91_000 + seed),
            2,
        ));
    }
    for (label, povm, n) in &instances {
        let r = robustness(povm, *n).unwrap();
        assert!(
            r.gap <= 1e-6,
            "{label}: primal/dual gap {} above 1e-6",
            r.gap
        );
    }
    pass(2, "strong duality");
}

#[test]
fn criterion_03_bound_saturation() {
    for (d, m, want) in [(3usize, 3usize, 1.5f64), (4, 4, 2.0)] {
        let start = Instant::now();
        let inst = saturating_instance(d, m, 2).unwrap();
        let report = advantage(&inst.ensemble, &inst.measurement, 2).unwrap();
        assert_abs_diff_eq!(report.advantage_ratio, want, epsilon = 1e-6);
        let elapsed = start.elapsed();
        assert!(
            elapsed.as_secs_f64() < 10.0,
            "saturation d={d} took {elapsed:?}, budget is 10 s"
        );
    }
    pass(3, "m/n bound saturation at d >= m");
}

#[test]
fn criterion_04_advantage_upper_bound() {
    for seed in 0..100u64 {
        let m = if seed < 50 { 3 } else { 4 };
        let povm = random_povm(2, m, 10_000 + seed).unwrap();
        let r = robustness(&povm, 2).unwrap();
        let bound = m as f64 / 2.0;
        assert!(
            r.primal_value <= bound + 1e-6,
            "seed {seed} (m={m}): 1 + R = {} above {bound}",
            r.primal_value
        );
    }
    pass(4, "m/n advantage bound");
}

#[test]
fn criterion_05_witness_equality_for_trine() {
    let m = trine();
    let r = robustness(&m, 2).unwrap();
    let ensemble = r.extracted_ensemble.as_ref().expect("witness ensemble");
    let report = advantage(ensemble, &m, 2).unwrap();
    assert_abs_diff_eq!(report.advantage_ratio, 1.0 + r.robustness, epsilon = 1e-6);
    pass(5, "witness equality");
}

#[test]
fn criterion_06_helstrom_oracle() {
    for seed in 0..100u64 {
        let e = random_ensemble(2, 2, 20_000 + seed, seed % 3 == 0).unwrap();
        let (value, _) = optimal_guess(&e, 2).unwrap();
        let oracle = helstrom_value(e.state(0), e.state(1));
        assert!(
            (value - oracle).abs() <= 1e-8,
            "seed {seed}: SDP {value} vs closed form {oracle}"
        );
    }
    pass(6, "Helstrom oracle");
}

#[test]
fn criterion_07_d_squared_collapse() {
    for seed in 0..20u64 {
        let povm = random_povm(2, 5, 30_000 + seed).unwrap();
        let r = robustness(&povm, 4).unwrap();
        assert!(
            r.robustness <= 1e-7,
            "seed {seed}: qubit m=5 robustness(n=4) = {} above 1e-7",
            r.robustness
        );
    }
    pass(7, "d^2 collapse");
}

#[test]
fn criterion_08_monotonicity_suite() {
    // Robustness nonincreasing in n, 50 seeded POVMs.
    for seed in 0..50u64 {
        let m = 3 + (seed % 2) as usize;
        let povm = random_povm(2, m, 40_000 + seed).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=m {
            let r = robustness(&povm, n).unwrap().robustness;
            assert!(
                r <= prev + 1e-7,
                "seed {seed}: robustness rose from {prev} to {r} at n={n}"
            );
            prev = r;
        }
    }

    // Simulable-set optimum nondecreasing in n, 50 seeded ensembles.
    for seed in 0..50u64 {
        let m = 3 + (seed % 2) as usize;
        let e = random_ensemble(2, m, 41_000 + seed, seed % 2 == 0).unwrap();
        let mut prev = 0.0;
        for n in 1..=m {
            let v = optimal_free_guess(&e, n).unwrap().value;
            assert!(
                v >= prev - 1e-7,
                "seed {seed}: free optimum fell from {prev} to {v} at n={n}"
            );
            prev = v;
        }
    }

    // See-saw ratio nondecreasing along each trace, 50 seeded runs.
    for seed in 0..50u64 {
        let trace = seesaw(
            2,
            3,
            2,
            &SeesawOptions {
                restarts: 1,
                max_iter: 10,
                tol: 1e-7,
                seed: 42_000 + seed,
            },
        )
        .unwrap();
        for pair in trace.iterations.windows(2) {
            assert!(
                pair[1].ratio >= pair[0].ratio - 1e-9,
                "seed {seed}: ratio fell from {} to {}",
                pair[0].ratio,
                pair[1].ratio
            );
        }
    }
    pass(8, "monotonicity suite");
}

#[test]
fn criterion_09_score_consistency() {
    // S computed from probabilities equals sum_x p(x) tr(rho_x N_x) through
    // the induced map, on 100 seeded coefficient/assemblage pairs.
    for seed in 0..100u64 {
        let x_count = 2 + (seed % 3) as usize;
        let y_count = 1 + (seed % 2) as usize;
        let b_count = 2 + (seed % 2) as usize;
        let coeffs_vals: Vec<f64> = (0..x_count * y_count * b_count)
            .map(|i| ((seed as f64 + 1.3) * (i as f64 + 0.7)).sin())
            .collect();
        let coeffs = ScoreCoefficients::new(x_count, y_count, b_count, coeffs_vals).unwrap();
        let settings: Vec<Povm> = (0..y_count)
            .map(|y| random_povm(2, b_count, 50_000 + 10 * seed + y as u64).unwrap())
            .collect();
        let assemblage = MeasurementAssemblage::new(settings).unwrap();
        let e = random_ensemble(2, x_count, 51_000 + seed, seed % 2 == 1).unwrap();
        let preps: Vec<(f64, HermitianMatrix)> = e.to_preparations();

        let s = score(&coeffs, &preps, &assemblage).unwrap();
        let images = apply_f(&coeffs, &assemblage).unwrap();
        let via_images: f64 = preps
            .iter()
            .zip(&images)
            .map(|((p, rho), n)| p * rho.inner(n))
            .sum();
        assert!(
            (s - via_images).abs() <= 1e-10,
            "seed {seed}: score {s} vs image form {via_images}"
        );
    }

    // The discrimination-specialized coefficients reproduce the plain
    // guessing probability exactly.
    for seed in 0..20u64 {
        let e = random_ensemble(2, 3, 52_000 + seed, false).unwrap();
        let m = random_povm(2, 3, 53_000 + seed).unwrap();
        let coeffs = ScoreCoefficients::discrimination_form(3);
        let s = score(
            &coeffs,
            &e.to_preparations(),
            &MeasurementAssemblage::new(vec![m.clone()]).unwrap(),
        )
        .unwrap();
        let direct = guess_probability(&e, &m).unwrap();
        assert!(
            (s - direct).abs() <= 1e-12,
            "seed {seed}: specialized score {s} vs direct {direct}"
        );
    }
    pass(9, "score consistency");
}

#[test]
fn criterion_10_certification() {
    let e = uniform_orthogonal_ensemble(3, 3).unwrap();

    // Thresholds confirmed from the simulable-set optimum itself.
    let report = certify_outcomes(&e, 0.70, 0.0).unwrap();
    assert_abs_diff_eq!(report.thresholds[0], 1.0 / 3.0, epsilon = 1e-7);
    assert_abs_diff_eq!(report.thresholds[1], 2.0 / 3.0, epsilon = 1e-7);
    assert_eq!(report.certified_min_outcomes, 3);

    let report = certify_outcomes(&e, 0.60, 0.0).unwrap();
    assert_eq!(report.certified_min_outcomes, 2);
    pass(10, "certification");
}
