use gue::sim::{sample_family, Family, FamilyConfig};
use gue::{
    calibrate_omega, central_condition_diagnostic, CalibrationConfig, CheckLoss, Coefficients,
    NullSpec,
};
use proptest::prelude::*;
use rand::Rng;

fn uniform_sampler(rng: &mut rand_chacha::ChaCha8Rng) -> gue::Result<(Vec<f64>, f64)> {
    Ok((vec![1.0, rng.gen::<f64>()], rng.gen::<f64>()))
}

#[test]
fn central_condition_holds_for_small_omega() {
    let loss = CheckLoss::new(0.5).unwrap();
    let star = Coefficients::new(vec![0.5, 0.0]);
    for alt in [[0.6, 0.0], [0.4, 0.2], [0.5, -0.3], [0.9, 0.5]] {
        let est = central_condition_diagnostic(
            &loss,
            uniform_sampler,
            &star,
            &Coefficients::new(alt.to_vec()),
            2.0,
            100_000,
            11,
        )
        .unwrap();
        assert!(
            est.mean <= 1.0 + 3.0 * est.std_error,
            "alt {alt:?}: {} ± {}",
            est.mean,
            est.std_error
        );
    }
}

#[test]
fn central_condition_fails_for_large_omega() {
    let loss = CheckLoss::new(0.5).unwrap();
    let est = central_condition_diagnostic(
        &loss,
        uniform_sampler,
        &Coefficients::new(vec![0.5, 0.0]),
        &Coefficients::new(vec![0.6, 0.0]),
        50.0,
        100_000,
        12,
    )
    .unwrap();
    assert!(est.mean > 1.0 + 3.0 * est.std_error, "{}", est.mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn calibrated_omega_covers_under_null(seed in any::<u64>(), tau_idx in 0usize..3) {
        let tau = [0.1, 0.5, 0.9][tau_idx];
        let data = sample_family(&FamilyConfig::new(Family::Triangle, 0.0).unwrap(), 40, seed).unwrap();
        let loss = CheckLoss::new(tau).unwrap();
        let null = NullSpec::zeroed(&[1]).unwrap();
        let config = CalibrationConfig::new(0.1, seed ^ 1);
        let rate = calibrate_omega(&loss, &data, &null, &config).unwrap();
        prop_assert!(rate.omega > 0.0 && rate.omega <= config.omega_cap);
        if !rate.under_covered {
            prop_assert!(rate.achieved_coverage >= 0.9);
        }
        let again = calibrate_omega(&loss, &data, &null, &config).unwrap();
        prop_assert_eq!(rate, again);
    }
}
