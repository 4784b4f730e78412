//! Hand-computed reference values and desk-scale statistical checks.

use mpmsa::dynamics::localization_report;
use mpmsa::geometry::CubeSpec;
use mpmsa::model::{DisorderSpec, InteractionSpec, ModelSpec};
use mpmsa::msa::{
    gamma, is_localized_pi, noninteracting_ns_implication_check, resonance_threshold, singularity_threshold,
    ImplicationStatus, MsaParams,
};
use mpmsa::stats::wilson_interval;

fn strong() -> ModelSpec {
    ModelSpec::new(DisorderSpec::Uniform { low: 0.0, high: 20.0 }, InteractionSpec::bump(1, 0.0).unwrap())
}

#[test]
fn wilson_reference_values() {
    // z^2 / (n + z^2) at zero successes.
    let z2 = 1.959963984540054f64.powi(2);
    let (lo, hi) = wilson_interval(0, 200).unwrap();
    assert_eq!(lo, 0.0);
    assert!((hi - z2 / (200.0 + z2)).abs() < 1e-12);
    let (lo, hi) = wilson_interval(50, 100).unwrap();
    assert!((lo + hi - 1.0).abs() < 1e-12);
    assert!((hi - 0.5 - 0.0960).abs() < 5e-4);
}

#[test]
fn scale_dressing_reference_values() {
    // 16^{-1/8} = 1/sqrt(2).
    let g = gamma(0.5, 16, 1, 2);
    assert!((g - 0.5 * (1.0 + 0.5f64.sqrt()).powi(2)).abs() < 1e-12);
    assert!((resonance_threshold(16) - (-4.0f64).exp()).abs() < 1e-18);
    assert!((singularity_threshold(0.5, 16, 2, 2) - (-16.0 * gamma(0.5, 16, 2, 2)).exp()).abs() < 1e-18);
}

#[test]
fn noninteracting_implication_has_no_counterexamples() {
    let cube = CubeSpec::line(&[0, 40], 16).unwrap();
    let params = MsaParams::new(0.25, 8, 2, 2, 1.0);
    let mut confirmed = 0;
    for t in 0..500 {
        let ctx = strong().realize(&cube, 99, t).unwrap();
        let e = 1.0 + 0.01 * t as f64;
        let r = noninteracting_ns_implication_check(&ctx, e, &params).unwrap();
        assert_ne!(r.status, ImplicationStatus::Counterexample, "realization {t}");
        confirmed += (r.status == ImplicationStatus::Confirmed) as usize;
    }
    assert!(confirmed > 0);
}

#[test]
fn strong_disorder_eigenfunctions_decay() {
    let ctx = strong().realize(&CubeSpec::line(&[0], 64).unwrap(), 5, 0).unwrap();
    let r = localization_report(&ctx).unwrap();
    assert!(r.median_rate > 0.1);
    assert!(r.mean_boundary_mass < 1e-3);
}

/// The literal boundary-mass localization test needs `L` far beyond desk
/// scale before `e^{-gamma L}` drops under the mass left by eigenfunctions
/// centered near the shell; kept for the record, see the decisions ledger.
#[test]
#[ignore]
fn strong_disorder_factors_localized_at_l16() {
    let cube = CubeSpec::line(&[0, 40], 16).unwrap();
    let params = MsaParams::new(0.25, 8, 2, 2, 1.0);
    let localized = (0..200)
        .filter(|&t| is_localized_pi(&strong().realize(&cube, 3, t).unwrap(), &params).unwrap().localized)
        .count();
    assert!(localized >= 160, "{localized}/200 localized");
}
