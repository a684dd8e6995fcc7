use pcsi_core::auditor::{
    audit_correctness, audit_half_csi, audit_privacy_exact, audit_privacy_sampled, run_audit,
    AuditConfig, AuditError, CsiMode, MessageMode, Method, PrivacyReport, EXIT_PASS, EXIT_PRIVACY,
    REPORT_VERSION,
};
use pcsi_core::gf::{field_of_order, tower_new};
use pcsi_core::model::{Params, PrivacyMode};
use pcsi_core::rational::Rational;
use pcsi_core::schemes::{build_scheme, LeakyIaScheme, SchemeSpec};
use std::sync::Arc;

fn leaky(q: u32, k: usize, m: usize) -> LeakyIaScheme {
    LeakyIaScheme::new(Arc::new(tower_new(field_of_order(q).unwrap()).unwrap()), k, m).unwrap()
}

#[test]
fn negative_control_leaks_support() {
    let s = leaky(4, 4, 2);
    let PrivacyReport::Exact { max_tv, pass, .. } = audit_privacy_exact(&s, PrivacyMode::ThetaS, 1 << 20).unwrap() else {
        panic!()
    };
    assert!(!pass);
    assert!(max_tv > Rational::zero());
    let rep = audit_privacy_sampled(&s, PrivacyMode::ThetaS, 2000, 1, 0.01).unwrap();
    assert!(!rep.pass());
}

#[test]
fn alignment_leaks_once_coefficients_are_fixed() {
    let s = build_scheme(&SchemeSpec::new("ia_pcsi2", 4, 3, 2)).unwrap();
    let cfg = AuditConfig {
        privacy_mode: Some(PrivacyMode::ThetaSLambda),
        ..AuditConfig::default()
    };
    let rep = run_audit(s.as_ref(), &cfg).unwrap();
    assert!(rep.correctness.pass());
    assert_eq!(rep.exit_code, EXIT_PRIVACY);
}

#[test]
fn correctness_audit_counts_every_replay() {
    let s = build_scheme(&SchemeSpec::new("mk_pcsi2", 2, 3, 3)).unwrap();
    let c = audit_correctness(s.as_ref(), MessageMode::Exhaustive, CsiMode::Retained).unwrap();
    assert!(c.pass());
    assert_eq!(c.scenarios, 3);
    assert_eq!(c.trials, c.query_paths * 8);
}

#[test]
fn full_audit_reports_a_capacity_achieving_rate() {
    let s = build_scheme(&SchemeSpec::new("modgrs_pcsi2", 5, 4, 3)).unwrap();
    let rep = run_audit(s.as_ref(), &AuditConfig::default()).unwrap();
    assert_eq!(rep.report_version, REPORT_VERSION);
    assert_eq!(rep.exit_code, EXIT_PASS);
    assert_eq!(rep.rate, Rational::new(1, 2));
    let gap = rep.capacity.clone().unwrap();
    assert!(gap.entry("sup").unwrap().achieving);
    let json = serde_json::to_value(&rep).unwrap();
    assert_eq!(json["privacy"]["method"], "exact");
    assert_eq!(json["rate"], "1/2");
}

#[test]
fn audit_reports_are_deterministic() {
    let s = build_scheme(&SchemeSpec::new("halfdl_pcsi", 16, 4, 3)).unwrap();
    let cfg = AuditConfig {
        seed: 9,
        privacy: Method::Sampled,
        samples_per_cell: 500,
        correctness_samples: 50,
        ..AuditConfig::default()
    };
    let a = serde_json::to_string(&run_audit(s.as_ref(), &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_audit(s.as_ref(), &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exact_privacy_respects_the_budget() {
    let s = build_scheme(&SchemeSpec::new("ia_pcsi2", 16, 5, 2)).unwrap();
    match audit_privacy_exact(s.as_ref(), PrivacyMode::ThetaS, 10) {
        Err(AuditError::BudgetExceeded { budget, .. }) => assert_eq!(budget, 10),
        other => panic!("expected budget error, got {other:?}"),
    }
}

#[test]
fn half_side_information_suffices_and_less_does_not() {
    for k in 3..=5 {
        let rep = audit_half_csi(&Params::new(4, k, 2, 1).unwrap()).unwrap();
        assert!(rep.pass, "K={k}");
        assert!(rep.zeroed.failures > 0);
    }
}

#[test]
fn private_coefficient_scheme_hides_lambda() {
    let mut spec = SchemeSpec::new("generic_pcsi1", 3, 3, 1);
    spec.private_coeffs = true;
    let s = build_scheme(&spec).unwrap();
    let rep = audit_privacy_exact(s.as_ref(), PrivacyMode::ThetaSLambda, 1 << 20).unwrap();
    assert!(rep.pass());
    // the non-private variant picks its combination per coefficient vector
    let s = build_scheme(&SchemeSpec::new("generic_pcsi1", 3, 3, 1)).unwrap();
    assert!(audit_privacy_exact(s.as_ref(), PrivacyMode::ThetaS, 1 << 20).unwrap().pass());
    assert!(!audit_privacy_exact(s.as_ref(), PrivacyMode::ThetaSLambda, 1 << 20).unwrap().pass());
}
