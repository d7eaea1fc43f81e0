//! Forms beyond the exceptional range: the inequality holds, the main term of
//! Q_f dominates at every angle and every root lies on the circle.

use std::f64::consts::PI;

use periodpoly_core::bounds::{criterion, in_exceptional_set, minimal_level, Parity};
use periodpoly_core::construct::cm_form;
use periodpoly_core::lvalues::build_lambda_table;
use periodpoly_core::period::{
    build_period_polynomial, build_unit_circle_form, circle_report, qf_decomposition, qf_sample_angles,
    sign_certificate, CertificateStatus, DEFAULT_CIRCLE_TOLERANCE,
};

fn forms() -> Vec<(i64, u32)> {
    let mut out = Vec::new();
    for k in (11..=31).step_by(2) {
        out.push((-163, k));
    }
    for k in (13..=25).step_by(2) {
        out.push((-67, k));
    }
    for k in (15..=23).step_by(2) {
        out.push((-43, k));
    }
    out.push((-19, 21));
    out.push((-19, 25));
    out.push((-3, 61));
    out.push((-4, 61));
    out
}

#[test]
fn criterion_implies_dominant_main_term() {
    let forms = forms();
    assert!(forms.len() >= 20);
    for (disc, k) in forms {
        let d = cm_form(disc, k, 400).unwrap();
        let level = d.level();
        let (parity, m) = Parity::split_weight(k).unwrap();
        assert!(level >= minimal_level(m, parity).unwrap(), "{}", d.label());
        assert!(criterion(parity, m, level).unwrap().holds);
        assert!(!in_exceptional_set(k, level).unwrap());

        let table = build_lambda_table(&d).unwrap();
        let eps = table.epsilon();
        let form = build_unit_circle_form(&table, eps).unwrap();
        let mut angles = qf_sample_angles(&form).unwrap();
        angles.extend((0..64).map(|j| 2.0 * PI * j as f64 / 64.0));
        for theta in angles {
            let q = qf_decomposition(&table, eps, theta).unwrap();
            assert!(q.margin > 0.0, "{} at θ = {theta}: margin {}", d.label(), q.margin);
            let scale = q.q_sum.norm().max(q.main_floor);
            assert!((q.q_sum - q.q_direct).norm() <= 1e-8 * scale, "{} at θ = {theta}", d.label());
        }

        let poly = build_period_polynomial(&table).unwrap();
        let roots = poly.find_roots().unwrap();
        let report = circle_report(&roots, level, k, DEFAULT_CIRCLE_TOLERANCE);
        assert!(report.passed, "{}: {}", d.label(), report.max_deviation);
        assert_eq!(sign_certificate(&form).status, CertificateStatus::Certified, "{}", d.label());
    }
}

#[test]
fn exceptional_set_matches_minimal_levels() {
    for k in 6..=40 {
        let (parity, m) = Parity::split_weight(k).unwrap();
        let n_m = minimal_level(m, parity).unwrap();
        for level in [1, 2, n_m.saturating_sub(1).max(1), n_m, n_m + 1, 10_000] {
            assert_eq!(in_exceptional_set(k, level).unwrap(), level < n_m, "k = {k}, N = {level}");
        }
    }
    for k in 3..=4 {
        assert!(!in_exceptional_set(k, 1).unwrap());
    }
}
