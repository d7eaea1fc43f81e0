//! The period polynomial built from critical L-values against direct
//! quadrature of the period integral.

mod common;

use common::oracle::period_integral;
use num_complex::Complex64;
use periodpoly_core::construct;
use periodpoly_core::lvalues::build_lambda_table;
use periodpoly_core::period::build_period_polynomial;
use rand::{Rng, SeedableRng};

const FORMS: [&str; 9] = [
    "11.7.b.a",
    "2.8.a.a",
    "3.6.a.a",
    "5.4.a.a",
    "9.4.a.a",
    "7.3.b.a",
    "4.5.b.a",
    "local.19.9.cm",
    "local.8.7.cm",
];

#[test]
fn series_matches_integral() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    let start = std::time::Instant::now();
    for label in FORMS {
        let d = construct::by_label(label, 600).unwrap().unwrap();
        let table = build_lambda_table(&d).unwrap();
        let poly = build_period_polynomial(&table).unwrap();
        let sign = if d.weight().is_multiple_of(2) { 1.0 } else { -1.0 };
        let scale = 1.0 / (d.level() as f64).sqrt();
        for _ in 0..5 {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
            let series = poly.eval(z) * sign;
            let integral = period_integral(&d, table.epsilon(), z, 1e-12 * series.norm());
            let rel = (integral - series).norm() / series.norm();
            assert!(rel <= 1e-8, "{label} at z = {z}: series {series}, integral {integral}, rel {rel:e}");
            if sign < 0.0 {
                assert!((integral - poly.eval(z)).norm() > series.norm());
            }
        }
    }
    assert!(start.elapsed().as_secs() <= 60);
}
