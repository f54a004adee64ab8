mod common;

use common::dd::Dd;

#[test]
fn double_double_matches_known_constants() {
    // ln 2, e, sqrt 2 to well beyond f64 precision
    let ln2 = Dd::new(2.0).ln();
    assert_eq!(ln2.hi, std::f64::consts::LN_2);
    assert!((ln2.lo - 2.319_046_813_846_299_6e-17).abs() < 1e-31);
    let e = Dd::ONE.exp();
    assert_eq!(e.hi, std::f64::consts::E);
    assert!((e.lo - 1.445_646_891_729_250_2e-16).abs() < 1e-30);
    let r2 = Dd::new(2.0).sqrt();
    assert_eq!(r2.hi, std::f64::consts::SQRT_2);
    assert!(((r2 * r2) - Dd::new(2.0)).to_f64().abs() < 1e-30);
}

#[test]
fn exp_ln_round_trip() {
    for &x in &[1e-12, 3e-5, 0.25, 0.999_999, 1.0, 7.5, 1e6] {
        let y = Dd::new(x).ln().exp();
        assert!(((y - Dd::new(x)) / Dd::new(x)).to_f64().abs() < 1e-28, "{x}");
    }
    let p = Dd::new(9.0).powf(-0.5);
    assert!((p - Dd::new(1.0) / Dd::new(3.0)).to_f64().abs() < 1e-30);
}
