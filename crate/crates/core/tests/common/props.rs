//! Series strategies and algebraic laws, shared by the property tests and
//! the acceptance run.

#![allow(dead_code)]

use num_bigint::BigInt;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use qlimits_core::QSeries;

pub fn arb_series() -> impl Strategy<Value = QSeries> {
    (-6i64..6, prop::collection::vec(-1000i64..1000, 1..40)).prop_map(|(v, c)| {
        QSeries::new(v, c.into_iter().map(BigInt::from).collect())
    })
}

/// Leading coefficient `±1`.
pub fn arb_unit_series() -> impl Strategy<Value = QSeries> {
    (-4i64..4, any::<bool>(), prop::collection::vec(-50i64..50, 0..30)).prop_map(|(v, neg, rest)| {
        let mut c = vec![BigInt::from(if neg { -1 } else { 1 })];
        c.extend(rest.into_iter().map(BigInt::from));
        QSeries::new(v, c)
    })
}

fn same(a: &QSeries, b: &QSeries) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.precision(), b.precision());
    prop_assert_eq!(a, b);
    Ok(())
}

pub fn u_composes(f: &QSeries, a: i64, b: i64) -> Result<(), TestCaseError> {
    same(&f.u_op(a).u_op(b), &f.u_op(a * b))
}

pub fn v_composes(f: &QSeries, a: i64, b: i64) -> Result<(), TestCaseError> {
    same(&f.v_op(a).v_op(b), &f.v_op(a * b))
}

pub fn u_inverts_v(f: &QSeries, m: i64) -> Result<(), TestCaseError> {
    same(&f.v_op(m).u_op(m), f)
}

/// `U(m)(f · g|V(m)) = (f|U(m)) · g`.
pub fn u_pulls_out_v(f: &QSeries, g: &QSeries, m: i64) -> Result<(), TestCaseError> {
    let lhs = f.mul(&g.v_op(m)).u_op(m);
    let rhs = f.u_op(m).mul(g);
    prop_assert_eq!(lhs, rhs);
    Ok(())
}

/// `Θ(f|V(m)) = m (Θf)|V(m)`.
pub fn theta_commutes_with_v(f: &QSeries, m: i64) -> Result<(), TestCaseError> {
    same(&f.v_op(m).theta(1), &f.theta(1).v_op(m).scale_i64(m))
}

/// `Θ(f|U(m)) = (Θf)|U(m) / m`, checked as `m Θ(f|U(m)) = (Θf)|U(m)`.
pub fn theta_commutes_with_u(f: &QSeries, m: i64) -> Result<(), TestCaseError> {
    same(&f.u_op(m).theta(1).scale_i64(m), &f.theta(1).u_op(m))
}

pub fn theta_inverse_round_trip(f: &QSeries, power: u32) -> Result<(), TestCaseError> {
    let mut c = f.coeffs().to_vec();
    if (f.valuation()..f.precision()).contains(&0) {
        c[(-f.valuation()) as usize] = BigInt::from(0);
    }
    let f = QSeries::new(f.valuation(), c);
    let (back, integral) = f.theta(power).theta_inverse(power).unwrap();
    prop_assert!(integral);
    same(&back.to_integer().unwrap(), &f)
}

pub fn mul_commutes(f: &QSeries, g: &QSeries) -> Result<(), TestCaseError> {
    same(&f.mul(g), &g.mul(f))
}

pub fn mul_associates(f: &QSeries, g: &QSeries, h: &QSeries) -> Result<(), TestCaseError> {
    same(&f.mul(g).mul(h), &f.mul(&g.mul(h)))
}

pub fn mul_distributes(f: &QSeries, g: &QSeries, h: &QSeries) -> Result<(), TestCaseError> {
    same(&f.mul(&g.add(h)), &f.mul(g).add(&f.mul(h)))
}

pub fn inverse_is_inverse(f: &QSeries) -> Result<(), TestCaseError> {
    let inv = f.invert(f.precision() + 10).unwrap();
    let one = f.mul(&inv);
    same(&one, &QSeries::one(f.relative_precision()))
}

pub fn truncation_commutes(f: &QSeries, a: i64, b: i64) -> Result<(), TestCaseError> {
    same(&f.truncate(a).truncate(b), &f.truncate(a.min(b)))
}

pub fn truncation_is_monotone_for_mul(f: &QSeries, g: &QSeries, n: i64) -> Result<(), TestCaseError> {
    let full = f.mul(g);
    let cut = f.truncate(n).mul(g);
    prop_assert!(cut.precision() <= full.precision());
    prop_assert_eq!(cut, full);
    Ok(())
}

pub fn scaling_raises_valuation(f: &QSeries, p: u64, k: u32) -> Result<(), TestCaseError> {
    let base = f.vp_certificate(p);
    let scaled = f.scale(&BigInt::from(p).pow(k)).vp_certificate(p);
    match (base.bound, scaled.bound) {
        (None, None) => {}
        (Some(a), Some(b)) => prop_assert_eq!(b, a + k as i64),
        _ => prop_assert!(false, "zero pattern changed"),
    }
    Ok(())
}
