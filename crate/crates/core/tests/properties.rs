mod common;

use common::props::*;
use proptest::prelude::*;
use qlimits_core::heckebasis::{build_basis_form, build_basis_form_with, build_phi, phi_via_theta, Elimination};
use qlimits_core::{CaseId, CaseStudy};

proptest! {
    #[test]
    fn u_u(f in arb_series(), a in 1i64..6, b in 1i64..6) { u_composes(&f, a, b)?; }

    #[test]
    fn v_v(f in arb_series(), a in 1i64..5, b in 1i64..5) { v_composes(&f, a, b)?; }

    #[test]
    fn u_after_v(f in arb_series(), m in 1i64..7) { u_inverts_v(&f, m)?; }

    #[test]
    fn u_v_multiplicativity(f in arb_series(), g in arb_series(), m in 1i64..5) { u_pulls_out_v(&f, &g, m)?; }

    #[test]
    fn theta_v(f in arb_series(), m in 1i64..6) { theta_commutes_with_v(&f, m)?; }

    #[test]
    fn theta_u(f in arb_series(), m in 1i64..6) { theta_commutes_with_u(&f, m)?; }

    #[test]
    fn theta_inverse(f in arb_series(), r in 1u32..4) { theta_inverse_round_trip(&f, r)?; }

    #[test]
    fn commutative(f in arb_series(), g in arb_series()) { mul_commutes(&f, &g)?; }

    #[test]
    fn associative(f in arb_series(), g in arb_series(), h in arb_series()) { mul_associates(&f, &g, &h)?; }

    #[test]
    fn distributive(f in arb_series(), g in arb_series(), h in arb_series()) { mul_distributes(&f, &g, &h)?; }

    #[test]
    fn inverse(f in arb_unit_series()) { inverse_is_inverse(&f)?; }

    #[test]
    fn truncation(f in arb_series(), a in -8i64..40, b in -8i64..40) { truncation_commutes(&f, a, b)?; }

    #[test]
    fn truncation_mul(f in arb_series(), g in arb_series(), n in -6i64..40) { truncation_is_monotone_for_mul(&f, &g, n)?; }

    #[test]
    fn valuation_scaling(f in arb_series(), p in prop::sample::select(vec![2u64, 3, 5, 7]), k in 0u32..6) {
        scaling_raises_valuation(&f, p, k)?;
    }

    #[test]
    fn basis_order_independence(i in 0usize..3, j in 0i64..12) {
        let case = CaseStudy::get(CaseId::ALL[i]);
        let m = (-1..60).filter(|&m| case.basis_index_ok(m)).nth(j as usize).unwrap();
        let a = build_basis_form_with(&case, m, 30, Elimination::Greedy).unwrap();
        let b = build_basis_form_with(&case, m, 30, Elimination::DenseReversed).unwrap();
        prop_assert_eq!(a.series.coeffs(), b.series.coeffs());
    }
}

#[test]
fn support_residues() {
    for id in CaseId::ALL {
        let case = CaseStudy::get(id);
        let master = case.master_form().expand(3000);
        for (n, _) in master.terms() {
            assert!(case.support.contains(n), "{id}: C({n}) off support");
        }
        let modulus = case.support.modulus;
        for m in (-1..40).filter(|&m| case.basis_index_ok(m)) {
            let b = build_basis_form(&case, m, 200).unwrap();
            for (n, _) in b.series.terms() {
                assert_eq!((n + m).rem_euclid(modulus), 0, "{id} basis {m}: q^{n}");
            }
        }
    }
}

#[test]
fn phi_constructions_agree() {
    let primes: [(CaseId, &[u64]); 3] = [
        (CaseId::Eo, &[3, 7, 11, 19, 23, 31]),
        (CaseId::Gko, &[2, 5, 11, 17, 23]),
        (CaseId::Bg, &[3, 7, 11, 19]),
    ];
    for (id, ps) in primes {
        let case = CaseStudy::get(id);
        for &p in ps {
            let a = build_phi(&case, p, 60).unwrap();
            let b = phi_via_theta(&case, p, 60).unwrap();
            assert_eq!(a.series.coeffs(), b.coeffs(), "{id} p={p}");
            assert_eq!(a.series.valuation(), b.valuation());
            // Support of φ_p: the class of -p.
            for (n, _) in a.series.terms() {
                assert_eq!((n + p as i64).rem_euclid(case.support.modulus), 0);
            }
        }
    }
}
