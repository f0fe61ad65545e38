//! Randomized structural properties.

use iwalab::elementary::{ElementaryModule, Factor};
use iwalab::linalg::{apply_col_ops_vec, apply_row_ops, mulmod, snf};
use iwalab::poly::DistPoly;
use iwalab::presented::PresentedModule;
use iwalab::profile::PrecisionProfile;
use iwalab::series::RingElem;
use proptest::prelude::*;

const P: u64 = 5;

fn prof() -> PrecisionProfile {
    PrecisionProfile::default_p(P).unwrap()
}

fn dist_poly() -> impl Strategy<Value = DistPoly> {
    (1usize..=3, prop::collection::vec(0i64..P as i64, 3), 1i64..P as i64).prop_map(
        |(deg, tail, c0)| {
            let mut coeffs = vec![0i64; deg + 1];
            coeffs[deg] = 1;
            coeffs[0] = P as i64 * c0;
            for i in 1..deg {
                coeffs[i] = P as i64 * tail[i - 1];
            }
            DistPoly::from_int_coeffs(P, &coeffs).unwrap()
        },
    )
}

fn factor() -> impl Strategy<Value = Factor> {
    prop_oneof![
        (1u32..=3).prop_map(|f| Factor::PPower { f }),
        (dist_poly(), 1u32..=2).prop_map(|(g, e)| Factor::Generic { g, e }),
        (0u32..=2, 1u32..=2).prop_map(|(a, e)| Factor::Cyclo { a, e }),
    ]
}

fn elementary() -> impl Strategy<Value = ElementaryModule> {
    (0u32..=1, prop::collection::vec(factor(), 1..=3)).prop_filter_map(
        "factor certification",
        |(r, fs)| ElementaryModule::new(prof(), r, fs).ok(),
    )
}

fn series() -> impl Strategy<Value = RingElem> {
    prop::collection::vec(0i64..1_000_000, 1..=8)
        .prop_map(|cs| RingElem::from_int_coeffs(prof(), &cs).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invariants_additive(e1 in elementary(), e2 in elementary()) {
        let s = e1.direct_sum(&e2);
        let (i1, i2, i) = (e1.invariants(), e2.invariants(), s.invariants());
        prop_assert_eq!(i.rank, i1.rank + i2.rank);
        prop_assert_eq!(i.mu, i1.mu + i2.mu);
        prop_assert_eq!(i.lambda, i1.lambda + i2.lambda);
        // Characteristic ideal factors merge as multisets.
        let mut merged = [i1.char_factors, i2.char_factors].concat();
        merged.sort();
        let mut got = i.char_factors;
        got.sort();
        prop_assert_eq!(got, merged);
    }

    #[test]
    fn twist_is_involutive(e in elementary()) {
        prop_assert!(e.twist().unwrap().twist().unwrap().same_class(&e));
    }

    #[test]
    fn functor_g_is_idempotent(e in elementary()) {
        let g = e.functor_g();
        prop_assert!(g.functor_g().same_class(&g));
    }

    #[test]
    fn funceq_with_twist_and_symmetry(e1 in elementary(), e2 in elementary()) {
        prop_assert!(e1.check_funceq(&e1.twist().unwrap()).unwrap());
        prop_assert_eq!(
            e1.check_funceq(&e2).unwrap(),
            e2.check_funceq(&e1).unwrap()
        );
    }

    #[test]
    fn snf_reconstructs(data in prop::collection::vec(0u128..15_625, 9)) {
        // D = U·A·V over Z/5^6, replayed through the op logs.
        let k = 6u32;
        let m = (P as u128).pow(k);
        let s = snf(3, 3, &data, P, k);
        for j in 0..3 {
            let mut ej = vec![0u128; 3];
            ej[j] = 1;
            apply_col_ops_vec(&s.col_ops, &mut ej, m);
            let mut av = vec![0u128; 3];
            for r in 0..3 {
                for c in 0..3 {
                    av[r] = (av[r] + mulmod(data[r * 3 + c], ej[c], m)) % m;
                }
            }
            apply_row_ops(&s.row_ops, &mut av, m);
            for r in 0..3 {
                let want = if r == j {
                    (P as u128).pow(s.diag[r].min(k)) % m
                } else {
                    0
                };
                prop_assert_eq!(av[r], want, "entry ({}, {})", r, j);
            }
        }
    }

    #[test]
    fn iota_is_a_ring_map(a in series(), b in series()) {
        let ab = a.mul(&b);
        prop_assert_eq!(a.iota().mul(&b.iota()), ab.iota());
        prop_assert_eq!(a.iota().add(&b.iota()), a.add(&b).iota());
        prop_assert_eq!(a.iota().iota(), a);
    }

    #[test]
    fn quotients_ignore_presentation_order(f in dist_poly(), g in dist_poly()) {
        let prof = prof();
        let zero = RingElem::zero(prof);
        let sf = RingElem::from_dist(prof, &f).unwrap();
        let sg = RingElem::from_dist(prof, &g).unwrap();
        let a = PresentedModule::from_series(
            prof, 2, 2,
            vec![sf.clone(), zero.clone(), zero.clone(), sg.clone()],
        ).unwrap();
        let b = PresentedModule::from_series(
            prof, 2, 2,
            vec![sg.clone(), zero.clone(), zero.clone(), sf.clone()],
        ).unwrap();
        // Same module, generators listed in the other order; also scale one
        // relation by a unit.
        let two = RingElem::constant(prof, 2);
        let c = PresentedModule::from_series(
            prof, 2, 2,
            vec![sf.mul(&two), zero.clone(), zero, sg],
        ).unwrap();
        for n in 1..=2 {
            let qa = a.quotient_summary(n).unwrap();
            prop_assert_eq!(&qa, &b.quotient_summary(n).unwrap());
            prop_assert_eq!(&qa, &c.quotient_summary(n).unwrap());
        }
    }
}
