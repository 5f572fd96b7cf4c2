mod common;

use std::cmp::Ordering;

use common::oracle::{self, Q};
use common::{dense_vector, exact, sparse_vector};
use genshift::{
    biorthogonal, expand_in_set, lex_compare, ChainIndex, Error, Exact, Float, Functional,
    NormMode, Scalar, SparseVector,
};
use num_traits::Zero;
use proptest::prelude::*;

fn family(dim: usize) -> impl Strategy<Value = Vec<Vec<Q>>> {
    (1..=dim).prop_flat_map(move |count| proptest::collection::vec(dense_vector(dim), count))
}

fn mode() -> impl Strategy<Value = NormMode> {
    prop_oneof![Just(NormMode::L1), Just(NormMode::L2), Just(NormMode::LInf)]
}

fn index() -> impl Strategy<Value = ChainIndex> {
    (1usize..=4, 1usize..=4).prop_map(|(l, k)| ChainIndex::new(l, k))
}

proptest! {
    #[test]
    fn stored_entries_are_nonzero(v in sparse_vector(-4, 4), w in sparse_vector(-4, 4)) {
        let mut sum = v.clone();
        sum.axpy(&Exact::from_int(-1), &v);
        prop_assert!(sum.is_zero());
        sum.axpy(&Exact::from_int(1), &w);
        prop_assert!(sum.iter().all(|(_, x)| !Scalar::is_zero(x)));
        prop_assert_eq!(sum, w);
    }

    #[test]
    fn expansion_recombines(cols in family(6), coeffs in dense_vector(6), outside in dense_vector(6)) {
        let members: Vec<SparseVector<Exact>> = cols.iter().map(|c| oracle::sparse(c)).collect();
        let independent = oracle::rank(&cols) == cols.len();
        let mut target = SparseVector::zero();
        for (m, c) in members.iter().zip(&coeffs) {
            target.axpy(&exact(c), m);
        }
        match expand_in_set(&target, &members) {
            Ok(Some(found)) => {
                prop_assert!(independent);
                let mut back = SparseVector::zero();
                for (m, c) in members.iter().zip(&found) {
                    back.axpy(c, m);
                }
                prop_assert_eq!(back, target);
            }
            Ok(None) => prop_assert!(false, "a combination must expand"),
            Err(Error::DependentBasis) => prop_assert!(!independent),
            Err(e) => prop_assert!(false, "{e}"),
        }
        if independent {
            let inside = oracle::in_span(&cols, &outside);
            let found = expand_in_set(&oracle::sparse(&outside), &members).unwrap();
            prop_assert_eq!(found.is_some(), inside);
        }
    }

    #[test]
    fn biorthogonal_pairs_to_delta(cols in family(5), p in mode()) {
        prop_assume!(oracle::rank(&cols) == cols.len());
        let members: Vec<SparseVector<Exact>> = cols.iter().map(|c| oracle::sparse(c)).collect();
        for target in 0..members.len() {
            let (f, norm) = biorthogonal(&members, target, p).unwrap();
            for (i, m) in members.iter().enumerate() {
                let expected = Exact::from_int(i64::from(i == target));
                prop_assert_eq!(f.eval(m), expected);
            }
            // least l2 norm: the coefficients lie in the span of the family
            let coefficients = oracle::dense(f.coefficients(), 5);
            prop_assert!(oracle::in_span(&cols, &coefficients));
            prop_assert_eq!(norm, f.dual_norm(p));
        }
    }

    #[test]
    fn lex_order_is_total(a in index(), b in index(), c in index()) {
        let ab = lex_compare(a, b);
        prop_assert_eq!(ab.reverse(), lex_compare(b, a));
        prop_assert_eq!(ab == Ordering::Equal, a == b);
        let expected = a.chain.cmp(&b.chain).then(a.position.cmp(&b.position));
        prop_assert_eq!(ab, expected);
        if ab != Ordering::Greater && lex_compare(b, c) != Ordering::Greater {
            prop_assert_ne!(lex_compare(a, c), Ordering::Greater);
        }
        if a.position > 1 {
            prop_assert_eq!(a.immediate_predecessor(), Some(ChainIndex::new(a.chain, a.position - 1)));
        } else {
            prop_assert_eq!(a.immediate_predecessor(), None);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lex_trichotomy_thousand_pairs(a in index(), b in index()) {
        let outcomes = [a < b, a == b, a > b];
        prop_assert_eq!(outcomes.iter().filter(|x| **x).count(), 1);
        prop_assert_eq!(lex_compare(a, b), a.cmp(&b));
    }

    #[test]
    fn holder_inequality(
        f in proptest::collection::vec((-6i64..6, -1e3f64..1e3, -1e3f64..1e3), 0..8),
        v in proptest::collection::vec((-6i64..6, -1e3f64..1e3, -1e3f64..1e3), 0..8),
        p in mode(),
    ) {
        let build = |e: Vec<(i64, f64, f64)>| {
            SparseVector::<Float>::from_entries(e.into_iter().map(|(c, re, im)| (c, Float::new(re, im))))
        };
        let f = Functional::new(build(f));
        let v = build(v);
        let pairing = f.eval(&v).norm();
        let bound = f.dual_norm(p).value() * v.norm(p).value();
        prop_assert!(pairing <= bound * (1.0 + 1e-9) + 1e-300, "{pairing} > {bound}");
    }
}

#[test]
fn exact_norm_of_difference_vector() {
    let family = vec![
        SparseVector::basis(1),
        oracle::sparse(&[Q::from_integer(1.into()), Q::from_integer(1.into())]),
    ];
    let (f, norm) = biorthogonal::<Exact>(&family, 0, NormMode::L2).unwrap();
    assert_eq!(f.coefficients().coordinate(1), Exact::from_int(1));
    assert_eq!(f.coefficients().coordinate(2), Exact::from_int(-1));
    assert_eq!(norm.square, Some(Q::from_integer(2.into())));
    assert!(!Q::zero().eq(&norm.upper));
}
