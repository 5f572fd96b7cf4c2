#![allow(dead_code)]

pub mod oracle;

use genshift::{Exact, SparseVector};
use num_traits::Zero;
use oracle::{q, Q};
use proptest::prelude::*;

pub fn rational() -> impl Strategy<Value = Q> {
    (-5i64..=5, 1i64..=4).prop_map(|(n, d)| q(n, d))
}

pub fn nonzero_rational() -> impl Strategy<Value = Q> {
    rational().prop_filter("nonzero", |x| !x.is_zero())
}

pub fn exact(x: &Q) -> Exact {
    Exact::new(x.clone(), Q::zero())
}

/// A small exact vector supported on `lo..=hi`.
pub fn sparse_vector(lo: i64, hi: i64) -> impl Strategy<Value = SparseVector<Exact>> {
    proptest::collection::vec((lo..=hi, rational()), 0..6).prop_map(|entries| {
        SparseVector::from_entries(entries.into_iter().map(|(c, x)| (c, exact(&x))))
    })
}

pub fn dense_vector(dim: usize) -> impl Strategy<Value = Vec<Q>> {
    proptest::collection::vec(rational(), dim)
}
