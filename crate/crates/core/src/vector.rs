//! Finitely supported coordinate vectors and functionals.

use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{Map, Value};

use crate::norm::{Norm, NormMode};
use crate::scalar::{convert, sqrt_upper, ArithmeticMode, Scalar};

/// A finitely supported vector indexed by signed coordinates.
///
/// No stored entry is exactly zero, so two vectors are equal iff their maps
/// are equal.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector<S> {
    entries: BTreeMap<i64, S>,
}

impl<S> Default for SparseVector<S> {
    fn default() -> Self {
        SparseVector {
            entries: BTreeMap::new(),
        }
    }
}

impl<S: Scalar> SparseVector<S> {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The standard coordinate vector `e_i`.
    pub fn basis(index: i64) -> Self {
        Self::basis_scaled(index, S::one())
    }

    pub fn basis_scaled(index: i64, value: S) -> Self {
        let mut v = Self::zero();
        v.add_at(index, value);
        v
    }

    /// Collects entries, summing repeated coordinates and dropping zeros.
    pub fn from_entries<I: IntoIterator<Item = (i64, S)>>(entries: I) -> Self {
        let mut v = Self::zero();
        for (i, value) in entries {
            v.add_at(i, value);
        }
        v
    }

    pub fn get(&self, index: i64) -> Option<&S> {
        self.entries.get(&index)
    }

    /// The coordinate value, zero when absent.
    pub fn coordinate(&self, index: i64) -> S {
        self.entries.get(&index).cloned().unwrap_or_else(S::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &S)> + '_ {
        self.entries.iter().map(|(i, v)| (*i, v))
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add_at(&mut self, index: i64, value: S) {
        if value.is_zero() {
            return;
        }
        match self.entries.get_mut(&index) {
            Some(slot) => {
                let sum = std::mem::replace(slot, S::zero()).add_owned(value);
                if sum.is_zero() {
                    self.entries.remove(&index);
                } else {
                    *slot = sum;
                }
            }
            None => {
                self.entries.insert(index, value);
            }
        }
    }

    pub fn remove(&mut self, index: i64) -> Option<S> {
        self.entries.remove(&index)
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: &S, other: &SparseVector<S>) {
        if factor.is_zero() {
            return;
        }
        if *factor == S::one() {
            for (i, value) in other.iter() {
                self.add_at(i, value.clone());
            }
            return;
        }
        for (i, value) in other.iter() {
            self.add_at(i, factor.mul_ref(value));
        }
    }

    /// `self += other`, consuming `other`.
    pub fn add_vector(&mut self, other: SparseVector<S>) {
        if self.entries.is_empty() {
            *self = other;
            return;
        }
        for (i, value) in other.entries {
            self.add_at(i, value);
        }
    }

    pub fn scaled(&self, factor: &S) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        Self::from_entries(self.iter().map(|(i, v)| (i, v.mul_ref(factor))))
    }

    /// Drops entries that are negligible relative to `scale` (float mode).
    pub fn prune(&mut self, scale: f64) {
        if S::TOLERANCE > 0.0 {
            self.entries.retain(|_, v| !v.is_negligible(scale));
        }
    }

    /// Largest entry magnitude.
    pub fn max_magnitude(&self) -> f64 {
        self.entries
            .values()
            .map(|v| v.magnitude())
            .fold(0.0, f64::max)
    }

    /// Keeps only coordinates accepted by `keep`.
    pub fn restricted(&self, keep: impl Fn(i64) -> bool) -> Self {
        SparseVector {
            entries: self
                .entries
                .iter()
                .filter(|(i, _)| keep(**i))
                .map(|(i, v)| (*i, v.clone()))
                .collect(),
        }
    }

    pub fn norm(&self, p: NormMode) -> Norm {
        vector_norm(self, p)
    }

    /// The same vector in another arithmetic mode.
    pub fn convert<T: Scalar>(&self) -> SparseVector<T> {
        SparseVector::from_entries(self.iter().map(|(i, v)| (i, convert::<S, T>(v))))
    }

    /// JSON object keyed by coordinate.
    pub fn to_json(&self) -> Value {
        let map: Map<String, Value> = self
            .iter()
            .map(|(i, v)| (i.to_string(), v.to_json()))
            .collect();
        Value::Object(map)
    }
}

impl<S: Scalar> Add for &SparseVector<S> {
    type Output = SparseVector<S>;

    fn add(self, rhs: &SparseVector<S>) -> SparseVector<S> {
        let mut out = self.clone();
        out.axpy(&S::one(), rhs);
        out
    }
}

impl<S: Scalar> Sub for &SparseVector<S> {
    type Output = SparseVector<S>;

    fn sub(self, rhs: &SparseVector<S>) -> SparseVector<S> {
        let mut out = self.clone();
        out.axpy(&-S::one(), rhs);
        out
    }
}

impl<S: Scalar> Neg for &SparseVector<S> {
    type Output = SparseVector<S>;

    fn neg(self) -> SparseVector<S> {
        self.scaled(&-S::one())
    }
}

/// The `l^p` norm over the finite support.
///
/// In exact mode with `p = 2` the squared norm is exact; every returned
/// upper bound is certified.
pub fn vector_norm<S: Scalar>(v: &SparseVector<S>, p: NormMode) -> Norm {
    if v.is_zero() {
        return Norm::zero();
    }
    let exact_mode = S::MODE == ArithmeticMode::Exact;
    match p {
        NormMode::L2 => {
            let square = v
                .entries
                .values()
                .fold(BigRational::zero(), |acc, x| acc + x.abs_sq_upper());
            Norm::from_square(square, exact_mode)
        }
        NormMode::LInf => {
            let square = v
                .entries
                .values()
                .map(|x| x.abs_sq_upper())
                .max()
                .unwrap_or_else(BigRational::zero);
            let (upper, exact) = sqrt_upper(&square);
            Norm {
                upper,
                exact: exact && exact_mode,
                square: exact_mode.then_some(square),
            }
        }
        NormMode::L1 => {
            let mut upper = BigRational::zero();
            let mut exact = exact_mode;
            for x in v.entries.values() {
                let (abs, abs_exact) = x.abs_upper();
                exact &= abs_exact;
                upper += abs;
            }
            Norm {
                square: exact.then(|| &upper * &upper),
                upper,
                exact,
            }
        }
    }
}

/// A continuous linear functional with finitely many nonzero coordinates,
/// acting by the bilinear pairing `f(v) = sum_i f_i v_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional<S> {
    coefficients: SparseVector<S>,
}

impl<S: Scalar> Functional<S> {
    pub fn new(coefficients: SparseVector<S>) -> Self {
        Functional { coefficients }
    }

    /// The coordinate functional `e*_i`.
    pub fn coordinate(index: i64) -> Self {
        Functional::new(SparseVector::basis(index))
    }

    pub fn coefficients(&self) -> &SparseVector<S> {
        &self.coefficients
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.coefficients.support()
    }

    pub fn eval(&self, v: &SparseVector<S>) -> S {
        let (small, large) = if v.len() <= self.coefficients.len() {
            (v, &self.coefficients)
        } else {
            (&self.coefficients, v)
        };
        let mut acc = S::zero();
        for (i, x) in small.iter() {
            if let Some(y) = large.get(i) {
                acc = acc.add_owned(x.mul_ref(y));
            }
        }
        acc
    }

    /// Norm in the dual of `l^p`, i.e. the `l^q` norm of the coefficients.
    pub fn dual_norm(&self, p: NormMode) -> Norm {
        vector_norm(&self.coefficients, p.dual())
    }

    pub fn convert<T: Scalar>(&self) -> Functional<T> {
        Functional::new(self.coefficients.convert())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn ev(entries: &[(i64, i64)]) -> SparseVector<Exact> {
        SparseVector::from_entries(entries.iter().map(|&(i, v)| (i, Exact::from_int(v))))
    }

    #[test]
    fn zero_entries_never_stored() {
        let mut v = ev(&[(1, 2), (3, 0)]);
        assert_eq!(v.len(), 1);
        v.add_at(1, Exact::from_int(-2));
        assert!(v.is_zero());
        assert_eq!(v, SparseVector::zero());
    }

    #[test]
    fn pythagorean_norm() {
        let n = ev(&[(1, 3), (2, 4)]).norm(NormMode::L2);
        assert_eq!(n.upper, q(5, 1));
        assert!(n.exact);
        assert_eq!(n.square, Some(q(25, 1)));
    }

    #[test]
    fn empty_norms_vanish() {
        for p in [NormMode::L1, NormMode::L2, NormMode::LInf] {
            assert_eq!(SparseVector::<Exact>::zero().norm(p).upper, q(0, 1));
        }
    }

    #[test]
    fn sup_norm_of_signed_entries() {
        let n = ev(&[(1, 1), (5, -1)]).norm(NormMode::LInf);
        assert_eq!(n.upper, q(1, 1));
        assert!(n.exact);
        assert_eq!(ev(&[(1, 1), (5, -1)]).norm(NormMode::L1).upper, q(2, 1));
    }

    #[test]
    fn irrational_norm_is_an_upper_bound() {
        let n = ev(&[(1, 1), (2, 1)]).norm(NormMode::L2);
        assert!(!n.exact);
        assert!(&n.upper * &n.upper >= q(2, 1));
    }

    #[test]
    fn complex_modulus_in_l1() {
        let v = SparseVector::basis_scaled(0, Exact::new(q(3, 1), q(4, 1)));
        let n = v.norm(NormMode::L1);
        assert_eq!(n.upper, q(5, 1));
        assert!(n.exact);
    }

    #[test]
    fn pairing_and_dual_norm() {
        let f = Functional::new(ev(&[(1, 2), (2, -1)]));
        assert_eq!(f.eval(&ev(&[(1, 1), (2, 1), (9, 7)])), Exact::from_int(1));
        assert_eq!(f.dual_norm(NormMode::L1).upper, q(2, 1));
        assert_eq!(f.dual_norm(NormMode::LInf).upper, q(3, 1));
    }
}
