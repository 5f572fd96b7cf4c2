//! Column-finite operator expressions.
//!
//! Every variant maps each coordinate vector to a finitely supported vector,
//! so images of finitely supported vectors are computed exactly.

mod bound;
mod kernel;
mod spectral;
mod truncate;
mod weights;

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};
use crate::vector::{Functional, SparseVector};

pub use bound::{operator_norm_bound, sample_norm_ratios, NormBound};
pub use kernel::{generalized_kernel_exponent, gk_density_report, GkDensityReport, GkEntry};
pub use spectral::{
    spectral_radius_estimate, spectral_radius_evidence, weight_null_subsequence, DualNorms,
    GeometricMean, NullSubsequence,
};
pub use truncate::{truncate, TruncationView};
pub use weights::{TailRule, WeightFn, WeightSequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `S e_j = w_j e_{j+1}` for `j >= 1`.
    Forward,
    /// `S e_j = w_j e_{j-1}` for `j >= 2`, `S e_1 = 0`.
    Backward,
    /// `S e_j = w_j e_{j+1}` for every integer `j`.
    Bilateral,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
            Direction::Bilateral => "bilateral",
        }
    }
}

/// Embeds chain positions into coordinates: position `j` of lane `index`
/// out of `count` interleaved lanes sits at `(j - 1) * count + index + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lane {
    pub count: u32,
    pub index: u32,
}

impl Default for Lane {
    fn default() -> Self {
        Lane { count: 1, index: 0 }
    }
}

impl Lane {
    pub fn new(count: u32, index: u32) -> Self {
        assert!(count >= 1 && index < count, "lane index out of range");
        Lane { count, index }
    }

    pub fn coordinate(&self, position: i64) -> i64 {
        (position - 1) * self.count as i64 + self.index as i64 + 1
    }

    pub fn position(&self, coordinate: i64) -> Option<i64> {
        let shifted = coordinate - self.index as i64 - 1;
        (shifted.rem_euclid(self.count as i64) == 0)
            .then(|| shifted.div_euclid(self.count as i64) + 1)
    }
}

/// A square matrix acting on coordinates `offset..offset + n`, zero
/// elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseBlock<S> {
    pub offset: i64,
    pub matrix: DenseMatrix<S>,
}

impl<S: Scalar> DenseBlock<S> {
    pub fn new(offset: i64, matrix: DenseMatrix<S>) -> Self {
        assert!(matrix.is_square(), "dense blocks are square");
        DenseBlock { offset, matrix }
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn contains(&self, coordinate: i64) -> bool {
        coordinate >= self.offset && coordinate < self.offset + self.size() as i64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedShift<S> {
    pub direction: Direction,
    pub weights: WeightSequence<S>,
    pub lane: Lane,
}

impl<S: Scalar> WeightedShift<S> {
    pub fn new(direction: Direction, weights: WeightSequence<S>) -> Self {
        WeightedShift {
            direction,
            weights,
            lane: Lane::default(),
        }
    }

    fn image(&self, position: i64) -> Result<Option<(i64, S)>> {
        let target = match self.direction {
            Direction::Forward if position >= 1 => position + 1,
            Direction::Backward if position >= 2 => position - 1,
            Direction::Bilateral => position + 1,
            _ => return Ok(None),
        };
        let w = self
            .weights
            .weight(position)
            .ok_or(Error::HorizonTooShort {
                needed: position,
                available: self.weights.available_up_to(),
            })?;
        Ok(Some((target, w)))
    }
}

/// `x -> scale * functional(x) * vector`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOne<S> {
    pub functional: Functional<S>,
    pub vector: SparseVector<S>,
    pub scale: S,
}

impl<S: Scalar> RankOne<S> {
    pub fn new(functional: Functional<S>, vector: SparseVector<S>, scale: S) -> Self {
        RankOne {
            functional,
            vector,
            scale,
        }
    }

    pub fn apply(&self, v: &SparseVector<S>) -> SparseVector<S> {
        let pairing = self.functional.eval(v);
        self.vector.scaled(&self.scale.mul_ref(&pairing))
    }
}

/// Coordinates on which a lazy sum's locality map is complete.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coverage {
    All,
    UpTo(i64),
    /// Per interleaved lane (see [`Lane`]), the last covered position.
    Lanes(Vec<i64>),
}

impl Coverage {
    pub fn covers(&self, coordinate: i64) -> bool {
        match self {
            Coverage::All => true,
            Coverage::UpTo(limit) => coordinate <= *limit,
            Coverage::Lanes(limits) => {
                let count = limits.len() as i64;
                let lane = (coordinate - 1).rem_euclid(count);
                let position = (coordinate - 1).div_euclid(count) + 1;
                position <= limits[lane as usize]
            }
        }
    }
}

/// Geometric norm majorant `first * (1 + ratio + ratio^2 + ...)` for the
/// terms of a countable sum that are not materialised.
#[derive(Clone, Debug, PartialEq)]
pub struct Majorant {
    pub first: BigRational,
    pub ratio: BigRational,
}

impl Majorant {
    pub fn sum(&self) -> Option<BigRational> {
        if self.first.is_zero() {
            return Some(BigRational::zero());
        }
        (self.ratio < BigRational::one() && self.ratio >= BigRational::zero())
            .then(|| &self.first / (BigRational::one() - &self.ratio))
    }
}

/// A countable sum presented by its materialised terms, a locality map
/// naming, for each covered coordinate, the only terms that can act on it,
/// and a norm majorant for everything not materialised.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSum<S> {
    terms: Vec<OperatorExpr<S>>,
    locality: BTreeMap<i64, Vec<usize>>,
    global: Vec<usize>,
    coverage: Coverage,
    tail: Option<Majorant>,
}

impl<S: Scalar> LocalSum<S> {
    /// Builds the locality map from each term's domain. Terms without a
    /// finite domain act everywhere.
    pub fn new(terms: Vec<OperatorExpr<S>>, coverage: Coverage, tail: Option<Majorant>) -> Self {
        let mut locality: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        let mut global = Vec::new();
        for (t, term) in terms.iter().enumerate() {
            match term.domain() {
                Some(coords) => {
                    for c in coords {
                        locality.entry(c).or_default().push(t);
                    }
                }
                None => global.push(t),
            }
        }
        LocalSum {
            terms,
            locality,
            global,
            coverage,
            tail,
        }
    }

    pub fn finite(terms: Vec<OperatorExpr<S>>) -> Self {
        Self::new(terms, Coverage::All, None)
    }

    pub fn terms(&self) -> &[OperatorExpr<S>] {
        &self.terms
    }

    pub fn coverage(&self) -> &Coverage {
        &self.coverage
    }

    pub fn tail(&self) -> Option<&Majorant> {
        self.tail.as_ref()
    }

    /// Term indices that may act on `e_coordinate`.
    pub fn terms_touching(&self, coordinate: i64) -> Option<Vec<usize>> {
        if !self.coverage.covers(coordinate) {
            return None;
        }
        let mut out = self.global.clone();
        if let Some(local) = self.locality.get(&coordinate) {
            out.extend(local);
        }
        Some(out)
    }

    fn apply(&self, v: &SparseVector<S>) -> Result<SparseVector<S>> {
        let mut active = BTreeSet::new();
        for c in v.support() {
            let touching = self
                .terms_touching(c)
                .ok_or(Error::LocalityViolation { coordinate: c })?;
            active.extend(touching);
        }
        let mut out = SparseVector::zero();
        for t in active {
            out.add_vector(self.terms[t].apply(v)?);
        }
        Ok(out)
    }

    fn convert<T: Scalar>(&self) -> LocalSum<T> {
        LocalSum {
            terms: self.terms.iter().map(OperatorExpr::convert).collect(),
            locality: self.locality.clone(),
            global: self.global.clone(),
            coverage: self.coverage.clone(),
            tail: self.tail.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorExpr<S> {
    DenseBlock(DenseBlock<S>),
    WeightedShift(WeightedShift<S>),
    RankOne(RankOne<S>),
    ScalarIdentity(S),
    Sum(Vec<OperatorExpr<S>>),
    LocalSum(LocalSum<S>),
}

impl<S: Scalar> OperatorExpr<S> {
    pub fn zero() -> Self {
        OperatorExpr::Sum(Vec::new())
    }

    pub fn dense_block(offset: i64, matrix: DenseMatrix<S>) -> Self {
        OperatorExpr::DenseBlock(DenseBlock::new(offset, matrix))
    }

    pub fn weighted_shift(direction: Direction, weights: WeightSequence<S>) -> Self {
        OperatorExpr::WeightedShift(WeightedShift::new(direction, weights))
    }

    pub fn rank_one(functional: Functional<S>, vector: SparseVector<S>, scale: S) -> Self {
        OperatorExpr::RankOne(RankOne::new(functional, vector, scale))
    }

    pub fn identity(lambda: S) -> Self {
        OperatorExpr::ScalarIdentity(lambda)
    }

    /// `lambda + self`.
    pub fn translated(&self, lambda: S) -> Self {
        OperatorExpr::Sum(vec![OperatorExpr::ScalarIdentity(lambda), self.clone()])
    }

    /// Coordinates outside of which the operator vanishes, if finite.
    pub fn domain(&self) -> Option<BTreeSet<i64>> {
        match self {
            OperatorExpr::RankOne(r) => Some(r.functional.support().collect()),
            OperatorExpr::DenseBlock(b) => Some(
                (0..b.size())
                    .filter(|&j| (0..b.size()).any(|i| !b.matrix.get(i, j).is_zero()))
                    .map(|j| b.offset + j as i64)
                    .collect(),
            ),
            OperatorExpr::ScalarIdentity(l) if l.is_zero() => Some(BTreeSet::new()),
            OperatorExpr::Sum(terms) => {
                let mut all = BTreeSet::new();
                for t in terms {
                    all.extend(t.domain()?);
                }
                Some(all)
            }
            _ => None,
        }
    }

    /// The exact image of a finitely supported vector.
    pub fn apply(&self, v: &SparseVector<S>) -> Result<SparseVector<S>> {
        match self {
            OperatorExpr::DenseBlock(block) => {
                let mut out = SparseVector::zero();
                let n = block.size();
                for (c, x) in v.iter() {
                    if !block.contains(c) {
                        continue;
                    }
                    let j = (c - block.offset) as usize;
                    for i in 0..n {
                        let a = block.matrix.get(i, j);
                        if !a.is_zero() {
                            out.add_at(block.offset + i as i64, a.mul_ref(x));
                        }
                    }
                }
                Ok(out)
            }
            OperatorExpr::WeightedShift(shift) => {
                let mut out = SparseVector::zero();
                for (c, x) in v.iter() {
                    let Some(position) = shift.lane.position(c) else {
                        continue;
                    };
                    if let Some((target, w)) = shift.image(position)? {
                        out.add_at(shift.lane.coordinate(target), w.mul_ref(x));
                    }
                }
                Ok(out)
            }
            OperatorExpr::RankOne(r) => Ok(r.apply(v)),
            OperatorExpr::ScalarIdentity(lambda) => Ok(v.scaled(lambda)),
            OperatorExpr::Sum(terms) => {
                let mut out = SparseVector::zero();
                for t in terms {
                    out.add_vector(t.apply(v)?);
                }
                Ok(out)
            }
            OperatorExpr::LocalSum(sum) => sum.apply(v),
        }
    }

    /// `op^n v`.
    pub fn power_apply(&self, v: &SparseVector<S>, n: usize) -> Result<SparseVector<S>> {
        let mut current = v.clone();
        for _ in 0..n {
            if current.is_zero() {
                break;
            }
            current = self.apply(&current)?;
        }
        Ok(current)
    }

    pub fn convert<T: Scalar>(&self) -> OperatorExpr<T> {
        match self {
            OperatorExpr::DenseBlock(b) => OperatorExpr::DenseBlock(DenseBlock {
                offset: b.offset,
                matrix: b.matrix.convert(),
            }),
            OperatorExpr::WeightedShift(s) => OperatorExpr::WeightedShift(WeightedShift {
                direction: s.direction,
                weights: s.weights.convert(),
                lane: s.lane,
            }),
            OperatorExpr::RankOne(r) => OperatorExpr::RankOne(RankOne {
                functional: r.functional.convert(),
                vector: r.vector.convert(),
                scale: convert(&r.scale),
            }),
            OperatorExpr::ScalarIdentity(l) => OperatorExpr::ScalarIdentity(convert(l)),
            OperatorExpr::Sum(terms) => {
                OperatorExpr::Sum(terms.iter().map(OperatorExpr::convert).collect())
            }
            OperatorExpr::LocalSum(sum) => OperatorExpr::LocalSum(sum.convert()),
        }
    }
}

pub fn apply<S: Scalar>(op: &OperatorExpr<S>, v: &SparseVector<S>) -> Result<SparseVector<S>> {
    op.apply(v)
}

pub fn power_apply<S: Scalar>(
    op: &OperatorExpr<S>,
    v: &SparseVector<S>,
    n: usize,
) -> Result<SparseVector<S>> {
    op.power_apply(v, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    fn e(i: i64) -> SparseVector<Exact> {
        SparseVector::basis(i)
    }

    pub(crate) fn jordan(size: usize, offset: i64) -> OperatorExpr<Exact> {
        OperatorExpr::dense_block(
            offset,
            DenseMatrix::from_fn(size, size, |i, j| {
                if i == j + 1 {
                    Exact::from_int(1)
                } else {
                    Exact::from_int(0)
                }
            }),
        )
    }

    #[test]
    fn harmonic_forward_shift() {
        let s = OperatorExpr::weighted_shift(
            Direction::Forward,
            WeightSequence::from_rule(TailRule::one_over_n()),
        );
        assert_eq!(
            s.apply(&e(3)).unwrap(),
            SparseVector::basis_scaled(4, Exact::from_ratio(1, 3))
        );
        assert!(s.apply(&e(0)).unwrap().is_zero());
    }

    #[test]
    fn scalar_identity_scales() {
        let i = Exact::new(BigRational::zero(), BigRational::one());
        let op = OperatorExpr::identity(i.clone());
        let v = &e(1) + &e(2);
        assert_eq!(op.apply(&v).unwrap(), v.scaled(&i));
    }

    #[test]
    fn rank_one_action() {
        let eps = Exact::from_ratio(1, 20);
        let op = OperatorExpr::rank_one(Functional::coordinate(4), e(1), eps.clone());
        assert_eq!(op.apply(&e(4)).unwrap(), SparseVector::basis_scaled(1, eps));
        assert!(op.apply(&e(3)).unwrap().is_zero());
    }

    #[test]
    fn powers() {
        let j3 = jordan(3, 1);
        assert_eq!(j3.power_apply(&e(1), 0).unwrap(), e(1));
        assert_eq!(j3.power_apply(&e(1), 2).unwrap(), e(3));
        assert!(j3.power_apply(&e(1), 3).unwrap().is_zero());
        let doubling = OperatorExpr::weighted_shift(
            Direction::Forward,
            WeightSequence::constant(Exact::from_int(2)),
        );
        assert_eq!(
            doubling.power_apply(&e(1), 4).unwrap(),
            SparseVector::basis_scaled(5, Exact::from_int(16))
        );
    }

    #[test]
    fn backward_and_bilateral() {
        let b = OperatorExpr::weighted_shift(
            Direction::Backward,
            WeightSequence::constant(Exact::from_int(1)),
        );
        assert!(b.apply(&e(1)).unwrap().is_zero());
        assert_eq!(b.apply(&e(5)).unwrap(), e(4));
        let bi = OperatorExpr::weighted_shift(
            Direction::Bilateral,
            WeightSequence::from_rule(TailRule::one_over_n()),
        );
        assert_eq!(
            bi.apply(&e(-4)).unwrap(),
            SparseVector::basis_scaled(-3, Exact::from_ratio(1, 4))
        );
        assert_eq!(bi.apply(&e(0)).unwrap(), e(1));
    }

    #[test]
    fn lanes_interleave() {
        let lane = Lane::new(3, 1);
        assert_eq!(lane.coordinate(1), 2);
        assert_eq!(lane.coordinate(0), -1);
        assert_eq!(lane.position(5), Some(2));
        assert_eq!(lane.position(-1), Some(0));
        assert_eq!(lane.position(4), None);
        let mut shift = WeightedShift::new(
            Direction::Forward,
            WeightSequence::constant(Exact::from_int(1)),
        );
        shift.lane = lane;
        let op = OperatorExpr::WeightedShift(shift);
        assert_eq!(op.apply(&e(2)).unwrap(), e(5));
        assert!(op.apply(&e(3)).unwrap().is_zero());
    }

    #[test]
    fn finite_weights_run_out() {
        let op = OperatorExpr::weighted_shift(
            Direction::Forward,
            WeightSequence::finite(vec![Exact::from_int(1); 3]),
        );
        assert_eq!(op.power_apply(&e(1), 3).unwrap(), e(4));
        assert_eq!(
            op.apply(&e(4)),
            Err(Error::HorizonTooShort {
                needed: 4,
                available: 3
            })
        );
    }

    #[test]
    fn local_sum_respects_coverage() {
        let terms = (1..=5)
            .map(|c| {
                OperatorExpr::rank_one(Functional::coordinate(c), e(c + 1), Exact::from_int(1))
            })
            .collect();
        let sum = OperatorExpr::LocalSum(LocalSum::new(terms, Coverage::UpTo(5), None));
        assert_eq!(sum.apply(&(&e(2) + &e(4))).unwrap(), &e(3) + &e(5));
        assert_eq!(
            sum.apply(&e(6)),
            Err(Error::LocalityViolation { coordinate: 6 })
        );
    }

    #[test]
    fn lane_coverage() {
        let c = Coverage::Lanes(vec![3, 1]);
        // lane 0 holds odd coordinates, lane 1 even ones
        assert!(c.covers(5) && !c.covers(7));
        assert!(c.covers(2) && !c.covers(4));
        assert!(c.covers(-3) && c.covers(0));
    }
}
