use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

use super::{DenseBlock, OperatorExpr};
use crate::error::{Error, Result};
use crate::norm::{Norm, NormMode};
use crate::scalar::{sqrt_upper, ArithmeticMode, Float, Scalar};
use crate::vector::SparseVector;

/// Certified upper bound of an operator norm. `exact` is set when the bound
/// equals the norm.
#[derive(Clone, Debug, PartialEq)]
pub struct NormBound {
    pub bound: BigRational,
    pub exact: bool,
}

impl NormBound {
    pub fn value(&self) -> f64 {
        crate::scalar::rational_to_f64(&self.bound)
    }
}

/// Rank-one terms are bounded by `|scale| ||f|| ||v||` (their exact norm),
/// sums by the triangle inequality, dense blocks by induced norms.
pub fn operator_norm_bound<S: Scalar>(op: &OperatorExpr<S>, p: NormMode) -> Result<NormBound> {
    let exact_mode = S::MODE == ArithmeticMode::Exact;
    match op {
        OperatorExpr::DenseBlock(block) => Ok(dense_bound(block, p)),
        OperatorExpr::WeightedShift(shift) => {
            let one_sided = shift.direction != super::Direction::Bilateral;
            let (bound, exact) = shift.weights.sup_abs(one_sided).ok_or(Error::Unbounded)?;
            Ok(NormBound { bound, exact })
        }
        OperatorExpr::ScalarIdentity(lambda) => {
            let (bound, exact) = lambda.abs_upper();
            Ok(NormBound { bound, exact })
        }
        OperatorExpr::RankOne(r) => {
            let scale = Norm::from_square(r.scale.abs_sq_upper(), exact_mode);
            let n = scale
                .product(&r.functional.dual_norm(p))
                .product(&r.vector.norm(p));
            Ok(NormBound {
                bound: n.upper,
                exact: n.exact,
            })
        }
        OperatorExpr::Sum(terms) => sum_bounds(terms.iter(), p, None),
        OperatorExpr::LocalSum(sum) => {
            let tail = match sum.tail() {
                Some(m) => Some(m.sum().ok_or(Error::Unbounded)?),
                None => None,
            };
            sum_bounds(sum.terms().iter(), p, tail)
        }
    }
}

fn sum_bounds<'a, S: Scalar>(
    terms: impl ExactSizeIterator<Item = &'a OperatorExpr<S>>,
    p: NormMode,
    tail: Option<BigRational>,
) -> Result<NormBound> {
    let single = terms.len() == 1 && tail.as_ref().is_none_or(Zero::is_zero);
    let mut total = tail.unwrap_or_else(BigRational::zero);
    let mut exact = true;
    for t in terms {
        let b = operator_norm_bound(t, p)?;
        exact = b.exact;
        total += b.bound;
    }
    Ok(NormBound {
        exact: (single && exact) || total.is_zero(),
        bound: total,
    })
}

fn dense_bound<S: Scalar>(block: &DenseBlock<S>, p: NormMode) -> NormBound {
    let n = block.size();
    let m = &block.matrix;
    let exact_mode = S::MODE == ArithmeticMode::Exact;
    let mut all_exact = exact_mode;
    let abs: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (a, exact) = m.get(i, j).abs_upper();
                    all_exact &= exact || m.get(i, j).is_zero();
                    a
                })
                .collect()
        })
        .collect();
    let column_max = (0..n)
        .map(|j| (0..n).fold(BigRational::zero(), |acc, i| acc + &abs[i][j]))
        .max()
        .unwrap_or_else(BigRational::zero);
    let row_max = abs
        .iter()
        .map(|row| row.iter().fold(BigRational::zero(), |acc, a| acc + a))
        .max()
        .unwrap_or_else(BigRational::zero);
    match p {
        NormMode::L1 => NormBound {
            bound: column_max,
            exact: all_exact,
        },
        NormMode::LInf => NormBound {
            bound: row_max,
            exact: all_exact,
        },
        NormMode::L2 => {
            // a generalised permutation matrix has 2-norm max |a_ij|
            let monomial = (0..n).all(|i| (0..n).filter(|&j| !m.get(i, j).is_zero()).count() <= 1)
                && (0..n).all(|j| (0..n).filter(|&i| !m.get(i, j).is_zero()).count() <= 1);
            let (interpolated, _) = sqrt_upper(&(&column_max * &row_max));
            let frobenius_sq = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .fold(BigRational::zero(), |acc, (i, j)| {
                    acc + m.get(i, j).abs_sq_upper()
                });
            let (frobenius, _) = sqrt_upper(&frobenius_sq);
            let bound = if frobenius < interpolated {
                frobenius
            } else {
                interpolated
            };
            NormBound {
                bound,
                exact: monomial && all_exact,
            }
        }
    }
}

/// Ratios `||op v||_p / ||v||_p` for random vectors supported on `coords`,
/// evaluated in float arithmetic.
pub fn sample_norm_ratios<S: Scalar, R: Rng>(
    op: &OperatorExpr<S>,
    p: NormMode,
    coords: &[i64],
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let float_op: OperatorExpr<Float> = op.convert();
    let mut ratios = Vec::with_capacity(samples);
    for _ in 0..samples {
        let support = rng.gen_range(1..=coords.len().max(1)).min(coords.len());
        let mut v = SparseVector::<Float>::zero();
        for _ in 0..support {
            let c = coords[rng.gen_range(0..coords.len())];
            v.add_at(
                c,
                Float::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
        }
        let norm_v = float_norm(&v, p);
        if norm_v == 0.0 {
            continue;
        }
        let image = float_op.apply(&v)?;
        ratios.push(float_norm(&image, p) / norm_v);
    }
    Ok(ratios)
}

fn float_norm(v: &SparseVector<Float>, p: NormMode) -> f64 {
    let abs = v.iter().map(|(_, x)| x.norm());
    match p {
        NormMode::L1 => abs.sum(),
        NormMode::L2 => abs.map(|a| a * a).sum::<f64>().sqrt(),
        NormMode::LInf => abs.fold(0.0, f64::max),
    }
}
