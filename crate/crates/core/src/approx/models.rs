use rand::Rng;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::operator::OperatorExpr;
use crate::scalar::Scalar;

/// `N = J_{n_1} (+) J_{n_2} (+) ... (+) 0`, with `J e_i = e_{i+1}` inside
/// each block `(size, offset)` and `J e_last = 0`.
pub fn nilpotent_model<S: Scalar>(blocks: &[(usize, i64)]) -> Result<OperatorExpr<S>> {
    let mut sorted: Vec<(usize, i64)> = blocks.to_vec();
    sorted.sort_by_key(|&(_, offset)| offset);
    for pair in sorted.windows(2) {
        let (size, offset) = pair[0];
        if pair[1].1 < offset + size as i64 {
            return Err(Error::OverlappingBlocks {
                coordinate: pair[1].1,
            });
        }
    }
    if blocks.iter().any(|b| b.0 == 0) {
        return Err(Error::InvalidParameter(
            "block sizes must be positive".into(),
        ));
    }
    Ok(OperatorExpr::Sum(
        blocks
            .iter()
            .map(|&(size, offset)| OperatorExpr::dense_block(offset, jordan(size)))
            .collect(),
    ))
}

fn jordan<S: Scalar>(size: usize) -> DenseMatrix<S> {
    DenseMatrix::from_fn(
        size,
        size,
        |i, j| if i == j + 1 { S::one() } else { S::zero() },
    )
}

/// A random nilpotent `dim x dim` matrix `P U P^{-1}`: `U` strictly upper
/// triangular with small rational entries (about a third of them zero) and
/// `P` a product of unit triangular integer matrices.
pub fn random_nilpotent_matrix<S: Scalar, R: Rng + ?Sized>(
    dim: usize,
    rng: &mut R,
) -> DenseMatrix<S> {
    let mut u = DenseMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i + 1..dim {
            if rng.gen_range(0..3) > 0 {
                let num = rng.gen_range(-3i64..=3);
                let den = rng.gen_range(1i64..=3);
                u.set(i, j, S::from_ratio(num, den));
            }
        }
    }
    let mut lower = DenseMatrix::<S>::identity(dim);
    let mut upper = DenseMatrix::<S>::identity(dim);
    for i in 0..dim {
        for j in 0..i {
            lower.set(i, j, S::from_int(rng.gen_range(-1i64..=1)));
            upper.set(j, i, S::from_int(rng.gen_range(-1i64..=1)));
        }
    }
    let p = lower.mul(&upper);
    let p_inv = unit_upper_inverse(&upper).mul(&unit_lower_inverse(&lower));
    p.mul(&u).mul(&p_inv)
}

/// A random nilpotent block on coordinates `offset..offset + dim`.
pub fn random_nilpotent_block<S: Scalar, R: Rng + ?Sized>(
    dim: usize,
    offset: i64,
    rng: &mut R,
) -> OperatorExpr<S> {
    OperatorExpr::dense_block(offset, random_nilpotent_matrix(dim, rng))
}

fn unit_lower_inverse<S: Scalar>(l: &DenseMatrix<S>) -> DenseMatrix<S> {
    let n = l.rows();
    let mut inv = DenseMatrix::<S>::identity(n);
    // column by column forward substitution
    for c in 0..n {
        for i in c + 1..n {
            let mut acc = S::zero();
            for k in c..i {
                acc = acc + l.get(i, k).clone() * inv.get(k, c).clone();
            }
            inv.set(i, c, -acc);
        }
    }
    inv
}

fn unit_upper_inverse<S: Scalar>(u: &DenseMatrix<S>) -> DenseMatrix<S> {
    let n = u.rows();
    let transposed = DenseMatrix::from_fn(n, n, |i, j| u.get(j, i).clone());
    let inv = unit_lower_inverse(&transposed);
    DenseMatrix::from_fn(n, n, |i, j| inv.get(j, i).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::gk_density_report;
    use crate::scalar::Exact;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn block_examples() {
        let n = nilpotent_model::<Exact>(&[(5, 1)]).unwrap();
        let report = gk_density_report(&n, 1..=8, 10).unwrap();
        assert!(report.dense_on_horizon);
        assert_eq!(report.max_exponent(), Some(5));
        // 1..=2 and 3..=5 are adjacent, not overlapping
        assert!(nilpotent_model::<Exact>(&[(2, 1), (3, 3)]).is_ok());
        assert_eq!(
            nilpotent_model::<Exact>(&[(2, 1), (3, 2)]).unwrap_err(),
            Error::OverlappingBlocks { coordinate: 2 }
        );
        let n = nilpotent_model::<Exact>(&[(2, 1), (3, 4)]).unwrap();
        assert_eq!(
            gk_density_report(&n, 1..=10, 10).unwrap().max_exponent(),
            Some(3)
        );
    }

    #[test]
    fn random_blocks_are_nilpotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=12 {
            let m = random_nilpotent_matrix::<Exact, _>(dim, &mut rng);
            let mut power = m.clone();
            for _ in 1..dim {
                power = power.mul(&m);
            }
            assert!(power.is_zero(), "dim {dim}");
        }
    }

    #[test]
    fn triangular_inverses() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut l = DenseMatrix::<Exact>::identity(6);
        for i in 0..6 {
            for j in 0..i {
                l.set(i, j, Exact::from_int(rng.gen_range(-2..=2)));
            }
        }
        assert_eq!(l.mul(&unit_lower_inverse(&l)), DenseMatrix::identity(6));
    }
}
