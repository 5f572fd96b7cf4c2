use super::OperatorExpr;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::SparseVector;

/// The compression of an operator to coordinates `1..=dimension`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationView<S> {
    pub dimension: usize,
    /// Entry `(i, j)` is coordinate `i + 1` of `op e_{j+1}`.
    pub matrix: DenseMatrix<S>,
    /// Set when some column had mass outside `1..=dimension`.
    pub leaked: bool,
}

impl<S: Scalar> TruncationView<S> {
    /// `matrix * v` for `v` supported in `1..=dimension`.
    pub fn apply(&self, v: &SparseVector<S>) -> SparseVector<S> {
        let dense: Vec<S> = (1..=self.dimension as i64)
            .map(|c| v.coordinate(c))
            .collect();
        let image = self.matrix.mul_vec(&dense);
        SparseVector::from_entries(
            image
                .into_iter()
                .enumerate()
                .map(|(i, x)| (i as i64 + 1, x)),
        )
    }
}

pub fn truncate<S: Scalar>(op: &OperatorExpr<S>, dimension: usize) -> Result<TruncationView<S>> {
    if dimension == 0 {
        return Err(Error::InvalidParameter(
            "truncation dimension must be >= 1".into(),
        ));
    }
    let mut matrix = DenseMatrix::zeros(dimension, dimension);
    let mut leaked = false;
    for j in 0..dimension {
        let column = op.apply(&SparseVector::basis(j as i64 + 1))?;
        for (c, x) in column.iter() {
            if c >= 1 && c <= dimension as i64 {
                matrix.set(c as usize - 1, j, x.clone());
            } else {
                leaked = true;
            }
        }
    }
    Ok(TruncationView {
        dimension,
        matrix,
        leaked,
    })
}
