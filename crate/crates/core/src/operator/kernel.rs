use serde::Serialize;

use super::OperatorExpr;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::SparseVector;

/// Smallest `n <= k_max` with `op^n v = 0`, or `None`.
pub fn generalized_kernel_exponent<S: Scalar>(
    op: &OperatorExpr<S>,
    v: &SparseVector<S>,
    k_max: usize,
) -> Result<Option<usize>> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be >= 1".into()));
    }
    let mut current = v.clone();
    for n in 0..=k_max {
        if current.is_zero() {
            return Ok(Some(n));
        }
        if n < k_max {
            current = op.apply(&current)?;
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GkEntry {
    pub coordinate: i64,
    pub exponent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GkDensityReport {
    pub k_max: usize,
    pub entries: Vec<GkEntry>,
    pub dense_on_horizon: bool,
}

impl GkDensityReport {
    pub fn exponent(&self, coordinate: i64) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.coordinate == coordinate)
            .and_then(|e| e.exponent)
    }

    pub fn max_exponent(&self) -> Option<usize> {
        self.entries.iter().filter_map(|e| e.exponent).max()
    }
}

/// Kernel exponents of `e_c` for each listed coordinate. The verdict is
/// dense-on-horizon iff every coordinate is annihilated within `k_max`.
pub fn gk_density_report<S: Scalar>(
    op: &OperatorExpr<S>,
    coordinates: impl IntoIterator<Item = i64>,
    k_max: usize,
) -> Result<GkDensityReport> {
    let entries = coordinates
        .into_iter()
        .map(|c| {
            Ok(GkEntry {
                coordinate: c,
                exponent: generalized_kernel_exponent(op, &SparseVector::basis(c), k_max)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dense_on_horizon = entries.iter().all(|e| e.exponent.is_some());
    Ok(GkDensityReport {
        k_max,
        entries,
        dense_on_horizon,
    })
}
