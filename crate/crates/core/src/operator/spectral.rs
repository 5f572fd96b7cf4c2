//! Weight analysis for weighted shifts: windowed geometric means as
//! spectral-radius evidence, and null subsequences of weights.

use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::WeightSequence;
use crate::error::{Error, Result};
use crate::report::{ser_rational, ser_rational_opt, ser_rational_vec};
use crate::scalar::{exact_nth_root, ln_abs, Scalar};

/// The window-`n` mean `g_n = (sup_j |w_j ... w_{j+n-1}|)^{1/n}` over a
/// finite range of starting indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometricMean {
    pub window: usize,
    /// Starting index attaining the supremum (the first one on ties).
    pub argmax: i64,
    /// Lower enclosure of `sup_j |w_j ... w_{j+n-1}|^2`; exact in exact mode.
    #[serde(serialize_with = "ser_rational")]
    pub product_sq: BigRational,
    /// `g_n` as a rational when the root happens to be rational.
    #[serde(serialize_with = "ser_rational_opt")]
    pub exact: Option<BigRational>,
    /// Nearest binary64 value of `g_n`.
    pub value: f64,
}

impl GeometricMean {
    /// Certified `g_n >= c` for `c >= 0`, decided on `|.|^2` and the `2n`-th
    /// power of `c`.
    pub fn at_least(&self, c: &BigRational) -> bool {
        let c_sq = c * c;
        self.product_sq >= num_traits::pow(c_sq, self.window)
    }
}

/// Computes `g_n` over starting indices `j_range`.
///
/// A finite weight sequence that does not cover `j_range.end() + n - 1`
/// yields [`Error::HorizonTooShort`].
pub fn spectral_radius_estimate<S: Scalar>(
    weights: &WeightSequence<S>,
    window: usize,
    j_range: RangeInclusive<i64>,
) -> Result<GeometricMean> {
    if window == 0 {
        return Err(Error::InvalidParameter("window length must be >= 1".into()));
    }
    if j_range.is_empty() {
        return Err(Error::InvalidParameter("empty index range".into()));
    }
    let last = *j_range.end() + window as i64 - 1;
    if last > weights.available_up_to() {
        return Err(Error::HorizonTooShort {
            needed: last,
            available: weights.available_up_to(),
        });
    }
    let squares: Vec<BigRational> = (*j_range.start()..=last)
        .map(|j| weights.weight(j).expect("checked above").abs_sq_lower())
        .collect();
    let mut best: Option<(i64, BigRational)> = None;
    for (offset, j) in j_range.enumerate() {
        let product = squares[offset..offset + window]
            .iter()
            .fold(BigRational::one(), |acc, s| acc * s);
        if best.as_ref().is_none_or(|(_, b)| product > *b) {
            best = Some((j, product));
        }
    }
    let (argmax, product_sq) = best.expect("nonempty range");
    let exact = exact_nth_root(&product_sq, 2 * window as u32);
    let value = if product_sq.is_zero() {
        0.0
    } else {
        (ln_abs(&product_sq) / (2 * window) as f64).exp()
    };
    Ok(GeometricMean {
        window,
        argmax,
        value: exact.as_ref().map_or(value, crate::scalar::rational_to_f64),
        product_sq,
        exact,
    })
}

/// `g_1, ..., g_max_window` over the same starting range.
pub fn spectral_radius_evidence<S: Scalar>(
    weights: &WeightSequence<S>,
    max_window: usize,
    j_range: RangeInclusive<i64>,
) -> Result<Vec<GeometricMean>> {
    (1..=max_window)
        .map(|n| spectral_radius_estimate(weights, n, j_range.clone()))
        .collect()
}

/// Bounds on the coordinate functionals `||e*_n||`.
#[derive(Clone)]
pub enum DualNorms {
    /// `sup_n ||e*_n|| <= K`.
    Uniform(BigRational),
    /// A bound per index.
    PerIndex(Arc<dyn Fn(i64) -> BigRational + Send + Sync>),
}

impl DualNorms {
    pub fn normalised() -> Self {
        DualNorms::Uniform(BigRational::one())
    }

    pub fn at(&self, n: i64) -> BigRational {
        match self {
            DualNorms::Uniform(k) => k.clone(),
            DualNorms::PerIndex(f) => f(n),
        }
    }
}

impl fmt::Debug for DualNorms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DualNorms::Uniform(k) => f.debug_tuple("Uniform").field(k).finish(),
            DualNorms::PerIndex(_) => f.write_str("PerIndex(..)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NullSubsequence {
    #[serde(serialize_with = "ser_rational_vec")]
    pub thresholds: Vec<BigRational>,
    /// One pick per threshold, strictly increasing; `None` once the scan
    /// range is exhausted.
    pub picks: Vec<Option<i64>>,
    pub horizon: i64,
}

impl NullSubsequence {
    pub fn found(&self) -> impl Iterator<Item = i64> + '_ {
        self.picks.iter().flatten().copied()
    }

    pub fn is_complete(&self) -> bool {
        self.picks.iter().all(Option::is_some)
    }
}

/// For each threshold `eps_j` in order, the smallest index `n` in `scan`
/// beyond the previous pick with `|w_n| ||e*_n|| < eps_j`.
///
/// The comparison is made on squares with an upward enclosure of `|w_n|^2`,
/// so a pick is never certified falsely. Fails with
/// [`Error::NotFoundWithinHorizon`] if not even the first threshold is met.
pub fn weight_null_subsequence<S: Scalar>(
    weights: &WeightSequence<S>,
    norms: &DualNorms,
    thresholds: &[BigRational],
    scan: RangeInclusive<i64>,
) -> Result<NullSubsequence> {
    if thresholds.iter().any(|e| *e <= BigRational::zero()) {
        return Err(Error::InvalidParameter(
            "thresholds must be positive".into(),
        ));
    }
    let horizon = *scan.end();
    let mut picks = Vec::with_capacity(thresholds.len());
    let mut next = *scan.start();
    for eps in thresholds {
        let eps_sq = eps * eps;
        let mut pick = None;
        while next <= horizon {
            let n = next;
            next += 1;
            let Some(w) = weights.weight(n) else {
                next = horizon + 1;
                break;
            };
            let k = norms.at(n);
            if w.abs_sq_upper() * &k * &k < eps_sq {
                pick = Some(n);
                break;
            }
        }
        picks.push(pick);
    }
    if picks.first().is_some_and(Option::is_none) {
        return Err(Error::NotFoundWithinHorizon {
            chain: None,
            horizon,
        });
    }
    Ok(NullSubsequence {
        thresholds: thresholds.to_vec(),
        picks,
        horizon,
    })
}
