use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use super::adapted::{exhausted, AdaptedSet};
use crate::error::{Error, Result};
use crate::index::ChainIndex;
use crate::operator::OperatorExpr;
use crate::scalar::Scalar;
use crate::span::SpanBasis;
use crate::vector::SparseVector;

/// The expansion of `S x^l_k` over its predecessors.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateRow<S> {
    pub index: ChainIndex,
    /// `a^{l,k}_i`, keyed by `i < k`; zeros omitted.
    pub chain_terms: BTreeMap<usize, S>,
    /// `b^{l,k}_{i,j}`, keyed by `(i, j)` with `i < l`; zeros omitted.
    pub cross_terms: BTreeMap<ChainIndex, S>,
}

impl<S: Scalar> CertificateRow<S> {
    /// `a^{l,k}_{k-1}`, or `None` for `k = 1`.
    pub fn immediate(&self) -> Option<S> {
        let k = self.index.position;
        (k > 1).then(|| {
            self.chain_terms
                .get(&(k - 1))
                .cloned()
                .unwrap_or_else(S::zero)
        })
    }

    /// `sum_i a_i x^l_i + sum_{i,j} b_{i,j} x^i_j`.
    pub fn recombine(&self, vectors: &BTreeMap<ChainIndex, SparseVector<S>>) -> SparseVector<S> {
        let mut out = SparseVector::zero();
        for (i, a) in &self.chain_terms {
            out.axpy(a, &vectors[&ChainIndex::new(self.index.chain, *i)]);
        }
        for (j, b) in &self.cross_terms {
            out.axpy(b, &vectors[j]);
        }
        out
    }
}

/// Coefficient table proving generalised-shift form on an enumerated
/// prefix of an adapted set.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftCertificate<S> {
    pub horizon: usize,
    /// The enumerated prefix.
    pub vectors: BTreeMap<ChainIndex, SparseVector<S>>,
    /// Rows for the indices whose image was certified.
    pub rows: BTreeMap<ChainIndex, CertificateRow<S>>,
}

impl<S: Scalar> ShiftCertificate<S> {
    /// 1-based position of `index` in the lexicographic enumeration.
    pub fn position(&self, index: ChainIndex) -> Option<usize> {
        self.vectors
            .contains_key(&index)
            .then(|| self.vectors.range(..=index).count())
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.vectors.len()
    }

    pub fn immediate(&self, index: ChainIndex) -> Option<S> {
        self.rows.get(&index).and_then(CertificateRow::immediate)
    }

    /// Every row recombines to `op x` exactly (in exact mode).
    pub fn verify(&self, op: &OperatorExpr<S>) -> Result<()> {
        for (index, row) in &self.rows {
            let image = op.apply(&self.vectors[index])?;
            let mut residual = &image - &row.recombine(&self.vectors);
            residual.prune(image.max_magnitude().max(1.0));
            if !residual.is_zero() {
                return Err(Error::CertificateFailure {
                    index: *index,
                    reason: "row does not recombine to the image".into(),
                });
            }
            if row.immediate().is_some_and(|a| a.is_zero()) {
                return Err(Error::SingularCoefficient { index: *index });
            }
        }
        Ok(())
    }

    /// Compact JSON description: immediate coefficients in lex order and
    /// the number of cross-chain terms.
    pub fn summary(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .values()
            .map(|row| {
                json!({
                    "index": [row.index.chain, row.index.position],
                    "immediate": row.immediate().map(|a| a.to_json()),
                    "chain_terms": row.chain_terms.len(),
                    "cross_terms": row.cross_terms.len(),
                })
            })
            .collect();
        json!({
            "horizon": self.horizon,
            "enumerated": self.vectors.len(),
            "certified": self.rows.len(),
            "rows": rows,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FailureReason {
    /// The image has a nonzero coefficient at `at >= (l, k)`.
    SuccessorCoefficient { at: ChainIndex },
    /// `a^{l,k}_{k-1} = 0` with `k > 1`.
    ZeroImmediateCoefficient,
    /// The image is not in the span of the enumerated prefix.
    ExpansionOutsidePrefix,
}

impl FailureReason {
    pub fn refutes(self) -> bool {
        !matches!(self, FailureReason::ExpansionOutsidePrefix)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub index: ChainIndex,
    pub reason: FailureReason,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IndexStatus {
    pub index: ChainIndex,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recognition<S> {
    pub verdict: Verdict,
    pub certificate: ShiftCertificate<S>,
    /// The first refutation in lex order, else the first inconclusive index.
    pub first_failure: Option<Failure>,
    pub statuses: Vec<IndexStatus>,
    pub coordinates_exhausted: i64,
}

impl<S: Scalar> Recognition<S> {
    pub fn to_json(&self) -> Value {
        json!({
            "verdict": self.verdict,
            "first_failure": self.first_failure,
            "horizon": self.certificate.horizon,
            "coordinates_exhausted": self.coordinates_exhausted,
            "certificate": self.certificate.summary(),
        })
    }
}

/// Checks generalised backward shift form on the prefix of `set` at
/// `horizon`.
///
/// Each image is expanded in the whole enumerated prefix. Since the prefix
/// is independent the expansion is unique, so a nonzero coefficient at a
/// successor, or a zero immediate-predecessor coefficient, refutes the
/// form. An image outside the prefix span leaves the index inconclusive.
pub fn recognize_generalized_shift<S: Scalar>(
    op: &OperatorExpr<S>,
    set: &AdaptedSet<S>,
    horizon: usize,
) -> Result<Recognition<S>> {
    let prefix = set.prefix(horizon);
    let basis = SpanBasis::from_members(prefix.iter().map(|(_, v)| v))?;
    let mut rows = BTreeMap::new();
    let mut statuses = Vec::with_capacity(prefix.len());
    let mut first_refutation = None;
    let mut first_inconclusive = None;

    for (pos, (index, x)) in prefix.iter().enumerate() {
        let image = op.apply(x)?;
        let outcome = match basis.expand_sparse(&image) {
            None => Err(FailureReason::ExpansionOutsidePrefix),
            Some(coefficients) => certify_row(*index, pos, &prefix, &coefficients),
        };
        let verdict = match outcome {
            Ok(row) => {
                rows.insert(*index, row);
                Verdict::Yes
            }
            Err(reason) => {
                let failure = Failure {
                    index: *index,
                    reason,
                };
                if reason.refutes() {
                    first_refutation.get_or_insert(failure);
                    Verdict::No
                } else {
                    first_inconclusive.get_or_insert(failure);
                    Verdict::Inconclusive
                }
            }
        };
        statuses.push(IndexStatus {
            index: *index,
            verdict,
        });
    }

    let verdict = if first_refutation.is_some() {
        Verdict::No
    } else if first_inconclusive.is_some() {
        Verdict::Inconclusive
    } else {
        Verdict::Yes
    };
    Ok(Recognition {
        verdict,
        first_failure: first_refutation.or(first_inconclusive),
        statuses,
        coordinates_exhausted: exhausted(&basis),
        certificate: ShiftCertificate {
            horizon,
            vectors: prefix.into_iter().collect(),
            rows,
        },
    })
}

fn certify_row<S: Scalar>(
    index: ChainIndex,
    pos: usize,
    prefix: &[(ChainIndex, SparseVector<S>)],
    coefficients: &SparseVector<S>,
) -> std::result::Result<CertificateRow<S>, FailureReason> {
    let mut chain_terms = BTreeMap::new();
    let mut cross_terms = BTreeMap::new();
    for (m, c) in coefficients.iter() {
        let m = m as usize;
        let at = prefix[m].0;
        if m >= pos {
            return Err(FailureReason::SuccessorCoefficient { at });
        }
        if at.chain == index.chain {
            chain_terms.insert(at.position, c.clone());
        } else {
            cross_terms.insert(at, c.clone());
        }
    }
    let row = CertificateRow {
        index,
        chain_terms,
        cross_terms,
    };
    if row.immediate().is_some_and(|a| a.is_zero()) {
        return Err(FailureReason::ZeroImmediateCoefficient);
    }
    Ok(row)
}
