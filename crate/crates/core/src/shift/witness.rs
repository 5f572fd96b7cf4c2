//! Constructive membership of adapted vectors in the generalised kernel and
//! the hyperrange of a generalised shift.

use std::collections::BTreeMap;

use serde::Serialize;

use super::recognize::ShiftCertificate;
use crate::error::{Error, Result};
use crate::index::ChainIndex;
use crate::operator::{generalized_kernel_exponent, OperatorExpr};
use crate::scalar::Scalar;
use crate::span::SpanBasis;
use crate::vector::SparseVector;

/// Kernel exponents and hyperrange preimages for the indices of one
/// certificate, with preimages memoised per `(index, r)`.
pub struct LemmaWitnesses<'a, S> {
    op: &'a OperatorExpr<S>,
    cert: &'a ShiftCertificate<S>,
    order: Vec<ChainIndex>,
    basis: SpanBasis<S>,
    memo: BTreeMap<(ChainIndex, usize), SparseVector<S>>,
}

impl<'a, S: Scalar> LemmaWitnesses<'a, S> {
    pub fn new(op: &'a OperatorExpr<S>, cert: &'a ShiftCertificate<S>) -> Result<Self> {
        let order: Vec<ChainIndex> = cert.vectors.keys().copied().collect();
        let basis = SpanBasis::from_members(cert.vectors.values())?;
        Ok(LemmaWitnesses {
            op,
            cert,
            order,
            basis,
            memo: BTreeMap::new(),
        })
    }

    fn vector(&self, index: ChainIndex) -> Result<&'a SparseVector<S>> {
        self.cert.vectors.get(&index).ok_or_else(|| {
            Error::InvalidParameter(format!("{index} is not in the certificate prefix"))
        })
    }

    /// Smallest `n` with `op^n x = 0`. A valid certificate maps every vector
    /// into the span of its strict predecessors, so `n` is at most the lex
    /// position of `index`; anything else is [`Error::ExceededBound`].
    pub fn kernel(&self, index: ChainIndex) -> Result<usize> {
        let x = self.vector(index)?;
        let bound = self.cert.position(index).expect("index is in the prefix");
        generalized_kernel_exponent(self.op, x, bound)?.ok_or(Error::ExceededBound { index, bound })
    }

    /// `v` with `op^r v = x_index`, built by induction along the order:
    /// `v = x^l_{k+r} / prod_i a^{l,k+i}_{k+i-1} - sum_j c_j v_j`, where
    /// `sum_j c_j x_j` is the residue over strict predecessors and `v_j`
    /// their own preimages.
    pub fn hyperrange(&mut self, index: ChainIndex, r: usize) -> Result<SparseVector<S>> {
        let x = self.vector(index)?.clone();
        if r == 0 {
            return Ok(x);
        }
        if let Some(v) = self.memo.get(&(index, r)) {
            return Ok(v.clone());
        }
        let deep = ChainIndex::new(index.chain, index.position + r);
        let deep_vector = self
            .cert
            .vectors
            .get(&deep)
            .ok_or(Error::InsufficientChain {
                index,
                depth: index.position + r,
            })?;
        let mut product = S::one();
        for i in 1..=r {
            let at = ChainIndex::new(index.chain, index.position + i);
            let row = self
                .cert
                .rows
                .get(&at)
                .ok_or_else(|| Error::CertificateFailure {
                    index: at,
                    reason: "index not certified".into(),
                })?;
            let a = row.immediate().expect("position > 1");
            if a.is_zero() {
                return Err(Error::SingularCoefficient { index: at });
            }
            product = product * a;
        }
        let mut v = deep_vector.scaled(&(S::one() / product));
        let image = self.op.power_apply(&v, r)?;
        let residue = &image - &x;
        let coefficients =
            self.basis
                .expand_sparse(&residue)
                .ok_or_else(|| Error::CertificateFailure {
                    index,
                    reason: "residue leaves the prefix span".into(),
                })?;
        for (m, c) in coefficients.iter() {
            let j = self.order[m as usize];
            if j >= index {
                return Err(Error::CertificateFailure {
                    index,
                    reason: format!("residue has a term at {j}"),
                });
            }
            let vj = self.hyperrange(j, r)?;
            v.axpy(&-c.clone(), &vj);
        }
        if S::TOLERANCE == 0.0 && self.op.power_apply(&v, r)? != x {
            return Err(Error::CertificateFailure {
                index,
                reason: format!("preimage of order {r} does not verify"),
            });
        }
        self.memo.insert((index, r), v.clone());
        Ok(v)
    }
}

pub fn kernel_witness<S: Scalar>(
    op: &OperatorExpr<S>,
    cert: &ShiftCertificate<S>,
    index: ChainIndex,
) -> Result<usize> {
    LemmaWitnesses::new(op, cert)?.kernel(index)
}

pub fn hyperrange_witness<S: Scalar>(
    op: &OperatorExpr<S>,
    cert: &ShiftCertificate<S>,
    index: ChainIndex,
    r: usize,
) -> Result<SparseVector<S>> {
    LemmaWitnesses::new(op, cert)?.hyperrange(index, r)
}

/// Kernel exponent and hyperrange preimages recorded for one index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub index: ChainIndex,
    pub position: usize,
    pub kernel_exponent: Option<usize>,
    /// Orders `r` whose preimage verified exactly.
    pub hyperrange_orders: Vec<usize>,
    pub failure: Option<String>,
}

impl MembershipReport {
    pub fn complete(&self, r_max: usize) -> bool {
        self.kernel_exponent.is_some()
            && self.hyperrange_orders.len() == r_max
            && self.failure.is_none()
    }
}
