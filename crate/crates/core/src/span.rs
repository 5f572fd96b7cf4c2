//! Spans of finite vector families: membership, expansion coefficients and
//! biorthogonal functionals.

use crate::error::{Error, Result};
use crate::norm::{Norm, NormMode};
use crate::scalar::Scalar;
use crate::vector::{Functional, SparseVector};

#[derive(Clone, Debug)]
struct ReducedRow<S> {
    pivot: i64,
    vector: SparseVector<S>,
    /// `vector` as a combination of the members, keyed by member index.
    combination: SparseVector<S>,
}

/// An ordered, linearly independent family with an incremental echelon form.
///
/// Each inserted member is reduced against the earlier rows, so row `k` is
/// zero at the pivots of rows `0..k`. Reducing a vector through the rows in
/// insertion order therefore never reintroduces an eliminated pivot.
#[derive(Clone, Debug)]
pub struct SpanBasis<S> {
    members: Vec<SparseVector<S>>,
    rows: Vec<ReducedRow<S>>,
}

impl<S> Default for SpanBasis<S> {
    fn default() -> Self {
        SpanBasis {
            members: Vec::new(),
            rows: Vec::new(),
        }
    }
}

impl<S: Scalar> SpanBasis<S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the basis, failing with [`Error::DependentBasis`] on the first
    /// member that lies in the span of its predecessors.
    pub fn from_members<'a, I>(members: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a SparseVector<S>>,
    {
        let mut basis = Self::new();
        for v in members {
            basis.insert(v.clone())?;
        }
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[SparseVector<S>] {
        &self.members
    }

    /// Appends `v`; returns its member index.
    pub fn insert(&mut self, v: SparseVector<S>) -> Result<usize> {
        let index = self.members.len();
        let (residual, coefficients) = self.reduce(&v);
        if residual.is_zero() {
            return Err(Error::DependentBasis);
        }
        let mut combination = SparseVector::basis(index as i64);
        for (row, c) in self.rows.iter().zip(coefficients) {
            if let Some(c) = c {
                combination.axpy(&-c, &row.combination);
            }
        }
        let pivot = choose_pivot(&residual);
        self.members.push(v);
        self.rows.push(ReducedRow {
            pivot,
            vector: residual,
            combination,
        });
        Ok(index)
    }

    /// Whether `v` lies in the span.
    pub fn contains(&self, v: &SparseVector<S>) -> bool {
        self.reduce(v).0.is_zero()
    }

    /// Coefficients `c` with `v = sum_i c_i member_i`, or `None` if `v` is
    /// outside the span.
    pub fn expand(&self, v: &SparseVector<S>) -> Option<Vec<S>> {
        self.expand_sparse(v).map(|c| {
            let mut dense = vec![S::zero(); self.members.len()];
            for (i, value) in c.iter() {
                dense[i as usize] = value.clone();
            }
            dense
        })
    }

    /// Like [`SpanBasis::expand`], keyed by member index with zeros omitted.
    pub fn expand_sparse(&self, v: &SparseVector<S>) -> Option<SparseVector<S>> {
        let (residual, coefficients) = self.reduce(v);
        if !residual.is_zero() {
            return None;
        }
        let mut out = SparseVector::zero();
        for (row, c) in self.rows.iter().zip(coefficients) {
            if let Some(c) = c {
                out.axpy(&c, &row.combination);
            }
        }
        out.prune(1.0);
        Some(out)
    }

    /// Dimension of `span(self) + span(others)`, without modifying `self`.
    pub fn rank_with<'a, I>(&self, others: I) -> usize
    where
        I: IntoIterator<Item = &'a SparseVector<S>>,
    {
        let mut scratch = self.clone();
        others
            .into_iter()
            .filter(|v| scratch.insert((*v).clone()).is_ok())
            .count()
            + self.len()
    }

    fn reduce(&self, v: &SparseVector<S>) -> (SparseVector<S>, Vec<Option<S>>) {
        let scale = v.max_magnitude();
        let mut residual = v.clone();
        let mut coefficients = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let c = match residual.get(row.pivot) {
                Some(x) => {
                    let c = x.clone() / row.vector.coordinate(row.pivot);
                    residual.axpy(&-c.clone(), &row.vector);
                    residual.remove(row.pivot);
                    residual.prune(scale);
                    Some(c)
                }
                None => None,
            };
            coefficients.push(c);
        }
        residual.prune(scale);
        (residual, coefficients)
    }
}

fn choose_pivot<S: Scalar>(residual: &SparseVector<S>) -> i64 {
    if S::TOLERANCE == 0.0 {
        residual.support().next().expect("nonzero residual")
    } else {
        residual
            .iter()
            .fold((0, -1.0), |best, (i, x)| {
                let m = x.magnitude();
                if m > best.1 {
                    (i, m)
                } else {
                    best
                }
            })
            .0
    }
}

/// Coefficients of `v` in the linearly independent `basis`, or `None` when
/// `v` is outside its span.
pub fn expand_in_set<S: Scalar>(
    v: &SparseVector<S>,
    basis: &[SparseVector<S>],
) -> Result<Option<Vec<S>>> {
    Ok(SpanBasis::from_members(basis)?.expand(v))
}

/// The functional biorthogonal to `family[target]` (0-based), with its dual
/// norm.
///
/// Among functionals supported on the family's coordinates that pair to
/// `delta_{i,target}` with every member, the one with least `l^2`
/// coefficient norm is returned.
pub fn biorthogonal<S: Scalar>(
    family: &[SparseVector<S>],
    target: usize,
    p: NormMode,
) -> Result<(Functional<S>, Norm)> {
    if target >= family.len() {
        return Err(Error::InvalidParameter(format!(
            "target {} outside family of length {}",
            target + 1,
            family.len()
        )));
    }
    let system = BiorthogonalSystem::new(family)?;
    let f = system.functional(target);
    let norm = f.dual_norm(p);
    Ok((f, norm))
}

/// Minimal-norm biorthogonal functionals for a whole family, sharing one
/// factorisation of the Gram matrix `G_ab = sum_i v_{a,i} conj(v_{b,i})`.
pub struct BiorthogonalSystem<S> {
    family: Vec<SparseVector<S>>,
    /// Rows of `G^{-1}`.
    inverse: Vec<SparseVector<S>>,
}

impl<S: Scalar> BiorthogonalSystem<S> {
    pub fn new(family: &[SparseVector<S>]) -> Result<Self> {
        SpanBasis::from_members(family)?;
        let n = family.len();

        // members touching each coordinate
        let mut by_coordinate: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
        for (a, v) in family.iter().enumerate() {
            for i in v.support() {
                by_coordinate.entry(i).or_default().push(a);
            }
        }
        let mut gram: Vec<SparseVector<S>> = vec![SparseVector::zero(); n];
        for (i, members) in &by_coordinate {
            for &a in members {
                let va = family[a].coordinate(*i);
                for &b in members {
                    let vb = family[b].coordinate(*i).conj();
                    gram[a].add_at(b as i64, va.clone() * vb);
                }
            }
        }

        let mut rhs: Vec<SparseVector<S>> = (0..n).map(|a| SparseVector::basis(a as i64)).collect();
        let scale = gram.iter().map(|r| r.max_magnitude()).fold(0.0, f64::max);
        // Hermitian positive definite: diagonal pivots never vanish.
        for k in 0..n {
            let pivot = gram[k].coordinate(k as i64);
            if pivot.is_negligible(scale) {
                return Err(Error::DependentBasis);
            }
            let (head, tail) = gram.split_at_mut(k + 1);
            let (rhs_head, rhs_tail) = rhs.split_at_mut(k + 1);
            let pivot_row = &head[k];
            let pivot_rhs = &rhs_head[k];
            for (row, row_rhs) in tail.iter_mut().zip(rhs_tail.iter_mut()) {
                if let Some(x) = row.get(k as i64) {
                    let factor = -(x.clone() / pivot.clone());
                    row.axpy(&factor, pivot_row);
                    row.remove(k as i64);
                    row.prune(scale);
                    row_rhs.axpy(&factor, pivot_rhs);
                }
            }
        }
        for k in (0..n).rev() {
            let pivot = gram[k].coordinate(k as i64);
            let normalised = rhs[k].scaled(&(S::one() / pivot));
            rhs[k] = normalised;
            let (head, tail) = rhs.split_at_mut(k);
            let solved = &tail[0];
            for (i, row_rhs) in head.iter_mut().enumerate() {
                if let Some(x) = gram[i].get(k as i64) {
                    row_rhs.axpy(&-x.clone(), solved);
                }
            }
        }
        Ok(BiorthogonalSystem {
            family: family.to_vec(),
            inverse: rhs,
        })
    }

    pub fn len(&self) -> usize {
        self.family.len()
    }

    pub fn is_empty(&self) -> bool {
        self.family.is_empty()
    }

    /// `f = sum_b c_b conj(v_b)` with `G c = e_target`.
    pub fn functional(&self, target: usize) -> Functional<S> {
        let mut coefficients = SparseVector::zero();
        for (b, row) in self.inverse.iter().enumerate() {
            if let Some(c) = row.get(target as i64) {
                let conj_vb =
                    SparseVector::from_entries(self.family[b].iter().map(|(i, x)| (i, x.conj())));
                coefficients.axpy(c, &conj_vb);
            }
        }
        coefficients.prune(1.0);
        Functional::new(coefficients)
    }

    pub fn functionals(&self) -> Vec<Functional<S>> {
        (0..self.len()).map(|t| self.functional(t)).collect()
    }
}
