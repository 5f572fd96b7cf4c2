use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::index::ChainIndex;
use crate::scalar::Scalar;
use crate::span::SpanBasis;
use crate::vector::SparseVector;

pub type ChainGenerator<S> = Arc<dyn Fn(usize) -> SparseVector<S> + Send + Sync>;

/// One chain `x^l_1, x^l_2, ...` of an adapted set.
#[derive(Clone)]
pub enum Chain<S> {
    /// A finite piece of a chain. Positions past its end are unknown.
    Finite(Vec<SparseVector<S>>),
    /// `position -> vector`, defined for every position `>= 1`.
    Generated(ChainGenerator<S>),
}

impl<S: Scalar> Chain<S> {
    pub fn generated(rule: impl Fn(usize) -> SparseVector<S> + Send + Sync + 'static) -> Self {
        Chain::Generated(Arc::new(rule))
    }

    pub fn vector(&self, position: usize) -> Option<SparseVector<S>> {
        match self {
            Chain::Finite(v) => v.get(position.checked_sub(1)?).cloned(),
            Chain::Generated(f) => (position >= 1).then(|| f(position)),
        }
    }

    /// Number of known positions, `None` for generated chains.
    pub fn depth(&self) -> Option<usize> {
        match self {
            Chain::Finite(v) => Some(v.len()),
            Chain::Generated(_) => None,
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for Chain<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chain::Finite(v) => f.debug_tuple("Finite").field(v).finish(),
            Chain::Generated(_) => f.write_str("Generated(..)"),
        }
    }
}

/// The indexed family `{x^l_k}` a generalised shift is adapted to, given by
/// its chains.
///
/// The prefix enumerated at horizon `H` is every `(l, k)` with `l <= H` and
/// `k <= H` that the chains define, in lexicographic order. Growing `H`
/// only adds indices.
#[derive(Clone, Debug)]
pub struct AdaptedSet<S> {
    chains: Vec<Chain<S>>,
}

impl<S: Scalar> AdaptedSet<S> {
    pub fn new(chains: Vec<Chain<S>>) -> Self {
        AdaptedSet { chains }
    }

    pub fn single_chain(vectors: Vec<SparseVector<S>>) -> Self {
        AdaptedSet::new(vec![Chain::Finite(vectors)])
    }

    pub fn from_chains(chains: Vec<Vec<SparseVector<S>>>) -> Self {
        AdaptedSet::new(chains.into_iter().map(Chain::Finite).collect())
    }

    /// The chain `x^1_k = e_k`.
    pub fn standard_chain() -> Self {
        AdaptedSet::new(vec![Chain::generated(|k| SparseVector::basis(k as i64))])
    }

    /// Number of chains `n`.
    pub fn arity(&self) -> usize {
        self.chains.len()
    }

    pub fn chains(&self) -> &[Chain<S>] {
        &self.chains
    }

    pub fn vector(&self, index: ChainIndex) -> Option<SparseVector<S>> {
        self.chains
            .get(index.chain.checked_sub(1)?)?
            .vector(index.position)
    }

    pub fn prefix(&self, horizon: usize) -> Vec<(ChainIndex, SparseVector<S>)> {
        let mut out = Vec::new();
        for (l, chain) in self.chains.iter().enumerate().take(horizon) {
            let depth = chain.depth().map_or(horizon, |d| d.min(horizon));
            for k in 1..=depth {
                let v = chain.vector(k).expect("within depth");
                out.push((ChainIndex::new(l + 1, k), v));
            }
        }
        out
    }

    /// Echelon basis of the prefix; [`crate::Error::DependentBasis`] if the
    /// prefix is dependent.
    pub fn independence(&self, horizon: usize) -> Result<SpanBasis<S>> {
        SpanBasis::from_members(self.prefix(horizon).iter().map(|(_, v)| v))
    }

    /// Largest `m` such that `e_1, ..., e_m` lie in the span of the prefix.
    pub fn coordinates_exhausted(&self, horizon: usize) -> Result<i64> {
        let basis = self.independence(horizon)?;
        Ok(exhausted(&basis))
    }
}

pub(crate) fn exhausted<S: Scalar>(basis: &SpanBasis<S>) -> i64 {
    let mut m = 0;
    while basis.contains(&SparseVector::basis(m + 1)) {
        m += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::scalar::Exact;

    fn e(i: i64) -> SparseVector<Exact> {
        SparseVector::basis(i)
    }

    #[test]
    fn box_prefix_in_lex_order() {
        let set = AdaptedSet::new(vec![
            Chain::generated(|k| SparseVector::<Exact>::basis(2 * k as i64 - 1)),
            Chain::Finite(vec![e(2)]),
        ]);
        let prefix: Vec<_> = set.prefix(3).into_iter().map(|(i, _)| i).collect();
        assert_eq!(
            prefix,
            vec![
                ChainIndex::new(1, 1),
                ChainIndex::new(1, 2),
                ChainIndex::new(1, 3),
                ChainIndex::new(2, 1)
            ]
        );
        assert_eq!(set.coordinates_exhausted(3).unwrap(), 3);
    }

    #[test]
    fn dependence_is_detected() {
        let set = AdaptedSet::single_chain(vec![e(1), &e(1) + &e(2), e(2)]);
        assert!(set.independence(2).is_ok());
        assert_eq!(set.independence(3).unwrap_err(), Error::DependentBasis);
    }
}
