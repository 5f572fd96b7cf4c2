use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::index::ChainIndex;
use crate::norm::NormMode;
use crate::operator::{generalized_kernel_exponent, OperatorExpr};
use crate::scalar::Scalar;
use crate::shift::AdaptedSet;
use crate::span::{BiorthogonalSystem, SpanBasis};
use crate::vector::{Functional, SparseVector};

/// Smallest `r >= 1` with `S^r y` in `span{y, ..., S^{r-1} y} + span(E)`.
///
/// The quotient of `S` by `E` is nilpotent on the `r`-dimensional invariant
/// subspace spanned by the cosets of `y, ..., S^{r-1} y`, so in fact
/// `S^r y` lies in `span(E)`; this is asserted.
pub fn chain_length<S: Scalar>(
    op: &OperatorExpr<S>,
    y: &SparseVector<S>,
    previous: &SpanBasis<S>,
    k_max: usize,
) -> Result<usize> {
    if previous.contains(y) {
        return Err(Error::AlreadyInSpan);
    }
    let mut scratch = previous.clone();
    scratch.insert(y.clone())?;
    let mut power = y.clone();
    for r in 1..=k_max {
        power = op.apply(&power)?;
        if scratch.contains(&power) {
            if !previous.contains(&power) {
                return Err(Error::InvariantViolation {
                    condition: "shift-cond2",
                    detail: format!("S^{r} y is not in the previous span"),
                });
            }
            return Ok(r);
        }
        scratch.insert(power.clone())?;
    }
    Err(Error::NotNilpotentModulo { k_max })
}

/// A dense sequence `x_1, x_2, ...` of vectors, indexed from 1.
#[derive(Clone)]
pub enum Provider<S> {
    /// `x_n = e_n`.
    Standard,
    /// A finite list.
    Sequence(Vec<SparseVector<S>>),
    /// `n -> x_n`, `None` once exhausted.
    Generated(Arc<dyn Fn(usize) -> Option<SparseVector<S>> + Send + Sync>),
}

impl<S: Scalar> Provider<S> {
    pub fn generated(
        rule: impl Fn(usize) -> Option<SparseVector<S>> + Send + Sync + 'static,
    ) -> Self {
        Provider::Generated(Arc::new(rule))
    }

    pub fn get(&self, n: usize) -> Option<SparseVector<S>> {
        match self {
            Provider::Standard => Some(SparseVector::basis(n as i64)),
            Provider::Sequence(v) => v.get(n.checked_sub(1)?).cloned(),
            Provider::Generated(f) => f(n),
        }
    }
}

impl<S> fmt::Debug for Provider<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provider::Standard => f.write_str("Standard"),
            Provider::Sequence(v) => write!(f, "Sequence(len {})", v.len()),
            Provider::Generated(_) => f.write_str("Generated(..)"),
        }
    }
}

/// Chain `l`: `y^l_1 = x_source` and `y^l_{j+1} = S y^l_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyChain<S> {
    pub source: usize,
    pub vectors: Vec<SparseVector<S>>,
}

impl<S> FamilyChain<S> {
    pub fn depth(&self) -> usize {
        self.vectors.len()
    }
}

/// The chains built from a dense sequence, with the biorthogonal
/// functionals of the whole family.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainFamily<S> {
    pub chains: Vec<FamilyChain<S>>,
    /// The provided vectors `x_1, ..., x_N` consumed while building.
    pub provided: Vec<SparseVector<S>>,
    /// `y^{l*}_j`, vanishing on every other family member.
    pub functionals: BTreeMap<ChainIndex, Functional<S>>,
}

/// The six conditions of the construction, in checking order.
pub const INVARIANTS: [&str; 6] = [
    "shift-cond",
    "shift-cond2",
    "ind-cond",
    "useupxns",
    "use-only-xns",
    "ys-lin-indep",
];

impl<S: Scalar> ChainFamily<S> {
    /// Number of chains `L`.
    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    /// Total number of vectors.
    pub fn size(&self) -> usize {
        self.chains.iter().map(FamilyChain::depth).sum()
    }

    pub fn depth(&self, l: usize) -> usize {
        self.chains[l - 1].depth()
    }

    /// `y^l_j`, 1-based.
    pub fn vector(&self, l: usize, j: usize) -> &SparseVector<S> {
        &self.chains[l - 1].vectors[j - 1]
    }

    pub fn functional(&self, l: usize, j: usize) -> &Functional<S> {
        &self.functionals[&ChainIndex::new(l, j)]
    }

    /// All `y^l_j` with `(l, j)` in lexicographic order.
    pub fn flattened(&self) -> Vec<(ChainIndex, &SparseVector<S>)> {
        self.chains
            .iter()
            .enumerate()
            .flat_map(|(l, c)| {
                c.vectors
                    .iter()
                    .enumerate()
                    .map(move |(j, v)| (ChainIndex::new(l + 1, j + 1), v))
            })
            .collect()
    }

    /// Ordered basis of `E_m`.
    pub fn e_basis(&self, m: usize) -> Vec<&SparseVector<S>> {
        self.chains[..m]
            .iter()
            .flat_map(|c| c.vectors.iter())
            .collect()
    }

    /// `y^1_{d_1}, ..., y^1_1, y^2_{d_2}, ..., y^2_1, ...`, the order in
    /// which the perturbed operator is a backward 1-shift.
    pub fn shift_order(&self) -> Vec<ChainIndex> {
        self.chains
            .iter()
            .enumerate()
            .flat_map(|(l, c)| {
                (1..=c.depth())
                    .rev()
                    .map(move |j| ChainIndex::new(l + 1, j))
            })
            .collect()
    }

    /// The single-chain adapted set in [`ChainFamily::shift_order`].
    pub fn adapted_set(&self) -> AdaptedSet<S> {
        AdaptedSet::single_chain(
            self.shift_order()
                .into_iter()
                .map(|i| self.vector(i.chain, i.position).clone())
                .collect(),
        )
    }

    /// Checks every construction condition exactly, plus biorthogonality of
    /// the functionals against the whole family.
    pub fn check_invariants(&self, op: &OperatorExpr<S>) -> Result<()> {
        let violation = |condition: &'static str, detail: String| {
            Err(Error::InvariantViolation { condition, detail })
        };
        let mut e_prev = SpanBasis::<S>::new();
        for (m, chain) in self.chains.iter().enumerate() {
            let l = m + 1;
            for j in 1..chain.depth() {
                if op.apply(&chain.vectors[j - 1])? != chain.vectors[j] {
                    return violation("shift-cond", format!("S y^{l}_{j} != y^{l}_{}", j + 1));
                }
            }
            let last = op.apply(chain.vectors.last().expect("chains are nonempty"))?;
            if !e_prev.contains(&last) {
                return violation(
                    "shift-cond2",
                    format!("S y^{l}_{} is not in E_{m}", chain.depth()),
                );
            }
            for v in &chain.vectors {
                if e_prev.insert(v.clone()).is_err() {
                    let condition = if SpanBasis::from_members(&chain.vectors).is_ok() {
                        "ind-cond"
                    } else {
                        "ys-lin-indep"
                    };
                    return violation(
                        condition,
                        format!("chain {l} is dependent on earlier vectors"),
                    );
                }
            }
            // E_n only grows, so x_n in E_n gives x_1..x_l in E_l
            let Some(x) = self.provided.get(m) else {
                return violation("useupxns", format!("x_{l} was never provided"));
            };
            if !e_prev.contains(x) {
                return violation("useupxns", format!("x_{l} is not in E_{l}"));
            }
            if self.provided.get(chain.source - 1) != Some(&chain.vectors[0]) {
                return violation("use-only-xns", format!("y^{l}_1 != x_{}", chain.source));
            }
        }
        for (index, f) in &self.functionals {
            for (other, v) in self.flattened() {
                let expected = if other == *index { S::one() } else { S::zero() };
                let value = f.eval(v);
                if !(value.clone() - expected).is_negligible(1.0) {
                    return violation(
                        "biorthogonality",
                        format!("y*{index} pairs to {value:?} with y{other}"),
                    );
                }
            }
        }
        Ok(())
    }

    /// Chain table `(l, d_l, source n)` as JSON.
    pub fn table(&self) -> Value {
        Value::Array(
            self.chains
                .iter()
                .enumerate()
                .map(|(l, c)| json!({"chain": l + 1, "depth": c.depth(), "source": c.source}))
                .collect(),
        )
    }

    /// Certified dual norms of all functionals.
    pub fn dual_norms(&self, p: NormMode) -> BTreeMap<ChainIndex, crate::norm::Norm> {
        self.functionals
            .iter()
            .map(|(i, f)| (*i, f.dual_norm(p)))
            .collect()
    }
}

/// Builds chains one at a time, following the construction: each new chain
/// starts at the smallest-index `x_n` outside the current span.
pub struct ChainBuilder<'a, S> {
    op: &'a OperatorExpr<S>,
    provider: Provider<S>,
    k_max: usize,
    span: SpanBasis<S>,
    chains: Vec<FamilyChain<S>>,
    provided: Vec<SparseVector<S>>,
}

impl<'a, S: Scalar> ChainBuilder<'a, S> {
    pub fn new(op: &'a OperatorExpr<S>, provider: Provider<S>, k_max: usize) -> Self {
        ChainBuilder {
            op,
            provider,
            k_max,
            span: SpanBasis::new(),
            chains: Vec::new(),
            provided: Vec::new(),
        }
    }

    pub fn chains(&self) -> &[FamilyChain<S>] {
        &self.chains
    }

    pub fn size(&self) -> usize {
        self.span.len()
    }

    /// Builds the next chain; `Ok(None)` when the provider is exhausted.
    pub fn next_chain(&mut self) -> Result<Option<&FamilyChain<S>>> {
        let (source, start) = loop {
            let n = self.provided.len() + 1;
            let Some(x) = self.provider.get(n) else {
                return Ok(None);
            };
            if n == 1 && x.is_zero() {
                return Err(Error::InvalidParameter("x_1 must be nonzero".into()));
            }
            if generalized_kernel_exponent(self.op, &x, self.k_max)?.is_none() {
                return Err(Error::NotInGeneralizedKernel {
                    n,
                    k_max: self.k_max,
                });
            }
            self.provided.push(x.clone());
            if !self.span.contains(&x) {
                break (n, x);
            }
        };
        let d = chain_length(self.op, &start, &self.span, self.k_max)?;
        let mut vectors = Vec::with_capacity(d);
        let mut y = start;
        for j in 0..d {
            if j > 0 {
                y = self.op.apply(&y)?;
            }
            self.span
                .insert(y.clone())
                .map_err(|_| Error::InvariantViolation {
                    condition: "ind-cond",
                    detail: format!("chain {} meets the previous span", self.chains.len() + 1),
                })?;
            vectors.push(y.clone());
        }
        self.chains.push(FamilyChain { source, vectors });
        Ok(self.chains.last())
    }

    /// Builds chains until `L` exist.
    pub fn build(&mut self, chains: usize) -> Result<()> {
        while self.chains.len() < chains {
            if self.next_chain()?.is_none() {
                return Err(Error::ProviderExhausted {
                    built: self.chains.len(),
                    requested: chains,
                });
            }
        }
        Ok(())
    }

    /// Builds chains until the family has at least `size` vectors.
    pub fn build_until_size(&mut self, size: usize) -> Result<()> {
        while self.size() < size {
            if self.next_chain()?.is_none() {
                return Err(Error::ProviderExhausted {
                    built: self.chains.len(),
                    requested: self.chains.len() + 1,
                });
            }
        }
        Ok(())
    }

    /// Builds chains until the provider is exhausted.
    pub fn build_all(&mut self) -> Result<()> {
        while self.next_chain()?.is_some() {}
        Ok(())
    }

    /// Computes the functionals and checks every invariant.
    pub fn finish(self) -> Result<ChainFamily<S>> {
        let flat: Vec<SparseVector<S>> =
            self.chains.iter().flat_map(|c| c.vectors.clone()).collect();
        let system = BiorthogonalSystem::new(&flat)?;
        let mut functionals = BTreeMap::new();
        let mut t = 0;
        for (l, chain) in self.chains.iter().enumerate() {
            for j in 1..=chain.depth() {
                functionals.insert(ChainIndex::new(l + 1, j), system.functional(t));
                t += 1;
            }
        }
        let family = ChainFamily {
            chains: self.chains,
            provided: self.provided,
            functionals,
        };
        family.check_invariants(self.op)?;
        Ok(family)
    }
}

/// Builds `L` chains from `provider`. Every provided vector is checked to
/// be annihilated by some power `<= k_max`.
pub fn build_chains<S: Scalar>(
    op: &OperatorExpr<S>,
    provider: Provider<S>,
    chains: usize,
    k_max: usize,
) -> Result<ChainFamily<S>> {
    let mut builder = ChainBuilder::new(op, provider, k_max);
    builder.build(chains)?;
    builder.finish()
}

/// Per-condition outcome, for reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantReport {
    pub checked: Vec<&'static str>,
    pub holds: bool,
    pub violation: Option<String>,
}

impl InvariantReport {
    pub fn of<S: Scalar>(family: &ChainFamily<S>, op: &OperatorExpr<S>) -> Result<Self> {
        let mut checked = INVARIANTS.to_vec();
        checked.push("biorthogonality");
        match family.check_invariants(op) {
            Ok(()) => Ok(InvariantReport {
                checked,
                holds: true,
                violation: None,
            }),
            Err(e @ Error::InvariantViolation { .. }) => Ok(InvariantReport {
                checked,
                holds: false,
                violation: Some(e.to_string()),
            }),
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::nilpotent_model;
    use crate::scalar::Exact;

    fn e(i: i64) -> SparseVector<Exact> {
        SparseVector::basis(i)
    }

    fn depths(f: &ChainFamily<Exact>) -> Vec<usize> {
        f.chains.iter().map(FamilyChain::depth).collect()
    }

    #[test]
    fn chain_length_examples() {
        let j3 = nilpotent_model::<Exact>(&[(3, 1)]).unwrap();
        assert_eq!(chain_length(&j3, &e(1), &SpanBasis::new(), 10).unwrap(), 3);
        let prev = SpanBasis::from_members(&[e(1), e(2), e(3)]).unwrap();
        assert_eq!(chain_length(&j3, &e(4), &prev, 10).unwrap(), 1);
        assert_eq!(
            chain_length(&j3, &e(2), &prev, 10),
            Err(Error::AlreadyInSpan)
        );
    }

    #[test]
    fn chain_ending_in_previous_span() {
        // S e_5 = e_6, S e_6 = e_1
        let s = OperatorExpr::Sum(vec![
            OperatorExpr::rank_one(Functional::coordinate(5), e(6), Exact::from_int(1)),
            OperatorExpr::rank_one(Functional::coordinate(6), e(1), Exact::from_int(1)),
        ]);
        let prev = SpanBasis::from_members(&[e(1)]).unwrap();
        assert_eq!(chain_length(&s, &e(5), &prev, 10).unwrap(), 2);
    }

    #[test]
    fn not_nilpotent_modulo() {
        let id = OperatorExpr::identity(Exact::from_int(2));
        // S y = 2 y lies in span{y}, but not in the empty previous span
        assert!(matches!(
            chain_length(&id, &e(1), &SpanBasis::new(), 5),
            Err(Error::InvariantViolation { .. })
        ));
        let shift = OperatorExpr::weighted_shift(
            crate::operator::Direction::Forward,
            crate::operator::WeightSequence::constant(Exact::from_int(1)),
        );
        assert_eq!(
            chain_length(&shift, &e(1), &SpanBasis::new(), 5),
            Err(Error::NotNilpotentModulo { k_max: 5 })
        );
    }

    #[test]
    fn jordan_three_plus_zero() {
        let j3 = nilpotent_model::<Exact>(&[(3, 1)]).unwrap();
        let f = build_chains(&j3, Provider::Standard, 3, 20).unwrap();
        assert_eq!(depths(&f), vec![3, 1, 1]);
        assert_eq!(f.chains[0].vectors, vec![e(1), e(2), e(3)]);
        assert_eq!(f.chains[1].source, 4);
        assert_eq!(f.chains[2].vectors, vec![e(5)]);
    }

    #[test]
    fn zero_operator_gives_singletons() {
        let f = build_chains(&OperatorExpr::<Exact>::zero(), Provider::Standard, 4, 5).unwrap();
        assert_eq!(depths(&f), vec![1, 1, 1, 1]);
        for (l, c) in f.chains.iter().enumerate() {
            assert_eq!(c.vectors, vec![e(l as i64 + 1)]);
        }
    }

    #[test]
    fn two_jordan_blocks() {
        let n = nilpotent_model::<Exact>(&[(2, 1), (2, 3)]).unwrap();
        let f = build_chains(&n, Provider::Standard, 2, 10).unwrap();
        assert_eq!(f.chains[0].vectors, vec![e(1), e(2)]);
        assert_eq!(f.chains[1].vectors, vec![e(3), e(4)]);
    }

    #[test]
    fn provided_vectors_must_be_in_the_generalised_kernel() {
        let shift = OperatorExpr::weighted_shift(
            crate::operator::Direction::Forward,
            crate::operator::WeightSequence::constant(Exact::from_int(1)),
        );
        assert_eq!(
            build_chains(&shift, Provider::Standard, 1, 8),
            Err(Error::NotInGeneralizedKernel { n: 1, k_max: 8 })
        );
    }

    #[test]
    fn finite_provider_runs_out() {
        let j3 = nilpotent_model::<Exact>(&[(3, 1)]).unwrap();
        let provider = Provider::Sequence(vec![e(1), e(2), e(4)]);
        assert_eq!(
            build_chains(&j3, provider, 3, 10),
            Err(Error::ProviderExhausted {
                built: 2,
                requested: 3
            })
        );
    }

    #[test]
    fn dense_start_vector() {
        // x_1 = e_1 + e_2 under J_3: chain (e1+e2, e2+e3, e3)
        let j3 = nilpotent_model::<Exact>(&[(3, 1)]).unwrap();
        let provider = Provider::Sequence(vec![&e(1) + &e(2), e(1), e(2), e(3), e(4)]);
        let f = build_chains(&j3, provider, 2, 10).unwrap();
        assert_eq!(depths(&f), vec![3, 1]);
        assert_eq!(f.chains[1].source, 5);
        assert_eq!(
            f.shift_order(),
            vec![
                ChainIndex::new(1, 3),
                ChainIndex::new(1, 2),
                ChainIndex::new(1, 1),
                ChainIndex::new(2, 1)
            ]
        );
    }
}
