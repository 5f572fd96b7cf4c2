//! Compact corrections for mixtures of weighted forward and bilateral
//! shifts, and the pipeline that turns the corrected operator into a
//! generalised backward 1-shift.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use super::chains::{ChainBuilder, Provider};
use super::perturb::{assemble_one_shift, ApproximationResult};
use crate::error::{Error, Result};
use crate::norm::NormMode;
use crate::operator::{
    gk_density_report, operator_norm_bound, weight_null_subsequence, Coverage, Direction,
    DualNorms, GkDensityReport, Lane, LocalSum, Majorant, NormBound, OperatorExpr, WeightSequence,
    WeightedShift,
};
use crate::report::{ser_rational, ser_rational_vec};
use crate::scalar::{rational_to_string, Scalar};
use crate::vector::{Functional, SparseVector};

/// `I_1` forward chains and `I_2` bilateral chains on interleaved lanes: all
/// forward chains first, then the bilateral ones.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec<S> {
    pub forward: Vec<WeightSequence<S>>,
    pub bilateral: Vec<WeightSequence<S>>,
    pub norm: NormMode,
}

impl<S: Scalar> MixtureSpec<S> {
    pub fn forward(weights: WeightSequence<S>) -> Self {
        MixtureSpec {
            forward: vec![weights],
            bilateral: Vec::new(),
            norm: NormMode::L2,
        }
    }

    pub fn bilateral(weights: WeightSequence<S>) -> Self {
        MixtureSpec {
            forward: Vec::new(),
            bilateral: vec![weights],
            norm: NormMode::L2,
        }
    }

    pub fn convert<T: Scalar>(&self) -> MixtureSpec<T> {
        MixtureSpec {
            forward: self.forward.iter().map(WeightSequence::convert).collect(),
            bilateral: self.bilateral.iter().map(WeightSequence::convert).collect(),
            norm: self.norm,
        }
    }

    pub fn chain_count(&self) -> usize {
        self.forward.len() + self.bilateral.len()
    }

    pub fn is_bilateral(&self, chain: usize) -> bool {
        chain >= self.forward.len()
    }

    pub fn weights(&self, chain: usize) -> &WeightSequence<S> {
        if self.is_bilateral(chain) {
            &self.bilateral[chain - self.forward.len()]
        } else {
            &self.forward[chain]
        }
    }

    pub fn lane(&self, chain: usize) -> Lane {
        Lane::new(self.chain_count() as u32, chain as u32)
    }

    /// Coordinate of position `j` on chain `chain` (0-based).
    pub fn coordinate(&self, chain: usize, position: i64) -> i64 {
        self.lane(chain).coordinate(position)
    }

    /// The shift mixture `S`.
    pub fn operator(&self) -> Result<OperatorExpr<S>> {
        if self.chain_count() == 0 {
            return Err(Error::InvalidParameter(
                "a mixture needs at least one chain".into(),
            ));
        }
        Ok(OperatorExpr::Sum(
            (0..self.chain_count())
                .map(|c| {
                    OperatorExpr::WeightedShift(WeightedShift {
                        direction: if self.is_bilateral(c) {
                            Direction::Bilateral
                        } else {
                            Direction::Forward
                        },
                        weights: self.weights(c).clone(),
                        lane: self.lane(c),
                    })
                })
                .collect(),
        ))
    }

    /// Positions of chain `chain` inside a horizon `n`: `1..=n` for forward
    /// chains, `1, 0, 2, -1, ..., n, -n + 1, -n` for bilateral ones.
    pub fn horizon_positions(&self, chain: usize, n: i64) -> Vec<i64> {
        if !self.is_bilateral(chain) {
            return (1..=n).collect();
        }
        let mut out = Vec::with_capacity(2 * n as usize + 1);
        for t in 0..=n {
            if t < n {
                out.push(t + 1);
            }
            out.push(-t);
        }
        out
    }

    /// All horizon coordinates, interleaved across chains.
    pub fn horizon_coordinates(&self, n: i64) -> Vec<i64> {
        let lists: Vec<Vec<i64>> = (0..self.chain_count())
            .map(|c| {
                self.horizon_positions(c, n)
                    .into_iter()
                    .map(|p| self.coordinate(c, p))
                    .collect()
            })
            .collect();
        let longest = lists.iter().map(Vec::len).max().unwrap_or(0);
        (0..longest)
            .flat_map(|t| lists.iter().filter_map(move |l| l.get(t).copied()))
            .collect()
    }
}

/// Share `w_c` of the threshold budget given to chain `c`: `2^{-(c+1)}`,
/// with the last chain taking the remainder so the shares sum to 1.
pub fn chain_share(chain: usize, count: usize) -> BigRational {
    let exp = if chain + 1 == count { chain } else { chain + 1 };
    BigRational::new(BigInt::one(), BigInt::one() << exp)
}

/// `eps_j` (or `delta_j`) for chain `c`: `0.9 * budget * w_c * 2^{-j}`.
pub fn threshold(budget: &BigRational, chain: usize, count: usize, j: usize) -> BigRational {
    BigRational::new(9.into(), 10.into()) * budget * chain_share(chain, count)
        / BigRational::from_integer(BigInt::one() << j)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainCuts {
    pub chain: usize,
    pub direction: Direction,
    #[serde(serialize_with = "ser_rational_vec")]
    pub thresholds: Vec<BigRational>,
    /// Strictly increasing positions `n_{k_j}` (or `m_{k_j}`).
    pub cuts: Vec<i64>,
}

impl ChainCuts {
    /// Smallest cut `>= position`.
    pub fn next_cut(&self, position: i64) -> Option<i64> {
        self.cuts.iter().copied().find(|&c| c >= position)
    }
}

#[derive(Clone, Debug)]
pub struct CompactCorrection<S> {
    pub spec: MixtureSpec<S>,
    /// The certified norm of `K` is below `eps / 2`.
    pub eps: BigRational,
    pub horizon: i64,
    pub cuts: Vec<ChainCuts>,
    pub k: OperatorExpr<S>,
    pub s_minus_k: OperatorExpr<S>,
    pub norm: NormBound,
    /// Majorant of the terms of `K` beyond the last materialised cut.
    pub tail: BigRational,
    pub density: GkDensityReport,
    /// Coordinates whose kernel exponent differs from the cut-distance
    /// formula.
    pub exponent_mismatches: Vec<i64>,
}

impl<S: Scalar> CompactCorrection<S> {
    /// Kernel exponent of position `p` on chain `c` under `S - K`: the
    /// number of steps to reach the next cut, or a zero weight, plus one.
    pub fn expected_exponent(&self, chain: usize, position: i64) -> Option<usize> {
        let cut = self.cuts[chain].next_cut(position)?;
        let weights = self.spec.weights(chain);
        let mut t = position;
        while t < cut && !weights.weight(t).is_none_or(|w| w.is_zero()) {
            t += 1;
        }
        Some((t - position + 1) as usize)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "eps": rational_to_string(&self.eps),
            "horizon": self.horizon,
            "cuts": self.cuts,
            "k_norm_bound": rational_to_string(&self.norm.bound),
            "k_tail_bound": rational_to_string(&self.tail),
            "dense_on_horizon": self.density.dense_on_horizon,
            "max_exponent": self.density.max_exponent(),
            "exponent_mismatches": self.exponent_mismatches,
        })
    }
}

fn correction_sum<S: Scalar>(
    spec: &MixtureSpec<S>,
    cuts: &[ChainCuts],
    sign: &S,
    tail: &BigRational,
) -> Result<OperatorExpr<S>> {
    let mut terms = Vec::new();
    for cut in cuts {
        let weights = spec.weights(cut.chain);
        for &n in &cut.cuts {
            let a = weights.weight(n).ok_or(Error::HorizonTooShort {
                needed: n,
                available: weights.available_up_to(),
            })?;
            terms.push(OperatorExpr::rank_one(
                Functional::coordinate(spec.coordinate(cut.chain, n)),
                SparseVector::basis(spec.coordinate(cut.chain, n + 1)),
                a * sign.clone(),
            ));
        }
    }
    let limits = cuts
        .iter()
        .map(|c| *c.cuts.last().expect("cuts are nonempty"))
        .collect();
    let half = BigRational::new(1.into(), 2.into());
    Ok(OperatorExpr::LocalSum(LocalSum::new(
        terms,
        Coverage::Lanes(limits),
        Some(Majorant {
            first: tail * &half,
            ratio: half,
        }),
    )))
}

/// Builds `K = sum a_{n_{k_j}} e*_{n_{k_j}} (x) e_{n_{k_j}+1}` over every
/// chain, with thresholds summing below `eps / 2`, materialising cuts until
/// each chain has one at or beyond `horizon`. Cut positions are searched up
/// to `scan_limit`.
pub fn shift_mixture_correction<S: Scalar>(
    spec: &MixtureSpec<S>,
    eps: &BigRational,
    horizon: i64,
    scan_limit: i64,
) -> Result<CompactCorrection<S>> {
    if !eps.is_positive() {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    if horizon < 1 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let s = spec.operator()?;
    let budget = eps / BigRational::from_integer(2.into());
    let count = spec.chain_count();
    let norms = DualNorms::normalised();

    let mut cuts = Vec::with_capacity(count);
    let mut tail = BigRational::zero();
    for c in 0..count {
        let mut chain = ChainCuts {
            chain: c,
            direction: if spec.is_bilateral(c) {
                Direction::Bilateral
            } else {
                Direction::Forward
            },
            thresholds: Vec::new(),
            cuts: Vec::new(),
        };
        let mut next = 1;
        while chain.cuts.last().is_none_or(|&last| last < horizon) {
            let t = threshold(&budget, c, count, chain.thresholds.len() + 1);
            let found = weight_null_subsequence(
                spec.weights(c),
                &norms,
                std::slice::from_ref(&t),
                next..=scan_limit,
            )
            .map_err(|e| match e {
                Error::NotFoundWithinHorizon { horizon, .. } => Error::NotFoundWithinHorizon {
                    chain: Some(c + 1),
                    horizon,
                },
                other => other,
            })?;
            let n = found.picks[0].expect("a single threshold was met");
            chain.thresholds.push(t);
            chain.cuts.push(n);
            next = n + 1;
        }
        tail += threshold(&budget, c, count, chain.thresholds.len());
        cuts.push(chain);
    }

    let k = correction_sum(spec, &cuts, &S::one(), &tail)?;
    let minus_k = correction_sum(spec, &cuts, &(-S::one()), &tail)?;
    let s_minus_k = OperatorExpr::Sum(vec![s, minus_k]);
    let norm = operator_norm_bound(&k, spec.norm)?;
    if norm.bound >= budget {
        return Err(Error::InvariantViolation {
            condition: "compact-correction-norm",
            detail: format!(
                "||K|| <= {} is not below eps/2",
                rational_to_string(&norm.bound)
            ),
        });
    }

    for cut in &cuts {
        for &n in &cut.cuts {
            let image = s_minus_k.apply(&SparseVector::basis(spec.coordinate(cut.chain, n)))?;
            if !image.is_zero() {
                return Err(Error::InvariantViolation {
                    condition: "cut-annihilation",
                    detail: format!(
                        "(S-K) does not annihilate position {n} of chain {}",
                        cut.chain + 1
                    ),
                });
            }
        }
    }

    let k_max = kernel_search_bound(&cuts, horizon);
    let density = gk_density_report(&s_minus_k, spec.horizon_coordinates(horizon), k_max)?;
    let mut correction = CompactCorrection {
        spec: spec.clone(),
        eps: eps.clone(),
        horizon,
        cuts,
        k,
        s_minus_k,
        norm,
        tail,
        density,
        exponent_mismatches: Vec::new(),
    };
    let mut mismatches = Vec::new();
    for c in 0..count {
        for p in spec.horizon_positions(c, horizon) {
            let coordinate = spec.coordinate(c, p);
            if correction.density.exponent(coordinate) != correction.expected_exponent(c, p) {
                mismatches.push(coordinate);
            }
        }
    }
    correction.exponent_mismatches = mismatches;
    Ok(correction)
}

/// Exponents are at most the distance from `-horizon` to the last cut.
fn kernel_search_bound(cuts: &[ChainCuts], horizon: i64) -> usize {
    let last = cuts
        .iter()
        .filter_map(|c| c.cuts.last())
        .max()
        .copied()
        .unwrap_or(horizon);
    (last + horizon + 2) as usize
}

/// `S - K` followed by the 1-shift construction on it.
#[derive(Clone, Debug)]
pub struct MixtureApproximation<S> {
    pub correction: CompactCorrection<S>,
    /// Perturbation of `S - K`; its `output` is the 1-shift `B`.
    pub shift: ApproximationResult<S>,
    /// `||K|| + ||(S - K) - B||`, certified.
    pub distance: BigRational,
}

impl<S: Scalar> MixtureApproximation<S> {
    pub fn to_json(&self) -> Value {
        json!({
            "correction": self.correction.to_json(),
            "one_shift": self.shift.to_json(),
            "distance_bound": rational_to_string(&self.distance),
        })
    }
}

#[derive(Serialize)]
struct DistanceSplit {
    #[serde(serialize_with = "ser_rational")]
    k: BigRational,
    #[serde(serialize_with = "ser_rational")]
    perturbation: BigRational,
}

/// `B` with `||S - B|| <= ||K|| + ||(S - K) - B|| < eps`: the compact
/// correction takes `eps / 2`, the 1-shift perturbation of `S - K` the other
/// half. Chains are built from the standard basis vectors of the horizon.
pub fn approximate_mixture_by_one_shift<S: Scalar>(
    spec: &MixtureSpec<S>,
    eps: &BigRational,
    horizon: i64,
    scan_limit: i64,
) -> Result<MixtureApproximation<S>> {
    let correction = shift_mixture_correction(spec, eps, horizon, scan_limit)?;
    if !correction.density.dense_on_horizon {
        return Err(Error::InvariantViolation {
            condition: "dense-generalised-kernel",
            detail: "S - K leaves a horizon coordinate outside its generalised kernel".into(),
        });
    }
    let coordinates = spec.horizon_coordinates(horizon);
    let provider =
        Provider::generated(move |n| coordinates.get(n - 1).map(|&c| SparseVector::basis(c)));
    let mut builder = ChainBuilder::new(&correction.s_minus_k, provider, correction.density.k_max);
    builder.build_all()?;
    let family = builder.finish()?;
    let half = eps / BigRational::from_integer(2.into());
    let mut shift = assemble_one_shift(&correction.s_minus_k, &family, &half, spec.norm)?;
    let distance = &correction.norm.bound + &shift.distance.bound;
    if distance >= *eps {
        return Err(Error::InvariantViolation {
            condition: "distance",
            detail: format!("{} is not below eps", rational_to_string(&distance)),
        });
    }
    shift.trace.insert(
        0,
        format!(
            "compact correction: {} cuts, ||K|| <= {}",
            correction.cuts.iter().map(|c| c.cuts.len()).sum::<usize>(),
            rational_to_string(&correction.norm.bound)
        ),
    );
    shift.trace.push(
        serde_json::to_string(&DistanceSplit {
            k: correction.norm.bound.clone(),
            perturbation: shift.distance.bound.clone(),
        })
        .expect("serialisable"),
    );
    Ok(MixtureApproximation {
        correction,
        shift,
        distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::TailRule;
    use crate::scalar::{parse_rational, Exact};
    use crate::shift::Verdict;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn one_over_n() -> WeightSequence<Exact> {
        WeightSequence::from_rule(TailRule::one_over_n())
    }

    #[test]
    fn shares_sum_to_one() {
        for count in 1..6 {
            let total: BigRational = (0..count).map(|c| chain_share(c, count)).sum();
            assert_eq!(total, BigRational::one());
        }
    }

    #[test]
    fn bilateral_positions_alternate() {
        let spec = MixtureSpec::bilateral(one_over_n());
        assert_eq!(spec.horizon_positions(0, 2), vec![1, 0, 2, -1, -2]);
        let mixed = MixtureSpec {
            forward: vec![one_over_n()],
            bilateral: vec![one_over_n()],
            norm: NormMode::L2,
        };
        assert_eq!(mixed.horizon_coordinates(1), vec![1, 2, 0, -2]);
    }

    #[test]
    fn forward_one_over_n() {
        let spec = MixtureSpec::forward(one_over_n());
        let k = shift_mixture_correction(&spec, &q("1/5"), 30, 1000).unwrap();
        // 1/n < 0.09 * 2^{-j}: n = 23, 45
        assert_eq!(k.cuts[0].cuts, vec![23, 45]);
        assert!(k.norm.bound < q("1/10"));
        assert!(k.density.dense_on_horizon);
        assert!(k.exponent_mismatches.is_empty());
        assert_eq!(k.density.exponent(1), Some(23));
        assert_eq!(k.density.exponent(24), Some(22));
    }

    #[test]
    fn bilateral_lead_in() {
        let spec = MixtureSpec::bilateral(one_over_n());
        let k = shift_mixture_correction(&spec, &q("1/5"), 20, 1000).unwrap();
        assert!(k.density.dense_on_horizon);
        assert!(k.exponent_mismatches.is_empty());
        // e_{-5} walks through 0 to the first cut
        let first = k.cuts[0].cuts[0];
        assert_eq!(
            k.density.exponent(spec.coordinate(0, -5)),
            Some((first + 5 + 1) as usize)
        );
    }

    #[test]
    fn constant_weights_have_no_cut() {
        let spec = MixtureSpec::forward(WeightSequence::constant(Exact::from_int(1)));
        assert_eq!(
            shift_mixture_correction(&spec, &q("1/5"), 10, 500).unwrap_err(),
            Error::NotFoundWithinHorizon {
                chain: Some(1),
                horizon: 500
            }
        );
    }

    #[test]
    fn end_to_end_forward() {
        let spec = MixtureSpec::forward(one_over_n());
        let r = approximate_mixture_by_one_shift(&spec, &q("1/5"), 30, 1000).unwrap();
        assert!(r.distance < q("1/5"));
        assert_eq!(r.shift.recognition.verdict, Verdict::Yes);
        r.shift.certificate().verify(&r.shift.output).unwrap();
    }

    #[test]
    fn mixed_lanes() {
        let spec = MixtureSpec {
            forward: vec![WeightSequence::from_rule(TailRule::geometric(
                Exact::from_int(1),
                Exact::from_ratio(1, 2),
            ))],
            bilateral: vec![one_over_n()],
            norm: NormMode::L1,
        };
        let r = approximate_mixture_by_one_shift(&spec, &q("1/5"), 12, 1000).unwrap();
        assert!(r.distance < q("1/5"));
        assert!(r.correction.exponent_mismatches.is_empty());
    }
}
