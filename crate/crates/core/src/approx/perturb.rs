use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use super::chains::ChainFamily;
use crate::error::{Error, Result};
use crate::index::ChainIndex;
use crate::norm::NormMode;
use crate::operator::{operator_norm_bound, Coverage, LocalSum, NormBound, OperatorExpr};
use crate::report::{ser_rational, ser_rational_opt};
use crate::scalar::{rational_to_string, simplify_down, Scalar};
use crate::shift::{recognize_generalized_shift, Recognition, ShiftCertificate, Verdict};

/// Share of `eps` spent by the schedule.
fn safety() -> BigRational {
    BigRational::new(9.into(), 10.into())
}

/// Certified upper bound of `||y^{l*}_{d_l}|| ||y^{l-1}_1||` for each
/// `l >= 2`.
pub fn correction_factors<S: Scalar>(
    family: &ChainFamily<S>,
    p: NormMode,
) -> BTreeMap<usize, BigRational> {
    (2..=family.len())
        .map(|l| {
            let f = family.functional(l, family.depth(l));
            let u = f.dual_norm(p).product(&family.vector(l - 1, 1).norm(p));
            (l, u.upper)
        })
        .collect()
}

/// `eps_l = 0.9 eps 2^{-(l-1)} / u_l`, rounded down, so that
/// `sum_l eps_l u_l <= 0.9 eps`.
pub fn epsilon_schedule_from_factors(
    factors: &BTreeMap<usize, BigRational>,
    eps: &BigRational,
) -> Result<BTreeMap<usize, BigRational>> {
    if !eps.is_positive() {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    factors
        .iter()
        .map(|(&l, u)| {
            if !u.is_positive() {
                return Err(Error::InvalidParameter(format!(
                    "factor bound for chain {l} must be positive"
                )));
            }
            let budget =
                safety() * eps / BigRational::from_integer(num_bigint::BigInt::one() << (l - 1));
            Ok((l, simplify_down(&(budget / u))))
        })
        .collect()
}

pub fn epsilon_schedule<S: Scalar>(
    family: &ChainFamily<S>,
    eps: &BigRational,
    p: NormMode,
) -> Result<BTreeMap<usize, BigRational>> {
    epsilon_schedule_from_factors(&correction_factors(family, p), eps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanEntry {
    pub chain: usize,
    #[serde(serialize_with = "ser_rational")]
    pub epsilon: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub factor_bound: BigRational,
    /// `epsilon * factor_bound`, zero when skipped.
    #[serde(serialize_with = "ser_rational")]
    pub term_bound: BigRational,
    pub skipped: bool,
    /// `y^{l-1 *}_1(S y^l_{d_l})` as a string, before correction.
    pub existing: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationPlan {
    #[serde(serialize_with = "ser_rational")]
    pub eps: BigRational,
    pub entries: Vec<PlanEntry>,
    /// Sum of the term bounds.
    #[serde(serialize_with = "ser_rational")]
    pub total_bound: BigRational,
}

impl PerturbationPlan {
    pub fn skipped(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().filter(|e| e.skipped).map(|e| e.chain)
    }

    pub fn epsilon(&self, chain: usize) -> Option<&BigRational> {
        self.entries
            .iter()
            .find(|e| e.chain == chain)
            .map(|e| &e.epsilon)
    }
}

/// Output of a perturbation pipeline.
#[derive(Clone, Debug)]
pub struct ApproximationResult<S> {
    pub input: OperatorExpr<S>,
    pub output: OperatorExpr<S>,
    pub family: ChainFamily<S>,
    pub plan: PerturbationPlan,
    /// Certified bound of `||output - input||`.
    pub distance: NormBound,
    pub recognition: Recognition<S>,
    pub trace: Vec<String>,
}

impl<S: Scalar> ApproximationResult<S> {
    pub fn certificate(&self) -> &ShiftCertificate<S> {
        &self.recognition.certificate
    }

    /// Immediate-predecessor coefficient of `y^l_{d_l}` in the certificate.
    pub fn junction_coefficient(&self, chain: usize) -> Option<S> {
        let position = self
            .family
            .shift_order()
            .iter()
            .position(|i| *i == ChainIndex::new(chain, self.family.depth(chain)))?;
        self.certificate()
            .immediate(ChainIndex::new(1, position + 1))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "chains": self.family.table(),
            "plan": self.plan,
            "distance_bound": rational_to_string(&self.distance.bound),
            "distance_exact": self.distance.exact,
            "certificate": self.recognition.certificate.summary(),
            "verdict": self.recognition.verdict,
            "trace": self.trace,
        })
    }
}

/// Perturbs `op` by rank-one terms `eps_l y^{l*}_{d_l} (x) y^{l-1}_1` so
/// that it becomes a generalised backward 1-shift in the order
/// `y^1_{d_1}, ..., y^1_1, y^2_{d_2}, ...`, and certifies the result.
///
/// A term is skipped when `S y^l_{d_l}` already has a nonzero coefficient on
/// `y^{l-1}_1`.
pub fn assemble_one_shift<S: Scalar>(
    op: &OperatorExpr<S>,
    family: &ChainFamily<S>,
    eps: &BigRational,
    p: NormMode,
) -> Result<ApproximationResult<S>> {
    let factors = correction_factors(family, p);
    let schedule = epsilon_schedule_from_factors(&factors, eps)?;
    let mut trace = vec![format!(
        "{} chains, {} vectors",
        family.len(),
        family.size()
    )];

    let mut corrections = Vec::new();
    let mut entries = Vec::new();
    let mut total = BigRational::zero();
    for (&l, epsilon) in &schedule {
        let end = family.vector(l, family.depth(l));
        let existing = family.functional(l - 1, 1).eval(&op.apply(end)?);
        let skipped = !existing.is_negligible(1.0);
        let factor = factors[&l].clone();
        let term_bound = if skipped {
            BigRational::zero()
        } else {
            corrections.push(OperatorExpr::rank_one(
                family.functional(l, family.depth(l)).clone(),
                family.vector(l - 1, 1).clone(),
                S::from_real(epsilon),
            ));
            epsilon * &factor
        };
        total += &term_bound;
        entries.push(PlanEntry {
            chain: l,
            epsilon: epsilon.clone(),
            factor_bound: factor,
            term_bound,
            skipped,
            existing: format!("{}", existing.to_json()),
        });
    }
    trace.push(format!(
        "{} corrections, {} skipped",
        corrections.len(),
        entries.iter().filter(|e| e.skipped).count()
    ));

    let distance = operator_norm_bound(&OperatorExpr::Sum(corrections.clone()), p)?;
    if distance.bound >= *eps {
        return Err(Error::InvariantViolation {
            condition: "distance",
            detail: format!(
                "correction bound {} is not below eps",
                rational_to_string(&distance.bound)
            ),
        });
    }
    let output = if corrections.is_empty() {
        op.clone()
    } else {
        let mut terms = vec![op.clone()];
        terms.extend(corrections);
        OperatorExpr::LocalSum(LocalSum::new(terms, Coverage::All, None))
    };

    let recognition = recognize_generalized_shift(&output, &family.adapted_set(), family.size())?;
    if recognition.verdict != Verdict::Yes {
        let at = recognition.first_failure.as_ref().map(|f| f.index);
        return Err(Error::CertificateFailure {
            index: at.unwrap_or(ChainIndex::new(1, 1)),
            reason: format!(
                "perturbed operator not recognised ({:?})",
                recognition.verdict
            ),
        });
    }
    trace.push(format!("recognised on {} vectors", family.size()));

    Ok(ApproximationResult {
        input: op.clone(),
        output,
        family: family.clone(),
        plan: PerturbationPlan {
            eps: eps.clone(),
            entries,
            total_bound: total,
        },
        distance,
        recognition,
        trace,
    })
}

/// Junction summary used in reports: the schedule value, and the bound it
/// contributes, per chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Junction {
    pub chain: usize,
    #[serde(serialize_with = "ser_rational_opt")]
    pub epsilon: Option<BigRational>,
    pub coefficient: String,
}

pub fn junctions<S: Scalar>(result: &ApproximationResult<S>) -> Vec<Junction> {
    (2..=result.family.len())
        .map(|l| Junction {
            chain: l,
            epsilon: result
                .plan
                .entries
                .iter()
                .find(|e| e.chain == l && !e.skipped)
                .map(|e| e.epsilon.clone()),
            coefficient: result
                .junction_coefficient(l)
                .map(|c| c.to_json().to_string())
                .unwrap_or_default(),
        })
        .collect()
}
