use serde::Serialize;

use super::adapted::AdaptedSet;
use super::recognize::{recognize_generalized_shift, Failure, Verdict};
use super::witness::{LemmaWitnesses, MembershipReport};
use crate::error::{Error, Result};
use crate::operator::{generalized_kernel_exponent, OperatorExpr};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MullerVerdict {
    CriterionSatisfiedOnHorizon,
    Fails,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MullerReport {
    pub verdict: MullerVerdict,
    pub probe_horizon: usize,
    pub r_max: usize,
    pub recognition: Verdict,
    pub first_failure: Option<Failure>,
    /// Largest `m` with `e_1..e_m` in the span of the probed prefix.
    pub coordinates_exhausted: i64,
    pub entries: Vec<MembershipReport>,
}

/// Checks, for every adapted vector of the probe prefix, membership in the
/// generalised kernel and in `op^r(X)` for `r = 1..=r_max`.
///
/// The set is recognised at horizon `probe_horizon + r_max` so that the
/// chain vectors preimages are built from are enumerated. Without a
/// certificate the kernel search falls back to `k_max` and no preimages are
/// attempted.
pub fn muller_hypothesis_check<S: Scalar>(
    op: &OperatorExpr<S>,
    set: &AdaptedSet<S>,
    probe_horizon: usize,
    r_max: usize,
    k_max: usize,
) -> Result<MullerReport> {
    let recognition = recognize_generalized_shift(op, set, probe_horizon + r_max)?;
    let cert = &recognition.certificate;
    let mut witnesses = LemmaWitnesses::new(op, cert)?;
    let probe = set.prefix(probe_horizon);
    let coordinates_exhausted = set.coordinates_exhausted(probe_horizon)?;

    let mut entries = Vec::with_capacity(probe.len());
    for (index, x) in &probe {
        let position = cert
            .position(*index)
            .expect("probe is inside the recognised prefix");
        // the position bound is only implied once every predecessor is certified
        let certified = cert.rows.range(..=*index).count() == position;
        let kernel_exponent = if certified {
            Some(witnesses.kernel(*index)?)
        } else {
            generalized_kernel_exponent(op, x, k_max)?
        };
        let mut hyperrange_orders = Vec::new();
        let mut failure = None;
        if recognition.verdict == Verdict::No {
            failure = Some("no generalised shift certificate".to_string());
        } else {
            for r in 1..=r_max {
                match witnesses.hyperrange(*index, r) {
                    Ok(_) => hyperrange_orders.push(r),
                    Err(
                        e @ (Error::InsufficientChain { .. } | Error::CertificateFailure { .. }),
                    ) => {
                        failure = Some(e.to_string());
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        if kernel_exponent.is_none() && failure.is_none() {
            failure = Some(format!("not annihilated within k_max = {k_max}"));
        }
        entries.push(MembershipReport {
            index: *index,
            position,
            kernel_exponent,
            hyperrange_orders,
            failure,
        });
    }

    let verdict = if recognition.verdict == Verdict::No
        || entries.iter().any(|e| e.kernel_exponent.is_none())
    {
        MullerVerdict::Fails
    } else if entries.iter().all(|e| e.complete(r_max)) {
        MullerVerdict::CriterionSatisfiedOnHorizon
    } else {
        MullerVerdict::Inconclusive
    };
    Ok(MullerReport {
        verdict,
        probe_horizon,
        r_max,
        recognition: recognition.verdict,
        first_failure: recognition.first_failure,
        coordinates_exhausted,
        entries,
    })
}
