//! Generalised backward shifts: certificates, recognition, kernel and
//! hyperrange witnesses, and orbit evidence.

mod adapted;
mod muller;
mod orbit;
mod recognize;
mod witness;

pub use adapted::{AdaptedSet, Chain, ChainGenerator};
pub use muller::{muller_hypothesis_check, MullerReport, MullerVerdict};
pub use orbit::{
    orbit_visit_evidence, OrbitConfig, OrbitReport, OrbitSample, OrbitTarget, HEURISTIC_LABEL,
};
pub use recognize::{
    recognize_generalized_shift, CertificateRow, Failure, FailureReason, IndexStatus, Recognition,
    ShiftCertificate, Verdict,
};
pub use witness::{hyperrange_witness, kernel_witness, LemmaWitnesses, MembershipReport};
