//! Chain construction and the perturbations that turn an operator with
//! dense generalised kernel into a generalised backward 1-shift.

mod chains;
mod mixture;
mod models;
mod perturb;

pub use chains::{
    build_chains, chain_length, ChainBuilder, ChainFamily, FamilyChain, InvariantReport, Provider,
    INVARIANTS,
};
pub use mixture::{
    approximate_mixture_by_one_shift, chain_share, shift_mixture_correction, threshold, ChainCuts,
    CompactCorrection, MixtureApproximation, MixtureSpec,
};
pub use models::{nilpotent_model, random_nilpotent_block, random_nilpotent_matrix};
pub use perturb::{
    assemble_one_shift, correction_factors, epsilon_schedule, epsilon_schedule_from_factors,
    junctions, ApproximationResult, Junction, PerturbationPlan, PlanEntry,
};
