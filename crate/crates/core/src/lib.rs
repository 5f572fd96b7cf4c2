//! Constructive approximation of operators with dense generalised kernel
//! by generalised backward 1-shifts, in exact rational-complex arithmetic.
//!
//! Vectors are finitely supported coordinate sequences ([`SparseVector`]),
//! operators are column-finite expressions ([`OperatorExpr`]), and every
//! norm statement is a certified rational upper bound.
//!
//! ```
//! use genshift::approx::nilpotent_model;
//! use genshift::{Exact, SparseVector};
//!
//! let n = nilpotent_model::<Exact>(&[(5, 1)]).unwrap();
//! let v = n.power_apply(&SparseVector::basis(1), 4).unwrap();
//! assert_eq!(v, SparseVector::basis(5));
//! assert!(n.apply(&v).unwrap().is_zero());
//! ```

pub mod approx;
pub mod dense;
pub mod document;
pub mod error;
pub mod index;
pub mod norm;
pub mod operator;
pub mod report;
pub mod scalar;
pub mod shift;
pub mod span;
pub mod vector;

pub use num_rational::BigRational;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use index::{immediate_predecessor, lex_compare, ChainIndex};
pub use norm::{Norm, NormMode};
pub use operator::{
    apply, generalized_kernel_exponent, gk_density_report, operator_norm_bound, power_apply,
    spectral_radius_estimate, truncate, weight_null_subsequence, Direction, OperatorExpr, TailRule,
    WeightSequence,
};
pub use scalar::{ArithmeticMode, Exact, Float, Scalar};
pub use span::{biorthogonal, expand_in_set, BiorthogonalSystem, SpanBasis};
pub use vector::{vector_norm, Functional, SparseVector};
