//! The guide in `book/src`, compiled so that its examples run as doc tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/vectors.md")]
pub mod vectors {}

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/shifts.md")]
pub mod shifts {}

#[doc = include_str!("../../../book/src/chains.md")]
pub mod chains {}

#[doc = include_str!("../../../book/src/mixtures.md")]
pub mod mixtures {}

#[doc = include_str!("../../../book/src/orbits.md")]
pub mod orbits {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
