use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::Zero;

use crate::scalar::{rational_to_f64, sqrt_upper};

/// The coordinate model: finitely supported sequences completed in `l^p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum NormMode {
    L1,
    #[default]
    L2,
    LInf,
}

impl NormMode {
    /// The exponent `q` with `1/p + 1/q = 1`.
    pub fn dual(self) -> NormMode {
        match self {
            NormMode::L1 => NormMode::LInf,
            NormMode::L2 => NormMode::L2,
            NormMode::LInf => NormMode::L1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NormMode::L1 => "l1",
            NormMode::L2 => "l2",
            NormMode::LInf => "linf",
        }
    }
}

impl fmt::Display for NormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "l1" => Ok(NormMode::L1),
            "l2" => Ok(NormMode::L2),
            "linf" => Ok(NormMode::LInf),
            other => Err(format!("unknown norm `{other}` (expected l1, l2 or linf)")),
        }
    }
}

/// A norm value with a certified rational upper bound.
///
/// `exact` is set when `upper` is the norm itself. For `l2` in exact mode
/// the squared norm is carried exactly in `square`.
#[derive(Clone, Debug, PartialEq)]
pub struct Norm {
    pub upper: BigRational,
    pub exact: bool,
    pub square: Option<BigRational>,
}

impl Norm {
    pub fn zero() -> Self {
        Norm {
            upper: BigRational::zero(),
            exact: true,
            square: Some(BigRational::zero()),
        }
    }

    pub fn from_square(square: BigRational, exact_mode: bool) -> Self {
        let (upper, root_exact) = sqrt_upper(&square);
        Norm {
            upper,
            exact: root_exact && exact_mode,
            square: exact_mode.then_some(square),
        }
    }

    pub fn value(&self) -> f64 {
        rational_to_f64(&self.upper)
    }

    /// Certified upper bound of the product of two norms. Exact squares are
    /// multiplied before taking a single root.
    pub fn product(&self, other: &Norm) -> Norm {
        match (&self.square, &other.square) {
            (Some(a), Some(b)) => {
                let square = a * b;
                let (upper, exact) = sqrt_upper(&square);
                Norm {
                    upper,
                    exact,
                    square: Some(square),
                }
            }
            _ => Norm {
                upper: &self.upper * &other.upper,
                exact: self.exact && other.exact,
                square: None,
            },
        }
    }
}
