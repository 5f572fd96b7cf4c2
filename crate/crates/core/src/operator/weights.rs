//! Weight sequences: an explicit prefix followed by a closed tail rule.

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::scalar::{convert, Scalar};

pub type WeightFn<S> = Arc<dyn Fn(i64) -> S + Send + Sync>;

/// Tail rules, evaluated at a signed index `j`. Rules depend on `|j|`, so
/// the same rule serves one-sided and bilateral shifts.
#[derive(Clone)]
pub enum TailRule<S> {
    /// `w_j = value`.
    Const(S),
    /// `w_j = offset + scale / max(|j|, 1)`.
    OneOverN { offset: S, scale: S },
    /// `w_j = base * ratio^|j|`.
    Geometric { base: S, ratio: S },
    /// A user rule. `sup_bound`, when given, must bound `|w_j|` on the tail.
    Custom {
        name: String,
        rule: WeightFn<S>,
        sup_bound: Option<BigRational>,
    },
}

impl<S: Scalar> TailRule<S> {
    pub fn one_over_n() -> Self {
        TailRule::OneOverN {
            offset: S::zero(),
            scale: S::one(),
        }
    }

    pub fn geometric(base: S, ratio: S) -> Self {
        TailRule::Geometric { base, ratio }
    }

    pub fn custom(
        name: impl Into<String>,
        rule: impl Fn(i64) -> S + Send + Sync + 'static,
        sup_bound: Option<BigRational>,
    ) -> Self {
        TailRule::Custom {
            name: name.into(),
            rule: Arc::new(rule),
            sup_bound,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            TailRule::Const(_) => "const",
            TailRule::OneOverN { .. } => "one_over_n",
            TailRule::Geometric { .. } => "geometric",
            TailRule::Custom { name, .. } => name,
        }
    }

    pub fn eval(&self, j: i64) -> S {
        match self {
            TailRule::Const(c) => c.clone(),
            TailRule::OneOverN { offset, scale } => {
                let n = j.unsigned_abs().max(1) as i64;
                offset.clone() + scale.clone() / S::from_int(n)
            }
            TailRule::Geometric { base, ratio } => {
                let mut value = base.clone();
                for _ in 0..j.unsigned_abs() {
                    value = value * ratio.clone();
                }
                value
            }
            TailRule::Custom { rule, .. } => rule(j),
        }
    }

    /// Certified bound of `sup |w_j|` over tail indices with `|j| >= min_abs`,
    /// with a flag telling whether the bound is the supremum itself.
    fn sup_abs(&self, min_abs: u64) -> Option<(BigRational, bool)> {
        match self {
            TailRule::Const(c) => Some(c.abs_upper()),
            TailRule::OneOverN { offset, scale } => {
                // |offset + scale t| is convex in t, so the sup over
                // t in (0, 1/n0] sits at an endpoint.
                let n0 = min_abs.max(1) as i64;
                let first = offset.clone() + scale.clone() / S::from_int(n0);
                let (a, a_exact) = first.abs_upper();
                let (b, b_exact) = offset.abs_upper();
                Some(if a >= b { (a, a_exact) } else { (b, b_exact) })
            }
            TailRule::Geometric { base, ratio } => {
                let (r, r_exact) = ratio.abs_upper();
                if r > BigRational::one() {
                    return None;
                }
                let (b, b_exact) = base.abs_upper();
                let mut value = b;
                for _ in 0..min_abs {
                    value = &value * &r;
                    if value.is_zero() {
                        break;
                    }
                }
                Some((value, b_exact && r_exact))
            }
            TailRule::Custom { sup_bound, .. } => sup_bound.clone().map(|b| (b, false)),
        }
    }

    pub fn convert<T: Scalar>(&self) -> TailRule<T> {
        match self {
            TailRule::Const(c) => TailRule::Const(convert(c)),
            TailRule::OneOverN { offset, scale } => TailRule::OneOverN {
                offset: convert(offset),
                scale: convert(scale),
            },
            TailRule::Geometric { base, ratio } => TailRule::Geometric {
                base: convert(base),
                ratio: convert(ratio),
            },
            TailRule::Custom {
                name,
                rule,
                sup_bound,
            } => {
                let rule = rule.clone();
                TailRule::Custom {
                    name: name.clone(),
                    rule: Arc::new(move |j| convert::<S, T>(&rule(j))),
                    sup_bound: sup_bound.clone(),
                }
            }
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for TailRule<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailRule::Const(c) => f.debug_tuple("Const").field(c).finish(),
            TailRule::OneOverN { offset, scale } => f
                .debug_struct("OneOverN")
                .field("offset", offset)
                .field("scale", scale)
                .finish(),
            TailRule::Geometric { base, ratio } => f
                .debug_struct("Geometric")
                .field("base", base)
                .field("ratio", ratio)
                .finish(),
            TailRule::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

impl<S: PartialEq> PartialEq for TailRule<S> {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TailRule::Const(a), TailRule::Const(b)) => a == b,
            (
                TailRule::OneOverN { offset, scale },
                TailRule::OneOverN {
                    offset: o2,
                    scale: s2,
                },
            ) => offset == o2 && scale == s2,
            (
                TailRule::Geometric { base, ratio },
                TailRule::Geometric {
                    base: b2,
                    ratio: r2,
                },
            ) => base == b2 && ratio == r2,
            (TailRule::Custom { rule: a, .. }, TailRule::Custom { rule: b, .. }) => {
                Arc::ptr_eq(a, b)
            }
            _ => false,
        }
    }
}

/// `w_j` for `1 <= j <= prefix.len()` comes from the prefix, every other
/// index from the tail. Without a tail the sequence is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence<S> {
    pub prefix: Vec<S>,
    pub tail: Option<TailRule<S>>,
}

impl<S: Scalar> WeightSequence<S> {
    pub fn new(prefix: Vec<S>, tail: Option<TailRule<S>>) -> Self {
        WeightSequence { prefix, tail }
    }

    pub fn from_rule(rule: TailRule<S>) -> Self {
        WeightSequence::new(Vec::new(), Some(rule))
    }

    pub fn constant(value: S) -> Self {
        Self::from_rule(TailRule::Const(value))
    }

    pub fn finite(prefix: Vec<S>) -> Self {
        WeightSequence::new(prefix, None)
    }

    pub fn weight(&self, j: i64) -> Option<S> {
        if j >= 1 && (j as usize) <= self.prefix.len() {
            return Some(self.prefix[j as usize - 1].clone());
        }
        self.tail.as_ref().map(|t| t.eval(j))
    }

    /// Largest index with a known weight (`i64::MAX` with a tail).
    pub fn available_up_to(&self) -> i64 {
        if self.tail.is_some() {
            i64::MAX
        } else {
            self.prefix.len() as i64
        }
    }

    /// Certified bound of `sup |w_j|` over `j >= 1` (`one_sided`) or over all
    /// integers; `None` if unbounded or unknown.
    pub fn sup_abs(&self, one_sided: bool) -> Option<(BigRational, bool)> {
        let mut best = (BigRational::zero(), true);
        for w in &self.prefix {
            let (a, exact) = w.abs_upper();
            if a > best.0 {
                best = (a, exact);
            }
        }
        if let Some(tail) = &self.tail {
            let min_abs = if one_sided {
                self.prefix.len() as u64 + 1
            } else {
                0
            };
            let (a, exact) = tail.sup_abs(min_abs)?;
            if a > best.0 {
                best = (a, exact);
            }
        }
        Some(best)
    }

    pub fn convert<T: Scalar>(&self) -> WeightSequence<T> {
        WeightSequence {
            prefix: self.prefix.iter().map(convert::<S, T>).collect(),
            tail: self.tail.as_ref().map(TailRule::convert),
        }
    }
}
