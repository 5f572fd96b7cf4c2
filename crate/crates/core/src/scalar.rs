//! Complex scalars in two arithmetic modes, plus certified rational bounds.
//!
//! [`Exact`] is a complex number with arbitrary-precision rational parts and
//! is closed and error-free under `+ - * /`. [`Float`] is a pair of binary64
//! reals. The mode is fixed by the type parameter of every container, so it
//! can never change implicitly inside one computation.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

/// Exact complex rational.
pub type Exact = Complex<BigRational>;

/// Binary64 complex.
pub type Float = Complex64;

/// Relative slack applied to every upward-rounded float enclosure.
pub const ENCLOSURE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithmeticMode {
    Exact,
    Float,
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: ArithmeticMode;

    /// Magnitude below which a float entry counts as zero, relative to the
    /// scale of the computation. Zero in exact mode.
    const TOLERANCE: f64;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(re: &BigRational, im: &BigRational) -> Self;

    fn is_zero(&self) -> bool;
    fn conj(&self) -> Self;
    fn is_real(&self) -> bool;

    /// `|z|^2` exactly in exact mode, an upward enclosure in float mode.
    fn abs_sq_upper(&self) -> BigRational;

    /// A lower enclosure of `|z|^2` (exact in exact mode).
    fn abs_sq_lower(&self) -> BigRational;

    /// Nearest binary64 value of `|z|`.
    fn magnitude(&self) -> f64;

    fn to_complex64(&self) -> Complex64;

    /// Exact rational parts, when the scalar carries them.
    fn to_exact(&self) -> Option<Exact>;

    fn to_json(&self) -> Value;

    fn from_int(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(n.into()), &BigRational::zero())
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Self::from_rational(
            &BigRational::new(numer.into(), denom.into()),
            &BigRational::zero(),
        )
    }

    fn from_real(re: &BigRational) -> Self {
        Self::from_rational(re, &BigRational::zero())
    }

    /// `self * other` on borrowed operands.
    fn mul_ref(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }

    fn add_owned(self, other: Self) -> Self {
        self + other
    }

    /// True when the entry is indistinguishable from zero at `scale`.
    fn is_negligible(&self, scale: f64) -> bool {
        if Self::TOLERANCE == 0.0 {
            self.is_zero()
        } else {
            self.magnitude() <= Self::TOLERANCE * scale.max(f64::MIN_POSITIVE)
        }
    }

    /// Certified upper bound of `|z|` as a rational, with a flag telling
    /// whether it equals `|z|`.
    fn abs_upper(&self) -> (BigRational, bool) {
        let (root, exact) = sqrt_upper(&self.abs_sq_upper());
        (root, exact && Self::MODE == ArithmeticMode::Exact)
    }
}

impl Scalar for Exact {
    const MODE: ArithmeticMode = ArithmeticMode::Exact;
    const TOLERANCE: f64 = 0.0;

    fn zero() -> Self {
        Complex::new(BigRational::zero(), BigRational::zero())
    }

    fn one() -> Self {
        Complex::new(BigRational::one(), BigRational::zero())
    }

    fn from_rational(re: &BigRational, im: &BigRational) -> Self {
        Complex::new(re.clone(), im.clone())
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    // real operands are the common case and skip three rational products
    fn mul_ref(&self, other: &Self) -> Self {
        if self.im.is_zero() && other.im.is_zero() {
            Complex::new(rational_mul(&self.re, &other.re), BigRational::zero())
        } else {
            let re = rational_add(
                &rational_mul(&self.re, &other.re),
                &-rational_mul(&self.im, &other.im),
            );
            let im = rational_add(
                &rational_mul(&self.re, &other.im),
                &rational_mul(&self.im, &other.re),
            );
            Complex::new(re, im)
        }
    }

    fn add_owned(self, other: Self) -> Self {
        let im = if other.im.is_zero() {
            self.im
        } else if self.im.is_zero() {
            other.im
        } else {
            rational_add(&self.im, &other.im)
        };
        Complex::new(rational_add(&self.re, &other.re), im)
    }

    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    fn abs_sq_upper(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    fn abs_sq_lower(&self) -> BigRational {
        self.abs_sq_upper()
    }

    fn magnitude(&self) -> f64 {
        let re = rational_to_f64(&self.re);
        let im = rational_to_f64(&self.im);
        re.hypot(im)
    }

    fn to_complex64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    fn to_exact(&self) -> Option<Exact> {
        Some(self.clone())
    }

    fn to_json(&self) -> Value {
        if self.im.is_zero() {
            Value::String(rational_to_string(&self.re))
        } else {
            json!({
                "re": rational_to_string(&self.re),
                "im": rational_to_string(&self.im),
            })
        }
    }
}

impl Scalar for Float {
    const MODE: ArithmeticMode = ArithmeticMode::Float;
    const TOLERANCE: f64 = 1e-10;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn from_rational(re: &BigRational, im: &BigRational) -> Self {
        Complex64::new(rational_to_f64(re), rational_to_f64(im))
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn conj(&self) -> Self {
        Complex64::new(self.re, -self.im)
    }

    fn is_real(&self) -> bool {
        self.im == 0.0
    }

    fn abs_sq_upper(&self) -> BigRational {
        f64_to_rational(self.norm_sqr() * (1.0 + ENCLOSURE_SLACK))
    }

    fn abs_sq_lower(&self) -> BigRational {
        f64_to_rational(self.norm_sqr() * (1.0 - ENCLOSURE_SLACK))
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn to_complex64(&self) -> Complex64 {
        *self
    }

    fn to_exact(&self) -> Option<Exact> {
        None
    }

    fn to_json(&self) -> Value {
        if self.im == 0.0 {
            json!(self.re)
        } else {
            json!({ "re": self.re, "im": self.im })
        }
    }
}

/// Converts a scalar between modes through its rational or float parts.
/// `gcd(a, b)` with one Euclidean step first: the binary algorithm behind
/// `Integer::gcd` is quadratic in the larger operand, which dominates when
/// a small entry meets a long denominator.
fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (a, b) = (a.abs(), b.abs());
    let (large, small) = if a >= b { (a, b) } else { (b, a) };
    if small.is_zero() {
        return large;
    }
    if small.is_one() {
        return small;
    }
    (large % &small).gcd(&small)
}

/// Product in lowest terms from cross-cancelled factors; agrees with
/// `Ratio`'s `*`.
fn rational_mul(x: &BigRational, y: &BigRational) -> BigRational {
    if x.is_zero() || y.is_zero() {
        return BigRational::zero();
    }
    let g1 = gcd(x.numer(), y.denom());
    let g2 = gcd(x.denom(), y.numer());
    let numer = (x.numer() / &g1) * (y.numer() / &g2);
    let denom = (x.denom() / &g2) * (y.denom() / &g1);
    BigRational::new_raw(numer, denom)
}

/// Sum in lowest terms, reducing only by divisors of `gcd(b, d)`.
fn rational_add(x: &BigRational, y: &BigRational) -> BigRational {
    if x.is_zero() {
        return y.clone();
    }
    if y.is_zero() {
        return x.clone();
    }
    let (a, b, c, d) = (x.numer(), x.denom(), y.numer(), y.denom());
    let g = gcd(b, d);
    if g.is_one() {
        return BigRational::new_raw(a * d + c * b, b * d);
    }
    let t = a * (d / &g) + c * (b / &g);
    if t.is_zero() {
        return BigRational::zero();
    }
    let g2 = gcd(&t, &g);
    BigRational::new_raw(t / &g2, (b / &g) * (d / &g2))
}

pub fn convert<S: Scalar, T: Scalar>(value: &S) -> T {
    match value.to_exact() {
        Some(exact) => T::from_rational(&exact.re, &exact.im),
        None => {
            let c = value.to_complex64();
            T::from_rational(&f64_to_rational(c.re), &f64_to_rational(c.im))
        }
    }
}

/// `p/q` (or `p` for integers).
pub fn rational_to_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `p/q`, an integer, or a finite decimal such as `-0.125` or `1e-3`
/// into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if all_digits.is_empty() {
        BigInt::zero()
    } else {
        all_digits.parse().ok()?
    };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(if negative { -value } else { value })
}

/// Nearest binary64 value; saturates instead of failing on huge magnitudes.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let ln = ln_abs(q);
    let sign = if q.is_negative() { -1.0 } else { 1.0 };
    sign * ln.exp()
}

/// Exact rational value of a finite binary64.
pub fn f64_to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

/// `ln |q|` computed from the leading bits, usable far outside the binary64
/// range.
pub fn ln_abs(q: &BigRational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

fn ln_bigint(n: &BigInt) -> f64 {
    let n = n.abs();
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (&n >> shift).to_f64().unwrap_or(1.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact square root when `q` is the square of a rational.
pub fn exact_sqrt(q: &BigRational) -> Option<BigRational> {
    exact_nth_root(q, 2)
}

/// Exact `n`-th root of a nonnegative rational when it is rational.
pub fn exact_nth_root(q: &BigRational, n: u32) -> Option<BigRational> {
    if q.is_negative() || n == 0 {
        return None;
    }
    let num = q.numer().nth_root(n);
    let den = q.denom().nth_root(n);
    if num.pow(n) == *q.numer() && den.pow(n) == *q.denom() {
        Some(BigRational::new(num, den))
    } else {
        None
    }
}

/// Smallest convenient rational `r >= sqrt(q)`; the flag reports whether
/// `r` equals the root.
pub fn sqrt_upper(q: &BigRational) -> (BigRational, bool) {
    if q.is_zero() || q.is_negative() {
        return (BigRational::zero(), q.is_zero());
    }
    if let Some(root) = exact_sqrt(q) {
        return (root, true);
    }
    let mut guess = (ln_abs(q) / 2.0).exp() * (1.0 + ENCLOSURE_SLACK);
    loop {
        let candidate = f64_to_rational(guess);
        if &(&candidate * &candidate) >= q {
            return (candidate, false);
        }
        guess *= 1.0 + ENCLOSURE_SLACK;
    }
}

/// Largest convenient rational `r <= sqrt(q)`.
pub fn sqrt_lower(q: &BigRational) -> BigRational {
    if !q.is_positive() {
        return BigRational::zero();
    }
    if let Some(root) = exact_sqrt(q) {
        return root;
    }
    let mut guess = (ln_abs(q) / 2.0).exp() * (1.0 - ENCLOSURE_SLACK);
    loop {
        let candidate = f64_to_rational(guess);
        if &(&candidate * &candidate) <= q {
            return candidate;
        }
        guess *= 1.0 - ENCLOSURE_SLACK;
    }
}

/// Rounds a positive rational down to one with a 2^k denominator and about
/// 53 significant bits. Values that are already small fractions pass
/// through unchanged.
pub fn simplify_down(q: &BigRational) -> BigRational {
    if q.numer().bits() <= 64 && q.denom().bits() <= 64 {
        return q.clone();
    }
    let log2 = ln_abs(q) / std::f64::consts::LN_2;
    let shift = (53.0 - log2.floor()).max(0.0) as usize;
    let scale = BigInt::one() << shift;
    let scaled = (q * BigRational::from_integer(scale.clone())).floor();
    BigRational::new(scaled.to_integer(), scale)
}

#[cfg(test)]
mod tests {
    #[test]
    fn rational_ops_agree_with_ratio() {
        use proptest::prelude::*;
        let q = (-10_000i64..10_000, 1i64..10_000, 0u32..200).prop_map(|(n, d, shift)| {
            BigRational::new(
                BigInt::from(n) << shift,
                BigInt::from(d) * (BigInt::from(3) << (shift / 2)),
            )
        });
        proptest!(|(x in q.clone(), y in q)| {
            prop_assert_eq!(super::rational_mul(&x, &y), &x * &y);
            prop_assert_eq!(super::rational_add(&x, &y), &x + &y);
            prop_assert_eq!(super::rational_add(&x, &-x.clone()), BigRational::zero());
        });
    }

    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exact_arithmetic_is_closed() {
        let a = Exact::new(q(1, 3), q(2, 5));
        let b = Exact::new(q(-7, 2), q(1, 9));
        let back = (a.clone() * b.clone()) / b.clone();
        assert_eq!(back, a);
        assert_eq!((a.clone() + b.clone()) - b, a);
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("1/10"), Some(q(1, 10)));
        assert_eq!(parse_rational("-0.125"), Some(q(-1, 8)));
        assert_eq!(parse_rational("3"), Some(q(3, 1)));
        assert_eq!(parse_rational("2.5e-1"), Some(q(1, 4)));
        assert_eq!(parse_rational(".5"), Some(q(1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
    }

    #[test]
    fn sqrt_bounds() {
        assert_eq!(sqrt_upper(&q(25, 4)), (q(5, 2), true));
        let (r, exact) = sqrt_upper(&q(2, 1));
        assert!(!exact);
        assert!(&r * &r >= q(2, 1));
        assert!((rational_to_f64(&r) - 2f64.sqrt()).abs() < 1e-9);
        let lo = sqrt_lower(&q(2, 1));
        assert!(&lo * &lo <= q(2, 1));
    }

    #[test]
    fn nth_roots() {
        let p = BigRational::new(1.into(), BigInt::one() << 45usize);
        assert_eq!(exact_nth_root(&p, 9), Some(q(1, 32)));
        assert_eq!(exact_nth_root(&q(2, 1), 3), None);
    }

    #[test]
    fn simplify_rounds_down() {
        let third = q(1, 3);
        let big = &third * &BigRational::new(BigInt::one(), BigInt::one() << 200usize);
        let s = simplify_down(&big);
        assert!(s <= big);
        assert!(rational_to_f64(&(&s / &big)) > 1.0 - 1e-12);
        assert_eq!(simplify_down(&q(9, 200)), q(9, 200));
    }

    #[test]
    fn float_magnitude_enclosure() {
        let z = Float::new(3.0, 4.0);
        let (up, exact) = z.abs_upper();
        assert!(!exact);
        assert!(rational_to_f64(&up) >= 5.0);
        assert!(z.is_negligible(1e12));
        assert!(!z.is_negligible(1.0));
    }
}
