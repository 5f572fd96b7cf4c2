//! Serialisation helpers: rationals travel as `"p/q"` strings.

use num_rational::BigRational;
use serde::ser::SerializeSeq;
use serde::Serializer;

use crate::scalar::rational_to_string;

pub fn ser_rational<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rational_to_string(q))
}

pub fn ser_rational_opt<S: Serializer>(q: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match q {
        Some(q) => ser_rational(q, s),
        None => s.serialize_none(),
    }
}

pub fn ser_rational_vec<S: Serializer>(qs: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(qs.len()))?;
    for q in qs {
        seq.serialize_element(&rational_to_string(q))?;
    }
    seq.end()
}
