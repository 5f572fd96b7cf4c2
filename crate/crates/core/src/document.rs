//! Operator documents: the JSON form of operators, weights and mixtures.
//!
//! Scalars are strings (`"3/4"`, `"-0.125"`, `"1e-3"`), integers,
//! `[numerator, denominator]` pairs, or `{"re": .., "im": ..}` objects with
//! such parts. Vectors and functionals are objects keyed by coordinate.
//!
//! ```
//! use genshift::document::parse_operator_spec;
//!
//! let doc = parse_operator_spec(r#"{
//!     "space": {"norm": "l2"},
//!     "operator": {"type": "weighted_shift", "direction": "forward",
//!                  "weights": {"prefix": [], "tail": {"rule": "one_over_n"}}}
//! }"#).unwrap();
//! assert!(doc.mixture.is_none());
//! ```

use std::cell::RefCell;

use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::approx::{nilpotent_model, MixtureSpec};
use crate::dense::DenseMatrix;
use crate::error::Error;
use crate::norm::NormMode;
use crate::operator::{
    Coverage, DenseBlock, Direction, Lane, LocalSum, Majorant, OperatorExpr, TailRule,
    WeightSequence, WeightedShift,
};
use crate::scalar::{parse_rational, rational_to_string, Exact, Scalar};
use crate::vector::{Functional, SparseVector};

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorDocument {
    pub norm: NormMode,
    pub operator: OperatorExpr<Exact>,
    pub mixture: Option<MixtureSpec<Exact>>,
}

impl OperatorDocument {
    pub fn new(operator: OperatorExpr<Exact>) -> Self {
        OperatorDocument {
            norm: NormMode::L2,
            operator,
            mixture: None,
        }
    }

    pub fn from_mixture(mixture: MixtureSpec<Exact>) -> Result<Self, Error> {
        Ok(OperatorDocument {
            norm: mixture.norm,
            operator: mixture.operator()?,
            mixture: Some(mixture),
        })
    }

    pub fn to_json(&self) -> Result<Value, Error> {
        let mut out = json!({
            "space": {"norm": self.norm.name()},
            "operator": operator_to_json(&self.operator)?,
        });
        if let Some(m) = &self.mixture {
            out["mixture"] = json!({
                "forward": m.forward.iter().map(weights_to_json).collect::<Result<Vec<_>, _>>()?,
                "bilateral": m.bilateral.iter().map(weights_to_json).collect::<Result<Vec<_>, _>>()?,
            });
        }
        Ok(out)
    }

    pub fn to_string_pretty(&self) -> Result<String, Error> {
        Ok(serde_json::to_string_pretty(&self.to_json()?).expect("values serialise"))
    }
}

/// Parses and validates a document, collecting every schema error found.
pub fn parse_operator_spec(text: &str) -> Result<OperatorDocument, Vec<Error>> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        vec![Error::Schema {
            path: "$".into(),
            reason: format!("invalid JSON: {e}"),
        }]
    })?;
    let p = Parser::default();
    let doc = p.document(&value);
    let errors = p.errors.into_inner();
    match doc {
        Some(doc) if errors.is_empty() => Ok(doc),
        _ => Err(errors),
    }
}

#[derive(Default)]
struct Parser {
    errors: RefCell<Vec<Error>>,
}

impl Parser {
    fn fail<T>(&self, path: &str, reason: impl Into<String>) -> Option<T> {
        self.errors.borrow_mut().push(Error::Schema {
            path: path.to_string(),
            reason: reason.into(),
        });
        None
    }

    fn object<'a>(&self, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(o) => Some(o),
            None => self.fail(path, "expected an object"),
        }
    }

    fn field<'a>(&self, o: &'a Map<String, Value>, key: &str, path: &str) -> Option<&'a Value> {
        match o.get(key) {
            Some(v) => Some(v),
            None => self.fail(&format!("{path}.{key}"), "missing field"),
        }
    }

    fn document(&self, v: &Value) -> Option<OperatorDocument> {
        let o = self.object(v, "$")?;
        let norm = match o.get("space") {
            None => NormMode::L2,
            Some(space) => {
                let s = self.object(space, "$.space")?;
                match s.get("norm") {
                    None => NormMode::L2,
                    Some(Value::String(name)) => match name.parse() {
                        Ok(n) => n,
                        Err(reason) => return self.fail("$.space.norm", reason),
                    },
                    Some(_) => return self.fail("$.space.norm", "expected a string"),
                }
            }
        };
        let mixture = match o.get("mixture") {
            Some(m) => Some(self.mixture(m, "$.mixture", norm)?),
            None => None,
        };
        let operator = match (o.get("operator"), &mixture) {
            (Some(op), _) => self.operator(op, "$.operator")?,
            (None, Some(m)) => match m.operator() {
                Ok(op) => op,
                Err(e) => return self.fail("$.mixture", e.to_string()),
            },
            (None, None) => return self.fail("$.operator", "missing field"),
        };
        Some(OperatorDocument {
            norm,
            operator,
            mixture,
        })
    }

    fn mixture(&self, v: &Value, path: &str, norm: NormMode) -> Option<MixtureSpec<Exact>> {
        let o = self.object(v, path)?;
        let mut lists = [Vec::new(), Vec::new()];
        for (slot, key) in lists.iter_mut().zip(["forward", "bilateral"]) {
            let Some(items) = o.get(key) else { continue };
            let Some(items) = items.as_array() else {
                return self.fail(
                    &format!("{path}.{key}"),
                    "expected an array of weight sequences",
                );
            };
            for (i, w) in items.iter().enumerate() {
                if let Some(w) = self.weights(w, &format!("{path}.{key}[{i}]")) {
                    slot.push(w);
                }
            }
        }
        let [forward, bilateral] = lists;
        if forward.is_empty() && bilateral.is_empty() {
            return self.fail(path, "a mixture needs at least one chain");
        }
        Some(MixtureSpec {
            forward,
            bilateral,
            norm,
        })
    }

    fn operator(&self, v: &Value, path: &str) -> Option<OperatorExpr<Exact>> {
        let o = self.object(v, path)?;
        let kind = match self.field(o, "type", path)? {
            Value::String(s) => s.as_str(),
            _ => return self.fail(&format!("{path}.type"), "expected a string"),
        };
        match kind {
            "sum" | "local_sum" => {
                let terms = self.field(o, "terms", path)?;
                let Some(items) = terms.as_array() else {
                    return self.fail(&format!("{path}.terms"), "expected an array");
                };
                let mut out = Vec::with_capacity(items.len());
                let mut ok = true;
                for (i, t) in items.iter().enumerate() {
                    match self.operator(t, &format!("{path}.terms[{i}]")) {
                        Some(t) => out.push(t),
                        None => ok = false,
                    }
                }
                if !ok {
                    return None;
                }
                if kind == "sum" {
                    return Some(OperatorExpr::Sum(out));
                }
                let coverage = match o.get("coverage") {
                    None => Coverage::All,
                    Some(c) => self.coverage(c, &format!("{path}.coverage"))?,
                };
                let tail = match o.get("tail") {
                    None | Some(Value::Null) => None,
                    Some(t) => {
                        let tp = format!("{path}.tail");
                        let to = self.object(t, &tp)?;
                        let first =
                            self.rational(self.field_value(to, "first"), &format!("{tp}.first"))?;
                        let ratio =
                            self.rational(self.field_value(to, "ratio"), &format!("{tp}.ratio"))?;
                        Some(Majorant { first, ratio })
                    }
                };
                Some(OperatorExpr::LocalSum(LocalSum::new(out, coverage, tail)))
            }
            "dense_block" => {
                let offset =
                    self.integer(self.field(o, "offset", path)?, &format!("{path}.offset"))?;
                let rows_path = format!("{path}.rows");
                let rows = self.field(o, "rows", path)?;
                let Some(rows) = rows.as_array() else {
                    return self.fail(&rows_path, "expected an array of rows");
                };
                let n = rows.len();
                let mut data = Vec::with_capacity(n);
                for (i, row) in rows.iter().enumerate() {
                    let rp = format!("{rows_path}[{i}]");
                    let Some(row) = row.as_array() else {
                        return self.fail(&rp, "expected an array");
                    };
                    if row.len() != n {
                        return self.fail(&rp, format!("expected {n} entries for a square block"));
                    }
                    let mut r = Vec::with_capacity(n);
                    for (j, x) in row.iter().enumerate() {
                        r.push(self.scalar(x, &format!("{rp}[{j}]"))?);
                    }
                    data.push(r);
                }
                if n == 0 {
                    return self.fail(&rows_path, "a block needs at least one row");
                }
                Some(OperatorExpr::DenseBlock(DenseBlock::new(
                    offset,
                    DenseMatrix::from_rows(data),
                )))
            }
            "weighted_shift" => {
                let dp = format!("{path}.direction");
                let direction = match self.field(o, "direction", path)?.as_str() {
                    Some("forward") => Direction::Forward,
                    Some("backward") => Direction::Backward,
                    Some("bilateral") => Direction::Bilateral,
                    _ => return self.fail(&dp, "expected forward, backward or bilateral"),
                };
                let weights =
                    self.weights(self.field(o, "weights", path)?, &format!("{path}.weights"))?;
                let lane = match o.get("lane") {
                    None => Lane::default(),
                    Some(l) => {
                        let lp = format!("{path}.lane");
                        let lo = self.object(l, &lp)?;
                        let count =
                            self.integer(self.field(lo, "count", &lp)?, &format!("{lp}.count"))?;
                        let index =
                            self.integer(self.field(lo, "index", &lp)?, &format!("{lp}.index"))?;
                        if count < 1 || index < 0 || index >= count || count > u32::MAX as i64 {
                            return self.fail(&lp, "need 0 <= index < count");
                        }
                        Lane::new(count as u32, index as u32)
                    }
                };
                Some(OperatorExpr::WeightedShift(WeightedShift {
                    direction,
                    weights,
                    lane,
                }))
            }
            "rank_one" => {
                let f = self.vector(
                    self.field(o, "functional", path)?,
                    &format!("{path}.functional"),
                )?;
                let v = self.vector(self.field(o, "vector", path)?, &format!("{path}.vector"))?;
                let scale = match o.get("scale") {
                    None => Exact::from_int(1),
                    Some(s) => self.scalar(s, &format!("{path}.scale"))?,
                };
                Some(OperatorExpr::rank_one(Functional::new(f), v, scale))
            }
            "scalar_identity" => {
                let lambda =
                    self.scalar(self.field(o, "lambda", path)?, &format!("{path}.lambda"))?;
                Some(OperatorExpr::ScalarIdentity(lambda))
            }
            "nilpotent" => {
                let bp = format!("{path}.blocks");
                let Some(blocks) = self.field(o, "blocks", path)?.as_array() else {
                    return self.fail(&bp, "expected an array of [size, offset] pairs");
                };
                let mut out = Vec::with_capacity(blocks.len());
                for (i, b) in blocks.iter().enumerate() {
                    let ip = format!("{bp}[{i}]");
                    match b.as_array().map(Vec::as_slice) {
                        Some([size, offset]) => {
                            let size = self.integer(size, &ip)?;
                            let offset = self.integer(offset, &ip)?;
                            if size < 1 {
                                return self.fail(&ip, "block sizes must be positive");
                            }
                            out.push((size as usize, offset));
                        }
                        _ => return self.fail(&ip, "expected a [size, offset] pair"),
                    }
                }
                match nilpotent_model(&out) {
                    Ok(op) => Some(op),
                    Err(e) => self.fail(&bp, e.to_string()),
                }
            }
            other => self.fail(
                &format!("{path}.type"),
                format!("unknown operator type `{other}`"),
            ),
        }
    }

    fn field_value<'a>(&self, o: &'a Map<String, Value>, key: &str) -> &'a Value {
        o.get(key).unwrap_or(&Value::Null)
    }

    fn coverage(&self, v: &Value, path: &str) -> Option<Coverage> {
        match v {
            Value::String(s) if s == "all" => Some(Coverage::All),
            Value::Object(o) if o.contains_key("up_to") => Some(Coverage::UpTo(
                self.integer(&o["up_to"], &format!("{path}.up_to"))?,
            )),
            Value::Object(o) if o.contains_key("lanes") => {
                let lp = format!("{path}.lanes");
                let Some(items) = o["lanes"].as_array() else {
                    return self.fail(&lp, "expected an array");
                };
                let mut limits = Vec::with_capacity(items.len());
                for (i, x) in items.iter().enumerate() {
                    limits.push(self.integer(x, &format!("{lp}[{i}]"))?);
                }
                if limits.is_empty() {
                    return self.fail(&lp, "expected at least one lane");
                }
                Some(Coverage::Lanes(limits))
            }
            _ => self.fail(
                path,
                "expected \"all\", {\"up_to\": n} or {\"lanes\": [..]}",
            ),
        }
    }

    fn weights(&self, v: &Value, path: &str) -> Option<WeightSequence<Exact>> {
        let o = self.object(v, path)?;
        let mut prefix = Vec::new();
        if let Some(p) = o.get("prefix") {
            let pp = format!("{path}.prefix");
            let Some(items) = p.as_array() else {
                return self.fail(&pp, "expected an array");
            };
            for (i, x) in items.iter().enumerate() {
                prefix.push(self.scalar(x, &format!("{pp}[{i}]"))?);
            }
        }
        let tail = match o.get("tail") {
            None | Some(Value::Null) => None,
            Some(t) => Some(self.tail(t, &format!("{path}.tail"))?),
        };
        if prefix.is_empty() && tail.is_none() {
            return self.fail(path, "weights need a prefix or a tail");
        }
        Some(WeightSequence::new(prefix, tail))
    }

    fn tail(&self, v: &Value, path: &str) -> Option<TailRule<Exact>> {
        let o = self.object(v, path)?;
        let rule = match self.field(o, "rule", path)?.as_str() {
            Some(r) => r.to_string(),
            None => return self.fail(&format!("{path}.rule"), "expected a string"),
        };
        let empty = Map::new();
        let params = match o.get("params") {
            None => &empty,
            Some(p) => self.object(p, &format!("{path}.params"))?,
        };
        let pp = format!("{path}.params");
        let param = |p: &Self, key: &str, default: Option<Exact>| -> Option<Exact> {
            match (params.get(key), default) {
                (Some(x), _) => p.scalar(x, &format!("{pp}.{key}")),
                (None, Some(d)) => Some(d),
                (None, None) => p.fail(&format!("{pp}.{key}"), "missing parameter"),
            }
        };
        match rule.as_str() {
            "const" => Some(TailRule::Const(param(self, "value", None)?)),
            "one_over_n" => Some(TailRule::OneOverN {
                offset: param(self, "offset", Some(Exact::from_int(0)))?,
                scale: param(self, "scale", Some(Exact::from_int(1)))?,
            }),
            "geometric" => Some(TailRule::Geometric {
                base: param(self, "base", Some(Exact::from_int(1)))?,
                ratio: param(self, "ratio", None)?,
            }),
            _ => {
                self.errors.borrow_mut().push(Error::UnknownTailRule {
                    path: format!("{path}.rule"),
                    rule,
                });
                None
            }
        }
    }

    fn vector(&self, v: &Value, path: &str) -> Option<SparseVector<Exact>> {
        let o = self.object(v, path)?;
        let mut out = SparseVector::zero();
        for (k, x) in o {
            let Ok(index) = k.parse::<i64>() else {
                return self.fail(&format!("{path}.{k}"), "coordinates are integers");
            };
            out.add_at(index, self.scalar(x, &format!("{path}.{k}"))?);
        }
        Some(out)
    }

    fn integer(&self, v: &Value, path: &str) -> Option<i64> {
        match v.as_i64() {
            Some(n) => Some(n),
            None => self.fail(path, "expected an integer"),
        }
    }

    fn rational(&self, v: &Value, path: &str) -> Option<BigRational> {
        let q = match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => n.as_i64().map(|n| BigRational::from_integer(n.into())),
            Value::Array(pair) => match pair.as_slice() {
                [Value::Number(p), Value::Number(q)] => match (p.as_i64(), q.as_i64()) {
                    (Some(p), Some(q)) if q != 0 => Some(BigRational::new(p.into(), q.into())),
                    _ => None,
                },
                _ => None,
            },
            _ => None,
        };
        match q {
            Some(q) => Some(q),
            None => self.fail(
                path,
                "expected an exact rational: \"p/q\", a decimal string, an integer or [p, q]",
            ),
        }
    }

    fn scalar(&self, v: &Value, path: &str) -> Option<Exact> {
        if let Value::Object(o) = v {
            let re = match o.get("re") {
                Some(x) => self.rational(x, &format!("{path}.re"))?,
                None => BigRational::zero(),
            };
            let im = match o.get("im") {
                Some(x) => self.rational(x, &format!("{path}.im"))?,
                None => BigRational::zero(),
            };
            return Some(Exact::new(re, im));
        }
        self.rational(v, path).map(|q| Exact::from_real(&q))
    }
}

fn weights_to_json(w: &WeightSequence<Exact>) -> Result<Value, Error> {
    let mut out = json!({ "prefix": w.prefix.iter().map(Scalar::to_json).collect::<Vec<_>>() });
    if let Some(t) = &w.tail {
        out["tail"] = match t {
            TailRule::Const(c) => json!({"rule": "const", "params": {"value": c.to_json()}}),
            TailRule::OneOverN { offset, scale } => json!({
                "rule": "one_over_n",
                "params": {"offset": offset.to_json(), "scale": scale.to_json()},
            }),
            TailRule::Geometric { base, ratio } => json!({
                "rule": "geometric",
                "params": {"base": base.to_json(), "ratio": ratio.to_json()},
            }),
            TailRule::Custom { name, .. } => {
                return Err(Error::UnknownTailRule {
                    path: "$".into(),
                    rule: name.clone(),
                })
            }
        };
    }
    Ok(out)
}

/// The JSON form of an operator. Custom tail rules have no JSON form.
pub fn operator_to_json(op: &OperatorExpr<Exact>) -> Result<Value, Error> {
    Ok(match op {
        OperatorExpr::DenseBlock(b) => json!({
            "type": "dense_block",
            "offset": b.offset,
            "rows": b.matrix.to_rows().iter()
                .map(|r| r.iter().map(Scalar::to_json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
        OperatorExpr::WeightedShift(s) => {
            let mut out = json!({
                "type": "weighted_shift",
                "direction": s.direction.name(),
                "weights": weights_to_json(&s.weights)?,
            });
            if s.lane != Lane::default() {
                out["lane"] = json!({"count": s.lane.count, "index": s.lane.index});
            }
            out
        }
        OperatorExpr::RankOne(r) => json!({
            "type": "rank_one",
            "functional": r.functional.coefficients().to_json(),
            "vector": r.vector.to_json(),
            "scale": r.scale.to_json(),
        }),
        OperatorExpr::ScalarIdentity(l) => {
            json!({"type": "scalar_identity", "lambda": l.to_json()})
        }
        OperatorExpr::Sum(terms) => json!({
            "type": "sum",
            "terms": terms.iter().map(operator_to_json).collect::<Result<Vec<_>, _>>()?,
        }),
        OperatorExpr::LocalSum(sum) => {
            let coverage = match sum.coverage() {
                Coverage::All => json!("all"),
                Coverage::UpTo(n) => json!({"up_to": n}),
                Coverage::Lanes(l) => json!({"lanes": l}),
            };
            let mut out = json!({
                "type": "local_sum",
                "terms": sum.terms().iter().map(operator_to_json).collect::<Result<Vec<_>, _>>()?,
                "coverage": coverage,
            });
            if let Some(m) = sum.tail() {
                out["tail"] = json!({
                    "first": rational_to_string(&m.first),
                    "ratio": rational_to_string(&m.ratio),
                });
            }
            out
        }
    })
}
