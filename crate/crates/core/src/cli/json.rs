//! Deterministic JSON values: fixed key order, floats with 17 significant digits.

use std::str::FromStr;

use serde_json::{Map, Number, Value};

use crate::lognum::{Sign, SignedLog};

/// A float as a JSON number (`+-inf` and `NaN` become strings).
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted float is a JSON number"))
    } else if x.is_nan() {
        Value::String("NaN".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn ints(xs: &[i64]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::from(x)).collect())
}

/// `{"sign": "+", "log": ...}`: the value is `sign * exp(log)`.
pub fn signed_log(v: SignedLog<f64>) -> Value {
    let sign = match v.sign() {
        Sign::Neg => "-",
        Sign::Zero => "0",
        Sign::Pos => "+",
    };
    let mut m = Map::new();
    m.insert("sign".into(), Value::String(sign.into()));
    m.insert("log".into(), num(v.logmag()));
    Value::Object(m)
}

/// Builds an object from `(key, value)` pairs, keeping their order.
pub fn object<I: IntoIterator<Item = (&'static str, Value)>>(pairs: I) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(0.0).to_string(), "0.0000000000000000e+0");
        assert_eq!(num(f64::NEG_INFINITY), Value::String("-inf".into()));
        let v = signed_log(SignedLog::from_real(-2.0));
        assert_eq!(v["sign"], "-");
    }
}
