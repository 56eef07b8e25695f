//! JSON emission with 17-significant-digit floats (round-trip exactness).

use serde::Serialize;
use serde_json::Value;
use std::io;

struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize a JSON value with every float at 17 significant digits.
/// Keys of maps are emitted in sorted order, so output is deterministic.
pub fn json_to_string(v: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17);
    v.serialize(&mut ser).expect("serializing a Value cannot fail");
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// Lift a float into JSON; non-finite values become strings since JSON has
/// no representation for them.
pub fn json_num(v: f64) -> Value {
    match serde_json::Number::from_f64(v) {
        Some(n) => Value::Number(n),
        None => Value::String(format!("{v}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_17_digits_and_round_trip() {
        let v = json!({"a": 2.0f64.sqrt(), "b": [1.0, 0.1]});
        let s = json_to_string(&v);
        assert!(s.contains("1.4142135623730951e0"), "{s}");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), 2.0f64.sqrt());
        assert_eq!(back["b"][1].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn deterministic_key_order() {
        let v = json!({"zeta": 1.0, "alpha": 2.0});
        let s = json_to_string(&v);
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
        assert_eq!(json_num(f64::INFINITY), Value::String("inf".into()));
    }
}
