//! Stable JSON output: floats rounded to 12 significant digits, object keys
//! sorted.

use serde::Serialize;
use serde_json::Value;

pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round12).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    let mut v = serde_json::to_value(x).expect("serializable output");
    round_value(&mut v);
    v
}

pub fn render<T: Serialize>(x: &T) -> String {
    serde_json::to_string_pretty(&to_value(x)).expect("serializable output")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(-2.5e-17), -2.5e-17);
        assert_eq!(render(&serde_json::json!({"x": [1.0 / 3.0, 2], "y": "s"})), "{\n  \"x\": [\n    0.333333333333,\n    2\n  ],\n  \"y\": \"s\"\n}");
    }
}
