//! Deterministic JSON and CSV rendering.
//!
//! Object keys come out sorted (`serde_json::Map` is a `BTreeMap` without the
//! `preserve_order` feature) and every float is printed with 17 significant
//! digits, enough to round-trip any `f64`.

use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: &str = "1";

/// `x` with 17 significant digits; positional for moderate exponents.
pub fn fmt_f64(x: f64) -> String {
    let sci = format!("{x:.16e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..=15).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        sci
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.push_str(&" ".repeat(2 * n));
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => match n.as_f64().filter(|_| n.is_f64()) {
            Some(x) => out.push_str(&fmt_f64(x)),
            None => out.push_str(&n.to_string()),
        },
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Pretty-printed JSON with the fixed float format and a trailing newline.
pub fn render(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("library types serialize to JSON")
}

/// The stable wrapper around every command's output. Failures carry `error`
/// in place of `result`.
pub fn envelope(command: &str, inputs: Value, body: Result<Value, Value>, warnings: &[String]) -> Value {
    let mut v = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "warnings": warnings,
    });
    match body {
        Ok(result) => v["result"] = result,
        Err(error) => v["error"] = error,
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits_and_round_trip() {
        assert_eq!(fmt_f64(2.0), "2.0000000000000000");
        assert_eq!(fmt_f64(0.1), "0.10000000000000001");
        assert_eq!(fmt_f64(-std::f64::consts::FRAC_2_PI), "-0.63661977236758138");
        assert_eq!(fmt_f64(1e20), "1.0000000000000000e20");
        assert_eq!(fmt_f64(1.5e-7), "1.4999999999999999e-7");
        for x in [std::f64::consts::PI, -1e-300, 123456.789, 4503599627370497.0, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn keys_are_sorted_and_integers_stay_integral() {
        let v = json!({"b": 1, "a": [1.0, 2], "c": {}});
        assert_eq!(render(&v), "{\n  \"a\": [\n    1.0000000000000000,\n    2\n  ],\n  \"b\": 1,\n  \"c\": {}\n}\n");
    }
}
