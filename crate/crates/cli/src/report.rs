//! Canonical JSON for run reports.
//!
//! Object keys come out sorted (serde_json's default map is ordered) and
//! every float is rounded to 6 significant digits before printing, so equal
//! runs give byte-identical files.

use serde_json::{Map, Number, Value};

/// Rounds `x` to 6 significant digits. Non-finite values have no JSON form
/// and map to `None`.
pub fn round_sig6(x: f64) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    let r: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    // Avoid a distinct "-0" in the output.
    Some(if r == 0.0 { 0.0 } else { r })
}

/// Compact text for a float with 6 significant digits, as used in CSV output.
pub fn fmt_sig6(x: f64) -> String {
    match round_sig6(x) {
        Some(r) => Number::from_f64(r).expect("finite").to_string(),
        None => String::new(),
    }
}

pub fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(round_sig6)
            .and_then(Number::from_f64)
            .map_or(Value::Null, Value::Number),
        Value::Array(xs) => Value::Array(xs.into_iter().map(canonicalize).collect()),
        Value::Object(m) => Value::Object(
            m.into_iter()
                .map(|(k, v)| (k, canonicalize(v)))
                .collect::<Map<_, _>>(),
        ),
        other => other,
    }
}

/// Pretty-printed canonical form with a trailing newline.
pub fn to_canonical_string(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&canonicalize(v)).expect("json value serializes");
    s.push('\n');
    s
}
