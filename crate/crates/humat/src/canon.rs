//! Canonical text encoding of model values.
//!
//! Snapshots and trace records must serialize to identical bytes whenever
//! two states are semantically equal, so every real number is rendered the
//! same way: scientific notation with 17 significant digits, which
//! round-trips any finite f64 exactly. JSON objects are emitted with keys in
//! ascending order (serde_json's default `Map` is a BTreeMap) and no
//! whitespace.

use serde_json::Value;

/// Render a finite f64 with 17 significant digits. Negative zero is
/// normalized to zero so equal values cannot produce distinct bytes.
pub fn format_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Parse a decimal satisfaction/importance/etc. field, rejecting non-finite
/// values.
pub fn parse_f64(text: &str) -> Result<f64, String> {
    let x: f64 = text
        .parse()
        .map_err(|e| format!("not a decimal number: {e}"))?;
    if !x.is_finite() {
        return Err(format!("non-finite value {text}"));
    }
    Ok(x)
}

/// Canonical JSON value for a real number: its 17-digit decimal as a string.
pub fn f64_value(x: f64) -> Value {
    Value::String(format_f64(x))
}

/// Compact canonical JSON bytes (sorted keys, no whitespace, UTF-8).
pub fn to_canonical_json(value: &Value) -> String {
    // serde_json::Map is a BTreeMap by default, so key order is already
    // canonical; compact rendering does the rest.
    serde_json::to_string(value).expect("JSON value serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_roundtrips_exactly() {
        for &x in &[
            0.0,
            1.0,
            -1.0,
            0.1,
            2.0 / 3.0,
            f64::MIN_POSITIVE,
            1.0 - 1e-16,
            0.7,
            -0.12345678901234568,
        ] {
            let s = format_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "through {s}");
        }
    }

    #[test]
    fn negative_zero_is_normalized() {
        assert_eq!(format_f64(-0.0), format_f64(0.0));
    }

    #[test]
    fn parse_rejects_non_finite() {
        assert!(parse_f64("inf").is_err());
        assert!(parse_f64("NaN").is_err());
        assert!(parse_f64("1e999").is_err());
        assert!(parse_f64("abc").is_err());
        assert_eq!(parse_f64("5.0000000000000000e-1").unwrap(), 0.5);
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let v = serde_json::json!({"zeta": 1, "alpha": {"b": 2, "a": 3}});
        assert_eq!(
            to_canonical_json(&v),
            r#"{"alpha":{"a":3,"b":2},"zeta":1}"#
        );
    }
}
