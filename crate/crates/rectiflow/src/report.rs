//! Deterministic report rendering. Two runs on the same inputs must produce
//! byte-identical files, so reports avoid anything environmental (timing,
//! paths, locale) and the JSON writer fixes the two degrees of freedom
//! serializers usually leave open: key order (sorted) and float formatting
//! (scientific, 17 significant digits, enough to round-trip every f64).

use crate::{Error, Result};
use serde_json::Value;
use std::path::Path;

/// A float formatted so it parses back to the same bits. Non-finite values
/// have no JSON spelling; the caller gets them as quoted markers via
/// [`float`], never through raw numbers.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Wrap an f64 as a JSON value: a full-precision number when finite, a
/// quoted marker ("NaN", "inf", "-inf") when not.
pub fn float(v: f64) -> Value {
    if v.is_finite() {
        serde_json::Number::from_f64(v).map(Value::Number).unwrap()
    } else if v.is_nan() {
        Value::String("NaN".into())
    } else if v > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

/// Render a JSON tree deterministically (sorted keys, fixed float format,
/// two-space indentation).
pub fn render(value: &Value) -> String {
    let mut out = String::new();
    render_into(value, 0, &mut out);
    out.push('\n');
    out
}

fn render_into(value: &Value, indent: usize, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else {
                out.push_str(&fmt_float(n.as_f64().unwrap()));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push('\n');
                pad(indent + 1, out);
                render_into(item, indent + 1, out);
            }
            out.push('\n');
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.into_iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push('\n');
                pad(indent + 1, out);
                out.push_str(&serde_json::to_string(key).unwrap());
                out.push_str(": ");
                render_into(&map[key], indent + 1, out);
            }
            out.push('\n');
            pad(indent, out);
            out.push('}');
        }
    }
}

fn pad(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// Render and write, creating parent directories.
pub fn write_to(path: &Path, value: &Value) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, render(value))
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

/// Write a CSV table with the same float discipline as the JSON reports.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, text)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_come_out_sorted() {
        let v = json!({"zeta": 1, "alpha": {"nested_b": 2, "nested_a": 3}});
        let r = render(&v);
        let alpha = r.find("alpha").unwrap();
        let zeta = r.find("zeta").unwrap();
        assert!(alpha < zeta);
        let b = r.find("nested_b").unwrap();
        let a = r.find("nested_a").unwrap();
        assert!(a < b);
    }

    #[test]
    fn floats_round_trip_bit_for_bit() {
        for v in [
            std::f64::consts::PI,
            0.1,
            -0.0,
            1e300,
            5e-324,
            2.2250738585072014e-308,
            -123456.78901234567,
        ] {
            let s = fmt_float(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} printed as {s}");
        }
    }

    #[test]
    fn rendered_output_is_valid_json() {
        let v = json!({
            "a": [1.5, 2, true, null, "x\"y"],
            "b": {"c": -0.25}
        });
        let r = render(&v);
        let parsed: Value = serde_json::from_str(&r).unwrap();
        assert_eq!(parsed["b"]["c"], json!(-0.25));
        assert_eq!(parsed["a"][4], json!("x\"y"));
    }

    #[test]
    fn non_finite_floats_become_markers() {
        assert_eq!(float(f64::NAN), json!("NaN"));
        assert_eq!(float(f64::INFINITY), json!("inf"));
        assert_eq!(float(f64::NEG_INFINITY), json!("-inf"));
        assert_eq!(float(2.0), json!(2.0));
    }

    #[test]
    fn integers_stay_integers() {
        let r = render(&json!({"n": 3, "m": -7}));
        assert!(r.contains("\"n\": 3"));
        assert!(r.contains("\"m\": -7"));
        assert!(!r.contains("3.0"));
    }

    #[test]
    fn rendering_is_stable() {
        let v = json!({"b": [0.1, 0.2], "a": "s"});
        assert_eq!(render(&v), render(&v));
        let expected = "{\n  \"a\": \"s\",\n  \"b\": [\n    1.0000000000000001e-1,\n    2.0000000000000001e-1\n  ]\n}\n";
        assert_eq!(render(&v), expected);
    }
}
