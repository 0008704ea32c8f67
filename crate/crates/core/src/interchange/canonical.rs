//! Canonical JSON: sorted keys, no insignificant whitespace, reals rounded
//! to six decimal places.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Number, Value};

use super::InterchangeError;

const SCALE: f64 = 1e6;

/// Rounds a real to six decimals; integers are left alone.
pub fn round_real(x: f64) -> f64 {
    let r = (x * SCALE).round() / SCALE;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| Number::from_f64(round_real(x))) {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write!(out, "{n}").expect("write to string"),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.into_iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("key serializes"));
                out.push(':');
                write_value(&map[key], out);
            }
            out.push('}');
        }
    }
}

/// Canonical text of an already-built JSON value.
pub fn canonical_text(value: &Value) -> String {
    let mut v = value.clone();
    round_value(&mut v);
    let mut out = String::new();
    write_value(&v, &mut out);
    out
}

pub fn to_canonical_string<T: Serialize>(value: &T) -> String {
    canonical_text(&serde_json::to_value(value).expect("interchange types serialize to JSON"))
}

/// Writes canonical JSON through a temporary sibling file, so a failed write
/// never leaves a partial file at `path`.
pub fn write_canonical<T: Serialize>(path: &Path, value: &T) -> Result<(), InterchangeError> {
    write_text_atomic(path, &(to_canonical_string(value) + "\n"))
}

pub fn write_text_atomic(path: &Path, text: &str) -> Result<(), InterchangeError> {
    let io = |source| InterchangeError::Io { path: path.display().to_string(), source };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(&tmp, text).map_err(io)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

/// Reads and deserializes a JSON file, reporting parse errors with line and
/// column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InterchangeError> {
    let text =
        fs::read_to_string(path).map_err(|source| InterchangeError::Io { path: path.display().to_string(), source })?;
    parse_json(&text, &path.display().to_string())
}

pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, InterchangeError> {
    serde_json::from_str(text).map_err(|e| InterchangeError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorted_compact_rounded() {
        let v = json!({"b": 1, "a": [0.1234567891, 2.0, "x\"y"], "c": {"z": null, "y": true}});
        assert_eq!(canonical_text(&v), r#"{"a":[0.123457,2.0,"x\"y"],"b":1,"c":{"y":true,"z":null}}"#);
    }

    #[test]
    fn negative_zero_normalized() {
        assert_eq!(canonical_text(&json!([-0.0000001])), "[0.0]");
    }

    #[test]
    fn parse_error_has_position() {
        let err = parse_json::<Value>("{\n  \"a\": ]", "mem").unwrap_err();
        match err {
            InterchangeError::Parse { line, column, .. } => assert_eq!((line, column), (2, 8)),
            other => panic!("{other}"),
        }
    }
}
