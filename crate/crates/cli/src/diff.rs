//! Structural comparison of two JSON reports.

use std::fs;
use std::path::Path;

use serde_json::Value;

use plisskit_core::experiment::REPORT_FILE;

/// Loads a report file, or `report.json` inside a run directory.
pub fn load(path: &Path) -> Result<Value, (u8, String)> {
    let path = if path.is_dir() {
        path.join(REPORT_FILE)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&path).map_err(|e| (5, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| (5, format!("{}: {e}", path.display())))
}

/// Paths where `a` and `b` disagree. Numbers match when `|a - b| <= tol`.
pub fn compare(a: &Value, b: &Value, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    walk("", a, b, tol, &mut out);
    out
}

fn walk(path: &str, a: &Value, b: &Value, tol: f64, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (k, va) in x {
                let sub = format!("{path}/{k}");
                match y.get(k) {
                    Some(vb) => walk(&sub, va, vb, tol, out),
                    None => out.push(format!("{sub}: only in first")),
                }
            }
            for k in y.keys().filter(|k| !x.contains_key(*k)) {
                out.push(format!("{path}/{k}: only in second"));
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                out.push(format!("{path}: length {} vs {}", x.len(), y.len()));
                return;
            }
            for (i, (va, vb)) in x.iter().zip(y).enumerate() {
                walk(&format!("{path}/{i}"), va, vb, tol, out);
            }
        }
        (Value::Number(x), Value::Number(y)) => {
            let same = match (x.as_f64(), y.as_f64()) {
                (Some(p), Some(q)) => p == q || (p - q).abs() <= tol,
                _ => x == y,
            };
            if !same {
                out.push(format!("{path}: {x} vs {y}"));
            }
        }
        _ if a == b => {}
        _ => out.push(format!("{path}: {a} vs {b}")),
    }
}
