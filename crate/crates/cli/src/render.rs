//! `--pretty` output: one `path: value` line per scalar, with long numeric
//! arrays abbreviated.

use serde_json::Value;

const INLINE_ARRAY: usize = 8;

pub fn pretty(doc: &Value) -> String {
    let mut out = String::new();
    walk(doc, "", &mut out);
    out
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("n/a".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(match n.as_f64() {
            Some(x) if n.is_f64() && x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e9) => format!("{x:.6e}"),
            Some(x) if n.is_f64() => format!("{x:.10}").trim_end_matches('0').trim_end_matches('.').to_string(),
            _ => n.to_string(),
        }),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn walk(v: &Value, path: &str, out: &mut String) {
    if let Some(s) = scalar(v) {
        out.push_str(&format!("{}: {s}\n", if path.is_empty() { "value" } else { path }));
        return;
    }
    let join = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
    match v {
        Value::Array(items) if items.iter().all(|x| scalar(x).is_some()) => {
            if items.len() <= INLINE_ARRAY {
                let parts: Vec<String> = items.iter().filter_map(scalar).collect();
                out.push_str(&format!("{path}: [{}]\n", parts.join(", ")));
            } else {
                out.push_str(&format!("{path}: [{} values]\n", items.len()));
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                walk(x, &join(&i.to_string()), out);
            }
        }
        Value::Object(map) => {
            for (k, x) in map {
                walk(x, &join(k), out);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flattens_nested_documents() {
        let doc = json!({"a": {"b": 1.5, "c": [1, 2]}, "d": "x", "e": null, "f": (0..20).collect::<Vec<_>>(), "g": 3.5e-13});
        let s = pretty(&doc);
        assert!(s.contains("a.b: 1.5\n"));
        assert!(s.contains("a.c: [1, 2]\n"));
        assert!(s.contains("d: x\n"));
        assert!(s.contains("e: n/a\n"));
        assert!(s.contains("f: [20 values]\n"));
        assert!(s.contains("g: 3.500000e-13\n"));
    }
}
