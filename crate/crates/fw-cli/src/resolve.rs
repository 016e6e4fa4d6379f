//! Parameter resolution: defaults <- config file <- --set overrides <- flags.
//!
//! Every command resolves to a JSON tree that is validated, executed, and
//! written verbatim into the run manifest so no default stays hidden.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

pub type Diagnostics = Vec<String>;

/// Deep-merge `over` onto `base` (objects merge, everything else replaces).
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Set a dotted path like `penalty.R` to a raw value (parsed as JSON when
/// possible, kept as a string otherwise).
pub fn set_path(tree: &mut Value, path: &str, raw: &str) -> Result<(), String> {
    let parsed: Value = serde_json::from_str(raw).unwrap_or(Value::String(raw.to_string()));
    let mut node = tree;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(format!("empty path segment in --set {path}"));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| format!("--set {path}: {part} is not an object"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Parse `key=value` pairs from repeated --set flags.
pub fn apply_sets(tree: &mut Value, sets: &[String]) -> Result<(), String> {
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| format!("--set expects key=value, got {s}"))?;
        set_path(tree, k.trim(), v.trim())?;
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {path:?}: {e}"))?;
    serde_json::from_str(&text).map_err(|e| format!("malformed JSON in {path:?}: {e}"))
}

// -- typed accessors used by validation and the runners ---------------------

pub fn get_f64(tree: &Value, key: &str) -> Option<f64> {
    tree.get(key)?.as_f64()
}

pub fn get_usize(tree: &Value, key: &str) -> Option<usize> {
    let v = tree.get(key)?;
    v.as_u64().map(|x| x as usize).or_else(|| {
        // tolerate 4096.0 from JSON configs
        v.as_f64().and_then(|f| {
            if f >= 0.0 && f.fract() == 0.0 {
                Some(f as usize)
            } else {
                None
            }
        })
    })
}

pub fn get_bool(tree: &Value, key: &str) -> Option<bool> {
    tree.get(key)?.as_bool()
}

pub fn get_str<'a>(tree: &'a Value, key: &str) -> Option<&'a str> {
    tree.get(key)?.as_str()
}

/// Common grid checks shared by most commands.
pub fn check_grid(tree: &Value, diags: &mut Diagnostics) {
    match get_f64(tree, "P") {
        Some(p) if p > 0.0 => {}
        Some(p) => diags.push(format!("P must be positive, got {p}")),
        None => diags.push("P must be a positive number".into()),
    }
    match get_usize(tree, "N") {
        Some(n) if n % 2 == 0 && n >= 8 => {}
        Some(n) if n % 2 != 0 => diags.push(format!("N must be even, got {n}")),
        Some(n) => diags.push(format!("N must be at least 8, got {n}")),
        None => diags.push("N must be a positive even integer".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn merge_nested_objects() {
        let mut base = json!({"a": 1, "p": {"x": 1.0, "y": 2.0}});
        merge(&mut base, json!({"p": {"y": 3.0}, "b": true}));
        assert_eq!(base, json!({"a": 1, "p": {"x": 1.0, "y": 3.0}, "b": true}));
    }

    #[test]
    fn set_dotted_path() {
        let mut tree = json!({"penalty": {"scale": 1.0}});
        set_path(&mut tree, "penalty.R", "2.5").unwrap();
        set_path(&mut tree, "q", "1e-2").unwrap();
        assert_eq!(tree["penalty"]["R"], json!(2.5));
        assert_eq!(tree["q"], json!(0.01));
    }

    #[test]
    fn bad_set_is_reported() {
        let mut tree = json!({});
        assert!(apply_sets(&mut tree, &["novalue".to_string()]).is_err());
    }
}
