//! JSON report assembly. Every report carries the same top-level keys, with
//! `null` where a key does not apply, so consumers can rely on the shape.

use nalgebra::{DMatrix, DVector};
use quadlemma::{PencilInterval, SymMatrix, Tolerances};
use serde_json::{json, Map, Value};

pub const KEYS: [&str; 13] = [
    "command",
    "file",
    "verdict",
    "outcome",
    "certificate",
    "counterexample",
    "branch",
    "value",
    "x_star",
    "mu_star",
    "details",
    "diagnostics",
    "error",
];

/// Finite numbers as JSON numbers, infinities as the strings `"inf"` and
/// `"-inf"`, NaN as `null`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        Value::Null
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn vector(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn opt_vector(v: Option<&DVector<f64>>) -> Value {
    v.map_or(Value::Null, vector)
}

pub fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(m.row_iter().map(|r| Value::Array(r.iter().map(|&x| num(x)).collect())).collect())
}

pub fn sym(m: &SymMatrix<f64>) -> Value {
    matrix(m.as_matrix())
}

pub fn pencil(p: &PencilInterval<f64>, singleton: f64) -> Value {
    json!({
        "lo": num(p.lo),
        "hi": num(p.hi),
        "empty": p.empty,
        "lo_attained": p.lo_attained,
        "hi_attained": p.hi_attained,
        "singleton": p.is_singleton(singleton),
    })
}

/// A report with every key present and set to `null`.
#[derive(Debug, Clone)]
pub struct Report {
    fields: Map<String, Value>,
    pub exit_code: i32,
}

impl Report {
    pub fn new(command: &str, file: &str, tols: &Tolerances<f64>, tol_override: Option<f64>, seed: u64) -> Self {
        let mut fields = Map::new();
        for k in KEYS {
            fields.insert(k.to_string(), Value::Null);
        }
        fields.insert("command".into(), json!(command));
        fields.insert("file".into(), json!(file));
        fields.insert(
            "diagnostics".into(),
            json!({
                "tolerances": serde_json::to_value(tols).unwrap_or(Value::Null),
                "tol_override": opt_num(tol_override),
                "seed": seed,
                "pencil_interval": Value::Null,
                "warnings": [],
                "notes": [],
            }),
        );
        Report { fields, exit_code: 0 }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        debug_assert!(KEYS.contains(&key), "unknown report key {key}");
        self.fields.insert(key.to_string(), value);
    }

    fn diagnostics(&mut self) -> &mut Map<String, Value> {
        self.fields
            .get_mut("diagnostics")
            .and_then(Value::as_object_mut)
            .expect("diagnostics is always an object")
    }

    pub fn set_pencil(&mut self, p: Option<&PencilInterval<f64>>, singleton: f64) {
        let v = p.map_or(Value::Null, |p| pencil(p, singleton));
        self.diagnostics().insert("pencil_interval".into(), v);
    }

    fn push(&mut self, list: &str, items: &[String]) {
        if let Some(Value::Array(a)) = self.diagnostics().get_mut(list) {
            a.extend(items.iter().map(|s| json!(s)));
        }
    }

    pub fn warn(&mut self, items: &[String]) {
        self.push("warnings", items);
    }

    pub fn note(&mut self, items: &[String]) {
        self.push("notes", items);
    }

    pub fn fail(&mut self, kind: &str, message: String, code: i32) {
        self.set("error", json!({"kind": kind, "message": message}));
        self.exit_code = code;
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.fields)
    }
}
