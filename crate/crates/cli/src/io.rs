//! Problem files.
//!
//! ```json
//! {"n": 2,
//!  "objective": {"A": [[1, 0], [0, -1]], "a": [0, 0], "c": 0},
//!  "constraints": [{"B": [[0, 0], [0, 0]], "b": [0, 0.5], "d": 0}],
//!  "bounds": {"l": -1, "u": 1},
//!  "affine_only": true}
//! ```
//!
//! Functions are `x^T A x + 2 a^T x + c`. Matrices are row-major and get
//! symmetrized with a warning when they are not symmetric. Omitted linear
//! parts and constants default to zero, and `B` may be omitted for affine
//! constraints.

use nalgebra::{DMatrix, DVector};
use quadlemma::{QuadForm, SymMatrix};
use serde_json::Value;

/// Asymmetry above this (relative) triggers a warning.
const ASYMMETRY_WARN: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub n: usize,
    pub objective: QuadForm<f64>,
    pub constraints: Vec<QuadForm<f64>>,
    pub bounds: Option<(f64, f64)>,
    pub affine_only: bool,
    pub warnings: Vec<String>,
}

/// Parse failure naming the offending field path, e.g.
/// `constraints[0].B[1]: expected 2 entries, got 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

fn err(field: &str, message: impl Into<String>) -> ParseError {
    ParseError { field: field.to_string(), message: message.into() }
}

fn number(v: &Value, field: &str) -> Result<f64, ParseError> {
    let x = v.as_f64().ok_or_else(|| err(field, format!("expected a number, got {v}")))?;
    if !x.is_finite() {
        return Err(err(field, "must be finite"));
    }
    Ok(x)
}

fn vector(v: &Value, n: usize, field: &str) -> Result<DVector<f64>, ParseError> {
    let arr = v.as_array().ok_or_else(|| err(field, "expected an array"))?;
    if arr.len() != n {
        return Err(err(field, format!("expected {n} entries, got {}", arr.len())));
    }
    let xs = arr
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{field}[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DVector::from_vec(xs))
}

fn matrix(v: &Value, n: usize, field: &str, warnings: &mut Vec<String>) -> Result<SymMatrix<f64>, ParseError> {
    let rows = v.as_array().ok_or_else(|| err(field, "expected an array of rows"))?;
    if rows.len() != n {
        return Err(err(field, format!("expected {n} rows, got {}", rows.len())));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let r = vector(row, n, &format!("{field}[{i}]"))?;
        m.set_row(i, &r.transpose());
    }
    let (s, asym) = SymMatrix::symmetrized(m).map_err(|e| err(field, e.to_string()))?;
    if asym > ASYMMETRY_WARN {
        warnings.push(format!("{field}: not symmetric (relative asymmetry {asym:.3e}); using (M + M^T) / 2"));
    }
    Ok(s)
}

fn quad_form(
    obj: &Value,
    keys: (&str, &str, &str),
    n: usize,
    field: &str,
    require_quad: bool,
    warnings: &mut Vec<String>,
) -> Result<QuadForm<f64>, ParseError> {
    let map = obj.as_object().ok_or_else(|| err(field, "expected an object"))?;
    for k in map.keys() {
        if k != keys.0 && k != keys.1 && k != keys.2 {
            return Err(err(&format!("{field}.{k}"), "unknown field"));
        }
    }
    let quad = match map.get(keys.0) {
        Some(v) => matrix(v, n, &format!("{field}.{}", keys.0), warnings)?,
        None if require_quad => return Err(err(&format!("{field}.{}", keys.0), "missing")),
        None => SymMatrix::zeros(n),
    };
    let lin = match map.get(keys.1) {
        Some(v) => vector(v, n, &format!("{field}.{}", keys.1))?,
        None => DVector::zeros(n),
    };
    let constant = match map.get(keys.2) {
        Some(v) => number(v, &format!("{field}.{}", keys.2))?,
        None => 0.0,
    };
    QuadForm::new(quad, lin, constant).map_err(|e| err(field, e.to_string()))
}

/// Parses a problem file from JSON text.
pub fn parse_problem(text: &str) -> Result<ProblemFile, ParseError> {
    let root: Value = serde_json::from_str(text).map_err(|e| err("", format!("invalid JSON: {e}")))?;
    let map = root.as_object().ok_or_else(|| err("", "top level must be an object"))?;
    for k in map.keys() {
        if !matches!(k.as_str(), "n" | "objective" | "constraints" | "bounds" | "affine_only") {
            return Err(err(k, "unknown field"));
        }
    }
    let n = map
        .get("n")
        .ok_or_else(|| err("n", "missing"))?
        .as_u64()
        .filter(|&n| n >= 1)
        .ok_or_else(|| err("n", "expected a positive integer"))? as usize;
    let mut warnings = Vec::new();
    let objective = quad_form(
        map.get("objective").ok_or_else(|| err("objective", "missing"))?,
        ("A", "a", "c"),
        n,
        "objective",
        true,
        &mut warnings,
    )?;
    let cons = match map.get("constraints") {
        None => Vec::new(),
        Some(v) => v.as_array().ok_or_else(|| err("constraints", "expected an array"))?.clone(),
    };
    let affine_only = match map.get("affine_only") {
        None => false,
        Some(v) => v.as_bool().ok_or_else(|| err("affine_only", "expected a boolean"))?,
    };
    let mut constraints = Vec::with_capacity(cons.len());
    for (i, c) in cons.iter().enumerate() {
        let field = format!("constraints[{i}]");
        let h = quad_form(c, ("B", "b", "d"), n, &field, false, &mut warnings)?;
        if affine_only && !h.quad.is_zero(0.0) {
            return Err(err(&format!("{field}.B"), "must be zero when affine_only is set"));
        }
        constraints.push(h);
    }
    let bounds = match map.get("bounds") {
        None | Some(Value::Null) => None,
        Some(b) => {
            let bm = b.as_object().ok_or_else(|| err("bounds", "expected an object"))?;
            let l = number(bm.get("l").ok_or_else(|| err("bounds.l", "missing"))?, "bounds.l")?;
            let u = number(bm.get("u").ok_or_else(|| err("bounds.u", "missing"))?, "bounds.u")?;
            if l > u {
                return Err(err("bounds", format!("l = {l} exceeds u = {u}")));
            }
            Some((l, u))
        }
    };
    Ok(ProblemFile { n, objective, constraints, bounds, affine_only, warnings })
}

impl ProblemFile {
    /// The single constraint of an equality or interval problem.
    pub fn single_constraint(&self) -> Result<&QuadForm<f64>, ParseError> {
        match self.constraints.as_slice() {
            [h] => Ok(h),
            other => Err(err("constraints", format!("expected exactly one constraint, got {}", other.len()))),
        }
    }

    pub fn require_bounds(&self) -> Result<(f64, f64), ParseError> {
        self.bounds.ok_or_else(|| err("bounds", "missing"))
    }

    /// `(b_i, d_i)` pairs of affine constraints.
    pub fn affine_maps(&self) -> Result<Vec<(DVector<f64>, f64)>, ParseError> {
        if self.constraints.is_empty() {
            return Err(err("constraints", "expected at least one constraint"));
        }
        self.constraints
            .iter()
            .enumerate()
            .map(|(i, h)| {
                if h.quad.is_zero(0.0) {
                    Ok((h.lin.clone(), h.constant))
                } else {
                    Err(err(&format!("constraints[{i}].B"), "must be zero for numerical range problems"))
                }
            })
            .collect()
    }
}
