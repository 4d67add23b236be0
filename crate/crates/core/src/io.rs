//! JSON and CSV formats.
//!
//! Problem files look like
//! `{"nx": 2, "ny": 2, "mu": ["1/2", 0.5], "nu": [...], "cost": [[0, "inf"], ...]}`
//! where `"inf"` (any case) marks an infinite cell. Exact values are written
//! as `"p/q"` strings, float values as JSON numbers.

use serde_json::{json, Map, Value};

use crate::dual::{DualPair, Potential};
use crate::error::{Error, Result};
use crate::flow::TransportProfile;
use crate::kellerer::CellSet;
use crate::measure::{CostMatrix, Coupling, ExtendedCost, Marginal, Problem};
use crate::scalar::{parse_scalar, Scalar};

fn parse_error(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn value_token(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.trim().to_string()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(parse_error(format!("expected a number or string, got {other}"))),
    }
}

fn parse_value<T: Scalar>(v: &Value) -> Result<T> {
    parse_scalar(&value_token(v)?)
}

fn parse_cost<T: Scalar>(v: &Value) -> Result<ExtendedCost<T>> {
    let token = value_token(v)?;
    if token.eq_ignore_ascii_case("inf") {
        Ok(ExtendedCost::Infinite)
    } else {
        Ok(ExtendedCost::Finite(parse_scalar(&token)?))
    }
}

fn array<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Vec<Value>> {
    obj.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| parse_error(format!("missing array `{key}`")))
}

fn size(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|n| n as usize)
        .ok_or_else(|| parse_error(format!("missing nonnegative integer `{key}`")))
}

pub fn parse_problem<T: Scalar>(text: &str) -> Result<Problem<T>> {
    let root: Value = serde_json::from_str(text).map_err(|e| parse_error(e.to_string()))?;
    let obj = root.as_object().ok_or_else(|| parse_error("problem must be a JSON object"))?;
    let (nx, ny) = (size(obj, "nx")?, size(obj, "ny")?);
    let mu = array(obj, "mu")?.iter().map(parse_value).collect::<Result<Vec<T>>>()?;
    let nu = array(obj, "nu")?.iter().map(parse_value).collect::<Result<Vec<T>>>()?;
    if mu.len() != nx {
        return Err(Error::LengthMismatch {
            expected: nx,
            got: mu.len(),
        });
    }
    if nu.len() != ny {
        return Err(Error::LengthMismatch {
            expected: ny,
            got: nu.len(),
        });
    }
    let rows = array(obj, "cost")?;
    if rows.len() != nx {
        return Err(Error::DimensionMismatch {
            expected: (nx, ny),
            got: (rows.len(), ny),
        });
    }
    let mut cells = Vec::with_capacity(nx * ny);
    for row in rows {
        let row = row.as_array().ok_or_else(|| parse_error("cost rows must be arrays"))?;
        if row.len() != ny {
            return Err(Error::DimensionMismatch {
                expected: (nx, ny),
                got: (nx, row.len()),
            });
        }
        for v in row {
            cells.push(parse_cost(v)?);
        }
    }
    Problem::new(
        CostMatrix::new(nx, ny, cells)?,
        Marginal::from_weights(mu)?,
        Marginal::from_weights(nu)?,
    )
}

/// `"p/q"` in exact mode, a JSON number in float mode.
pub fn scalar_json<T: Scalar>(x: &T) -> Value {
    if T::EXACT {
        Value::String(x.render())
    } else {
        serde_json::Number::from_f64(x.to_f64())
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(x.render()))
    }
}

pub fn extended_json<T: Scalar>(x: &ExtendedCost<T>) -> Value {
    match x {
        ExtendedCost::Finite(v) => scalar_json(v),
        ExtendedCost::Infinite => Value::String("inf".into()),
    }
}

pub fn potential_json<T: Scalar>(x: &Potential<T>) -> Value {
    match x {
        Potential::Finite(v) => scalar_json(v),
        Potential::NegInfinite => Value::String("-inf".into()),
    }
}

pub fn problem_json<T: Scalar>(p: &Problem<T>) -> Value {
    let (nx, ny) = p.cost.dims();
    let cost: Vec<Value> = (0..nx)
        .map(|i| Value::Array((0..ny).map(|j| extended_json(p.cost.get(i, j))).collect()))
        .collect();
    json!({
        "nx": nx,
        "ny": ny,
        "mu": p.mu.weights().iter().map(scalar_json).collect::<Vec<_>>(),
        "nu": p.nu.weights().iter().map(scalar_json).collect::<Vec<_>>(),
        "cost": cost,
    })
}

pub fn dual_certificate_json<T: Scalar>(pair: &DualPair<T>, feasible: bool) -> Value {
    json!({
        "phi": pair.phi.iter().map(potential_json).collect::<Vec<_>>(),
        "psi": pair.psi.iter().map(potential_json).collect::<Vec<_>>(),
        "objective": potential_json(&pair.objective),
        "feasible": feasible,
    })
}

/// Positive entries as `[i, j, value]` triples in row-major order.
pub fn coupling_json<T: Scalar>(pi: &Coupling<T>) -> Value {
    json!({
        "nx": pi.nx(),
        "ny": pi.ny(),
        "entries": pi
            .entries()
            .iter()
            .map(|(&(i, j), v)| json!([i, j, scalar_json(v)]))
            .collect::<Vec<_>>(),
    })
}

fn as_index(v: &Value) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| parse_error(format!("expected an index, got {v}")))
}

fn parse_pairs(items: &[Value], nx: usize, ny: usize) -> Result<CellSet> {
    let pairs = items
        .iter()
        .map(|p| match p.as_array().map(Vec::as_slice) {
            Some([i, j]) => Ok((as_index(i)?, as_index(j)?)),
            _ => Err(parse_error(format!("expected an [i, j] pair, got {p}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    CellSet::from_pairs(nx, ny, &pairs)
}

fn dense_flags(items: &[Value], nx: usize, ny: usize) -> Option<Vec<Vec<bool>>> {
    if items.len() != nx {
        return None;
    }
    items
        .iter()
        .map(|row| {
            let row = row.as_array()?;
            if row.len() != ny {
                return None;
            }
            row.iter()
                .map(|v| match v.as_u64() {
                    Some(0) => Some(false),
                    Some(1) => Some(true),
                    _ => v.as_bool(),
                })
                .collect()
        })
        .collect()
}

/// A cell set given as `{"pairs": [[i, j], ...]}`, `{"matrix": [[0, 1], ...]}`
/// or a bare array. A bare array that has the shape of an `nx × ny` 0/1 grid
/// is read as a grid, anything else as a pair list.
pub fn parse_cell_set(text: &str, nx: usize, ny: usize) -> Result<CellSet> {
    let root: Value = serde_json::from_str(text).map_err(|e| parse_error(e.to_string()))?;
    let (items, forced) = match &root {
        Value::Array(items) => (items, None),
        Value::Object(obj) => match (obj.get("pairs"), obj.get("matrix")) {
            (Some(Value::Array(p)), None) => (p, Some(false)),
            (None, Some(Value::Array(m))) => (m, Some(true)),
            _ => return Err(parse_error("expected exactly one of `pairs` or `matrix`")),
        },
        _ => return Err(parse_error("cell set must be an array or object")),
    };
    let dense = dense_flags(items, nx, ny);
    match (forced, dense) {
        (Some(true), None) => Err(parse_error(format!("matrix must be {nx}x{ny} with 0/1 entries"))),
        (Some(true), Some(flags)) | (None, Some(flags)) => Ok(CellSet::from_fn(nx, ny, |i, j| flags[i][j])),
        (Some(false), _) | (None, None) => parse_pairs(items, nx, ny),
    }
}

pub fn cell_set_json(l: &CellSet) -> Value {
    json!({ "pairs": l.cells().map(|(i, j)| json!([i, j])).collect::<Vec<_>>() })
}

pub const PROFILE_CSV_HEADER: &str = "mass,cost";

pub fn profile_csv<T: Scalar>(profile: &TransportProfile<T>) -> String {
    let mut out = format!("{PROFILE_CSV_HEADER}\n");
    for (m, c) in profile.breakpoints() {
        out.push_str(&format!("{},{}\n", m.render(), c.render()));
    }
    out
}

pub const SWEEP_CSV_HEADER: &str = "M,P_trunc";

pub fn sweep_csv<T: Scalar>(levels: &[T], values: &[ExtendedCost<T>]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for (m, v) in levels.iter().zip(values) {
        out.push_str(&format!("{},{}\n", m.render(), v));
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}
