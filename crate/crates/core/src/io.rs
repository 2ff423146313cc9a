//! Domain and boundary-set specifications: builtin family names, inline JSON
//! or paths to JSON documents.

use std::path::Path;

use serde_json::Value;

use crate::error::{FracError, Result};
use crate::geometry::{Aabb, BoundarySet, RectilinearDomain};
use crate::scalar::Dyadic;

fn parse_err(msg: impl Into<String>) -> FracError {
    FracError::Parse(msg.into())
}

/// A dyadic number given as a JSON string (`"3/2^4"`, `"0.25"`) or number.
pub fn dyadic_from_json(v: &Value) -> Result<Dyadic> {
    match v {
        Value::String(s) => s.parse(),
        Value::Number(n) => n
            .to_string()
            .parse()
            .map_err(|_| parse_err(format!("not a dyadic rational: {n}"))),
        other => Err(parse_err(format!("expected a dyadic number, got {other}"))),
    }
}

fn point_from_json<const N: usize>(v: &Value) -> Result<[Dyadic; N]> {
    let arr = v.as_array().ok_or_else(|| parse_err(format!("expected a point, got {v}")))?;
    if arr.len() != N {
        return Err(parse_err(format!("point {v} must have {N} coordinates")));
    }
    let coords: Vec<Dyadic> = arr.iter().map(dyadic_from_json).collect::<Result<_>>()?;
    Ok(std::array::from_fn(|k| coords[k]))
}

/// Segments `[{"from": [..], "to": [..]}]` as axis-aligned boxes.
fn segments_from_json<const N: usize>(v: &Value) -> Result<Vec<Aabb<Dyadic, N>>> {
    let arr = v.as_array().ok_or_else(|| parse_err("segments must be an array"))?;
    arr.iter()
        .map(|s| {
            let a: [Dyadic; N] = point_from_json(&s["from"])?;
            let b: [Dyadic; N] = point_from_json(&s["to"])?;
            let lo = std::array::from_fn(|k| if a[k] < b[k] { a[k] } else { b[k] });
            let hi = std::array::from_fn(|k| if a[k] < b[k] { b[k] } else { a[k] });
            Ok(Aabb::new(lo, hi))
        })
        .collect()
}

/// `{"cells": [[i, j], ...], "cell_size": "1/2^k", "slits": [...]}` in any
/// dimension.
pub fn cells_domain_from_json<const N: usize>(v: &Value) -> Result<RectilinearDomain<N>> {
    let cells = v["cells"].as_array().ok_or_else(|| parse_err("domain needs a \"cells\" array"))?;
    let cells: Vec<[i64; N]> = cells
        .iter()
        .map(|c| {
            let idx = c.as_array().filter(|a| a.len() == N);
            let idx = idx.ok_or_else(|| parse_err(format!("cell {c} must have {N} integer indices")))?;
            let ints: Vec<i64> = idx
                .iter()
                .map(|i| i.as_i64().ok_or_else(|| parse_err(format!("cell index {i} is not an integer"))))
                .collect::<Result<_>>()?;
            Ok(std::array::from_fn(|k| ints[k]))
        })
        .collect::<Result<_>>()?;
    let size = match v.get("cell_size") {
        Some(s) => dyadic_from_json(s)?,
        None => Dyadic::ONE,
    };
    let slits = match v.get("slits") {
        Some(s) => segments_from_json(s)?,
        None => Vec::new(),
    };
    let name = v.get("name").and_then(Value::as_str).unwrap_or("cells");
    Ok(RectilinearDomain::from_cells(size, cells, slits)?.with_name(name))
}

/// Builtin planar family by name with optional parameters.
///
/// `square` (`side`), `l_shape`, `slit_square`, `rooms` (`k`, `widths` or
/// `j`, `corridor_length`).
pub fn domain_family(name: &str, params: &Value) -> Result<RectilinearDomain<2>> {
    let get = |key: &str| params.get(key).filter(|v| !v.is_null());
    match name {
        "square" => RectilinearDomain::square(get("side").map(dyadic_from_json).transpose()?.unwrap_or(Dyadic::ONE)),
        "l_shape" => RectilinearDomain::l_shape(),
        "slit_square" => RectilinearDomain::slit_square(),
        "rooms" | "rooms_and_corridors" => {
            let k = get("k").map_or(Some(2), Value::as_u64).ok_or_else(|| parse_err("k must be a positive integer"))?;
            let k = k as usize;
            let widths = match (get("widths"), get("j")) {
                (Some(w), _) => w
                    .as_array()
                    .ok_or_else(|| parse_err("widths must be an array"))?
                    .iter()
                    .map(dyadic_from_json)
                    .collect::<Result<Vec<_>>>()?,
                (None, Some(j)) => {
                    let j = j.as_u64().ok_or_else(|| parse_err("j must be a nonnegative integer"))?;
                    vec![Dyadic::pow2(-(j as i32)); k.saturating_sub(1)]
                }
                (None, None) => vec![Dyadic::pow2(-1); k.saturating_sub(1)],
            };
            let len = get("corridor_length").map(dyadic_from_json).transpose()?.unwrap_or(Dyadic::pow2(-1));
            RectilinearDomain::rooms_and_corridors(k, &widths, len)
        }
        other => Err(parse_err(format!("unknown domain family '{other}'"))),
    }
}

/// A planar domain from a JSON document in either form.
pub fn domain_from_json(v: &Value) -> Result<RectilinearDomain<2>> {
    if let Some(name) = v.get("family").and_then(Value::as_str) {
        domain_family(name, v.get("params").unwrap_or(&Value::Null))
    } else if v.get("cells").is_some() {
        cells_domain_from_json(v)
    } else {
        Err(parse_err("domain JSON needs \"family\" or \"cells\""))
    }
}

fn json_arg(spec: &str) -> Result<Option<Value>> {
    let trimmed = spec.trim_start();
    if trimmed.starts_with('{') {
        return Ok(Some(serde_json::from_str(trimmed)?));
    }
    if spec.ends_with(".json") || Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec)?;
        return Ok(Some(serde_json::from_str(&text)?));
    }
    Ok(None)
}

/// Family name, inline JSON, or path to a JSON file.
pub fn parse_domain(spec: &str) -> Result<RectilinearDomain<2>> {
    match json_arg(spec)? {
        Some(v) => domain_from_json(&v),
        None => domain_family(spec, &Value::Null),
    }
}

/// Boundary set `F` by name (`corner`, `boundary`, `edge`, `side0-`,
/// `side1+`, ...), inline JSON `{"segments": [...]}`, or a JSON file.
pub fn parse_boundary_set<const N: usize>(domain: &RectilinearDomain<N>, spec: &str) -> Result<BoundarySet<N>> {
    if let Some(v) = json_arg(spec)? {
        let segs = v.get("segments").ok_or_else(|| parse_err("boundary set JSON needs \"segments\""))?;
        return BoundarySet::new(domain, segments_from_json(segs)?);
    }
    match spec {
        "corner" => Ok(BoundarySet::corner(domain)),
        "boundary" | "whole" => Ok(BoundarySet::whole_boundary(domain)),
        "edge" => Ok(BoundarySet::side(domain, 0, false)),
        _ => {
            let rest = spec.strip_prefix("side").ok_or_else(|| parse_err(format!("unknown boundary set '{spec}'")))?;
            let (axis, sign) = rest.split_at(rest.len().saturating_sub(1));
            let axis: usize = axis.parse().map_err(|_| parse_err(format!("unknown boundary set '{spec}'")))?;
            if axis >= N || !(sign == "+" || sign == "-") {
                return Err(parse_err(format!("unknown boundary set '{spec}'")));
            }
            Ok(BoundarySet::side(domain, axis, sign == "+"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn families_and_cells_agree() {
        let a = parse_domain("l_shape").unwrap();
        let b = parse_domain(r#"{"cells": [[0,0],[1,0],[0,1]], "cell_size": "1"}"#).unwrap();
        assert_eq!(a.cells(), b.cells());
        assert_eq!(a.measure(), b.measure());
        let r = domain_from_json(&json!({"family": "rooms", "params": {"k": 3, "j": 2}})).unwrap();
        assert_eq!(r.name(), "rooms_and_corridors(3;1/2^2,1/2^2)");
        assert!(parse_domain("torus").is_err());
        assert!(parse_domain(r#"{"cells": [[0,0],[2,0]]}"#).is_err());
    }

    #[test]
    fn boundary_specs() {
        let d = parse_domain("square").unwrap();
        assert_eq!(parse_boundary_set(&d, "corner").unwrap().label(), "corner");
        assert_eq!(parse_boundary_set(&d, "side1+").unwrap().label(), "side1+");
        let seg = parse_boundary_set(&d, r#"{"segments": [{"from": [0, 0], "to": ["1/2", 0]}]}"#).unwrap();
        assert!((seg.distance(&[0.75, 0.5]) - (0.0625f64 + 0.25).sqrt()).abs() < 1e-15);
        assert!(parse_boundary_set(&d, r#"{"segments": [{"from": ["1/2", "1/2"], "to": ["1/2", "1/2"]}]}"#).is_err());
        assert!(parse_boundary_set(&d, "side2+").is_err());
    }
}
