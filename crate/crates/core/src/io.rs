//! JSON input schemas and CSV export.
//!
//! Exact inputs accept integers, decimal numbers or strings (`"0.125"`,
//! `"-3/7"`) and `[num, den]` pairs. Decimals are read exactly, so `0.1`
//! means `1/10`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::expint::{PlCell, PlConcaveFunction};
use crate::filtration::{FiltrationLevel, GradedFiltration};
use crate::geometry::{AffineForm, Halfspace, Polytope, Simplex};
use crate::measure::{Atom, DhMeasure};
use crate::scalar::{to_real, Real};

fn err(path: &str, what: impl std::fmt::Display) -> Error {
    Error::Parse(format!("at {path}: {what}"))
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], i64::from_str(&s[i + 1..]).ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n = BigInt::from_str(&format!("{int}{frac}")).ok()?;
    let e = exp - frac.len() as i64;
    let ten = BigInt::from(10u8);
    let scale = num_traits::pow(ten, e.unsigned_abs() as usize);
    let mut q = if e >= 0 {
        BigRational::from_integer(n * scale)
    } else {
        BigRational::new(n, scale)
    };
    if neg {
        q = -q;
    }
    Some(q)
}

/// Parses a string of the form `"p/q"` or an exact decimal.
pub fn parse_rational_str(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).ok()?;
            let q = BigInt::from_str(q.trim()).ok()?;
            (!q.is_zero()).then(|| BigRational::new(p, q))
        }
        None => parse_decimal(s),
    }
}

/// An exact rational from a JSON number, string or `[num, den]` pair.
pub fn rational(v: &Value, path: &str) -> Result<BigRational> {
    match v {
        Value::Number(n) => parse_decimal(&n.to_string()).ok_or_else(|| err(path, format!("bad number {n}"))),
        Value::String(s) => parse_rational_str(s).ok_or_else(|| err(path, format!("bad rational \"{s}\""))),
        Value::Array(a) if a.len() == 2 => {
            let p = rational(&a[0], &format!("{path}[0]"))?;
            let q = rational(&a[1], &format!("{path}[1]"))?;
            if !p.is_integer() || !q.is_integer() || q.is_zero() {
                return Err(err(path, "pair must be [integer, nonzero integer]"));
            }
            Ok(p / q)
        }
        _ => Err(err(path, "expected a number, a \"p/q\" string or a [num, den] pair")),
    }
}

/// A float read through its exact decimal value.
pub fn real<T: Real>(v: &Value, path: &str) -> Result<T> {
    Ok(to_real(&rational(v, path)?))
}

fn field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| err(path, format!("missing field \"{key}\"")))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| err(path, "expected an array"))
}

/// A vector of rationals.
pub fn rational_vec(v: &Value, path: &str) -> Result<Vec<BigRational>> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| rational(x, &format!("{path}[{i}]")))
        .collect()
}

pub fn rational_matrix(v: &Value, path: &str) -> Result<Vec<Vec<BigRational>>> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, r)| rational_vec(r, &format!("{path}[{i}]")))
        .collect()
}

pub fn real_vec<T: Real>(v: &Value, path: &str) -> Result<Vec<T>> {
    Ok(rational_vec(v, path)?.iter().map(to_real).collect())
}

fn usize_field(obj: &Value, key: &str, path: &str) -> Result<usize> {
    field(obj, key, path)?
        .as_u64()
        .map(|d| d as usize)
        .ok_or_else(|| err(&format!("{path}.{key}"), "expected a nonnegative integer"))
}

/// `{"dim": n, "vertices": [...], "halfspaces": [{"normal": [...], "offset": c}]}`,
/// each halfspace meaning `⟨normal, y⟩ ≤ offset`.
pub fn polytope(v: &Value, path: &str) -> Result<Polytope<BigRational>> {
    let dim = usize_field(v, "dim", path)?;
    let verts = v
        .get("vertices")
        .map(|x| rational_matrix(x, &format!("{path}.vertices")))
        .transpose()?;
    let hs = v
        .get("halfspaces")
        .map(|x| {
            array(x, &format!("{path}.halfspaces"))?
                .iter()
                .enumerate()
                .map(|(i, h)| {
                    let p = format!("{path}.halfspaces[{i}]");
                    Ok(Halfspace::new(
                        rational_vec(field(h, "normal", &p)?, &format!("{p}.normal"))?,
                        rational(field(h, "offset", &p)?, &format!("{p}.offset"))?,
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    match (verts, hs) {
        (Some(vs), Some(hs)) => Polytope::from_both(dim, vs, hs),
        (Some(vs), None) => Polytope::from_vertices(dim, vs),
        (None, Some(hs)) => Polytope::from_halfspaces(dim, hs),
        (None, None) => Err(err(path, "need \"vertices\" or \"halfspaces\"")),
    }
}

pub fn affine_form(v: &Value, path: &str) -> Result<AffineForm<BigRational>> {
    Ok(AffineForm::new(
        rational_vec(field(v, "gradient", path)?, &format!("{path}.gradient"))?,
        match v.get("constant") {
            Some(c) => rational(c, &format!("{path}.constant"))?,
            None => BigRational::zero(),
        },
    ))
}

/// `{"cells": [{"simplex": [[...]], "affine": {"gradient": [...], "constant": c}}], "concave": true}`.
///
/// Concavity is certified unless `"concave": false`.
pub fn pl_function(v: &Value, path: &str) -> Result<PlConcaveFunction<BigRational>> {
    let cells = array(field(v, "cells", path)?, &format!("{path}.cells"))?
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let p = format!("{path}.cells[{i}]");
            Ok(PlCell {
                simplex: Simplex::new(rational_matrix(field(c, "simplex", &p)?, &format!("{p}.simplex"))?)?,
                affine: affine_form(field(c, "affine", &p)?, &format!("{p}.affine"))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let concave = v.get("concave").and_then(Value::as_bool).unwrap_or(true);
    PlConcaveFunction::from_cells(cells, concave)
}

fn level(m: u32, v: &Value, path: &str) -> Result<FiltrationLevel<BigRational>> {
    let weights = v
        .get("weights")
        .map(|w| rational_matrix(w, &format!("{path}.weights")))
        .transpose()?;
    if let Some(flags) = v.get("flags") {
        let dim = usize_field(v, "dim", path)?;
        let flags = array(flags, &format!("{path}.flags"))?
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let p = format!("{path}.flags[{i}]");
                Ok((
                    rational(field(f, "value", &p)?, &format!("{p}.value"))?,
                    rational_matrix(field(f, "rows", &p)?, &format!("{p}.rows"))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        return FiltrationLevel::from_flags(m, dim, flags, weights);
    }
    let values = rational_vec(field(v, "values", path)?, &format!("{path}.values"))?;
    if let Some(d) = v.get("dim").and_then(Value::as_u64) {
        if d as usize != values.len() {
            return Err(Error::DimensionMismatch {
                expected: d as usize,
                found: values.len(),
                context: format!("{path}.values"),
            });
        }
    }
    match v.get("basis") {
        Some(b) => FiltrationLevel::adapted(m, rational_matrix(b, &format!("{path}.basis"))?, values, weights),
        None => FiltrationLevel::diagonal(m, values, weights),
    }
}

/// `{"label": ..., "levels": {"m": {"dim": N, "values": [...], "weights": [[...]], "flags": [...]}}}`.
///
/// A level is given either by `values` (on the standard basis, or on the
/// rows of an optional `basis`) or by `flags`, each `{"value": λ, "rows": [...]}`
/// spanning the subspace of values `≥ λ`.
pub fn graded_filtration(v: &Value, path: &str) -> Result<GradedFiltration<BigRational>> {
    let levels = field(v, "levels", path)?
        .as_object()
        .ok_or_else(|| err(&format!("{path}.levels"), "expected an object keyed by degree"))?;
    let parsed = levels
        .iter()
        .map(|(k, lv)| {
            let p = format!("{path}.levels.{k}");
            let m: u32 = k.parse().map_err(|_| err(&p, "degree key must be a positive integer"))?;
            level(m, lv, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    let label = v.get("label").and_then(Value::as_str).unwrap_or("input").to_string();
    GradedFiltration::new(label, parsed)
}

/// `{"atoms": [{"pos": x, "mass": w, "weight": [...]}]}`.
pub fn atomic_measure<T: Real>(v: &Value, path: &str) -> Result<DhMeasure<T>> {
    let atoms = array(field(v, "atoms", path)?, &format!("{path}.atoms"))?
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let p = format!("{path}.atoms[{i}]");
            Ok(Atom {
                pos: real(field(a, "pos", &p)?, &format!("{p}.pos"))?,
                mass: match a.get("mass") {
                    Some(m) => real(m, &format!("{p}.mass"))?,
                    None => T::one(),
                },
                weight: a
                    .get("weight")
                    .map(|w| real_vec(w, &format!("{p}.weight")))
                    .transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DhMeasure::atomic(atoms)
}

/// Rational as a `"p/q"` string, or an integer string.
pub fn rational_to_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// A float as a JSON number with 17 significant digits.
pub fn number<T: Real>(x: T) -> Value {
    let x = x.to_f64().unwrap_or(f64::NAN);
    if !x.is_finite() {
        return Value::String(x.to_string());
    }
    let s = format!("{x:.16e}");
    serde_json::from_str(&s).unwrap_or(Value::Null)
}

pub fn numbers<T: Real>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(|x| number(*x)).collect())
}

/// Inverse of [`atomic_measure`], floats with 17 significant digits.
pub fn atomic_to_json<T: Real>(mu: &DhMeasure<T>) -> Option<Value> {
    let atoms = mu.atoms()?;
    Some(json!({
        "atoms": atoms.iter().map(|a| {
            let mut o = Map::new();
            o.insert("pos".into(), number(a.pos));
            o.insert("mass".into(), number(a.mass));
            if let Some(w) = &a.weight {
                o.insert("weight".into(), numbers(w));
            }
            Value::Object(o)
        }).collect::<Vec<_>>()
    }))
}

/// Inverse of [`graded_filtration`] on the values/basis representation.
pub fn filtration_to_json(f: &GradedFiltration<BigRational>) -> Value {
    let mut levels = BTreeMap::new();
    for lv in f.levels() {
        let strs = |v: &[BigRational]| v.iter().map(rational_to_string).collect::<Vec<_>>();
        let mut o = Map::new();
        o.insert("dim".into(), json!(lv.dim()));
        o.insert("values".into(), json!(strs(lv.values())));
        o.insert("basis".into(), json!(lv.basis().iter().map(|r| strs(r)).collect::<Vec<_>>()));
        if let Some(w) = lv.weights() {
            o.insert("weights".into(), json!(w.iter().map(|r| strs(r)).collect::<Vec<_>>()));
        }
        levels.insert(lv.degree().to_string(), Value::Object(o));
    }
    json!({"label": f.label, "levels": levels})
}

/// `x,cdf` rows with 17 significant digits.
pub fn cdf_csv<T: Real>(samples: &[(T, T)]) -> String {
    let mut s = String::from("x,cdf\n");
    for (x, c) in samples {
        let _ = writeln!(
            s,
            "{:.16e},{:.16e}",
            x.to_f64().unwrap_or(f64::NAN),
            c.to_f64().unwrap_or(f64::NAN)
        );
    }
    s
}

/// Reads a whole JSON document, reporting line and column on failure.
pub fn parse_document(text: &str) -> Result<Value> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rationals_in_every_form() {
        assert_eq!(rational(&json!(3), "x").unwrap(), q(3, 1));
        assert_eq!(rational(&json!(0.1), "x").unwrap(), q(1, 10));
        assert_eq!(rational(&json!("-3/6"), "x").unwrap(), q(-1, 2));
        assert_eq!(rational(&json!("2.5e-1"), "x").unwrap(), q(1, 4));
        assert_eq!(rational(&json!([2, -4]), "x").unwrap(), q(-1, 2));
        assert!(matches!(rational(&json!("1/0"), "x"), Err(Error::Parse(_))));
        assert!(matches!(rational(&json!(true), "a.b"), Err(Error::Parse(m)) if m.contains("a.b")));
    }

    #[test]
    fn polytope_schema() {
        let p = polytope(&json!({"dim": 1, "vertices": [["-1"], [2]]}), "p").unwrap();
        assert_eq!(p.volume(), q(3, 1));
        let h = polytope(
            &json!({"dim": 1, "halfspaces": [{"normal": [1], "offset": 2}, {"normal": [-1], "offset": 1}]}),
            "p",
        )
        .unwrap();
        assert_eq!(h.volume(), q(3, 1));
    }

    #[test]
    fn filtration_round_trip() {
        let f = GradedFiltration::<BigRational>::projective_line(&[1, 2, 3]).unwrap();
        let v = filtration_to_json(&f);
        let g = graded_filtration(&v, "f").unwrap();
        for m in [1, 2, 3] {
            assert_eq!(g.level(m).unwrap().values(), f.level(m).unwrap().values());
            assert_eq!(g.level(m).unwrap().weights(), f.level(m).unwrap().weights());
        }
    }

    #[test]
    fn flags_schema() {
        let v = json!({"levels": {"2": {"dim": 2, "flags": [
            {"value": 1, "rows": [[1, 1]]},
            {"value": 0, "rows": [[1, 0], [0, 1]]}
        ]}}});
        let f = graded_filtration(&v, "f").unwrap();
        assert_eq!(f.level(2).unwrap().values(), &[q(1, 1), q(0, 1)]);
    }

    #[test]
    fn atomic_round_trip() {
        let mu: DhMeasure<f64> = atomic_measure(&json!({"atoms": [{"pos": 0.5, "mass": 2}, {"pos": "-1/3"}]}), "m").unwrap();
        let back: DhMeasure<f64> = atomic_measure(&atomic_to_json(&mu).unwrap(), "m").unwrap();
        assert_eq!(mu, back);
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(number(0.1f64).to_string(), "1.0000000000000001e-1");
        let d = parse_document("{\"a\": [1,\n 2,]}").unwrap_err();
        assert!(matches!(d, Error::Parse(m) if m.contains("line 2")));
    }
}
