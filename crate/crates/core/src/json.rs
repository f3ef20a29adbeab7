//! JSON encodings of fields, scalars, modules, η-matrices, `C_η` objects and real mixed
//! Tate Hodge structures.
//!
//! Scalars are written digit by digit at the field's precision, so encoding is
//! deterministic. Parse errors name the offending path, e.g. `$.phi[1][0]`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::archimedean::RealMths;
use crate::error::{Error, Result};
use crate::filmod::{FilPhiNModule, Filtration, Polygon};
use crate::grading::CEtaObject;
use crate::kst::KstPoly;
use crate::logpoint::EtaMatrix;
use crate::matrix::Mat;
use crate::padic::{format_rational, parse_rational, LocalField, Qp, Scalar};

fn bad(path: &str, what: &str) -> Error {
    Error::Invalid(format!("{path}: {what}"))
}

fn get<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| bad(path, &format!("missing key {key:?}")))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| bad(path, "expected an array"))
}

fn as_i64(v: &Value, path: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| bad(path, "expected an integer"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| bad(path, "expected a number"))
}

fn rational_at(v: &Value, path: &str) -> Result<num_rational::BigRational> {
    match v {
        Value::String(s) => parse_rational(s).map_err(|_| bad(path, &format!("malformed rational {s:?}"))),
        Value::Number(n) if n.is_i64() => Ok(num_rational::BigRational::from_integer(n.as_i64().unwrap().into())),
        _ => Err(bad(path, "expected a rational string \"a/b\"")),
    }
}

pub fn field_to_json(k: &LocalField) -> Value {
    let branch = match k.branch_rational() {
        Some(q) => Value::String(format_rational(q)),
        None => qp_to_json(k.branch_qp(), k.precision()),
    };
    json!({
        "p": k.p(),
        "precision": k.precision(),
        "eisenstein": k.eisenstein().iter().map(format_rational).collect::<Vec<_>>(),
        "branch": branch,
    })
}

/// `precision` may be overridden by the caller (command-line flags take priority).
pub fn field_from_json(v: &Value, path: &str) -> Result<LocalField> {
    let p = get(v, "p", path)?.as_u64().ok_or_else(|| bad(&format!("{path}.p"), "expected a prime"))?;
    let precision = as_i64(get(v, "precision", path)?, &format!("{path}.precision"))?;
    let eis = match v.get("eisenstein") {
        None => Vec::new(),
        Some(e) => as_array(e, &format!("{path}.eisenstein"))?
            .iter()
            .enumerate()
            .map(|(i, x)| rational_at(x, &format!("{path}.eisenstein[{i}]")))
            .collect::<Result<Vec<_>>>()?,
    };
    let bpath = format!("{path}.branch");
    match v.get("branch") {
        None => LocalField::new(p, precision, eis, num_rational::BigRational::from_integer(0.into())),
        Some(b @ Value::Object(_)) => {
            let q = qp_from_json(b, p, &bpath)?;
            LocalField::with_padic_branch(p, precision, eis, q)
        }
        Some(b) => LocalField::new(p, precision, eis, rational_at(b, &bpath)?),
    }
    .map_err(|e| match e {
        Error::Invalid(m) => bad(path, &m),
        other => other,
    })
}

fn qp_to_json(q: &Qp, cap: i64) -> Value {
    let q = q.with_precision(q.precision().min(cap));
    let val = q.valuation().unwrap_or_else(|| q.precision());
    json!({"val": val, "digits": q.digits()})
}

fn qp_from_json(v: &Value, p: u64, path: &str) -> Result<Qp> {
    let val = as_i64(get(v, "val", path)?, &format!("{path}.val"))?;
    let digits = as_array(get(v, "digits", path)?, &format!("{path}.digits"))?
        .iter()
        .enumerate()
        .map(|(i, d)| d.as_u64().ok_or_else(|| bad(&format!("{path}.digits[{i}]"), "expected a digit")))
        .collect::<Result<Vec<_>>>()?;
    Qp::from_digits(p, val, &digits).map_err(|e| bad(path, &e.to_string()))
}

pub fn scalar_to_json(x: &Scalar) -> Value {
    let cap = x.field().precision();
    json!({"pi_coeffs": x.coords().iter().map(|q| qp_to_json(q, cap)).collect::<Vec<_>>()})
}

pub fn scalar_from_json(k: &LocalField, v: &Value, path: &str) -> Result<Scalar> {
    if let Some(r) = v.get("rational") {
        return Ok(k.from_rational(&rational_at(r, &format!("{path}.rational"))?));
    }
    if let Value::String(_) = v {
        return Ok(k.from_rational(&rational_at(v, path)?));
    }
    let coeffs = as_array(get(v, "pi_coeffs", path)?, &format!("{path}.pi_coeffs"))?;
    if coeffs.len() > k.degree() {
        return Err(bad(path, &format!("at most {} π-coefficients expected", k.degree())));
    }
    let mut c = Vec::with_capacity(k.degree());
    for (i, q) in coeffs.iter().enumerate() {
        // digit expansions are exact representatives, like rational literals
        c.push(qp_from_json(q, k.p(), &format!("{path}.pi_coeffs[{i}]"))?.lifted(k.working_precision()));
    }
    while c.len() < k.degree() {
        c.push(Qp::zero(k.p(), k.working_precision()));
    }
    Scalar::from_coords(k, c)
}

pub fn matrix_to_json(m: &Mat<Scalar>) -> Value {
    Value::Array(m.to_rows().iter().map(|r| Value::Array(r.iter().map(scalar_to_json).collect())).collect())
}

fn matrix_from_json(k: &LocalField, v: &Value, n: usize, path: &str) -> Result<Mat<Scalar>> {
    let rows = as_array(v, path)?;
    if rows.len() != n {
        return Err(bad(path, &format!("expected {n} rows")));
    }
    let mut out = Vec::with_capacity(n);
    for (i, r) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let r = as_array(r, &rp)?;
        if r.len() != n {
            return Err(bad(&rp, &format!("expected {n} entries")));
        }
        out.push(r.iter().enumerate().map(|(j, x)| scalar_from_json(k, x, &format!("{rp}[{j}]"))).collect::<Result<Vec<_>>>()?);
    }
    if n == 0 {
        return Ok(Mat::zeros_like(&k.zero(), 0, 0));
    }
    Ok(Mat::from_rows(out)?.with_template(&k.zero()))
}

pub fn module_to_json(m: &FilPhiNModule) -> Value {
    let fil: Vec<Value> = m
        .filtration()
        .steps()
        .iter()
        .map(|(s, b)| {
            json!({"step": s, "basis": b.iter().map(|v| v.iter().map(scalar_to_json).collect::<Vec<_>>()).collect::<Vec<_>>()})
        })
        .collect();
    json!({
        "field": field_to_json(m.field()),
        "dim": m.dim(),
        "phi": matrix_to_json(m.phi()),
        "monodromy": matrix_to_json(m.monodromy()),
        "filtration": fil,
    })
}

/// Reads a module; `field` replaces the embedded field when given.
pub fn module_from_json(v: &Value, field: Option<&LocalField>) -> Result<FilPhiNModule> {
    let k = match (field, v.get("field")) {
        (Some(k), _) => k.clone(),
        (None, Some(f)) => field_from_json(f, "$.field")?,
        (None, None) => return Err(bad("$", "missing key \"field\" (or pass --field)")),
    };
    let dim = get(v, "dim", "$")?.as_u64().ok_or_else(|| bad("$.dim", "expected a nonnegative integer"))? as usize;
    let phi = matrix_from_json(&k, get(v, "phi", "$")?, dim, "$.phi")?;
    let mon = match v.get("monodromy") {
        Some(n) => matrix_from_json(&k, n, dim, "$.monodromy")?,
        None => Mat::zeros_like(&k.zero(), dim, dim),
    };
    let mut steps = Vec::new();
    for (i, s) in as_array(get(v, "filtration", "$")?, "$.filtration")?.iter().enumerate() {
        let sp = format!("$.filtration[{i}]");
        let step = as_i64(get(s, "step", &sp)?, &format!("{sp}.step"))?;
        let mut basis = Vec::new();
        for (j, vec) in as_array(get(s, "basis", &sp)?, &format!("{sp}.basis"))?.iter().enumerate() {
            let vp = format!("{sp}.basis[{j}]");
            let entries = as_array(vec, &vp)?;
            if entries.len() != dim {
                return Err(bad(&vp, &format!("expected {dim} entries")));
            }
            basis.push(entries.iter().enumerate().map(|(l, x)| scalar_from_json(&k, x, &format!("{vp}[{l}]"))).collect::<Result<Vec<_>>>()?);
        }
        steps.push((step, basis));
    }
    let fil = Filtration::new(steps).map_err(|e| bad("$.filtration", &e.to_string()))?;
    FilPhiNModule::new(&k, phi, mon, fil)
}

fn kst_to_json(p: &KstPoly) -> Value {
    Value::Array(p.coeffs().iter().map(scalar_to_json).collect())
}

pub fn eta_to_json(e: &EtaMatrix) -> Value {
    let rows: Vec<Value> = (0..e.dim())
        .map(|r| Value::Array((0..e.dim()).map(|c| kst_to_json(e.entries.get(r, c))).collect()))
        .collect();
    json!({"basis_slopes": e.basis_slopes, "entries": rows})
}

/// Parses the entries of an η-matrix as polynomials in `X`.
pub fn eta_entries_from_json(k: &LocalField, v: &Value) -> Result<(Vec<i64>, Mat<KstPoly>)> {
    let slopes = as_array(get(v, "basis_slopes", "$")?, "$.basis_slopes")?
        .iter()
        .enumerate()
        .map(|(i, s)| as_i64(s, &format!("$.basis_slopes[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let n = slopes.len();
    let rows = as_array(get(v, "entries", "$")?, "$.entries")?;
    let mut out = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let rp = format!("$.entries[{i}]");
        let mut row = Vec::new();
        for (j, poly) in as_array(r, &rp)?.iter().enumerate() {
            let pp = format!("{rp}[{j}]");
            let coeffs = as_array(poly, &pp)?
                .iter()
                .enumerate()
                .map(|(l, x)| scalar_from_json(k, x, &format!("{pp}[{l}]")))
                .collect::<Result<Vec<_>>>()?;
            row.push(KstPoly::from_coeffs(&k.zero(), coeffs));
        }
        if row.len() != n {
            return Err(bad(&rp, &format!("expected {n} entries")));
        }
        out.push(row);
    }
    if out.len() != n {
        return Err(bad("$.entries", &format!("expected {n} rows")));
    }
    let zero = KstPoly::constant(&k.zero());
    if n == 0 {
        return Ok((slopes, Mat::zeros_like(&zero, 0, 0)));
    }
    Ok((slopes, Mat::from_rows(out)?.with_template(&zero)))
}

pub fn ceta_to_json(v: &CEtaObject) -> Value {
    let dims: Map<String, Value> = v.dims().iter().map(|(n, k)| (n.to_string(), json!(k))).collect();
    json!({"field": field_to_json(v.field()), "dims": dims, "eta": matrix_to_json(v.eta())})
}

pub fn ceta_from_json(v: &Value, field: Option<&LocalField>) -> Result<CEtaObject> {
    let k = match (field, v.get("field")) {
        (Some(k), _) => k.clone(),
        (None, Some(f)) => field_from_json(f, "$.field")?,
        (None, None) => return Err(bad("$", "missing key \"field\" (or pass --field)")),
    };
    let dims_v = get(v, "dims", "$")?.as_object().ok_or_else(|| bad("$.dims", "expected an object"))?;
    let mut dims = BTreeMap::new();
    for (key, n) in dims_v {
        let dp = format!("$.dims.{key}");
        let deg: i64 = key.parse().map_err(|_| bad(&dp, "degree keys must be integers"))?;
        let n = n.as_u64().ok_or_else(|| bad(&dp, "expected a nonnegative integer"))?;
        dims.insert(deg, n as usize);
    }
    let d: usize = dims.values().sum();
    let eta = matrix_from_json(&k, get(v, "eta", "$")?, d, "$.eta")?;
    CEtaObject::new(&k, dims, eta)
}

pub fn polygon_to_json(p: &Polygon) -> Value {
    json!(p.0)
}

fn complex_from_json(v: &Value, path: &str) -> Result<Complex64> {
    let a = as_array(v, path)?;
    if a.len() != 2 {
        return Err(bad(path, "complex numbers are [re, im]"));
    }
    Ok(Complex64::new(as_f64(&a[0], &format!("{path}[0]"))?, as_f64(&a[1], &format!("{path}[1]"))?))
}

pub fn complex_to_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn complex_matrix_to_json(m: &Mat<Complex64>) -> Value {
    Value::Array(m.to_rows().iter().map(|r| Value::Array(r.iter().map(|z| complex_to_json(*z)).collect())).collect())
}

pub fn mths_from_json(v: &Value) -> Result<RealMths> {
    let dim = get(v, "dim", "$")?.as_u64().ok_or_else(|| bad("$.dim", "expected a nonnegative integer"))? as usize;
    let mut weights = Vec::new();
    for (i, s) in as_array(get(v, "weights", "$")?, "$.weights")?.iter().enumerate() {
        let sp = format!("$.weights[{i}]");
        let step = as_i64(get(s, "step", &sp)?, &format!("{sp}.step"))?;
        let mut basis = Vec::new();
        for (j, vec) in as_array(get(s, "basis", &sp)?, &format!("{sp}.basis"))?.iter().enumerate() {
            let vp = format!("{sp}.basis[{j}]");
            basis.push(as_array(vec, &vp)?.iter().enumerate().map(|(l, x)| as_f64(x, &format!("{vp}[{l}]"))).collect::<Result<Vec<_>>>()?);
        }
        weights.push((step, basis));
    }
    let mut hodge = Vec::new();
    for (i, s) in as_array(get(v, "hodge", "$")?, "$.hodge")?.iter().enumerate() {
        let sp = format!("$.hodge[{i}]");
        let step = as_i64(get(s, "step", &sp)?, &format!("{sp}.step"))?;
        let mut basis = Vec::new();
        for (j, vec) in as_array(get(s, "basis", &sp)?, &format!("{sp}.basis"))?.iter().enumerate() {
            let vp = format!("{sp}.basis[{j}]");
            basis.push(as_array(vec, &vp)?.iter().enumerate().map(|(l, x)| complex_from_json(x, &format!("{vp}[{l}]"))).collect::<Result<Vec<_>>>()?);
        }
        hodge.push((step, basis));
    }
    Ok(RealMths { dim, weights, hodge })
}

pub fn mths_to_json(h: &RealMths) -> Value {
    json!({
        "dim": h.dim,
        "weights": h.weights.iter().map(|(s, b)| json!({"step": s, "basis": b})).collect::<Vec<_>>(),
        "hodge": h.hodge.iter().map(|(s, b)| json!({
            "step": s,
            "basis": b.iter().map(|v| v.iter().map(|z| complex_to_json(*z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}
