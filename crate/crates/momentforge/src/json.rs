//! JSON readers and writers for the on-disk formats.
//!
//! Value conventions: rational-mode containers carry scalars as integer or
//! "p/q" strings (plain JSON integers are also accepted on input);
//! float-mode containers carry JSON numbers ("p/q" strings are accepted on
//! input and converted). Writers are lossless — rationals round-trip
//! bit-identically, floats to full printed precision.
//!
//! Containers that declare their own `mode` field may omit it on input, in
//! which case the mode is inferred: any string-typed value means rational,
//! otherwise float.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Map, Value};
use std::str::FromStr;

use crate::algebra::{AtomicMeasure, MomentSequence};
use crate::combinatorics::{CoefficientSeq, MultiIndex};
use crate::diagop::{DiagonalOperator, Polynomial, PreserverReport, Rep};
use crate::dualmap::{DifferentialOperator, KMomentReport};
use crate::error::{Error, Result};
use crate::levy::{ConsistencyReport, DivisibilityScan, LevyTriplet};
use crate::positivity::{
    Cone, MembershipOutcome, MembershipReport, PsdStatus, PsdVerdict, SymMatrix,
};
use crate::scalar::{Mode, Scalar};

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn as_obj<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| bad(format!("{what}: expected a JSON object")))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| bad(format!("{what}: missing field \"{key}\"")))
}

fn usize_field(obj: &Map<String, Value>, key: &str, what: &str) -> Result<usize> {
    field(obj, key, what)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| bad(format!("{what}: \"{key}\" must be a nonnegative integer")))
}

fn u32_field(obj: &Map<String, Value>, key: &str, what: &str) -> Result<u32> {
    field(obj, key, what)?
        .as_u64()
        .and_then(|v| u32::try_from(v).ok())
        .ok_or_else(|| bad(format!("{what}: \"{key}\" must be a nonnegative integer")))
}

fn array_field<'a>(obj: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Vec<Value>> {
    field(obj, key, what)?
        .as_array()
        .ok_or_else(|| bad(format!("{what}: \"{key}\" must be an array")))
}

fn parse_rational(text: &str) -> Result<BigRational> {
    let (num, den) = match text.split_once('/') {
        Some((p, q)) => (p, q),
        None => (text, "1"),
    };
    let p = BigInt::from_str(num.trim())
        .map_err(|_| bad(format!("cannot parse {text:?} as an integer or p/q ratio")))?;
    let q = BigInt::from_str(den.trim())
        .map_err(|_| bad(format!("cannot parse {text:?} as an integer or p/q ratio")))?;
    if q.is_zero() {
        return Err(bad(format!("zero denominator in {text:?}")));
    }
    Ok(BigRational::new(p, q))
}

pub fn scalar_to_json(v: &Scalar) -> Result<Value> {
    match v {
        Scalar::Rational(r) => Ok(Value::String(r.to_string())),
        Scalar::Float(f) if f.is_finite() => Ok(json!(f)),
        Scalar::Float(f) => Err(bad(format!("cannot serialize non-finite float {f}"))),
    }
}

pub fn scalar_from_json(v: &Value, mode: Mode) -> Result<Scalar> {
    match v {
        Value::String(s) => {
            let r = parse_rational(s)?;
            match mode {
                Mode::Rational => Ok(Scalar::Rational(r)),
                Mode::Float => Ok(Scalar::Float(Scalar::Rational(r).to_f64())),
            }
        }
        Value::Number(num) => match mode {
            Mode::Rational => {
                if let Some(i) = num.as_i64() {
                    Ok(Scalar::from_int(i, Mode::Rational))
                } else if let Some(u) = num.as_u64() {
                    Ok(Scalar::Rational(BigRational::from(BigInt::from(u))))
                } else {
                    Err(bad(format!(
                        "non-integer number {num} in a rational-mode value; write it as a \"p/q\" string"
                    )))
                }
            }
            Mode::Float => num
                .as_f64()
                .filter(|f| f.is_finite())
                .map(Scalar::Float)
                .ok_or_else(|| bad(format!("cannot read {num} as a finite float"))),
        },
        other => Err(bad(format!(
            "expected a number or \"p/q\" string, found {other}"
        ))),
    }
}

fn mode_from_str(s: &str) -> Result<Mode> {
    match s {
        "rational" => Ok(Mode::Rational),
        "float" => Ok(Mode::Float),
        other => Err(bad(format!(
            "unknown mode {other:?}; expected \"rational\" or \"float\""
        ))),
    }
}

/// Declared mode, or inference from a sample of raw values: any string
/// means rational, otherwise float.
fn resolve_mode<'a>(
    obj: &Map<String, Value>,
    values: impl Iterator<Item = &'a Value>,
    what: &str,
) -> Result<Mode> {
    match obj.get("mode") {
        Some(Value::String(s)) => mode_from_str(s),
        Some(other) => Err(bad(format!("{what}: mode must be a string, found {other}"))),
        None => {
            let mut saw_string = false;
            for v in values {
                match v {
                    Value::String(_) => saw_string = true,
                    Value::Number(_) => return Ok(Mode::Float),
                    _ => {}
                }
            }
            if saw_string {
                Ok(Mode::Rational)
            } else {
                Ok(Mode::Float)
            }
        }
    }
}

fn multi_index_to_json(alpha: &MultiIndex) -> Value {
    Value::Array(
        alpha
            .exponents()
            .iter()
            .map(|&e| Value::from(e))
            .collect(),
    )
}

fn multi_index_from_json(v: &Value, what: &str) -> Result<MultiIndex> {
    let arr = v
        .as_array()
        .ok_or_else(|| bad(format!("{what}: \"alpha\" must be an integer array")))?;
    let exps = arr
        .iter()
        .map(|e| {
            e.as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .ok_or_else(|| bad(format!("{what}: exponent {e} is not a small nonnegative integer")))
        })
        .collect::<Result<Vec<u32>>>()?;
    Ok(MultiIndex::new(exps))
}

fn alpha_value_list<'a>(
    entries: impl Iterator<Item = (&'a MultiIndex, &'a Scalar)>,
) -> Result<Value> {
    let items = entries
        .map(|(alpha, v)| {
            Ok(json!({
                "alpha": multi_index_to_json(alpha),
                "value": scalar_to_json(v)?,
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(Value::Array(items))
}

fn read_alpha_value_list(
    arr: &[Value],
    mode: Mode,
    what: &str,
) -> Result<Vec<(MultiIndex, Scalar)>> {
    arr.iter()
        .map(|item| {
            let obj = as_obj(item, what)?;
            let alpha = multi_index_from_json(field(obj, "alpha", what)?, what)?;
            let value = scalar_from_json(field(obj, "value", what)?, mode)?;
            Ok((alpha, value))
        })
        .collect()
}

fn raw_values<'a>(arr: &'a [Value], key: &'a str) -> impl Iterator<Item = &'a Value> {
    arr.iter().filter_map(move |item| item.get(key))
}

pub fn measure_to_json(mu: &AtomicMeasure) -> Result<Value> {
    let atoms = mu
        .atoms()
        .iter()
        .map(|a| {
            let point = a
                .point
                .iter()
                .map(scalar_to_json)
                .collect::<Result<Vec<Value>>>()?;
            Ok(json!({"point": point, "weight": scalar_to_json(&a.weight)?}))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(json!({
        "n": mu.n(),
        "mode": mu.mode().to_string(),
        "atoms": atoms,
    }))
}

pub fn measure_from_json(v: &Value) -> Result<AtomicMeasure> {
    let what = "measure";
    let obj = as_obj(v, what)?;
    let n = usize_field(obj, "n", what)?;
    let atoms = array_field(obj, "atoms", what)?;
    let mode = resolve_mode(obj, raw_values(atoms, "weight"), what)?;
    let parsed = atoms
        .iter()
        .map(|item| {
            let a = as_obj(item, what)?;
            let point = field(a, "point", what)?
                .as_array()
                .ok_or_else(|| bad(format!("{what}: \"point\" must be an array")))?
                .iter()
                .map(|c| scalar_from_json(c, mode))
                .collect::<Result<Vec<Scalar>>>()?;
            let weight = scalar_from_json(field(a, "weight", what)?, mode)?;
            Ok((point, weight))
        })
        .collect::<Result<Vec<_>>>()?;
    AtomicMeasure::new(n, mode, parsed)
}

pub fn sequence_to_json(s: &MomentSequence) -> Result<Value> {
    Ok(json!({
        "n": s.n(),
        "degree": s.degree(),
        "mode": s.mode().to_string(),
        "values": alpha_value_list(s.iter())?,
    }))
}

pub fn sequence_from_json(v: &Value) -> Result<MomentSequence> {
    let what = "sequence";
    let obj = as_obj(v, what)?;
    let n = usize_field(obj, "n", what)?;
    let degree = u32_field(obj, "degree", what)?;
    let values = array_field(obj, "values", what)?;
    let mode = resolve_mode(obj, raw_values(values, "value"), what)?;
    let entries = read_alpha_value_list(values, mode, what)?;
    MomentSequence::new(n, degree, mode, entries)
}

pub fn operator_to_json(op: &DiagonalOperator) -> Result<Value> {
    let coeffs = op.coeffs();
    let mut out = json!({
        "n": op.n(),
        "rep": op.rep().to_string(),
        "degree": coeffs.degree(),
        "mode": op.mode().to_string(),
        "coeffs": alpha_value_list(coeffs.iter())?,
    });
    // finite support is implied for the d representation; elsewhere it is
    // extra information worth keeping
    if coeffs.is_finitely_supported() && op.rep() != Rep::CoefD {
        out["finite_support"] = Value::Bool(true);
    }
    Ok(out)
}

pub fn operator_from_json(v: &Value) -> Result<DiagonalOperator> {
    let what = "operator";
    let obj = as_obj(v, what)?;
    let n = usize_field(obj, "n", what)?;
    let degree = u32_field(obj, "degree", what)?;
    let rep = match field(obj, "rep", what)?.as_str() {
        Some("t") => Rep::EigT,
        Some("c") => Rep::CoefC,
        Some("d") => Rep::CoefD,
        other => {
            return Err(bad(format!(
                "{what}: \"rep\" must be \"t\", \"c\" or \"d\", found {other:?}"
            )))
        }
    };
    let coeffs = array_field(obj, "coeffs", what)?;
    let mode = resolve_mode(obj, raw_values(coeffs, "value"), what)?;
    let entries = read_alpha_value_list(coeffs, mode, what)?;
    let finite = rep == Rep::CoefD
        || obj
            .get("finite_support")
            .and_then(Value::as_bool)
            .unwrap_or(false);
    let seq = if finite {
        CoefficientSeq::finitely_supported(n, degree, mode, entries)?
    } else {
        CoefficientSeq::truncated(n, degree, mode, entries)?
    };
    Ok(match rep {
        Rep::EigT => DiagonalOperator::from_eigenvalues(seq),
        Rep::CoefC => DiagonalOperator::from_c_coeffs(seq),
        Rep::CoefD => DiagonalOperator::from_d_coeffs(seq)?,
    })
}

pub fn triplet_to_json(tr: &LevyTriplet) -> Result<Value> {
    let n = tr.n();
    let sigma = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| scalar_to_json(tr.sigma().get(i, j)))
                .collect::<Result<Vec<Value>>>()
                .map(Value::Array)
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(json!({
        "n": n,
        "mode": tr.mode().to_string(),
        "c0": scalar_to_json(tr.c0())?,
        "b": tr.b().iter().map(scalar_to_json).collect::<Result<Vec<Value>>>()?,
        "sigma": sigma,
        "nu": measure_to_json(tr.nu())?,
    }))
}

pub fn triplet_from_json(v: &Value) -> Result<LevyTriplet> {
    let what = "triplet";
    let obj = as_obj(v, what)?;
    let n = usize_field(obj, "n", what)?;
    let b_raw = array_field(obj, "b", what)?;
    let mode = resolve_mode(obj, b_raw.iter().chain([field(obj, "c0", what)?]), what)?;
    let c0 = scalar_from_json(field(obj, "c0", what)?, mode)?;
    let b = b_raw
        .iter()
        .map(|x| scalar_from_json(x, mode))
        .collect::<Result<Vec<Scalar>>>()?;
    if b.len() != n {
        return Err(bad(format!(
            "{what}: \"b\" has {} entries for n = {n}",
            b.len()
        )));
    }
    let sigma_rows = array_field(obj, "sigma", what)?;
    if sigma_rows.len() != n {
        return Err(bad(format!(
            "{what}: \"sigma\" has {} rows for n = {n}",
            sigma_rows.len()
        )));
    }
    let mut entries = Vec::with_capacity(n * n);
    for row in sigma_rows {
        let cells = row
            .as_array()
            .ok_or_else(|| bad(format!("{what}: \"sigma\" rows must be arrays")))?;
        if cells.len() != n {
            return Err(bad(format!(
                "{what}: \"sigma\" row has {} entries for n = {n}",
                cells.len()
            )));
        }
        for cell in cells {
            entries.push(scalar_from_json(cell, mode)?);
        }
    }
    let sigma = SymMatrix::new(n, mode, entries)?;
    let nu = measure_from_json(field(obj, "nu", what)?)?;
    if nu.mode() != mode {
        return Err(Error::ModeMismatch(format!(
            "{what}: nu is {} but the triplet is {mode}",
            nu.mode()
        )));
    }
    LevyTriplet::new(c0, b, sigma, nu)
}

pub fn polynomial_to_json(p: &Polynomial) -> Result<Value> {
    Ok(json!({
        "n": p.n(),
        "mode": p.mode().to_string(),
        "terms": alpha_value_list(p.terms())?,
    }))
}

pub fn polynomial_from_json(v: &Value) -> Result<Polynomial> {
    let what = "polynomial";
    let obj = as_obj(v, what)?;
    let n = usize_field(obj, "n", what)?;
    let terms = array_field(obj, "terms", what)?;
    let mode = resolve_mode(obj, raw_values(terms, "value"), what)?;
    let entries = read_alpha_value_list(terms, mode, what)?;
    Polynomial::from_terms(n, mode, entries)
}

pub fn diffop_to_json(t: &DifferentialOperator) -> Result<Value> {
    let terms = t
        .terms()
        .map(|(alpha, q)| {
            Ok(json!({
                "alpha": multi_index_to_json(alpha),
                "q": alpha_value_list(q.terms())?,
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(json!({
        "n": t.n(),
        "mode": t.mode().to_string(),
        "terms": terms,
    }))
}

pub fn diffop_from_json(v: &Value) -> Result<DifferentialOperator> {
    let what = "differential operator";
    let obj = as_obj(v, what)?;
    let n = usize_field(obj, "n", what)?;
    let terms = array_field(obj, "terms", what)?;
    let coeff_values = terms
        .iter()
        .filter_map(|t| t.get("q").and_then(Value::as_array))
        .flat_map(|q| raw_values(q, "value"));
    let mode = resolve_mode(obj, coeff_values, what)?;
    let parsed = terms
        .iter()
        .map(|item| {
            let term = as_obj(item, what)?;
            let alpha = multi_index_from_json(field(term, "alpha", what)?, what)?;
            let q_raw = field(term, "q", what)?
                .as_array()
                .ok_or_else(|| bad(format!("{what}: \"q\" must be a term list")))?;
            let q = Polynomial::from_terms(n, mode, read_alpha_value_list(q_raw, mode, what)?)?;
            Ok((alpha, q))
        })
        .collect::<Result<Vec<_>>>()?;
    DifferentialOperator::new(n, mode, parsed)
}

fn status_str(s: PsdStatus) -> &'static str {
    match s {
        PsdStatus::Psd => "PSD",
        PsdStatus::NotPsd => "NOT_PSD",
        PsdStatus::Inconclusive => "INCONCLUSIVE",
    }
}

fn outcome_str(o: MembershipOutcome) -> &'static str {
    match o {
        MembershipOutcome::PassedNecessaryOnly => "PASSED_NECESSARY_ONLY",
        MembershipOutcome::Refuted => "REFUTED",
        MembershipOutcome::Inconclusive => "INCONCLUSIVE",
    }
}

pub fn verdict_to_json(v: &PsdVerdict) -> Result<Value> {
    let mut out = json!({
        "status": status_str(v.status),
        "margin": v.margin,
    });
    if let Some(rank) = v.rank {
        out["rank"] = Value::from(rank);
    }
    if let Some(w) = &v.witness {
        out["witness"] = Value::Array(w.iter().map(scalar_to_json).collect::<Result<_>>()?);
    }
    Ok(out)
}

pub fn membership_to_json(r: &MembershipReport) -> Result<Value> {
    let localizing = r
        .localizing
        .iter()
        .map(|l| {
            Ok(json!({
                "label": l.label,
                "verdict": verdict_to_json(&l.verdict)?,
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(json!({
        "degree": r.degree,
        "cone": r.cone.to_string(),
        "hankel": verdict_to_json(&r.hankel)?,
        "localizing": localizing,
        "outcome": outcome_str(r.outcome),
        "note": "finite-level evidence: a pass is necessary, not sufficient",
    }))
}

pub fn preserver_report_to_json(r: &PreserverReport) -> Result<Value> {
    Ok(json!({
        "membership": membership_to_json(&r.membership)?,
        "certification": r.certification.to_string(),
    }))
}

pub fn consistency_to_json(r: &ConsistencyReport) -> Value {
    json!({
        "degree": r.degree,
        "max_abs_log_deviation": r.max_abs_log_deviation,
        "tol": r.tol,
        "passed": r.passed,
    })
}

pub fn scan_to_json(s: &DivisibilityScan) -> Result<Value> {
    let rows = s
        .rows
        .iter()
        .map(|row| {
            Ok(json!({
                "c": row.c,
                "report": membership_to_json(&row.report)?,
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(json!({
        "degree": s.degree,
        "cone": s.cone.to_string(),
        "rows": rows,
        "outcome": outcome_str(s.outcome),
    }))
}

pub fn kmoment_to_json(r: &KMomentReport) -> Result<Value> {
    let samples = r
        .samples
        .iter()
        .map(|s| {
            Ok(json!({
                "y": s.y.iter().map(scalar_to_json).collect::<Result<Vec<Value>>>()?,
                "report": membership_to_json(&s.membership)?,
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(json!({
        "degree": r.degree,
        "cone": r.cone.to_string(),
        "samples": samples,
        "outcome": outcome_str(r.outcome),
        "note": "sampled evidence only: the condition quantifies over every point of the cone",
    }))
}

pub fn cone_from_str(s: &str) -> Result<Cone> {
    match s {
        "fullspace" => Ok(Cone::FullSpace),
        "orthant" => Ok(Cone::NonnegOrthant),
        other => Err(bad(format!(
            "unknown cone {other:?}; expected \"fullspace\" or \"orthant\""
        ))),
    }
}

pub fn rep_from_str(s: &str) -> Result<Rep> {
    match s {
        "t" => Ok(Rep::EigT),
        "c" => Ok(Rep::CoefC),
        "d" => Ok(Rep::CoefD),
        other => Err(bad(format!(
            "unknown representation {other:?}; expected \"t\", \"c\" or \"d\""
        ))),
    }
}
