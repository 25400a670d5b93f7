//! JSON reports and their plain-text summaries.
//!
//! Floats are written with 17 significant digits (`{:.16e}`); serde_json's
//! `arbitrary_precision` keeps every digit, so identical inputs give
//! byte-identical documents.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use bicontact_core::classifier::{ClassificationReport, PointVerdict, SymmetryDim, Verdict};
use bicontact_core::invariants::{InvariantRecord, Status};
use bicontact_core::symmetry::SymmetryCheck;
use bicontact_core::{ContactPair, Point};
use serde_json::{json, Map, Number, Value};

use crate::files::RegionSpec;

/// A finite float as a fixed-format JSON number; non-finite values become
/// the strings `"NaN"`, `"inf"` and `"-inf"`.
pub fn float(x: f64) -> Value {
    if x.is_finite() {
        let text = format!("{x:.16e}");
        Value::Number(Number::from_str(&text).expect("formatted float is valid JSON"))
    } else if x.is_nan() {
        Value::String("NaN".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub fn point(q: Point) -> Value {
    Value::Array(vec![float(q.x), float(q.y), float(q.p)])
}

fn float_map<'a>(entries: impl IntoIterator<Item = (&'a str, f64)>) -> Value {
    Value::Object(entries.into_iter().map(|(k, v)| (k.to_string(), float(v))).collect())
}

fn defects(map: &BTreeMap<String, f64>) -> Value {
    float_map(map.iter().map(|(k, v)| (k.as_str(), *v)))
}

fn symmetry_dim(dim: Option<SymmetryDim>) -> Value {
    match dim {
        Some(SymmetryDim::Finite(n)) => json!(n),
        Some(SymmetryDim::Infinite) => json!("inf"),
        None => Value::Null,
    }
}

pub fn pair(pair: &ContactPair) -> Value {
    json!({
        "f": pair.f.to_string(),
        "params": float_map(pair.params.iter().map(|(k, v)| (k.as_str(), *v))),
    })
}

fn status(s: &Status) -> Value {
    match s {
        Status::Complete => json!("complete"),
        Status::Inadmissible(r) => json!({ "inadmissible": r }),
        Status::Indeterminate(r) => json!({ "indeterminate": r }),
    }
}

pub fn record(rec: &InvariantRecord) -> Value {
    json!({
        "point": point(rec.q),
        "sigma": rec.sigma.map(|o| o.symbol()),
        "branch": rec.branch.name(),
        "relabeled": rec.relabeled(),
        "values": float_map(rec.values()),
        "defects": defects(&rec.defects),
        "order_used": rec.order_used,
        "status": status(&rec.status),
    })
}

fn verdict_name(v: &Verdict) -> &'static str {
    v.tag().unwrap_or("inadmissible")
}

fn point_verdict(pv: &PointVerdict) -> Value {
    let mut obj = match record(&pv.record) {
        Value::Object(map) => map,
        _ => unreachable!(),
    };
    obj.insert("verdict".into(), json!(verdict_name(&pv.verdict)));
    obj.insert("parabolic_boundary".into(), json!(pv.parabolic_boundary));
    Value::Object(obj)
}

pub fn classification(
    p: &ContactPair,
    region: &RegionSpec,
    report: &ClassificationReport,
) -> Value {
    let tol = &report.tolerances;
    json!({
        "pair": pair(p),
        "region": serde_json::to_value(region).expect("region serializes"),
        "tolerances": float_map([("zero", tol.zero), ("den", tol.den), ("unanimity", tol.unanimity)]),
        "order": report.order,
        "type": report.aggregate.name(),
        "orientation": report.orientation.to_string(),
        "symmetry_dim": symmetry_dim(report.symmetry_dim),
        "unanimity": float(report.unanimity),
        "admissible": report.admissible(),
        "histogram": Value::Object(
            report.histogram.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<Map<_, _>>()
        ),
        "parabolic_boundary": report.parabolic_boundary,
        "max_defects": defects(&report.max_defects),
        "excluded": report
            .excluded
            .iter()
            .map(|(q, reason)| json!({ "point": point(*q), "reason": reason }))
            .collect::<Vec<_>>(),
        "points": report.points.iter().map(point_verdict).collect::<Vec<_>>(),
    })
}

pub fn symmetry(p: &ContactPair, field: &crate::files::FieldFile, check: &SymmetryCheck, tol: f64) -> Value {
    json!({
        "pair": pair(p),
        "field": { "u": field.u, "v": field.v },
        "w": check.w.to_string(),
        "tolerance": float(tol),
        "max_residual": float(check.max_residual),
        "worst_point": check.worst_point.map(point),
        "checked": check.checked,
        "excluded": check.excluded,
        "passed": check.passed,
    })
}

/// Serializes with a trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn num(x: f64) -> String {
    format!("{x:.10e}")
}

pub fn classification_table(report: &ClassificationReport) -> String {
    let mut out = String::new();
    let dim = report.symmetry_dim.map_or("-".to_string(), |d| d.to_string());
    let _ = writeln!(out, "type          {}", report.aggregate);
    let _ = writeln!(out, "orientation   {}", report.orientation);
    let _ = writeln!(out, "symmetry dim  {dim}");
    let _ = writeln!(
        out,
        "unanimity     {:.4} of {} admissible points ({} excluded)",
        report.unanimity,
        report.admissible(),
        report.excluded.len()
    );
    if report.parabolic_boundary {
        let _ = writeln!(out, "note          I^2 = 4 within tolerance (parabolic boundary)");
    }
    let _ = writeln!(out, "histogram");
    for (tag, count) in &report.histogram {
        let _ = writeln!(out, "  {tag:<14}{count}");
    }
    let _ = writeln!(out, "max defects");
    for (name, v) in &report.max_defects {
        let _ = writeln!(out, "  {name:<24}{}", num(*v));
    }
    if let Some((q, reason)) = report.excluded.first() {
        let _ = writeln!(out, "first excluded point {q}: {reason}");
    }
    out
}

pub fn record_table(rec: &InvariantRecord) -> String {
    let mut out = String::new();
    let sigma = rec.sigma.map_or("?", |o| o.symbol());
    let _ = writeln!(out, "point    {}", rec.q);
    let _ = writeln!(out, "sigma    {sigma}");
    let _ = writeln!(out, "branch   {}", rec.branch.name());
    let _ = writeln!(out, "order    {}", rec.order_used);
    if let Status::Indeterminate(reason) | Status::Inadmissible(reason) = &rec.status {
        let _ = writeln!(out, "status   {reason}");
    }
    for (name, v) in rec.values() {
        let _ = writeln!(out, "  {name:<10}{}", num(v));
    }
    let _ = writeln!(out, "defects");
    for (name, v) in &rec.defects {
        let _ = writeln!(out, "  {name:<24}{}", num(*v));
    }
    out
}
