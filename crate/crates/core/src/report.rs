//! Deterministic serialization: sorted keys, floats as `%.12g`, and the
//! trace document that `verify-trace` reads back.

use serde_json::{json, Map, Value};

use crate::certify::{replay, verify_trace, Mode, ReductionTrace, Reorder, StepKind, Target};
use crate::dsl::render_sequence;
use crate::error::{Error, Result};
use crate::nilgroup::GeneratorAssignment;
use crate::systems::System;

/// C's `%.{precision}g`.
pub fn format_g(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = precision.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (p as i32 - 1 - exp) as usize, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `%.12g`, the float format of every report.
pub fn fmt_float(x: f64) -> String {
    format_g(x, 12)
}

/// Compact JSON with sorted keys and `%.12g` floats; non-finite floats are
/// written as strings so the document stays valid.
pub fn to_canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                out.push_str(&n.to_string());
            } else {
                out.push_str(&fmt_float(n.as_f64().expect("float")));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(&map[k], out);
            }
            out.push('}');
        }
    }
}

/// A float as a JSON value, keeping non-finite values as strings.
pub fn float_value(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(fmt_float(x)))
}

/// Rows joined by commas under a fixed header.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// `(w_1, ..., w_j)` with words where the generators allow it.
pub fn render_system(s: &System, a: Option<&GeneratorAssignment>) -> String {
    let parts: Vec<String> = s.sequences().iter().map(|g| render_sequence(g, a)).collect();
    format!("({})", parts.join(", "))
}

fn reorder_value(r: &Reorder) -> Value {
    match r {
        Reorder::MoveToEnd(i) => json!({ "move_to_end": i }),
        Reorder::Permute(order) => json!({ "permute": order }),
    }
}

fn parse_reorder(v: &Value) -> Result<Reorder> {
    let bad = || Error::Format(format!("bad reorder entry {v}"));
    let obj = v.as_object().ok_or_else(bad)?;
    if let Some(i) = obj.get("move_to_end") {
        return Ok(Reorder::MoveToEnd(i.as_u64().ok_or_else(bad)? as usize));
    }
    let order = obj
        .get("permute")
        .and_then(Value::as_array)
        .ok_or_else(bad)?
        .iter()
        .map(|i| i.as_u64().map(|i| i as usize).ok_or_else(bad))
        .collect::<Result<_>>()?;
    Ok(Reorder::Permute(order))
}

/// `{"count", "final", "steps"}`; each step records the move, the fresh
/// parameter, the degree level and the reduced system.
pub fn trace_document(t: &ReductionTrace, a: Option<&GeneratorAssignment>) -> Value {
    let steps: Vec<Value> = t
        .steps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            json!({
                "index": k + 1,
                "kind": match s.kind {
                    StepKind::Step => "step",
                    StepKind::CompleteStep => "complete-step",
                },
                "level": s.level.to_string(),
                "param": format!("m{}", s.param),
                "post": render_system(&s.post, a),
                "reorder": reorder_value(&s.reorder),
            })
        })
        .collect();
    json!({
        "count": t.steps.len(),
        "final": render_system(t.final_system(), a),
        "steps": steps,
    })
}

/// Moves `(reorder, parameter)` recorded in a trace document.
pub fn trace_moves(doc: &Value) -> Result<Vec<(Reorder, u32)>> {
    let steps = doc
        .get("steps")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Format("trace document has no steps array".into()))?;
    if doc.get("count").and_then(Value::as_u64) != Some(steps.len() as u64) {
        return Err(Error::Format("count does not match the steps".into()));
    }
    steps
        .iter()
        .map(|s| {
            let reorder = parse_reorder(
                s.get("reorder")
                    .ok_or_else(|| Error::Format("step without reorder".into()))?,
            )?;
            let param = s
                .get("param")
                .and_then(Value::as_str)
                .and_then(|p| p.strip_prefix('m'))
                .and_then(|p| p.parse::<u32>().ok())
                .ok_or_else(|| Error::Format(format!("bad param in step {s}")))?;
            Ok((reorder, param))
        })
        .collect()
}

/// Rebuilds the trace from its recorded moves, checks every recomputed
/// system against the recorded text, then checks every step identity.
pub fn verify_trace_document(
    doc: &Value,
    initial: &System,
    mode: Mode,
    target: Target,
    a: Option<&GeneratorAssignment>,
) -> Result<ReductionTrace> {
    let moves = trace_moves(doc)?;
    let trace = replay(initial, mode, target, &moves)?;
    let rebuilt = trace_document(&trace, a);
    let recorded = doc["steps"].as_array().expect("checked by trace_moves");
    for (k, (want, got)) in recorded.iter().zip(rebuilt["steps"].as_array().expect("array")).enumerate() {
        for key in ["post", "kind"] {
            if want.get(key) != got.get(key) {
                return Err(Error::TraceMismatch {
                    step: k + 1,
                    reason: format!("recorded {key} {} but recomputed {}", want[key], got[key]),
                });
            }
        }
    }
    if doc.get("final") != rebuilt.get("final") {
        return Err(Error::TraceMismatch {
            step: moves.len(),
            reason: "final system differs".into(),
        });
    }
    verify_trace(&trace)?;
    Ok(trace)
}

/// Wraps a result with the configuration that produced it.
pub fn with_config(config: Value, result: Value) -> Value {
    let mut m = Map::new();
    m.insert("config".into(), config);
    m.insert("result".into(), result);
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{complexity_certificate, CertifyOptions};
    use crate::dsl::parse_system;

    #[test]
    fn printf_g_cases() {
        for (x, s) in [
            (0.0, "0"),
            (1.0, "1"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333333"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1e-5, "1e-05"),
            (0.0001, "0.0001"),
            (-2.5e-7, "-2.5e-07"),
            (1e100, "1e+100"),
            (0.999999999999951, "1"),
        ] {
            assert_eq!(fmt_float(x), s, "{x}");
        }
    }

    #[test]
    fn sorted_keys_and_floats() {
        let v = json!({"b": 0.5, "a": [1, 2.25], "c": {"z": null, "y": "q"}});
        assert_eq!(to_canonical_json(&v), r#"{"a":[1,2.25],"b":0.5,"c":{"y":"q","z":null}}"#);
    }

    fn abelian(text: &str, names: &[&str]) -> (System, GeneratorAssignment) {
        let a = GeneratorAssignment::abelian(names);
        let s = System::new(parse_system(text).unwrap().realize(&a).unwrap()).unwrap();
        (s, a)
    }

    #[test]
    fn empty_trace() {
        let (s, a) = abelian("1", &["T"]);
        let t = complexity_certificate(&s, &CertifyOptions::default()).unwrap();
        assert_eq!(
            to_canonical_json(&trace_document(&t, Some(&a))),
            r#"{"count":0,"final":"(1_G)","steps":[]}"#
        );
    }

    #[test]
    fn trace_roundtrip_and_tamper() {
        let (s, a) = abelian("L^n; K^n", &["L", "K"]);
        let opts = CertifyOptions::default();
        let t = complexity_certificate(&s, &opts).unwrap();
        let doc = trace_document(&t, Some(&a));
        let back = verify_trace_document(&doc, &s, opts.mode, opts.target, Some(&a)).unwrap();
        assert_eq!(back.steps.len(), t.steps.len());

        let mut bad = doc.clone();
        bad["steps"][0]["post"] = json!("(L^n)");
        assert!(matches!(
            verify_trace_document(&bad, &s, opts.mode, opts.target, Some(&a)),
            Err(Error::TraceMismatch { step: 1, .. })
        ));
    }
}
