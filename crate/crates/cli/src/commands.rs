use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use nilreduce::golden::{golden_checks, golden_traces};
use nilreduce::dsl::{parse_system, SystemSpec};
use nilreduce::ergolab::{oscillation, stability_window, Observable, RealizedSystem};
use nilreduce::hahnbanach::{
    decompose, default_delta, default_eta, DecomposeParams, NormFamily, SpanningSet,
};
use nilreduce::report::{float_value, fmt_float, render_system, to_csv, trace_document, verify_trace_document};
use nilreduce::{
    cheat_normalize, complete_reduce_m, complexity_certificate, normalize_equiv, reduce_m,
    verify_trace, CertifyOptions, GeneratorAssignment, Mode, Offset, System, Target,
};
use serde_json::{json, Value};

use crate::failure::Failure;
use crate::generators::{self, Generators};

/// What a command produced, before serialization.
pub struct Report {
    pub result: Value,
    pub text: String,
    pub csv: Option<String>,
}

/// Effective settings shared by the commands; everything here is echoed
/// into the report.
pub struct Settings {
    pub mode: Mode,
    pub target: Target,
    pub budget: usize,
    pub epsilon: Option<f64>,
    pub generators: Option<Value>,
}

pub fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// `@file` reads the system from a file, anything else is the text itself.
pub fn system_text(arg: &str) -> Result<String, Failure> {
    match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .map(|s| s.trim().to_string())
            .map_err(|e| Failure::Io(format!("{path}: {e}"))),
        None => Ok(arg.to_string()),
    }
}

fn matrix_generators(spec: &SystemSpec, gens: &Option<Value>) -> Result<GeneratorAssignment, Failure> {
    match gens {
        None => Ok(generators::abelian_for(&spec.words)),
        Some(v) => match generators::parse(v)? {
            Generators::Matrices(a) => Ok(a),
            Generators::Permutations(_) => Err(Failure::Input(
                "this command needs matrix generators ({\"dim\": d, \"generators\": ...})".into(),
            )),
        },
    }
}

fn realize(text: &str, gens: &Option<Value>) -> Result<(System, GeneratorAssignment), Failure> {
    let spec = parse_system(text)?;
    let a = matrix_generators(&spec, gens)?;
    Ok((System::new(spec.realize(&a)?)?, a))
}

fn normalizer(mode: Mode) -> fn(&System) -> System {
    match mode {
        Mode::Strict => normalize_equiv,
        Mode::Cheating => cheat_normalize,
    }
}

pub fn reduce(text: &str, param: Option<u32>, complete: bool, s: &Settings) -> Result<Report, Failure> {
    let (sys, a) = realize(text, &s.generators)?;
    let k = param.unwrap_or(sys.max_param() + 1);
    if k == 0 {
        return Err(Failure::Input("reduction parameters are m1, m2, ...".into()));
    }
    let raw = if complete {
        complete_reduce_m(&sys, &Offset::param(k))?
    } else {
        reduce_m(&sys, &Offset::param(k))?
    };
    let reduced = normalizer(s.mode)(&raw);
    let (input, raw, reduced_text) = (
        render_system(&sys, Some(&a)),
        render_system(&raw, Some(&a)),
        render_system(&reduced, Some(&a)),
    );
    let text = format!("input    {input}\nm{k}       {raw}\nreduced  {reduced_text}\n");
    Ok(Report {
        result: json!({
            "input": input,
            "param": format!("m{k}"),
            "raw": raw,
            "reduced": reduced_text,
            "size": reduced.len(),
        }),
        text,
        csv: None,
    })
}

pub fn certify(text: &str, s: &Settings) -> Result<Report, Failure> {
    let (sys, a) = realize(text, &s.generators)?;
    let opts = CertifyOptions {
        mode: s.mode,
        target: s.target,
        budget: s.budget,
        bound: None,
    };
    let trace = complexity_certificate(&sys, &opts)?;
    let doc = trace_document(&trace, Some(&a));
    let mut text = format!("input  {}\n", render_system(&sys, Some(&a)));
    for step in doc["steps"].as_array().expect("steps") {
        let _ = writeln!(
            text,
            "{:>5}  {} on {}: {}",
            step["index"].as_u64().unwrap_or(0),
            step["kind"].as_str().unwrap_or(""),
            step["param"].as_str().unwrap_or(""),
            step["post"].as_str().unwrap_or("")
        );
    }
    let _ = writeln!(
        text,
        "{} steps, constant after {}",
        trace.len(),
        trace
            .steps_to_constant()
            .map_or("-".to_string(), |k| k.to_string())
    );
    Ok(Report {
        result: doc,
        text,
        csv: None,
    })
}

/// Checks a `certify` report (or a bare trace document) against the system
/// it names, replaying every recorded move.
pub fn verify_trace_file(
    path: &Path,
    system: Option<&str>,
    s: &Settings,
    mode_given: bool,
    target_given: bool,
) -> Result<Report, Failure> {
    let v = read_json(path)?;
    let config = v.get("config").cloned().unwrap_or(Value::Null);
    let doc = v.get("result").cloned().unwrap_or_else(|| v.clone());
    let text = match system {
        Some(t) => t.to_string(),
        None => config
            .get("system")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| Failure::Input("no system given and none recorded in the report".into()))?,
    };
    fn recorded<T: serde::de::DeserializeOwned>(config: &Value, key: &str) -> Option<T> {
        config.get(key).and_then(|m| serde_json::from_value(m.clone()).ok())
    }
    let mode = if mode_given { s.mode } else { recorded(&config, "mode").unwrap_or(s.mode) };
    let target = if target_given { s.target } else { recorded(&config, "target").unwrap_or(s.target) };
    let gens = match &s.generators {
        Some(g) => Some(g.clone()),
        None => config.get("generators").filter(|g| g.is_object()).cloned(),
    };
    let (sys, a) = realize(&text, &gens)?;
    let trace = verify_trace_document(&doc, &sys, mode, target, Some(&a)).map_err(|e| match e {
        nilreduce::Error::Format(_) => Failure::Verification(e.to_string()),
        other => Failure::Engine(other),
    })?;
    let final_text = render_system(trace.final_system(), Some(&a));
    Ok(Report {
        result: json!({
            "verified": true,
            "count": trace.len(),
            "final": final_text,
            "system": text,
            "mode": mode,
            "target": target,
        }),
        text: format!("verified {} steps, final {final_text}\n", trace.len()),
        csv: None,
    })
}

fn vector(v: &Value, what: &str) -> Result<DVector<f64>, Failure> {
    let xs: Vec<f64> = serde_json::from_value(v.clone())
        .map_err(|_| Failure::Input(format!("{what} must be a list of numbers")))?;
    Ok(DVector::from_vec(xs))
}

fn vector_value(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|x| float_value(*x)).collect())
}

/// Experiment file for `decompose`:
/// `{"f": [...], "radius": r, "tiers": [{"start": 1, "atoms": [[...], ...], "bound": 1}, ...],
///   "delta": δ, "c": c, "m_bullet": M, "eta": {"scale": s}, "psi": {"mul": a, "add": b}, "tol": t}`
/// with `η(x) = s / x` and `ψ(n) = a n + b`. Without `delta`/`eta`,
/// `--epsilon` supplies `δ = ε/96` and `η(x) = ε²/(216 x)`.
pub fn decompose_file(exp: &Value, s: &Settings) -> Result<Report, Failure> {
    let num = |key: &str| exp.get(key).and_then(Value::as_f64);
    let f = vector(exp.get("f").unwrap_or(&Value::Null), "f")?;
    let radius = num("radius").unwrap_or(0.0);
    let tiers = exp
        .get("tiers")
        .and_then(Value::as_array)
        .ok_or_else(|| Failure::Input("`tiers` must be a list".into()))?
        .iter()
        .map(|t| {
            let start = t
                .get("start")
                .and_then(Value::as_u64)
                .ok_or_else(|| Failure::Input("each tier needs a `start` index".into()))?;
            let atoms = t
                .get("atoms")
                .and_then(Value::as_array)
                .ok_or_else(|| Failure::Input("each tier needs `atoms`".into()))?
                .iter()
                .map(|a| vector(a, "an atom"))
                .collect::<Result<Vec<_>, _>>()?;
            let bound = t.get("bound").and_then(Value::as_f64).unwrap_or(1.0);
            Ok((start, SpanningSet::new(atoms, bound)?))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let family = NormFamily::new(tiers, radius)?;

    let delta = match (num("delta"), s.epsilon) {
        (Some(d), _) => d,
        (None, Some(e)) => default_delta(e),
        (None, None) => return Err(Failure::Input("need `delta` in the file or --epsilon".into())),
    };
    let eta: Box<dyn Fn(f64) -> f64> = match (exp.get("eta").and_then(|e| e.get("scale")).and_then(Value::as_f64), s.epsilon) {
        (Some(k), _) => Box::new(move |x| k / x),
        (None, Some(e)) => Box::new(default_eta(e)),
        (None, None) => return Err(Failure::Input("need `eta.scale` in the file or --epsilon".into())),
    };
    let psi_mul = exp.get("psi").and_then(|p| p.get("mul")).and_then(Value::as_u64).unwrap_or(2);
    let psi_add = exp.get("psi").and_then(|p| p.get("add")).and_then(Value::as_u64).unwrap_or(0);
    let psi = move |n: u64| psi_mul.saturating_mul(n).saturating_add(psi_add);
    let params = DecomposeParams {
        delta,
        c: num("c").unwrap_or(0.5),
        m_bullet: exp.get("m_bullet").and_then(Value::as_u64).unwrap_or(1),
        eta: &*eta,
        psi: &psi,
        tol: num("tol").unwrap_or(1e-8),
    };
    let r = decompose(&f, &family, &params)?;
    let result = json!({
        "index": r.index,
        "a": r.a,
        "m": r.m,
        "b": r.b,
        "c_value": float_value(r.c_value),
        "eta_value": float_value(r.eta_value),
        "norms": {
            "f1_atomic_b": float_value(r.norm_f1),
            "f2_dual_a": float_value(r.dual_f2),
            "f3_l2": float_value(r.norm_f3),
        },
        "f1": vector_value(&r.f1),
        "f2": vector_value(&r.f2),
        "f3": vector_value(&r.f3),
        "schedule": r.schedule.iter().map(|e| json!({"a": e.a, "m": e.m, "b": e.b})).collect::<Vec<_>>(),
        "constants": r.constants.iter().map(|c| float_value(*c)).collect::<Vec<_>>(),
        "functionals": r.functionals.iter().map(|p| json!({
            "round": p.round,
            "value": float_value(p.value),
            "supports": p.supports.iter().map(|x| float_value(*x)).collect::<Vec<_>>(),
            "phi": vector_value(&p.phi),
        })).collect::<Vec<_>>(),
        "energy": r.energy.iter().map(|(k, e, b)| json!({
            "round": k, "norm_sq": float_value(*e), "bound": float_value(*b),
        })).collect::<Vec<_>>(),
    });
    let text = format!(
        "round {} of {} (A = {}, B = {}), C = {}\n||f1||_B = {} < C, ||f2||*_A = {} < η(C) = {}, ||f3|| = {} < δ = {}\n",
        r.index,
        r.constants.len(),
        r.a,
        r.b,
        fmt_float(r.c_value),
        fmt_float(r.norm_f1),
        fmt_float(r.dual_f2),
        fmt_float(r.eta_value),
        fmt_float(r.norm_f3),
        fmt_float(delta)
    );
    Ok(Report { result, text, csv: None })
}

pub struct SimulateArgs<'a> {
    pub system: &'a str,
    pub functions: Option<Value>,
    pub from: u64,
    pub to: u64,
}

/// Oscillations `||A_{2N} - A_N||` for `N = from, 2 from, 4 from, ... <= to`
/// and, with `--epsilon`, the stability window for `F(N) = 2N`.
pub fn simulate(args: &SimulateArgs, s: &Settings) -> Result<Report, Failure> {
    let spec = parse_system(args.system)?;
    let assignment = match s.generators.as_ref().map(generators::parse).transpose()? {
        Some(Generators::Permutations(p)) => p,
        _ => {
            return Err(Failure::Input(
                "simulate needs a permutation generator file (\"space\": \"Zp\", \"torus\" or \"heisenberg\")".into(),
            ))
        }
    };
    let size = assignment.space().size();
    let r = RealizedSystem::new(spec.words.clone(), assignment)?;
    let fs: Vec<Observable> = match &args.functions {
        None => {
            let one = Observable::indicator(size, &[0])?;
            vec![one; r.len()]
        }
        Some(v) => {
            let list: Vec<Vec<f64>> = v
                .get("functions")
                .and_then(|f| serde_json::from_value(f.clone()).ok())
                .ok_or_else(|| Failure::Input("`functions` must be a list of value lists".into()))?;
            list.into_iter()
                .map(Observable::from_values)
                .collect::<Result<_, _>>()?
        }
    };
    if args.from == 0 || args.to < args.from {
        return Err(Failure::Input("need 1 <= --from <= --to".into()));
    }
    let mut rows = Vec::new();
    let mut n = args.from;
    while n <= args.to {
        rows.push((n, 2 * n, oscillation(&r, &fs, n, 2 * n)?));
        n = n.saturating_mul(2);
    }
    let mut result = json!({
        "rows": rows.iter().map(|(n, np, o)| json!({"N": n, "Nprime": np, "oscillation": float_value(*o)})).collect::<Vec<_>>(),
        "space_size": size,
    });
    let mut text = String::from("N Nprime oscillation\n");
    for (n, np, o) in &rows {
        let _ = writeln!(text, "{n} {np} {}", fmt_float(*o));
    }
    if let Some(eps) = s.epsilon {
        let cap = s.budget as u64;
        let w = stability_window(&r, &fs, &|n| 2 * n, eps, args.from, cap)?;
        result["stability"] = json!({
            "epsilon": float_value(eps),
            "m": w.m,
            "upper": w.upper,
            "window_max": float_value(w.window_max),
            "probes": w.probes.iter().map(|(m, x)| json!([m, float_value(*x)])).collect::<Vec<_>>(),
        });
        let _ = writeln!(
            text,
            "stable from M = {} (window [{}, {}], max {})",
            w.m,
            w.m,
            w.upper,
            fmt_float(w.window_max)
        );
    }
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(n, np, o)| vec![n.to_string(), np.to_string(), fmt_float(*o)])
        .collect();
    Ok(Report {
        result,
        text,
        csv: Some(to_csv(&["N", "Nprime", "oscillation"], &csv_rows)),
    })
}

/// Golden checks and golden traces. Timings are kept out of the JSON so the
/// report is reproducible; the one-second limit is reported as a flag.
pub fn verify_appendix() -> Result<Report, Failure> {
    let checks = golden_checks();
    let traces = golden_traces()?;
    let mut failures = Vec::new();
    let mut text = String::new();
    let check_docs: Vec<Value> = checks
        .iter()
        .map(|c| {
            let quick = c.elapsed.as_secs_f64() < 1.0;
            if !(c.passed && quick) {
                failures.push(format!("{} {}: {}", c.example, c.claim, c.detail));
            }
            let _ = writeln!(
                text,
                "{} {} {}",
                if c.passed && quick { "ok  " } else { "FAIL" },
                c.example,
                c.claim
            );
            json!({
                "example": c.example,
                "claim": c.claim,
                "passed": c.passed,
                "detail": c.detail,
                "under_one_second": quick,
            })
        })
        .collect();
    let trace_docs: Vec<Value> = traces
        .iter()
        .map(|(name, t)| {
            let verified = verify_trace(t);
            if let Err(e) = &verified {
                failures.push(format!("{name}: {e}"));
            }
            let _ = writeln!(
                text,
                "{} trace {name}: {} steps",
                if verified.is_ok() { "ok  " } else { "FAIL" },
                t.len()
            );
            json!({"name": name, "count": t.len(), "verified": verified.is_ok()})
        })
        .collect();
    if !failures.is_empty() {
        return Err(Failure::Verification(failures.join("; ")));
    }
    Ok(Report {
        result: json!({"checks": check_docs, "traces": trace_docs}),
        text,
        csv: None,
    })
}
