use serde_json::{json, Value};

/// Why a command did not produce a report. Every variant becomes a JSON
/// error document on stderr.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, files or parameters (exit 2).
    Input(String),
    /// The engine rejected the input or failed (exit 1).
    Engine(nilreduce::Error),
    /// A verification ran and did not pass (exit 1).
    Verification(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Engine(nilreduce::Error::Parse { .. }) => 2,
            _ => 1,
        }
    }

    pub fn document(&self) -> Value {
        let (kind, message, extra) = match self {
            Failure::Input(m) => ("input", m.clone(), Value::Null),
            Failure::Verification(m) => ("verification", m.clone(), Value::Null),
            Failure::Io(m) => ("io", m.clone(), Value::Null),
            Failure::Engine(e) => {
                let extra = match e {
                    nilreduce::Error::Parse { line, column, expected, .. } => {
                        json!({"line": line, "column": column, "expected": expected})
                    }
                    nilreduce::Error::BudgetExhausted { budget, steps, .. } => {
                        json!({"budget": budget, "steps": steps})
                    }
                    nilreduce::Error::TraceMismatch { step, .. } => json!({ "step": step }),
                    _ => Value::Null,
                };
                let kind = match e {
                    nilreduce::Error::Parse { .. } => "parse",
                    nilreduce::Error::BudgetExhausted { .. } => "budget",
                    nilreduce::Error::TraceMismatch { .. } => "verification",
                    _ => "engine",
                };
                (kind, e.to_string(), extra)
            }
        };
        let mut err = json!({"kind": kind, "message": message});
        if let Value::Object(m) = extra {
            err.as_object_mut().expect("object").extend(m);
        }
        json!({ "error": err })
    }
}

impl From<nilreduce::Error> for Failure {
    fn from(e: nilreduce::Error) -> Self {
        Failure::Engine(e)
    }
}
