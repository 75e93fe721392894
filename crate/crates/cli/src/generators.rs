//! Generator files.
//!
//! Matrices: `{"dim": 3, "generators": {"T": [[1,1,0],[0,1,0],[0,0,1]]}}`.
//! Permutations of a finite space:
//! `{"space": "Zp", "p": 101, "generators": {"T": {"shift": 1}}}`,
//! `{"space": "torus", "moduli": [7, 7], "generators": {"T": {"shift": [1, 0]}}}`,
//! `{"space": "heisenberg", "p": 5, "generators": {"X": "x", "Y": "y"}}`.

use nilreduce::ergolab::PermutationAssignment;
use nilreduce::{GeneratorAssignment, UTMatrix, WordSequence};
use serde_json::Value;

use crate::failure::Failure;

pub enum Generators {
    Matrices(GeneratorAssignment),
    Permutations(PermutationAssignment),
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Input(format!("generator file: {}", msg.into()))
}

fn object<'a>(v: &'a Value, key: &str) -> Result<&'a serde_json::Map<String, Value>, Failure> {
    v.get(key)
        .and_then(Value::as_object)
        .ok_or_else(|| bad(format!("`{key}` must be an object")))
}

fn uint(v: &Value, key: &str) -> Result<u32, Failure> {
    v.get(key)
        .and_then(Value::as_u64)
        .and_then(|x| u32::try_from(x).ok())
        .filter(|&x| x > 0)
        .ok_or_else(|| bad(format!("`{key}` must be a positive integer")))
}

pub fn parse(v: &Value) -> Result<Generators, Failure> {
    match v.get("space").and_then(Value::as_str) {
        None => matrices(v).map(Generators::Matrices),
        Some(space) => permutations(space, v).map(Generators::Permutations),
    }
}

fn matrices(v: &Value) -> Result<GeneratorAssignment, Failure> {
    let dim = v
        .get("dim")
        .and_then(Value::as_u64)
        .filter(|&d| d >= 1)
        .ok_or_else(|| bad("`dim` must be a positive integer"))? as usize;
    let mut a = GeneratorAssignment::new(dim);
    for (name, rows) in object(v, "generators")? {
        let rows: Vec<Vec<i64>> = serde_json::from_value(rows.clone())
            .map_err(|_| bad(format!("{name} must be a matrix of integers")))?;
        let m = UTMatrix::from_int_rows(&rows).map_err(|e| bad(format!("{name}: {e}")))?;
        a.insert(name, m).map_err(|e| bad(format!("{name}: {e}")))?;
    }
    Ok(a)
}

fn permutations(space: &str, v: &Value) -> Result<PermutationAssignment, Failure> {
    let gens = object(v, "generators")?;
    let shift = |name: &str, g: &Value| -> Result<Vec<i64>, Failure> {
        match g.get("shift") {
            Some(Value::Number(n)) => n.as_i64().map(|s| vec![s]),
            Some(s @ Value::Array(_)) => serde_json::from_value(s.clone()).ok(),
            _ => None,
        }
        .ok_or_else(|| bad(format!("{name} needs an integer `shift` (or a list for a torus)")))
    };
    let out = match space {
        "Zp" => {
            let p = uint(v, "p")?;
            let mut list = Vec::new();
            for (name, g) in gens {
                let s = shift(name, g)?;
                if s.len() != 1 {
                    return Err(bad(format!("{name}: Zp shifts are single integers")));
                }
                list.push((name.as_str(), s));
            }
            PermutationAssignment::torus(&[p], &list)
        }
        "torus" => {
            let moduli: Vec<u32> = v
                .get("moduli")
                .and_then(|m| serde_json::from_value(m.clone()).ok())
                .ok_or_else(|| bad("`moduli` must be a list of positive integers"))?;
            let list: Vec<(&str, Vec<i64>)> = gens
                .iter()
                .map(|(name, g)| Ok((name.as_str(), shift(name, g)?)))
                .collect::<Result<_, Failure>>()?;
            PermutationAssignment::torus(&moduli, &list)
        }
        "heisenberg" => {
            let p = uint(v, "p")?;
            let role = |r: &str| {
                gens.iter()
                    .find(|(_, g)| g.as_str() == Some(r))
                    .map(|(n, _)| n.as_str())
                    .ok_or_else(|| bad(format!("heisenberg needs one generator marked \"{r}\"")))
            };
            if gens.len() != 2 {
                return Err(bad("heisenberg takes exactly two generators"));
            }
            PermutationAssignment::heisenberg(p, role("x")?, role("y")?)
        }
        other => return Err(bad(format!("unknown space `{other}`"))),
    };
    out.map_err(|e| bad(e.to_string()))
}

/// Commuting unit generators `I + E_{2j-1,2j}` for every name in order of
/// first appearance; the default when no file is given.
pub fn abelian_for(words: &[WordSequence]) -> GeneratorAssignment {
    let mut names: Vec<&str> = Vec::new();
    for w in words {
        for n in w.generator_names() {
            if !names.contains(&n) {
                names.push(n);
            }
        }
    }
    GeneratorAssignment::abelian(&names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn both_schemas() {
        let m = json!({"dim": 2, "generators": {"T": [[1, 1], [0, 1]]}});
        assert!(matches!(parse(&m), Ok(Generators::Matrices(_))));
        let p = json!({"space": "Zp", "p": 101, "generators": {"T": {"shift": 1}}});
        match parse(&p) {
            Ok(Generators::Permutations(a)) => assert_eq!(a.space().size(), 101),
            _ => panic!("expected permutations"),
        }
        let t = json!({"space": "torus", "moduli": [7, 7], "generators": {"T": {"shift": [1, 0]}, "S": {"shift": [0, 1]}}});
        assert!(matches!(parse(&t), Ok(Generators::Permutations(_))));
        let h = json!({"space": "heisenberg", "p": 3, "generators": {"X": "x", "Y": "y"}});
        assert!(matches!(parse(&h), Ok(Generators::Permutations(_))));
    }

    #[test]
    fn rejects_malformed_files() {
        for v in [
            json!({"dim": 2, "generators": {"T": [[1, 2], [3, 1]]}}),
            json!({"dim": 2, "generators": {"T": [[1, 0.5], [0, 1]]}}),
            json!({"space": "Zp", "p": 0, "generators": {}}),
            json!({"space": "Zp", "p": 5, "generators": {"T": {"shift": [1, 2]}}}),
            json!({"space": "klein", "generators": {}}),
        ] {
            assert!(parse(&v).is_err(), "{v}");
        }
    }
}
