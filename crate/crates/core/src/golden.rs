//! The worked examples of reductions, as exact golden checks.
//!
//! Each check rebuilds a displayed system from word notation and compares it
//! with what the engine computes, as matrices with polynomial entries. Reduction
//! parameters `m`, `l` of the displays are `m1`, `m2` here.

use std::time::{Duration, Instant};

use crate::certify::{
    complexity_certificate, constant_count, linear_step_bound, replay, CertifyOptions, Mode,
    ReductionTrace, Reorder, Target,
};
use crate::dsl::{parse_system, render_word};
use crate::error::{Error, Result};
use crate::nilgroup::{GSequence, GeneratorAssignment};
use crate::polyring::Offset;
use crate::systems::{cheat_normalize, dedupe, normalize_equiv, reduce_m, System};

/// Outcome of one golden check.
#[derive(Clone, Debug)]
pub struct GoldenCheck {
    pub example: &'static str,
    pub claim: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

fn words(text: &str, a: &GeneratorAssignment) -> Result<Vec<GSequence>> {
    parse_system(text)?.realize(a)
}

fn system(text: &str, a: &GeneratorAssignment) -> Result<System> {
    System::new(words(text, a)?)
}

fn m(k: u32) -> Offset {
    Offset::param(k)
}

/// Ordered, entry-by-entry equality.
fn same_list(got: &System, expected: &[GSequence]) -> std::result::Result<(), String> {
    if got.len() != expected.len() {
        return Err(format!(
            "expected {} sequences, got {}",
            expected.len(),
            got.len()
        ));
    }
    for (i, (g, e)) in got.sequences().iter().zip(expected).enumerate() {
        if g != e {
            return Err(format!("position {}: expected {e}, got {g}", i + 1));
        }
    }
    Ok(())
}

/// Same sequences regardless of order and repetition.
fn same_set(got: &[GSequence], expected: &[GSequence]) -> std::result::Result<(), String> {
    let mut a = dedupe(got);
    let mut b = dedupe(expected);
    a.sort();
    b.sort();
    if a == b {
        Ok(())
    } else {
        Err(format!(
            "sets differ: got {} distinct, expected {}",
            a.len(),
            b.len()
        ))
    }
}

/// Multiset of words read back from the matrices, each word's factors sorted.
fn exponent_multiset(
    seqs: &[GSequence],
    a: &GeneratorAssignment,
) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::with_capacity(seqs.len());
    for g in seqs {
        let w = render_word(g, a).ok_or_else(|| format!("{g} has no word form"))?;
        let mut f: Vec<String> = w
            .factors
            .iter()
            .map(|(n, e)| format!("{n}^({e})"))
            .collect();
        f.sort();
        out.push(f.join(" "));
    }
    out.sort();
    Ok(out)
}

fn same_exponents(
    got: &System,
    expected: &[GSequence],
    a: &GeneratorAssignment,
) -> std::result::Result<(), String> {
    let x = exponent_multiset(got.sequences(), a)?;
    let y = exponent_multiset(expected, a)?;
    if x == y {
        Ok(())
    } else {
        Err(format!("exponent multisets differ: {x:?} vs {y:?}"))
    }
}

type Outcome = std::result::Result<(), String>;

fn lift(r: Result<Outcome>) -> Outcome {
    r.unwrap_or_else(|e: Error| Err(e.to_string()))
}

struct Runner {
    out: Vec<GoldenCheck>,
}

impl Runner {
    fn check(&mut self, example: &'static str, claim: &str, f: impl FnOnce() -> Result<Outcome>) {
        let t = Instant::now();
        let res = lift(f());
        self.out.push(GoldenCheck {
            example,
            claim: claim.to_string(),
            passed: res.is_ok(),
            detail: res.err().unwrap_or_default(),
            elapsed: t.elapsed(),
        });
    }
}

fn all_of(parts: Vec<Outcome>) -> Outcome {
    parts
        .into_iter()
        .collect::<std::result::Result<Vec<()>, _>>()
        .map(|_| ())
}

fn steps_equal(label: &str, got: usize, want: usize) -> Outcome {
    if got == want {
        Ok(())
    } else {
        Err(format!("{label}: {got} steps, expected {want}"))
    }
}

fn certify(s: &System, mode: Mode) -> Result<ReductionTrace> {
    complexity_certificate(
        s,
        &CertifyOptions {
            mode,
            ..CertifyOptions::default()
        },
    )
}

fn example_constants(r: &mut Runner) {
    r.check("constants", "m-reduction of (C1, C2, C3) ~ (1_G, C1, C2)", || {
        let mut parts = Vec::new();
        for a in [
            GeneratorAssignment::abelian(&["C1", "C2", "C3"]),
            GeneratorAssignment::heisenberg("X", "Y"),
        ] {
            let text = if a.dim() == 3 {
                "X; Y; X Y^2"
            } else {
                "C1; C2; C3"
            };
            let s = system(text, &a)?;
            let c = s.sequences();
            let mut expected = vec![GSequence::identity(s.dim())];
            expected.extend(c[..2].iter().cloned());
            parts.push(same_set(reduce_m(&s, &m(1))?.sequences(), &expected));
        }
        Ok(all_of(parts))
    });
    r.check("constants", "(C1, C2, C3) ~* (1_G)", || {
        let a = GeneratorAssignment::abelian(&["C1", "C2", "C3"]);
        let s = system("C1; C2; C3", &a)?;
        Ok(if cheat_normalize(&s).is_trivial() {
            Ok(())
        } else {
            Err("cheating did not give (1_G)".into())
        })
    });
    r.check(
        "constants",
        "constant system of size j is trivial after j steps",
        || {
            let a = GeneratorAssignment::abelian(&["C1", "C2", "C3"]);
            let mut parts = Vec::new();
            for (j, text) in ["C1", "C1; C2", "C1; C2; C3"].iter().enumerate() {
                let t = certify(&system(text, &a)?, Mode::Strict)?;
                parts.push(steps_equal(text, t.len(), j + 1));
            }
            Ok(all_of(parts))
        },
    );
}

fn example_linear(r: &mut Runner) {
    let a = GeneratorAssignment::abelian(&["L1", "L2", "L3", "C1", "C2", "C3"]);
    r.check(
        "linear",
        "m-reduction of (L1^n C1, L2^n C2, L3^n C3) as displayed",
        || {
            let s = system("L1^n C1; L2^n C2; L3^n C3", &a)?;
            let expected = words(
                "L1^n C1; L2^n C2; L3^(-m1); L3^(-m1) L1^(n+m1) C1; L3^(-m1) L2^(n+m1) C2",
                &a,
            )?;
            let got = reduce_m(&s, &m(1))?;
            Ok(same_list(&got, &expected).and(same_exponents(&got, &expected, &a)))
        },
    );
    r.check("linear", "the reduction ~* (L1^n, L2^n)", || {
        let s = system("L1^n C1; L2^n C2; L3^n C3", &a)?;
        let got = cheat_normalize(&reduce_m(&s, &m(1))?);
        Ok(same_list(&got, &words("L1^n; L2^n", &a)?))
    });
    r.check("linear", "grouped linear system reduces as displayed", || {
        let g = GeneratorAssignment::abelian(&["L1", "L2", "C11", "C12", "C21", "C22"]);
        let s = system("L1^n C11; L1^n C12; L2^n C21; L2^n C22", &g)?;
        let expected = words(
            "L2^(-m1); L1^n C11; L1^n C12; L1^n C11 L2^(-m1) L1^m1; \
             L1^n C12 L2^(-m1) L1^m1; L2^n C21",
            &g,
        )?;
        Ok(same_set(reduce_m(&s, &m(1))?.sequences(), &expected))
    });
    r.check(
        "linear",
        "cheating: (L_1^n C_1, ..., L_j^n C_j) trivial in j steps",
        || {
            let mut parts = Vec::new();
            for (j, text) in ["L1^n C1", "L1^n C1; L2^n C2", "L1^n C1; L2^n C2; L3^n C3"]
                .iter()
                .enumerate()
            {
                let t = certify(&system(text, &a)?, Mode::Cheating)?;
                parts.push(steps_equal(text, t.len(), j + 1));
            }
            Ok(all_of(parts))
        },
    );
    r.check(
        "linear",
        "strict: size 1 and 2 constant within a(j) steps",
        || {
            let mut parts = Vec::new();
            for (j, text) in ["L1^n C1", "L1^n C1; L2^n C2"].iter().enumerate() {
                let t = certify(&system(text, &a)?, Mode::Strict)?;
                let bound = linear_step_bound(j as u32 + 1) as usize;
                parts.push(match t.steps_to_constant() {
                    Some(k) if k <= bound => Ok(()),
                    k => Err(format!("{text}: constant after {k:?}, bound {bound}")),
                });
            }
            Ok(all_of(parts))
        },
    );
}

fn example_one_square(r: &mut Runner) {
    r.check(
        "one square",
        "m-reduction of (S1^n C1, S2^n C2, T^(n^2) S3^n C3) as displayed",
        || {
            let a = GeneratorAssignment::abelian(&["T", "S1", "S2", "S3", "C1", "C2", "C3"]);
            let s = system("S1^n C1; S2^n C2; T^(n^2) S3^n C3", &a)?;
            let expected = words(
                "S1^n C1; S2^n C2; T^(-2*m1*n - m1^2) S3^(-m1); \
             T^(-2*m1*n - m1^2) S3^(-m1) S1^(n+m1) C1; \
             T^(-2*m1*n - m1^2) S3^(-m1) S2^(n+m1) C2",
                &a,
            )?;
            let got = reduce_m(&s, &m(1))?;
            Ok(same_list(&got, &expected).and(same_exponents(&got, &expected, &a)))
        },
    );
}

fn example_singleton(r: &mut Runner) {
    r.check(
        "singleton",
        "T^(n^k) is constant after k steps, and trivial after k cheating",
        || {
            let a = GeneratorAssignment::abelian(&["T"]);
            let mut parts = Vec::new();
            for k in 1..=3usize {
                let s = system(&format!("T^(n^{k})"), &a)?;
                let strict = certify(&s, Mode::Strict)?;
                let cheat = certify(&s, Mode::Cheating)?;
                parts.push(steps_equal(
                    "strict to constant",
                    strict.steps_to_constant().unwrap_or(usize::MAX),
                    k,
                ));
                parts.push(steps_equal("strict to trivial", strict.len(), k + 1));
                parts.push(steps_equal("cheating", cheat.len(), k));
            }
            Ok(all_of(parts))
        },
    );
}

fn example_square_pair(r: &mut Runner) {
    let a = GeneratorAssignment::abelian(&["T", "S"]);
    r.check(
        "square pair",
        "m- and l-reductions of (T^(n^2), T^(n^2) S^n) as displayed",
        || {
            let s = system("T^(n^2); T^(n^2) S^n", &a)?;
            let first = reduce_m(&s, &m(1))?;
            let e1 = words("T^(n^2); T^(-2*m1*n - m1^2) S^(-m1); T^(n^2) S^(-m1)", &a)?;
            let second = reduce_m(&first, &m(2))?;
            let e2 = words(
                "T^(n^2); T^(-2*m1*n - m1^2) S^(-m1); T^(-2*m2*n - m2^2); T^(n^2); \
             T^(-2*m2*n - m2^2 - 2*m1*(n+m2) - m1^2) S^(-m1)",
                &a,
            )?;
            Ok(all_of(vec![
                same_list(&first, &e1),
                same_exponents(&first, &e1, &a),
                same_list(&second, &e2),
                same_exponents(&second, &e2, &a),
            ]))
        },
    );
}

/// `C = S^{-m1} T^{m1}`, `C1 = S^{-m1}` and `X = [C^{-1}, T^{m2}]`.
fn heisenberg_named(a: &GeneratorAssignment) -> Result<(GSequence, GSequence, GSequence)> {
    let c = words("S^(-m1) T^m1", a)?.remove(0);
    let c1 = words("S^(-m1)", a)?.remove(0);
    let t_m2 = words("T^m2", a)?.remove(0);
    let x = c.invert().commutator(&t_m2)?;
    Ok((c, c1, x))
}

fn example_heisenberg(r: &mut Runner) {
    let a = GeneratorAssignment::heisenberg("T", "S");
    r.check(
        "heisenberg",
        "m1-reduction (T^n, S^(-m1), S^(-m1) T^m1 T^n)",
        || {
            let s = system("T^n; S^n", &a)?;
            Ok(same_list(
                &reduce_m(&s, &m(1))?,
                &words("T^n; S^(-m1); S^(-m1) T^m1 T^n", &a)?,
            ))
        },
    );
    r.check("heisenberg", "m2-reduction and the commutator form", || {
        let s = system("T^n; S^n", &a)?;
        let (c, c1, x) = heisenberg_named(&a)?;
        let t_n = words("T^n", &a)?.remove(0);
        let t_mm2 = words("T^(-m2)", &a)?.remove(0);
        let t_m2 = words("T^m2", &a)?.remove(0);
        let second = reduce_m(&reduce_m(&s, &m(1))?, &m(2))?;
        let conj = c.compose(&t_mm2)?.compose(&c.invert())?;
        let expected = vec![
            t_n.clone(),
            c1.clone(),
            conj.clone(),
            conj.compose(&t_m2)?.compose(&t_n)?,
            conj.compose(&c1)?,
        ];
        let (c2, c3) = (conj.clone(), conj.compose(&c1)?);
        let equivalent = vec![c1, c2.clone(), c3.clone(), t_n.clone(), x.compose(&t_n)?];
        let constant = if c2.is_constant() && c3.is_constant() {
            Ok(())
        } else {
            Err("C2, C3 are not constant".into())
        };
        Ok(all_of(vec![
            same_list(&second, &expected),
            same_set(second.sequences(), &equivalent),
            constant,
        ]))
    });
    r.check(
        "heisenberg",
        "after m3: c(3) constants, T^n and [X^{-1}, T^m3] T^n",
        || {
            let s = system("T^n; S^n", &a)?;
            let (_, _, x) = heisenberg_named(&a)?;
            let t_n = words("T^n", &a)?.remove(0);
            let t_m3 = words("T^m3", &a)?.remove(0);
            let second = normalize_equiv(&reduce_m(&reduce_m(&s, &m(1))?, &m(2))?);
            let xt = x.compose(&t_n)?;
            let idx = second
                .sequences()
                .iter()
                .position(|g| *g == xt)
                .ok_or_else(|| Error::InvalidParameter("[C^{-1}, T^m2] T^n missing".into()))?;
            let third = reduce_m(&second.with_last(idx), &m(3))?;
            let nested = x.invert().commutator(&t_m3)?.compose(&t_n)?;
            let constants = third.sequences().iter().filter(|g| g.is_constant()).count();
            let moving: Vec<GSequence> = third
                .sequences()
                .iter()
                .filter(|g| !g.is_constant())
                .cloned()
                .collect();
            Ok(all_of(vec![
                if constants as u64 == constant_count(3) {
                    Ok(())
                } else {
                    Err(format!(
                        "{constants} constants, expected {}",
                        constant_count(3)
                    ))
                },
                same_set(&moving, &[t_n, nested]),
            ]))
        },
    );
}

fn example_two_squares(r: &mut Runner) {
    let a = GeneratorAssignment::abelian(&["T", "S"]);
    r.check(
        "two squares",
        "three displayed reductions of (T^(n^2), S^(n^2))",
        || {
            let s = system("T^(n^2); S^(n^2)", &a)?;
            let first = reduce_m(&s, &m(1))?;
            let e1 = words(
                "T^(n^2); S^(-2*n*m1 - m1^2); S^(-2*n*m1 - m1^2) T^(n^2) T^(2*n*m1 + m1^2)",
                &a,
            )?;
            let swapped = Reorder::Permute(vec![1, 0, 2]).apply(&first)?;
            let second = reduce_m(&swapped, &m(2))?;
            let e2 = words(
                "S^(-2*n*m1 - m1^2); T^(n^2); T^(-2*n*m2 - m2^2 - 2*m1*m2) S^(2*m1*m2); \
             T^(-2*n*m2 - m2^2 - 2*m1*m2) S^(-2*n*m1 - m1^2); \
             T^(n^2) S^(2*m1*m2) T^(-2*m1*m2)",
                &a,
            )?;
            let third = reduce_m(&second, &m(3))?;
            let e3 = words(
                "S^(-2*n*m1 - m1^2); T^(n^2); T^(-2*n*m2 - m2^2 - 2*m1*m2) S^(2*m1*m2); \
             T^(-2*n*m2 - m2^2 - 2*m1*m2) S^(-2*n*m1 - m1^2); T^(-2*n*m3 - m3^2); \
             T^(-2*n*m3 - m3^2) S^(-2*n*m1 - 2*m1*m3 - m1^2); T^(n^2); \
             T^(-2*n*m3 - m3^2 - 2*n*m2 - 2*m2*m3 - m2^2 - 2*m1*m2) S^(2*m1*m2); \
             T^(-2*n*m3 - m3^2 - 2*n*m2 - 2*m2*m3 - m2^2 - 2*m1*m2) S^(-2*n*m1 - 2*m1*m3 - m1^2)",
                &a,
            )?;
            Ok(all_of(vec![
                same_list(&first, &e1),
                same_list(&second, &e2),
                same_list(&third, &e3),
                same_exponents(&third, &e3, &a),
            ]))
        },
    );
}

/// Runs every golden check.
pub fn golden_checks() -> Vec<GoldenCheck> {
    let mut r = Runner { out: Vec::new() };
    example_constants(&mut r);
    example_linear(&mut r);
    example_one_square(&mut r);
    example_singleton(&mut r);
    example_square_pair(&mut r);
    example_heisenberg(&mut r);
    example_two_squares(&mut r);
    r.out
}

/// Certificates and replayed displays for the examples, for re-verification.
pub fn golden_traces() -> Result<Vec<(String, ReductionTrace)>> {
    let mut out = Vec::new();
    let abel = GeneratorAssignment::abelian(&["C1", "C2", "C3", "L1", "L2", "L3"]);
    let heis = GeneratorAssignment::heisenberg("T", "S");
    let ts = GeneratorAssignment::abelian(&["T", "S"]);
    let certified: Vec<(&str, &GeneratorAssignment, Mode)> = vec![
        ("C1; C2; C3", &abel, Mode::Strict),
        ("L1^n C1; L2^n C2; L3^n C3", &abel, Mode::Cheating),
        ("L1^n C1; L2^n C2", &abel, Mode::Strict),
        ("T^n", &ts, Mode::Strict),
        ("T^(n^2)", &ts, Mode::Strict),
        ("T^(n^3)", &ts, Mode::Strict),
        ("T^(n^2); T^(n^2) S^n", &ts, Mode::Cheating),
        ("T^(n^2); S^(n^2)", &ts, Mode::Cheating),
        ("T^n; S^n", &heis, Mode::Strict),
        ("T^n; S^n", &heis, Mode::Cheating),
    ];
    for (text, a, mode) in certified {
        let t = certify(&system(text, a)?, mode)?;
        out.push((format!("{text} [{mode:?}]"), t));
    }
    let last = |s: &System| Reorder::MoveToEnd(s.len() - 1);
    let square_pair = system("T^(n^2); T^(n^2) S^n", &ts)?;
    let first = normalize_equiv(&reduce_m(&square_pair, &m(1))?);
    out.push((
        "square pair display".into(),
        replay(
            &square_pair,
            Mode::Strict,
            Target::Trivial,
            &[(last(&square_pair), 1), (last(&first), 2)],
        )?,
    ));
    let two_squares = system("T^(n^2); S^(n^2)", &ts)?;
    let first = normalize_equiv(&reduce_m(&two_squares, &m(1))?);
    let second = normalize_equiv(&reduce_m(
        &Reorder::Permute(vec![1, 0, 2]).apply(&first)?,
        &m(2),
    )?);
    out.push((
        "two squares display".into(),
        replay(
            &two_squares,
            Mode::Strict,
            Target::Trivial,
            &[
                (last(&two_squares), 1),
                (Reorder::Permute(vec![1, 0, 2]), 2),
                (last(&second), 3),
            ],
        )?,
    ));
    let pair = system("T^n; S^n", &heis)?;
    let first = normalize_equiv(&reduce_m(&pair, &m(1))?);
    let second = normalize_equiv(&reduce_m(&first, &m(2))?);
    let (_, _, x) = heisenberg_named(&heis)?;
    let xt = x.compose(&words("T^n", &heis)?.remove(0))?;
    let idx = second
        .sequences()
        .iter()
        .position(|g| *g == xt)
        .ok_or_else(|| Error::InvalidParameter("[C^{-1}, T^m2] T^n missing".into()))?;
    out.push((
        "heisenberg display".into(),
        replay(
            &pair,
            Mode::Strict,
            Target::Trivial,
            &[
                (last(&pair), 1),
                (last(&first), 2),
                (Reorder::MoveToEnd(idx), 3),
            ],
        )?,
    ));
    Ok(out)
}
