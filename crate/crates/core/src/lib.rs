//! Polynomial sequences in nilpotent groups, reduction-to-trivial
//! certificates, and finite laboratories for the averages they control.

pub mod certify;
pub mod dsl;
pub mod ergolab;
pub mod error;
pub mod golden;
pub mod hahnbanach;
pub mod nilgroup;
pub mod polyring;
pub mod report;
pub mod systems;

pub use certify::{
    complexity_certificate, replay, verify_trace, verify_universality, CertifyOptions, Mode,
    ReductionTrace, Reorder, StepKind, Target, TraceStep,
};
pub use error::{Error, Result};
pub use nilgroup::{
    generator_power, realize_word, total_degree, vector_degree, Deg, DegreeVector, GSequence,
    GeneratorAssignment, UTMatrix, WordSequence,
};
pub use polyring::{parse_poly, Monomial, Offset, RatPoly, VarId};
pub use systems::{
    cheat_normalize, complete_reduce_m, grouped_step, normalize_equiv, reduce_m, sistema_decompose,
    SistemaDecomposition, System,
};
