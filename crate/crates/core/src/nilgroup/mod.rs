//! Nilpotent groups modelled inside unitriangular matrix groups.
//!
//! The superdiagonal filtration `UT(d) = G_1 ⊃ G_2 ⊃ ... ⊃ G_d = {1}`, where
//! `G_{k+1}` consists of matrices whose first `k` superdiagonals vanish, plays
//! the role of the central series for all degree bookkeeping.

mod degree;
mod matrix;
mod sequence;
mod word;

pub use degree::{total_degree, vector_degree, Deg, DegreeVector};
pub use matrix::UTMatrix;
pub use sequence::GSequence;
pub use word::{generator_power, realize_word, GeneratorAssignment, WordSequence};
