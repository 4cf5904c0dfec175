//! Finite model theory toolkit: preservation of properties under formulas and
//! types, automorphism orbits and type traces, and the algebraic, graph and
//! model-building characterizations built on them.

pub mod algebra;
pub mod budget;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod graphs;
pub mod logic;
pub mod modelbuild;
pub mod orbits;
pub mod preserve;
pub mod random;
pub mod sigstruct;

pub use budget::Budget;
pub use error::{Error, Result};
pub use logic::{BlockType, Formula, FormulaSuite, Term};
pub use sigstruct::{Element, FiniteStructure, NamedPartition, Property, Signature, Tuple};
