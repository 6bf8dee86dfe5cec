//! Set functions on hereditarily finite sets: class grammars, an
//! interpreter, fragment sequent calculi over Σ and Σ!-formulas, and
//! witness extraction from cut-free derivations.

pub mod calculus;
pub mod classes;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod extract;
pub mod formula;
pub mod hf;
pub mod sexpr;

pub use error::{Error, Result};
pub use hf::HFSet;
