//! Weakest-precondition analysis for a higher-order language with algebraic
//! effects and recursion.
//!
//! Programs in the effectful source calculus are translated by a
//! continuation-passing transform into a modal fixed-point logic, whose
//! formulas are then evaluated under a pluggable answer algebra. The shipped
//! algebras compute trace inclusion against a finite automaton, expected
//! running cost, and higher moments of the cost distribution. A direct
//! operational interpreter serves as an independent cross-check.

pub mod algebra;
pub mod cps;
pub(crate) mod envlist;
pub mod gen;
pub mod harness;
pub mod ground;
pub mod oracle;
pub mod source;
pub mod target;

pub use algebra::{AlgebraConfig, AlgebraKind, Dfa, Weight};
pub use ground::GroundVal;
pub use source::{Signature, SourceTerm, SourceType};
pub use target::{TargetTerm, TargetType};
