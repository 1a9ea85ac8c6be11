//! The effectful source calculus: types, terms, signatures, concrete syntax,
//! and typechecking.

pub mod parse;
pub mod signature;
pub mod term;
pub mod typecheck;
pub mod types;

pub use parse::{parse_program, parse_type, ParseError};
pub use signature::{ConstDecl, IndexKind, OpDecl, Signature, SignatureError, ValidationReport};
pub use term::{InjSide, OpIndex, OpRef, ProjSide, SourceTerm};
pub use typecheck::{elaborate, typecheck, TypeError, TypingContext};
pub use types::SourceType;
