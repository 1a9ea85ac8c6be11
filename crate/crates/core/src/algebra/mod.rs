//! Answer algebras and formula evaluation.
//!
//! An algebra fixes the meaning of the answer type: safe trace sets over a
//! finite automaton, expected cost in the extended nonnegative reals, or
//! vectors of higher cost moments. `eval` interprets formulas against the
//! chosen algebra; `dfa`, `weight`, and `moments` hold the underlying
//! domains.

pub mod config;
pub mod dfa;
pub mod eval;
pub mod moments;
pub mod weight;

pub use config::{AlgebraConfig, AlgebraKind, ConfigError};
pub use dfa::{trace_event, trace_meet, Dfa, DfaError};
pub use eval::{
    check_trace_property, evaluate, AnswerValue, EvalError, EvalResult, Status, TraceCheck,
    Verdict,
};
pub use moments::elapse;
pub use weight::Weight;
