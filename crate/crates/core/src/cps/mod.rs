//! Continuation-passing translation of programs into formulas.
//!
//! [`transform`] maps a typed program to a predicate on postconditions,
//! [`normalize`] clears the administrative redexes the translation leaves
//! behind, and [`rewrite`] eliminates the modalities a given answer
//! instance can express with plain connectives. [`translate`] runs the
//! first two stages, which every consumer wants together.

pub mod normalize;
pub mod rewrite;
pub mod transform;

pub use normalize::{normalize, normalize_with_fuel};
pub use rewrite::{rewrite_cost, rewrite_trace, RewriteError};
pub use transform::{cps_term, cps_type, CpsError, CpsOutput};

use crate::source::signature::Signature;
use crate::source::term::SourceTerm;

/// Translate an elaborated program and normalize the result.
pub fn translate(sig: &Signature, term: &SourceTerm) -> Result<CpsOutput, CpsError> {
    let mut out = cps_term(sig, term)?;
    out.term = normalize(&out.term);
    Ok(out)
}
