//! Runtime values for the direct interpreters.

use std::fmt;

use crate::envlist::EnvList;
use crate::ground::GroundVal;
use crate::source::term::{InjSide, SourceTerm};

use super::OracleError;

/// A call-by-value runtime value. Fully ground data collapses into
/// [`GroundVal`]; pairs and injections stay structural only when a
/// function hides inside.
#[derive(Clone)]
pub enum RtVal<'t> {
    Ground(GroundVal),
    PairV(Box<RtVal<'t>>, Box<RtVal<'t>>),
    InjV(InjSide, Box<RtVal<'t>>),
    Closure { binder: &'t str, body: &'t SourceTerm, env: RtEnv<'t> },
    RecClosure { fname: &'t str, binder: &'t str, body: &'t SourceTerm, env: RtEnv<'t> },
}

pub type RtEnv<'t> = EnvList<RtVal<'t>>;

impl<'t> RtVal<'t> {
    pub fn unit() -> Self {
        RtVal::Ground(GroundVal::Unit)
    }

    pub fn pair(a: RtVal<'t>, b: RtVal<'t>) -> Self {
        match (a, b) {
            (RtVal::Ground(x), RtVal::Ground(y)) => RtVal::Ground(GroundVal::pair(x, y)),
            (a, b) => RtVal::PairV(Box::new(a), Box::new(b)),
        }
    }

    pub fn inj(side: InjSide, v: RtVal<'t>) -> Self {
        match v {
            RtVal::Ground(g) => RtVal::Ground(match side {
                InjSide::Inl => GroundVal::inl(g),
                InjSide::Inr => GroundVal::inr(g),
            }),
            v => RtVal::InjV(side, Box::new(v)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            RtVal::Ground(g) => format!("ground value {g}"),
            RtVal::PairV(_, _) => "pair".to_string(),
            RtVal::InjV(InjSide::Inl, _) => "left injection".to_string(),
            RtVal::InjV(InjSide::Inr, _) => "right injection".to_string(),
            RtVal::Closure { .. } => "function".to_string(),
            RtVal::RecClosure { fname, .. } => format!("recursive function {fname}"),
        }
    }

    pub fn as_pair(self) -> Result<(RtVal<'t>, RtVal<'t>), OracleError> {
        match self {
            RtVal::PairV(a, b) => Ok((*a, *b)),
            RtVal::Ground(GroundVal::Pair(a, b)) => Ok((RtVal::Ground(*a), RtVal::Ground(*b))),
            other => Err(OracleError::Stuck(format!("expected a pair, got {}", other.describe()))),
        }
    }

    /// The final result of a program run must be first-order data.
    pub fn into_ground(self) -> Result<GroundVal, OracleError> {
        match self {
            RtVal::Ground(g) => Ok(g),
            RtVal::PairV(a, b) => Ok(GroundVal::pair(a.into_ground()?, b.into_ground()?)),
            RtVal::InjV(side, v) => {
                let g = v.into_ground()?;
                Ok(match side {
                    InjSide::Inl => GroundVal::inl(g),
                    InjSide::Inr => GroundVal::inr(g),
                })
            }
            other => Err(OracleError::Stuck(format!(
                "program result is not ground data: {}",
                other.describe()
            ))),
        }
    }
}

impl fmt::Debug for RtVal<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RtVal::Ground(g) => write!(f, "{g}"),
            RtVal::PairV(a, b) => write!(f, "({a:?}, {b:?})"),
            RtVal::InjV(InjSide::Inl, v) => write!(f, "inl {v:?}"),
            RtVal::InjV(InjSide::Inr, v) => write!(f, "inr {v:?}"),
            RtVal::Closure { binder, .. } => write!(f, "<fun {binder}>"),
            RtVal::RecClosure { fname, .. } => write!(f, "<rec {fname}>"),
        }
    }
}
