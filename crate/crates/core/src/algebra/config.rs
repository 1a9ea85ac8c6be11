//! Evaluation policy: which answer algebra to use and the numeric knobs.

use thiserror::Error;

use super::dfa::Dfa;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgebraKind {
    /// Answers are state sets of a DFA; recursion descends in the
    /// inclusion order toward a greatest fixed point.
    Trace,
    /// Answers are extended nonnegative reals (expected cost).
    Cost,
    /// Answers are vectors of the first n moments of the cost.
    Moments,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("max_unfold must be at least 1")]
    BadMaxUnfold,
    #[error("quad_points must be at least 1")]
    BadQuadPoints,
    #[error("moment order must be at least 1")]
    BadMomentOrder,
    #[error("trace evaluation needs an automaton")]
    MissingDfa,
}

#[derive(Debug, Clone)]
pub struct AlgebraConfig {
    pub kind: AlgebraKind,
    /// Trace instance only.
    pub dfa: Option<Dfa>,
    /// Length of moment vectors; ignored outside the moments instance.
    pub moment_order: usize,
    /// Fixpoint iteration stops when successive approximants differ by
    /// less than this, pointwise on demanded arguments.
    pub epsilon: f64,
    /// Cap on fixpoint rounds per recursive predicate.
    pub max_unfold: u64,
    /// Midpoint-rule sample count for the uniform distribution.
    pub quad_points: u32,
    /// Enables quantification over `nat` by bounding the enumeration.
    pub nat_bound: Option<u64>,
    /// When set, hitting the iteration cap is an error instead of a
    /// truncated result.
    pub strict: bool,
}

impl AlgebraConfig {
    pub const DEFAULT_EPSILON: f64 = 1e-9;
    pub const DEFAULT_MAX_UNFOLD: u64 = 1_000_000;
    pub const DEFAULT_QUAD_POINTS: u32 = 1024;

    fn base(kind: AlgebraKind) -> AlgebraConfig {
        AlgebraConfig {
            kind,
            dfa: None,
            moment_order: 1,
            epsilon: Self::DEFAULT_EPSILON,
            max_unfold: Self::DEFAULT_MAX_UNFOLD,
            quad_points: Self::DEFAULT_QUAD_POINTS,
            nat_bound: None,
            strict: false,
        }
    }

    pub fn trace(dfa: Dfa) -> AlgebraConfig {
        AlgebraConfig { dfa: Some(dfa), ..Self::base(AlgebraKind::Trace) }
    }

    pub fn cost() -> AlgebraConfig {
        Self::base(AlgebraKind::Cost)
    }

    pub fn moments(order: usize) -> AlgebraConfig {
        AlgebraConfig { moment_order: order, ..Self::base(AlgebraKind::Moments) }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.epsilon <= 0.0 || self.epsilon.is_nan() {
            return Err(ConfigError::BadEpsilon(self.epsilon));
        }
        if self.max_unfold < 1 {
            return Err(ConfigError::BadMaxUnfold);
        }
        if self.quad_points < 1 {
            return Err(ConfigError::BadQuadPoints);
        }
        if self.kind == AlgebraKind::Moments && self.moment_order < 1 {
            return Err(ConfigError::BadMomentOrder);
        }
        if self.kind == AlgebraKind::Trace && self.dfa.is_none() {
            return Err(ConfigError::MissingDfa);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        AlgebraConfig::cost().validate().unwrap();
        AlgebraConfig::moments(2).validate().unwrap();
    }

    #[test]
    fn bad_policies_are_rejected() {
        let mut c = AlgebraConfig::cost();
        c.epsilon = 0.0;
        assert!(matches!(c.validate(), Err(ConfigError::BadEpsilon(_))));
        let mut c = AlgebraConfig::moments(0);
        c.moment_order = 0;
        assert!(matches!(c.validate(), Err(ConfigError::BadMomentOrder)));
        let mut c = AlgebraConfig::cost();
        c.kind = AlgebraKind::Trace;
        assert!(matches!(c.validate(), Err(ConfigError::MissingDfa)));
    }
}
