//! Ground values shared by the formula evaluator and the direct semantics.
//!
//! Both sides must agree exactly on what constants denote, so the
//! denotations live here and nowhere else.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::target::types::TargetType;

/// A closed value of ground type: no functions inside.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GroundVal {
    Unit,
    Pair(Box<GroundVal>, Box<GroundVal>),
    Inl(Box<GroundVal>),
    Inr(Box<GroundVal>),
    Nat(u64),
    Real(RealLit),
}

impl GroundVal {
    pub fn pair(a: GroundVal, b: GroundVal) -> GroundVal {
        GroundVal::Pair(Box::new(a), Box::new(b))
    }

    pub fn inl(v: GroundVal) -> GroundVal {
        GroundVal::Inl(Box::new(v))
    }

    pub fn inr(v: GroundVal) -> GroundVal {
        GroundVal::Inr(Box::new(v))
    }

    pub fn real(x: f64) -> GroundVal {
        GroundVal::Real(RealLit(x))
    }
}

impl fmt::Display for GroundVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundVal::Unit => write!(f, "()"),
            GroundVal::Pair(a, b) => write!(f, "({a}, {b})"),
            GroundVal::Inl(v) => write!(f, "inl {v}"),
            GroundVal::Inr(v) => write!(f, "inr {v}"),
            GroundVal::Nat(n) => write!(f, "{n}"),
            GroundVal::Real(r) => write!(f, "{}", r.0),
        }
    }
}

/// A real literal compared and hashed by its bit pattern, so ground values
/// can serve as map keys.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealLit(pub f64);

impl PartialEq for RealLit {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for RealLit {}

impl PartialOrd for RealLit {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RealLit {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::hash::Hash for RealLit {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

/// Denote an effect-free constant on a ground argument.
///
/// Booleans are sums of units with `inl ()` as truth, so `iszero` sends 0
/// to `inl ()`.
pub fn denote_const(name: &str, arg: &GroundVal) -> Result<GroundVal, String> {
    match (name, arg) {
        ("zero", GroundVal::Unit) => Ok(GroundVal::Nat(0)),
        ("succ", GroundVal::Nat(n)) => n
            .checked_add(1)
            .map(GroundVal::Nat)
            .ok_or_else(|| "natural-number overflow in succ".to_string()),
        ("plus", GroundVal::Pair(a, b)) => match (&**a, &**b) {
            (GroundVal::Nat(x), GroundVal::Nat(y)) => x
                .checked_add(*y)
                .map(GroundVal::Nat)
                .ok_or_else(|| "natural-number overflow in plus".to_string()),
            _ => Err(format!("plus expects a pair of naturals, got {arg}")),
        },
        ("iszero", GroundVal::Nat(0)) => Ok(GroundVal::inl(GroundVal::Unit)),
        ("iszero", GroundVal::Nat(_)) => Ok(GroundVal::inr(GroundVal::Unit)),
        ("zero" | "succ" | "plus" | "iszero", _) => {
            Err(format!("constant `{name}` applied to ill-shaped value {arg}"))
        }
        _ => Err(format!("constant `{name}` has no denotation")),
    }
}

/// Enumerate all values of an enumerable ground type, in a fixed order.
/// `nat` enumerates only when a bound is configured; `real` never does.
pub fn enumerate_ground(
    ty: &TargetType,
    nat_bound: Option<u64>,
) -> Result<Vec<GroundVal>, String> {
    match ty {
        TargetType::Unit => Ok(vec![GroundVal::Unit]),
        TargetType::Empty => Ok(Vec::new()),
        TargetType::Sum(a, b) => {
            let mut out: Vec<GroundVal> =
                enumerate_ground(a, nat_bound)?.into_iter().map(GroundVal::inl).collect();
            out.extend(enumerate_ground(b, nat_bound)?.into_iter().map(GroundVal::inr));
            Ok(out)
        }
        TargetType::Prod(a, b) => {
            let left = enumerate_ground(a, nat_bound)?;
            let right = enumerate_ground(b, nat_bound)?;
            let mut out = Vec::with_capacity(left.len() * right.len());
            for l in &left {
                for r in &right {
                    out.push(GroundVal::pair(l.clone(), r.clone()));
                }
            }
            Ok(out)
        }
        TargetType::Base(name) if name == "nat" => match nat_bound {
            Some(b) => Ok((0..=b).map(GroundVal::Nat).collect()),
            None => Err("enumerating `nat` requires a configured bound".to_string()),
        },
        TargetType::Base(name) => Err(format!("base type `{name}` is not enumerable")),
        TargetType::Answer | TargetType::PredArrow(_) => {
            Err(format!("type `{ty}` is not a ground type"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::types::TargetType;

    #[test]
    fn constants_compute_arithmetic() {
        assert_eq!(denote_const("zero", &GroundVal::Unit).unwrap(), GroundVal::Nat(0));
        assert_eq!(denote_const("succ", &GroundVal::Nat(4)).unwrap(), GroundVal::Nat(5));
        assert_eq!(
            denote_const("plus", &GroundVal::pair(GroundVal::Nat(2), GroundVal::Nat(3))).unwrap(),
            GroundVal::Nat(5)
        );
    }

    #[test]
    fn iszero_encodes_truth_as_inl() {
        assert_eq!(
            denote_const("iszero", &GroundVal::Nat(0)).unwrap(),
            GroundVal::inl(GroundVal::Unit)
        );
        assert_eq!(
            denote_const("iszero", &GroundVal::Nat(7)).unwrap(),
            GroundVal::inr(GroundVal::Unit)
        );
    }

    #[test]
    fn ill_shaped_and_unknown_constants_error() {
        assert!(denote_const("succ", &GroundVal::Unit).is_err());
        assert!(denote_const("mystery", &GroundVal::Unit).is_err());
    }

    #[test]
    fn enumeration_counts_match_type_cardinality() {
        let bool_ty = TargetType::sum(TargetType::Unit, TargetType::Unit);
        assert_eq!(enumerate_ground(&bool_ty, None).unwrap().len(), 2);
        let sq = TargetType::prod(bool_ty.clone(), bool_ty.clone());
        assert_eq!(enumerate_ground(&sq, None).unwrap().len(), 4);
        assert_eq!(enumerate_ground(&TargetType::Empty, None).unwrap().len(), 0);
        assert_eq!(
            enumerate_ground(&TargetType::base("nat"), Some(3)).unwrap().len(),
            4
        );
        assert!(enumerate_ground(&TargetType::base("nat"), None).is_err());
        assert!(enumerate_ground(&TargetType::base("real"), Some(1)).is_err());
    }
}
