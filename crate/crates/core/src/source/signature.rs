//! Effect signatures: base types, constants, and operation families.
//!
//! A constant `c` has a ground arity `ar(c)` and coarity `car(c)`; applying
//! it is `c M`. An operation `o` has ground `ar(o)`, `car(o)` and is applied
//! as `o M` where `M : (ar(o) -> rho) * car(o)` pairs a continuation with the
//! operation argument. Operations whose arity is a finite sum of units may be
//! declared n-ary, enabling the call syntax `o(M1, ..., Mn)`.
//!
//! The analysis' central correctness statement requires every constant's
//! coarity to be product-ground (no sums, no empty, no arrows). `validate`
//! reports violations; callers may proceed past a failing report only when
//! the user explicitly waives the guarantee.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::parse::parse_type;
use super::term::{OpIndex, OpRef};
use super::types::SourceType;

/// How an operation family is indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    /// Symbolic index drawn from an event alphabet, e.g. `event[a]`.
    Symbol,
    /// Probability index in `[0, 1]`, e.g. `flip[0.25]`.
    Prob,
}

/// Declaration of one constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstDecl {
    pub ar: SourceType,
    pub car: SourceType,
}

/// Declaration of one operation family.
#[derive(Debug, Clone, PartialEq)]
pub struct OpDecl {
    pub ar: SourceType,
    pub car: SourceType,
    /// Present iff the family supports the n-ary call sugar; the arity must
    /// then be the n-fold sum of units and the coarity `unit`.
    pub nary: Option<u32>,
    pub index: Option<IndexKind>,
}

/// A full effect signature.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Signature {
    pub base_types: Vec<String>,
    pub constants: BTreeMap<String, ConstDecl>,
    pub operations: BTreeMap<String, OpDecl>,
}

#[derive(Debug, Error)]
pub enum SignatureError {
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("operation `{0}` expects a {1} index")]
    MissingIndex(String, &'static str),
    #[error("operation `{0}` takes no index")]
    UnexpectedIndex(String),
    #[error("operation `{0}` index has the wrong kind")]
    IndexKindMismatch(String),
    #[error("operation `{name}` probability index {value} is outside [0, 1]")]
    IndexOutOfRange { name: String, value: f64 },
    #[error("{kind} `{name}` has non-ground {role} `{ty}`")]
    NonGroundType { kind: &'static str, name: String, role: &'static str, ty: String },
    #[error("{kind} `{name}` mentions undeclared base type `{base}`")]
    UnknownBase { kind: &'static str, name: String, base: String },
    #[error("operation `{name}` declared {n}-ary but its arity is `{ar}`, coarity `{car}`")]
    BadNaryShape { name: String, n: u32, ar: String, car: String },
    #[error("malformed type `{ty}` in signature: {msg}")]
    BadType { ty: String, msg: String },
    #[error("malformed signature JSON: {0}")]
    Json(String),
}

/// One constant whose coarity breaks the product-ground discipline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffendingConstant {
    pub name: String,
    pub coarity: String,
}

/// Outcome of the constant-coarity validation gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub offending: Vec<OffendingConstant>,
}

impl Signature {
    /// Resolve an operation reference against the declared families,
    /// checking index presence, kind, and probability range.
    pub fn lookup(&self, op: &OpRef) -> Result<&OpDecl, SignatureError> {
        let decl = self
            .operations
            .get(&op.name)
            .ok_or_else(|| SignatureError::UnknownOperation(op.to_string()))?;
        match (decl.index, &op.index) {
            (None, None) => Ok(decl),
            (None, Some(_)) => Err(SignatureError::UnexpectedIndex(op.name.clone())),
            (Some(IndexKind::Symbol), Some(OpIndex::Sym(_))) => Ok(decl),
            (Some(IndexKind::Prob), Some(OpIndex::Num(p))) => {
                if (0.0..=1.0).contains(p) {
                    Ok(decl)
                } else {
                    Err(SignatureError::IndexOutOfRange { name: op.name.clone(), value: *p })
                }
            }
            (Some(IndexKind::Symbol), None) => Err(SignatureError::MissingIndex(op.name.clone(), "symbol")),
            (Some(IndexKind::Prob), None) => Err(SignatureError::MissingIndex(op.name.clone(), "probability")),
            (Some(_), Some(_)) => Err(SignatureError::IndexKindMismatch(op.name.clone())),
        }
    }

    pub fn lookup_const(&self, name: &str) -> Result<&ConstDecl, SignatureError> {
        self.constants
            .get(name)
            .ok_or_else(|| SignatureError::UnknownConstant(name.to_string()))
    }

    pub fn is_operation(&self, name: &str) -> bool {
        self.operations.contains_key(name)
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.contains_key(name)
    }

    /// Structural well-formedness, enforced on every constructed signature:
    /// all arities and coarities ground, base types declared, n-ary shapes
    /// consistent.
    pub fn check_wellformed(&self) -> Result<(), SignatureError> {
        let check = |kind: &'static str, name: &str, role: &'static str, ty: &SourceType| {
            if !ty.is_ground() {
                return Err(SignatureError::NonGroundType {
                    kind,
                    name: name.to_string(),
                    role,
                    ty: ty.to_string(),
                });
            }
            if let Some(base) = first_unknown_base(ty, &self.base_types) {
                return Err(SignatureError::UnknownBase { kind, name: name.to_string(), base });
            }
            Ok(())
        };
        for (name, decl) in &self.constants {
            check("constant", name, "arity", &decl.ar)?;
            check("constant", name, "coarity", &decl.car)?;
        }
        for (name, decl) in &self.operations {
            check("operation", name, "arity", &decl.ar)?;
            check("operation", name, "coarity", &decl.car)?;
            if let Some(n) = decl.nary {
                if decl.ar != SourceType::finite(n as usize) || decl.car != SourceType::Unit {
                    return Err(SignatureError::BadNaryShape {
                        name: name.clone(),
                        n,
                        ar: decl.ar.to_string(),
                        car: decl.car.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The coarity gate: passes iff every constant's coarity is
    /// product-ground.
    pub fn validate(&self) -> ValidationReport {
        let offending: Vec<OffendingConstant> = self
            .constants
            .iter()
            .filter(|(_, d)| !d.car.is_product_ground())
            .map(|(name, d)| OffendingConstant { name: name.clone(), coarity: d.car.to_string() })
            .collect();
        ValidationReport { passed: offending.is_empty(), offending }
    }

    /// Built-in signature for the trace instance: `event[a] : unit -> unit`
    /// for each alphabet symbol, and binary `choice`.
    pub fn builtin_trace() -> Signature {
        let mut operations = BTreeMap::new();
        operations.insert(
            "event".to_string(),
            OpDecl {
                ar: SourceType::Unit,
                car: SourceType::Unit,
                nary: Some(1),
                index: Some(IndexKind::Symbol),
            },
        );
        operations.insert(
            "choice".to_string(),
            OpDecl {
                ar: SourceType::finite(2),
                car: SourceType::Unit,
                nary: Some(2),
                index: None,
            },
        );
        let sig = Signature { base_types: Vec::new(), constants: BTreeMap::new(), operations };
        debug_assert!(sig.check_wellformed().is_ok());
        sig
    }

    /// Built-in signature for the cost instance: probabilistic `flip[p]`,
    /// unit-cost `tick`, uniform sampling `unif : real -> unit`, and a few
    /// arithmetic constants over `nat`.
    pub fn builtin_cost() -> Signature {
        let nat = SourceType::base("nat");
        let mut constants = BTreeMap::new();
        constants.insert("zero".to_string(), ConstDecl { ar: SourceType::Unit, car: nat.clone() });
        constants.insert("succ".to_string(), ConstDecl { ar: nat.clone(), car: nat.clone() });
        constants.insert(
            "plus".to_string(),
            ConstDecl { ar: SourceType::prod(nat.clone(), nat.clone()), car: nat.clone() },
        );
        let mut operations = BTreeMap::new();
        operations.insert(
            "flip".to_string(),
            OpDecl {
                ar: SourceType::finite(2),
                car: SourceType::Unit,
                nary: Some(2),
                index: Some(IndexKind::Prob),
            },
        );
        operations.insert(
            "tick".to_string(),
            OpDecl { ar: SourceType::Unit, car: SourceType::Unit, nary: Some(1), index: None },
        );
        operations.insert(
            "unif".to_string(),
            OpDecl { ar: SourceType::base("real"), car: SourceType::Unit, nary: None, index: None },
        );
        let sig = Signature {
            base_types: vec!["nat".to_string(), "real".to_string()],
            constants,
            operations,
        };
        debug_assert!(sig.check_wellformed().is_ok());
        sig
    }

    /// Parse from the JSON interchange format; the result is well-formed.
    pub fn from_json(text: &str) -> Result<Signature, SignatureError> {
        let raw: SignatureFile =
            serde_json::from_str(text).map_err(|e| SignatureError::Json(e.to_string()))?;
        let parse = |ty: &str| {
            parse_type(ty).map_err(|e| SignatureError::BadType { ty: ty.to_string(), msg: e.to_string() })
        };
        let mut constants = BTreeMap::new();
        for (name, c) in raw.constants {
            constants.insert(name, ConstDecl { ar: parse(&c.ar)?, car: parse(&c.car)? });
        }
        let mut operations = BTreeMap::new();
        for (name, o) in raw.operations {
            operations.insert(
                name,
                OpDecl { ar: parse(&o.ar)?, car: parse(&o.car)?, nary: o.nary, index: o.index },
            );
        }
        let sig = Signature { base_types: raw.base_types, constants, operations };
        sig.check_wellformed()?;
        Ok(sig)
    }

    pub fn to_json(&self) -> String {
        let raw = SignatureFile {
            base_types: self.base_types.clone(),
            constants: self
                .constants
                .iter()
                .map(|(n, c)| {
                    (n.clone(), ConstFile { ar: c.ar.to_string(), car: c.car.to_string() })
                })
                .collect(),
            operations: self
                .operations
                .iter()
                .map(|(n, o)| {
                    (
                        n.clone(),
                        OpFile {
                            ar: o.ar.to_string(),
                            car: o.car.to_string(),
                            nary: o.nary,
                            index: o.index,
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("signature serialization cannot fail")
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

fn first_unknown_base(ty: &SourceType, declared: &[String]) -> Option<String> {
    match ty {
        SourceType::Base(b) => {
            if declared.iter().any(|d| d == b) {
                None
            } else {
                Some(b.clone())
            }
        }
        SourceType::Unit | SourceType::Empty => None,
        SourceType::Prod(l, r) | SourceType::Sum(l, r) | SourceType::Arrow(l, r) => {
            first_unknown_base(l, declared).or_else(|| first_unknown_base(r, declared))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SignatureFile {
    #[serde(default)]
    base_types: Vec<String>,
    #[serde(default)]
    constants: BTreeMap<String, ConstFile>,
    #[serde(default)]
    operations: BTreeMap<String, OpFile>,
}

#[derive(Serialize, Deserialize)]
struct ConstFile {
    ar: String,
    car: String,
}

#[derive(Serialize, Deserialize)]
struct OpFile {
    ar: String,
    car: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nary: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<IndexKind>,
}
