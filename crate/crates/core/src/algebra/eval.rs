//! Formula evaluation under an answer algebra.
//!
//! Evaluation is compositional: lambda-calculus nodes get their standard
//! meaning over a domain of ground data and predicates, while answer-typed
//! nodes (connectives, arithmetic, modalities) dispatch on the configured
//! algebra. Recursive predicates are solved by Kleene iteration from the
//! algebra's bottom, demand-driven: only arguments the evaluation actually
//! asks about are tabulated, and rounds repeat until the table is stable.
//!
//! For the trace algebra bottom is the full state set and iterates shrink,
//! so a stabilized table is the greatest fixed point in the inclusion
//! order; for cost and moments bottom is zero and iterates grow toward the
//! least fixed point, so an unstabilized table is still a sound lower
//! bound. The result status records which situation the caller is in.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use super::config::{AlgebraConfig, AlgebraKind};
use super::moments::{
    elapse, inf_vec, powers, vec_add, vec_delta, vec_max, vec_min, vec_scale, zero_vec,
};
use super::weight::Weight;
use crate::envlist::EnvList;
use crate::ground::{enumerate_ground, denote_const, GroundVal};
use crate::source::term::{InjSide, OpIndex, OpRef, ProjSide};
use crate::target::term::{Pattern, TargetTerm};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("{node} is not supported by the {kind} algebra")]
    Unsupported { node: String, kind: &'static str },
    #[error("symbol `{0}` is not in the automaton's alphabet")]
    UnknownSymbol(String),
    #[error("expected {expected}, got {found}")]
    Shape { expected: &'static str, found: String },
    #[error("cannot enumerate quantifier domain: {0}")]
    NonEnumerable(String),
    #[error("a value of empty type was produced")]
    EmptyAbsurd,
    #[error("constant error: {0}")]
    Constant(String),
    #[error("weight out of range: {0}")]
    BadWeight(String),
    #[error("fixpoint iteration cap exhausted after {rounds} rounds over {args} arguments")]
    CapExhausted { rounds: u64, args: usize },
    #[error("trace evaluation needs an automaton")]
    MissingDfa,
    #[error("invalid configuration: {0}")]
    Config(#[from] super::config::ConfigError),
}

/// How trustworthy a result is. `Exact` means every fixpoint stabilized
/// with strict equality; `Converged` means some stopped on an epsilon
/// criterion; `Truncated` means an iteration cap was hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Exact,
    Converged,
    Truncated,
}

impl Status {
    fn merge(&mut self, other: Status) {
        *self = (*self).max(other);
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Exact => write!(f, "exact"),
            Status::Converged => write!(f, "converged"),
            Status::Truncated => write!(f, "truncated"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalResult<'t> {
    pub value: AnswerValue<'t>,
    pub status: Status,
    /// Total fixpoint rounds run, summed over all recursive predicates.
    pub iterations: u64,
    /// Guaranteed gap to the true value when derivable (0 for exact
    /// results); absent otherwise.
    pub error_bound: Option<f64>,
}

/// A semantic value. Lifetime `'t` ties predicates to the formula they
/// were built from; values must not outlive the evaluated term.
#[derive(Clone)]
pub enum AnswerValue<'t> {
    StateSet(BTreeSet<String>),
    Weight(Weight),
    WeightVector(Vec<Weight>),
    Ground(GroundVal),
    /// A pair with at least one non-ground component.
    PairVal(Rc<AnswerValue<'t>>, Rc<AnswerValue<'t>>),
    Pred(PredFn<'t>),
}

impl<'t> AnswerValue<'t> {
    pub fn pair(a: AnswerValue<'t>, b: AnswerValue<'t>) -> AnswerValue<'t> {
        match (a, b) {
            (AnswerValue::Ground(x), AnswerValue::Ground(y)) => {
                AnswerValue::Ground(GroundVal::pair(x, y))
            }
            (a, b) => AnswerValue::PairVal(Rc::new(a), Rc::new(b)),
        }
    }

    fn describe(&self) -> String {
        match self {
            AnswerValue::StateSet(s) => format!("state set of size {}", s.len()),
            AnswerValue::Weight(w) => format!("weight {w}"),
            AnswerValue::WeightVector(v) => format!("moment vector of length {}", v.len()),
            AnswerValue::Ground(g) => format!("ground value {g}"),
            AnswerValue::PairVal(_, _) => "pair".to_string(),
            AnswerValue::Pred(_) => "predicate".to_string(),
        }
    }
}

impl fmt::Debug for AnswerValue<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerValue::StateSet(s) => write!(f, "StateSet({s:?})"),
            AnswerValue::Weight(w) => write!(f, "Weight({w})"),
            AnswerValue::WeightVector(v) => {
                write!(f, "WeightVector(")?;
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            AnswerValue::Ground(g) => write!(f, "Ground({g})"),
            AnswerValue::PairVal(a, b) => write!(f, "Pair({a:?}, {b:?})"),
            AnswerValue::Pred(_) => write!(f, "Pred(<fn>)"),
        }
    }
}

/// A semantic predicate: either a closure over formula text or a
/// recursive predicate being solved by iteration.
#[derive(Clone)]
pub struct PredFn<'t>(Rc<PredImpl<'t>>);

enum PredImpl<'t> {
    Closure { pat: &'t Pattern, body: &'t TargetTerm, env: Env<'t> },
    Fix(Rc<Fix<'t>>),
}

type Env<'t> = EnvList<AnswerValue<'t>>;

struct Fix<'t> {
    fname: &'t str,
    pat: &'t Pattern,
    body: &'t TargetTerm,
    env: Env<'t>,
    state: RefCell<FixState<'t>>,
}

struct FixState<'t> {
    entries: HashMap<ArgKey, Entry<'t>>,
    /// Demand order, so iteration rounds are deterministic.
    order: Vec<ArgKey>,
    iterating: bool,
}

struct Entry<'t> {
    arg: AnswerValue<'t>,
    approx: AnswerValue<'t>,
}

/// Identity of a predicate argument for memoization. Ground data is
/// compared structurally. A recursive predicate is identified by its
/// solver, and a closure by its source node plus the identities of its
/// captured variables, so re-evaluating the same lambda in the same
/// environment hits the same table row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum ArgKey {
    Unit,
    Nat(u64),
    Real(u64),
    Pair(Box<ArgKey>, Box<ArgKey>),
    Inl(Box<ArgKey>),
    Inr(Box<ArgKey>),
    FixPred(usize),
    ClosurePred { node: usize, captures: Vec<ArgKey> },
}

fn ground_key(g: &GroundVal) -> ArgKey {
    match g {
        GroundVal::Unit => ArgKey::Unit,
        GroundVal::Nat(n) => ArgKey::Nat(*n),
        GroundVal::Real(r) => ArgKey::Real(r.0.to_bits()),
        GroundVal::Pair(a, b) => ArgKey::Pair(Box::new(ground_key(a)), Box::new(ground_key(b))),
        GroundVal::Inl(v) => ArgKey::Inl(Box::new(ground_key(v))),
        GroundVal::Inr(v) => ArgKey::Inr(Box::new(ground_key(v))),
    }
}

fn arg_key(v: &AnswerValue<'_>) -> Result<ArgKey, EvalError> {
    match v {
        AnswerValue::Ground(g) => Ok(ground_key(g)),
        AnswerValue::PairVal(a, b) => {
            Ok(ArgKey::Pair(Box::new(arg_key(a)?), Box::new(arg_key(b)?)))
        }
        AnswerValue::Pred(p) => pred_key(p),
        other => Err(EvalError::Shape {
            expected: "ground value or predicate as recursion argument",
            found: other.describe(),
        }),
    }
}

fn pred_key(p: &PredFn<'_>) -> Result<ArgKey, EvalError> {
    match &*p.0 {
        PredImpl::Fix(fix) => Ok(ArgKey::FixPred(Rc::as_ptr(fix) as usize)),
        PredImpl::Closure { pat, body, env } => {
            let mut free = body.free_vars();
            for name in pat.names() {
                free.remove(name);
            }
            let mut captures = Vec::with_capacity(free.len());
            for name in free {
                let value = env
                    .lookup(&name)
                    .ok_or_else(|| EvalError::Unbound(name.clone()))?;
                captures.push(arg_key(value)?);
            }
            Ok(ArgKey::ClosurePred { node: *body as *const TargetTerm as usize, captures })
        }
    }
}

pub fn kind_name(kind: AlgebraKind) -> &'static str {
    match kind {
        AlgebraKind::Trace => "trace",
        AlgebraKind::Cost => "cost",
        AlgebraKind::Moments => "moments",
    }
}

struct Evaluator<'c> {
    config: &'c AlgebraConfig,
    iterations: u64,
    status: Status,
}

impl<'c> Evaluator<'c> {
    fn unsupported(&self, node: &str) -> EvalError {
        EvalError::Unsupported { node: node.to_string(), kind: kind_name(self.config.kind) }
    }

    fn dfa(&self) -> Result<&super::dfa::Dfa, EvalError> {
        self.config.dfa.as_ref().ok_or(EvalError::MissingDfa)
    }

    fn as_set(&self, v: AnswerValue<'_>) -> Result<BTreeSet<String>, EvalError> {
        match v {
            AnswerValue::StateSet(s) => Ok(s),
            other => Err(EvalError::Shape { expected: "a state set", found: other.describe() }),
        }
    }

    /// Weights, with ground numerics admitted where a weight is expected.
    fn as_weight(&self, v: AnswerValue<'_>) -> Result<Weight, EvalError> {
        match v {
            AnswerValue::Weight(w) => Ok(w),
            AnswerValue::Ground(GroundVal::Nat(n)) => Ok(Weight::new(n as f64)),
            AnswerValue::Ground(GroundVal::Real(r)) => Weight::checked(r.0)
                .ok_or_else(|| EvalError::BadWeight(format!("negative real {}", r.0))),
            other => Err(EvalError::Shape { expected: "a weight", found: other.describe() }),
        }
    }

    /// Moment vectors; a ground numeric is the deterministic cost with
    /// moment vector (w, w^2, ...).
    fn as_vector(&self, v: AnswerValue<'_>) -> Result<Vec<Weight>, EvalError> {
        let n = self.config.moment_order;
        match v {
            AnswerValue::WeightVector(v) => {
                if v.len() == n {
                    Ok(v)
                } else {
                    Err(EvalError::Shape {
                        expected: "a moment vector of the configured order",
                        found: format!("moment vector of length {}", v.len()),
                    })
                }
            }
            AnswerValue::Weight(w) => Ok(powers(w, n)),
            AnswerValue::Ground(GroundVal::Nat(k)) => Ok(powers(Weight::new(k as f64), n)),
            AnswerValue::Ground(GroundVal::Real(r)) => {
                let w = Weight::checked(r.0)
                    .ok_or_else(|| EvalError::BadWeight(format!("negative real {}", r.0)))?;
                Ok(powers(w, n))
            }
            other => Err(EvalError::Shape { expected: "a moment vector", found: other.describe() }),
        }
    }

    fn as_pred<'t>(&self, v: AnswerValue<'t>) -> Result<PredFn<'t>, EvalError> {
        match v {
            AnswerValue::Pred(p) => Ok(p),
            other => Err(EvalError::Shape { expected: "a predicate", found: other.describe() }),
        }
    }

    fn lit_weight(&self, w: f64) -> Result<Weight, EvalError> {
        Weight::checked(w).ok_or_else(|| EvalError::BadWeight(format!("literal {w}")))
    }

    fn eval<'t>(&mut self, env: &Env<'t>, term: &'t TargetTerm) -> Result<AnswerValue<'t>, EvalError> {
        match term {
            TargetTerm::Var(x) => {
                env.lookup(x).cloned().ok_or_else(|| EvalError::Unbound(x.clone()))
            }
            TargetTerm::Unit => Ok(AnswerValue::Ground(GroundVal::Unit)),
            TargetTerm::Pair(a, b) => {
                Ok(AnswerValue::pair(self.eval(env, a)?, self.eval(env, b)?))
            }
            TargetTerm::Proj(side, m) => match self.eval(env, m)? {
                AnswerValue::Ground(GroundVal::Pair(a, b)) => Ok(AnswerValue::Ground(match side {
                    ProjSide::Fst => *a,
                    ProjSide::Snd => *b,
                })),
                AnswerValue::PairVal(a, b) => Ok(match side {
                    ProjSide::Fst => (*a).clone(),
                    ProjSide::Snd => (*b).clone(),
                }),
                other => Err(EvalError::Shape { expected: "a pair", found: other.describe() }),
            },
            TargetTerm::Inj(side, _, m) => match self.eval(env, m)? {
                AnswerValue::Ground(g) => Ok(AnswerValue::Ground(match side {
                    InjSide::Inl => GroundVal::inl(g),
                    InjSide::Inr => GroundVal::inr(g),
                })),
                other => Err(EvalError::Shape {
                    expected: "a ground value under an injection",
                    found: other.describe(),
                }),
            },
            TargetTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
                match self.eval(env, scrutinee)? {
                    AnswerValue::Ground(GroundVal::Inl(v)) => {
                        let env = env.extend(left_binder.clone(), AnswerValue::Ground(*v));
                        self.eval(&env, left)
                    }
                    AnswerValue::Ground(GroundVal::Inr(v)) => {
                        let env = env.extend(right_binder.clone(), AnswerValue::Ground(*v));
                        self.eval(&env, right)
                    }
                    other => {
                        Err(EvalError::Shape { expected: "an injection", found: other.describe() })
                    }
                }
            }
            TargetTerm::Absurd(m) => {
                self.eval(env, m)?;
                Err(EvalError::EmptyAbsurd)
            }
            TargetTerm::Const(c, m) => match self.eval(env, m)? {
                AnswerValue::Ground(g) => denote_const(c, &g)
                    .map(AnswerValue::Ground)
                    .map_err(EvalError::Constant),
                other => Err(EvalError::Shape {
                    expected: "a ground constant argument",
                    found: other.describe(),
                }),
            },
            TargetTerm::Lam(pat, _, body) => {
                Ok(AnswerValue::Pred(PredFn(Rc::new(PredImpl::Closure {
                    pat,
                    body,
                    env: env.clone(),
                }))))
            }
            TargetTerm::App(f, a) => {
                let fv = self.eval(env, f)?;
                let av = self.eval(env, a)?;
                let pred = self.as_pred(fv)?;
                self.apply(&pred, av)
            }
            TargetTerm::LetRecPred { fname, pat, dom: _, body, rest } => {
                let fix = Rc::new(Fix {
                    fname: fname.as_str(),
                    pat,
                    body,
                    env: env.clone(),
                    state: RefCell::new(FixState {
                        entries: HashMap::new(),
                        order: Vec::new(),
                        iterating: false,
                    }),
                });
                let env = env.extend(fname.to_string(), AnswerValue::Pred(PredFn(Rc::new(PredImpl::Fix(fix)))));
                self.eval(&env, rest)
            }
            TargetTerm::Modal(op, arg) => {
                let argv = self.eval(env, arg)?;
                let (k, _param) = match argv {
                    AnswerValue::PairVal(a, b) => ((*a).clone(), (*b).clone()),
                    other => {
                        return Err(EvalError::Shape {
                            expected: "a continuation pair under a modality",
                            found: other.describe(),
                        })
                    }
                };
                let k = self.as_pred(k)?;
                self.modal(op, &k)
            }
            TargetTerm::True => match self.config.kind {
                AlgebraKind::Trace => Ok(AnswerValue::StateSet(self.dfa()?.states().clone())),
                _ => Err(self.unsupported("`true`")),
            },
            TargetTerm::False => match self.config.kind {
                AlgebraKind::Trace => Ok(AnswerValue::StateSet(BTreeSet::new())),
                _ => Err(self.unsupported("`false`")),
            },
            TargetTerm::And(a, b) => match self.config.kind {
                AlgebraKind::Trace => {
                    let x = self.eval(env, a)?;
                    let y = self.eval(env, b)?;
                    let (x, y) = (self.as_set(x)?, self.as_set(y)?);
                    Ok(AnswerValue::StateSet(x.intersection(&y).cloned().collect()))
                }
                _ => Err(self.unsupported("conjunction")),
            },
            TargetTerm::Or(a, b) => match self.config.kind {
                AlgebraKind::Trace => {
                    let x = self.eval(env, a)?;
                    let y = self.eval(env, b)?;
                    let (x, y) = (self.as_set(x)?, self.as_set(y)?);
                    Ok(AnswerValue::StateSet(x.union(&y).cloned().collect()))
                }
                _ => Err(self.unsupported("disjunction")),
            },
            TargetTerm::Implies(_, _) => Err(self.unsupported("implication")),
            TargetTerm::WeightLit(w) => {
                let w = self.lit_weight(*w)?;
                match self.config.kind {
                    AlgebraKind::Cost => Ok(AnswerValue::Weight(w)),
                    AlgebraKind::Moments => {
                        Ok(AnswerValue::WeightVector(powers(w, self.config.moment_order)))
                    }
                    AlgebraKind::Trace => Err(self.unsupported("a weight literal")),
                }
            }
            TargetTerm::Add(a, b) => match self.config.kind {
                AlgebraKind::Cost => {
                    let x = self.eval(env, a)?;
                    let y = self.eval(env, b)?;
                    Ok(AnswerValue::Weight(self.as_weight(x)? + self.as_weight(y)?))
                }
                AlgebraKind::Moments => {
                    // A literal summand is a deterministic delay of the
                    // other side, which acts on moments by elapse; a sum of
                    // two mixture terms is componentwise by linearity.
                    if let TargetTerm::WeightLit(w) = &**a {
                        let w = self.lit_weight(*w)?;
                        let v = self.eval(env, b)?;
                        Ok(AnswerValue::WeightVector(elapse(&self.as_vector(v)?, w)))
                    } else if let TargetTerm::WeightLit(w) = &**b {
                        let w = self.lit_weight(*w)?;
                        let v = self.eval(env, a)?;
                        Ok(AnswerValue::WeightVector(elapse(&self.as_vector(v)?, w)))
                    } else {
                        let x = self.eval(env, a)?;
                        let y = self.eval(env, b)?;
                        Ok(AnswerValue::WeightVector(vec_add(
                            &self.as_vector(x)?,
                            &self.as_vector(y)?,
                        )))
                    }
                }
                AlgebraKind::Trace => Err(self.unsupported("addition")),
            },
            TargetTerm::Mul(a, b) => match self.config.kind {
                AlgebraKind::Cost => {
                    let x = self.eval(env, a)?;
                    let y = self.eval(env, b)?;
                    Ok(AnswerValue::Weight(self.as_weight(x)? * self.as_weight(y)?))
                }
                AlgebraKind::Moments => {
                    // Products scale moments by a probability; the scalar
                    // side must be syntactically evident.
                    if let TargetTerm::WeightLit(w) = &**a {
                        let w = self.lit_weight(*w)?;
                        let v = self.eval(env, b)?;
                        Ok(AnswerValue::WeightVector(vec_scale(&self.as_vector(v)?, w)))
                    } else if let TargetTerm::WeightLit(w) = &**b {
                        let w = self.lit_weight(*w)?;
                        let v = self.eval(env, a)?;
                        Ok(AnswerValue::WeightVector(vec_scale(&self.as_vector(v)?, w)))
                    } else {
                        Err(self.unsupported("a product without a literal factor"))
                    }
                }
                AlgebraKind::Trace => Err(self.unsupported("multiplication")),
            },
            TargetTerm::Forall(x, ty, body) => self.quantifier(env, x, ty, body, true),
            TargetTerm::Exists(x, ty, body) => self.quantifier(env, x, ty, body, false),
        }
    }

    fn quantifier<'t>(
        &mut self,
        env: &Env<'t>,
        x: &'t str,
        ty: &'t crate::target::types::TargetType,
        body: &'t TargetTerm,
        universal: bool,
    ) -> Result<AnswerValue<'t>, EvalError> {
        let domain =
            enumerate_ground(ty, self.config.nat_bound).map_err(EvalError::NonEnumerable)?;
        let n = self.config.moment_order;
        let mut acc = match (self.config.kind, universal) {
            (AlgebraKind::Trace, true) => AnswerValue::StateSet(self.dfa()?.states().clone()),
            (AlgebraKind::Trace, false) => AnswerValue::StateSet(BTreeSet::new()),
            (AlgebraKind::Cost, true) => AnswerValue::Weight(Weight::INF),
            (AlgebraKind::Cost, false) => AnswerValue::Weight(Weight::ZERO),
            (AlgebraKind::Moments, true) => AnswerValue::WeightVector(inf_vec(n)),
            (AlgebraKind::Moments, false) => AnswerValue::WeightVector(zero_vec(n)),
        };
        for g in domain {
            let env = env.extend(x.to_string(), AnswerValue::Ground(g));
            let v = self.eval(&env, body)?;
            acc = match (self.config.kind, universal) {
                (AlgebraKind::Trace, true) => {
                    let (a, b) = (self.as_set(acc)?, self.as_set(v)?);
                    AnswerValue::StateSet(a.intersection(&b).cloned().collect())
                }
                (AlgebraKind::Trace, false) => {
                    let (a, b) = (self.as_set(acc)?, self.as_set(v)?);
                    AnswerValue::StateSet(a.union(&b).cloned().collect())
                }
                (AlgebraKind::Cost, true) => {
                    AnswerValue::Weight(self.as_weight(acc)?.min(self.as_weight(v)?))
                }
                (AlgebraKind::Cost, false) => {
                    AnswerValue::Weight(self.as_weight(acc)?.max(self.as_weight(v)?))
                }
                (AlgebraKind::Moments, true) => {
                    AnswerValue::WeightVector(vec_min(&self.as_vector(acc)?, &self.as_vector(v)?))
                }
                (AlgebraKind::Moments, false) => {
                    AnswerValue::WeightVector(vec_max(&self.as_vector(acc)?, &self.as_vector(v)?))
                }
            };
        }
        Ok(acc)
    }

    /// Interpret one modal operator applied to its continuation. The
    /// operator's branching structure is recovered by feeding the
    /// continuation the elements of the operator's arity type, so both
    /// canonical brace forms and general continuation pairs evaluate alike.
    fn modal<'t>(&mut self, op: &OpRef, k: &PredFn<'t>) -> Result<AnswerValue<'t>, EvalError> {
        let unit = AnswerValue::Ground(GroundVal::Unit);
        let inl = AnswerValue::Ground(GroundVal::inl(GroundVal::Unit));
        let inr = AnswerValue::Ground(GroundVal::inr(GroundVal::Unit));
        match (self.config.kind, op.name.as_str()) {
            (AlgebraKind::Trace, "event") => {
                let sym = match &op.index {
                    Some(OpIndex::Sym(s)) => s.clone(),
                    _ => {
                        return Err(EvalError::Unsupported {
                            node: "`event` without a symbol index".to_string(),
                            kind: "trace",
                        })
                    }
                };
                let s = self.apply(k, unit)?;
                let s = self.as_set(s)?;
                let pre = self.dfa()?.pre(&sym, &s).map_err(|e| match e {
                    super::dfa::DfaError::UnknownSymbol(s) => EvalError::UnknownSymbol(s),
                    other => EvalError::Shape { expected: "a valid automaton", found: other.to_string() },
                })?;
                Ok(AnswerValue::StateSet(pre))
            }
            (AlgebraKind::Trace, "choice") => {
                let a = self.apply(k, inl)?;
                let a = self.as_set(a)?;
                let b = self.apply(k, inr)?;
                let b = self.as_set(b)?;
                Ok(AnswerValue::StateSet(a.intersection(&b).cloned().collect()))
            }
            (AlgebraKind::Cost, "tick") => {
                let w = self.apply(k, unit)?;
                Ok(AnswerValue::Weight(Weight::ONE + self.as_weight(w)?))
            }
            (AlgebraKind::Cost, "flip") => {
                let p = self.flip_prob(op)?;
                let q = Weight::new(1.0 - p.value());
                let a = self.apply(k, inl)?;
                let a = self.as_weight(a)?;
                let b = self.apply(k, inr)?;
                let b = self.as_weight(b)?;
                Ok(AnswerValue::Weight(p * a + q * b))
            }
            (AlgebraKind::Cost, "unif") => {
                let n = self.config.quad_points;
                let mut acc = Weight::ZERO;
                for i in 0..n {
                    let x = (i as f64 + 0.5) / n as f64;
                    let w = self.apply(k, AnswerValue::Ground(GroundVal::real(x)))?;
                    acc = acc + self.as_weight(w)?;
                }
                Ok(AnswerValue::Weight(acc * Weight::new(1.0 / n as f64)))
            }
            (AlgebraKind::Moments, "tick") => {
                let v = self.apply(k, unit)?;
                Ok(AnswerValue::WeightVector(elapse(&self.as_vector(v)?, Weight::ONE)))
            }
            (AlgebraKind::Moments, "flip") => {
                let p = self.flip_prob(op)?;
                let q = Weight::new(1.0 - p.value());
                let a = self.apply(k, inl)?;
                let a = self.as_vector(a)?;
                let b = self.apply(k, inr)?;
                let b = self.as_vector(b)?;
                Ok(AnswerValue::WeightVector(vec_add(&vec_scale(&a, p), &vec_scale(&b, q))))
            }
            (AlgebraKind::Moments, "unif") => {
                let n = self.config.quad_points;
                let mut acc = zero_vec(self.config.moment_order);
                for i in 0..n {
                    let x = (i as f64 + 0.5) / n as f64;
                    let v = self.apply(k, AnswerValue::Ground(GroundVal::real(x)))?;
                    acc = vec_add(&acc, &self.as_vector(v)?);
                }
                Ok(AnswerValue::WeightVector(vec_scale(&acc, Weight::new(1.0 / n as f64))))
            }
            (_, name) => Err(self.unsupported(&format!("modality `{name}`"))),
        }
    }

    fn flip_prob(&self, op: &OpRef) -> Result<Weight, EvalError> {
        match &op.index {
            Some(OpIndex::Num(p)) if (0.0..=1.0).contains(p) => Ok(Weight::new(*p)),
            Some(OpIndex::Num(p)) => {
                Err(EvalError::BadWeight(format!("flip probability {p} outside [0, 1]")))
            }
            _ => Err(EvalError::Unsupported {
                node: "`flip` without a numeric index".to_string(),
                kind: kind_name(self.config.kind),
            }),
        }
    }

    fn apply<'t>(
        &mut self,
        pred: &PredFn<'t>,
        arg: AnswerValue<'t>,
    ) -> Result<AnswerValue<'t>, EvalError> {
        match &*pred.0 {
            PredImpl::Closure { pat, body, env } => {
                let bindings = bind_pattern(pat, &arg)?;
                let env = env.extend_all(bindings);
                self.eval(&env, body)
            }
            PredImpl::Fix(fix) => self.fixpoint_call(fix, arg),
        }
    }

    /// The algebra's bottom, from which iteration starts.
    fn bottom<'t>(&self) -> Result<AnswerValue<'t>, EvalError> {
        Ok(match self.config.kind {
            AlgebraKind::Trace => AnswerValue::StateSet(self.dfa()?.states().clone()),
            AlgebraKind::Cost => AnswerValue::Weight(Weight::ZERO),
            AlgebraKind::Moments => {
                AnswerValue::WeightVector(zero_vec(self.config.moment_order))
            }
        })
    }

    /// Distance between successive approximants: 0 exactly when equal,
    /// infinite for differing state sets.
    fn approx_delta(&self, old: &AnswerValue<'_>, new: &AnswerValue<'_>) -> Result<f64, EvalError> {
        match (old, new) {
            (AnswerValue::StateSet(a), AnswerValue::StateSet(b)) => {
                Ok(if a == b { 0.0 } else { f64::INFINITY })
            }
            (AnswerValue::Weight(a), AnswerValue::Weight(b)) => Ok(a.delta(*b)),
            (AnswerValue::WeightVector(a), AnswerValue::WeightVector(b)) => Ok(vec_delta(a, b)),
            (_, other) => Err(EvalError::Shape {
                expected: "an answer-typed fixpoint approximant",
                found: other.describe(),
            }),
        }
    }

    /// Kleene direction check: trace approximants shrink, cost and moment
    /// approximants grow (up to float rounding).
    fn monotone_step(&self, old: &AnswerValue<'_>, new: &AnswerValue<'_>) -> bool {
        const SLACK: f64 = 1e-9;
        match (old, new) {
            (AnswerValue::StateSet(a), AnswerValue::StateSet(b)) => b.is_subset(a),
            (AnswerValue::Weight(a), AnswerValue::Weight(b)) => {
                b.value() >= a.value() - SLACK * a.value().max(1.0)
            }
            (AnswerValue::WeightVector(a), AnswerValue::WeightVector(b)) => a
                .iter()
                .zip(b)
                .all(|(x, y)| y.value() >= x.value() - SLACK * x.value().max(1.0)),
            _ => false,
        }
    }

    fn fixpoint_call<'t>(
        &mut self,
        fix: &Rc<Fix<'t>>,
        arg: AnswerValue<'t>,
    ) -> Result<AnswerValue<'t>, EvalError> {
        let key = arg_key(&arg)?;
        let was_iterating = {
            let st = fix.state.borrow();
            if let Some(e) = st.entries.get(&key) {
                return Ok(e.approx.clone());
            }
            st.iterating
        };
        let bottom = self.bottom()?;
        {
            let mut st = fix.state.borrow_mut();
            st.entries.insert(key.clone(), Entry { arg, approx: bottom.clone() });
            st.order.push(key.clone());
        }
        if was_iterating {
            // Discovered mid-round; the running iteration will refine it.
            return Ok(bottom);
        }
        fix.state.borrow_mut().iterating = true;
        let outcome = self.iterate(fix);
        fix.state.borrow_mut().iterating = false;
        outcome?;
        let st = fix.state.borrow();
        Ok(st.entries[&key].approx.clone())
    }

    /// Chaotic iteration over all demanded arguments until a full round
    /// changes nothing and demands nothing new.
    fn iterate(&mut self, fix: &Rc<Fix<'_>>) -> Result<(), EvalError> {
        let mut rounds: u64 = 0;
        loop {
            rounds += 1;
            self.iterations += 1;
            let keys: Vec<ArgKey> = fix.state.borrow().order.clone();
            let demanded_before = keys.len();
            let mut max_delta: f64 = 0.0;
            for key in keys {
                let (arg, old) = {
                    let st = fix.state.borrow();
                    let e = &st.entries[&key];
                    (e.arg.clone(), e.approx.clone())
                };
                let bindings = bind_pattern(fix.pat, &arg)?;
                let env = fix
                    .env
                    .extend(
                        fix.fname.to_string(),
                        AnswerValue::Pred(PredFn(Rc::new(PredImpl::Fix(fix.clone())))),
                    )
                    .extend_all(bindings);
                let new = self.eval(&env, fix.body)?;
                let delta = self.approx_delta(&old, &new)?;
                debug_assert!(
                    self.monotone_step(&old, &new),
                    "fixpoint iteration left the algebra's recursion order: {old:?} -> {new:?}"
                );
                if delta > 0.0 {
                    fix.state.borrow_mut().entries.get_mut(&key).expect("demanded entry").approx =
                        new;
                }
                max_delta = max_delta.max(delta);
            }
            let demanded_after = fix.state.borrow().order.len();
            let grew = demanded_after > demanded_before;
            if !grew && max_delta <= self.config.epsilon {
                if max_delta > 0.0 {
                    self.status.merge(Status::Converged);
                }
                return Ok(());
            }
            if rounds >= self.config.max_unfold {
                if self.config.strict {
                    return Err(EvalError::CapExhausted { rounds, args: demanded_after });
                }
                self.status.merge(Status::Truncated);
                return Ok(());
            }
        }
    }
}

fn bind_pattern<'t>(
    pat: &Pattern,
    value: &AnswerValue<'t>,
) -> Result<Vec<(String, AnswerValue<'t>)>, EvalError> {
    match (pat, value) {
        (Pattern::Var(x), v) => Ok(vec![(x.clone(), v.clone())]),
        (Pattern::Pair(p, q), AnswerValue::PairVal(a, b)) => {
            let mut out = bind_pattern(p, a)?;
            out.extend(bind_pattern(q, b)?);
            Ok(out)
        }
        (Pattern::Pair(p, q), AnswerValue::Ground(GroundVal::Pair(a, b))) => {
            let mut out = bind_pattern(p, &AnswerValue::Ground((**a).clone()))?;
            out.extend(bind_pattern(q, &AnswerValue::Ground((**b).clone()))?);
            Ok(out)
        }
        (Pattern::Pair(_, _), other) => Err(EvalError::Shape {
            expected: "a pair matching the binder pattern",
            found: other.describe(),
        }),
    }
}

/// Evaluate a formula under the configured algebra. Free variables are
/// supplied through `env`.
pub fn evaluate<'t>(
    config: &AlgebraConfig,
    env: &[(String, AnswerValue<'t>)],
    term: &'t TargetTerm,
) -> Result<EvalResult<'t>, EvalError> {
    config.validate()?;
    let mut ev = Evaluator { config, iterations: 0, status: Status::Exact };
    let env = EnvList::empty().extend_all(env.iter().cloned());
    let value = ev.eval(&env, term)?;
    let error_bound = match ev.status {
        Status::Exact => Some(0.0),
        _ => None,
    };
    Ok(EvalResult { value, status: ev.status, iterations: ev.iterations, error_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds => write!(f, "holds"),
            Verdict::Fails => write!(f, "fails"),
            Verdict::Unknown => write!(f, "unknown"),
        }
    }
}

#[derive(Debug)]
pub struct TraceCheck<'t> {
    pub verdict: Verdict,
    pub result: EvalResult<'t>,
}

/// Decide a trace property from a closed answer-typed formula.
///
/// Exclusion of the initial state is conclusive even for truncated runs,
/// because iteration approaches the greatest fixed point from above;
/// membership certifies the property only when the result is exact.
pub fn check_trace_property<'t>(
    config: &AlgebraConfig,
    formula: &'t TargetTerm,
) -> Result<TraceCheck<'t>, EvalError> {
    let result = evaluate(config, &[], formula)?;
    let dfa = config.dfa.as_ref().ok_or(EvalError::MissingDfa)?;
    let set = match &result.value {
        AnswerValue::StateSet(s) => s,
        other => {
            return Err(EvalError::Shape {
                expected: "a state set verdict",
                found: other.describe(),
            })
        }
    };
    let inside = set.contains(dfa.initial());
    let verdict = if !inside {
        Verdict::Fails
    } else if result.status == Status::Exact {
        Verdict::Holds
    } else {
        Verdict::Unknown
    };
    Ok(TraceCheck { verdict, result })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::dfa::Dfa;
    use crate::source::signature::Signature;
    use crate::target::parse::parse_formula;

    fn loop_dfa() -> Dfa {
        Dfa::from_parts(
            ["q0".to_string(), "q1".to_string()],
            ["a".to_string(), "b".to_string()],
            [
                ("q0".to_string(), "a".to_string(), "q0".to_string()),
                ("q0".to_string(), "b".to_string(), "q1".to_string()),
                ("q1".to_string(), "a".to_string(), "q1".to_string()),
                ("q1".to_string(), "b".to_string(), "q1".to_string()),
            ],
            "q0".to_string(),
            ["q0".to_string(), "q1".to_string()],
        )
        .unwrap()
    }

    fn eval_cost(src: &str) -> EvalResult<'static> {
        // Tests leak the parsed formula so results can outlive the helper.
        let sig = Signature::builtin_cost();
        let term: &'static TargetTerm =
            Box::leak(Box::new(parse_formula(Some(&sig), src).unwrap()));
        evaluate(&AlgebraConfig::cost(), &[], term).unwrap()
    }

    fn weight_of(r: &EvalResult<'_>) -> f64 {
        match &r.value {
            AnswerValue::Weight(w) => w.value(),
            other => panic!("expected a weight, got {other:?}"),
        }
    }

    #[test]
    fn truth_denotes_all_states_exactly() {
        let config = AlgebraConfig::trace(loop_dfa());
        let term = parse_formula(None, "true").unwrap();
        let r = evaluate(&config, &[], &term).unwrap();
        match &r.value {
            AnswerValue::StateSet(s) => assert_eq!(s.len(), 2),
            other => panic!("expected a state set, got {other:?}"),
        }
        assert_eq!(r.status, Status::Exact);
        assert_eq!(r.error_bound, Some(0.0));
    }

    #[test]
    fn cost_arithmetic_is_computed_directly() {
        let r = eval_cost("1 + 0.5 * 4");
        assert_eq!(weight_of(&r), 3.0);
        assert_eq!(r.status, Status::Exact);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn geometric_recursion_converges_to_expected_cost() {
        let r = eval_cost(
            "(\\k. letrec g (x, h) = 0.5 * h () + 0.5 * (1 + g ((), h)) in g ((), k)) (\\x. 0)",
        );
        assert!((weight_of(&r) - 1.0).abs() < 1e-6, "got {}", weight_of(&r));
        assert_eq!(r.status, Status::Converged);
        assert!(r.iterations > 5);
    }

    #[test]
    fn immediate_divergence_costs_nothing_exactly() {
        let r = eval_cost("(\\k. letrec f (x, h) = f (x, h) in f ((), k)) (\\x. 0)");
        assert_eq!(weight_of(&r), 0.0);
        assert_eq!(r.status, Status::Exact);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn unbounded_unfolding_truncates_at_the_cap() {
        let sig = Signature::builtin_cost();
        let term = parse_formula(
            Some(&sig),
            "(\\k. letrec f (x, h) = 1 + f (succ x, h) in f (zero (), k)) (\\x. 0)",
        )
        .unwrap();
        let mut config = AlgebraConfig::cost();
        config.max_unfold = 50;
        let r = evaluate(&config, &[], &term).unwrap();
        assert_eq!(r.status, Status::Truncated);
        // A finite lower bound on a divergent cost, well below any fixpoint.
        assert!(weight_of(&r) >= 10.0);
        assert!(weight_of(&r).is_finite());
        assert_eq!(r.error_bound, None);

        config.strict = true;
        let err = evaluate(&config, &[], &term).unwrap_err();
        assert!(matches!(err, EvalError::CapExhausted { .. }));
    }

    #[test]
    fn quadrature_integrates_the_square() {
        let r = eval_cost("unif ((\\x. x * x), ())");
        assert!((weight_of(&r) - 1.0 / 3.0).abs() < 1e-4, "got {}", weight_of(&r));
        assert_eq!(r.status, Status::Exact);
    }

    #[test]
    fn event_prefixes_and_choice_meets() {
        let sig = Signature::builtin_trace();
        let term = parse_formula(Some(&sig), "choice {<a>(true), <b>(false)}").unwrap();
        let config = AlgebraConfig::trace(loop_dfa());
        let r = evaluate(&config, &[], &term).unwrap();
        // pre_a(U) = U, pre_b(emptyset) = emptyset, meet = emptyset.
        match &r.value {
            AnswerValue::StateSet(s) => assert!(s.is_empty()),
            other => panic!("expected a state set, got {other:?}"),
        }
    }

    #[test]
    fn productive_self_loop_holds_by_greatest_fixpoint() {
        let sig = Signature::builtin_trace();
        let term = parse_formula(
            Some(&sig),
            "(\\k. letrec f (x, h) = <a>(f ((), h)) in f ((), k)) (\\x. true)",
        )
        .unwrap();
        let config = AlgebraConfig::trace(loop_dfa());
        let check = check_trace_property(&config, &term).unwrap();
        assert_eq!(check.verdict, Verdict::Holds);
        assert_eq!(check.result.status, Status::Exact);
    }

    #[test]
    fn impossible_event_fails_from_the_initial_state() {
        // q1 has no way back, so demanding endless `b` then `a` from q0
        // lands outside the automaton after the first step.
        let sig = Signature::builtin_trace();
        let dfa = Dfa::from_parts(
            ["q0".to_string(), "q1".to_string()],
            ["a".to_string(), "b".to_string()],
            [("q0".to_string(), "a".to_string(), "q1".to_string())],
            "q0".to_string(),
            ["q0".to_string(), "q1".to_string()],
        )
        .unwrap();
        let term = parse_formula(Some(&sig), "<a>(<a>(true))").unwrap();
        let config = AlgebraConfig::trace(dfa);
        let check = check_trace_property(&config, &term).unwrap();
        assert_eq!(check.verdict, Verdict::Fails);
    }

    #[test]
    fn second_moment_of_geometric_cost() {
        let sig = Signature::builtin_cost();
        let term = parse_formula(
            Some(&sig),
            "(\\k. letrec g (x, h) = 0.5 * h () + 0.5 * (1 + g ((), h)) in g ((), k)) (\\x. 0)",
        )
        .unwrap();
        let config = AlgebraConfig::moments(2);
        let r = evaluate(&config, &[], &term).unwrap();
        let v = match &r.value {
            AnswerValue::WeightVector(v) => v.clone(),
            other => panic!("expected a moment vector, got {other:?}"),
        };
        assert!((v[0].value() - 1.0).abs() < 1e-6, "first moment {}", v[0]);
        assert!((v[1].value() - 3.0).abs() < 1e-6, "second moment {}", v[1]);
    }

    #[test]
    fn quantifiers_fold_over_enumerable_domains() {
        let sig = Signature::builtin_cost();
        let term =
            parse_formula(Some(&sig), "exists b:unit + unit. case b of inl x -> 2 | inr y -> 5")
                .unwrap();
        let r = {
            let config = AlgebraConfig::cost();
            evaluate(&config, &[], &term).unwrap()
        };
        assert_eq!(weight_of(&r), 5.0);
        let term =
            parse_formula(Some(&sig), "forall b:unit + unit. case b of inl x -> 2 | inr y -> 5")
                .unwrap();
        let config = AlgebraConfig::cost();
        let r = evaluate(&config, &[], &term).unwrap();
        assert_eq!(weight_of(&r), 2.0);
    }

    #[test]
    fn memoization_shares_work_across_identical_continuations() {
        // The two calls pass continuations built from the same node with
        // the same captures, so the table sees one argument, not two.
        let r = eval_cost(
            "(\\k. letrec g (x, h) = 0.5 * h () + 0.5 * (1 + g ((), h)) in \
             g ((), k) + g ((), k)) (\\x. 0)",
        );
        assert!((weight_of(&r) - 2.0).abs() < 1e-5, "got {}", weight_of(&r));
    }
}
