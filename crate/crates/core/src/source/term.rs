//! Terms of the effectful source calculus.
//!
//! Values and computations share one syntax: variables, constant and
//! operation application, unit, pairs and projections, injections and case
//! analysis, the empty-type eliminator, lambdas, application, and `letrec`.
//!
//! Operation application is always the general form `o M` where `M` pairs a
//! continuation with the operation argument; the parser desugars the n-ary
//! call syntax `o(M1, ..., Mn)` into that shape and the printer recognizes
//! the shape to print it back.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::signature::Signature;
use super::types::SourceType;

/// Index attached to an operation family instance, e.g. the `a` of
/// `event[a]` or the `0.5` of `flip[0.5]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum OpIndex {
    /// Symbolic index (alphabet letters).
    Sym(String),
    /// Numeric index (probabilities).
    Num(f64),
}

impl PartialEq for OpIndex {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (OpIndex::Sym(a), OpIndex::Sym(b)) => a == b,
            (OpIndex::Num(a), OpIndex::Num(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for OpIndex {}

impl std::hash::Hash for OpIndex {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            OpIndex::Sym(s) => {
                0u8.hash(state);
                s.hash(state);
            }
            OpIndex::Num(n) => {
                1u8.hash(state);
                n.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for OpIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpIndex::Sym(s) => write!(f, "{s}"),
            OpIndex::Num(n) => write!(f, "{n}"),
        }
    }
}

/// Reference to a concrete operation: a family name plus optional index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpRef {
    pub name: String,
    pub index: Option<OpIndex>,
}

impl OpRef {
    pub fn plain(name: impl Into<String>) -> Self {
        OpRef { name: name.into(), index: None }
    }

    pub fn sym(name: impl Into<String>, index: impl Into<String>) -> Self {
        OpRef { name: name.into(), index: Some(OpIndex::Sym(index.into())) }
    }

    pub fn num(name: impl Into<String>, index: f64) -> Self {
        OpRef { name: name.into(), index: Some(OpIndex::Num(index)) }
    }
}

impl fmt::Display for OpRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.index {
            None => write!(f, "{}", self.name),
            Some(ix) => write!(f, "{}[{}]", self.name, ix),
        }
    }
}

/// Which projection of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProjSide {
    Fst,
    Snd,
}

/// Which injection into a sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InjSide {
    Inl,
    Inr,
}

/// A source term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SourceTerm {
    Var(String),
    /// Constant application `c M`.
    Const(String, Box<SourceTerm>),
    /// Operation application `o M` at result type `rho`. The result type is
    /// unknown at parse time and filled in by elaboration.
    Op {
        op: OpRef,
        result: Option<SourceType>,
        arg: Box<SourceTerm>,
    },
    Unit,
    Pair(Box<SourceTerm>, Box<SourceTerm>),
    Proj(ProjSide, Box<SourceTerm>),
    /// Empty-type eliminator `absurd M`. The result type is not determined
    /// by the argument, so elaboration records it.
    Absurd {
        result: Option<SourceType>,
        arg: Box<SourceTerm>,
    },
    /// `inl`/`inr` annotated with the type of the other summand.
    Inj(InjSide, SourceType, Box<SourceTerm>),
    /// `case M of inl x1 -> N1 | inr x2 -> N2`.
    Case {
        scrutinee: Box<SourceTerm>,
        left_binder: String,
        left: Box<SourceTerm>,
        right_binder: String,
        right: Box<SourceTerm>,
    },
    /// `fun x:ty. M`.
    Lam(String, SourceType, Box<SourceTerm>),
    App(Box<SourceTerm>, Box<SourceTerm>),
    /// `letrec f x = body in rest`. Domain and codomain of `f` are inferred
    /// and recorded by elaboration.
    LetRec {
        fname: String,
        arg: String,
        dom: Option<SourceType>,
        cod: Option<SourceType>,
        body: Box<SourceTerm>,
        rest: Box<SourceTerm>,
    },
}

impl SourceTerm {
    pub fn var(name: impl Into<String>) -> Self {
        SourceTerm::Var(name.into())
    }

    pub fn constant(name: impl Into<String>, arg: SourceTerm) -> Self {
        SourceTerm::Const(name.into(), Box::new(arg))
    }

    pub fn op(op: OpRef, arg: SourceTerm) -> Self {
        SourceTerm::Op { op, result: None, arg: Box::new(arg) }
    }

    pub fn pair(l: SourceTerm, r: SourceTerm) -> Self {
        SourceTerm::Pair(Box::new(l), Box::new(r))
    }

    pub fn fst(t: SourceTerm) -> Self {
        SourceTerm::Proj(ProjSide::Fst, Box::new(t))
    }

    pub fn snd(t: SourceTerm) -> Self {
        SourceTerm::Proj(ProjSide::Snd, Box::new(t))
    }

    pub fn absurd(t: SourceTerm) -> Self {
        SourceTerm::Absurd { result: None, arg: Box::new(t) }
    }

    pub fn inl(other: SourceType, t: SourceTerm) -> Self {
        SourceTerm::Inj(InjSide::Inl, other, Box::new(t))
    }

    pub fn inr(other: SourceType, t: SourceTerm) -> Self {
        SourceTerm::Inj(InjSide::Inr, other, Box::new(t))
    }

    pub fn case(
        scrutinee: SourceTerm,
        left_binder: impl Into<String>,
        left: SourceTerm,
        right_binder: impl Into<String>,
        right: SourceTerm,
    ) -> Self {
        SourceTerm::Case {
            scrutinee: Box::new(scrutinee),
            left_binder: left_binder.into(),
            left: Box::new(left),
            right_binder: right_binder.into(),
            right: Box::new(right),
        }
    }

    pub fn lam(x: impl Into<String>, ty: SourceType, body: SourceTerm) -> Self {
        SourceTerm::Lam(x.into(), ty, Box::new(body))
    }

    pub fn app(f: SourceTerm, a: SourceTerm) -> Self {
        SourceTerm::App(Box::new(f), Box::new(a))
    }

    pub fn letrec(
        fname: impl Into<String>,
        arg: impl Into<String>,
        body: SourceTerm,
        rest: SourceTerm,
    ) -> Self {
        SourceTerm::LetRec {
            fname: fname.into(),
            arg: arg.into(),
            dom: None,
            cod: None,
            body: Box::new(body),
            rest: Box::new(rest),
        }
    }

    /// Free variables, in sorted order.
    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(t: &SourceTerm, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match t {
                SourceTerm::Var(x) => {
                    if !bound.iter().any(|b| b == x) {
                        out.insert(x.clone());
                    }
                }
                SourceTerm::Const(_, m) | SourceTerm::Op { arg: m, .. } => go(m, bound, out),
                SourceTerm::Unit => {}
                SourceTerm::Pair(l, r) => {
                    go(l, bound, out);
                    go(r, bound, out);
                }
                SourceTerm::Proj(_, m)
                | SourceTerm::Absurd { arg: m, .. }
                | SourceTerm::Inj(_, _, m) => go(m, bound, out),
                SourceTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
                    go(scrutinee, bound, out);
                    bound.push(left_binder.clone());
                    go(left, bound, out);
                    bound.pop();
                    bound.push(right_binder.clone());
                    go(right, bound, out);
                    bound.pop();
                }
                SourceTerm::Lam(x, _, body) => {
                    bound.push(x.clone());
                    go(body, bound, out);
                    bound.pop();
                }
                SourceTerm::App(f, a) => {
                    go(f, bound, out);
                    go(a, bound, out);
                }
                SourceTerm::LetRec { fname, arg, body, rest, .. } => {
                    bound.push(fname.clone());
                    bound.push(arg.clone());
                    go(body, bound, out);
                    bound.pop();
                    go(rest, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// All variable names occurring anywhere, bound or free.
    pub fn all_names(&self) -> BTreeSet<String> {
        fn go(t: &SourceTerm, out: &mut BTreeSet<String>) {
            match t {
                SourceTerm::Var(x) => {
                    out.insert(x.clone());
                }
                SourceTerm::Unit => {}
                SourceTerm::Const(_, m)
                | SourceTerm::Op { arg: m, .. }
                | SourceTerm::Proj(_, m)
                | SourceTerm::Absurd { arg: m, .. }
                | SourceTerm::Inj(_, _, m) => go(m, out),
                SourceTerm::Pair(l, r) | SourceTerm::App(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                SourceTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
                    out.insert(left_binder.clone());
                    out.insert(right_binder.clone());
                    go(scrutinee, out);
                    go(left, out);
                    go(right, out);
                }
                SourceTerm::Lam(x, _, body) => {
                    out.insert(x.clone());
                    go(body, out);
                }
                SourceTerm::LetRec { fname, arg, body, rest, .. } => {
                    out.insert(fname.clone());
                    out.insert(arg.clone());
                    go(body, out);
                    go(rest, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }

    /// Structural equality up to consistent renaming of bound variables.
    /// Type annotations must match where both sides carry them; a missing
    /// inferred annotation (`Op` result, `letrec` types) matches anything.
    pub fn alpha_eq(&self, other: &SourceTerm) -> bool {
        fn opt_ty_eq(a: &Option<SourceType>, b: &Option<SourceType>) -> bool {
            match (a, b) {
                (Some(x), Some(y)) => x == y,
                _ => true,
            }
        }
        fn go(a: &SourceTerm, b: &SourceTerm, env: &mut Vec<(String, String)>) -> bool {
            match (a, b) {
                (SourceTerm::Var(x), SourceTerm::Var(y)) => {
                    for (bx, by) in env.iter().rev() {
                        if bx == x || by == y {
                            return bx == x && by == y;
                        }
                    }
                    x == y
                }
                (SourceTerm::Const(c, m), SourceTerm::Const(d, n)) => c == d && go(m, n, env),
                (
                    SourceTerm::Op { op: o1, result: r1, arg: m },
                    SourceTerm::Op { op: o2, result: r2, arg: n },
                ) => o1 == o2 && opt_ty_eq(r1, r2) && go(m, n, env),
                (SourceTerm::Unit, SourceTerm::Unit) => true,
                (SourceTerm::Pair(l1, r1), SourceTerm::Pair(l2, r2)) => {
                    go(l1, l2, env) && go(r1, r2, env)
                }
                (SourceTerm::Proj(s1, m), SourceTerm::Proj(s2, n)) => s1 == s2 && go(m, n, env),
                (
                    SourceTerm::Absurd { result: r1, arg: m },
                    SourceTerm::Absurd { result: r2, arg: n },
                ) => opt_ty_eq(r1, r2) && go(m, n, env),
                (SourceTerm::Inj(s1, t1, m), SourceTerm::Inj(s2, t2, n)) => {
                    s1 == s2 && t1 == t2 && go(m, n, env)
                }
                (
                    SourceTerm::Case {
                        scrutinee: sc1,
                        left_binder: lb1,
                        left: l1,
                        right_binder: rb1,
                        right: r1,
                    },
                    SourceTerm::Case {
                        scrutinee: sc2,
                        left_binder: lb2,
                        left: l2,
                        right_binder: rb2,
                        right: r2,
                    },
                ) => {
                    if !go(sc1, sc2, env) {
                        return false;
                    }
                    env.push((lb1.clone(), lb2.clone()));
                    let ok_l = go(l1, l2, env);
                    env.pop();
                    env.push((rb1.clone(), rb2.clone()));
                    let ok_r = go(r1, r2, env);
                    env.pop();
                    ok_l && ok_r
                }
                (SourceTerm::Lam(x, tx, m), SourceTerm::Lam(y, ty, n)) => {
                    if tx != ty {
                        return false;
                    }
                    env.push((x.clone(), y.clone()));
                    let ok = go(m, n, env);
                    env.pop();
                    ok
                }
                (SourceTerm::App(f1, a1), SourceTerm::App(f2, a2)) => {
                    go(f1, f2, env) && go(a1, a2, env)
                }
                (
                    SourceTerm::LetRec { fname: f1, arg: x1, dom: d1, cod: c1, body: b1, rest: r1 },
                    SourceTerm::LetRec { fname: f2, arg: x2, dom: d2, cod: c2, body: b2, rest: r2 },
                ) => {
                    if !opt_ty_eq(d1, d2) || !opt_ty_eq(c1, c2) {
                        return false;
                    }
                    env.push((f1.clone(), f2.clone()));
                    env.push((x1.clone(), x2.clone()));
                    let ok_b = go(b1, b2, env);
                    env.pop();
                    let ok_r = go(r1, r2, env);
                    env.pop();
                    ok_b && ok_r
                }
                _ => false,
            }
        }
        go(self, other, &mut Vec::new())
    }

    /// Surface-syntax rendering. With a signature, operation applications in
    /// the canonical continuation-pair shape are printed back as n-ary calls
    /// `o(M1, ..., Mn)`; without one, everything prints in the general form.
    pub fn print(&self, sig: Option<&Signature>) -> String {
        let mut s = String::new();
        print_term(self, sig, 0, &mut s);
        s
    }
}

impl fmt::Display for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.print(None))
    }
}

/// Try to read an operation argument back as the canonical n-ary shape
/// `(fun z. case-chain over z, ())`, returning the branch bodies.
/// The chain for arity n case-splits a left-nested `unit + ... + unit`.
pub(crate) fn nary_branches(arg: &SourceTerm, n: usize) -> Option<Vec<&SourceTerm>> {
    let SourceTerm::Pair(l, r) = arg else { return None };
    if **r != SourceTerm::Unit {
        return None;
    }
    let SourceTerm::Lam(z, ty, body) = &**l else { return None };
    if *ty != SourceType::finite(n) {
        return None;
    }
    fn chain<'t>(scrut_var: &str, body: &'t SourceTerm, n: usize, out: &mut Vec<&'t SourceTerm>) -> bool {
        match n {
            0 => matches!(body, SourceTerm::Absurd { arg: m, .. } if matches!(&**m, SourceTerm::Var(v) if v == scrut_var)),
            1 => {
                out.push(body);
                true
            }
            _ => {
                let SourceTerm::Case { scrutinee, left_binder, left, right_binder: _, right } = body
                else {
                    return false;
                };
                if !matches!(&**scrutinee, SourceTerm::Var(v) if v == scrut_var) {
                    return false;
                }
                if !chain(left_binder, left, n - 1, out) {
                    return false;
                }
                out.push(right);
                true
            }
        }
    }
    let mut out = Vec::new();
    if chain(z, body, n, &mut out) {
        Some(out)
    } else {
        None
    }
}

fn atom_prec(t: &SourceTerm) -> bool {
    matches!(
        t,
        SourceTerm::Var(_) | SourceTerm::Unit | SourceTerm::Pair(_, _) | SourceTerm::Proj(_, _) | SourceTerm::Inj(_, _, _)
    )
}

/// prec 0: full terms; prec 1: application operands; prec 2: atoms.
fn print_term(t: &SourceTerm, sig: Option<&Signature>, prec: u8, out: &mut String) {
    match t {
        SourceTerm::Var(x) => out.push_str(x),
        SourceTerm::Unit => out.push_str("()"),
        SourceTerm::Pair(l, r) => {
            out.push('(');
            print_term(l, sig, 0, out);
            out.push_str(", ");
            print_term(r, sig, 0, out);
            out.push(')');
        }
        SourceTerm::Proj(side, m) => {
            out.push_str(match side {
                ProjSide::Fst => "fst ",
                ProjSide::Snd => "snd ",
            });
            print_atom(m, sig, out);
        }
        SourceTerm::Inj(side, other, m) => {
            out.push_str(match side {
                InjSide::Inl => "inl",
                InjSide::Inr => "inr",
            });
            out.push('[');
            out.push_str(&other.to_string());
            out.push_str("] ");
            print_atom(m, sig, out);
        }
        SourceTerm::Const(c, m) => paren_if(prec > 1, out, |out| {
            out.push_str(c);
            out.push(' ');
            print_atom(m, sig, out);
        }),
        SourceTerm::Op { op, arg, .. } => {
            let nary = sig.and_then(|s| s.lookup(op).ok()).and_then(|d| d.nary);
            if let Some(n) = nary {
                if let Some(branches) = nary_branches(arg, n as usize) {
                    out.push_str(&op.to_string());
                    out.push('(');
                    for (i, b) in branches.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        print_term(b, sig, 0, out);
                    }
                    out.push(')');
                    return;
                }
            }
            paren_if(prec > 1, out, |out| {
                out.push_str(&op.to_string());
                out.push(' ');
                print_atom(arg, sig, out);
            });
        }
        SourceTerm::Absurd { arg: m, .. } => paren_if(prec > 1, out, |out| {
            out.push_str("absurd ");
            print_atom(m, sig, out);
        }),
        SourceTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
            paren_if(prec > 0, out, |out| {
                out.push_str("case ");
                print_term(scrutinee, sig, 1, out);
                out.push_str(" of inl ");
                out.push_str(left_binder);
                out.push_str(" -> ");
                print_term(left, sig, 0, out);
                out.push_str(" | inr ");
                out.push_str(right_binder);
                out.push_str(" -> ");
                print_term(right, sig, 0, out);
            })
        }
        SourceTerm::Lam(x, ty, body) => paren_if(prec > 0, out, |out| {
            out.push_str("fun ");
            out.push_str(x);
            out.push(':');
            out.push_str(&ty.to_string());
            out.push_str(". ");
            print_term(body, sig, 0, out);
        }),
        SourceTerm::App(f, a) => paren_if(prec > 1, out, |out| {
            print_term(f, sig, 1, out);
            out.push(' ');
            print_atom(a, sig, out);
        }),
        SourceTerm::LetRec { fname, arg, body, rest, .. } => paren_if(prec > 0, out, |out| {
            out.push_str("letrec ");
            out.push_str(fname);
            out.push(' ');
            out.push_str(arg);
            out.push_str(" = ");
            print_term(body, sig, 0, out);
            out.push_str(" in ");
            print_term(rest, sig, 0, out);
        }),
    }
}

fn print_atom(t: &SourceTerm, sig: Option<&Signature>, out: &mut String) {
    // n-ary calls parse as atoms, so let them through unparenthesized.
    if let SourceTerm::Op { op, arg, .. } = t {
        let nary = sig.and_then(|s| s.lookup(op).ok()).and_then(|d| d.nary);
        if let Some(n) = nary {
            if nary_branches(arg, n as usize).is_some() {
                print_term(t, sig, 2, out);
                return;
            }
        }
    }
    if atom_prec(t) {
        print_term(t, sig, 2, out);
    } else {
        out.push('(');
        print_term(t, sig, 0, out);
        out.push(')');
    }
}

fn paren_if(needed: bool, out: &mut String, body: impl FnOnce(&mut String)) {
    if needed {
        out.push('(');
        body(out);
        out.push(')');
    } else {
        body(out);
    }
}
