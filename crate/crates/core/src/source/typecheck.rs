//! Bidirectional typechecking with monomorphic unification.
//!
//! The surface syntax annotates lambda binders but not `letrec` or operation
//! result types, so checking runs as inference: unknown types start as
//! metavariables and are solved by unification. `elaborate` additionally
//! returns the program with every inferred annotation filled in; inference
//! variables left unconstrained default to `unit`.
//!
//! Typing follows the effect-calculus rules: `c M : car(c)` from
//! `M : ar(c)`, and `o M : rho` from `M : (ar(o) -> rho) * car(o)`.

use std::fmt;

use thiserror::Error;

use super::signature::{Signature, SignatureError};
use super::term::{InjSide, ProjSide, SourceTerm};
use super::types::SourceType;

/// Ordered typing context with distinct names.
#[derive(Debug, Clone, Default)]
pub struct TypingContext {
    entries: Vec<(String, SourceType)>,
}

impl TypingContext {
    pub fn empty() -> Self {
        TypingContext::default()
    }

    /// Add a binding; returns false (and leaves the context unchanged) if the
    /// name is already bound.
    pub fn insert(&mut self, name: impl Into<String>, ty: SourceType) -> bool {
        let name = name.into();
        if self.entries.iter().any(|(n, _)| *n == name) {
            return false;
        }
        self.entries.push((name, ty));
        true
    }

    pub fn lookup(&self, name: &str) -> Option<&SourceType> {
        self.entries.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Debug, Error)]
pub enum TypeError {
    #[error("at {path}: unbound variable `{name}`")]
    Unbound { name: String, path: String },
    #[error("at {path}: expected type `{expected}` but found `{found}`")]
    Mismatch { expected: String, found: String, path: String },
    #[error("at {path}: unknown base type `{base}`")]
    UnknownBase { base: String, path: String },
    #[error("at {path}: recursive type constraint (occurs check)")]
    Occurs { path: String },
    #[error("at {path}: {source}")]
    Signature { source: SignatureError, path: String },
}

/// Internal type language: source types plus metavariables.
#[derive(Debug, Clone, PartialEq)]
enum Ty {
    Base(String),
    Unit,
    Empty,
    Prod(Box<Ty>, Box<Ty>),
    Sum(Box<Ty>, Box<Ty>),
    Arrow(Box<Ty>, Box<Ty>),
    Meta(u32),
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Meta(id) => write!(f, "?{id}"),
            other => write!(f, "{}", other.to_source_raw()),
        }
    }
}

impl Ty {
    fn from_source(ty: &SourceType) -> Ty {
        match ty {
            SourceType::Base(b) => Ty::Base(b.clone()),
            SourceType::Unit => Ty::Unit,
            SourceType::Empty => Ty::Empty,
            SourceType::Prod(l, r) => Ty::Prod(Box::new(Ty::from_source(l)), Box::new(Ty::from_source(r))),
            SourceType::Sum(l, r) => Ty::Sum(Box::new(Ty::from_source(l)), Box::new(Ty::from_source(r))),
            SourceType::Arrow(l, r) => {
                Ty::Arrow(Box::new(Ty::from_source(l)), Box::new(Ty::from_source(r)))
            }
        }
    }

    /// Render with metavariables as placeholder base types `?n`, to be
    /// resolved by the final zonking walk.
    fn to_source_raw(&self) -> SourceType {
        match self {
            Ty::Base(b) => SourceType::Base(b.clone()),
            Ty::Unit => SourceType::Unit,
            Ty::Empty => SourceType::Empty,
            Ty::Prod(l, r) => SourceType::prod(l.to_source_raw(), r.to_source_raw()),
            Ty::Sum(l, r) => SourceType::sum(l.to_source_raw(), r.to_source_raw()),
            Ty::Arrow(l, r) => SourceType::arrow(l.to_source_raw(), r.to_source_raw()),
            Ty::Meta(id) => SourceType::Base(format!("?{id}")),
        }
    }
}

struct Infer<'s> {
    sig: &'s Signature,
    metas: Vec<Option<Ty>>,
    path: Vec<&'static str>,
}

impl<'s> Infer<'s> {
    fn fresh(&mut self) -> Ty {
        self.metas.push(None);
        Ty::Meta(self.metas.len() as u32 - 1)
    }

    fn path_str(&self) -> String {
        if self.path.is_empty() {
            "program".to_string()
        } else {
            self.path.join(".")
        }
    }

    /// Follow solved metavariables one level.
    fn resolve(&self, ty: &Ty) -> Ty {
        let mut t = ty.clone();
        while let Ty::Meta(id) = t {
            match &self.metas[id as usize] {
                Some(next) => t = next.clone(),
                None => break,
            }
        }
        t
    }

    /// Fully substitute solved metavariables.
    fn zonk(&self, ty: &Ty) -> Ty {
        match self.resolve(ty) {
            Ty::Prod(l, r) => Ty::Prod(Box::new(self.zonk(&l)), Box::new(self.zonk(&r))),
            Ty::Sum(l, r) => Ty::Sum(Box::new(self.zonk(&l)), Box::new(self.zonk(&r))),
            Ty::Arrow(l, r) => Ty::Arrow(Box::new(self.zonk(&l)), Box::new(self.zonk(&r))),
            other => other,
        }
    }

    /// Zonk with unconstrained metavariables defaulted to `unit`.
    fn zonk_default(&self, ty: &Ty) -> SourceType {
        match self.zonk(ty) {
            Ty::Meta(_) => SourceType::Unit,
            Ty::Base(b) => SourceType::Base(b),
            Ty::Unit => SourceType::Unit,
            Ty::Empty => SourceType::Empty,
            Ty::Prod(l, r) => SourceType::prod(self.zonk_default(&l), self.zonk_default(&r)),
            Ty::Sum(l, r) => SourceType::sum(self.zonk_default(&l), self.zonk_default(&r)),
            Ty::Arrow(l, r) => SourceType::arrow(self.zonk_default(&l), self.zonk_default(&r)),
        }
    }

    fn occurs(&self, id: u32, ty: &Ty) -> bool {
        match self.resolve(ty) {
            Ty::Meta(other) => other == id,
            Ty::Prod(l, r) | Ty::Sum(l, r) | Ty::Arrow(l, r) => {
                self.occurs(id, &l) || self.occurs(id, &r)
            }
            _ => false,
        }
    }

    fn unify(&mut self, a: &Ty, b: &Ty) -> Result<(), TypeError> {
        let (ra, rb) = (self.resolve(a), self.resolve(b));
        match (&ra, &rb) {
            (Ty::Meta(x), Ty::Meta(y)) if x == y => Ok(()),
            (Ty::Meta(id), other) | (other, Ty::Meta(id)) => {
                if self.occurs(*id, other) {
                    return Err(TypeError::Occurs { path: self.path_str() });
                }
                self.metas[*id as usize] = Some(other.clone());
                Ok(())
            }
            (Ty::Base(x), Ty::Base(y)) if x == y => Ok(()),
            (Ty::Unit, Ty::Unit) | (Ty::Empty, Ty::Empty) => Ok(()),
            (Ty::Prod(l1, r1), Ty::Prod(l2, r2))
            | (Ty::Sum(l1, r1), Ty::Sum(l2, r2))
            | (Ty::Arrow(l1, r1), Ty::Arrow(l2, r2)) => {
                self.unify(l1, l2)?;
                self.unify(r1, r2)
            }
            _ => Err(TypeError::Mismatch {
                expected: self.zonk(&ra).to_string(),
                found: self.zonk(&rb).to_string(),
                path: self.path_str(),
            }),
        }
    }

    /// Validate a user-written annotation and convert it.
    fn ann(&self, ty: &SourceType) -> Result<Ty, TypeError> {
        fn first_base(ty: &SourceType) -> Option<&str> {
            match ty {
                SourceType::Base(b) => Some(b),
                SourceType::Unit | SourceType::Empty => None,
                SourceType::Prod(l, r) | SourceType::Sum(l, r) | SourceType::Arrow(l, r) => {
                    first_base(l).or_else(|| first_base(r))
                }
            }
        }
        if let Some(b) = first_base(ty) {
            if !self.sig.base_types.iter().any(|d| d == b) {
                return Err(TypeError::UnknownBase { base: b.to_string(), path: self.path_str() });
            }
        }
        Ok(Ty::from_source(ty))
    }

    fn infer(
        &mut self,
        env: &mut Vec<(String, Ty)>,
        term: &SourceTerm,
    ) -> Result<(SourceTerm, Ty), TypeError> {
        match term {
            SourceTerm::Var(x) => match env.iter().rev().find(|(n, _)| n == x) {
                Some((_, ty)) => Ok((term.clone(), ty.clone())),
                None => Err(TypeError::Unbound { name: x.clone(), path: self.path_str() }),
            },
            SourceTerm::Const(c, m) => {
                let decl = self
                    .sig
                    .lookup_const(c)
                    .map_err(|source| TypeError::Signature { source, path: self.path_str() })?;
                let (ar, car) = (Ty::from_source(&decl.ar), Ty::from_source(&decl.car));
                self.path.push("arg");
                let (m2, tm) = self.infer(env, m)?;
                self.unify(&ar, &tm)?;
                self.path.pop();
                Ok((SourceTerm::constant(c.clone(), m2), car))
            }
            SourceTerm::Op { op, result, arg } => {
                let decl = self
                    .sig
                    .lookup(op)
                    .map_err(|source| TypeError::Signature { source, path: self.path_str() })?;
                let (ar, car) = (Ty::from_source(&decl.ar), Ty::from_source(&decl.car));
                let rho = match result {
                    Some(ty) => self.ann(ty)?,
                    None => self.fresh(),
                };
                self.path.push("arg");
                let (arg2, targ) = self.infer(env, arg)?;
                let want = Ty::Prod(
                    Box::new(Ty::Arrow(Box::new(ar), Box::new(rho.clone()))),
                    Box::new(car),
                );
                self.unify(&want, &targ)?;
                self.path.pop();
                Ok((
                    SourceTerm::Op {
                        op: op.clone(),
                        result: Some(rho.to_source_raw()),
                        arg: Box::new(arg2),
                    },
                    rho,
                ))
            }
            SourceTerm::Unit => Ok((term.clone(), Ty::Unit)),
            SourceTerm::Pair(l, r) => {
                self.path.push("left");
                let (l2, tl) = self.infer(env, l)?;
                self.path.pop();
                self.path.push("right");
                let (r2, tr) = self.infer(env, r)?;
                self.path.pop();
                Ok((SourceTerm::pair(l2, r2), Ty::Prod(Box::new(tl), Box::new(tr))))
            }
            SourceTerm::Proj(side, m) => {
                self.path.push("arg");
                let (m2, tm) = self.infer(env, m)?;
                let (a, b) = (self.fresh(), self.fresh());
                self.unify(&Ty::Prod(Box::new(a.clone()), Box::new(b.clone())), &tm)?;
                self.path.pop();
                let ty = match side {
                    ProjSide::Fst => a,
                    ProjSide::Snd => b,
                };
                Ok((SourceTerm::Proj(*side, Box::new(m2)), ty))
            }
            SourceTerm::Absurd { result, arg } => {
                let rho = match result {
                    Some(ty) => self.ann(ty)?,
                    None => self.fresh(),
                };
                self.path.push("arg");
                let (m2, tm) = self.infer(env, arg)?;
                self.unify(&Ty::Empty, &tm)?;
                self.path.pop();
                Ok((
                    SourceTerm::Absurd { result: Some(rho.to_source_raw()), arg: Box::new(m2) },
                    rho,
                ))
            }
            SourceTerm::Inj(side, other, m) => {
                let other_ty = self.ann(other)?;
                self.path.push("arg");
                let (m2, tm) = self.infer(env, m)?;
                self.path.pop();
                let ty = match side {
                    InjSide::Inl => Ty::Sum(Box::new(tm), Box::new(other_ty)),
                    InjSide::Inr => Ty::Sum(Box::new(other_ty), Box::new(tm)),
                };
                Ok((SourceTerm::Inj(*side, other.clone(), Box::new(m2)), ty))
            }
            SourceTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
                self.path.push("scrutinee");
                let (sc2, tsc) = self.infer(env, scrutinee)?;
                let (a, b) = (self.fresh(), self.fresh());
                self.unify(&Ty::Sum(Box::new(a.clone()), Box::new(b.clone())), &tsc)?;
                self.path.pop();
                self.path.push("inl-branch");
                env.push((left_binder.clone(), a));
                let (l2, tl) = self.infer(env, left)?;
                env.pop();
                self.path.pop();
                self.path.push("inr-branch");
                env.push((right_binder.clone(), b));
                let (r2, tr) = self.infer(env, right)?;
                env.pop();
                self.unify(&tl, &tr)?;
                self.path.pop();
                Ok((
                    SourceTerm::case(sc2, left_binder.clone(), l2, right_binder.clone(), r2),
                    tl,
                ))
            }
            SourceTerm::Lam(x, ty, body) => {
                let tx = self.ann(ty)?;
                self.path.push("body");
                env.push((x.clone(), tx.clone()));
                let (b2, tb) = self.infer(env, body)?;
                env.pop();
                self.path.pop();
                Ok((
                    SourceTerm::lam(x.clone(), ty.clone(), b2),
                    Ty::Arrow(Box::new(tx), Box::new(tb)),
                ))
            }
            SourceTerm::App(f, a) => {
                self.path.push("function");
                let (f2, tf) = self.infer(env, f)?;
                self.path.pop();
                self.path.push("argument");
                let (a2, ta) = self.infer(env, a)?;
                let res = self.fresh();
                self.unify(&Ty::Arrow(Box::new(ta), Box::new(res.clone())), &tf)?;
                self.path.pop();
                Ok((SourceTerm::app(f2, a2), res))
            }
            SourceTerm::LetRec { fname, arg, dom, cod, body, rest } => {
                let tdom = match dom {
                    Some(ty) => self.ann(ty)?,
                    None => self.fresh(),
                };
                let tcod = match cod {
                    Some(ty) => self.ann(ty)?,
                    None => self.fresh(),
                };
                let tf = Ty::Arrow(Box::new(tdom.clone()), Box::new(tcod.clone()));
                self.path.push("letrec-body");
                env.push((fname.clone(), tf));
                env.push((arg.clone(), tdom.clone()));
                let (b2, tb) = self.infer(env, body)?;
                self.unify(&tcod, &tb)?;
                env.pop();
                self.path.pop();
                self.path.push("letrec-rest");
                let (r2, tr) = self.infer(env, rest)?;
                env.pop();
                self.path.pop();
                Ok((
                    SourceTerm::LetRec {
                        fname: fname.clone(),
                        arg: arg.clone(),
                        dom: Some(tdom.to_source_raw()),
                        cod: Some(tcod.to_source_raw()),
                        body: Box::new(b2),
                        rest: Box::new(r2),
                    },
                    tr,
                ))
            }
        }
    }

    /// Resolve `?n` placeholder annotations left by inference.
    fn zonk_annotation(&self, ty: &SourceType) -> SourceType {
        match ty {
            SourceType::Base(b) if b.starts_with('?') => {
                let id: u32 = b[1..].parse().expect("placeholder id");
                self.zonk_default(&Ty::Meta(id))
            }
            SourceType::Base(_) | SourceType::Unit | SourceType::Empty => ty.clone(),
            SourceType::Prod(l, r) => {
                SourceType::prod(self.zonk_annotation(l), self.zonk_annotation(r))
            }
            SourceType::Sum(l, r) => {
                SourceType::sum(self.zonk_annotation(l), self.zonk_annotation(r))
            }
            SourceType::Arrow(l, r) => {
                SourceType::arrow(self.zonk_annotation(l), self.zonk_annotation(r))
            }
        }
    }

    fn zonk_term(&self, term: SourceTerm) -> SourceTerm {
        match term {
            SourceTerm::Op { op, result, arg } => SourceTerm::Op {
                op,
                result: result.map(|t| self.zonk_annotation(&t)),
                arg: Box::new(self.zonk_term(*arg)),
            },
            SourceTerm::LetRec { fname, arg, dom, cod, body, rest } => SourceTerm::LetRec {
                fname,
                arg,
                dom: dom.map(|t| self.zonk_annotation(&t)),
                cod: cod.map(|t| self.zonk_annotation(&t)),
                body: Box::new(self.zonk_term(*body)),
                rest: Box::new(self.zonk_term(*rest)),
            },
            SourceTerm::Const(c, m) => SourceTerm::constant(c, self.zonk_term(*m)),
            SourceTerm::Unit | SourceTerm::Var(_) => term,
            SourceTerm::Pair(l, r) => SourceTerm::pair(self.zonk_term(*l), self.zonk_term(*r)),
            SourceTerm::Proj(s, m) => SourceTerm::Proj(s, Box::new(self.zonk_term(*m))),
            SourceTerm::Absurd { result, arg } => SourceTerm::Absurd {
                result: result.map(|t| self.zonk_annotation(&t)),
                arg: Box::new(self.zonk_term(*arg)),
            },
            SourceTerm::Inj(s, ty, m) => SourceTerm::Inj(s, ty, Box::new(self.zonk_term(*m))),
            SourceTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
                SourceTerm::case(
                    self.zonk_term(*scrutinee),
                    left_binder,
                    self.zonk_term(*left),
                    right_binder,
                    self.zonk_term(*right),
                )
            }
            SourceTerm::Lam(x, ty, body) => SourceTerm::lam(x, ty, self.zonk_term(*body)),
            SourceTerm::App(f, a) => SourceTerm::app(self.zonk_term(*f), self.zonk_term(*a)),
        }
    }
}

/// Infer the type of `term` in `ctx`.
pub fn typecheck(
    sig: &Signature,
    ctx: &TypingContext,
    term: &SourceTerm,
) -> Result<SourceType, TypeError> {
    let mut inf = Infer { sig, metas: Vec::new(), path: Vec::new() };
    let mut env: Vec<(String, Ty)> =
        ctx.entries.iter().map(|(n, t)| (n.clone(), Ty::from_source(t))).collect();
    let (_, ty) = inf.infer(&mut env, term)?;
    Ok(inf.zonk_default(&ty))
}

/// Typecheck a closed program and return it with all inferred annotations
/// (operation result types, `letrec` domain and codomain) filled in.
pub fn elaborate(sig: &Signature, term: &SourceTerm) -> Result<(SourceTerm, SourceType), TypeError> {
    let mut inf = Infer { sig, metas: Vec::new(), path: Vec::new() };
    let mut env = Vec::new();
    let (t2, ty) = inf.infer(&mut env, term)?;
    Ok((inf.zonk_term(t2), inf.zonk_default(&ty)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::parse::parse_program;
    use crate::source::term::OpRef;

    fn cost() -> Signature {
        Signature::builtin_cost()
    }

    fn trace() -> Signature {
        Signature::builtin_trace()
    }

    fn check(sig: &Signature, text: &str) -> SourceType {
        let t = parse_program(sig, text).unwrap();
        typecheck(sig, &TypingContext::empty(), &t).unwrap()
    }

    #[test]
    fn identity_has_arrow_type() {
        assert_eq!(
            check(&trace(), "fun x:unit. x"),
            SourceType::arrow(SourceType::Unit, SourceType::Unit)
        );
    }

    #[test]
    fn tick_call_types_at_unit() {
        assert_eq!(check(&cost(), "tick(())"), SourceType::Unit);
    }

    #[test]
    fn op_node_shape_types_directly() {
        // tick applied to an explicit continuation pair.
        let t = SourceTerm::Op {
            op: OpRef::plain("tick"),
            result: Some(SourceType::Unit),
            arg: Box::new(SourceTerm::pair(
                SourceTerm::lam("x", SourceType::Unit, SourceTerm::Unit),
                SourceTerm::Unit,
            )),
        };
        assert_eq!(typecheck(&cost(), &TypingContext::empty(), &t).unwrap(), SourceType::Unit);
    }

    #[test]
    fn geometric_program_types_at_unit_with_inferred_letrec() {
        let t = parse_program(&cost(), "letrec g x = flip[0.5]((), tick(g ())) in g ()").unwrap();
        let (elab, ty) = elaborate(&cost(), &t).unwrap();
        assert_eq!(ty, SourceType::Unit);
        let SourceTerm::LetRec { dom, cod, .. } = &elab else { panic!("letrec") };
        assert_eq!(*dom, Some(SourceType::Unit));
        assert_eq!(*cod, Some(SourceType::Unit));
    }

    #[test]
    fn unconstrained_letrec_defaults_to_unit() {
        let t = parse_program(&cost(), "letrec f x = f x in f ()").unwrap();
        let (elab, ty) = elaborate(&cost(), &t).unwrap();
        assert_eq!(ty, SourceType::Unit);
        let SourceTerm::LetRec { dom, cod, .. } = &elab else { panic!("letrec") };
        assert_eq!(*dom, Some(SourceType::Unit));
        assert_eq!(*cod, Some(SourceType::Unit));
    }

    #[test]
    fn branch_type_mismatch_is_reported_with_path() {
        let t = parse_program(
            &cost(),
            "fun s:unit + unit. case s of inl a -> () | inr b -> (b, b)",
        )
        .unwrap();
        let err = typecheck(&cost(), &TypingContext::empty(), &t).unwrap_err();
        let TypeError::Mismatch { path, .. } = &err else { panic!("expected mismatch: {err}") };
        assert!(path.contains("inr-branch") || path.contains("body"), "{path}");
    }

    #[test]
    fn unbound_variable_is_reported() {
        let t = SourceTerm::var("ghost");
        assert!(matches!(
            typecheck(&trace(), &TypingContext::empty(), &t),
            Err(TypeError::Unbound { .. })
        ));
    }

    #[test]
    fn unknown_base_type_is_reported() {
        let t = parse_program(&trace(), "fun x:widget. x").unwrap();
        assert!(matches!(
            typecheck(&trace(), &TypingContext::empty(), &t),
            Err(TypeError::UnknownBase { .. })
        ));
    }

    #[test]
    fn occurs_check_fires_on_self_application() {
        let t = parse_program(&trace(), "letrec f x = f f in ()").unwrap();
        assert!(matches!(
            typecheck(&trace(), &TypingContext::empty(), &t),
            Err(TypeError::Occurs { .. })
        ));
    }

    #[test]
    fn constants_apply_at_declared_types() {
        assert_eq!(check(&cost(), "plus (zero (), succ (zero ()))"), SourceType::base("nat"));
        let t = parse_program(&cost(), "succ ()").unwrap();
        assert!(typecheck(&cost(), &TypingContext::empty(), &t).is_err());
    }

    #[test]
    fn weakening_preserves_types() {
        let sig = cost();
        let t = parse_program(&sig, "fun x:nat. plus (x, zero ())").unwrap();
        let mut ctx = TypingContext::empty();
        let ty = typecheck(&sig, &ctx, &t).unwrap();
        assert!(ctx.insert("unused", SourceType::prod(SourceType::Unit, SourceType::base("real"))));
        assert_eq!(typecheck(&sig, &ctx, &t).unwrap(), ty);
    }
}
