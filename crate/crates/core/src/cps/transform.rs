//! Continuation-passing translation of programs into logic formulas.
//!
//! A term `M : rho` becomes a formula transformer of type
//! `(rho' -> R) -> R`, where `rho'` translates types by sending
//! `rho -> tau` to `(rho' * (tau' -> R)) -> R` and fixing ground structure.
//! Applying the result to a postcondition predicate yields the weakest
//! precondition of `M` as a single formula; recursion turns into a
//! recursive predicate taken at the greatest fixed point.
//!
//! Input terms must be closed and elaborated (operation results, `letrec`
//! and `absurd` annotations present).

use thiserror::Error;

use crate::source::signature::{Signature, SignatureError};
use crate::source::term::{ProjSide, SourceTerm};
use crate::source::types::SourceType;
use crate::target::term::{NameGen, Pattern, TargetTerm};
use crate::target::types::TargetType;

#[derive(Debug, Error)]
pub enum CpsError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("term is not elaborated: missing {0} annotation")]
    NotElaborated(&'static str),
    #[error("ill-typed term reached the transform: {0}")]
    IllTyped(String),
    #[error(transparent)]
    Signature(#[from] SignatureError),
}

/// Type translation. Ground types map to themselves; a function type
/// `rho -> tau` becomes the predicate-transformer domain
/// `(rho' * (tau' -> R)) -> R`.
pub fn cps_type(ty: &SourceType) -> TargetType {
    match ty {
        SourceType::Base(b) => TargetType::Base(b.clone()),
        SourceType::Unit => TargetType::Unit,
        SourceType::Empty => TargetType::Empty,
        SourceType::Prod(l, r) => TargetType::prod(cps_type(l), cps_type(r)),
        SourceType::Sum(l, r) => TargetType::sum(cps_type(l), cps_type(r)),
        SourceType::Arrow(dom, cod) => TargetType::pred(TargetType::prod(
            cps_type(dom),
            TargetType::pred(cps_type(cod)),
        )),
    }
}

/// Continuation type `rho' -> R` for a term of type `rho`.
fn cont_type(ty: &SourceType) -> TargetType {
    TargetType::pred(cps_type(ty))
}

#[derive(Debug, Clone)]
pub struct CpsOutput {
    /// The translated formula, administratively unreduced.
    pub term: TargetTerm,
    /// Type of the source program.
    pub source_ty: SourceType,
    /// Type of `term`: `(rho' -> R) -> R`.
    pub target_ty: TargetType,
}

struct Cps<'s> {
    sig: &'s Signature,
    gen: NameGen,
}

impl<'s> Cps<'s> {
    fn go(
        &mut self,
        env: &mut Vec<(String, SourceType)>,
        term: &SourceTerm,
    ) -> Result<(TargetTerm, SourceType), CpsError> {
        match term {
            SourceTerm::Var(x) => {
                let ty = env
                    .iter()
                    .rev()
                    .find(|(n, _)| n == x)
                    .map(|(_, t)| t.clone())
                    .ok_or_else(|| CpsError::Unbound(x.clone()))?;
                let k = self.gen.fresh("k");
                let t = TargetTerm::lam1(
                    &k,
                    Some(cont_type(&ty)),
                    TargetTerm::app(TargetTerm::var(&k), TargetTerm::var(x)),
                );
                Ok((t, ty))
            }
            SourceTerm::Const(c, m) => {
                let decl = self.sig.lookup_const(c)?;
                let (ar, car) = (decl.ar.clone(), decl.car.clone());
                let k = self.gen.fresh("k");
                let v = self.gen.fresh("m");
                let (tm, _) = self.go(env, m)?;
                let inner = TargetTerm::lam1(
                    &v,
                    Some(cps_type(&ar)),
                    TargetTerm::app(
                        TargetTerm::var(&k),
                        TargetTerm::constant(c.clone(), TargetTerm::var(&v)),
                    ),
                );
                let t = TargetTerm::lam1(
                    &k,
                    Some(cont_type(&car)),
                    TargetTerm::app(tm, inner),
                );
                Ok((t, car))
            }
            SourceTerm::Op { op, result, arg } => {
                let decl = self.sig.lookup(op)?;
                let (ar, car) = (decl.ar.clone(), decl.car.clone());
                let rho = result.clone().ok_or(CpsError::NotElaborated("operation result"))?;
                let k = self.gen.fresh("k");
                let m1 = self.gen.fresh("m");
                let m2 = self.gen.fresh("m");
                let x = self.gen.fresh("x");
                let (tm, _) = self.go(env, arg)?;
                let arty = cps_type(&ar);
                let cont_lam = TargetTerm::lam1(
                    &x,
                    Some(arty.clone()),
                    TargetTerm::app(
                        TargetTerm::var(&m1),
                        TargetTerm::pair(TargetTerm::var(&x), TargetTerm::var(&k)),
                    ),
                );
                let modal = TargetTerm::modal(
                    op.clone(),
                    TargetTerm::pair(cont_lam, TargetTerm::var(&m2)),
                );
                let pair_ty = TargetType::prod(
                    TargetType::pred(TargetType::prod(arty, cont_type(&rho))),
                    cps_type(&car),
                );
                let inner = TargetTerm::lam(
                    Pattern::pair(Pattern::var(&m1), Pattern::var(&m2)),
                    Some(pair_ty),
                    modal,
                );
                let t = TargetTerm::lam1(
                    &k,
                    Some(cont_type(&rho)),
                    TargetTerm::app(tm, inner),
                );
                Ok((t, rho))
            }
            SourceTerm::Unit => {
                let k = self.gen.fresh("k");
                let t = TargetTerm::lam1(
                    &k,
                    Some(cont_type(&SourceType::Unit)),
                    TargetTerm::app(TargetTerm::var(&k), TargetTerm::Unit),
                );
                Ok((t, SourceType::Unit))
            }
            SourceTerm::Pair(l, r) => {
                let k = self.gen.fresh("k");
                let m1 = self.gen.fresh("m");
                let m2 = self.gen.fresh("m");
                let (t1, ty1) = self.go(env, l)?;
                let (t2, ty2) = self.go(env, r)?;
                let prod = SourceType::prod(ty1.clone(), ty2.clone());
                let body = TargetTerm::app(
                    t1,
                    TargetTerm::lam1(
                        &m1,
                        Some(cps_type(&ty1)),
                        TargetTerm::app(
                            t2,
                            TargetTerm::lam1(
                                &m2,
                                Some(cps_type(&ty2)),
                                TargetTerm::app(
                                    TargetTerm::var(&k),
                                    TargetTerm::pair(TargetTerm::var(&m1), TargetTerm::var(&m2)),
                                ),
                            ),
                        ),
                    ),
                );
                Ok((TargetTerm::lam1(&k, Some(cont_type(&prod)), body), prod))
            }
            SourceTerm::Proj(side, m) => {
                let k = self.gen.fresh("k");
                let v = self.gen.fresh("m");
                let (tm, tym) = self.go(env, m)?;
                let SourceType::Prod(a, b) = &tym else {
                    return Err(CpsError::IllTyped(format!(
                        "projection from non-product type `{tym}`"
                    )));
                };
                let rho = match side {
                    ProjSide::Fst => (**a).clone(),
                    ProjSide::Snd => (**b).clone(),
                };
                let body = TargetTerm::app(
                    tm,
                    TargetTerm::lam1(
                        &v,
                        Some(cps_type(&tym)),
                        TargetTerm::app(
                            TargetTerm::var(&k),
                            TargetTerm::Proj(*side, Box::new(TargetTerm::var(&v))),
                        ),
                    ),
                );
                Ok((TargetTerm::lam1(&k, Some(cont_type(&rho)), body), rho))
            }
            SourceTerm::Absurd { result, arg } => {
                let rho = result.clone().ok_or(CpsError::NotElaborated("absurd result"))?;
                let k = self.gen.fresh("k");
                let v = self.gen.fresh("m");
                let (tm, _) = self.go(env, arg)?;
                // The continuation is discarded: no value ever arrives.
                let body = TargetTerm::app(
                    tm,
                    TargetTerm::lam1(
                        &v,
                        Some(TargetType::Empty),
                        TargetTerm::absurd(TargetTerm::var(&v)),
                    ),
                );
                Ok((TargetTerm::lam1(&k, Some(cont_type(&rho)), body), rho))
            }
            SourceTerm::Inj(side, other, m) => {
                let k = self.gen.fresh("k");
                let v = self.gen.fresh("m");
                let (tm, tym) = self.go(env, m)?;
                let sum = match side {
                    crate::source::term::InjSide::Inl => {
                        SourceType::sum(tym.clone(), other.clone())
                    }
                    crate::source::term::InjSide::Inr => {
                        SourceType::sum(other.clone(), tym.clone())
                    }
                };
                let body = TargetTerm::app(
                    tm,
                    TargetTerm::lam1(
                        &v,
                        Some(cps_type(&tym)),
                        TargetTerm::app(
                            TargetTerm::var(&k),
                            TargetTerm::Inj(*side, cps_type(other), Box::new(TargetTerm::var(&v))),
                        ),
                    ),
                );
                Ok((TargetTerm::lam1(&k, Some(cont_type(&sum)), body), sum))
            }
            SourceTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
                let k = self.gen.fresh("k");
                let v = self.gen.fresh("m");
                let (tsc, tysc) = self.go(env, scrutinee)?;
                let SourceType::Sum(a, b) = &tysc else {
                    return Err(CpsError::IllTyped(format!(
                        "case on non-sum type `{tysc}`"
                    )));
                };
                env.push((left_binder.clone(), (**a).clone()));
                let (tl, tyl) = self.go(env, left)?;
                env.pop();
                env.push((right_binder.clone(), (**b).clone()));
                let (tr, _) = self.go(env, right)?;
                env.pop();
                let body = TargetTerm::app(
                    tsc,
                    TargetTerm::lam1(
                        &v,
                        Some(cps_type(&tysc)),
                        TargetTerm::case(
                            TargetTerm::var(&v),
                            left_binder.clone(),
                            TargetTerm::app(tl, TargetTerm::var(&k)),
                            right_binder.clone(),
                            TargetTerm::app(tr, TargetTerm::var(&k)),
                        ),
                    ),
                );
                Ok((TargetTerm::lam1(&k, Some(cont_type(&tyl)), body), tyl))
            }
            SourceTerm::Lam(x, dom, body) => {
                let k = self.gen.fresh("k");
                let h = self.gen.fresh("k");
                env.push((x.clone(), dom.clone()));
                let (tm, cod) = self.go(env, body)?;
                env.pop();
                let fun_ty = SourceType::arrow(dom.clone(), cod.clone());
                let value = TargetTerm::lam(
                    Pattern::pair(Pattern::var(x), Pattern::var(&h)),
                    Some(TargetType::prod(cps_type(dom), cont_type(&cod))),
                    TargetTerm::app(tm, TargetTerm::var(&h)),
                );
                let t = TargetTerm::lam1(
                    &k,
                    Some(cont_type(&fun_ty)),
                    TargetTerm::app(TargetTerm::var(&k), value),
                );
                Ok((t, fun_ty))
            }
            SourceTerm::App(f, a) => {
                let k = self.gen.fresh("k");
                let m = self.gen.fresh("m");
                let n = self.gen.fresh("n");
                let (tf, tyf) = self.go(env, f)?;
                let (ta, _) = self.go(env, a)?;
                let SourceType::Arrow(dom, cod) = &tyf else {
                    return Err(CpsError::IllTyped(format!(
                        "application of non-function type `{tyf}`"
                    )));
                };
                let body = TargetTerm::app(
                    tf,
                    TargetTerm::lam1(
                        &m,
                        Some(cps_type(&tyf)),
                        TargetTerm::app(
                            ta,
                            TargetTerm::lam1(
                                &n,
                                Some(cps_type(dom)),
                                TargetTerm::app(
                                    TargetTerm::var(&m),
                                    TargetTerm::pair(TargetTerm::var(&n), TargetTerm::var(&k)),
                                ),
                            ),
                        ),
                    ),
                );
                Ok((TargetTerm::lam1(&k, Some(cont_type(cod)), body), (**cod).clone()))
            }
            SourceTerm::LetRec { fname, arg, dom, cod, body, rest } => {
                let dom = dom.clone().ok_or(CpsError::NotElaborated("letrec domain"))?;
                let cod = cod.clone().ok_or(CpsError::NotElaborated("letrec codomain"))?;
                let h = self.gen.fresh("h");
                let fun_ty = SourceType::arrow(dom.clone(), cod.clone());
                env.push((fname.clone(), fun_ty.clone()));
                env.push((arg.clone(), dom.clone()));
                let (tm, _) = self.go(env, body)?;
                env.pop();
                let (tn, tyn) = self.go(env, rest)?;
                env.pop();
                let t = TargetTerm::letrec(
                    fname.clone(),
                    Pattern::pair(Pattern::var(arg), Pattern::var(&h)),
                    Some(TargetType::prod(cps_type(&dom), cont_type(&cod))),
                    TargetTerm::app(tm, TargetTerm::var(&h)),
                    tn,
                );
                Ok((t, tyn))
            }
        }
    }
}

/// Translate a closed, elaborated program.
pub fn cps_term(sig: &Signature, term: &SourceTerm) -> Result<CpsOutput, CpsError> {
    let mut cps = Cps { sig, gen: NameGen::avoiding(term.all_names()) };
    let (t, source_ty) = cps.go(&mut Vec::new(), term)?;
    let target_ty = TargetType::pred(TargetType::pred(cps_type(&source_ty)));
    Ok(CpsOutput { term: t, source_ty, target_ty })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::parse::parse_program;
    use crate::source::typecheck::elaborate;
    use crate::target::typecheck::typecheck_target;

    fn transform(sig: &Signature, text: &str) -> CpsOutput {
        let t = parse_program(sig, text).unwrap();
        let (t, _) = elaborate(sig, &t).unwrap();
        cps_term(sig, &t).unwrap()
    }

    #[test]
    fn ground_types_translate_to_themselves() {
        let ty = SourceType::prod(
            SourceType::sum(SourceType::Unit, SourceType::base("nat")),
            SourceType::Empty,
        );
        assert_eq!(
            cps_type(&ty),
            crate::target::typecheck::ground_to_target(&ty).unwrap()
        );
    }

    #[test]
    fn arrow_translation_nests_continuations() {
        let ty = SourceType::arrow(SourceType::Unit, SourceType::Unit);
        assert_eq!(cps_type(&ty).to_string(), "unit * (unit -> R) -> R");
    }

    #[test]
    fn output_typechecks_at_double_negation_type() {
        let sig = Signature::builtin_cost();
        for src in [
            "fun x:unit. x",
            "tick(())",
            "letrec g x = flip[0.5]((), tick(g ())) in g ()",
            "(fun p:nat * nat. fst p) (zero (), succ (zero ()))",
        ] {
            let out = transform(&sig, src);
            let ty = typecheck_target(&sig, &[], &out.term).unwrap();
            assert_eq!(ty, out.target_ty, "program: {src}");
        }
    }

    #[test]
    fn raw_identity_shape() {
        let out = transform(&Signature::builtin_trace(), "fun x:unit. x");
        // \k0. k0 (\(x, k1). (\k2. k2 x) k1), administratively unreduced.
        let TargetTerm::Lam(_, _, body) = &out.term else { panic!("lam") };
        let TargetTerm::App(_, arg) = &**body else { panic!("app") };
        let TargetTerm::Lam(pat, _, _) = &**arg else { panic!("inner lam") };
        assert_eq!(pat.to_string(), "(x, k1)");
    }

    #[test]
    fn letrec_output_is_letrec_headed() {
        let sig = Signature::builtin_cost();
        let out = transform(&sig, "letrec g x = flip[0.5]((), tick(g ())) in g ()");
        assert!(matches!(out.term, TargetTerm::LetRecPred { .. }));
        assert_eq!(out.target_ty.to_string(), "(unit -> R) -> R");
    }

    #[test]
    fn unelaborated_input_is_rejected() {
        let sig = Signature::builtin_cost();
        let t = parse_program(&sig, "tick(())").unwrap();
        assert!(matches!(
            cps_term(&sig, &t),
            Err(CpsError::NotElaborated(_))
        ));
    }
}
