//! Administrative normalization of translated formulas.
//!
//! The translation wraps every clause in continuation redexes; this pass
//! removes them so modalities regain their canonical argument shape and the
//! formula prints the way it reads on paper. Reductions, applied bottom-up
//! to a fixed point under a step budget:
//!
//! - beta on value arguments (pattern binders bind pair components, with
//!   projection fallback for non-pair values)
//! - projection of literal pairs with value components
//! - case on a literal injection of a value
//! - hoisting a lambda out of a `letrec` tail, and pushing a value
//!   application into one, so translated recursive programs become
//!   lambda-headed
//!
//! Evaluation does not depend on this pass; it only makes formulas
//! presentable and gives the instance rewrites their canonical shapes.

use std::collections::BTreeSet;

use crate::target::term::{NameGen, Pattern, TargetTerm};

const DEFAULT_FUEL: u64 = 100_000;

pub fn normalize(term: &TargetTerm) -> TargetTerm {
    normalize_with_fuel(term, DEFAULT_FUEL)
}

pub fn normalize_with_fuel(term: &TargetTerm, fuel: u64) -> TargetTerm {
    let mut n = Normalizer { gen: NameGen::avoiding(term.all_names()), fuel };
    n.norm(term)
}

struct Normalizer {
    gen: NameGen,
    fuel: u64,
}

fn is_value(t: &TargetTerm) -> bool {
    match t {
        TargetTerm::Var(_)
        | TargetTerm::Unit
        | TargetTerm::Lam(_, _, _)
        | TargetTerm::True
        | TargetTerm::False
        | TargetTerm::WeightLit(_) => true,
        TargetTerm::Pair(l, r) => is_value(l) && is_value(r),
        TargetTerm::Inj(_, _, m) | TargetTerm::Const(_, m) => is_value(m),
        _ => false,
    }
}

impl Normalizer {
    fn norm(&mut self, t: &TargetTerm) -> TargetTerm {
        let t = self.norm_children(t);
        if self.fuel == 0 {
            return t;
        }
        match self.root_step(&t) {
            Some(stepped) => {
                self.fuel -= 1;
                self.norm(&stepped)
            }
            None => t,
        }
    }

    fn norm_children(&mut self, t: &TargetTerm) -> TargetTerm {
        match t {
            TargetTerm::Var(_)
            | TargetTerm::Unit
            | TargetTerm::True
            | TargetTerm::False
            | TargetTerm::WeightLit(_) => t.clone(),
            TargetTerm::Const(c, m) => TargetTerm::constant(c.clone(), self.norm(m)),
            TargetTerm::Modal(op, m) => TargetTerm::modal(op.clone(), self.norm(m)),
            TargetTerm::Proj(s, m) => TargetTerm::Proj(*s, Box::new(self.norm(m))),
            TargetTerm::Absurd(m) => TargetTerm::absurd(self.norm(m)),
            TargetTerm::Inj(s, ty, m) => TargetTerm::Inj(*s, ty.clone(), Box::new(self.norm(m))),
            TargetTerm::Pair(l, r) => TargetTerm::pair(self.norm(l), self.norm(r)),
            TargetTerm::App(l, r) => TargetTerm::app(self.norm(l), self.norm(r)),
            TargetTerm::And(l, r) => TargetTerm::and(self.norm(l), self.norm(r)),
            TargetTerm::Or(l, r) => TargetTerm::or(self.norm(l), self.norm(r)),
            TargetTerm::Implies(l, r) => TargetTerm::implies(self.norm(l), self.norm(r)),
            TargetTerm::Add(l, r) => TargetTerm::add(self.norm(l), self.norm(r)),
            TargetTerm::Mul(l, r) => TargetTerm::mul(self.norm(l), self.norm(r)),
            TargetTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
                TargetTerm::case(
                    self.norm(scrutinee),
                    left_binder.clone(),
                    self.norm(left),
                    right_binder.clone(),
                    self.norm(right),
                )
            }
            TargetTerm::Lam(pat, ty, body) => {
                TargetTerm::lam(pat.clone(), ty.clone(), self.norm(body))
            }
            TargetTerm::LetRecPred { fname, pat, dom, body, rest } => TargetTerm::letrec(
                fname.clone(),
                pat.clone(),
                dom.clone(),
                self.norm(body),
                self.norm(rest),
            ),
            TargetTerm::Forall(x, ty, body) => {
                TargetTerm::Forall(x.clone(), ty.clone(), Box::new(self.norm(body)))
            }
            TargetTerm::Exists(x, ty, body) => {
                TargetTerm::Exists(x.clone(), ty.clone(), Box::new(self.norm(body)))
            }
        }
    }

    fn root_step(&mut self, t: &TargetTerm) -> Option<TargetTerm> {
        match t {
            TargetTerm::App(f, arg) => match &**f {
                TargetTerm::Lam(pat, _, body) if is_value(arg) => {
                    Some(self.beta(pat, body, arg))
                }
                TargetTerm::LetRecPred { fname, pat, dom, body, rest } if is_value(arg) => {
                    // Push the application into the tail; rename the bound
                    // predicate if the argument mentions its name.
                    let (fname, body, rest) = if arg.free_vars().contains(fname) {
                        let fresh = self.gen.fresh(fname);
                        (
                            fresh.clone(),
                            body.rename_free(fname, &fresh),
                            rest.rename_free(fname, &fresh),
                        )
                    } else {
                        (fname.clone(), (**body).clone(), (**rest).clone())
                    };
                    Some(TargetTerm::letrec(
                        fname,
                        pat.clone(),
                        dom.clone(),
                        body,
                        TargetTerm::app(rest, (**arg).clone()),
                    ))
                }
                _ => None,
            },
            TargetTerm::Proj(side, m) => match &**m {
                TargetTerm::Pair(a, b) if is_value(a) && is_value(b) => Some(match side {
                    crate::source::term::ProjSide::Fst => (**a).clone(),
                    crate::source::term::ProjSide::Snd => (**b).clone(),
                }),
                _ => None,
            },
            TargetTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
                match &**scrutinee {
                    TargetTerm::Inj(side, _, v) if is_value(v) => {
                        let (binder, branch) = match side {
                            crate::source::term::InjSide::Inl => (left_binder, left),
                            crate::source::term::InjSide::Inr => (right_binder, right),
                        };
                        Some(self.beta(&Pattern::var(binder), branch, v))
                    }
                    _ => None,
                }
            }
            TargetTerm::LetRecPred { fname, pat, dom, body, rest } => match &**rest {
                TargetTerm::Lam(q, qty, lam_body) => {
                    // letrec f p = B in \q. M  ~>  \q. letrec f p = B in M,
                    // renaming q's binders if the letrec would capture them.
                    let clash: BTreeSet<String> = {
                        let mut s: BTreeSet<String> =
                            body.free_vars().into_iter().collect();
                        s.insert(fname.clone());
                        for n in pat.names() {
                            s.insert(n.to_string());
                        }
                        s
                    };
                    let mut q = q.clone();
                    let mut lam_body = (**lam_body).clone();
                    for name in q.names().iter().map(|s| s.to_string()).collect::<Vec<_>>() {
                        if clash.contains(&name) {
                            let fresh = self.gen.fresh(&name);
                            lam_body = lam_body.rename_free(&name, &fresh);
                            q = rename_pat(&q, &name, &fresh);
                        }
                    }
                    Some(TargetTerm::lam(
                        q,
                        qty.clone(),
                        TargetTerm::letrec(
                            fname.clone(),
                            pat.clone(),
                            dom.clone(),
                            (**body).clone(),
                            lam_body,
                        ),
                    ))
                }
                _ => None,
            },
            _ => None,
        }
    }

    /// Beta-reduce `(\pat. body) arg` for a value `arg`. Pattern leaves bind
    /// the matching component of the value, descending through literal pairs
    /// and falling back to projections otherwise. Binders whose names occur
    /// free in the bound values are freshened first, making the sequential
    /// substitutions simultaneous.
    fn beta(&mut self, pat: &Pattern, body: &TargetTerm, arg: &TargetTerm) -> TargetTerm {
        let mut pairs = Vec::new();
        collect_bindings(pat, arg, &mut pairs);
        let mut val_free = BTreeSet::new();
        for (_, v) in &pairs {
            val_free.extend(v.free_vars());
        }
        let mut body = body.clone();
        for (name, _) in pairs.iter_mut().map(|p| (&mut p.0, ())) {
            if val_free.contains(name.as_str()) {
                let fresh = self.gen.fresh(name);
                body = body.rename_free(name, &fresh);
                *name = fresh;
            }
        }
        for (name, val) in &pairs {
            body = body.substitute(name, val, &mut self.gen);
        }
        body
    }
}

fn collect_bindings(pat: &Pattern, arg: &TargetTerm, out: &mut Vec<(String, TargetTerm)>) {
    match (pat, arg) {
        (Pattern::Var(x), v) => out.push((x.clone(), v.clone())),
        (Pattern::Pair(p, q), TargetTerm::Pair(a, b)) => {
            collect_bindings(p, a, out);
            collect_bindings(q, b, out);
        }
        (Pattern::Pair(p, q), v) => {
            collect_bindings(p, &TargetTerm::fst(v.clone()), out);
            collect_bindings(q, &TargetTerm::snd(v.clone()), out);
        }
    }
}

fn rename_pat(pat: &Pattern, from: &str, to: &str) -> Pattern {
    match pat {
        Pattern::Var(x) if x == from => Pattern::var(to),
        Pattern::Var(_) => pat.clone(),
        Pattern::Pair(l, r) => Pattern::pair(rename_pat(l, from, to), rename_pat(r, from, to)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::parse::parse_program;
    use crate::source::signature::Signature;
    use crate::source::typecheck::elaborate;
    use crate::cps::transform::cps_term;
    use crate::target::parse::parse_formula;
    use crate::target::print::print_term;

    fn pipeline(sig: &Signature, text: &str) -> TargetTerm {
        let t = parse_program(sig, text).unwrap();
        let (t, _) = elaborate(sig, &t).unwrap();
        normalize(&cps_term(sig, &t).unwrap().term)
    }

    #[test]
    fn identity_reduces_to_printed_form() {
        let t = pipeline(&Signature::builtin_trace(), "fun x:unit. x");
        assert_eq!(print_term(&t), "\\k0. k0 (\\(x, k1). k1 x)");
    }

    #[test]
    fn recursive_program_becomes_lambda_headed() {
        let t = pipeline(
            &Signature::builtin_cost(),
            "letrec g x = flip[0.5]((), tick(g ())) in g ()",
        );
        let expected = parse_formula(
            None,
            "\\k. letrec g (x, h) = flip[0.5]{h (), tick{g ((), h)}} in g ((), k)",
        )
        .unwrap();
        assert!(
            t.alpha_eq_shape(&expected),
            "normalized to: {}",
            print_term(&t)
        );
    }

    #[test]
    fn beta_avoids_capture() {
        // (\x. \y. x) y  must not capture the free y.
        let t = TargetTerm::app(
            TargetTerm::lam1(
                "x",
                None,
                TargetTerm::lam1("y", None, TargetTerm::app(TargetTerm::var("x"), TargetTerm::Unit)),
            ),
            TargetTerm::var("y"),
        );
        let n = normalize(&t);
        let TargetTerm::Lam(Pattern::Var(b), _, body) = &n else { panic!("lam") };
        assert_ne!(b, "y");
        assert_eq!(**body, TargetTerm::app(TargetTerm::var("y"), TargetTerm::Unit));
    }

    #[test]
    fn case_of_injection_selects_branch() {
        let sig = Signature::builtin_trace();
        let t = pipeline(&sig, "case inl[unit] () of inl a -> a | inr b -> b");
        assert_eq!(print_term(&t), "\\k0. k0 ()");
    }

    #[test]
    fn constant_arguments_stay_applied() {
        let t = pipeline(&Signature::builtin_cost(), "succ (zero ())");
        assert_eq!(print_term(&t), "\\k0. k0 (succ (zero ()))");
    }

    #[test]
    fn fuel_zero_returns_input_unchanged() {
        let t = TargetTerm::app(
            TargetTerm::lam1("x", None, TargetTerm::var("x")),
            TargetTerm::Unit,
        );
        assert_eq!(normalize_with_fuel(&t, 0), t);
    }
}
