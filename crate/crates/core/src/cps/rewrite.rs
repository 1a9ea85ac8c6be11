//! Instance-specific elimination of modalities.
//!
//! After normalization every modality coming out of the translation has the
//! canonical argument shape `op[i]{A1, ..., An}`. For a fixed answer
//! instance some modalities are definable from the logic's own connectives,
//! and replacing them early keeps evaluation on the small connective core:
//!
//! - trace instance: `choice{A, B}` becomes `A /\ B`; `event` modalities
//!   stay, since only the answer algebra knows the automaton.
//! - cost instance: `tick{A}` becomes `1 + A` and `flip[p]{A, B}` becomes
//!   `p * A + (1 - p) * B`; `unif` stays, since integration is not
//!   expressible by finite sums.
//!
//! A rewritable modality that is not in canonical shape is an error rather
//! than a silent passthrough: leaving one behind would change the meaning
//! the evaluator assigns to the formula.

use thiserror::Error;

use crate::source::term::OpIndex;
use crate::target::term::{canonical_branches, TargetTerm};

#[derive(Debug, Error)]
pub enum RewriteError {
    #[error("modality `{op}` is not in canonical shape; normalize the formula first")]
    NonCanonical { op: String },
    #[error("modality `{op}` has {got} branches where {want} are expected")]
    BranchCount { op: String, want: usize, got: usize },
    #[error("modality `{op}` needs a numeric index")]
    MissingIndex { op: String },
}

/// Replace `choice` modalities by conjunction. Safety of the trace reading
/// needs every nondeterministic branch to satisfy the property.
pub fn rewrite_trace(term: &TargetTerm) -> Result<TargetTerm, RewriteError> {
    rewrite(term, &|op, idx, branches| match op {
        "choice" => {
            let [a, b] = two(op, branches)?;
            let _ = idx;
            Ok(Some(TargetTerm::and(a, b)))
        }
        _ => Ok(None),
    })
}

/// Replace counting modalities by weighted arithmetic: each `tick` costs 1,
/// and `flip[p]` mixes its branches by p and 1 - p.
pub fn rewrite_cost(term: &TargetTerm) -> Result<TargetTerm, RewriteError> {
    rewrite(term, &|op, idx, branches| match op {
        "tick" => {
            let [a] = one(op, branches)?;
            Ok(Some(TargetTerm::add(TargetTerm::weight(1.0), a)))
        }
        "flip" => {
            let p = match idx {
                Some(OpIndex::Num(p)) => *p,
                _ => return Err(RewriteError::MissingIndex { op: op.to_string() }),
            };
            let [a, b] = two(op, branches)?;
            Ok(Some(TargetTerm::add(
                TargetTerm::mul(TargetTerm::weight(p), a),
                TargetTerm::mul(TargetTerm::weight(1.0 - p), b),
            )))
        }
        _ => Ok(None),
    })
}

type Rule<'a> =
    &'a dyn Fn(&str, Option<&OpIndex>, Vec<TargetTerm>) -> Result<Option<TargetTerm>, RewriteError>;

fn one(op: &str, branches: Vec<TargetTerm>) -> Result<[TargetTerm; 1], RewriteError> {
    let got = branches.len();
    branches
        .try_into()
        .map_err(|_| RewriteError::BranchCount { op: op.to_string(), want: 1, got })
}

fn two(op: &str, branches: Vec<TargetTerm>) -> Result<[TargetTerm; 2], RewriteError> {
    let got = branches.len();
    branches
        .try_into()
        .map_err(|_| RewriteError::BranchCount { op: op.to_string(), want: 2, got })
}

fn rewrite(term: &TargetTerm, rule: Rule) -> Result<TargetTerm, RewriteError> {
    let t = map_children(term, rule)?;
    if let TargetTerm::Modal(op, arg) = &t {
        let covered = matches!(op.name.as_str(), "choice" | "tick" | "flip");
        match canonical_branches(arg) {
            Some(branches) => {
                let branches: Vec<TargetTerm> = branches.into_iter().cloned().collect();
                if let Some(replaced) = rule(&op.name, op.index.as_ref(), branches)? {
                    return Ok(replaced);
                }
            }
            None => {
                // The rule set would fire on this operation, so a shape it
                // cannot take apart is a hard error, not a passthrough.
                if covered
                    && rule(&op.name, op.index.as_ref(), Vec::new())
                        .map(|r| r.is_some())
                        .unwrap_or(true)
                {
                    return Err(RewriteError::NonCanonical { op: op.name.clone() });
                }
            }
        }
    }
    Ok(t)
}

fn map_children(t: &TargetTerm, rule: Rule) -> Result<TargetTerm, RewriteError> {
    Ok(match t {
        TargetTerm::Var(_)
        | TargetTerm::Unit
        | TargetTerm::True
        | TargetTerm::False
        | TargetTerm::WeightLit(_) => t.clone(),
        TargetTerm::Const(c, m) => TargetTerm::constant(c.clone(), rewrite(m, rule)?),
        TargetTerm::Modal(op, m) => TargetTerm::modal(op.clone(), rewrite(m, rule)?),
        TargetTerm::Proj(s, m) => TargetTerm::Proj(*s, Box::new(rewrite(m, rule)?)),
        TargetTerm::Absurd(m) => TargetTerm::absurd(rewrite(m, rule)?),
        TargetTerm::Inj(s, ty, m) => {
            TargetTerm::Inj(*s, ty.clone(), Box::new(rewrite(m, rule)?))
        }
        TargetTerm::Pair(l, r) => TargetTerm::pair(rewrite(l, rule)?, rewrite(r, rule)?),
        TargetTerm::App(l, r) => TargetTerm::app(rewrite(l, rule)?, rewrite(r, rule)?),
        TargetTerm::And(l, r) => TargetTerm::and(rewrite(l, rule)?, rewrite(r, rule)?),
        TargetTerm::Or(l, r) => TargetTerm::or(rewrite(l, rule)?, rewrite(r, rule)?),
        TargetTerm::Implies(l, r) => {
            TargetTerm::implies(rewrite(l, rule)?, rewrite(r, rule)?)
        }
        TargetTerm::Add(l, r) => TargetTerm::add(rewrite(l, rule)?, rewrite(r, rule)?),
        TargetTerm::Mul(l, r) => TargetTerm::mul(rewrite(l, rule)?, rewrite(r, rule)?),
        TargetTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
            TargetTerm::case(
                rewrite(scrutinee, rule)?,
                left_binder.clone(),
                rewrite(left, rule)?,
                right_binder.clone(),
                rewrite(right, rule)?,
            )
        }
        TargetTerm::Lam(pat, ty, body) => {
            TargetTerm::lam(pat.clone(), ty.clone(), rewrite(body, rule)?)
        }
        TargetTerm::LetRecPred { fname, pat, dom, body, rest } => TargetTerm::letrec(
            fname.clone(),
            pat.clone(),
            dom.clone(),
            rewrite(body, rule)?,
            rewrite(rest, rule)?,
        ),
        TargetTerm::Forall(x, ty, body) => {
            TargetTerm::Forall(x.clone(), ty.clone(), Box::new(rewrite(body, rule)?))
        }
        TargetTerm::Exists(x, ty, body) => {
            TargetTerm::Exists(x.clone(), ty.clone(), Box::new(rewrite(body, rule)?))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cps::normalize::normalize;
    use crate::cps::transform::cps_term;
    use crate::source::parse::parse_program;
    use crate::source::signature::Signature;
    use crate::source::typecheck::elaborate;
    use crate::target::parse::parse_formula;
    use crate::target::print::print_term;

    fn translated(sig: &Signature, text: &str) -> TargetTerm {
        let t = parse_program(sig, text).unwrap();
        let (t, _) = elaborate(sig, &t).unwrap();
        normalize(&cps_term(sig, &t).unwrap().term)
    }

    #[test]
    fn cost_rewrites_random_walk_body_to_arithmetic() {
        let sig = Signature::builtin_cost();
        let t = translated(&sig, "letrec g x = flip[0.5]((), tick(g ())) in g ()");
        let r = rewrite_cost(&t).unwrap();
        let expected = parse_formula(
            None,
            "\\k. letrec g (x, h) = 0.5 * h () + 0.5 * (1 + g ((), h)) in g ((), k)",
        )
        .unwrap();
        assert!(r.alpha_eq_shape(&expected), "rewrote to: {}", print_term(&r));
    }

    #[test]
    fn choice_becomes_conjunction_and_events_stay() {
        let sig = Signature::builtin_trace();
        let t = translated(&sig, "choice(event[a](()), event[b](()))");
        let r = rewrite_trace(&t).unwrap();
        let expected = parse_formula(Some(&sig), "\\k0. <a>(k0 ()) /\\ <b>(k0 ())").unwrap();
        assert!(r.alpha_eq_shape(&expected), "rewrote to: {}", print_term(&r));
    }

    #[test]
    fn unif_is_left_for_the_algebra() {
        let sig = Signature::builtin_cost();
        let t = translated(&sig, "unif((fun x:real. ()), ())");
        let r = rewrite_cost(&t).unwrap();
        assert!(matches!(
            &r,
            TargetTerm::Lam(_, _, body) if matches!(&**body, TargetTerm::Modal(op, _) if op.name == "unif")
        ));
    }

    #[test]
    fn rewriting_is_idempotent() {
        let sig = Signature::builtin_cost();
        let t = translated(&sig, "letrec g x = flip[0.25]((), tick(g ())) in g ()");
        let once = rewrite_cost(&t).unwrap();
        let twice = rewrite_cost(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn non_canonical_tick_is_rejected() {
        // General-form argument: a variable continuation pair, not a branch list.
        let sig = Signature::builtin_cost();
        let raw = parse_formula(Some(&sig), "\\p. tick p").unwrap();
        let err = rewrite_cost(&raw).unwrap_err();
        assert!(matches!(err, RewriteError::NonCanonical { op } if op == "tick"));
    }

    #[test]
    fn flip_without_probability_is_rejected() {
        let raw = parse_formula(None, "flip{1, 2}").unwrap();
        let err = rewrite_cost(&raw).unwrap_err();
        assert!(matches!(err, RewriteError::MissingIndex { op } if op == "flip"));
    }

    #[test]
    fn complement_weight_is_computed_once() {
        let raw = parse_formula(None, "flip[0.25]{1, 2}").unwrap();
        let r = rewrite_cost(&raw).unwrap();
        let expected = parse_formula(None, "0.25 * 1 + 0.75 * 2").unwrap();
        assert!(r.alpha_eq_shape(&expected), "rewrote to: {}", print_term(&r));
    }
}
