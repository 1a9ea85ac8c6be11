//! Seeded random program synthesis for validation harnesses.
//!
//! Programs come out as surface text and go through the ordinary parsing
//! and elaboration pipeline, so generated inputs exercise exactly the same
//! path as handwritten ones. Generation is by type: every emitted program
//! is closed, well-typed, ground-typed, and uses only the operations of
//! the chosen instance, so it can be run both analytically and by the
//! direct interpreters.
//!
//! Recursion comes in three shapes: a bounded countdown over a sum domain
//! (always two unfoldings), a non-recursive letrec, and, for a small
//! configurable fraction, a geometrically terminating loop that fuel-bound
//! runs cannot finish. The `may_diverge` flag marks the last kind so
//! harnesses can budget their conclusiveness targets.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::source::parse::parse_program;
use crate::source::signature::Signature;
use crate::source::term::SourceTerm;
use crate::source::typecheck::elaborate;
use crate::source::types::SourceType;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenInstance {
    Trace,
    Cost,
}

impl GenInstance {
    pub fn signature(self) -> Signature {
        match self {
            GenInstance::Trace => Signature::builtin_trace(),
            GenInstance::Cost => Signature::builtin_cost(),
        }
    }
}

/// A generated closed program together with its elaboration.
#[derive(Debug, Clone)]
pub struct GenProgram {
    pub text: String,
    /// Elaborated form, ready for translation.
    pub term: SourceTerm,
    pub ty: SourceType,
    /// True when the program contains a loop no finite fuel provably
    /// finishes.
    pub may_diverge: bool,
}

/// Flip probabilities are drawn from this set so their decimal rendering
/// is exact.
const FLIP_PROBS: [f64; 7] = [0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.75];

const EVENT_SYMBOLS: [&str; 2] = ["a", "b"];

pub fn gen_program(rng: &mut impl Rng, instance: GenInstance, unbounded: bool) -> GenProgram {
    let mut g = Gen { instance, counter: 0, may_diverge: false, unbounded };
    let tysize = rng.gen_range(1..=3);
    let ty = g.ground_ty(rng, tysize);
    let depth = rng.gen_range(1..=3);
    let text = if unbounded && rng.gen_bool(0.5) {
        g.geometric(rng, &ty)
    } else {
        g.comp(rng, &ty, &[], depth)
    };
    let sig = instance.signature();
    let term = parse_program(&sig, &text)
        .unwrap_or_else(|e| panic!("generator produced unparseable text: {e:?}\n{text}"));
    let (term, ety) = elaborate(&sig, &term)
        .unwrap_or_else(|e| panic!("generator produced ill-typed program: {e:?}\n{text}"));
    debug_assert_eq!(ety, ty, "generated program changed type under elaboration\n{text}");
    GenProgram { text, term, ty, may_diverge: g.may_diverge }
}

struct Gen {
    instance: GenInstance,
    counter: u32,
    may_diverge: bool,
    /// Whether the geometric template may be used at all.
    unbounded: bool,
}

type Ctx = [(String, SourceType)];

impl Gen {
    fn fresh(&mut self, stem: &str) -> String {
        self.counter += 1;
        format!("{stem}{}", self.counter)
    }

    /// A ground type of roughly the requested constructor count.
    fn ground_ty(&mut self, rng: &mut impl Rng, size: u32) -> SourceType {
        if size <= 1 {
            return match self.instance {
                GenInstance::Cost if rng.gen_bool(0.3) => SourceType::base("nat"),
                _ => SourceType::Unit,
            };
        }
        let l = self.ground_ty(rng, size / 2);
        let r = self.ground_ty(rng, size - 1 - size / 2);
        if rng.gen_bool(0.5) {
            SourceType::sum(l, r)
        } else {
            SourceType::prod(l, r)
        }
    }

    /// A value of the given type, drawn from context variables when one
    /// matches.
    fn value(&mut self, rng: &mut impl Rng, ty: &SourceType, ctx: &Ctx) -> String {
        let matching: Vec<&String> =
            ctx.iter().filter(|(_, t)| t == ty).map(|(x, _)| x).collect();
        if !matching.is_empty() && rng.gen_bool(0.4) {
            return (*matching.choose(rng).expect("nonempty")).clone();
        }
        match ty {
            SourceType::Unit => "()".to_string(),
            SourceType::Base(_) => {
                let k = rng.gen_range(0..=3);
                let mut out = "zero ()".to_string();
                for _ in 0..k {
                    out = format!("succ ({out})");
                }
                out
            }
            SourceType::Prod(l, r) => {
                let a = self.value(rng, l, ctx);
                let b = self.value(rng, r, ctx);
                format!("({a}, {b})")
            }
            SourceType::Sum(l, r) => {
                if rng.gen_bool(0.5) {
                    let v = self.value(rng, l, ctx);
                    format!("inl[{r}] ({v})")
                } else {
                    let v = self.value(rng, r, ctx);
                    format!("inr[{l}] ({v})")
                }
            }
            SourceType::Arrow(dom, cod) => {
                let x = self.fresh("x");
                let mut ctx2 = ctx.to_vec();
                ctx2.push((x.clone(), (**dom).clone()));
                let body = self.comp(rng, cod, &ctx2, 1);
                format!("(fun {x}:{dom}. {body})")
            }
            SourceType::Empty => unreachable!("no values of the empty type are generated"),
        }
    }

    /// An effect around a computation, by instance.
    fn effect(&mut self, rng: &mut impl Rng, inner: String) -> String {
        match self.instance {
            GenInstance::Trace => {
                let s = EVENT_SYMBOLS.choose(rng).expect("nonempty");
                format!("event[{s}]({inner})")
            }
            GenInstance::Cost => format!("tick({inner})"),
        }
    }

    /// An effectful computation of the given type.
    fn comp(&mut self, rng: &mut impl Rng, ty: &SourceType, ctx: &Ctx, depth: u32) -> String {
        if depth == 0 {
            return self.value(rng, ty, ctx);
        }
        let geometric_ok = self.unbounded && !self.may_diverge;
        let roll = rng.gen_range(0..if geometric_ok { 14 } else { 13 });
        match roll {
            0 | 1 => self.value(rng, ty, ctx),
            2 | 3 => {
                let inner = self.comp(rng, ty, ctx, depth - 1);
                self.effect(rng, inner)
            }
            4 => {
                let a = self.comp(rng, ty, ctx, depth - 1);
                let b = self.comp(rng, ty, ctx, depth - 1);
                match self.instance {
                    GenInstance::Trace => format!("choice({a}, {b})"),
                    GenInstance::Cost => {
                        let p = FLIP_PROBS.choose(rng).expect("nonempty");
                        format!("flip[{p}]({a}, {b})")
                    }
                }
            }
            5 | 6 => {
                let argsize = rng.gen_range(1..=2);
                let argty = self.ground_ty(rng, argsize);
                let x = self.fresh("x");
                let mut ctx2 = ctx.to_vec();
                ctx2.push((x.clone(), argty.clone()));
                let body = self.comp(rng, ty, &ctx2, depth - 1);
                let arg = self.comp(rng, &argty, ctx, depth - 1);
                format!("(fun {x}:{argty}. {body}) ({arg})")
            }
            7 | 8 => {
                let lt = self.ground_ty(rng, 1);
                let rt = self.ground_ty(rng, 1);
                let scrut_ty = SourceType::sum(lt.clone(), rt.clone());
                let scrut = self.comp(rng, &scrut_ty, ctx, depth - 1);
                let a = self.fresh("u");
                let b = self.fresh("v");
                let mut lctx = ctx.to_vec();
                lctx.push((a.clone(), lt));
                let left = self.comp(rng, ty, &lctx, depth - 1);
                let mut rctx = ctx.to_vec();
                rctx.push((b.clone(), rt));
                let right = self.comp(rng, ty, &rctx, depth - 1);
                format!("case {scrut} of inl {a} -> {left} | inr {b} -> {right}")
            }
            9 => {
                let other = self.ground_ty(rng, 1);
                let a = self.comp(rng, ty, ctx, depth - 1);
                let b = self.value(rng, &other, ctx);
                format!("fst (({a}, {b}))")
            }
            // Countdown: recurse once on the stop token, then halt.
            10 | 11 => {
                let f = self.fresh("f");
                let x = self.fresh("x");
                let base = self.comp(rng, ty, ctx, depth - 1);
                let step = self.effect(rng, format!("{f} (inl[unit] ())"));
                format!(
                    "letrec {f} {x} = case {x} of inl _z -> {base} | inr _z -> {step} \
                     in {f} (inr[unit] ())"
                )
            }
            12 => {
                let f = self.fresh("f");
                let x = self.fresh("x");
                let base = self.comp(rng, ty, ctx, depth - 1);
                format!("letrec {f} {x} = {base} in {f} ()")
            }
            _ => self.geometric(rng, ty),
        }
    }

    /// A loop that terminates with probability one but has runs of every
    /// length, so no fuel bound finishes all of them.
    fn geometric(&mut self, rng: &mut impl Rng, ty: &SourceType) -> String {
        self.may_diverge = true;
        let f = self.fresh("f");
        let x = self.fresh("x");
        let base = self.value(rng, ty, &[]);
        match self.instance {
            GenInstance::Trace => {
                let s = EVENT_SYMBOLS.choose(rng).expect("nonempty");
                format!("letrec {f} {x} = choice({base}, event[{s}]({f} {x})) in {f} ()")
            }
            GenInstance::Cost => {
                let p = FLIP_PROBS.choose(rng).expect("nonempty");
                format!("letrec {f} {x} = flip[{p}]({base}, tick({f} {x})) in {f} ()")
            }
        }
    }
}

/// A closed, possibly higher-order term of the given type, for transform
/// round-trips. Unlike programs, these may have function type.
pub fn gen_typed_term(rng: &mut impl Rng, instance: GenInstance, ty: &SourceType) -> GenProgram {
    let mut g = Gen { instance, counter: 0, may_diverge: false, unbounded: false };
    let text = g.value(rng, ty, &[]);
    let sig = instance.signature();
    let term = parse_program(&sig, &text)
        .unwrap_or_else(|e| panic!("generator produced unparseable text: {e:?}\n{text}"));
    let (term, ety) = elaborate(&sig, &term)
        .unwrap_or_else(|e| panic!("generator produced ill-typed term: {e:?}\n{text}"));
    debug_assert_eq!(&ety, ty, "generated term changed type under elaboration\n{text}");
    GenProgram { text, term, ty: ety, may_diverge: false }
}

/// A type for [`gen_typed_term`]: ground components joined by arrows.
pub fn gen_any_ty(rng: &mut impl Rng, instance: GenInstance, size: u32) -> SourceType {
    let mut g = Gen { instance, counter: 0, may_diverge: false, unbounded: false };
    if size > 1 && rng.gen_bool(0.4) {
        let dom = g.ground_ty(rng, size / 2);
        let cod = gen_any_ty(rng, instance, size - 1 - size / 2);
        SourceType::arrow(dom, cod)
    } else {
        g.ground_ty(rng, size)
    }
}

/// Every ground type with at most `max_size` constructors over the given
/// base names, smallest first.
pub fn enumerate_ground_types(max_size: u32, bases: &[&str]) -> Vec<SourceType> {
    let mut by_size: Vec<Vec<SourceType>> = vec![Vec::new()];
    for size in 1..=max_size {
        let mut layer = Vec::new();
        if size == 1 {
            layer.push(SourceType::Unit);
            layer.push(SourceType::Empty);
            for b in bases {
                layer.push(SourceType::base(*b));
            }
        }
        for lsize in 1..size.saturating_sub(1).max(1) {
            let rsize = size - 1 - lsize;
            if rsize == 0 {
                continue;
            }
            for l in by_size[lsize as usize].clone() {
                for r in &by_size[rsize as usize] {
                    layer.push(SourceType::sum(l.clone(), r.clone()));
                    layer.push(SourceType::prod(l.clone(), r.clone()));
                }
            }
        }
        by_size.push(layer);
    }
    by_size.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn programs_parse_elaborate_and_stay_ground() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..300 {
            let instance = if i % 2 == 0 { GenInstance::Trace } else { GenInstance::Cost };
            let p = gen_program(&mut rng, instance, i % 13 == 0);
            assert!(p.ty.is_ground(), "non-ground program type {} from {}", p.ty, p.text);
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = gen_program(&mut ChaCha8Rng::seed_from_u64(42), GenInstance::Cost, false);
        let b = gen_program(&mut ChaCha8Rng::seed_from_u64(42), GenInstance::Cost, false);
        assert_eq!(a.text, b.text);
    }

    #[test]
    fn unbounded_flag_gates_the_geometric_template() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..200 {
            let p = gen_program(&mut rng, GenInstance::Cost, false);
            assert!(!p.may_diverge, "bounded run {i} produced a divergent loop: {}", p.text);
        }
    }

    #[test]
    fn ground_type_enumeration_counts_match_the_grammar() {
        // Sizes 1..3 over no bases: 2 leaves, then 2*2*2 combinations at
        // size 3 via the two binary constructors.
        let tys = enumerate_ground_types(1, &[]);
        assert_eq!(tys.len(), 2);
        let tys = enumerate_ground_types(3, &[]);
        assert_eq!(tys.len(), 2 + 8);
        let six = enumerate_ground_types(6, &["nat", "real"]);
        assert!(six.len() > 100);
        assert!(six.iter().all(|t| t.is_ground()));
    }

    #[test]
    fn typed_terms_cover_function_types() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut saw_arrow = false;
        for _ in 0..60 {
            let ty = gen_any_ty(&mut rng, GenInstance::Cost, 4);
            if matches!(ty, SourceType::Arrow(_, _)) {
                saw_arrow = true;
            }
            let t = gen_typed_term(&mut rng, GenInstance::Cost, &ty);
            assert_eq!(t.ty, ty);
        }
        assert!(saw_arrow);
    }
}
