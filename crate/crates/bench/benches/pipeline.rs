//! End-to-end timings for the stages a command runs: translation with
//! rewriting, fixpoint evaluation under both algebras, and the direct
//! interpreter used for cross-checks.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use wpk_core::algebra::{check_trace_property, evaluate, AlgebraConfig, Dfa};
use wpk_core::cps::{cps_term, normalize, rewrite_cost, rewrite_trace};
use wpk_core::oracle::run_cost;
use wpk_core::source::{elaborate, parse_program, Signature, SourceTerm};
use wpk_core::target::{Pattern, TargetTerm};

const GEOMETRIC: &str = "letrec g x = flip[0.5]((), tick(g ())) in g ()";
const SELF_LOOP: &str = "letrec f x = event[a](f ()) in f ()";

fn parse(sig: &Signature, text: &str) -> SourceTerm {
    let (term, _) = elaborate(sig, &parse_program(sig, text).unwrap()).unwrap();
    term
}

fn loop_dfa() -> Dfa {
    Dfa::from_parts(
        ["q0".to_string(), "q1".to_string()],
        ["a".to_string(), "b".to_string()],
        [
            ("q0".to_string(), "a".to_string(), "q0".to_string()),
            ("q0".to_string(), "b".to_string(), "q1".to_string()),
            ("q1".to_string(), "a".to_string(), "q1".to_string()),
        ],
        "q0".to_string(),
        ["q0".to_string(), "q1".to_string()],
    )
    .unwrap()
}

fn translate_geometric(c: &mut Criterion) {
    let sig = Signature::builtin_cost();
    let term = parse(&sig, GEOMETRIC);
    c.bench_function("translate_and_rewrite_geometric", |b| {
        b.iter(|| {
            let out = cps_term(&sig, black_box(&term)).unwrap();
            let post = TargetTerm::lam(Pattern::var("res"), None, TargetTerm::WeightLit(0.0));
            let formula = normalize(&TargetTerm::app(out.term, post));
            black_box(rewrite_cost(&formula).unwrap())
        })
    });
}

fn evaluate_expected_cost(c: &mut Criterion) {
    let sig = Signature::builtin_cost();
    let term = parse(&sig, GEOMETRIC);
    let out = cps_term(&sig, &term).unwrap();
    let post = TargetTerm::lam(Pattern::var("res"), None, TargetTerm::WeightLit(0.0));
    let formula = rewrite_cost(&normalize(&TargetTerm::app(out.term, post))).unwrap();
    let config = AlgebraConfig::cost();
    c.bench_function("evaluate_geometric_cost_fixpoint", |b| {
        b.iter(|| black_box(evaluate(&config, &[], black_box(&formula)).unwrap()))
    });
}

fn evaluate_trace_verdict(c: &mut Criterion) {
    let sig = Signature::builtin_trace();
    let term = parse(&sig, SELF_LOOP);
    let out = cps_term(&sig, &term).unwrap();
    let post = TargetTerm::lam(Pattern::var("res"), None, TargetTerm::True);
    let formula = rewrite_trace(&normalize(&TargetTerm::app(out.term, post))).unwrap();
    let config = AlgebraConfig::trace(loop_dfa());
    c.bench_function("check_self_loop_trace_property", |b| {
        b.iter(|| black_box(check_trace_property(&config, black_box(&formula)).unwrap()))
    });
}

fn interpret_cost_distribution(c: &mut Criterion) {
    let sig = Signature::builtin_cost();
    let term = parse(&sig, GEOMETRIC);
    c.bench_function("interpret_geometric_to_depth_40", |b| {
        b.iter(|| black_box(run_cost(black_box(&term), 40).unwrap()))
    });
}

criterion_group!(
    benches,
    translate_geometric,
    evaluate_expected_cost,
    evaluate_trace_verdict,
    interpret_cost_distribution
);
criterion_main!(benches);
