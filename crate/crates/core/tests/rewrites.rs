//! Connective rewrites do not change denotations: a formula and its
//! rewritten form evaluate to the same answer in the matching algebra.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wpk_core::algebra::{evaluate, AlgebraConfig, AnswerValue};
use wpk_core::cps::{cps_term, normalize, rewrite_cost, rewrite_trace};
use wpk_core::gen::{gen_program, GenInstance};
use wpk_core::harness::standard_dfa;
use wpk_core::target::{Pattern, TargetTerm};

fn formula_for(instance: GenInstance, seed: u64, i: usize) -> (String, TargetTerm) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
    let p = gen_program(&mut rng, instance, i.is_multiple_of(10));
    let sig = instance.signature();
    let out = cps_term(&sig, &p.term).expect("translation");
    let post = match instance {
        GenInstance::Trace => TargetTerm::lam(Pattern::var("post_x"), None, TargetTerm::True),
        GenInstance::Cost => {
            TargetTerm::lam(Pattern::var("post_x"), None, TargetTerm::WeightLit(0.0))
        }
    };
    (p.text, normalize(&TargetTerm::app(out.term, post)))
}

#[test]
fn choice_elimination_preserves_trace_sets() {
    for i in 0..110usize {
        let (text, plain) = formula_for(GenInstance::Trace, 0xbead_0001, i);
        let rewritten = rewrite_trace(&plain).expect("rewrite");
        let config = AlgebraConfig::trace(standard_dfa());
        let a = evaluate(&config, &[], &plain)
            .unwrap_or_else(|e| panic!("plain evaluation failed: {e}\n{text}"));
        let b = evaluate(&config, &[], &rewritten)
            .unwrap_or_else(|e| panic!("rewritten evaluation failed: {e}\n{text}"));
        match (&a.value, &b.value) {
            (AnswerValue::StateSet(sa), AnswerValue::StateSet(sb)) => {
                assert_eq!(sa, sb, "state sets moved under rewrite on: {text}")
            }
            other => panic!("non-set answers {other:?} on: {text}"),
        }
    }
}

#[test]
fn counting_elimination_preserves_expected_cost() {
    for i in 0..110usize {
        let (text, plain) = formula_for(GenInstance::Cost, 0xbead_0002, i);
        let rewritten = rewrite_cost(&plain).expect("rewrite");
        let config = AlgebraConfig::cost();
        let a = evaluate(&config, &[], &plain)
            .unwrap_or_else(|e| panic!("plain evaluation failed: {e}\n{text}"));
        let b = evaluate(&config, &[], &rewritten)
            .unwrap_or_else(|e| panic!("rewritten evaluation failed: {e}\n{text}"));
        let (wa, wb) = match (&a.value, &b.value) {
            (AnswerValue::Weight(wa), AnswerValue::Weight(wb)) => (wa.value(), wb.value()),
            other => panic!("non-weight answers {other:?} on: {text}"),
        };
        if wa.is_finite() || wb.is_finite() {
            assert!(
                (wa - wb).abs() <= 1e-9,
                "cost moved under rewrite: {wa} vs {wb} on: {text}"
            );
        }
    }
}
