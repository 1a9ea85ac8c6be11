//! End-to-end agreement harness between the analytic pipeline and the
//! direct interpreters.
//!
//! Each run draws seeded random programs, pushes them through
//! translation, normalization, reduction, and evaluation, runs the same
//! source through the fuel-bounded interpreter, and compares the two
//! along the only directions each side certifies: exact verdicts for
//! traces, bracketed expectations for costs. Callers assert on the
//! returned tallies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::config::AlgebraConfig;
use crate::algebra::dfa::Dfa;
use crate::algebra::eval::{check_trace_property, evaluate, AnswerValue, Verdict};
use crate::cps::{cps_term, normalize, rewrite_cost, rewrite_trace};
use crate::gen::{gen_program, GenInstance, GenProgram};
use crate::oracle::{oracle_ect, run_cost, run_trace, trace_verdict};
use crate::target::term::{Pattern, TargetTerm};

/// Two states over symbols a/b with `b` undefined after the first step,
/// so emitted traces can fall off the automaton. Every state accepts.
pub fn standard_dfa() -> Dfa {
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
    .expect("fixed automaton is well formed")
}

/// Generated program taken through translation, post application, and
/// reduction, ready for evaluation.
pub fn analytic_formula(p: &GenProgram, instance: GenInstance) -> TargetTerm {
    let sig = instance.signature();
    let out = cps_term(&sig, &p.term)
        .unwrap_or_else(|e| panic!("translation failed: {e:?}\n{}", p.text));
    let post = match instance {
        GenInstance::Trace => TargetTerm::lam(Pattern::var("post_x"), None, TargetTerm::True),
        GenInstance::Cost => {
            TargetTerm::lam(Pattern::var("post_x"), None, TargetTerm::WeightLit(0.0))
        }
    };
    let applied = normalize(&TargetTerm::app(out.term, post));
    let rewritten = match instance {
        GenInstance::Trace => rewrite_trace(&applied),
        GenInstance::Cost => rewrite_cost(&applied),
    };
    rewritten.unwrap_or_else(|e| panic!("reduction failed: {e:?}\n{}", p.text))
}

#[derive(Debug, Default)]
pub struct TraceHarnessOutcome {
    pub total: usize,
    /// Programs where both sides reached a definite verdict.
    pub conclusive: usize,
    pub mismatches: Vec<String>,
}

pub fn run_trace_harness(n: usize, seed: u64, oracle_depth: u64) -> TraceHarnessOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dfa = standard_dfa();
    let config = AlgebraConfig::trace(dfa.clone());
    let mut out = TraceHarnessOutcome::default();
    for i in 0..n {
        let p = gen_program(&mut rng, GenInstance::Trace, i % 12 == 0);
        out.total += 1;
        let formula = analytic_formula(&p, GenInstance::Trace);
        let analytic = check_trace_property(&config, &formula)
            .unwrap_or_else(|e| panic!("analytic evaluation failed: {e}\n{}", p.text));
        let approx = run_trace(&p.term, oracle_depth)
            .unwrap_or_else(|e| panic!("oracle run failed: {e}\n{}", p.text));
        let oracle = trace_verdict(&approx, &dfa)
            .unwrap_or_else(|e| panic!("oracle verdict failed: {e}\n{}", p.text));
        if analytic.verdict == Verdict::Unknown || oracle == Verdict::Unknown {
            continue;
        }
        out.conclusive += 1;
        if analytic.verdict != oracle {
            out.mismatches.push(format!(
                "analytic {} vs oracle {} on: {}",
                analytic.verdict, oracle, p.text
            ));
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct CostHarnessOutcome {
    pub total: usize,
    /// Programs where the oracle produced a bracket to compare against.
    pub compared: usize,
    pub worst_deviation: f64,
    pub mismatches: Vec<String>,
}

pub fn run_cost_harness(
    n: usize,
    seed: u64,
    oracle_depth: u64,
    tolerance: f64,
) -> CostHarnessOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = AlgebraConfig::cost();
    let mut out = CostHarnessOutcome::default();
    for i in 0..n {
        let p = gen_program(&mut rng, GenInstance::Cost, i % 12 == 0);
        out.total += 1;
        let formula = analytic_formula(&p, GenInstance::Cost);
        let result = evaluate(&config, &[], &formula)
            .unwrap_or_else(|e| panic!("analytic evaluation failed: {e}\n{}", p.text));
        let analytic = match &result.value {
            AnswerValue::Weight(w) => w.value(),
            other => panic!("cost evaluation returned {other:?} on: {}", p.text),
        };
        let dist = run_cost(&p.term, oracle_depth)
            .unwrap_or_else(|e| panic!("oracle run failed: {e}\n{}", p.text));
        let ect = oracle_ect(&dist);
        out.compared += 1;
        let below = ect.lower - tolerance;
        let above = ect.lower + ect.upper_gap + tolerance;
        let deviation = if analytic.is_finite() { (analytic - ect.lower).abs() } else { f64::INFINITY };
        if dist.is_exhaustive() && deviation.is_finite() && deviation > out.worst_deviation {
            out.worst_deviation = deviation;
        }
        if analytic < below || analytic > above {
            out.mismatches.push(format!(
                "analytic {} outside [{}, {}] on: {}",
                analytic,
                below,
                if above.is_finite() { above.to_string() } else { "inf".to_string() },
                p.text
            ));
        }
    }
    out
}
