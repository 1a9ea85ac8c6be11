//! Independent direct-execution cross-check.
//!
//! The interpreters here run source programs by their operational
//! semantics, with no continuation-passing transform, no formulas, and no
//! fixpoint solving involved. Their fuel-bounded summaries give certified
//! bounds against which the analytic pipeline is validated: a disagreement
//! between the two on a conclusive case is a bug in one of them.

pub mod cost;
pub mod trace;
pub mod value;

use thiserror::Error;

pub use cost::{oracle_ect, oracle_moments, run_cost, CostDistribution, EctBound};
pub use trace::{oracle_wp_trace, run_trace, trace_verdict, TraceApprox};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("operation `{op}` has no direct semantics in the {instance} instance")]
    UnsupportedOperation { op: String, instance: &'static str },
    #[error("evaluation stuck: {0}")]
    Stuck(String),
    #[error("constant error: {0}")]
    Constant(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::algebra::dfa::Dfa;
    use crate::algebra::eval::Verdict;
    use crate::ground::GroundVal;
    use crate::source::parse::parse_program;
    use crate::source::signature::Signature;
    use crate::source::term::SourceTerm;

    fn trace_prog(src: &str) -> SourceTerm {
        parse_program(&Signature::builtin_trace(), src).unwrap()
    }

    fn cost_prog(src: &str) -> SourceTerm {
        parse_program(&Signature::builtin_cost(), src).unwrap()
    }

    fn words(ws: &[&str]) -> BTreeSet<Vec<String>> {
        ws.iter()
            .map(|w| {
                if w.is_empty() {
                    Vec::new()
                } else {
                    w.split(' ').map(str::to_string).collect()
                }
            })
            .collect()
    }

    #[test]
    fn single_event_records_the_prefix_and_the_word() {
        let prog = trace_prog("event[a](())");
        let approx = run_trace(&prog, 8).unwrap();
        assert_eq!(approx.unterminated, words(&["", "a"]));
        assert_eq!(approx.terminated.len(), 1);
        let vals = &approx.terminated[&vec!["a".to_string()]];
        assert_eq!(vals.iter().collect::<Vec<_>>(), vec![&GroundVal::Unit]);
        assert!(approx.complete);
    }

    #[test]
    fn choice_explores_both_branches() {
        let prog = trace_prog("choice((), event[b](()))");
        let approx = run_trace(&prog, 8).unwrap();
        assert_eq!(approx.unterminated, words(&["", "b"]));
        assert!(approx.terminated.contains_key(&Vec::<String>::new()));
        assert!(approx.terminated.contains_key(&vec!["b".to_string()]));
        assert!(approx.complete);
    }

    #[test]
    fn divergence_cuts_with_the_emitted_prefix() {
        let prog = trace_prog("letrec f x = event[a](f x) in f ()");
        let approx = run_trace(&prog, 3).unwrap();
        assert_eq!(approx.unterminated, words(&["", "a", "a a", "a a a"]));
        assert!(approx.terminated.is_empty());
        assert!(!approx.complete);

        let deeper = run_trace(&prog, 4).unwrap();
        assert!(approx.unterminated.is_subset(&deeper.unterminated));
    }

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

    #[test]
    fn complete_runs_give_definite_verdicts() {
        let prog = trace_prog("event[a](event[a](()))");
        let approx = run_trace(&prog, 8).unwrap();
        assert_eq!(trace_verdict(&approx, &loop_dfa()).unwrap(), Verdict::Holds);
    }

    #[test]
    fn unreadable_prefix_fails_even_when_cut() {
        // Only `a` leaves q0, so the very first `b` already falls off the
        // automaton; the verdict is conclusive despite the cut run.
        let dfa = Dfa::from_parts(
            ["q0".to_string()],
            ["a".to_string(), "b".to_string()],
            [("q0".to_string(), "a".to_string(), "q0".to_string())],
            "q0".to_string(),
            ["q0".to_string()],
        )
        .unwrap();
        let prog = trace_prog("letrec f x = event[b](f x) in f ()");
        let approx = run_trace(&prog, 3).unwrap();
        assert!(!approx.complete);
        assert_eq!(trace_verdict(&approx, &dfa).unwrap(), Verdict::Fails);

        let safe = trace_prog("letrec f x = event[a](f x) in f ()");
        let approx = run_trace(&safe, 3).unwrap();
        assert_eq!(trace_verdict(&approx, &dfa).unwrap(), Verdict::Unknown);
    }

    #[test]
    fn deterministic_ticks_pile_up() {
        let prog = cost_prog("tick(tick(()))");
        let dist = run_cost(&prog, 8).unwrap();
        assert_eq!(dist.mass.len(), 1);
        assert_eq!(dist.mass[&(2, GroundVal::Unit)], 1.0);
        assert_eq!(dist.truncated_mass, 0.0);
        assert!(dist.is_exhaustive());
    }

    #[test]
    fn flip_splits_the_mass() {
        let prog = cost_prog("flip[0.25]((), tick(()))");
        let dist = run_cost(&prog, 8).unwrap();
        assert_eq!(dist.mass[&(0, GroundVal::Unit)], 0.25);
        assert_eq!(dist.mass[&(1, GroundVal::Unit)], 0.75);
        let ect = oracle_ect(&dist);
        assert_eq!(ect.lower, 0.75);
        assert_eq!(ect.upper_gap, 0.0);
    }

    #[test]
    fn geometric_masses_truncation_and_expectation() {
        let prog = cost_prog("letrec g x = flip[0.5]((), tick(g x)) in g ()");
        let dist = run_cost(&prog, 40).unwrap();
        // Terminating after t ticks takes t+1 unfoldings.
        for t in 0..40u64 {
            let expect = 0.5f64.powi(t as i32 + 1);
            assert_eq!(dist.mass[&(t, GroundVal::Unit)], expect, "mass at {t} ticks");
        }
        assert_eq!(dist.truncated_mass, 0.5f64.powi(40));
        assert!((dist.total_mass() - 1.0).abs() < 1e-12);

        let ect = oracle_ect(&dist);
        let closed_form = 1.0 - 41.0 * 0.5f64.powi(40);
        assert!((ect.lower - closed_form).abs() < 1e-15);
        assert!(ect.upper_gap.is_infinite());
    }

    #[test]
    fn conservation_holds_at_every_depth() {
        let prog = cost_prog("letrec g x = flip[0.3]((), tick(g x)) in g ()");
        for depth in [1, 2, 5, 17, 33] {
            let dist = run_cost(&prog, depth).unwrap();
            assert!(
                (dist.total_mass() - 1.0).abs() < 1e-12,
                "mass at depth {depth}: {}",
                dist.total_mass()
            );
        }
    }

    #[test]
    fn deep_run_pins_the_first_two_moments() {
        let prog = cost_prog("letrec g x = flip[0.5]((), tick(g x)) in g ()");
        let dist = run_cost(&prog, 60).unwrap();
        let moments = oracle_moments(&dist, 2);
        assert!((moments[0] - 1.0).abs() < 1e-9, "first moment {}", moments[0]);
        assert!((moments[1] - 3.0).abs() < 1e-9, "second moment {}", moments[1]);
    }

    #[test]
    fn operations_of_the_other_instance_are_refused() {
        let prog = trace_prog("event[a](())");
        let err = run_cost(&prog, 8).unwrap_err();
        assert!(matches!(
            err,
            OracleError::UnsupportedOperation { ref op, instance: "cost" } if op == "event"
        ));

        let prog = cost_prog("tick(())");
        let err = run_trace(&prog, 8).unwrap_err();
        assert!(matches!(
            err,
            OracleError::UnsupportedOperation { ref op, instance: "trace" } if op == "tick"
        ));
    }

    #[test]
    fn continuous_sampling_is_refused_by_the_cost_oracle() {
        let prog = cost_prog("unif((fun x:real. ()), ())");
        let err = run_cost(&prog, 8).unwrap_err();
        assert!(matches!(
            err,
            OracleError::UnsupportedOperation { ref op, instance: "cost" } if op == "unif"
        ));
    }

    #[test]
    fn summaries_serialize_for_inspection() {
        let prog = cost_prog("flip[0.5]((), tick(()))");
        let dist = run_cost(&prog, 8).unwrap();
        let j = dist.to_json();
        assert_eq!(j["depth"], 8);
        assert_eq!(j["mass"].as_array().unwrap().len(), 2);

        let prog = trace_prog("event[a](())");
        let approx = run_trace(&prog, 8).unwrap();
        let j = approx.to_json();
        assert_eq!(j["complete"], true);
        assert_eq!(j["unterminated"].as_array().unwrap().len(), 2);
    }
}
