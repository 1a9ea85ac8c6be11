//! Random programs agree between the analytic pipeline and the direct
//! interpreters on both observation algebras.

use wpk_core::harness::{run_cost_harness, run_trace_harness};

#[test]
fn trace_verdicts_agree_on_conclusive_programs() {
    let out = run_trace_harness(200, 0xfeed_0001, 24);
    assert_eq!(out.total, 200);
    assert!(
        out.conclusive * 10 >= out.total * 9,
        "only {}/{} conclusive",
        out.conclusive,
        out.total
    );
    assert!(
        out.mismatches.is_empty(),
        "{} disagreements, first: {}",
        out.mismatches.len(),
        out.mismatches[0]
    );
}

#[test]
fn expected_costs_land_inside_the_oracle_bracket() {
    let out = run_cost_harness(200, 0xfeed_0002, 40, 1e-6);
    assert_eq!(out.total, 200);
    assert_eq!(out.compared, 200);
    assert!(
        out.mismatches.is_empty(),
        "{} out-of-bracket costs, first: {}",
        out.mismatches.len(),
        out.mismatches[0]
    );
}
