//! Every command's --json output, on every fixture and error path,
//! validates against docs/report-schema.json.

mod util;

use util::{fixture, report, schema, validate, wpk};

fn check(args: &[&str]) {
    let mut full = vec![args[0]];
    full.push("--json");
    full.extend(&args[1..]);
    let out = wpk(&full);
    let json = report(&out);
    if let Err(e) = validate(&schema(), &json) {
        panic!("schema violation for {full:?}: {e}\n{json}");
    }
    let reported = json["exit_code"].as_i64().expect("exit_code present");
    assert_eq!(reported, out.code as i64, "report and process exit codes differ for {full:?}");
}

#[test]
fn cps_reports_validate() {
    for program in ["identity.wpk", "geometric_p50.wpk", "event_a.wpk", "iszero.wpk", "unif_tick.wpk"] {
        check(&["cps", &fixture(program)]);
    }
    check(&["cps", "--instance", "cost", &fixture("geometric_p50.wpk")]);
    check(&["cps", "--instance", "trace", &fixture("event_a.wpk")]);
    check(&["cps", "--emit-ast", &fixture("geometric_p25.wpk")]);
    check(&["cps", "--signature", &fixture("cost_sig.json"), &fixture("geometric_p75.wpk")]);
    // Signature gate, both refused and waived.
    check(&["cps", "--signature", &fixture("iszero_sig.json"), &fixture("iszero.wpk")]);
    check(&[
        "cps",
        "--signature",
        &fixture("iszero_sig.json"),
        "--unsafe-constants",
        &fixture("iszero.wpk"),
    ]);
    // Input errors still produce a valid report.
    check(&["cps", "missing-file.wpk"]);
}

#[test]
fn check_trace_reports_validate() {
    for program in ["event_a.wpk", "event_b.wpk"] {
        check(&["check-trace", "--dfa", &fixture("astar.json"), &fixture(program)]);
        check(&[
            "check-trace",
            "--dfa",
            &fixture("ab_partial.json"),
            "--oracle",
            "--dump-oracle",
            &fixture(program),
        ]);
    }
    check(&[
        "check-trace",
        "--dfa",
        &fixture("astar.json"),
        "--signature",
        &fixture("trace_sig.json"),
        "--oracle",
        &fixture("event_a.wpk"),
    ]);
    check(&["check-trace", "--dfa", &fixture("nondet.json"), &fixture("event_a.wpk")]);
    check(&["check-trace", "--dfa", "missing-dfa.json", &fixture("event_a.wpk")]);
}

#[test]
fn expected_cost_reports_validate() {
    for program in ["geometric_p25.wpk", "geometric_p50.wpk", "geometric_p75.wpk", "unif_tick.wpk"] {
        check(&["expected-cost", &fixture(program)]);
        check(&["expected-cost", "--oracle", "--dump-oracle", &fixture(program)]);
    }
    check(&["expected-cost", "--moments", "3", &fixture("geometric_p50.wpk")]);
    check(&["expected-cost", "--moments", "2", "--oracle", &fixture("geometric_p25.wpk")]);
    check(&[
        "expected-cost",
        "--signature",
        &fixture("cost_sig.json"),
        "--epsilon",
        "1e-7",
        "--max-unfold",
        "500",
        &fixture("geometric_p50.wpk"),
    ]);
    check(&[
        "expected-cost",
        "--signature",
        &fixture("iszero_sig.json"),
        "--unsafe-constants",
        "--oracle",
        &fixture("iszero.wpk"),
    ]);
}
