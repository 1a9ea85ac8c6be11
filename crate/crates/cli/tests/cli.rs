//! Exit codes, warnings, and report fields of the compiled binary.

mod util;

use std::io::Write as _;

use util::{fixture, report, wpk};

use wpk_core::source::Signature;
use wpk_core::target::{parse_formula, TargetTerm};

#[test]
fn identity_translates_to_the_double_continuation_form() {
    let out = wpk(&["cps", "--json", &fixture("identity.wpk")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let json = report(&out);
    let pretty = json["cps_output"]["pretty"].as_str().unwrap();
    let sig = Signature::builtin_cost();
    let got = parse_formula(Some(&sig), pretty).unwrap();
    let want = parse_formula(Some(&sig), r"\k0. k0 (\(x, k1). k1 x)").unwrap();
    assert!(got.alpha_eq_shape(&want), "unexpected translation: {pretty}");
    assert_eq!(json["cps_output"]["source_type"], "unit -> unit");
}

#[test]
fn cps_can_embed_the_formula_ast() {
    let out = wpk(&["cps", "--json", "--emit-ast", &fixture("event_a.wpk")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let json = report(&out);
    assert_eq!(json["cps_output"]["ast"]["node"], "lam");
}

#[test]
fn trace_property_holds_and_fails_with_contract_exit_codes() {
    let hold = wpk(&["check-trace", "--dfa", &fixture("astar.json"), &fixture("event_a.wpk")]);
    assert_eq!(hold.code, 0, "{}", hold.stderr);
    assert!(hold.stdout.contains("verdict: holds"));
    let fail = wpk(&["check-trace", "--dfa", &fixture("astar.json"), &fixture("event_b.wpk")]);
    assert_eq!(fail.code, 1, "{}", fail.stderr);
    assert!(fail.stdout.contains("verdict: fails"));
}

#[test]
fn nondeterministic_automaton_is_rejected_citing_determinism() {
    let out = wpk(&["check-trace", "--dfa", &fixture("nondet.json"), &fixture("event_a.wpk")]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("nondeterministic"), "{}", out.stderr);
}

#[test]
fn truncated_inconclusive_trace_check_exits_unknown() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "letrec f x = event[b](f ()) in f ()").unwrap();
    let path = file.path().to_str().unwrap().to_string();
    let capped = wpk(&[
        "check-trace",
        "--dfa",
        &fixture("ab_partial.json"),
        "--max-unfold",
        "1",
        &path,
    ]);
    assert_eq!(capped.code, 4, "{}{}", capped.stdout, capped.stderr);
    assert!(capped.stdout.contains("verdict: unknown"));
    let full = wpk(&["check-trace", "--dfa", &fixture("ab_partial.json"), &path]);
    assert_eq!(full.code, 1, "{}{}", full.stdout, full.stderr);
}

#[test]
fn missing_program_file_is_an_input_error() {
    let out = wpk(&["expected-cost", "no-such-file.wpk"]);
    assert_eq!(out.code, 2);
}

#[test]
fn ill_typed_program_is_an_input_error() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "(fun x:nat. x) (())").unwrap();
    let out = wpk(&["expected-cost", file.path().to_str().unwrap()]);
    assert_eq!(out.code, 2, "{}{}", out.stdout, out.stderr);
    assert!(out.stderr.contains("type error"), "{}", out.stderr);
}

#[test]
fn signature_gate_blocks_sum_coarity_constants() {
    let args = [
        "expected-cost",
        "--signature",
        &fixture("iszero_sig.json"),
        &fixture("iszero.wpk"),
    ];
    let gated = wpk(&args);
    assert_eq!(gated.code, 3, "{}{}", gated.stdout, gated.stderr);
    assert!(gated.stderr.contains("iszero"), "{}", gated.stderr);

    let mut waived_args = args.to_vec();
    waived_args.insert(1, "--unsafe-constants");
    let waived = wpk(&waived_args);
    assert_eq!(waived.code, 0, "{}{}", waived.stdout, waived.stderr);
    assert!(waived.stderr.contains("no guarantee"), "{}", waived.stderr);
}

#[test]
fn oracle_cross_check_agrees_on_the_geometric_program() {
    let out = wpk(&[
        "expected-cost",
        "--oracle",
        "--json",
        &fixture("geometric_p50.wpk"),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let json = report(&out);
    assert_eq!(json["agreement"], "within");
    let lower = json["oracle_result"]["lower"].as_f64().unwrap();
    assert!(lower > 0.99 && lower <= 1.0, "lower {lower}");
    assert_eq!(json["oracle_result"]["upper_gap"], "inf");
}

#[test]
fn oracle_skips_continuous_sampling_with_a_warning() {
    let out = wpk(&["expected-cost", "--oracle", "--json", &fixture("unif_tick.wpk")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let json = report(&out);
    assert!(json["oracle_result"]["skipped"].is_string());
    assert!(json.get("agreement").is_none());
    assert!(out.stderr.contains("oracle skipped"), "{}", out.stderr);
}

#[test]
fn dumped_oracle_summary_carries_the_distribution() {
    let out = wpk(&[
        "expected-cost",
        "--oracle",
        "--dump-oracle",
        "--oracle-depth",
        "8",
        "--json",
        &fixture("geometric_p50.wpk"),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let json = report(&out);
    let summary = &json["oracle_result"]["summary"];
    assert!(summary.is_object(), "missing summary: {json}");
    assert!(summary.get("mass").is_some() || summary.get("outcomes").is_some(), "{summary}");
}

#[test]
fn moment_vectors_replace_scalar_costs_on_request() {
    let out = wpk(&["expected-cost", "--moments", "2", "--json", &fixture("geometric_p50.wpk")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let json = report(&out);
    let moments = json["eval_result"]["value"]["moments"].as_array().unwrap();
    assert_eq!(moments.len(), 2);
}

#[test]
fn rewritten_formula_round_trips_through_the_parser() {
    let out = wpk(&["cps", "--instance", "cost", "--json", &fixture("geometric_p50.wpk")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let json = report(&out);
    let sig = Signature::builtin_cost();
    let rewritten = json["cps_output"]["rewritten"].as_str().unwrap();
    let parsed: TargetTerm = parse_formula(Some(&sig), rewritten).unwrap();
    assert!(wpk_core::target::print_term(&parsed) == rewritten);
}
