//! `wpk`: weakest-precondition generation for effectful functional
//! programs.
//!
//! Three subcommands share one pipeline: parse and elaborate the program,
//! validate the signature's constant coarities, translate to the target
//! logic, and either stop at the formula (`cps`) or evaluate it under an
//! answer algebra (`check-trace`, `expected-cost`). `--oracle` reruns the
//! program under the direct fuel-bounded interpreter and reports whether
//! the two readings agree.
//!
//! Exit codes are a stable contract: 0 success or property holds,
//! 1 property fails, 2 input error, 3 signature validation failure,
//! 4 verdict unknown.

mod report;

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wpk_core::algebra::{
    check_trace_property, evaluate, AlgebraConfig, AnswerValue, Dfa, Status, Verdict,
};
use wpk_core::cps::{cps_term, normalize, rewrite_cost, rewrite_trace};
use wpk_core::oracle::{
    oracle_ect, oracle_moments, run_cost, run_trace, trace_verdict, OracleError,
};
use wpk_core::source::{elaborate, parse_program, Signature, SourceTerm};
use wpk_core::target::{print_term, TargetTerm};

use report::{
    weight_json, CommandEcho, CpsSection, EvalSection, OracleSection, RunReport, Timings,
    ValidationSummary,
};

const EXIT_FAILS: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SIGNATURE: u8 = 3;
const EXIT_UNKNOWN: u8 = 4;

#[derive(Parser)]
#[command(
    name = "wpk",
    version,
    about = "Weakest-precondition generation for programs with algebraic effects"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Translate a program into the target logic and print the formula.
    Cps(CpsArgs),
    /// Decide whether every trace the program can emit stays within a
    /// deterministic automaton's language.
    CheckTrace(CheckTraceArgs),
    /// Compute the expected tick count, or a vector of cost moments.
    ExpectedCost(ExpectedCostArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Program file.
    program: PathBuf,
    /// Signature JSON; defaults to the built-in signature of the
    /// instance in use.
    #[arg(long)]
    signature: Option<PathBuf>,
    /// Proceed past constant-coarity validation failures. The soundness
    /// guarantee does not cover such signatures.
    #[arg(long)]
    unsafe_constants: bool,
    /// Emit the report as JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct NumericArgs {
    /// Fixpoint stopping threshold.
    #[arg(long, default_value_t = AlgebraConfig::DEFAULT_EPSILON)]
    epsilon: f64,
    /// Cap on fixpoint iteration rounds.
    #[arg(long, default_value_t = AlgebraConfig::DEFAULT_MAX_UNFOLD)]
    max_unfold: u64,
    /// Midpoint-rule sample count for uniform sampling.
    #[arg(long, default_value_t = AlgebraConfig::DEFAULT_QUAD_POINTS)]
    quad_points: u32,
}

#[derive(Args)]
struct OracleArgs {
    /// Cross-check the result against the direct interpreter.
    #[arg(long)]
    oracle: bool,
    /// Fuel bound for the direct interpreter.
    #[arg(long, default_value_t = 40)]
    oracle_depth: u64,
    /// Include the interpreter's full run summary in the JSON report.
    #[arg(long)]
    dump_oracle: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Instance {
    Trace,
    Cost,
}

impl Instance {
    fn name(self) -> &'static str {
        match self {
            Instance::Trace => "trace",
            Instance::Cost => "cost",
        }
    }

    fn builtin_signature(self) -> Signature {
        match self {
            Instance::Trace => Signature::builtin_trace(),
            Instance::Cost => Signature::builtin_cost(),
        }
    }
}

#[derive(Args)]
struct CpsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also print the formula after the instance's connective rewrite.
    #[arg(long, value_enum)]
    instance: Option<Instance>,
    /// Include the formula AST in the JSON report.
    #[arg(long)]
    emit_ast: bool,
}

#[derive(Args)]
struct CheckTraceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Automaton JSON (deterministic, all states accepting in the
    /// intended reading).
    #[arg(long)]
    dfa: PathBuf,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    oracle: OracleArgs,
}

#[derive(Args)]
struct ExpectedCostArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Moment vector length; 1 reports the plain expectation.
    #[arg(long)]
    moments: Option<usize>,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    oracle: OracleArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Cps(args) => run_cps(args),
        Cmd::CheckTrace(args) => run_check_trace(args),
        Cmd::ExpectedCost(args) => run_expected_cost(args),
    };
    ExitCode::from(code)
}

/// Mutable state threaded through one command run; flushed exactly once.
struct Run {
    report: RunReport,
    json: bool,
    started: Instant,
}

impl Run {
    fn new(echo: CommandEcho, json: bool) -> Run {
        Run {
            report: RunReport {
                command: echo,
                signature_validation: None,
                cps_output: None,
                eval_result: None,
                oracle_result: None,
                agreement: None,
                warnings: Vec::new(),
                error: None,
                timings_ms: Timings::default(),
                exit_code: 0,
            },
            json,
            started: Instant::now(),
        }
    }

    fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.report.warnings.push(msg);
    }

    /// Record a terminal error and emit the report.
    fn fail(mut self, code: u8, msg: impl Display) -> u8 {
        let msg = msg.to_string();
        eprintln!("error: {msg}");
        self.report.error = Some(msg);
        self.finish(code)
    }

    fn finish(mut self, code: u8) -> u8 {
        self.report.exit_code = code;
        self.report.timings_ms.total = ms_since(self.started);
        if self.json {
            println!("{}", report::render_json(&self.report));
        } else {
            print!("{}", report::render_human(&self.report));
        }
        code
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Load the signature, parse and elaborate the program, and enforce the
/// constant-coarity gate. On success the elaborated term and its
/// signature are returned alongside the updated run state.
fn frontend(
    run: &mut Run,
    program: &Path,
    signature: &Option<PathBuf>,
    default_sig: Signature,
    unsafe_constants: bool,
) -> Result<(Signature, SourceTerm, wpk_core::source::SourceType), u8> {
    let parse_start = Instant::now();
    let sig = match signature {
        Some(path) => {
            let text = match fs::read_to_string(path) {
                Ok(text) => text,
                Err(e) => {
                    run.report.error = Some(format!("{}: {e}", path_str(path)));
                    return Err(EXIT_INPUT);
                }
            };
            match Signature::from_json(&text) {
                Ok(sig) => sig,
                Err(e) => {
                    run.report.error = Some(format!("{}: {e}", path_str(path)));
                    return Err(EXIT_INPUT);
                }
            }
        }
        None => default_sig,
    };

    let validation = sig.validate();
    run.report.signature_validation =
        Some(ValidationSummary::from_report(&validation, unsafe_constants && !validation.passed));
    if !validation.passed {
        let names: Vec<String> = validation
            .offending
            .iter()
            .map(|o| format!("{} : ... -> {}", o.name, o.coarity))
            .collect();
        if unsafe_constants {
            run.warn(format!(
                "constants with non-product-ground coarity ({}); the soundness theorem does not \
                 apply, results carry no guarantee",
                names.join(", ")
            ));
        } else {
            run.report.error = Some(format!(
                "signature validation failed: constant coarities must be product-ground \
                 (no sums, no empty); offending: {}; pass --unsafe-constants to proceed \
                 without the soundness guarantee",
                names.join(", ")
            ));
            return Err(EXIT_SIGNATURE);
        }
    }

    let text = match fs::read_to_string(program) {
        Ok(text) => text,
        Err(e) => {
            run.report.error = Some(format!("{}: {e}", path_str(program)));
            return Err(EXIT_INPUT);
        }
    };
    let parsed = match parse_program(&sig, &text) {
        Ok(term) => term,
        Err(e) => {
            run.report.error = Some(format!("parse error: {e}"));
            return Err(EXIT_INPUT);
        }
    };
    let (term, ty) = match elaborate(&sig, &parsed) {
        Ok(out) => out,
        Err(e) => {
            run.report.error = Some(format!("type error: {e}"));
            return Err(EXIT_INPUT);
        }
    };
    run.report.timings_ms.parse = ms_since(parse_start);
    Ok((sig, term, ty))
}

fn finish_frontend_err(run: Run, code: u8) -> u8 {
    let msg = run.report.error.clone().unwrap_or_else(|| "input error".to_string());
    run.fail(code, msg)
}

fn run_cps(args: CpsArgs) -> u8 {
    let echo = CommandEcho {
        name: "cps".to_string(),
        program: path_str(&args.common.program),
        signature: args
            .common
            .signature
            .as_deref()
            .map(path_str)
            .unwrap_or_else(|| "builtin".to_string()),
        instance: args.instance.map(|i| i.name().to_string()),
        dfa: None,
        unsafe_constants: args.common.unsafe_constants,
        epsilon: AlgebraConfig::DEFAULT_EPSILON,
        max_unfold: AlgebraConfig::DEFAULT_MAX_UNFOLD,
        quad_points: AlgebraConfig::DEFAULT_QUAD_POINTS,
        moments: None,
        oracle: false,
        oracle_depth: None,
    };
    let mut run = Run::new(echo, args.common.json);

    // Without an instance the program may mix either instance's
    // operations, so the default signature is the union of the builtins.
    let default_sig = match args.instance {
        Some(i) => i.builtin_signature(),
        None => union_signature(),
    };
    let (sig, term, _ty) = match frontend(
        &mut run,
        &args.common.program,
        &args.common.signature,
        default_sig,
        args.common.unsafe_constants,
    ) {
        Ok(out) => out,
        Err(code) => return finish_frontend_err(run, code),
    };

    let translate_start = Instant::now();
    let out = match cps_term(&sig, &term) {
        Ok(out) => out,
        Err(e) => return run.fail(EXIT_INPUT, format!("translation error: {e}")),
    };
    let formula = normalize(&out.term);
    let rewritten = match args.instance {
        None => None,
        Some(Instance::Trace) => match rewrite_trace(&formula) {
            Ok(t) => Some(t),
            Err(e) => return run.fail(EXIT_INPUT, format!("rewrite error: {e}")),
        },
        Some(Instance::Cost) => match rewrite_cost(&formula) {
            Ok(t) => Some(t),
            Err(e) => return run.fail(EXIT_INPUT, format!("rewrite error: {e}")),
        },
    };
    run.report.timings_ms.translate = ms_since(translate_start);
    run.report.cps_output = Some(CpsSection {
        source_type: out.source_ty.to_string(),
        target_type: out.target_ty.to_string(),
        pretty: print_term(&formula),
        rewritten: rewritten.as_ref().map(print_term),
        ast: args.emit_ast.then(|| report::term_json(&formula)),
    });
    run.finish(0)
}

fn union_signature() -> Signature {
    let mut sig = Signature::builtin_cost();
    let trace = Signature::builtin_trace();
    sig.operations.extend(trace.operations);
    sig.constants.extend(trace.constants);
    sig
}

fn run_check_trace(args: CheckTraceArgs) -> u8 {
    let echo = CommandEcho {
        name: "check-trace".to_string(),
        program: path_str(&args.common.program),
        signature: args
            .common
            .signature
            .as_deref()
            .map(path_str)
            .unwrap_or_else(|| "builtin".to_string()),
        instance: Some("trace".to_string()),
        dfa: Some(path_str(&args.dfa)),
        unsafe_constants: args.common.unsafe_constants,
        epsilon: args.numeric.epsilon,
        max_unfold: args.numeric.max_unfold,
        quad_points: args.numeric.quad_points,
        moments: None,
        oracle: args.oracle.oracle,
        oracle_depth: args.oracle.oracle.then_some(args.oracle.oracle_depth),
    };
    let mut run = Run::new(echo, args.common.json);

    let dfa_text = match fs::read_to_string(&args.dfa) {
        Ok(text) => text,
        Err(e) => return run.fail(EXIT_INPUT, format!("{}: {e}", path_str(&args.dfa))),
    };
    let dfa = match Dfa::from_json(&dfa_text) {
        Ok(dfa) => dfa,
        Err(e) => {
            // Covers nondeterministic transition tables: the automaton
            // must be deterministic for the preimage reading to be sound.
            return run.fail(EXIT_INPUT, format!("{}: {e}", path_str(&args.dfa)));
        }
    };
    for w in dfa.warnings() {
        run.warn(w);
    }

    let (sig, term, _ty) = match frontend(
        &mut run,
        &args.common.program,
        &args.common.signature,
        Signature::builtin_trace(),
        args.common.unsafe_constants,
    ) {
        Ok(out) => out,
        Err(code) => return finish_frontend_err(run, code),
    };

    let translate_start = Instant::now();
    let out = match cps_term(&sig, &term) {
        Ok(out) => out,
        Err(e) => return run.fail(EXIT_INPUT, format!("translation error: {e}")),
    };
    let post = TargetTerm::lam(
        wpk_core::target::Pattern::var("result"),
        None,
        TargetTerm::True,
    );
    let applied = normalize(&TargetTerm::app(out.term.clone(), post));
    let formula = match rewrite_trace(&applied) {
        Ok(t) => t,
        Err(e) => return run.fail(EXIT_INPUT, format!("rewrite error: {e}")),
    };
    run.report.timings_ms.translate = ms_since(translate_start);
    run.report.cps_output = Some(CpsSection {
        source_type: out.source_ty.to_string(),
        target_type: out.target_ty.to_string(),
        pretty: print_term(&normalize(&out.term)),
        rewritten: Some(print_term(&formula)),
        ast: None,
    });

    let mut config = AlgebraConfig::trace(dfa.clone());
    config.epsilon = args.numeric.epsilon;
    config.max_unfold = args.numeric.max_unfold;
    config.quad_points = args.numeric.quad_points;

    let eval_start = Instant::now();
    let check = match check_trace_property(&config, &formula) {
        Ok(check) => check,
        Err(e) => return run.fail(EXIT_INPUT, format!("evaluation error: {e}")),
    };
    run.report.timings_ms.evaluate = ms_since(eval_start);
    let states: Vec<String> = match &check.result.value {
        AnswerValue::StateSet(s) => s.iter().cloned().collect(),
        other => return run.fail(EXIT_INPUT, format!("non-set trace answer {other:?}")),
    };
    if check.result.status == Status::Truncated {
        run.warn(
            "fixpoint iteration hit the unfold cap; an inconclusive verdict may be refinable \
             with a larger --max-unfold",
        );
    }
    run.report.eval_result = Some(EvalSection {
        instance: "trace".to_string(),
        value: json!({ "states": states }),
        verdict: Some(check.verdict.to_string()),
        status: status_name(check.result.status).to_string(),
        iterations: check.result.iterations,
        error_bound: check.result.error_bound,
    });

    if args.oracle.oracle {
        let oracle_start = Instant::now();
        match run_trace(&term, args.oracle.oracle_depth) {
            Ok(approx) => {
                let verdict = match trace_verdict(&approx, &dfa) {
                    Ok(v) => v,
                    Err(e) => return run.fail(EXIT_INPUT, format!("oracle error: {e}")),
                };
                run.report.oracle_result = Some(OracleSection {
                    depth: args.oracle.oracle_depth,
                    skipped: None,
                    verdict: Some(verdict.to_string()),
                    lower: None,
                    upper_gap: None,
                    moments: None,
                    summary: args.oracle.dump_oracle.then(|| approx.to_json()),
                });
                let agreement = match (check.verdict, verdict) {
                    (Verdict::Unknown, _) | (_, Verdict::Unknown) => "inconclusive",
                    (a, b) if a == b => "agree",
                    _ => "disagree",
                };
                run.report.agreement = Some(agreement.to_string());
                if agreement == "disagree" {
                    run.warn("analytic and interpreter verdicts disagree; please report this");
                }
            }
            Err(OracleError::UnsupportedOperation { op, instance }) => {
                let reason =
                    format!("operation `{op}` is outside the {instance} interpreter's domain");
                run.warn(format!("oracle skipped: {reason}"));
                run.report.oracle_result = Some(OracleSection {
                    depth: args.oracle.oracle_depth,
                    skipped: Some(reason),
                    verdict: None,
                    lower: None,
                    upper_gap: None,
                    moments: None,
                    summary: None,
                });
            }
            Err(e) => return run.fail(EXIT_INPUT, format!("oracle error: {e}")),
        }
        run.report.timings_ms.oracle = ms_since(oracle_start);
    }

    let code = match check.verdict {
        Verdict::Holds => 0,
        Verdict::Fails => EXIT_FAILS,
        Verdict::Unknown => EXIT_UNKNOWN,
    };
    run.finish(code)
}

fn run_expected_cost(args: ExpectedCostArgs) -> u8 {
    let echo = CommandEcho {
        name: "expected-cost".to_string(),
        program: path_str(&args.common.program),
        signature: args
            .common
            .signature
            .as_deref()
            .map(path_str)
            .unwrap_or_else(|| "builtin".to_string()),
        instance: Some("cost".to_string()),
        dfa: None,
        unsafe_constants: args.common.unsafe_constants,
        epsilon: args.numeric.epsilon,
        max_unfold: args.numeric.max_unfold,
        quad_points: args.numeric.quad_points,
        moments: args.moments,
        oracle: args.oracle.oracle,
        oracle_depth: args.oracle.oracle.then_some(args.oracle.oracle_depth),
    };
    let mut run = Run::new(echo, args.common.json);

    let order = args.moments.unwrap_or(1);
    if order == 0 {
        return run.fail(EXIT_INPUT, "--moments must be at least 1");
    }

    let (sig, term, _ty) = match frontend(
        &mut run,
        &args.common.program,
        &args.common.signature,
        Signature::builtin_cost(),
        args.common.unsafe_constants,
    ) {
        Ok(out) => out,
        Err(code) => return finish_frontend_err(run, code),
    };

    let translate_start = Instant::now();
    let out = match cps_term(&sig, &term) {
        Ok(out) => out,
        Err(e) => return run.fail(EXIT_INPUT, format!("translation error: {e}")),
    };
    let post = TargetTerm::lam(
        wpk_core::target::Pattern::var("result"),
        None,
        TargetTerm::WeightLit(0.0),
    );
    let applied = normalize(&TargetTerm::app(out.term.clone(), post));
    // The moment algebra reads tick/flip modalities directly; eliminating
    // them into arithmetic is only valid for the scalar expectation.
    let formula = if order == 1 {
        match rewrite_cost(&applied) {
            Ok(t) => t,
            Err(e) => return run.fail(EXIT_INPUT, format!("rewrite error: {e}")),
        }
    } else {
        applied
    };
    run.report.timings_ms.translate = ms_since(translate_start);
    run.report.cps_output = Some(CpsSection {
        source_type: out.source_ty.to_string(),
        target_type: out.target_ty.to_string(),
        pretty: print_term(&normalize(&out.term)),
        // Only the scalar expectation goes through the cost rewrite; the
        // moment algebra evaluates the modal formula as-is.
        rewritten: (order == 1).then(|| print_term(&formula)),
        ast: None,
    });

    let mut config = if order == 1 {
        AlgebraConfig::cost()
    } else {
        AlgebraConfig::moments(order)
    };
    config.epsilon = args.numeric.epsilon;
    config.max_unfold = args.numeric.max_unfold;
    config.quad_points = args.numeric.quad_points;

    let eval_start = Instant::now();
    let result = match evaluate(&config, &[], &formula) {
        Ok(result) => result,
        Err(e) => return run.fail(EXIT_INPUT, format!("evaluation error: {e}")),
    };
    run.report.timings_ms.evaluate = ms_since(eval_start);
    let (value_json, analytic) = match &result.value {
        AnswerValue::Weight(w) => (json!({ "weight": weight_json(w.value()) }), vec![w.value()]),
        AnswerValue::WeightVector(v) => {
            let vals: Vec<f64> = v.iter().map(|w| w.value()).collect();
            (json!({ "moments": vals.iter().map(|w| weight_json(*w)).collect::<Vec<_>>() }), vals)
        }
        other => return run.fail(EXIT_INPUT, format!("non-numeric cost answer {other:?}")),
    };
    if result.status == Status::Truncated {
        run.warn(
            "fixpoint iteration hit the unfold cap; the reported value is a lower bound for \
             the true expectation",
        );
    }
    run.report.eval_result = Some(EvalSection {
        instance: if order == 1 { "cost" } else { "moments" }.to_string(),
        value: value_json,
        verdict: None,
        status: status_name(result.status).to_string(),
        iterations: result.iterations,
        error_bound: result.error_bound,
    });

    if args.oracle.oracle {
        let oracle_start = Instant::now();
        match run_cost(&term, args.oracle.oracle_depth) {
            Ok(dist) => {
                let ect = oracle_ect(&dist);
                let moments = oracle_moments(&dist, order);
                // The interpreter bounds the expectation from below; the
                // gap above is zero only when every run terminated.
                let agreement = {
                    let a = analytic[0];
                    if a >= ect.lower - 1e-6 && a <= ect.lower + ect.upper_gap + 1e-6 {
                        "within"
                    } else {
                        "outside"
                    }
                };
                run.report.oracle_result = Some(OracleSection {
                    depth: args.oracle.oracle_depth,
                    skipped: None,
                    verdict: None,
                    lower: Some(ect.lower),
                    upper_gap: Some(weight_json(ect.upper_gap)),
                    moments: Some(moments),
                    summary: args.oracle.dump_oracle.then(|| dist.to_json()),
                });
                run.report.agreement = Some(agreement.to_string());
                if agreement == "outside" {
                    run.warn(
                        "analytic expectation is outside the interpreter's bracket; please \
                         report this",
                    );
                }
            }
            Err(OracleError::UnsupportedOperation { op, instance }) => {
                let reason =
                    format!("operation `{op}` is outside the {instance} interpreter's domain");
                run.warn(format!("oracle skipped: {reason}"));
                run.report.oracle_result = Some(OracleSection {
                    depth: args.oracle.oracle_depth,
                    skipped: Some(reason),
                    verdict: None,
                    lower: None,
                    upper_gap: None,
                    moments: None,
                    summary: None,
                });
            }
            Err(e) => return run.fail(EXIT_INPUT, format!("oracle error: {e}")),
        }
        run.report.timings_ms.oracle = ms_since(oracle_start);
    }

    run.finish(0)
}

fn status_name(status: Status) -> &'static str {
    match status {
        Status::Exact => "exact",
        Status::Converged => "converged",
        Status::Truncated => "truncated",
    }
}
