//! Machine-readable run reports.
//!
//! Every command emits one `RunReport`. The JSON rendering is the stable
//! interface checked against `docs/report-schema.json`; the human
//! rendering selects the same facts for the terminal. Infinite weights
//! print as the string `"inf"` since JSON has no number for them.

use serde::Serialize;
use serde_json::{json, Value};

use wpk_core::source::term::OpIndex;
use wpk_core::source::ValidationReport;
use wpk_core::target::term::Pattern;
use wpk_core::target::TargetTerm;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: CommandEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature_validation: Option<ValidationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cps_output: Option<CpsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_result: Option<EvalSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_result: Option<OracleSection>,
    /// Present exactly when both an analytic and an oracle result exist.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<String>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub timings_ms: Timings,
    pub exit_code: u8,
}

#[derive(Debug, Serialize)]
pub struct CommandEcho {
    pub name: String,
    pub program: String,
    /// Path of the loaded signature file, or `builtin`.
    pub signature: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dfa: Option<String>,
    pub unsafe_constants: bool,
    pub epsilon: f64,
    pub max_unfold: u64,
    pub quad_points: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<usize>,
    pub oracle: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_depth: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct ValidationSummary {
    pub passed: bool,
    pub waived: bool,
    pub offending: Vec<OffendingEntry>,
}

#[derive(Debug, Serialize)]
pub struct OffendingEntry {
    pub name: String,
    pub coarity: String,
}

impl ValidationSummary {
    pub fn from_report(report: &ValidationReport, waived: bool) -> ValidationSummary {
        ValidationSummary {
            passed: report.passed,
            waived,
            offending: report
                .offending
                .iter()
                .map(|o| OffendingEntry { name: o.name.clone(), coarity: o.coarity.clone() })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CpsSection {
    pub source_type: String,
    pub target_type: String,
    pub pretty: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rewritten: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ast: Option<Value>,
}

#[derive(Debug, Serialize)]
pub struct EvalSection {
    pub instance: String,
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub status: String,
    pub iterations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_bound: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct OracleSection {
    pub depth: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_gap: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
}

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub parse: f64,
    pub translate: f64,
    pub evaluate: f64,
    pub oracle: f64,
    pub total: f64,
}

/// JSON for a possibly infinite nonnegative quantity.
pub fn weight_json(w: f64) -> Value {
    if w.is_finite() {
        json!(w)
    } else {
        json!("inf")
    }
}

pub fn render_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

pub fn render_human(report: &RunReport) -> String {
    let mut out = String::new();
    let push = |out: &mut String, line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    if let Some(v) = &report.signature_validation {
        if !v.passed {
            let names: Vec<&str> = v.offending.iter().map(|o| o.name.as_str()).collect();
            push(&mut out, format!("signature validation failed: {}", names.join(", ")));
        }
    }
    if let Some(cps) = &report.cps_output {
        push(&mut out, format!("source type: {}", cps.source_type));
        push(&mut out, format!("target type: {}", cps.target_type));
        push(&mut out, format!("cps: {}", cps.pretty));
        if let Some(r) = &cps.rewritten {
            let instance = report.command.instance.as_deref().unwrap_or("?");
            push(&mut out, format!("rewritten [{instance}]: {r}"));
        }
    }
    if let Some(eval) = &report.eval_result {
        if let Some(v) = &eval.verdict {
            push(&mut out, format!("verdict: {v}"));
        }
        push(&mut out, format!("value: {}", compact_value(&eval.value)));
        let bound = eval
            .error_bound
            .map(|b| format!(", error bound {b}"))
            .unwrap_or_default();
        push(
            &mut out,
            format!("status: {} ({} iterations{})", eval.status, eval.iterations, bound),
        );
    }
    if let Some(o) = &report.oracle_result {
        if let Some(reason) = &o.skipped {
            push(&mut out, format!("oracle: skipped ({reason})"));
        } else if let Some(v) = &o.verdict {
            push(&mut out, format!("oracle verdict (depth {}): {}", o.depth, v));
        } else if let Some(l) = o.lower {
            let gap = o
                .upper_gap
                .as_ref()
                .map(|g| format!(" (upper gap {})", compact_value(g)))
                .unwrap_or_default();
            push(&mut out, format!("oracle lower bound (depth {}): {}{}", o.depth, l, gap));
            if let Some(m) = &o.moments {
                push(&mut out, format!("oracle moments: {m:?}"));
            }
        }
    }
    if let Some(a) = &report.agreement {
        push(&mut out, format!("agreement: {a}"));
    }
    for w in &report.warnings {
        push(&mut out, format!("warning: {w}"));
    }
    if let Some(e) = &report.error {
        push(&mut out, format!("error: {e}"));
    }
    out
}

fn compact_value(v: &Value) -> String {
    serde_json::to_string(v).expect("value serializes")
}

fn pattern_json(p: &Pattern) -> Value {
    match p {
        Pattern::Var(x) => json!({ "var": x }),
        Pattern::Pair(l, r) => json!({ "pair": [pattern_json(l), pattern_json(r)] }),
    }
}

/// Structural JSON encoding of a formula, one object per node.
pub fn term_json(t: &TargetTerm) -> Value {
    use TargetTerm::*;
    match t {
        Var(x) => json!({ "node": "var", "name": x }),
        Unit => json!({ "node": "unit" }),
        True => json!({ "node": "true" }),
        False => json!({ "node": "false" }),
        WeightLit(w) => json!({ "node": "weight", "value": weight_json(*w) }),
        Pair(l, r) => json!({ "node": "pair", "fst": term_json(l), "snd": term_json(r) }),
        Proj(side, m) => json!({ "node": "proj", "side": format!("{side:?}").to_lowercase(), "of": term_json(m) }),
        Absurd(m) => json!({ "node": "absurd", "of": term_json(m) }),
        Inj(side, ty, m) => json!({
            "node": "inj",
            "side": format!("{side:?}").to_lowercase(),
            "annot": ty.to_string(),
            "of": term_json(m),
        }),
        Const(c, m) => json!({ "node": "const", "name": c, "arg": term_json(m) }),
        Modal(op, arg) => {
            let index = match &op.index {
                Some(OpIndex::Sym(s)) => json!(s),
                Some(OpIndex::Num(p)) => json!(p),
                None => Value::Null,
            };
            json!({ "node": "modal", "op": op.name, "index": index, "arg": term_json(arg) })
        }
        App(f, a) => json!({ "node": "app", "fun": term_json(f), "arg": term_json(a) }),
        Lam(p, ty, b) => json!({
            "node": "lam",
            "pat": pattern_json(p),
            "annot": ty.as_ref().map(|t| t.to_string()),
            "body": term_json(b),
        }),
        LetRecPred { fname, pat, dom, body, rest } => json!({
            "node": "letrec",
            "fname": fname,
            "pat": pattern_json(pat),
            "annot": dom.as_ref().map(|t| t.to_string()),
            "body": term_json(body),
            "rest": term_json(rest),
        }),
        Case { scrutinee, left_binder, left, right_binder, right } => json!({
            "node": "case",
            "scrutinee": term_json(scrutinee),
            "left_binder": left_binder,
            "left": term_json(left),
            "right_binder": right_binder,
            "right": term_json(right),
        }),
        And(l, r) => json!({ "node": "and", "lhs": term_json(l), "rhs": term_json(r) }),
        Or(l, r) => json!({ "node": "or", "lhs": term_json(l), "rhs": term_json(r) }),
        Implies(l, r) => json!({ "node": "implies", "lhs": term_json(l), "rhs": term_json(r) }),
        Add(l, r) => json!({ "node": "add", "lhs": term_json(l), "rhs": term_json(r) }),
        Mul(l, r) => json!({ "node": "mul", "lhs": term_json(l), "rhs": term_json(r) }),
        Forall(x, ty, b) => json!({ "node": "forall", "var": x, "annot": ty.to_string(), "body": term_json(b) }),
        Exists(x, ty, b) => json!({ "node": "exists", "var": x, "annot": ty.to_string(), "body": term_json(b) }),
    }
}
