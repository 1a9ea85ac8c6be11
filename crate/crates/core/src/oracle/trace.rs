//! Direct operational semantics for the trace instance.
//!
//! Programs run under a nondeterministic small-step-equivalent evaluator
//! that records emitted event symbols. Recursion is fuel-bounded: every
//! unfolding of a recursive function spends one unit, and a path that runs
//! out is cut rather than dropped, so the summary distinguishes "ran to a
//! value" from "gave up". The collected finite approximation is what the
//! analytic trace semantics is validated against.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value as Json};

use crate::algebra::dfa::{Dfa, DfaError};
use crate::algebra::eval::Verdict;
use crate::ground::GroundVal;
use crate::source::term::{InjSide, OpIndex, SourceTerm};

use super::value::{RtEnv, RtVal};
use super::OracleError;

struct TOut<'t> {
    trace: Vec<String>,
    fuel: u64,
    step: TStep<'t>,
}

enum TStep<'t> {
    Val(RtVal<'t>),
    Cut,
}

/// Everything a fuel-bounded run revealed about a program's traces.
///
/// `unterminated` is prefix-closed and includes the full trace of every
/// path, finished or cut; `terminated` maps each complete trace to the
/// values returned along it. `complete` records whether any path was cut,
/// which is what separates a proof of the observed behavior from an
/// approximation of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceApprox {
    pub unterminated: BTreeSet<Vec<String>>,
    pub terminated: BTreeMap<Vec<String>, BTreeSet<GroundVal>>,
    pub depth: u64,
    pub complete: bool,
}

impl TraceApprox {
    pub fn to_json(&self) -> Json {
        json!({
            "depth": self.depth,
            "complete": self.complete,
            "unterminated": self.unterminated.iter().collect::<Vec<_>>(),
            "terminated": self
                .terminated
                .iter()
                .map(|(trace, vals)| {
                    json!({
                        "trace": trace,
                        "values": vals.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                    })
                })
                .collect::<Vec<_>>(),
        })
    }
}

/// Run a closed program, collecting every execution path up to `depth`
/// recursive unfoldings per path.
pub fn run_trace(term: &SourceTerm, depth: u64) -> Result<TraceApprox, OracleError> {
    let outs = teval(&RtEnv::empty(), term, depth)?;
    let mut unterminated = BTreeSet::new();
    unterminated.insert(Vec::new());
    let mut terminated: BTreeMap<Vec<String>, BTreeSet<GroundVal>> = BTreeMap::new();
    let mut complete = true;
    for out in outs {
        for i in 1..=out.trace.len() {
            unterminated.insert(out.trace[..i].to_vec());
        }
        match out.step {
            TStep::Val(v) => {
                terminated.entry(out.trace).or_default().insert(v.into_ground()?);
            }
            TStep::Cut => complete = false,
        }
    }
    Ok(TraceApprox { unterminated, terminated, depth, complete })
}

fn val<'t>(v: RtVal<'t>, fuel: u64) -> Vec<TOut<'t>> {
    vec![TOut { trace: Vec::new(), fuel, step: TStep::Val(v) }]
}

/// Sequence a computation after each finished path, splicing traces.
fn tbind<'t>(
    outs: Vec<TOut<'t>>,
    mut f: impl FnMut(RtVal<'t>, u64) -> Result<Vec<TOut<'t>>, OracleError>,
) -> Result<Vec<TOut<'t>>, OracleError> {
    let mut res = Vec::new();
    for out in outs {
        match out.step {
            TStep::Cut => res.push(out),
            TStep::Val(v) => {
                for mut next in f(v, out.fuel)? {
                    let mut trace = out.trace.clone();
                    trace.append(&mut next.trace);
                    next.trace = trace;
                    res.push(next);
                }
            }
        }
    }
    Ok(res)
}

fn teval<'t>(
    env: &RtEnv<'t>,
    term: &'t SourceTerm,
    fuel: u64,
) -> Result<Vec<TOut<'t>>, OracleError> {
    match term {
        SourceTerm::Var(x) => {
            let v = env.lookup(x).cloned().ok_or_else(|| OracleError::Unbound(x.clone()))?;
            Ok(val(v, fuel))
        }
        SourceTerm::Unit => Ok(val(RtVal::unit(), fuel)),
        SourceTerm::Lam(binder, _, body) => {
            Ok(val(RtVal::Closure { binder, body, env: env.clone() }, fuel))
        }
        SourceTerm::Pair(a, b) => tbind(teval(env, a, fuel)?, |av, fuel| {
            tbind(teval(env, b, fuel)?, |bv, fuel| Ok(val(RtVal::pair(av.clone(), bv), fuel)))
        }),
        SourceTerm::Proj(side, m) => tbind(teval(env, m, fuel)?, |v, fuel| {
            let (a, b) = v.as_pair()?;
            Ok(val(
                match side {
                    crate::source::term::ProjSide::Fst => a,
                    crate::source::term::ProjSide::Snd => b,
                },
                fuel,
            ))
        }),
        SourceTerm::Inj(side, _, m) => {
            tbind(teval(env, m, fuel)?, |v, fuel| Ok(val(RtVal::inj(*side, v), fuel)))
        }
        SourceTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
            tbind(teval(env, scrutinee, fuel)?, |v, fuel| match v {
                RtVal::Ground(GroundVal::Inl(g)) => {
                    teval(&env.extend(left_binder.clone(), RtVal::Ground(*g)), left, fuel)
                }
                RtVal::Ground(GroundVal::Inr(g)) => {
                    teval(&env.extend(right_binder.clone(), RtVal::Ground(*g)), right, fuel)
                }
                RtVal::InjV(InjSide::Inl, v) => {
                    teval(&env.extend(left_binder.clone(), *v), left, fuel)
                }
                RtVal::InjV(InjSide::Inr, v) => {
                    teval(&env.extend(right_binder.clone(), *v), right, fuel)
                }
                other => Err(OracleError::Stuck(format!(
                    "case on a non-injection: {}",
                    other.describe()
                ))),
            })
        }
        SourceTerm::Absurd { arg, .. } => tbind(teval(env, arg, fuel)?, |v, _| {
            Err(OracleError::Stuck(format!("a value of empty type appeared: {}", v.describe())))
        }),
        SourceTerm::Const(c, m) => tbind(teval(env, m, fuel)?, |v, fuel| {
            let g = v.into_ground()?;
            let out = crate::ground::denote_const(c, &g).map_err(OracleError::Constant)?;
            Ok(val(RtVal::Ground(out), fuel))
        }),
        SourceTerm::App(f, a) => tbind(teval(env, f, fuel)?, |fv, fuel| {
            tbind(teval(env, a, fuel)?, |av, fuel| apply(fv.clone(), av, fuel))
        }),
        SourceTerm::LetRec { fname, arg, body, rest, .. } => {
            let env =
                env.extend(fname.clone(), RtVal::RecClosure { fname, binder: arg, body, env: env.clone() });
            teval(&env, rest, fuel)
        }
        SourceTerm::Op { op, arg, .. } => tbind(teval(env, arg, fuel)?, |argv, fuel| {
            let (k, _param) = argv.as_pair()?;
            match op.name.as_str() {
                "event" => {
                    let sym = match &op.index {
                        Some(OpIndex::Sym(s)) => s.clone(),
                        _ => {
                            return Err(OracleError::Stuck(
                                "`event` without a symbol index".to_string(),
                            ))
                        }
                    };
                    let outs = apply(k.clone(), RtVal::unit(), fuel)?;
                    Ok(outs
                        .into_iter()
                        .map(|mut o| {
                            let mut trace = vec![sym.clone()];
                            trace.append(&mut o.trace);
                            o.trace = trace;
                            o
                        })
                        .collect())
                }
                "choice" => {
                    let mut left = apply(
                        k.clone(),
                        RtVal::Ground(GroundVal::inl(GroundVal::Unit)),
                        fuel,
                    )?;
                    let right =
                        apply(k.clone(), RtVal::Ground(GroundVal::inr(GroundVal::Unit)), fuel)?;
                    left.extend(right);
                    Ok(left)
                }
                other => Err(OracleError::UnsupportedOperation {
                    op: other.to_string(),
                    instance: "trace",
                }),
            }
        }),
    }
}

fn apply<'t>(f: RtVal<'t>, arg: RtVal<'t>, fuel: u64) -> Result<Vec<TOut<'t>>, OracleError> {
    match f {
        RtVal::Closure { binder, body, env } => {
            teval(&env.extend(binder.to_string(), arg), body, fuel)
        }
        RtVal::RecClosure { fname, binder, body, env } => {
            if fuel == 0 {
                return Ok(vec![TOut { trace: Vec::new(), fuel: 0, step: TStep::Cut }]);
            }
            let env = env.extend(
                fname.to_string(),
                RtVal::RecClosure { fname, binder, body, env: env.clone() },
            );
            teval(&env.extend(binder.to_string(), arg), body, fuel - 1)
        }
        other => {
            Err(OracleError::Stuck(format!("applied a non-function: {}", other.describe())))
        }
    }
}

/// Weakest precondition computed from observed paths alone: the automaton
/// must be able to read every possibly-unfinished trace, and must land in
/// `post` after every finished one.
pub fn oracle_wp_trace(
    approx: &TraceApprox,
    dfa: &Dfa,
    post: &BTreeSet<String>,
) -> Result<BTreeSet<String>, DfaError> {
    let all = dfa.states();
    let mut acc = all.clone();
    for trace in &approx.unterminated {
        let pre = dfa.pre_word(trace.iter().map(String::as_str), all)?;
        acc = acc.intersection(&pre).cloned().collect();
    }
    for trace in approx.terminated.keys() {
        let pre = dfa.pre_word(trace.iter().map(String::as_str), post)?;
        acc = acc.intersection(&pre).cloned().collect();
    }
    Ok(acc)
}

/// Safety verdict with the trivial postcondition. Exclusion of the start
/// state is conclusive even for cut runs, since more paths only shrink
/// the precondition; membership proves safety only for complete runs.
pub fn trace_verdict(approx: &TraceApprox, dfa: &Dfa) -> Result<Verdict, DfaError> {
    let wp = oracle_wp_trace(approx, dfa, dfa.states())?;
    let inside = wp.contains(dfa.initial());
    Ok(if !inside {
        Verdict::Fails
    } else if approx.complete {
        Verdict::Holds
    } else {
        Verdict::Unknown
    })
}
