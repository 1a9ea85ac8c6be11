//! Direct operational semantics for the cost instance.
//!
//! Programs run under an exhaustive probabilistic evaluator: `flip` splits
//! the current path's probability, `tick` adds one to its cost, and fuel
//! bounds recursive unfoldings per path. The result is an explicit
//! sub-distribution over (cost, value) pairs plus the probability mass
//! whose fate fuel did not decide.

use std::collections::BTreeMap;

use serde_json::{json, Value as Json};

use crate::ground::GroundVal;
use crate::source::term::{InjSide, OpIndex, ProjSide, SourceTerm};

use super::value::{RtEnv, RtVal};
use super::OracleError;

struct COut<'t> {
    prob: f64,
    ticks: u64,
    fuel: u64,
    step: CStep<'t>,
}

enum CStep<'t> {
    Val(RtVal<'t>),
    Cut,
}

/// A fuel-bounded view of a program's cost distribution.
///
/// `mass` carries the probability of finishing with a given tick count and
/// result; `truncated_mass` is the probability of the cut paths. The two
/// always sum to one, so every derived statistic is an exact lower bound
/// that becomes exact when `truncated_mass` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDistribution {
    pub mass: BTreeMap<(u64, GroundVal), f64>,
    pub truncated_mass: f64,
    pub depth: u64,
}

/// Expected-cost bracket derived from a run. The true expectation lies in
/// `[lower, lower + upper_gap]`; a cut path can hide arbitrarily much
/// cost, so the gap is infinite unless the run was exhaustive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EctBound {
    pub lower: f64,
    pub upper_gap: f64,
}

impl CostDistribution {
    pub fn total_mass(&self) -> f64 {
        self.mass.values().sum::<f64>() + self.truncated_mass
    }

    pub fn is_exhaustive(&self) -> bool {
        self.truncated_mass == 0.0
    }

    pub fn to_json(&self) -> Json {
        json!({
            "depth": self.depth,
            "truncated_mass": self.truncated_mass,
            "mass": self
                .mass
                .iter()
                .map(|((ticks, value), prob)| {
                    json!({ "ticks": ticks, "value": value.to_string(), "prob": prob })
                })
                .collect::<Vec<_>>(),
        })
    }
}

/// Expected cost bracket; see [`EctBound`].
pub fn oracle_ect(dist: &CostDistribution) -> EctBound {
    let lower =
        dist.mass.iter().map(|((ticks, _), prob)| *ticks as f64 * prob).sum::<f64>();
    let upper_gap = if dist.is_exhaustive() { 0.0 } else { f64::INFINITY };
    EctBound { lower, upper_gap }
}

/// Lower bounds on the first `order` raw moments of the cost.
pub fn oracle_moments(dist: &CostDistribution, order: usize) -> Vec<f64> {
    (1..=order)
        .map(|i| {
            dist.mass
                .iter()
                .map(|((ticks, _), prob)| (*ticks as f64).powi(i as i32) * prob)
                .sum::<f64>()
        })
        .collect()
}

/// Run a closed program, resolving every probabilistic branch up to
/// `depth` recursive unfoldings per path.
pub fn run_cost(term: &SourceTerm, depth: u64) -> Result<CostDistribution, OracleError> {
    let outs = ceval(&RtEnv::empty(), term, depth)?;
    let mut mass: BTreeMap<(u64, GroundVal), f64> = BTreeMap::new();
    let mut truncated_mass = 0.0;
    for out in outs {
        match out.step {
            CStep::Val(v) => {
                *mass.entry((out.ticks, v.into_ground()?)).or_insert(0.0) += out.prob;
            }
            CStep::Cut => truncated_mass += out.prob,
        }
    }
    let dist = CostDistribution { mass, truncated_mass, depth };
    debug_assert!(
        (dist.total_mass() - 1.0).abs() < 1e-9,
        "probability mass leaked: total {}",
        dist.total_mass()
    );
    Ok(dist)
}

fn val<'t>(v: RtVal<'t>, fuel: u64) -> Vec<COut<'t>> {
    vec![COut { prob: 1.0, ticks: 0, fuel, step: CStep::Val(v) }]
}

/// Sequence a computation after each finished path, accumulating
/// probability multiplicatively and ticks additively.
fn cbind<'t>(
    outs: Vec<COut<'t>>,
    mut f: impl FnMut(RtVal<'t>, u64) -> Result<Vec<COut<'t>>, OracleError>,
) -> Result<Vec<COut<'t>>, OracleError> {
    let mut res = Vec::new();
    for out in outs {
        match out.step {
            CStep::Cut => res.push(out),
            CStep::Val(v) => {
                for mut next in f(v, out.fuel)? {
                    next.prob *= out.prob;
                    next.ticks += out.ticks;
                    res.push(next);
                }
            }
        }
    }
    Ok(res)
}

fn ceval<'t>(
    env: &RtEnv<'t>,
    term: &'t SourceTerm,
    fuel: u64,
) -> Result<Vec<COut<'t>>, OracleError> {
    match term {
        SourceTerm::Var(x) => {
            let v = env.lookup(x).cloned().ok_or_else(|| OracleError::Unbound(x.clone()))?;
            Ok(val(v, fuel))
        }
        SourceTerm::Unit => Ok(val(RtVal::unit(), fuel)),
        SourceTerm::Lam(binder, _, body) => {
            Ok(val(RtVal::Closure { binder, body, env: env.clone() }, fuel))
        }
        SourceTerm::Pair(a, b) => cbind(ceval(env, a, fuel)?, |av, fuel| {
            cbind(ceval(env, b, fuel)?, |bv, fuel| Ok(val(RtVal::pair(av.clone(), bv), fuel)))
        }),
        SourceTerm::Proj(side, m) => cbind(ceval(env, m, fuel)?, |v, fuel| {
            let (a, b) = v.as_pair()?;
            Ok(val(
                match side {
                    ProjSide::Fst => a,
                    ProjSide::Snd => b,
                },
                fuel,
            ))
        }),
        SourceTerm::Inj(side, _, m) => {
            cbind(ceval(env, m, fuel)?, |v, fuel| Ok(val(RtVal::inj(*side, v), fuel)))
        }
        SourceTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
            cbind(ceval(env, scrutinee, fuel)?, |v, fuel| match v {
                RtVal::Ground(GroundVal::Inl(g)) => {
                    ceval(&env.extend(left_binder.clone(), RtVal::Ground(*g)), left, fuel)
                }
                RtVal::Ground(GroundVal::Inr(g)) => {
                    ceval(&env.extend(right_binder.clone(), RtVal::Ground(*g)), right, fuel)
                }
                RtVal::InjV(InjSide::Inl, v) => {
                    ceval(&env.extend(left_binder.clone(), *v), left, fuel)
                }
                RtVal::InjV(InjSide::Inr, v) => {
                    ceval(&env.extend(right_binder.clone(), *v), right, fuel)
                }
                other => Err(OracleError::Stuck(format!(
                    "case on a non-injection: {}",
                    other.describe()
                ))),
            })
        }
        SourceTerm::Absurd { arg, .. } => cbind(ceval(env, arg, fuel)?, |v, _| {
            Err(OracleError::Stuck(format!("a value of empty type appeared: {}", v.describe())))
        }),
        SourceTerm::Const(c, m) => cbind(ceval(env, m, fuel)?, |v, fuel| {
            let g = v.into_ground()?;
            let out = crate::ground::denote_const(c, &g).map_err(OracleError::Constant)?;
            Ok(val(RtVal::Ground(out), fuel))
        }),
        SourceTerm::App(f, a) => cbind(ceval(env, f, fuel)?, |fv, fuel| {
            cbind(ceval(env, a, fuel)?, |av, fuel| apply(fv.clone(), av, fuel))
        }),
        SourceTerm::LetRec { fname, arg, body, rest, .. } => {
            let env = env
                .extend(fname.clone(), RtVal::RecClosure { fname, binder: arg, body, env: env.clone() });
            ceval(&env, rest, fuel)
        }
        SourceTerm::Op { op, arg, .. } => cbind(ceval(env, arg, fuel)?, |argv, fuel| {
            let (k, _param) = argv.as_pair()?;
            match op.name.as_str() {
                "tick" => {
                    let outs = apply(k.clone(), RtVal::unit(), fuel)?;
                    Ok(outs
                        .into_iter()
                        .map(|mut o| {
                            o.ticks += 1;
                            o
                        })
                        .collect())
                }
                "flip" => {
                    let p = match &op.index {
                        Some(OpIndex::Num(p)) if (0.0..=1.0).contains(p) => *p,
                        _ => {
                            return Err(OracleError::Stuck(
                                "`flip` without a probability index in [0, 1]".to_string(),
                            ))
                        }
                    };
                    let scale = |outs: Vec<COut<'t>>, q: f64| {
                        outs.into_iter()
                            .map(|mut o| {
                                o.prob *= q;
                                o
                            })
                            .collect::<Vec<_>>()
                    };
                    let mut left = scale(
                        apply(k.clone(), RtVal::Ground(GroundVal::inl(GroundVal::Unit)), fuel)?,
                        p,
                    );
                    let right = scale(
                        apply(k.clone(), RtVal::Ground(GroundVal::inr(GroundVal::Unit)), fuel)?,
                        1.0 - p,
                    );
                    left.extend(right);
                    Ok(left)
                }
                other => Err(OracleError::UnsupportedOperation {
                    op: other.to_string(),
                    instance: "cost",
                }),
            }
        }),
    }
}

fn apply<'t>(f: RtVal<'t>, arg: RtVal<'t>, fuel: u64) -> Result<Vec<COut<'t>>, OracleError> {
    match f {
        RtVal::Closure { binder, body, env } => {
            ceval(&env.extend(binder.to_string(), arg), body, fuel)
        }
        RtVal::RecClosure { fname, binder, body, env } => {
            if fuel == 0 {
                return Ok(vec![COut { prob: 1.0, ticks: 0, fuel: 0, step: CStep::Cut }]);
            }
            let env = env.extend(
                fname.to_string(),
                RtVal::RecClosure { fname, binder, body, env: env.clone() },
            );
            ceval(&env.extend(binder.to_string(), arg), body, fuel - 1)
        }
        other => {
            Err(OracleError::Stuck(format!("applied a non-function: {}", other.describe())))
        }
    }
}
