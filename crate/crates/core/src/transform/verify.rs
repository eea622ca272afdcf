//! Independent checks of a reduction: structural triangularity against the
//! source model, and numeric agreement at random points.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{all_vars, classify_linear, EvalError, Evaluator, LinClass, VarId, COEF_EPS};
use crate::model::{BoundSide, ConId, ConstraintKind, Model, ReducedModel, Variable};

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NotAnEquality {
        index: usize,
        con: ConId,
    },
    NotPivotable {
        index: usize,
        var: VarId,
        con: ConId,
    },
    RepeatedVariable {
        index: usize,
        var: VarId,
    },
    RepeatedConstraint {
        index: usize,
        con: ConId,
    },
    /// Constraint `index` contains the variable eliminated at `later`.
    ForwardReference {
        index: usize,
        con: ConId,
        var: VarId,
        later: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotAnEquality { index, con } => {
                write!(f, "entry {index}: {con} is not an equality")
            }
            Violation::NotPivotable { index, var, con } => {
                write!(
                    f,
                    "entry {index}: {var} is not linear with a nonzero coefficient in {con}"
                )
            }
            Violation::RepeatedVariable { index, var } => {
                write!(f, "entry {index}: {var} eliminated twice")
            }
            Violation::RepeatedConstraint { index, con } => {
                write!(f, "entry {index}: {con} used twice")
            }
            Violation::ForwardReference {
                index,
                con,
                var,
                later,
            } => write!(
                f,
                "entry {index}: {con} contains {var}, which is eliminated later at entry {later}"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangularityReport {
    pub violations: Vec<Violation>,
}

impl TriangularityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks an elimination order against the expressions of `model`: each
/// variable is linear with a usable coefficient in its own constraint, and no
/// constraint mentions a variable eliminated after it.
pub fn verify_lower_triangular(order: &[(VarId, ConId)], model: &Model) -> TriangularityReport {
    let mut violations = Vec::new();
    let mut position: HashMap<VarId, usize> = HashMap::new();
    let mut used_cons = HashSet::new();
    for (i, &(v, c)) in order.iter().enumerate() {
        if position.insert(v, i).is_some() {
            violations.push(Violation::RepeatedVariable { index: i, var: v });
        }
        if !used_cons.insert(c) {
            violations.push(Violation::RepeatedConstraint { index: i, con: c });
        }
    }
    for (i, &(v, c)) in order.iter().enumerate() {
        let con = match model.constraint(c) {
            Some((con, ConstraintKind::Equality)) => con,
            _ => {
                violations.push(Violation::NotAnEquality { index: i, con: c });
                continue;
            }
        };
        match classify_linear(&con.expr, v, model.defs()) {
            LinClass::Linear(a) if a.abs() > COEF_EPS => {}
            _ => violations.push(Violation::NotPivotable {
                index: i,
                var: v,
                con: c,
            }),
        }
        let Ok(vars) = all_vars(&con.expr, model.defs()) else {
            continue;
        };
        for x in vars {
            if let Some(&j) = position.get(&x) {
                if j > i {
                    violations.push(Violation::ForwardReference {
                        index: i,
                        con: c,
                        var: x,
                        later: j,
                    });
                }
            }
        }
    }
    TriangularityReport { violations }
}

/// Absolute tolerance on defining-constraint residuals.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Relative tolerance when comparing values of the two models.
pub const AGREEMENT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EquivalenceReport {
    pub requested: usize,
    /// Points at which every comparison could be evaluated.
    pub evaluated: usize,
    /// Points skipped because of a domain error.
    pub skipped: usize,
    pub mismatches: Vec<String>,
}

impl EquivalenceReport {
    pub fn is_ok(&self) -> bool {
        self.mismatches.is_empty() && self.evaluated >= self.requested
    }
}

/// Sampling interval for a retained variable: `[-2, 2]` clipped to its
/// bounds, or a unit-scale interval next to the bounds when they miss it.
fn sample_interval(v: &Variable) -> (f64, f64) {
    let lo = v.lb.max(-2.0);
    let hi = v.ub.min(2.0);
    if lo <= hi {
        return (lo, hi);
    }
    if v.lb > 2.0 {
        (v.lb, v.ub.min(v.lb + 4.0))
    } else {
        (v.lb.max(v.ub - 4.0), v.ub)
    }
}

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= AGREEMENT_TOL * 1f64.max(a.abs()).max(b.abs())
}

enum Sample {
    Done(Vec<String>),
    Domain,
}

/// Compares `reduced` against `original` at `trials` random points of the
/// retained variables. Points where either side hits a domain error are
/// skipped and replaced, up to `10 * trials` attempts in total.
pub fn check_equivalence(
    original: &Model,
    reduced: &ReducedModel,
    trials: usize,
    seed: u64,
) -> EquivalenceReport {
    let mut report = EquivalenceReport {
        requested: trials,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let intervals: Vec<(VarId, (f64, f64))> = reduced
        .model
        .variables()
        .iter()
        .map(|v| (v.id, sample_interval(v)))
        .collect();
    let mut attempts = 0;
    while report.evaluated < trials && attempts < trials.saturating_mul(10) {
        attempts += 1;
        let point: HashMap<VarId, f64> = intervals
            .iter()
            .map(|&(id, (lo, hi))| (id, if lo < hi { rng.gen_range(lo..=hi) } else { lo }))
            .collect();
        match compare_at(original, reduced, &point) {
            Sample::Domain => report.skipped += 1,
            Sample::Done(problems) => {
                report.evaluated += 1;
                for p in problems {
                    if report.mismatches.len() < 20 {
                        report.mismatches.push(p);
                    }
                }
            }
        }
    }
    report
}

fn compare_at(original: &Model, reduced: &ReducedModel, point: &HashMap<VarId, f64>) -> Sample {
    let mut problems = Vec::new();
    // A structural failure is a mismatch; a domain error only skips the point.
    macro_rules! value {
        ($r:expr, $what:expr) => {
            match $r {
                Ok(v) => v,
                Err(e) if EvalError::is_domain_error(&e) => return Sample::Domain,
                Err(e) => {
                    problems.push(format!("{}: {}", $what, e));
                    return Sample::Done(problems);
                }
            }
        };
    }

    let mut red = Evaluator::new(reduced.model.defs(), point);
    let mut full = point.clone();
    for e in &reduced.eliminated {
        let v = value!(
            red.eval_def(e.def),
            format!("definition of `{}`", e.var.name)
        );
        full.insert(e.var.id, v);
    }

    let mut orig = Evaluator::new(original.defs(), &full);
    for e in &reduced.eliminated {
        let Some((con, _)) = original.constraint(e.con) else {
            problems.push(format!(
                "defining constraint `{}` is not in the original model",
                e.con_name
            ));
            continue;
        };
        let r = value!(orig.eval(&con.expr), format!("constraint `{}`", con.name));
        if r.abs() > RESIDUAL_TOL {
            problems.push(format!(
                "defining constraint `{}` has residual {r:e} at the reconstructed point",
                con.name
            ));
        }
    }

    let a = value!(orig.eval(original.objective()), "original objective");
    let b = value!(red.eval(reduced.model.objective()), "reduced objective");
    if !agree(a, b) {
        problems.push(format!("objective differs: {a} vs {b}"));
    }

    for (con, _) in reduced.model.constraints() {
        let b = value!(
            red.eval(&con.expr),
            format!("reduced constraint `{}`", con.name)
        );
        if let Some(o) = reduced.origin.get(&con.id) {
            let v = full[&o.var];
            let var = original.var(o.var);
            let expected = match (o.bound, var) {
                (BoundSide::Lower, Some(var)) => var.lb - v,
                (BoundSide::Upper, Some(var)) => v - var.ub,
                (_, None) => {
                    problems.push(format!(
                        "bound row `{}` names an unknown variable",
                        con.name
                    ));
                    continue;
                }
            };
            if !agree(expected, b) {
                problems.push(format!(
                    "bound row `{}`: {b} but the bound test gives {expected}",
                    con.name
                ));
            }
            continue;
        }
        let Some((oc, _)) = original.constraint(con.id) else {
            problems.push(format!(
                "constraint `{}` has no counterpart in the original model",
                con.name
            ));
            continue;
        };
        let a = value!(
            orig.eval(&oc.expr),
            format!("original constraint `{}`", oc.name)
        );
        if !agree(a, b) {
            problems.push(format!("constraint `{}` differs: {a} vs {b}", con.name));
        }
    }
    Sample::Done(problems)
}
