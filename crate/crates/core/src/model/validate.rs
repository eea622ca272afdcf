//! Non-fatal checks on a well-formed model.

use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{ConstraintKind, Model};
use crate::expr::VarId;
use crate::expr::{fold_constants, Analyzer, Coef, DefId, Expr};

/// Residual magnitude above which a constant equality counts as violated.
const CONSTANT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{level}: {}: {}", self.location, self.message)
    }
}

/// Reports problems that do not stop a model from being built: constant or
/// trivially infeasible rows, constant subexpressions that cannot be
/// evaluated, unused variables and definitions, and variables fixed by more
/// than one equality.
pub fn validate(model: &Model) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |severity, location: String, message: String| {
        out.push(Diagnostic {
            severity,
            location,
            message,
        })
    };
    let mut analyzer = Analyzer::new(model.defs());
    let mut used_vars = HashSet::new();
    let mut fixing: HashMap<VarId, Vec<&str>> = HashMap::new();

    let roots = model
        .constraints()
        .map(|(c, k)| {
            (
                format!("constraint `{}`", c.name),
                &c.expr,
                Some((k, c.name.as_str())),
            )
        })
        .chain(std::iter::once((
            "objective".to_string(),
            model.objective(),
            None,
        )))
        .chain(
            model
                .defs()
                .iter()
                .map(|d| (format!("definition `{}`", d.name), &d.expr, None)),
        );
    for (location, expr, row) in roots {
        if let Err(e) = fold_constants(expr) {
            push(Severity::Error, location.clone(), e.to_string());
        }
        let summary = analyzer.summary(expr);
        used_vars.extend(summary.vars.keys().copied());
        let Some((kind, name)) = row else { continue };
        if summary.vars.is_empty() {
            if let Some(v) = summary.constant {
                let violated = match kind {
                    ConstraintKind::Equality => v.abs() > CONSTANT_TOL,
                    ConstraintKind::Inequality => v > CONSTANT_TOL,
                };
                if violated {
                    push(
                        Severity::Error,
                        location,
                        format!("constant row is infeasible (value {v})"),
                    );
                } else {
                    push(
                        Severity::Warning,
                        location,
                        "row is constant and always satisfied".into(),
                    );
                }
            }
            continue;
        }
        if kind == ConstraintKind::Equality && summary.vars.len() == 1 {
            if let Some((v, Coef::Linear(a))) = summary.vars.first() {
                if a.abs() > crate::expr::COEF_EPS {
                    fixing.entry(*v).or_default().push(name);
                }
            }
        }
    }

    for v in model.variables() {
        if !used_vars.contains(&v.id) {
            push(
                Severity::Warning,
                format!("variable `{}`", v.name),
                "not used anywhere".into(),
            );
        }
        if let Some(rows) = fixing.get(&v.id).filter(|r| r.len() > 1) {
            push(
                Severity::Warning,
                format!("variable `{}`", v.name),
                format!("fixed by several equalities: {}", rows.join(", ")),
            );
        }
    }

    let mut referenced: HashSet<DefId> = HashSet::new();
    let mut note = |e: &Expr| {
        crate::expr::visit_defined(e, |d| {
            referenced.insert(d);
        })
    };
    for (c, _) in model.constraints() {
        note(&c.expr);
    }
    note(model.objective());
    for d in model.defs().iter() {
        note(&d.expr);
    }
    for d in model.defs().iter() {
        if !referenced.contains(&d.id) {
            push(
                Severity::Warning,
                format!("definition `{}`", d.name),
                "never referenced".into(),
            );
        }
    }
    out
}
