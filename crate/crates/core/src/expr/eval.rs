use std::collections::HashMap;
use std::fmt;

use super::{BinaryOp, DefId, DefinitionTable, Expr, Node, NodePath, PathStep, UnaryOp, VarId};

#[derive(Clone, Debug, PartialEq)]
pub enum EvalErrorKind {
    MissingValue(VarId),
    UnresolvedDefinition(DefId),
    DivisionByZero,
    LogDomain,
    /// Any other NaN or infinite intermediate.
    NonFinite,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub path: NodePath,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            EvalErrorKind::MissingValue(v) => write!(f, "no value for {v}")?,
            EvalErrorKind::UnresolvedDefinition(d) => write!(f, "unknown definition {d}")?,
            EvalErrorKind::DivisionByZero => f.write_str("division by zero")?,
            EvalErrorKind::LogDomain => f.write_str("log of a non-positive value")?,
            EvalErrorKind::NonFinite => f.write_str("non-finite value")?,
        }
        write!(f, " at {}", self.path)
    }
}

impl EvalError {
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self.kind,
            EvalErrorKind::DivisionByZero | EvalErrorKind::LogDomain | EvalErrorKind::NonFinite
        )
    }
}

/// Evaluates expressions at one point. Each definition is computed at most
/// once per evaluator, so sharing one evaluator across the constraints of a
/// model evaluates every definition once.
pub struct Evaluator<'a> {
    defs: &'a DefinitionTable,
    values: &'a HashMap<VarId, f64>,
    cache: HashMap<DefId, Result<f64, EvalError>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(defs: &'a DefinitionTable, values: &'a HashMap<VarId, f64>) -> Self {
        Evaluator {
            defs,
            values,
            cache: HashMap::new(),
        }
    }

    pub fn eval(&mut self, e: &Expr) -> Result<f64, EvalError> {
        let mut path = Vec::new();
        self.eval_at(e, &mut path)
    }

    pub fn eval_def(&mut self, id: DefId) -> Result<f64, EvalError> {
        let mut path = Vec::new();
        self.def_value(id, &mut path)
    }

    fn def_value(&mut self, id: DefId, path: &mut Vec<PathStep>) -> Result<f64, EvalError> {
        if let Some(r) = self.cache.get(&id) {
            return r.clone();
        }
        // Dependencies first, in table order, so long chains of definitions
        // do not nest calls. Their error paths start at the definition.
        let pending = self
            .defs
            .closure_in_order(id, |d| self.cache.contains_key(&d));
        for d in pending.into_iter().filter(|d| *d != id) {
            let mut local = vec![PathStep::Def(d)];
            let body = self
                .defs
                .expr(d)
                .expect("closure only lists entries")
                .clone();
            let r = self.eval_at(&body, &mut local);
            self.cache.insert(d, r);
        }
        path.push(PathStep::Def(id));
        let r = match self.defs.expr(id) {
            Some(body) => self.eval_at(&body.clone(), path),
            None => Err(fail(EvalErrorKind::UnresolvedDefinition(id), path)),
        };
        path.pop();
        self.cache.insert(id, r.clone());
        r
    }

    fn eval_at(&mut self, e: &Expr, path: &mut Vec<PathStep>) -> Result<f64, EvalError> {
        match e.node() {
            Node::Const(v) => Ok(*v),
            Node::Var(x) => self
                .values
                .get(x)
                .copied()
                .ok_or_else(|| fail(EvalErrorKind::MissingValue(*x), path)),
            Node::Defined(d) => self.def_value(*d, path),
            Node::Unary(op, c) => {
                path.push(PathStep::Child(0));
                let v = self.eval_at(c, path)?;
                path.pop();
                if *op == UnaryOp::Log && v <= 0.0 {
                    return Err(fail(EvalErrorKind::LogDomain, path));
                }
                finite(op.apply(v), path)
            }
            Node::Binary(op, l, r) => {
                path.push(PathStep::Child(0));
                let a = self.eval_at(l, path)?;
                path.pop();
                path.push(PathStep::Child(1));
                let b = self.eval_at(r, path)?;
                path.pop();
                if *op == BinaryOp::Div && b == 0.0 {
                    return Err(fail(EvalErrorKind::DivisionByZero, path));
                }
                finite(op.apply(a, b), path)
            }
        }
    }
}

fn fail(kind: EvalErrorKind, path: &[PathStep]) -> EvalError {
    EvalError {
        kind,
        path: NodePath(path.to_vec()),
    }
}

fn finite(v: f64, path: &[PathStep]) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(fail(EvalErrorKind::NonFinite, path))
    }
}

/// Evaluates `e` at `values`, expanding definitions from `defs`.
pub fn evaluate(
    e: &Expr,
    values: &HashMap<VarId, f64>,
    defs: &DefinitionTable,
) -> Result<f64, EvalError> {
    Evaluator::new(defs, values).eval(e)
}
