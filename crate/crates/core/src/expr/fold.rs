//! Constant folding.
//!
//! Operator nodes whose children are all constants collapse to a constant.
//! Neutral operands are dropped (`t + 0`, `0 + t`, `t - 0`, `t * 1`, `1 * t`,
//! `t / 1`, `t ^ 1`), `0 - t` becomes `-t`, and double negation cancels.
//! Nothing else is rewritten: no term collection, no distribution, and no
//! annihilation (`t * 0` keeps `t`, so the participating variables do not
//! change). Definitions are leaves.

use std::collections::HashMap;
use std::fmt;

use super::{BinaryOp, Expr, Node, NodePath, PathStep, UnaryOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FoldErrorKind {
    DivisionByZero,
    LogDomain,
    NonFinite,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct FoldError {
    pub kind: FoldErrorKind,
    pub path: NodePath,
}

impl fmt::Display for FoldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            FoldErrorKind::DivisionByZero => "division by a constant zero",
            FoldErrorKind::LogDomain => "log of a non-positive constant",
            FoldErrorKind::NonFinite => "constant subexpression is not finite",
        };
        write!(f, "{what} at {}", self.path)
    }
}

pub fn fold_constants(e: &Expr) -> Result<Expr, FoldError> {
    let mut memo = HashMap::new();
    let mut path = Vec::new();
    fold_node(e, &mut memo, &mut path)
}

fn fold_node(
    e: &Expr,
    memo: &mut HashMap<usize, Expr>,
    path: &mut Vec<PathStep>,
) -> Result<Expr, FoldError> {
    if e.is_shared() {
        if let Some(done) = memo.get(&e.key()) {
            return Ok(done.clone());
        }
    }
    let out = match e.node() {
        Node::Const(_) | Node::Var(_) | Node::Defined(_) => e.clone(),
        Node::Unary(op, c) => {
            path.push(PathStep::Child(0));
            let c2 = fold_node(c, memo, path)?;
            path.pop();
            let built = make_unary(*op, c2.clone()).map_err(|kind| FoldError {
                kind,
                path: NodePath(path.clone()),
            })?;
            let kept = c2.ptr_eq(c);
            reuse(e, built, |n| {
                kept && matches!(n, Node::Unary(o, cc) if o == op && cc.ptr_eq(&c2))
            })
        }
        Node::Binary(op, l, r) => {
            path.push(PathStep::Child(0));
            let l2 = fold_node(l, memo, path)?;
            path.pop();
            path.push(PathStep::Child(1));
            let r2 = fold_node(r, memo, path)?;
            path.pop();
            let built = make_binary(*op, l2.clone(), r2.clone()).map_err(|kind| FoldError {
                kind,
                path: NodePath(path.clone()),
            })?;
            let kept = l2.ptr_eq(l) && r2.ptr_eq(r);
            reuse(e, built, |n| {
                kept && matches!(n, Node::Binary(o, ll, rr) if o == op && ll.ptr_eq(&l2) && rr.ptr_eq(&r2))
            })
        }
    };
    if e.is_shared() {
        memo.insert(e.key(), out.clone());
    }
    Ok(out)
}

/// Keeps the original node when folding rebuilt an identical one, so
/// untouched subgraphs stay shared with their source.
fn reuse(original: &Expr, built: Expr, same_children: impl Fn(&Node) -> bool) -> Expr {
    let unchanged = match (original.node(), built.node()) {
        (Node::Unary(..), n @ Node::Unary(..)) | (Node::Binary(..), n @ Node::Binary(..)) => {
            same_children(n)
        }
        _ => false,
    };
    if unchanged {
        original.clone()
    } else {
        built
    }
}

pub(crate) fn make_unary(op: UnaryOp, c: Expr) -> Result<Expr, FoldErrorKind> {
    if let Some(v) = c.as_const() {
        if op == UnaryOp::Log && v <= 0.0 {
            return Err(FoldErrorKind::LogDomain);
        }
        let out = op.apply(v);
        return if out.is_finite() {
            Ok(Expr::constant(out))
        } else {
            Err(FoldErrorKind::NonFinite)
        };
    }
    if op == UnaryOp::Neg {
        if let Node::Unary(UnaryOp::Neg, inner) = c.node() {
            return Ok(inner.clone());
        }
    }
    Ok(Expr::unary(op, c))
}

pub(crate) fn make_binary(op: BinaryOp, l: Expr, r: Expr) -> Result<Expr, FoldErrorKind> {
    match (l.as_const(), r.as_const()) {
        (Some(a), Some(b)) => {
            if op == BinaryOp::Div && b == 0.0 {
                return Err(FoldErrorKind::DivisionByZero);
            }
            let out = op.apply(a, b);
            return if out.is_finite() {
                Ok(Expr::constant(out))
            } else {
                Err(FoldErrorKind::NonFinite)
            };
        }
        (_, Some(b)) if op == BinaryOp::Div && b == 0.0 => {
            return Err(FoldErrorKind::DivisionByZero);
        }
        _ => {}
    }
    let is = |e: &Expr, k: f64| e.as_const() == Some(k);
    let folded = match op {
        BinaryOp::Add if is(&l, 0.0) => r,
        BinaryOp::Add | BinaryOp::Sub if is(&r, 0.0) => l,
        BinaryOp::Sub if is(&l, 0.0) => make_unary(UnaryOp::Neg, r)?,
        BinaryOp::Mul if is(&l, 1.0) => r,
        BinaryOp::Mul | BinaryOp::Div | BinaryOp::Pow if is(&r, 1.0) => l,
        _ => Expr::binary(op, l, r),
    };
    Ok(folded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{evaluate, DefinitionTable, VarId};

    fn x() -> Expr {
        Expr::var(VarId(0))
    }

    #[test]
    fn collapses_constant_products() {
        let e = 2.0 * Expr::constant(3.0) + x();
        assert_eq!(fold_constants(&e).unwrap(), 6.0 + x());
    }

    #[test]
    fn variable_is_a_fixed_point() {
        let e = x();
        let f = fold_constants(&e).unwrap();
        assert!(f.ptr_eq(&e));
    }

    #[test]
    fn drops_neutral_operands() {
        let e = 100.0 * x() * 1.0 + 1.0 + 0.0;
        let f = fold_constants(&e).unwrap();
        assert_eq!(f, 100.0 * x() + 1.0);
        assert_eq!(fold_constants(&(0.0 - x())).unwrap(), -x());
        assert_eq!(fold_constants(&(-(-x()))).unwrap(), x());
        assert_eq!(fold_constants(&(x() / 1.0)).unwrap(), x());
        // annihilation is not applied
        assert_eq!(fold_constants(&(x() * 0.0)).unwrap(), x() * 0.0);
    }

    #[test]
    fn folding_preserves_values_at_random_points() {
        use rand::{Rng, SeedableRng};
        let defs = DefinitionTable::new();
        let e = 100.0 * x() * 1.0 + 1.0 + 0.0;
        let f = fold_constants(&e).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let p = [(VarId(0), rng.gen_range(-10.0..10.0))]
                .into_iter()
                .collect();
            let a = evaluate(&e, &p, &defs).unwrap();
            let b = evaluate(&f, &p, &defs).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn domain_errors_report_path() {
        let e = x() + 1.0 / (Expr::constant(2.0) - 2.0);
        let err = fold_constants(&e).unwrap_err();
        assert_eq!(err.kind, FoldErrorKind::DivisionByZero);
        assert_eq!(err.path.to_string(), "/1");
        let e = x() * Expr::constant(-1.0).log();
        let err = fold_constants(&e).unwrap_err();
        assert_eq!(err.kind, FoldErrorKind::LogDomain);
        assert_eq!(err.path.to_string(), "/1");
        assert_eq!(
            fold_constants(&(x() / 0.0)).unwrap_err().kind,
            FoldErrorKind::DivisionByZero
        );
    }

    #[test]
    fn shared_nodes_stay_shared() {
        let s = x() + (Expr::constant(1.0) * 2.0);
        let e = s.clone() * s;
        let f = fold_constants(&e).unwrap();
        match f.node() {
            Node::Binary(_, l, r) => assert!(l.ptr_eq(r)),
            _ => panic!("expected product"),
        }
    }
}
