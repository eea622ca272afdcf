use std::collections::HashMap;

use super::{DefId, Expr, Node, VarId};

/// Replaces every `Var(x)` node by `Defined(replacement)`.
///
/// Definitions are not entered. Subgraphs without `x` are returned as the
/// same nodes, and nodes shared in the input are shared in the output.
pub fn substitute(e: &Expr, x: VarId, replacement: DefId) -> Expr {
    let mut map = HashMap::new();
    map.insert(x, Expr::defined(replacement));
    replace_vars(e, &map)
}

/// Replaces variables by arbitrary expressions in one pass.
pub fn replace_vars(e: &Expr, map: &HashMap<VarId, Expr>) -> Expr {
    if map.is_empty() {
        return e.clone();
    }
    replace_leaves(e, &|n| match n {
        Node::Var(x) => map.get(x).cloned(),
        _ => None,
    })
}

/// Replaces `Defined` references by arbitrary expressions. The replacements
/// are not entered.
pub(crate) fn replace_defined(e: &Expr, map: &HashMap<DefId, Expr>) -> Expr {
    replace_leaves(e, &|n| match n {
        Node::Defined(d) => map.get(d).cloned(),
        _ => None,
    })
}

fn replace_leaves(e: &Expr, leaf: &dyn Fn(&Node) -> Option<Expr>) -> Expr {
    let mut memo = HashMap::new();
    replace(e, leaf, &mut memo)
}

fn replace(
    e: &Expr,
    leaf: &dyn Fn(&Node) -> Option<Expr>,
    memo: &mut HashMap<usize, Expr>,
) -> Expr {
    if e.is_shared() {
        if let Some(done) = memo.get(&e.key()) {
            return done.clone();
        }
    }
    let out = match e.node() {
        Node::Var(_) | Node::Const(_) | Node::Defined(_) => {
            leaf(e.node()).unwrap_or_else(|| e.clone())
        }
        Node::Unary(op, c) => {
            let c2 = replace(c, leaf, memo);
            if c2.ptr_eq(c) {
                e.clone()
            } else {
                Expr::unary(*op, c2)
            }
        }
        Node::Binary(op, l, r) => {
            let l2 = replace(l, leaf, memo);
            let r2 = replace(r, leaf, memo);
            if l2.ptr_eq(l) && r2.ptr_eq(r) {
                e.clone()
            } else {
                Expr::binary(*op, l2, r2)
            }
        }
    };
    if e.is_shared() {
        memo.insert(e.key(), out.clone());
    }
    out
}
