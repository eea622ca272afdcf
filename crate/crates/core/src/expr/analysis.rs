//! Structural queries: which variables participate in an expression, and
//! which of them participate linearly with a constant coefficient.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use indexmap::{IndexMap, IndexSet};

use super::{BinaryOp, DefId, DefinitionTable, Expr, ExprError, Node, UnaryOp, VarId, COEF_EPS};

/// How one variable participates in an expression.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinClass {
    Absent,
    /// The expression is `a*x + r` with `r` free of `x`.
    Linear(f64),
    Nonlinear,
}

impl LinClass {
    /// Linear with a coefficient usable as a pivot.
    pub fn is_pivotable(self) -> bool {
        matches!(self, LinClass::Linear(a) if a.abs() > COEF_EPS)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coef {
    Linear(f64),
    Nonlinear,
}

/// Per-node structural summary.
///
/// `vars` lists every participating variable in first-appearance order
/// (pre-order, left to right, definitions expanded in place).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    /// Value of the node if it folds to a finite constant.
    pub constant: Option<f64>,
    pub vars: IndexMap<VarId, Coef>,
}

impl Summary {
    pub fn class_of(&self, x: VarId) -> LinClass {
        match self.vars.get(&x) {
            None => LinClass::Absent,
            Some(Coef::Linear(a)) => LinClass::Linear(*a),
            Some(Coef::Nonlinear) => LinClass::Nonlinear,
        }
    }

    pub fn linear_vars(&self) -> IndexSet<VarId> {
        self.vars
            .iter()
            .filter(|(_, c)| matches!(c, Coef::Linear(a) if a.abs() > COEF_EPS))
            .map(|(v, _)| *v)
            .collect()
    }

    /// No participating variable is nonlinear.
    pub fn is_linear(&self) -> bool {
        self.vars.values().all(|c| matches!(c, Coef::Linear(_)))
    }

    fn constant(v: f64) -> Self {
        Summary {
            constant: v.is_finite().then_some(v),
            vars: IndexMap::new(),
        }
    }

    fn all_nonlinear(parts: &[&Summary]) -> Self {
        let mut vars = IndexMap::new();
        for p in parts {
            for v in p.vars.keys() {
                vars.insert(*v, Coef::Nonlinear);
            }
        }
        Summary {
            constant: None,
            vars,
        }
    }

    fn scaled(&self, k: f64) -> Self {
        let vars = self
            .vars
            .iter()
            .map(|(v, c)| {
                let c = match *c {
                    Coef::Linear(a) if (a * k).is_finite() => Coef::Linear(a * k),
                    _ => Coef::Nonlinear,
                };
                (*v, c)
            })
            .collect();
        Summary {
            constant: self.constant.map(|c| c * k).filter(|c| c.is_finite()),
            vars,
        }
    }

    fn combine(&self, other: &Summary, sign: f64) -> Self {
        let mut vars = self.vars.clone();
        for (v, c) in &other.vars {
            let merged = match (vars.get(v), *c) {
                (None, Coef::Linear(b)) => Coef::Linear(sign * b),
                (Some(Coef::Linear(a)), Coef::Linear(b)) if (a + sign * b).is_finite() => {
                    Coef::Linear(a + sign * b)
                }
                _ => Coef::Nonlinear,
            };
            vars.insert(*v, merged);
        }
        let constant = match (self.constant, other.constant) {
            (Some(a), Some(b)) => Some(a + sign * b).filter(|c| c.is_finite()),
            _ => None,
        };
        Summary { constant, vars }
    }
}

/// Summarizes expressions against one definition table, caching the summary
/// of every definition it expands. Reuse one analyzer for many expressions
/// over the same table.
pub struct Analyzer<'a> {
    defs: &'a DefinitionTable,
    def_cache: HashMap<DefId, Rc<Summary>>,
}

impl<'a> Analyzer<'a> {
    pub fn new(defs: &'a DefinitionTable) -> Self {
        Analyzer {
            defs,
            def_cache: HashMap::new(),
        }
    }

    pub fn defs(&self) -> &'a DefinitionTable {
        self.defs
    }

    pub fn summary(&mut self, e: &Expr) -> Rc<Summary> {
        let mut memo = HashMap::new();
        self.summarize(e, &mut memo)
    }

    pub fn classify(&mut self, e: &Expr, x: VarId) -> LinClass {
        self.summary(e).class_of(x)
    }

    pub fn linear_vars(&mut self, e: &Expr) -> IndexSet<VarId> {
        self.summary(e).linear_vars()
    }

    pub fn def_summary(&mut self, id: DefId) -> Rc<Summary> {
        if let Some(s) = self.def_cache.get(&id) {
            return s.clone();
        }
        let pending = self
            .defs
            .closure_in_order(id, |d| self.def_cache.contains_key(&d));
        for d in pending {
            let body = self
                .defs
                .expr(d)
                .expect("closure only lists entries")
                .clone();
            let mut memo = HashMap::new();
            let s = self.summarize(&body, &mut memo);
            self.def_cache.insert(d, s);
        }
        // Unresolved references are opaque: no variables, not constant.
        self.def_cache
            .entry(id)
            .or_insert_with(|| Rc::new(Summary::default()))
            .clone()
    }

    fn summarize(&mut self, e: &Expr, memo: &mut HashMap<usize, Rc<Summary>>) -> Rc<Summary> {
        let shared = e.is_shared();
        if shared {
            if let Some(s) = memo.get(&e.key()) {
                return s.clone();
            }
        }
        let s = match e.node() {
            Node::Const(v) => Rc::new(Summary::constant(*v)),
            Node::Var(x) => {
                let mut vars = IndexMap::new();
                vars.insert(*x, Coef::Linear(1.0));
                Rc::new(Summary {
                    constant: None,
                    vars,
                })
            }
            Node::Defined(d) => self.def_summary(*d),
            Node::Unary(op, c) => {
                let c = self.summarize(c, memo);
                Rc::new(match op {
                    UnaryOp::Neg => c.scaled(-1.0),
                    _ => match c.constant {
                        Some(v) => Summary::constant(op.apply(v)),
                        None => Summary::all_nonlinear(&[&c]),
                    },
                })
            }
            Node::Binary(op, l, r) => {
                let l = self.summarize(l, memo);
                let r = self.summarize(r, memo);
                Rc::new(binary_summary(*op, &l, &r))
            }
        };
        if shared {
            memo.insert(e.key(), s.clone());
        }
        s
    }
}

fn binary_summary(op: BinaryOp, l: &Summary, r: &Summary) -> Summary {
    match op {
        BinaryOp::Add => l.combine(r, 1.0),
        BinaryOp::Sub => l.combine(r, -1.0),
        BinaryOp::Mul => match (l.constant, r.constant) {
            (Some(a), Some(b)) => Summary::constant(a * b),
            (Some(a), None) => r.scaled(a),
            (None, Some(b)) => l.scaled(b),
            (None, None) => Summary::all_nonlinear(&[l, r]),
        },
        BinaryOp::Div => match r.constant {
            Some(b) if b != 0.0 => match l.constant {
                Some(a) => Summary::constant(a / b),
                None => l.scaled(1.0 / b),
            },
            _ => Summary::all_nonlinear(&[l, r]),
        },
        BinaryOp::Pow => match (l.constant, r.constant) {
            (Some(a), Some(b)) => Summary::constant(a.powf(b)),
            _ => Summary::all_nonlinear(&[l, r]),
        },
    }
}

/// Variables reachable from `e`, definitions expanded, in first-appearance
/// order. Runs in time linear in the number of distinct nodes.
pub fn all_vars(e: &Expr, defs: &DefinitionTable) -> Result<IndexSet<VarId>, ExprError> {
    let mut out = IndexSet::new();
    let mut seen_nodes = HashSet::new();
    let mut seen_defs = HashSet::new();
    // Children pushed right-to-left so the left subtree is visited first.
    let mut stack = vec![e.clone()];
    while let Some(e) = stack.pop() {
        if e.is_shared() && !seen_nodes.insert(e.key()) {
            continue;
        }
        match e.node() {
            Node::Const(_) => {}
            Node::Var(x) => {
                out.insert(*x);
            }
            Node::Defined(d) => {
                if seen_defs.insert(*d) {
                    let body = defs.expr(*d).ok_or(ExprError::UnresolvedDefinition(*d))?;
                    stack.push(body.clone());
                }
            }
            Node::Unary(_, c) => stack.push(c.clone()),
            Node::Binary(_, l, r) => {
                stack.push(r.clone());
                stack.push(l.clone());
            }
        }
    }
    Ok(out)
}

/// Total; an unresolved definition contributes nothing.
pub fn classify_linear(e: &Expr, x: VarId, defs: &DefinitionTable) -> LinClass {
    Analyzer::new(defs).classify(e, x)
}

/// Variables of `e` that are linear with a coefficient above
/// [`COEF_EPS`](super::COEF_EPS), in first-appearance order.
pub fn linear_vars(e: &Expr, defs: &DefinitionTable) -> IndexSet<VarId> {
    Analyzer::new(defs).linear_vars(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> Expr {
        Expr::var(VarId(i))
    }

    const X: VarId = VarId(0);
    const Y: VarId = VarId(1);
    const Z: VarId = VarId(2);
    const W: VarId = VarId(3);

    #[test]
    fn all_vars_of_cubic_example() {
        let defs = DefinitionTable::new();
        let e = 3.0 * v(0).pow(2.0) - 1.0;
        assert_eq!(
            all_vars(&e, &defs).unwrap().into_iter().collect::<Vec<_>>(),
            vec![X]
        );
        assert!(all_vars(&Expr::constant(5.0), &defs).unwrap().is_empty());
    }

    #[test]
    fn all_vars_expands_definitions() {
        let mut defs = DefinitionTable::new();
        let d = defs.push("d", v(1) * v(2)).unwrap();
        let e = v(0) + Expr::defined(d);
        let got: Vec<_> = all_vars(&e, &defs).unwrap().into_iter().collect();
        assert_eq!(got, vec![X, Y, Z]);
    }

    #[test]
    fn all_vars_reports_unresolved_definition() {
        let defs = DefinitionTable::new();
        let e = v(0) + Expr::defined(DefId(4));
        assert_eq!(
            all_vars(&e, &defs),
            Err(ExprError::UnresolvedDefinition(DefId(4)))
        );
    }

    #[test]
    fn first_appearance_order() {
        let defs = DefinitionTable::new();
        let e = v(3) - v(0) * 2.0 + v(3) + v(1);
        let got: Vec<_> = all_vars(&e, &defs).unwrap().into_iter().collect();
        assert_eq!(got, vec![W, X, Y]);
        let lin: Vec<_> = linear_vars(&e, &defs).into_iter().collect();
        assert_eq!(lin, vec![W, X, Y]);
    }

    #[test]
    fn classification_examples() {
        let defs = DefinitionTable::new();
        // y - (2x + 3)
        let e = v(1) - (2.0 * v(0) + 3.0);
        assert_eq!(classify_linear(&e, Y, &defs), LinClass::Linear(1.0));
        assert_eq!(classify_linear(&e, X, &defs), LinClass::Linear(-2.0));
        // y - 2x^2
        let e = v(1) - 2.0 * v(0).pow(2.0);
        assert_eq!(classify_linear(&e, X, &defs), LinClass::Nonlinear);
        assert_eq!(classify_linear(&e, Y, &defs), LinClass::Linear(1.0));
        assert_eq!(classify_linear(&e, Z, &defs), LinClass::Absent);
        // x - x
        let e = v(0) - v(0);
        assert_eq!(classify_linear(&e, X, &defs), LinClass::Linear(0.0));
        assert!(linear_vars(&e, &defs).is_empty());
        assert_eq!(
            classify_linear(&Expr::constant(2.0), X, &defs),
            LinClass::Absent
        );
    }

    #[test]
    fn products_and_quotients() {
        let defs = DefinitionTable::new();
        assert_eq!(
            classify_linear(&((v(0) + 1.0) * 3.0), X, &defs),
            LinClass::Linear(3.0)
        );
        assert_eq!(
            classify_linear(&(v(0) / 4.0), X, &defs),
            LinClass::Linear(0.25)
        );
        assert_eq!(
            classify_linear(&(v(0) / 0.0), X, &defs),
            LinClass::Nonlinear
        );
        assert_eq!(
            classify_linear(&(v(0) * v(1)), X, &defs),
            LinClass::Nonlinear
        );
        assert_eq!(
            classify_linear(&(1.0 / v(0)), X, &defs),
            LinClass::Nonlinear
        );
        // constant subtrees fold, including transcendental ones
        let k = Expr::constant(0.0).cos() * 2.0;
        assert_eq!(
            classify_linear(&(k * v(0)), X, &defs),
            LinClass::Linear(2.0)
        );
        // hidden cancellation is not discovered
        let e = v(0) * v(1) - v(0) * v(1) + v(0);
        assert_eq!(classify_linear(&e, X, &defs), LinClass::Nonlinear);
        assert_eq!(
            classify_linear(&v(0).pow(1.0), X, &defs),
            LinClass::Nonlinear
        );
    }

    #[test]
    fn linear_vars_examples() {
        let defs = DefinitionTable::new();
        let e = v(1) - 2.0 * v(0).pow(2.0);
        assert_eq!(
            linear_vars(&e, &defs).into_iter().collect::<Vec<_>>(),
            vec![Y]
        );
        assert!(linear_vars(&(3.0 * v(0).pow(2.0) - 1.0), &defs).is_empty());
        let e = v(3) - v(0) - v(1);
        assert_eq!(
            linear_vars(&e, &defs).into_iter().collect::<Vec<_>>(),
            vec![W, X, Y]
        );
    }

    #[test]
    fn definitions_are_expanded_for_classification() {
        let mut defs = DefinitionTable::new();
        let d = defs.push("d", 100.0 * v(0) + 1.0).unwrap();
        let e = v(3) - 2.0 * Expr::defined(d);
        assert_eq!(classify_linear(&e, X, &defs), LinClass::Linear(-200.0));
        let fixed = defs.push("f", Expr::constant(2.0) * 3.0).unwrap();
        let e = v(0) * Expr::defined(fixed);
        assert_eq!(classify_linear(&e, X, &defs), LinClass::Linear(6.0));
    }
}
