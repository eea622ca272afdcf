//! Variable replacement that also reaches into definitions.
//!
//! A definition whose expansion mentions a replaced variable is copied into a
//! new table entry with the replacement applied; the original entry is left
//! alone. Copies made under the elimination map are cached, so every
//! expression that needs the same rewritten definition shares one entry.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use crate::expr::{DefId, DefinitionTable, Expr, Node, VarId};

/// Cached copy of a definition: the new id, and how many of the
/// definition's variables were mapped when the copy was made.
pub(crate) type RewriteCache = HashMap<DefId, (DefId, usize)>;

pub(crate) struct Rewriter<'a> {
    pub table: &'a mut DefinitionTable,
    pub cache: &'a mut RewriteCache,
    def_vars: HashMap<DefId, Rc<HashSet<VarId>>>,
}

impl<'a> Rewriter<'a> {
    pub fn new(table: &'a mut DefinitionTable, cache: &'a mut RewriteCache) -> Self {
        Rewriter {
            table,
            cache,
            def_vars: HashMap::new(),
        }
    }

    /// Variables of a definition with nested definitions expanded.
    ///
    /// Entries are summarized in table order, so nested references are
    /// always known by the time they are met.
    pub fn vars_of_def(&mut self, d: DefId) -> Rc<HashSet<VarId>> {
        if let Some(v) = self.def_vars.get(&d) {
            return v.clone();
        }
        let pending = self
            .table
            .closure_in_order(d, |x| self.def_vars.contains_key(&x));
        for id in pending {
            let body = self
                .table
                .expr(id)
                .expect("closure only lists entries")
                .clone();
            let mut out = HashSet::new();
            let mut seen = HashSet::new();
            let mut stack = vec![body];
            while let Some(e) = stack.pop() {
                if !seen.insert(e.key()) {
                    continue;
                }
                match e.node() {
                    Node::Var(x) => {
                        out.insert(*x);
                    }
                    Node::Defined(inner) => {
                        if let Some(vs) = self.def_vars.get(inner) {
                            out.extend(vs.iter().copied());
                        }
                    }
                    Node::Unary(_, c) => stack.push(c.clone()),
                    Node::Binary(_, l, r) => {
                        stack.push(l.clone());
                        stack.push(r.clone());
                    }
                    Node::Const(_) => {}
                }
            }
            self.def_vars.insert(id, Rc::new(out));
        }
        self.def_vars.entry(d).or_default().clone()
    }

    /// Replaces every variable in `map`, inside definitions too.
    ///
    /// `map` must agree with the growing elimination map except possibly at
    /// `pinned`, whose entry is temporary. Copies of definitions that mention
    /// `pinned` are not cached.
    pub fn rewrite(&mut self, e: &Expr, map: &HashMap<VarId, Expr>, pinned: Option<VarId>) -> Expr {
        let mut memo = HashMap::new();
        self.node(e, map, pinned, &mut memo)
    }

    fn node(
        &mut self,
        e: &Expr,
        map: &HashMap<VarId, Expr>,
        pinned: Option<VarId>,
        memo: &mut HashMap<usize, Expr>,
    ) -> Expr {
        if let Some(done) = memo.get(&e.key()) {
            return done.clone();
        }
        let out = match e.node() {
            Node::Const(_) => e.clone(),
            Node::Var(x) => map.get(x).cloned().unwrap_or_else(|| e.clone()),
            Node::Defined(d) => match self.def(*d, map, pinned) {
                Some(d2) => Expr::defined(d2),
                None => e.clone(),
            },
            Node::Unary(op, c) => {
                let c2 = self.node(c, map, pinned, memo);
                if c2.ptr_eq(c) {
                    e.clone()
                } else {
                    Expr::unary(*op, c2)
                }
            }
            Node::Binary(op, l, r) => {
                let l2 = self.node(l, map, pinned, memo);
                let r2 = self.node(r, map, pinned, memo);
                if l2.ptr_eq(l) && r2.ptr_eq(r) {
                    e.clone()
                } else {
                    Expr::binary(*op, l2, r2)
                }
            }
        };
        memo.insert(e.key(), out.clone());
        out
    }

    /// Id of the rewritten copy of `d`, or `None` if `d` mentions no mapped
    /// variable.
    fn def(
        &mut self,
        d: DefId,
        map: &HashMap<VarId, Expr>,
        pinned: Option<VarId>,
    ) -> Option<DefId> {
        let vars = self.vars_of_def(d);
        let hits = vars.iter().filter(|v| map.contains_key(v)).count();
        if hits == 0 {
            return None;
        }
        let cacheable = pinned.is_none_or(|p| !vars.contains(&p));
        if cacheable {
            if let Some(&(d2, n)) = self.cache.get(&d) {
                if n == hits {
                    return Some(d2);
                }
            }
        }
        let def = self.table.get(d)?.clone();
        let body = self.rewrite(&def.expr, map, pinned);
        let name = self.table.fresh_name(&def.name);
        let d2 = self
            .table
            .push(name, body)
            .expect("rewritten bodies reference existing entries");
        if cacheable {
            self.cache.insert(d, (d2, hits));
        }
        Some(d2)
    }
}
