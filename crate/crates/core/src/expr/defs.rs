use std::collections::{HashMap, HashSet};

use super::{DefId, Expr, ExprError, Node};

#[derive(Clone, Debug)]
pub struct Definition {
    pub id: DefId,
    pub name: String,
    pub expr: Expr,
}

/// Named subexpressions in topological order.
///
/// An entry may only reference entries that precede it, which [`push`]
/// enforces by rejecting references to ids not yet present. Ids are stable
/// keys and need not match positions.
///
/// [`push`]: DefinitionTable::push
#[derive(Clone, Debug, Default)]
pub struct DefinitionTable {
    entries: Vec<Definition>,
    position: HashMap<DefId, usize>,
    names: HashMap<String, DefId>,
    next_id: usize,
}

impl DefinitionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Definition> {
        self.entries.iter()
    }

    pub fn get(&self, id: DefId) -> Option<&Definition> {
        self.position.get(&id).map(|&i| &self.entries[i])
    }

    pub fn expr(&self, id: DefId) -> Option<&Expr> {
        self.get(id).map(|d| &d.expr)
    }

    pub fn position(&self, id: DefId) -> Option<usize> {
        self.position.get(&id).copied()
    }

    pub fn by_name(&self, name: &str) -> Option<DefId> {
        self.names.get(name).copied()
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.names.contains_key(name)
    }

    /// `base` if unused, otherwise `base_2`, `base_3`, ...
    pub fn fresh_name(&self, base: &str) -> String {
        if !self.contains_name(base) {
            return base.to_string();
        }
        (2..)
            .map(|k| format!("{base}_{k}"))
            .find(|n| !self.contains_name(n))
            .expect("unbounded search")
    }

    /// Appends a definition. Every `Defined` node reachable from `expr` must
    /// name an entry already in the table.
    pub fn push(&mut self, name: impl Into<String>, expr: Expr) -> Result<DefId, ExprError> {
        let name = name.into();
        if self.names.contains_key(&name) {
            return Err(ExprError::DuplicateDefinitionName(name));
        }
        self.check_references(&expr)?;
        let id = DefId(self.next_id);
        self.next_id += 1;
        self.position.insert(id, self.entries.len());
        self.names.insert(name.clone(), id);
        self.entries.push(Definition { id, name, expr });
        Ok(id)
    }

    /// Checks that every `Defined` node reachable from `expr` (without
    /// entering definitions) resolves in this table.
    pub fn check_references(&self, expr: &Expr) -> Result<(), ExprError> {
        let mut seen = HashSet::new();
        let mut stack = vec![expr.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.key()) {
                continue;
            }
            match e.node() {
                Node::Defined(d) if !self.position.contains_key(d) => {
                    return Err(ExprError::UnresolvedDefinition(*d));
                }
                Node::Unary(_, c) => stack.push(c.clone()),
                Node::Binary(_, l, r) => {
                    stack.push(l.clone());
                    stack.push(r.clone());
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Drops every entry for which `keep` is false. Callers must not drop an
    /// entry that a kept entry references.
    pub(crate) fn retain(&mut self, mut keep: impl FnMut(&Definition) -> bool) {
        self.entries.retain(|d| keep(d));
        self.position = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id, i))
            .collect();
        self.names = self
            .entries
            .iter()
            .map(|d| (d.name.clone(), d.id))
            .collect();
    }

    /// `id` and every entry it reaches through references, in table order,
    /// skipping entries for which `known` holds (and not looking past them).
    /// Processing the result front to back never meets an unprocessed
    /// reference, so callers can summarize deep chains without recursion.
    pub(crate) fn closure_in_order(&self, id: DefId, known: impl Fn(DefId) -> bool) -> Vec<DefId> {
        let mut found = HashSet::new();
        let mut stack = vec![id];
        while let Some(d) = stack.pop() {
            if known(d) || !self.position.contains_key(&d) || !found.insert(d) {
                continue;
            }
            visit_defined(&self.entries[self.position[&d]].expr, |r| stack.push(r));
        }
        let mut out: Vec<DefId> = found.into_iter().collect();
        out.sort_by_key(|d| self.position[d]);
        out
    }

    /// Single pass over the entries confirming strict topological order.
    pub fn is_topologically_ordered(&self) -> bool {
        let mut earlier = HashSet::new();
        for def in &self.entries {
            let mut ok = true;
            visit_defined(&def.expr, |d| ok &= earlier.contains(&d));
            if !ok {
                return false;
            }
            earlier.insert(def.id);
        }
        true
    }
}

/// Calls `f` for every `Defined` reference reachable from `expr` without
/// entering definitions.
pub(crate) fn visit_defined(expr: &Expr, mut f: impl FnMut(DefId)) {
    let mut seen = HashSet::new();
    let mut stack = vec![expr.clone()];
    while let Some(e) = stack.pop() {
        if !seen.insert(e.key()) {
            continue;
        }
        match e.node() {
            Node::Defined(d) => f(*d),
            Node::Unary(_, c) => stack.push(c.clone()),
            Node::Binary(_, l, r) => {
                stack.push(l.clone());
                stack.push(r.clone());
            }
            _ => {}
        }
    }
}
