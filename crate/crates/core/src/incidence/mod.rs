//! Variable–constraint incidence graphs, maximum matchings, and block
//! triangularization.
//!
//! Node order is significant throughout. Variables keep the order they were
//! given in (normally declaration order), constraints likewise, and each
//! constraint lists its variables in first-appearance order. Every algorithm
//! here scans in those orders, so results are reproducible.

mod btf;
mod matching;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::expr::{Analyzer, Coef, VarId, COEF_EPS};
use crate::model::{ConId, Model};

pub use btf::{
    block_triangularize, compress, project, strongly_connected_components, topological_sort,
    BlockPartition, DiGraph,
};
pub use matching::maximum_matching;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IncidenceError {
    #[error("variable {0} is not a node of the graph")]
    UnknownVariable(VarId),
    #[error("constraint {0} is not a node of the graph")]
    UnknownConstraint(ConId),
    #[error("({0}, {1}) is listed twice")]
    DuplicateEdge(VarId, ConId),
    #[error("({0}, {1}) is not an edge of the graph")]
    NotAnEdge(VarId, ConId),
    #[error("{0} is matched more than once")]
    SharedNode(String),
    #[error("matching of size {matched} is not perfect for a graph with {vars} variables and {cons} constraints")]
    NotPerfect {
        matched: usize,
        vars: usize,
        cons: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub var: VarId,
    pub con: ConId,
    pub linear: bool,
}

/// Bipartite graph between variables and constraints.
#[derive(Clone, Debug, Default)]
pub struct IncidenceGraph {
    vars: Vec<VarId>,
    cons: Vec<ConId>,
    var_index: HashMap<VarId, usize>,
    con_index: HashMap<ConId, usize>,
    /// Per constraint: (variable index, linear) in first-appearance order.
    con_adj: Vec<Vec<(usize, bool)>>,
    /// Per variable: (constraint index, linear) in constraint order.
    var_adj: Vec<Vec<(usize, bool)>>,
}

impl IncidenceGraph {
    /// Builds a graph from explicit edges. Each constraint's variables are
    /// ordered as its edges appear in `edges`.
    pub fn from_edges(
        vars: &[VarId],
        cons: &[ConId],
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self, IncidenceError> {
        let mut g = IncidenceGraph {
            vars: vars.to_vec(),
            cons: cons.to_vec(),
            var_index: vars.iter().enumerate().map(|(i, v)| (*v, i)).collect(),
            con_index: cons.iter().enumerate().map(|(i, c)| (*c, i)).collect(),
            con_adj: vec![Vec::new(); cons.len()],
            var_adj: vec![Vec::new(); vars.len()],
        };
        let mut seen = HashSet::new();
        for e in edges {
            let vi = *g
                .var_index
                .get(&e.var)
                .ok_or(IncidenceError::UnknownVariable(e.var))?;
            let ci = *g
                .con_index
                .get(&e.con)
                .ok_or(IncidenceError::UnknownConstraint(e.con))?;
            if !seen.insert((vi, ci)) {
                return Err(IncidenceError::DuplicateEdge(e.var, e.con));
            }
            g.con_adj[ci].push((vi, e.linear));
        }
        for (ci, adj) in g.con_adj.iter().enumerate() {
            for &(vi, lin) in adj {
                g.var_adj[vi].push((ci, lin));
            }
        }
        Ok(g)
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn cons(&self) -> &[ConId] {
        &self.cons
    }

    pub fn var_position(&self, v: VarId) -> Option<usize> {
        self.var_index.get(&v).copied()
    }

    pub fn con_position(&self, c: ConId) -> Option<usize> {
        self.con_index.get(&c).copied()
    }

    pub fn n_edges(&self) -> usize {
        self.con_adj.iter().map(Vec::len).sum()
    }

    /// Edges grouped by constraint, constraints in order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.con_adj.iter().enumerate().flat_map(move |(ci, adj)| {
            adj.iter().map(move |&(vi, linear)| Edge {
                var: self.vars[vi],
                con: self.cons[ci],
                linear,
            })
        })
    }

    /// Variables of `c` in first-appearance order, with their linear flags.
    pub fn vars_of(&self, c: ConId) -> impl Iterator<Item = (VarId, bool)> + '_ {
        self.con_index.get(&c).into_iter().flat_map(move |&ci| {
            self.con_adj[ci]
                .iter()
                .map(move |&(vi, l)| (self.vars[vi], l))
        })
    }

    /// Constraints containing `v`, in constraint order.
    pub fn cons_of(&self, v: VarId) -> impl Iterator<Item = (ConId, bool)> + '_ {
        self.var_index.get(&v).into_iter().flat_map(move |&vi| {
            self.var_adj[vi]
                .iter()
                .map(move |&(ci, l)| (self.cons[ci], l))
        })
    }

    /// `Some(linear)` if `(v, c)` is an edge.
    pub fn edge(&self, v: VarId, c: ConId) -> Option<bool> {
        let vi = *self.var_index.get(&v)?;
        let ci = *self.con_index.get(&c)?;
        self.con_adj[ci]
            .iter()
            .find(|(x, _)| *x == vi)
            .map(|(_, l)| *l)
    }

    /// The same nodes with only the linear edges.
    pub fn linear_part(&self) -> IncidenceGraph {
        let edges: Vec<Edge> = self.edges().filter(|e| e.linear).collect();
        IncidenceGraph::from_edges(&self.vars, &self.cons, edges).expect("subset of a valid graph")
    }

    pub(crate) fn con_adj(&self, ci: usize) -> &[(usize, bool)] {
        &self.con_adj[ci]
    }
}

/// A set of variable–constraint pairs, no two sharing a node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Matching {
    pairs: Vec<(VarId, ConId)>,
    by_var: HashMap<VarId, ConId>,
    by_con: HashMap<ConId, VarId>,
}

impl Matching {
    pub fn new(pairs: impl IntoIterator<Item = (VarId, ConId)>) -> Result<Self, IncidenceError> {
        let mut m = Matching::default();
        for (v, c) in pairs {
            if m.by_var.contains_key(&v) {
                return Err(IncidenceError::SharedNode(v.to_string()));
            }
            if m.by_con.contains_key(&c) {
                return Err(IncidenceError::SharedNode(c.to_string()));
            }
            m.by_var.insert(v, c);
            m.by_con.insert(c, v);
            m.pairs.push((v, c));
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(VarId, ConId)] {
        &self.pairs
    }

    pub fn con_of(&self, v: VarId) -> Option<ConId> {
        self.by_var.get(&v).copied()
    }

    pub fn var_of(&self, c: ConId) -> Option<VarId> {
        self.by_con.get(&c).copied()
    }

    /// Checks that every pair is an edge of `g`.
    pub fn check_edges(&self, g: &IncidenceGraph) -> Result<(), IncidenceError> {
        for &(v, c) in &self.pairs {
            if g.edge(v, c).is_none() {
                return Err(IncidenceError::NotAnEdge(v, c));
            }
        }
        Ok(())
    }
}

fn build(
    vars: &[VarId],
    cons: &[ConId],
    model: &Model,
    linear_only: bool,
) -> Result<IncidenceGraph, IncidenceError> {
    if let Some(v) = vars.iter().find(|v| model.var(**v).is_none()) {
        return Err(IncidenceError::UnknownVariable(*v));
    }
    let wanted: HashSet<VarId> = vars.iter().copied().collect();
    let mut analyzer = Analyzer::new(model.defs());
    let mut edges = Vec::new();
    for &c in cons {
        let (con, _) = model
            .constraint(c)
            .ok_or(IncidenceError::UnknownConstraint(c))?;
        let summary = analyzer.summary(&con.expr);
        for (v, coef) in &summary.vars {
            if !wanted.contains(v) {
                continue;
            }
            let linear = matches!(coef, Coef::Linear(a) if a.abs() > COEF_EPS);
            if linear || !linear_only {
                edges.push(Edge {
                    var: *v,
                    con: c,
                    linear,
                });
            }
        }
    }
    IncidenceGraph::from_edges(vars, cons, edges)
}

/// Graph with an edge `(x, c)` for every `x` in `vars` participating in `c`.
pub fn bipartite_graph(
    vars: &[VarId],
    cons: &[ConId],
    model: &Model,
) -> Result<IncidenceGraph, IncidenceError> {
    build(vars, cons, model, false)
}

/// Like [`bipartite_graph`] but keeping only linear edges.
pub fn linear_bipartite_graph(
    vars: &[VarId],
    cons: &[ConId],
    model: &Model,
) -> Result<IncidenceGraph, IncidenceError> {
    build(vars, cons, model, true)
}

/// Subgraph on the endpoints of `m`, with every edge of `g` between them.
/// Node order follows `g`.
pub fn induced_subgraph(
    g: &IncidenceGraph,
    m: &Matching,
) -> Result<IncidenceGraph, IncidenceError> {
    m.check_edges(g)?;
    let vars: Vec<VarId> = g
        .vars
        .iter()
        .copied()
        .filter(|v| m.con_of(*v).is_some())
        .collect();
    let cons: Vec<ConId> = g
        .cons
        .iter()
        .copied()
        .filter(|c| m.var_of(*c).is_some())
        .collect();
    let edges: Vec<Edge> = g
        .edges()
        .filter(|e| m.con_of(e.var).is_some() && m.var_of(e.con).is_some())
        .collect();
    IncidenceGraph::from_edges(&vars, &cons, edges)
}

/// Coordinate list of `g` against `model` positions: one `row col flag` line
/// per edge, rows being constraint indices and columns variable indices.
pub fn coordinate_list(g: &IncidenceGraph, model: &Model) -> String {
    let mut out = String::new();
    for e in g.edges() {
        let row = model.constraint_index(e.con).map_or(-1, |i| i as i64);
        let col = model.var_index(e.var).map_or(-1, |i| i as i64);
        let flag = if e.linear { "linear" } else { "nonlinear" };
        let _ = writeln!(out, "{row} {col} {flag}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;

    #[test]
    fn nonlinear_and_linear_edges() {
        let mut b = ModelBuilder::new();
        let x = b.var("x");
        let y = b.var("y");
        let c = b.equality("c", y - 2.0 * x.pow(2.0));
        let m = b.build().unwrap();
        let g = bipartite_graph(&m.var_ids(), &[c], &m).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(
            edges,
            vec![
                Edge {
                    var: VarId(1),
                    con: c,
                    linear: true
                },
                Edge {
                    var: VarId(0),
                    con: c,
                    linear: false
                },
            ]
        );
        let lg = linear_bipartite_graph(&m.var_ids(), &[c], &m).unwrap();
        assert_eq!(lg.n_edges(), 1);
        assert_eq!(lg.edge(VarId(1), c), Some(true));
        assert_eq!(coordinate_list(&g, &m), "0 1 linear\n0 0 nonlinear\n");
    }

    #[test]
    fn empty_constraint_set() {
        let mut b = ModelBuilder::new();
        b.var("x");
        let m = b.build().unwrap();
        let g = bipartite_graph(&m.var_ids(), &[], &m).unwrap();
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn induced_subgraph_keeps_cross_edges() {
        // x1 - x4^2 = 0, x4 - x1^2 = 0
        let mut b = ModelBuilder::new();
        let x1 = b.var("x1");
        let x4 = b.var("x4");
        let c1 = b.equality("c1", &x1 - x4.clone().pow(2.0));
        let c4 = b.equality("c4", &x4 - x1.pow(2.0));
        let m = b.build().unwrap();
        let g = bipartite_graph(&m.var_ids(), &[c1, c4], &m).unwrap();
        let mm = Matching::new([(VarId(0), c1), (VarId(1), c4)]).unwrap();
        let sub = induced_subgraph(&g, &mm).unwrap();
        assert_eq!(
            (sub.vars().len(), sub.cons().len(), sub.n_edges()),
            (2, 2, 4)
        );
        let bad = Matching::new([(VarId(0), c1), (VarId(1), ConId(9))]).unwrap();
        assert!(induced_subgraph(&g, &bad).is_err());
    }

    #[test]
    fn matching_rejects_shared_nodes() {
        assert!(Matching::new([(VarId(0), ConId(0)), (VarId(0), ConId(1))]).is_err());
        assert!(Matching::new([(VarId(0), ConId(0)), (VarId(1), ConId(0))]).is_err());
    }
}
