//! Irreducible block triangularization of a perfectly matched graph.
//!
//! The matched graph is projected onto its variables, strongly connected
//! components become blocks, and a topological order of the component DAG
//! gives the block order. If a variable of block `i` appears in a constraint
//! of block `j` then `i <= j`, so the permuted incidence matrix (constraints
//! as rows) is block lower triangular.

use std::collections::{BTreeSet, VecDeque};

use super::{IncidenceError, IncidenceGraph, Matching};
use crate::expr::VarId;
use crate::model::ConId;

/// Directed graph on nodes `0..n` with ordered successor lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiGraph {
    succ: Vec<Vec<usize>>,
}

impl DiGraph {
    pub fn new(n: usize) -> Self {
        DiGraph {
            succ: vec![Vec::new(); n],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize) {
        self.succ[from].push(to);
    }

    pub fn n_nodes(&self) -> usize {
        self.succ.len()
    }

    pub fn successors(&self, u: usize) -> &[usize] {
        &self.succ[u]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(u, s)| s.iter().map(move |&v| (u, v)))
    }
}

/// Ordered partition of a perfect matching into blocks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockPartition {
    pub blocks: Vec<Vec<(VarId, ConId)>>,
}

impl BlockPartition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn all_singletons(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }

    /// Concatenation of the blocks.
    pub fn pairs(&self) -> impl Iterator<Item = (VarId, ConId)> + '_ {
        self.blocks.iter().flatten().copied()
    }
}

/// Projects `g` onto its variable positions: an edge `a' -> a` for every
/// variable `a'` other than `a` that appears in the constraint matched with
/// `a`. Self-loops are left out.
///
/// Every variable must be matched.
pub fn project(g: &IncidenceGraph, m: &Matching) -> Result<DiGraph, IncidenceError> {
    let mut d = DiGraph::new(g.vars().len());
    for (a, &v) in g.vars().iter().enumerate() {
        let c = m.con_of(v).ok_or(IncidenceError::NotPerfect {
            matched: m.len(),
            vars: g.vars().len(),
            cons: g.cons().len(),
        })?;
        let ci = g
            .con_position(c)
            .ok_or(IncidenceError::UnknownConstraint(c))?;
        for &(a_bar, _) in g.con_adj(ci) {
            if a_bar != a {
                d.add_edge(a_bar, a);
            }
        }
    }
    Ok(d)
}

/// Strongly connected components by Tarjan's algorithm with an explicit call
/// stack. Components come out in reverse topological order; members of each
/// component are sorted.
pub fn strongly_connected_components(d: &DiGraph) -> Vec<Vec<usize>> {
    let n = d.n_nodes();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;

    for s in 0..n {
        if index[s] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(s, 0)];
        index[s] = counter;
        low[s] = counter;
        counter += 1;
        stack.push(s);
        on_stack[s] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = d.successors(v).get(*pos) {
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(p, _)) = call.last() {
                low[p] = low[p].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("component root is on the stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps
}

/// Collapses each component to a single node; edges inside a component are
/// dropped and parallel edges merged. Node `k` of the result is `comps[k]`.
pub fn compress(d: &DiGraph, comps: &[Vec<usize>]) -> DiGraph {
    let mut owner = vec![usize::MAX; d.n_nodes()];
    for (k, comp) in comps.iter().enumerate() {
        for &u in comp {
            owner[u] = k;
        }
    }
    let mut out = DiGraph::new(comps.len());
    for (k, comp) in comps.iter().enumerate() {
        let targets: BTreeSet<usize> = comp
            .iter()
            .flat_map(|&u| d.successors(u).iter().map(|&v| owner[v]))
            .filter(|&t| t != k)
            .collect();
        for t in targets {
            out.add_edge(k, t);
        }
    }
    out
}

/// Kahn's algorithm with a FIFO ready queue. Initially ready nodes, and the
/// nodes released by each step, enter the queue in increasing `key` order.
///
/// Returns `None` if `d` has a cycle.
pub fn topological_sort(d: &DiGraph, key: impl Fn(usize) -> usize) -> Option<Vec<usize>> {
    let n = d.n_nodes();
    let mut indegree = vec![0usize; n];
    for (_, v) in d.edges() {
        indegree[v] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&u| indegree[u] == 0).collect();
    ready.sort_by_key(|&u| key(u));
    let mut queue: VecDeque<usize> = ready.into();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        let mut released = Vec::new();
        for &v in d.successors(u) {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                released.push(v);
            }
        }
        released.sort_by_key(|&v| key(v));
        queue.extend(released);
    }
    (order.len() == n).then_some(order)
}

/// Orders the pairs of a perfect matching `m` of `g` into irreducible blocks
/// of a block lower triangular form. Within a block, pairs follow variable
/// order.
pub fn block_triangularize(
    g: &IncidenceGraph,
    m: &Matching,
) -> Result<BlockPartition, IncidenceError> {
    let not_perfect = || IncidenceError::NotPerfect {
        matched: m.len(),
        vars: g.vars().len(),
        cons: g.cons().len(),
    };
    if m.len() != g.vars().len() || m.len() != g.cons().len() {
        return Err(not_perfect());
    }
    m.check_edges(g)?;

    let d = project(g, m)?;
    let comps = strongly_connected_components(&d);
    let dag = compress(&d, &comps);
    let order = topological_sort(&dag, |k| comps[k][0]).expect("component graph is acyclic");

    let blocks = order
        .into_iter()
        .map(|k| {
            comps[k]
                .iter()
                .map(|&a| {
                    let v = g.vars()[a];
                    (v, m.con_of(v).expect("perfect matching"))
                })
                .collect()
        })
        .collect();
    Ok(BlockPartition { blocks })
}
