//! Hopcroft–Karp maximum-cardinality matching with constraints on the left.

use std::collections::VecDeque;

use super::{IncidenceGraph, Matching};

const INF: usize = usize::MAX;

/// Maximum-cardinality matching of `g`, pairs in variable order.
///
/// Phases run a BFS from all free constraints followed by augmenting DFS from
/// each free constraint in order. A constraint's variables are scanned in
/// edge order (first appearance for graphs built from a model), so ties go
/// to the earlier constraint and, within it, the earlier variable.
pub fn maximum_matching(g: &IncidenceGraph) -> Matching {
    let n = g.cons().len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|ci| g.con_adj(ci).iter().map(|&(vi, _)| vi).collect())
        .collect();
    let mut match_l: Vec<Option<usize>> = vec![None; n];
    let mut match_r: Vec<Option<usize>> = vec![None; g.vars().len()];
    let mut dist = vec![INF; n];
    let mut it = vec![0usize; n];

    loop {
        // Layer the graph.
        let mut queue = VecDeque::new();
        for u in 0..n {
            if match_l[u].is_none() {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = INF;
            }
        }
        let mut free_dist = INF;
        while let Some(u) = queue.pop_front() {
            if dist[u] >= free_dist {
                continue;
            }
            for &v in &adj[u] {
                match match_r[v] {
                    None => free_dist = free_dist.min(dist[u] + 1),
                    Some(w) if dist[w] == INF => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    _ => {}
                }
            }
        }
        if free_dist == INF {
            break;
        }

        it.iter_mut().for_each(|p| *p = 0);
        for root in 0..n {
            if match_l[root].is_some() {
                continue;
            }
            let mut stack = vec![root];
            while let Some(&u) = stack.last() {
                if it[u] == adj[u].len() {
                    dist[u] = INF;
                    stack.pop();
                    if let Some(&p) = stack.last() {
                        it[p] += 1;
                    }
                    continue;
                }
                let v = adj[u][it[u]];
                match match_r[v] {
                    None if dist[u] + 1 == free_dist => {
                        for &x in &stack {
                            let vx = adj[x][it[x]];
                            match_l[x] = Some(vx);
                            match_r[vx] = Some(x);
                        }
                        break;
                    }
                    Some(w) if dist[w] != INF && dist[w] == dist[u] + 1 => stack.push(w),
                    _ => it[u] += 1,
                }
            }
        }
    }

    let pairs = (0..g.vars().len()).filter_map(|v| match_r[v].map(|c| (g.vars()[v], g.cons()[c])));
    Matching::new(pairs).expect("augmenting paths keep the matching valid")
}
