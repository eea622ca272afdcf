use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varagg::expr::VarId;
use varagg::incidence::{
    block_triangularize, compress, maximum_matching, project, strongly_connected_components,
    topological_sort, Edge, IncidenceGraph, Matching,
};
use varagg::model::ConId;

fn graph(nv: usize, nc: usize, edges: &[(usize, usize)]) -> IncidenceGraph {
    let vars: Vec<_> = (0..nv).map(VarId).collect();
    let cons: Vec<_> = (0..nc).map(ConId).collect();
    let es = edges.iter().map(|&(v, c)| Edge {
        var: VarId(v),
        con: ConId(c),
        linear: true,
    });
    IncidenceGraph::from_edges(&vars, &cons, es).unwrap()
}

fn random_edges(rng: &mut ChaCha8Rng, nv: usize, nc: usize, p: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for c in 0..nc {
        for v in 0..nv {
            if rng.gen_bool(p) {
                out.push((v, c));
            }
        }
    }
    out
}

/// Largest matching by trying every choice for every constraint.
fn brute_force_cardinality(nv: usize, nc: usize, edges: &[(usize, usize)]) -> usize {
    fn go(c: usize, nc: usize, adj: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
        if c == nc {
            return 0;
        }
        let mut best = go(c + 1, nc, adj, used);
        for &v in &adj[c] {
            if !used[v] {
                used[v] = true;
                best = best.max(1 + go(c + 1, nc, adj, used));
                used[v] = false;
            }
        }
        best
    }
    let mut adj = vec![Vec::new(); nc];
    for &(v, c) in edges {
        adj[c].push(v);
    }
    go(0, nc, &adj, &mut vec![false; nv])
}

#[test]
fn matching_cardinality_equals_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let nv = rng.gen_range(1..=8);
        let nc = rng.gen_range(1..=8);
        let p = rng.gen_range(0.1..0.6);
        let edges = random_edges(&mut rng, nv, nc, p);
        let g = graph(nv, nc, &edges);
        let m = maximum_matching(&g);
        m.check_edges(&g).unwrap();
        assert_eq!(
            m.len(),
            brute_force_cardinality(nv, nc, &edges),
            "{edges:?}"
        );
    }
}

/// Perfectly matched system: pair `i` is `(v_i, c_i)` after shuffling ids,
/// plus random extra edges.
fn matched_system(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: f64,
) -> (IncidenceGraph, Matching, Vec<(usize, usize)>) {
    let mut vs: Vec<usize> = (0..n).collect();
    let mut cs: Vec<usize> = (0..n).collect();
    vs.shuffle(rng);
    cs.shuffle(rng);
    let mut edges: BTreeSet<(usize, usize)> = (0..n).map(|i| (vs[i], cs[i])).collect();
    for v in 0..n {
        for c in 0..n {
            if rng.gen_bool(p) {
                edges.insert((v, c));
            }
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    let m = Matching::new((0..n).map(|i| (VarId(vs[i]), ConId(cs[i])))).unwrap();
    (graph(n, n, &edges), m, edges)
}

/// Finest block lower triangular form over all orderings of the matched
/// pairs: the ordering with the most valid cuts. A cut after position `k`
/// is valid when no constraint at or before `k` contains a variable after it.
fn finest_blocks(
    pairs: &[(usize, usize)],
    edges: &HashSet<(usize, usize)>,
) -> (usize, BTreeSet<BTreeSet<usize>>) {
    let n = pairs.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<(usize, BTreeSet<BTreeSet<usize>>)> = None;
    permute(&mut order, 0, &mut |perm| {
        let mut blocks = BTreeSet::new();
        let mut current = BTreeSet::new();
        for k in 0..n {
            current.insert(pairs[perm[k]].0);
            let cut = (0..=k).all(|i| {
                ((k + 1)..n).all(|j| !edges.contains(&(pairs[perm[j]].0, pairs[perm[i]].1)))
            });
            if cut {
                blocks.insert(std::mem::take(&mut current));
            }
        }
        if best.as_ref().is_none_or(|(b, _)| blocks.len() > *b) {
            best = Some((blocks.len(), blocks));
        }
    });
    best.unwrap()
}

fn permute(a: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == a.len() {
        f(a);
        return;
    }
    for i in k..a.len() {
        a.swap(k, i);
        permute(a, k + 1, f);
        a.swap(k, i);
    }
}

#[test]
fn block_triangularization_equals_exhaustive_permutation_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let n = rng.gen_range(1..=7);
        let p = rng.gen_range(0.05..0.35);
        let (g, m, edges) = matched_system(&mut rng, n, p);
        let parts = block_triangularize(&g, &m).unwrap();
        let pairs: Vec<(usize, usize)> = m.pairs().iter().map(|(v, c)| (v.0, c.0)).collect();
        let edge_set: HashSet<_> = edges.iter().copied().collect();
        let (count, blocks) = finest_blocks(&pairs, &edge_set);
        let ours: BTreeSet<BTreeSet<usize>> = parts
            .blocks
            .iter()
            .map(|b| b.iter().map(|(v, _)| v.0).collect())
            .collect();
        assert_eq!(parts.len(), count, "{edges:?}");
        assert_eq!(ours, blocks, "{edges:?}");
        assert_lower_triangular(&g, &parts.blocks);
    }
}

fn assert_lower_triangular(g: &IncidenceGraph, blocks: &[Vec<(VarId, ConId)>]) {
    let block_of = |pick: &dyn Fn(&(VarId, ConId)) -> bool| {
        blocks.iter().position(|b| b.iter().any(pick)).unwrap()
    };
    for e in g.edges() {
        let i = block_of(&|p| p.0 == e.var);
        let j = block_of(&|p| p.1 == e.con);
        assert!(i <= j, "variable block {i} appears in constraint block {j}");
    }
}

fn arb_matched() -> impl Strategy<Value = (IncidenceGraph, Matching)> {
    (1usize..=12, 0.0f64..0.4, any::<u64>()).prop_map(|(n, p, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, m, _) = matched_system(&mut rng, n, p);
        (g, m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn blocks_are_irreducible_and_triangular((g, m) in arb_matched()) {
        let parts = block_triangularize(&g, &m).unwrap();
        prop_assert_eq!(parts.pairs().count(), m.len());
        assert_lower_triangular(&g, &parts.blocks);
        for block in &parts.blocks {
            let sub = Matching::new(block.iter().copied()).unwrap();
            let sg = varagg::incidence::induced_subgraph(&g, &sub).unwrap();
            prop_assert_eq!(block_triangularize(&sg, &sub).unwrap().len(), 1);
        }
    }

    #[test]
    fn projection_follows_the_definition((g, m) in arb_matched()) {
        let d = project(&g, &m).unwrap();
        let got: BTreeSet<(usize, usize)> = d.edges().collect();
        let mut want = BTreeSet::new();
        for (a, &v) in g.vars().iter().enumerate() {
            let c = m.con_of(v).unwrap();
            for (a_bar, &w) in g.vars().iter().enumerate() {
                if a_bar != a && g.edge(w, c).is_some() {
                    want.insert((a_bar, a));
                }
            }
        }
        prop_assert_eq!(got, want);
        let comps = strongly_connected_components(&d);
        let dag = compress(&d, &comps);
        prop_assert_eq!(dag.n_nodes(), comps.len());
        prop_assert!(topological_sort(&dag, |u| u).is_some());
    }

    #[test]
    fn maximum_beats_greedy(nv in 1usize..10, nc in 1usize..10, p in 0.05f64..0.6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = random_edges(&mut rng, nv, nc, p);
        let g = graph(nv, nc, &edges);
        let m = maximum_matching(&g);
        let mut used_v = HashSet::new();
        let mut used_c = HashSet::new();
        let mut greedy = 0;
        for &(v, c) in &edges {
            if !used_v.contains(&v) && !used_c.contains(&c) {
                used_v.insert(v);
                used_c.insert(c);
                greedy += 1;
            }
        }
        prop_assert!(m.len() >= greedy);
        let vs: HashSet<_> = m.pairs().iter().map(|p| p.0).collect();
        let cs: HashSet<_> = m.pairs().iter().map(|p| p.1).collect();
        prop_assert_eq!(vs.len(), m.len());
        prop_assert_eq!(cs.len(), m.len());
    }
}

#[test]
fn fixed_examples() {
    let chain = graph(3, 3, &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)]);
    let diag = Matching::new((0..3).map(|i| (VarId(i), ConId(i)))).unwrap();
    let parts = block_triangularize(&chain, &diag).unwrap();
    assert_eq!(
        parts.blocks,
        vec![
            vec![(VarId(0), ConId(0))],
            vec![(VarId(1), ConId(1))],
            vec![(VarId(2), ConId(2))]
        ]
    );

    let two_cycle = graph(2, 2, &[(0, 0), (1, 0), (0, 1), (1, 1)]);
    let m = Matching::new([(VarId(0), ConId(0)), (VarId(1), ConId(1))]).unwrap();
    assert_eq!(block_triangularize(&two_cycle, &m).unwrap().len(), 1);

    let star = graph(3, 1, &[(0, 0), (1, 0), (2, 0)]);
    assert_eq!(maximum_matching(&star).len(), 1);
}
