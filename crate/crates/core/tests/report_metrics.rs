use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varagg::expr::{evaluate, DefinitionTable, Expr, Node, VarId};
use varagg::generator::{generate, GeneratorConfig};
use varagg::model::{Model, ModelBuilder};
use varagg::report::{bounds_report, reduced_metrics, structural_metrics};
use varagg::strategies::{linear_matching_run, run_strategy, StrategyKind};

fn walk(e: &Expr, defs: &DefinitionTable, out: &mut BTreeSet<VarId>) {
    match e.node() {
        Node::Const(_) => {}
        Node::Var(v) => {
            out.insert(*v);
        }
        Node::Defined(d) => walk(defs.expr(*d).unwrap(), defs, out),
        Node::Unary(_, c) => walk(c, defs, out),
        Node::Binary(_, l, r) => {
            walk(l, defs, out);
            walk(r, defs, out);
        }
    }
}

/// Linear with a nonzero slope, judged by central differences at a few
/// random points.
fn numerically_linear(
    e: &Expr,
    x: VarId,
    vars: &BTreeSet<VarId>,
    defs: &DefinitionTable,
    rng: &mut ChaCha8Rng,
) -> bool {
    let mut slopes = Vec::new();
    for _ in 0..4 {
        let p: HashMap<VarId, f64> = vars
            .iter()
            .map(|v| (*v, rng.gen_range(-1.5..1.5)))
            .collect();
        let h = 1e-3;
        let mut lo = p.clone();
        let mut hi = p.clone();
        *lo.get_mut(&x).unwrap() -= h;
        *hi.get_mut(&x).unwrap() += h;
        let d = (evaluate(e, &hi, defs).unwrap() - evaluate(e, &lo, defs).unwrap()) / (2.0 * h);
        slopes.push(d);
    }
    let s0 = slopes[0];
    s0.abs() > 1e-9
        && slopes
            .iter()
            .all(|s| (s - s0).abs() <= 1e-6 * s0.abs().max(1.0))
}

/// (n_con, total vars, total linear vars, max degree, linear rows)
fn recount(m: &Model, seed: u64) -> (usize, usize, usize, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut n, mut nnz, mut lin, mut maxdeg, mut lin_rows) = (0, 0, 0, 0, 0);
    for (c, _) in m.constraints() {
        let mut vars = BTreeSet::new();
        walk(&c.expr, m.defs(), &mut vars);
        let n_lin = vars
            .iter()
            .filter(|x| numerically_linear(&c.expr, **x, &vars, m.defs(), &mut rng))
            .count();
        n += 1;
        nnz += vars.len();
        lin += n_lin;
        maxdeg = maxdeg.max(vars.len());
        lin_rows += usize::from(n_lin == vars.len());
    }
    (n, nnz, lin, maxdeg, lin_rows)
}

#[test]
fn metrics_match_an_independent_recount() {
    for (seed, frac) in [(1, 0.0), (2, 0.3), (3, 0.7)] {
        let m = generate(&GeneratorConfig::new(20, frac, seed));
        let run = run_strategy(&m, StrategyKind::Lm).unwrap();
        for (metrics, model) in [
            (structural_metrics(&m), &m),
            (reduced_metrics(&run.reduced), &run.reduced.model),
        ] {
            let (n, nnz, lin, maxdeg, lin_rows) = recount(model, seed);
            assert_eq!(metrics.n_con, n);
            assert_eq!(metrics.n_var, model.variables().len());
            assert!((metrics.nnz_per_con - nnz as f64 / n as f64).abs() < 1e-12);
            assert!(
                (metrics.lin_nnz_per_con - lin as f64 / n as f64).abs() < 1e-12,
                "seed {seed}"
            );
            assert_eq!(metrics.max_con_degree, maxdeg);
            assert_eq!(metrics.n_lin_con, lin_rows);
        }
    }
}

#[test]
fn bounds_chain_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let mut b = ModelBuilder::new();
        let xs: Vec<Expr> = (0..n).map(|i| b.var(&format!("x{i}"))).collect();
        for c in 0..n {
            let mut e = Expr::constant(rng.gen_range(-1.0..1.0));
            for (i, x) in xs.iter().enumerate() {
                if i == c || rng.gen_bool(0.3) {
                    e = if rng.gen_bool(0.25) {
                        e + x.clone().sin()
                    } else {
                        e + rng.gen_range(0.5..2.0) * x
                    };
                }
            }
            b.equality(&format!("c{c}"), e);
        }
        let m = b.build().unwrap();
        let run = linear_matching_run(&m.var_ids(), &m.equality_ids(), &m);
        let r = bounds_report(&run).unwrap();
        assert!(r.n_block <= r.n_agg && r.n_agg <= r.n_match);
        if run.blocks.all_singletons() {
            assert_eq!(r.n_agg, r.n_match);
        }
    }
}
