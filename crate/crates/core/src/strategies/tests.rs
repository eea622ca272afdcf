use super::*;
use crate::expr::{evaluate, Expr};
use crate::model::ModelBuilder;

fn table_examples() -> (Model, [ConId; 4]) {
    let mut b = ModelBuilder::new();
    let x = b.var("x");
    let y = b.var("y");
    let c1 = b.equality("sq", &y - 2.0 * x.clone().pow(2.0));
    let c2 = b.equality("lin", &y - (2.0 * &x + 3.0));
    let c3 = b.equality("eq", &y - (&x + 4.0));
    let c4 = b.equality("fix", &y - 1.0);
    (b.build().unwrap(), [c1, c2, c3, c4])
}

#[test]
fn filter_table() {
    let (m, cons) = table_examples();
    let pass: Vec<Vec<ConId>> = FilterKind::ALL
        .iter()
        .map(|k| filter_constraints(*k, &cons, &m))
        .collect();
    assert_eq!(pass[0], cons.to_vec());
    assert_eq!(pass[1], cons[1..].to_vec());
    assert_eq!(pass[2], cons[2..].to_vec());
    assert_eq!(pass[3], cons[3..].to_vec());
}

#[test]
fn parse_tokens() {
    for k in StrategyKind::ALL {
        assert_eq!(k.token().parse::<StrategyKind>().unwrap(), k);
    }
    assert!("LM".parse::<StrategyKind>().is_err());
    assert!("none".parse::<StrategyKind>().is_err());
}

fn cross_cycle() -> Model {
    let mut b = ModelBuilder::new();
    let x1 = b.var("x1");
    let x2 = b.var("x2");
    let x3 = b.var("x3");
    let x4 = b.var("x4");
    b.equality("c1", &x1 + x4.clone().pow(2.0));
    b.equality("c2", &x2 - 3.0 * &x1);
    b.equality("c3", &x3 - &x2 * 0.5 - 1.0);
    b.equality("c4", &x4 + x1.pow(2.0));
    b.build().unwrap()
}

#[test]
fn greedy_stops_at_the_cycle() {
    let mut b = ModelBuilder::new();
    let x1 = b.var("x1");
    let x4 = b.var("x4");
    let c1 = b.equality("c1", &x1 - x4.clone().pow(2.0));
    b.equality("c2", &x4 - x1.pow(2.0));
    let m = b.build().unwrap();
    let g = greedy_aggregation_set(&m.var_ids(), &m.equality_ids(), &m);
    assert_eq!(g.pairs(), &[(VarId(0), c1)]);
}

#[test]
fn greedy_takes_a_whole_triangular_chain() {
    let mut b = ModelBuilder::new();
    let xs: Vec<Expr> = (0..6).map(|i| b.var(&format!("x{i}"))).collect();
    b.equality("c0", &xs[0] - 1.0);
    for i in 1..6 {
        b.equality(&format!("c{i}"), &xs[i] - 2.0 * &xs[i - 1]);
    }
    let m = b.build().unwrap();
    assert_eq!(
        greedy_aggregation_set(&m.var_ids(), &m.equality_ids(), &m).len(),
        6
    );
    assert!(greedy_aggregation_set(&m.var_ids(), &[], &m).is_empty());
}

#[test]
fn linear_matching_keeps_one_of_the_cycle() {
    let m = cross_cycle();
    let run = linear_matching_run(&m.var_ids(), &m.equality_ids(), &m);
    assert_eq!(run.n_match(), 4);
    assert_eq!(run.n_block(), 3);
    assert_eq!(
        run.result.pairs(),
        &[
            (VarId(0), ConId(0)),
            (VarId(1), ConId(1)),
            (VarId(2), ConId(2))
        ]
    );
    assert!(run.n_block() <= run.n_agg() && run.n_agg() <= run.n_match());
}

#[test]
fn fixed_variables() {
    let mut b = ModelBuilder::new();
    let y = b.var("y");
    let c = b.equality("c", &y - 1.0);
    let m = b.build().unwrap();
    assert_eq!(
        degree_1_aggregation_set(&m.var_ids(), &[c], &m).pairs(),
        &[(VarId(0), c)]
    );

    let mut b = ModelBuilder::new();
    let y = b.var("y");
    b.equality("a", &y - 1.0);
    b.equality("b", &y - 2.0);
    let m = b.build().unwrap();
    assert_eq!(
        degree_1_aggregation_set(&m.var_ids(), &m.equality_ids(), &m).len(),
        1
    );

    let (m, _) = table_examples();
    let cons = &m.equality_ids()[..3];
    assert!(degree_1_aggregation_set(&m.var_ids(), cons, &m).is_empty());
}

#[test]
fn degree_two_worked_example() {
    let mut b = ModelBuilder::new();
    let x = b.var("x");
    let y = b.var("y");
    let w = b.var("w");
    b.equality("cy", &y - x.clone().pow(2.0) - 2.0);
    b.equality("cw", &w - &x - &y);
    let m = b.build().unwrap();
    let (first, _) = aggregation_set(StrategyKind::D2, &m);
    assert_eq!(first.pairs(), &[(VarId(1), ConId(0))]);
    let order = order_and_solve(&first, &m).unwrap();
    let r = crate::transform::apply_elimination(&m, &order).unwrap();
    let cw = &r.model.equalities()[0].expr;
    for (xv, wv) in [(0.5, 1.0), (-1.5, 2.0)] {
        let p = [(VarId(0), xv), (VarId(2), wv)].into_iter().collect();
        let got = evaluate(cw, &p, r.model.defs()).unwrap();
        let want = wv - xv * xv - xv - 2.0;
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn linear_degree_two_and_equal_coefficient() {
    let mut b = ModelBuilder::new();
    let x = b.var("x");
    let y = b.var("y");
    b.equality("c", &y - (100.0 * &x + 1.0));
    let m = b.build().unwrap();
    assert_eq!(
        aggregation_set(StrategyKind::Ld2, &m).0.pairs(),
        &[(VarId(1), ConId(0))]
    );
    assert!(aggregation_set(StrategyKind::Ecd2, &m).0.is_empty());

    let mut b = ModelBuilder::new();
    let x = b.var("x");
    let y = b.var("y");
    b.equality("c", &y - (&x + 4.0));
    let m = b.build().unwrap();
    assert_eq!(
        aggregation_set(StrategyKind::Ecd2, &m).0.pairs(),
        &[(VarId(1), ConId(0))]
    );
}

#[test]
fn fixpoint_finds_chained_fixed_variables() {
    let mut b = ModelBuilder::new();
    let y1 = b.var("y1");
    let y2 = b.var("y2");
    let z = b.var("z");
    b.equality("c1", &y1 - 1.0);
    b.equality("c2", &y2 - &y1);
    b.objective(&z + &y2);
    let m = b.build().unwrap();
    let run = run_strategy(&m, StrategyKind::Ld1).unwrap();
    assert_eq!(run.rounds.len(), 2);
    assert_eq!(run.reduced.n_eliminated(), 2);
    assert!(run.rounds.iter().all(|r| r.check.is_ok()));
}

#[test]
fn no_equalities_means_nothing_to_do() {
    let mut b = ModelBuilder::new();
    let x = b.var("x");
    b.inequality("h", &x - 1.0);
    let m = b.build().unwrap();
    for k in StrategyKind::ALL {
        let run = run_strategy(&m, k).unwrap();
        assert!(run.order().is_empty(), "{k}");
        assert_eq!(run.reduced.model.n_constraints(), 1);
    }
}

#[test]
fn gr_and_lm_orders_are_triangular() {
    let m = cross_cycle();
    for k in [StrategyKind::Gr, StrategyKind::Lm] {
        let run = run_strategy(&m, k).unwrap();
        assert!(!run.order().is_empty());
        assert!(verify_lower_triangular(&run.order(), &m).is_ok(), "{k}");
    }
}
