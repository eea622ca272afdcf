//! Turning a matching into explicit definitions and applying them.
//!
//! [`order_and_solve`] orders the matched pairs so each defining expression
//! refers only to variables eliminated before it, and solves each defining
//! equality for its variable. [`apply_elimination`] substitutes the
//! definitions into the rest of the model and converts bounds of eliminated
//! variables into inequalities.

mod rewrite;
mod verify;

use std::collections::{HashMap, HashSet};

use crate::expr::{
    classify_linear, fold_constants, DefId, DefinitionTable, Expr, FoldError, LinClass, VarId,
    COEF_EPS,
};
use crate::incidence::{bipartite_graph, block_triangularize, IncidenceError, Matching};
use crate::model::{
    BoundOrigin, BoundSide, ConId, Constraint, ConstraintKind, Elimination, Model, ModelError,
    ReducedModel,
};
use rewrite::{RewriteCache, Rewriter};

pub use verify::{
    check_equivalence, verify_lower_triangular, EquivalenceReport, TriangularityReport, Violation,
};

#[derive(Debug, thiserror::Error)]
pub enum TransformError {
    #[error("matched pairs do not admit a triangular order; block {}", describe_block(.block))]
    NotTriangular { block: Vec<(VarId, ConId)> },
    #[error("cannot solve {con} for {var}: coefficient is zero or {var} is not linear")]
    ZeroPivot { var: VarId, con: ConId },
    #[error("{0} is not an equality of the model")]
    NotAnEquality(ConId),
    #[error("folding the definition of {var}: {source}")]
    Fold { var: VarId, source: FoldError },
    #[error(transparent)]
    Incidence(#[from] IncidenceError),
    #[error("reduced model is invalid: {0}")]
    Model(#[from] ModelError),
}

fn describe_block(block: &[(VarId, ConId)]) -> String {
    let items: Vec<String> = block.iter().map(|(v, c)| format!("({v}, {c})")).collect();
    format!("[{}]", items.join(", "))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderEntry {
    pub var: VarId,
    pub con: ConId,
    pub def: DefId,
}

/// Matched pairs in elimination order, with their solved definitions.
///
/// `defs` extends the source model's table. Entry `i`'s definition refers to
/// eliminated variables only through the definitions of entries before it.
#[derive(Clone, Debug)]
pub struct EliminationOrder {
    pub entries: Vec<OrderEntry>,
    pub defs: DefinitionTable,
    cache: RewriteCache,
}

impl EliminationOrder {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pairs(&self) -> Vec<(VarId, ConId)> {
        self.entries.iter().map(|e| (e.var, e.con)).collect()
    }
}

/// Orders `m` and solves every defining equality for its variable.
///
/// For `(x, c)` with `c` equal to `a*x + r`, the definition is `-r / a`, with
/// `r` obtained by setting `x` to zero and earlier eliminated variables to
/// their definitions, then constant folded.
pub fn order_and_solve(m: &Matching, model: &Model) -> Result<EliminationOrder, TransformError> {
    let mut coefs = HashMap::new();
    for &(v, c) in m.pairs() {
        let (con, kind) = model
            .constraint(c)
            .ok_or(TransformError::NotAnEquality(c))?;
        if kind != ConstraintKind::Equality {
            return Err(TransformError::NotAnEquality(c));
        }
        if model.var(v).is_none() {
            return Err(IncidenceError::UnknownVariable(v).into());
        }
        match classify_linear(&con.expr, v, model.defs()) {
            LinClass::Linear(a) if a.abs() > COEF_EPS => {
                coefs.insert(v, a);
            }
            _ => return Err(TransformError::ZeroPivot { var: v, con: c }),
        }
    }

    // Induced structure, in model order.
    let mut vars: Vec<VarId> = m.pairs().iter().map(|p| p.0).collect();
    vars.sort_by_key(|v| model.var_index(*v));
    let mut cons: Vec<ConId> = m.pairs().iter().map(|p| p.1).collect();
    cons.sort_by_key(|c| model.constraint_index(*c));
    let g = bipartite_graph(&vars, &cons, model)?;
    let partition = block_triangularize(&g, m)?;
    if let Some(block) = partition.blocks.iter().find(|b| b.len() > 1) {
        return Err(TransformError::NotTriangular {
            block: block.clone(),
        });
    }

    let mut defs = model.defs().clone();
    let mut cache = RewriteCache::new();
    let mut entries = Vec::with_capacity(m.len());
    let mut map: HashMap<VarId, Expr> = HashMap::new();
    {
        let mut rw = Rewriter::new(&mut defs, &mut cache);
        for (v, c) in partition.pairs() {
            let a = coefs[&v];
            let expr = &model.constraint(c).expect("checked above").0.expr;
            map.insert(v, Expr::constant(0.0));
            let rest = rw.rewrite(expr, &map, Some(v));
            let solved = if a == 1.0 {
                -rest
            } else if a == -1.0 {
                rest
            } else {
                -rest / a
            };
            let body = fold_constants(&solved)
                .map_err(|source| TransformError::Fold { var: v, source })?;
            let name = rw
                .table
                .fresh_name(&model.var(v).expect("checked above").name);
            let def = rw
                .table
                .push(name, body)
                .expect("definition references existing entries");
            map.insert(v, Expr::defined(def));
            entries.push(OrderEntry {
                var: v,
                con: c,
                def,
            });
        }
    }
    Ok(EliminationOrder {
        entries,
        defs,
        cache,
    })
}

/// Eliminates the variables of `order` from `model`.
pub fn apply_elimination(
    model: &Model,
    order: &EliminationOrder,
) -> Result<ReducedModel, TransformError> {
    extend_reduction(&ReducedModel::identity(model.clone()), order)
}

/// Eliminates the variables of `order` from `prev.model` and merges the
/// result with the eliminations already recorded in `prev`. Definitions of
/// earlier eliminations that mention newly eliminated variables are
/// rewritten.
pub fn extend_reduction(
    prev: &ReducedModel,
    order: &EliminationOrder,
) -> Result<ReducedModel, TransformError> {
    let model = &prev.model;
    let mut defs = order.defs.clone();
    let mut cache = order.cache.clone();
    let map: HashMap<VarId, Expr> = order
        .entries
        .iter()
        .map(|e| (e.var, Expr::defined(e.def)))
        .collect();
    let removed_cons: HashSet<ConId> = order.entries.iter().map(|e| e.con).collect();

    let mut rw = Rewriter::new(&mut defs, &mut cache);
    let rewrite_rows = |rows: &[Constraint], rw: &mut Rewriter| -> Vec<Constraint> {
        rows.iter()
            .filter(|c| !removed_cons.contains(&c.id))
            .map(|c| Constraint {
                id: c.id,
                name: c.name.clone(),
                expr: rw.rewrite(&c.expr, &map, None),
            })
            .collect()
    };
    let equalities = rewrite_rows(model.equalities(), &mut rw);
    let mut inequalities = rewrite_rows(model.inequalities(), &mut rw);
    let objective = rw.rewrite(model.objective(), &map, None);

    let mut eliminated: Vec<Elimination> = prev
        .eliminated
        .iter()
        .map(|e| {
            let def = match rw.rewrite(&Expr::defined(e.def), &map, None).as_defined() {
                Some(d) => d,
                None => e.def,
            };
            Elimination { def, ..e.clone() }
        })
        .collect();

    let mut origin = prev.origin.clone();
    let mut next_id = model.next_constraint_id().0;
    let mut names: HashSet<String> = model.constraints().map(|(c, _)| c.name.clone()).collect();
    for entry in &order.entries {
        let var = model
            .var(entry.var)
            .expect("order was built for this model")
            .clone();
        let (con, _) = model
            .constraint(entry.con)
            .expect("order was built for this model");
        for (side, bound) in [(BoundSide::Lower, var.lb), (BoundSide::Upper, var.ub)] {
            if !bound.is_finite() {
                continue;
            }
            let d = Expr::defined(entry.def);
            let expr = match side {
                BoundSide::Lower => bound - d,
                BoundSide::Upper => d - bound,
            };
            let expr = fold_constants(&expr).expect("finite bound and a definition reference");
            let name = unique_name(&mut names, &format!("{}_{}", var.name, side.as_str()));
            let id = ConId(next_id);
            next_id += 1;
            origin.insert(
                id,
                BoundOrigin {
                    var: var.id,
                    bound: side,
                },
            );
            inequalities.push(Constraint { id, name, expr });
        }
        eliminated.push(Elimination {
            var,
            con: entry.con,
            con_name: con.name.clone(),
            def: entry.def,
        });
    }
    drop(rw);

    let gone: HashSet<VarId> = map.keys().copied().collect();
    let variables = model
        .variables()
        .iter()
        .filter(|v| !gone.contains(&v.id))
        .cloned()
        .collect();
    collect_definitions(
        &mut defs,
        model.defs(),
        &gone,
        &equalities,
        &inequalities,
        &objective,
        &eliminated,
    );

    let mut reduced = Model::new(variables, equalities, inequalities, objective, defs)?;
    reduced.set_next_constraint_id(next_id);
    Ok(ReducedModel {
        model: reduced,
        eliminated,
        origin,
    })
}

fn unique_name(names: &mut HashSet<String>, base: &str) -> String {
    let name = if names.contains(base) {
        (2..)
            .map(|k| format!("{base}_{k}"))
            .find(|n| !names.contains(n))
            .expect("unbounded")
    } else {
        base.to_string()
    };
    names.insert(name.clone());
    name
}

/// Drops definitions that nothing refers to any more. Entries of the source
/// table that never mentioned an eliminated variable are kept even if
/// unreferenced.
fn collect_definitions(
    defs: &mut DefinitionTable,
    source: &DefinitionTable,
    gone: &HashSet<VarId>,
    equalities: &[Constraint],
    inequalities: &[Constraint],
    objective: &Expr,
    eliminated: &[Elimination],
) {
    let mut live: HashSet<DefId> = HashSet::new();
    let mut stack: Vec<DefId> = Vec::new();
    let mark = |e: &Expr, stack: &mut Vec<DefId>| crate::expr::visit_defined(e, |d| stack.push(d));
    for c in equalities.iter().chain(inequalities) {
        mark(&c.expr, &mut stack);
    }
    mark(objective, &mut stack);
    stack.extend(eliminated.iter().map(|e| e.def));

    let mut cache = RewriteCache::new();
    let mut scratch = defs.clone();
    let mut probe = Rewriter::new(&mut scratch, &mut cache);
    for d in source.iter() {
        if probe.vars_of_def(d.id).is_disjoint(gone) {
            stack.push(d.id);
        }
    }
    while let Some(d) = stack.pop() {
        if live.insert(d) {
            if let Some(body) = defs.expr(d) {
                mark(body, &mut stack);
            }
        }
    }
    defs.retain(|d| live.contains(&d.id));
}
