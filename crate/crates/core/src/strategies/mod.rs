//! Choosing which variables to aggregate.
//!
//! Every strategy returns a matching of linear variable–constraint edges
//! among the equality constraints, ordered so it can be eliminated as is.
//! GR scans constraints greedily; LM takes a maximum linear matching and
//! keeps a triangular part of each diagonal block. The structure-preserving
//! strategies (LD1, D2, LD2, ECD2) run LM on the equalities that pass a
//! filter.

mod filters;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::expr::{Analyzer, VarId};
use crate::incidence::{
    bipartite_graph, block_triangularize, induced_subgraph, maximum_matching, BlockPartition,
    Matching,
};
use crate::model::{ConId, Model, ReducedModel};
use crate::transform::{
    extend_reduction, order_and_solve, verify_lower_triangular, TransformError, TriangularityReport,
};

pub use filters::{filter_constraints, FilterKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Ld1,
    Ecd2,
    Ld2,
    D2,
    Gr,
    Lm,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Ld1,
        StrategyKind::Ecd2,
        StrategyKind::Ld2,
        StrategyKind::D2,
        StrategyKind::Gr,
        StrategyKind::Lm,
    ];

    /// Command-line token.
    pub fn token(self) -> &'static str {
        match self {
            StrategyKind::Ld1 => "ld1",
            StrategyKind::Ecd2 => "ecd2",
            StrategyKind::Ld2 => "ld2",
            StrategyKind::D2 => "d2",
            StrategyKind::Gr => "gr",
            StrategyKind::Lm => "lm",
        }
    }

    /// Display label, e.g. `LD1`.
    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::Ld1 => "LD1",
            StrategyKind::Ecd2 => "ECD2",
            StrategyKind::Ld2 => "LD2",
            StrategyKind::D2 => "D2",
            StrategyKind::Gr => "GR",
            StrategyKind::Lm => "LM",
        }
    }

    /// The constraint filter this strategy applies before matching, if any.
    pub fn filter(self) -> Option<FilterKind> {
        match self {
            StrategyKind::Ld1 => Some(FilterKind::FixedVariable),
            StrategyKind::Ecd2 => Some(FilterKind::EqualCoefficient),
            StrategyKind::Ld2 => Some(FilterKind::LinearDegree2),
            StrategyKind::D2 => Some(FilterKind::Degree2),
            StrategyKind::Gr | StrategyKind::Lm => None,
        }
    }

    /// True for the strategies that only use constraints of at most two
    /// variables.
    pub fn is_structure_preserving(self) -> bool {
        self.filter().is_some()
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown method `{0}` (expected one of none, ld1, ecd2, ld2, d2, gr, lm)")]
pub struct ParseStrategyError(pub String);

impl FromStr for StrategyKind {
    type Err = ParseStrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| ParseStrategyError(s.to_string()))
    }
}

fn greedy_with(
    analyzer: &mut Analyzer,
    vars: &HashSet<VarId>,
    cons: &[ConId],
    model: &Model,
) -> Matching {
    let mut pairs = Vec::new();
    let mut used: HashSet<VarId> = HashSet::new();
    for &c in cons {
        let Some((con, _)) = model.constraint(c) else {
            continue;
        };
        let summary = analyzer.summary(&con.expr);
        let pick = summary
            .linear_vars()
            .into_iter()
            .find(|x| vars.contains(x) && !used.contains(x));
        if let Some(x) = pick {
            pairs.push((x, c));
            used.extend(summary.vars.keys().copied());
        }
    }
    Matching::new(pairs).expect("each variable is picked at most once")
}

/// Scans `cons` in order and takes, from each, the first linear variable
/// (in order of appearance) that no earlier chosen constraint contains.
pub fn greedy_aggregation_set(vars: &[VarId], cons: &[ConId], model: &Model) -> Matching {
    let vars: HashSet<VarId> = vars.iter().copied().collect();
    greedy_with(&mut Analyzer::new(model.defs()), &vars, cons, model)
}

/// Intermediate results of one linear-matching run.
#[derive(Clone, Debug, Default)]
pub struct LmRun {
    /// Maximum matching on the linear edges.
    pub linear_matching: Matching,
    /// Block triangular partition of the graph induced by `linear_matching`.
    pub blocks: BlockPartition,
    /// The aggregation set: singleton blocks whole, a greedy part of the rest.
    pub result: Matching,
}

impl LmRun {
    pub fn n_match(&self) -> usize {
        self.linear_matching.len()
    }

    pub fn n_block(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_agg(&self) -> usize {
        self.result.len()
    }
}

/// Linear matching run with all intermediate results.
pub fn linear_matching_run(vars: &[VarId], cons: &[ConId], model: &Model) -> LmRun {
    let g = bipartite_graph(vars, cons, model).expect("nodes come from the model");
    let m_l = maximum_matching(&g.linear_part());
    let g_m = induced_subgraph(&g, &m_l).expect("matched pairs are edges of the full graph");
    let blocks = block_triangularize(&g_m, &m_l).expect("matching is perfect on its induced graph");

    let mut analyzer = Analyzer::new(model.defs());
    let mut pairs = Vec::with_capacity(m_l.len());
    for block in &blocks.blocks {
        if let [pair] = block.as_slice() {
            pairs.push(*pair);
            continue;
        }
        let block_vars: HashSet<VarId> = block.iter().map(|p| p.0).collect();
        let mut block_cons: Vec<ConId> = block.iter().map(|p| p.1).collect();
        block_cons.sort_by_key(|c| model.constraint_index(*c));
        let part = greedy_with(&mut analyzer, &block_vars, &block_cons, model);
        pairs.extend_from_slice(part.pairs());
    }
    LmRun {
        linear_matching: m_l,
        blocks,
        result: Matching::new(pairs).expect("blocks are disjoint"),
    }
}

pub fn linear_matching_aggregation_set(vars: &[VarId], cons: &[ConId], model: &Model) -> Matching {
    linear_matching_run(vars, cons, model).result
}

fn filtered(kind: FilterKind, vars: &[VarId], cons: &[ConId], model: &Model) -> Matching {
    let kept = filter_constraints(kind, cons, model);
    linear_matching_aggregation_set(vars, &kept, model)
}

pub fn degree_1_aggregation_set(vars: &[VarId], cons: &[ConId], model: &Model) -> Matching {
    filtered(FilterKind::FixedVariable, vars, cons, model)
}

pub fn degree_two_aggregation_set(vars: &[VarId], cons: &[ConId], model: &Model) -> Matching {
    filtered(FilterKind::Degree2, vars, cons, model)
}

pub fn linear_degree_two_aggregation_set(
    vars: &[VarId],
    cons: &[ConId],
    model: &Model,
) -> Matching {
    filtered(FilterKind::LinearDegree2, vars, cons, model)
}

pub fn equal_coefficient_aggregation_set(
    vars: &[VarId],
    cons: &[ConId],
    model: &Model,
) -> Matching {
    filtered(FilterKind::EqualCoefficient, vars, cons, model)
}

/// One application of a strategy's own algorithm to all variables and
/// equalities of `model`, without any fixpoint iteration.
pub fn aggregation_set(kind: StrategyKind, model: &Model) -> (Matching, Option<LmRun>) {
    let vars = model.var_ids();
    let cons = model.equality_ids();
    match kind {
        StrategyKind::Gr => (greedy_aggregation_set(&vars, &cons, model), None),
        _ => {
            let cons = match kind.filter() {
                Some(f) => filter_constraints(f, &cons, model),
                None => cons,
            };
            let run = linear_matching_run(&vars, &cons, model);
            (run.result.clone(), Some(run))
        }
    }
}

/// One elimination step of a run.
#[derive(Clone, Debug)]
pub struct Round {
    /// Algorithm that produced this round; LD1 for the fixed-variable
    /// rounds of D2, LD2 and ECD2.
    pub strategy: StrategyKind,
    /// The model this round started from.
    pub input: Model,
    /// Pairs in elimination order.
    pub order: Vec<(VarId, ConId)>,
    /// Triangularity of `order` against `input`.
    pub check: TriangularityReport,
    pub lm: Option<LmRun>,
}

#[derive(Clone, Debug)]
pub struct StrategyRun {
    pub kind: StrategyKind,
    pub rounds: Vec<Round>,
    pub reduced: ReducedModel,
}

impl StrategyRun {
    /// All eliminated pairs, in order across rounds.
    pub fn order(&self) -> Vec<(VarId, ConId)> {
        self.rounds
            .iter()
            .flat_map(|r| r.order.iter().copied())
            .collect()
    }

    /// The linear-matching details of an LM run.
    pub fn lm(&self) -> Option<&LmRun> {
        match self.kind {
            StrategyKind::Lm => self.rounds.first().and_then(|r| r.lm.as_ref()),
            _ => None,
        }
    }
}

/// Runs a strategy to completion.
///
/// GR and LM run once. LD1 repeats until no fixed variable is left. D2, LD2
/// and ECD2 alternate: exhaust LD1, then one round of their own, until their
/// own round finds nothing.
pub fn run_strategy(model: &Model, kind: StrategyKind) -> Result<StrategyRun, TransformError> {
    let mut run = StrategyRun {
        kind,
        rounds: Vec::new(),
        reduced: ReducedModel::identity(model.clone()),
    };
    match kind {
        StrategyKind::Gr | StrategyKind::Lm => {
            step(&mut run, kind, true)?;
        }
        StrategyKind::Ld1 => while step(&mut run, kind, false)? {},
        _ => loop {
            while step(&mut run, StrategyKind::Ld1, false)? {}
            if !step(&mut run, kind, false)? {
                break;
            }
        },
    }
    Ok(run)
}

/// Runs one round; returns whether anything was eliminated.
fn step(
    run: &mut StrategyRun,
    strategy: StrategyKind,
    record_empty: bool,
) -> Result<bool, TransformError> {
    let input = &run.reduced.model;
    let (matching, lm) = aggregation_set(strategy, input);
    if matching.is_empty() {
        if record_empty {
            run.rounds.push(Round {
                strategy,
                input: input.clone(),
                order: Vec::new(),
                check: TriangularityReport::default(),
                lm,
            });
        }
        return Ok(false);
    }
    let order = order_and_solve(&matching, input)?;
    let pairs = order.pairs();
    let check = verify_lower_triangular(&pairs, input);
    let next = extend_reduction(&run.reduced, &order)?;
    let input = std::mem::replace(&mut run.reduced, next).model;
    run.rounds.push(Round {
        strategy,
        input,
        order: pairs,
        check,
        lm,
    });
    Ok(true)
}

#[cfg(test)]
mod tests;
