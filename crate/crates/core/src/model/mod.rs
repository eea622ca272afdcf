//! Optimization models of the form
//!
//! ```text
//! min f(z)  s.t.  g(z) = 0,  h(z) <= 0,  lb <= z <= ub
//! ```
//!
//! with every constraint row stored as a scalar expression compared against
//! zero.

mod json;
mod validate;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::expr::{DefId, DefinitionTable, Expr, ExprError, Node, VarId};

pub use json::{read_model, write_model, write_reduced, ReadError};
pub use validate::{validate, Diagnostic, Severity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConId(pub usize);

impl fmt::Display for ConId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    /// `-inf` when unbounded below.
    pub lb: f64,
    /// `+inf` when unbounded above.
    pub ub: f64,
}

impl Variable {
    pub fn finite_bounds(&self) -> usize {
        usize::from(self.lb.is_finite()) + usize::from(self.ub.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `expr == 0`
    Equality,
    /// `expr <= 0`
    Inequality,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub id: ConId,
    pub name: String,
    pub expr: Expr,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("variable `{0}` is declared more than once")]
    DuplicateVariable(String),
    #[error("constraint name `{0}` is used more than once")]
    DuplicateConstraint(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("variable `{name}` has lower bound {lb} above upper bound {ub}")]
    InvalidBounds { name: String, lb: f64, ub: f64 },
    #[error("{location} references undeclared variable {var}")]
    UndeclaredVariable { var: VarId, location: String },
    #[error("{location}: {source}")]
    Definition { location: String, source: ExprError },
}

/// A validated model. Construct with [`Model::new`] or [`ModelBuilder`].
#[derive(Clone, Debug)]
pub struct Model {
    variables: Vec<Variable>,
    equalities: Vec<Constraint>,
    inequalities: Vec<Constraint>,
    objective: Expr,
    defs: DefinitionTable,
    var_pos: HashMap<VarId, usize>,
    con_pos: HashMap<ConId, (ConstraintKind, usize)>,
    next_con_id: usize,
}

impl Model {
    /// Checks names, bounds, ids, and that every variable or definition an
    /// expression mentions exists.
    pub fn new(
        variables: Vec<Variable>,
        equalities: Vec<Constraint>,
        inequalities: Vec<Constraint>,
        objective: Expr,
        defs: DefinitionTable,
    ) -> Result<Model, ModelError> {
        let mut var_pos = HashMap::new();
        let mut names = HashSet::new();
        for (i, v) in variables.iter().enumerate() {
            if !names.insert(v.name.as_str()) {
                return Err(ModelError::DuplicateVariable(v.name.clone()));
            }
            if var_pos.insert(v.id, i).is_some() {
                return Err(ModelError::DuplicateId(v.id.to_string()));
            }
            if v.lb.is_nan()
                || v.ub.is_nan()
                || v.lb > v.ub
                || v.lb == f64::INFINITY
                || v.ub == f64::NEG_INFINITY
            {
                return Err(ModelError::InvalidBounds {
                    name: v.name.clone(),
                    lb: v.lb,
                    ub: v.ub,
                });
            }
        }

        let mut con_pos = HashMap::new();
        let mut con_names = HashSet::new();
        let mut next_con_id = 0;
        for (kind, list) in [
            (ConstraintKind::Equality, &equalities),
            (ConstraintKind::Inequality, &inequalities),
        ] {
            for (i, c) in list.iter().enumerate() {
                if !con_names.insert(c.name.as_str()) {
                    return Err(ModelError::DuplicateConstraint(c.name.clone()));
                }
                if con_pos.insert(c.id, (kind, i)).is_some() {
                    return Err(ModelError::DuplicateId(c.id.to_string()));
                }
                next_con_id = next_con_id.max(c.id.0 + 1);
            }
        }

        let model = Model {
            variables,
            equalities,
            inequalities,
            objective,
            defs,
            var_pos,
            con_pos,
            next_con_id,
        };
        model.check_references()?;
        Ok(model)
    }

    fn check_references(&self) -> Result<(), ModelError> {
        let roots = self
            .constraints()
            .map(|(c, _)| (format!("constraint `{}`", c.name), &c.expr))
            .chain(std::iter::once(("objective".to_string(), &self.objective)))
            .chain(
                self.defs
                    .iter()
                    .map(|d| (format!("definition `{}`", d.name), &d.expr)),
            );
        for (location, e) in roots {
            self.defs
                .check_references(e)
                .map_err(|source| ModelError::Definition {
                    location: location.clone(),
                    source,
                })?;
            if let Some(var) = direct_vars(e)
                .into_iter()
                .find(|v| !self.var_pos.contains_key(v))
            {
                return Err(ModelError::UndeclaredVariable { var, location });
            }
        }
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn equalities(&self) -> &[Constraint] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Constraint] {
        &self.inequalities
    }

    /// Equalities then inequalities, in declaration order.
    pub fn constraints(&self) -> impl Iterator<Item = (&Constraint, ConstraintKind)> {
        self.equalities
            .iter()
            .map(|c| (c, ConstraintKind::Equality))
            .chain(
                self.inequalities
                    .iter()
                    .map(|c| (c, ConstraintKind::Inequality)),
            )
    }

    pub fn n_constraints(&self) -> usize {
        self.equalities.len() + self.inequalities.len()
    }

    pub fn objective(&self) -> &Expr {
        &self.objective
    }

    pub fn defs(&self) -> &DefinitionTable {
        &self.defs
    }

    pub fn var(&self, id: VarId) -> Option<&Variable> {
        self.var_pos.get(&id).map(|&i| &self.variables[i])
    }

    pub fn var_by_name(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    /// Position of a variable in declaration order.
    pub fn var_index(&self, id: VarId) -> Option<usize> {
        self.var_pos.get(&id).copied()
    }

    pub fn constraint(&self, id: ConId) -> Option<(&Constraint, ConstraintKind)> {
        self.con_pos.get(&id).map(|&(kind, i)| match kind {
            ConstraintKind::Equality => (&self.equalities[i], kind),
            ConstraintKind::Inequality => (&self.inequalities[i], kind),
        })
    }

    pub fn constraint_by_name(&self, name: &str) -> Option<(&Constraint, ConstraintKind)> {
        self.constraints().find(|(c, _)| c.name == name)
    }

    /// Position of a constraint among equalities followed by inequalities.
    pub fn constraint_index(&self, id: ConId) -> Option<usize> {
        self.con_pos.get(&id).map(|&(kind, i)| match kind {
            ConstraintKind::Equality => i,
            ConstraintKind::Inequality => self.equalities.len() + i,
        })
    }

    /// Smallest constraint id never used by this model or its ancestors.
    pub fn next_constraint_id(&self) -> ConId {
        ConId(self.next_con_id)
    }

    pub(crate) fn set_next_constraint_id(&mut self, next: usize) {
        self.next_con_id = self.next_con_id.max(next);
    }

    pub fn equality_ids(&self) -> Vec<ConId> {
        self.equalities.iter().map(|c| c.id).collect()
    }

    pub fn var_ids(&self) -> Vec<VarId> {
        self.variables.iter().map(|v| v.id).collect()
    }
}

/// Variables referenced directly by `e`, without entering definitions.
pub(crate) fn direct_vars(e: &Expr) -> Vec<VarId> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut stack = vec![e.clone()];
    while let Some(e) = stack.pop() {
        if !seen.insert(e.key()) {
            continue;
        }
        match e.node() {
            Node::Var(x) => out.push(*x),
            Node::Unary(_, c) => stack.push(c.clone()),
            Node::Binary(_, l, r) => {
                stack.push(l.clone());
                stack.push(r.clone());
            }
            _ => {}
        }
    }
    out
}

/// Incremental construction of a [`Model`], mainly for tests and examples.
///
/// ```
/// use varagg::model::ModelBuilder;
///
/// let mut b = ModelBuilder::new();
/// let x = b.var("x");
/// let y = b.var_bounded("y", 0.0, 2.0);
/// b.equality("c1", &y - (2.0 * &x + 3.0));
/// b.objective(x.clone() * x);
/// let model = b.build().unwrap();
/// assert_eq!(model.variables().len(), 2);
/// ```
#[derive(Default)]
pub struct ModelBuilder {
    variables: Vec<Variable>,
    equalities: Vec<Constraint>,
    inequalities: Vec<Constraint>,
    objective: Option<Expr>,
    defs: DefinitionTable,
    next_con: usize,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, name: &str) -> Expr {
        self.var_bounded(name, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn var_bounded(&mut self, name: &str, lb: f64, ub: f64) -> Expr {
        let id = VarId(self.variables.len());
        self.variables.push(Variable {
            id,
            name: name.to_string(),
            lb,
            ub,
        });
        Expr::var(id)
    }

    pub fn equality(&mut self, name: &str, expr: Expr) -> ConId {
        let id = self.next_id();
        self.equalities.push(Constraint {
            id,
            name: name.to_string(),
            expr,
        });
        id
    }

    pub fn inequality(&mut self, name: &str, expr: Expr) -> ConId {
        let id = self.next_id();
        self.inequalities.push(Constraint {
            id,
            name: name.to_string(),
            expr,
        });
        id
    }

    pub fn objective(&mut self, expr: Expr) {
        self.objective = Some(expr);
    }

    /// Adds a named definition and returns a reference to it.
    pub fn define(&mut self, name: &str, expr: Expr) -> Result<Expr, ExprError> {
        self.defs.push(name, expr).map(Expr::defined)
    }

    pub fn build(self) -> Result<Model, ModelError> {
        Model::new(
            self.variables,
            self.equalities,
            self.inequalities,
            self.objective.unwrap_or_else(|| Expr::constant(0.0)),
            self.defs,
        )
    }

    fn next_id(&mut self) -> ConId {
        self.next_con += 1;
        ConId(self.next_con - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundSide {
    Lower,
    Upper,
}

impl BoundSide {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundSide::Lower => "lb",
            BoundSide::Upper => "ub",
        }
    }
}

/// Where a bound inequality of a reduced model came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundOrigin {
    pub var: VarId,
    pub bound: BoundSide,
}

/// One eliminated variable of a [`ReducedModel`].
#[derive(Clone, Debug)]
pub struct Elimination {
    /// The variable as declared in the source model.
    pub var: Variable,
    /// Defining equality in the source model.
    pub con: ConId,
    pub con_name: String,
    /// Definition in the reduced model's table giving the variable's value in
    /// terms of the remaining variables.
    pub def: DefId,
}

/// A model with some variables and equalities aggregated out.
///
/// Eliminated variables do not appear in `model`; each finite bound of an
/// eliminated variable appears as exactly one inequality, recorded in
/// `origin`.
#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub model: Model,
    pub eliminated: Vec<Elimination>,
    pub origin: BTreeMap<ConId, BoundOrigin>,
}

impl ReducedModel {
    /// A reduction that eliminates nothing.
    pub fn identity(model: Model) -> Self {
        ReducedModel {
            model,
            eliminated: Vec::new(),
            origin: BTreeMap::new(),
        }
    }

    pub fn n_eliminated(&self) -> usize {
        self.eliminated.len()
    }
}
