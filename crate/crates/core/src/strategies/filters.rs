use std::fmt;

use crate::expr::{Analyzer, Coef, Summary, COEF_EPS};
use crate::model::{ConId, Model};

/// Constraint filters, from most to least permissive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FilterKind {
    /// At most two variables, at least one of them linear.
    Degree2,
    /// At most two variables, all linear.
    LinearDegree2,
    /// Linear with at most two variables whose coefficients have equal
    /// magnitude. Single-variable linear constraints pass as well.
    EqualCoefficient,
    /// Exactly one variable, linear.
    FixedVariable,
}

impl FilterKind {
    pub const ALL: [FilterKind; 4] = [
        FilterKind::Degree2,
        FilterKind::LinearDegree2,
        FilterKind::EqualCoefficient,
        FilterKind::FixedVariable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Degree2 => "degree2",
            FilterKind::LinearDegree2 => "linear_degree2",
            FilterKind::EqualCoefficient => "equal_coefficient",
            FilterKind::FixedVariable => "fixed_variable",
        }
    }

    pub fn accepts(self, s: &Summary) -> bool {
        let n_all = s.vars.len();
        let n_lin = s.linear_vars().len();
        match self {
            FilterKind::Degree2 => n_all <= 2 && n_lin >= 1,
            FilterKind::LinearDegree2 => n_all <= 2 && n_lin >= 1 && s.is_linear(),
            FilterKind::EqualCoefficient => {
                if !FilterKind::LinearDegree2.accepts(s) {
                    return false;
                }
                let mags: Vec<f64> = s
                    .vars
                    .values()
                    .map(|c| match c {
                        Coef::Linear(a) => a.abs(),
                        Coef::Nonlinear => f64::NAN,
                    })
                    .collect();
                match mags.as_slice() {
                    [_] => true,
                    [a, b] => (a - b).abs() <= COEF_EPS * a.max(*b),
                    _ => false,
                }
            }
            FilterKind::FixedVariable => n_all == 1 && n_lin == 1,
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The constraints of `cons` that pass `kind`, in the given order.
pub fn filter_constraints(kind: FilterKind, cons: &[ConId], model: &Model) -> Vec<ConId> {
    let mut analyzer = Analyzer::new(model.defs());
    cons.iter()
        .copied()
        .filter(|&c| {
            model
                .constraint(c)
                .is_some_and(|(con, _)| kind.accepts(&analyzer.summary(&con.expr)))
        })
        .collect()
}
