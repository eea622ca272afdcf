//! Structural metrics of a model and the matching bounds of an LM run.

use std::fmt::Write as _;

use serde::Serialize;

use crate::expr::Analyzer;
use crate::model::{ConId, Model, ReducedModel};
use crate::strategies::LmRun;

/// Variable counts of one constraint, with definitions expanded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstraintProfile {
    pub id: ConId,
    pub n_vars: usize,
    pub n_linear: usize,
    /// Every participating variable is linear.
    pub linear: bool,
}

/// One profile per constraint, equalities first.
pub fn constraint_profiles(model: &Model) -> Vec<ConstraintProfile> {
    let mut analyzer = Analyzer::new(model.defs());
    model
        .constraints()
        .map(|(c, _)| {
            let s = analyzer.summary(&c.expr);
            ConstraintProfile {
                id: c.id,
                n_vars: s.vars.len(),
                n_linear: s.linear_vars().len(),
                linear: s.is_linear(),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StructuralMetrics {
    pub n_var: usize,
    /// Equalities plus inequalities; variable bounds are not constraints.
    pub n_con: usize,
    pub n_elim: usize,
    pub nnz_per_con: f64,
    pub lin_nnz_per_con: f64,
    pub max_con_degree: usize,
    pub n_lin_con: usize,
}

/// Metrics of a model that has not been reduced (`n_elim` = 0).
pub fn structural_metrics(model: &Model) -> StructuralMetrics {
    let profiles = constraint_profiles(model);
    let n_con = profiles.len();
    let nnz: usize = profiles.iter().map(|p| p.n_vars).sum();
    let lin: usize = profiles.iter().map(|p| p.n_linear).sum();
    let avg = |total: usize| {
        if n_con == 0 {
            0.0
        } else {
            total as f64 / n_con as f64
        }
    };
    StructuralMetrics {
        n_var: model.variables().len(),
        n_con,
        n_elim: 0,
        nnz_per_con: avg(nnz),
        lin_nnz_per_con: avg(lin),
        max_con_degree: profiles.iter().map(|p| p.n_vars).max().unwrap_or(0),
        n_lin_con: profiles.iter().filter(|p| p.linear).count(),
    }
}

pub fn reduced_metrics(reduced: &ReducedModel) -> StructuralMetrics {
    StructuralMetrics {
        n_elim: reduced.n_eliminated(),
        ..structural_metrics(&reduced.model)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("matching bounds violated: n_block = {n_block}, n_agg = {n_agg}, n_match = {n_match}")]
pub struct BoundsViolation {
    pub n_block: usize,
    pub n_agg: usize,
    pub n_match: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundsReport {
    pub n_block: usize,
    pub n_agg: usize,
    pub n_match: usize,
}

/// Counts of an LM run. Fails if `n_block <= n_agg <= n_match` does not
/// hold, which can only be a bug in the strategy.
pub fn bounds_report(run: &LmRun) -> Result<BoundsReport, BoundsViolation> {
    let (n_block, n_agg, n_match) = (run.n_block(), run.n_agg(), run.n_match());
    if n_block <= n_agg && n_agg <= n_match {
        Ok(BoundsReport {
            n_block,
            n_agg,
            n_match,
        })
    } else {
        Err(BoundsViolation {
            n_block,
            n_agg,
            n_match,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Table,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    /// Strategy token, or `none`.
    pub method: String,
    pub before: StructuralMetrics,
    pub after: StructuralMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsReport>,
}

pub fn render_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report is plain data");
            s.push('\n');
            s
        }
        ReportFormat::Table => render_table(report),
    }
}

fn render_table(report: &Report) -> String {
    let label = match report.method.as_str() {
        "none" => "--".to_string(),
        m => m.to_uppercase(),
    };
    let header = [
        "Method",
        "Var.",
        "Con.",
        "Elim.",
        "NNZ/Con.",
        "Lin. NNZ/Con.",
        "Max deg.",
        "Lin. con.",
    ];
    let row = |name: &str, m: &StructuralMetrics| {
        [
            name.to_string(),
            m.n_var.to_string(),
            m.n_con.to_string(),
            m.n_elim.to_string(),
            format!("{:.2}", m.nnz_per_con),
            format!("{:.2}", m.lin_nnz_per_con),
            m.max_con_degree.to_string(),
            m.n_lin_con.to_string(),
        ]
    };
    let rows = [
        header.map(str::to_string),
        row("--", &report.before),
        row(&label, &report.after),
    ];
    let widths: Vec<usize> = (0..header.len())
        .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    if let Some(b) = report.bounds {
        let _ = writeln!(
            out,
            "\nn_block = {}, n_agg = {}, n_match = {}",
            b.n_block, b.n_agg, b.n_match
        );
    }
    out
}
