//! JSON model documents.
//!
//! Expressions are nested arrays `["op", child, ...]`, `["var", name]` and
//! `["def", name]` references, and bare numbers for constants. The writer is
//! canonicalizing: the same model always produces the same bytes, and reading
//! what it wrote gives back a structurally equal model.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde_json::{Map, Value};

use super::{ConId, Constraint, Model, ModelError, ReducedModel, Variable};
use crate::expr::{
    fold_constants, replace_defined, BinaryOp, DefId, DefinitionTable, Expr, Node, UnaryOp, VarId,
};

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("input is not valid UTF-8: {0}")]
    Utf8(#[from] std::str::Utf8Error),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{location}: {message}")]
    Schema { location: String, message: String },
    #[error("{location}: unknown variable `{name}`")]
    UnknownVariable { name: String, location: String },
    #[error("{location}: unknown definition `{name}`")]
    UnknownDefinition { name: String, location: String },
    #[error("{location}: unknown operator `{op}`")]
    UnknownOperator { op: String, location: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn schema(location: &str, message: impl Into<String>) -> ReadError {
    ReadError::Schema {
        location: location.to_string(),
        message: message.into(),
    }
}

const TOP_KEYS: &[&str] = &[
    "variables",
    "defined",
    "objective",
    "equalities",
    "inequalities",
    "eliminated",
];

/// Parses and validates a model document.
///
/// The `eliminated` section and per-constraint `origin` tags written for
/// reduced models are accepted and ignored.
pub fn read_model(bytes: &[u8]) -> Result<Model, ReadError> {
    let text = std::str::from_utf8(bytes)?;
    let doc: Value = serde_json::from_str(text).map_err(|e| ReadError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let top = doc
        .as_object()
        .ok_or_else(|| schema("document", "expected an object"))?;
    if let Some(k) = top.keys().find(|k| !TOP_KEYS.contains(&k.as_str())) {
        return Err(schema("document", format!("unknown key `{k}`")));
    }

    let mut ctx = Context::default();
    let vars = top
        .get("variables")
        .ok_or_else(|| schema("document", "missing `variables`"))?;
    let mut variables = Vec::new();
    for (i, v) in array(vars, "variables")?.iter().enumerate() {
        let loc = format!("variables[{i}]");
        let obj = object(v, &loc, &["name", "lb", "ub"])?;
        let name = string_field(obj, "name", &loc)?;
        let lb = optional_number(obj, "lb", &loc)?.unwrap_or(f64::NEG_INFINITY);
        let ub = optional_number(obj, "ub", &loc)?.unwrap_or(f64::INFINITY);
        let id = VarId(i);
        if ctx.vars.insert(name.clone(), id).is_some() {
            return Err(ModelError::DuplicateVariable(name).into());
        }
        variables.push(Variable { id, name, lb, ub });
    }

    if let Some(defined) = top.get("defined") {
        for (i, d) in array(defined, "defined")?.iter().enumerate() {
            let loc = format!("defined[{i}]");
            let obj = object(d, &loc, &["name", "expr"])?;
            let name = string_field(obj, "name", &loc)?;
            let body = obj
                .get("expr")
                .ok_or_else(|| schema(&loc, "missing `expr`"))?;
            let expr = ctx.expr(body, &format!("{loc}.expr"))?;
            ctx.defs
                .push(name, expr)
                .map_err(|source| ModelError::Definition {
                    location: loc,
                    source,
                })?;
        }
    }

    let objective = match top.get("objective") {
        Some(o) => ctx.expr(o, "objective")?,
        None => Expr::constant(0.0),
    };

    let mut next_id = 0;
    let mut constraints = |key: &str, relops: &[&str], default_prefix: &str| {
        let mut out = Vec::new();
        if let Some(list) = top.get(key) {
            for (i, c) in array(list, key)?.iter().enumerate() {
                let loc = format!("{key}[{i}]");
                let (name, body) = match c {
                    Value::Object(_) => {
                        let obj = object(c, &loc, &["name", "expr", "origin"])?;
                        let name = match obj.get("name") {
                            Some(_) => string_field(obj, "name", &loc)?,
                            None => format!("{default_prefix}{i}"),
                        };
                        let body = obj
                            .get("expr")
                            .ok_or_else(|| schema(&loc, "missing `expr`"))?;
                        (name, body)
                    }
                    _ => (format!("{default_prefix}{i}"), c),
                };
                let expr = ctx.constraint_expr(body, relops, &loc)?;
                out.push(Constraint {
                    id: ConId(next_id),
                    name,
                    expr,
                });
                next_id += 1;
            }
        }
        Ok::<_, ReadError>(out)
    };
    let equalities = constraints("equalities", &["=="], "e")?;
    let inequalities = constraints("inequalities", &["<=", ">="], "i")?;

    if let Some(elim) = top.get("eliminated") {
        array(elim, "eliminated")?;
    }

    Ok(Model::new(
        variables,
        equalities,
        inequalities,
        objective,
        ctx.defs,
    )?)
}

#[derive(Default)]
struct Context {
    vars: HashMap<String, VarId>,
    defs: DefinitionTable,
}

impl Context {
    /// A constraint body may be wrapped in one relational operator, which is
    /// desugared into the `expr relop 0` form.
    fn constraint_expr(&self, v: &Value, relops: &[&str], loc: &str) -> Result<Expr, ReadError> {
        if let Some(items) = v.as_array() {
            if let Some(op) = items.first().and_then(Value::as_str) {
                if relops.contains(&op) {
                    if items.len() != 3 {
                        return Err(schema(loc, format!("`{op}` takes two operands")));
                    }
                    let lhs = self.expr(&items[1], &format!("{loc}[1]"))?;
                    let rhs = self.expr(&items[2], &format!("{loc}[2]"))?;
                    return Ok(match op {
                        ">=" => rhs - lhs,
                        _ => lhs - rhs,
                    });
                }
            }
        }
        self.expr(v, loc)
    }

    fn expr(&self, v: &Value, loc: &str) -> Result<Expr, ReadError> {
        match v {
            Value::Number(n) => {
                let x = n
                    .as_f64()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| schema(loc, "number is not a finite double"))?;
                Ok(Expr::constant(x))
            }
            Value::Array(items) => {
                let op = items.first().and_then(Value::as_str).ok_or_else(|| {
                    schema(loc, "expression array must start with an operator name")
                })?;
                let args = &items[1..];
                match op {
                    "var" | "def" => {
                        let name = match args {
                            [Value::String(s)] => s,
                            _ => return Err(schema(loc, format!("`{op}` takes one name"))),
                        };
                        if op == "var" {
                            let id =
                                self.vars
                                    .get(name)
                                    .ok_or_else(|| ReadError::UnknownVariable {
                                        name: name.clone(),
                                        location: loc.to_string(),
                                    })?;
                            Ok(Expr::var(*id))
                        } else {
                            let id = self.defs.by_name(name).ok_or_else(|| {
                                ReadError::UnknownDefinition {
                                    name: name.clone(),
                                    location: loc.to_string(),
                                }
                            })?;
                            Ok(Expr::defined(id))
                        }
                    }
                    _ => {
                        let children = args
                            .iter()
                            .enumerate()
                            .map(|(i, a)| self.expr(a, &format!("{loc}[{}]", i + 1)))
                            .collect::<Result<Vec<_>, _>>()?;
                        build_operator(op, children, loc)
                    }
                }
            }
            _ => Err(schema(loc, "expected a number or an expression array")),
        }
    }
}

fn build_operator(op: &str, mut children: Vec<Expr>, loc: &str) -> Result<Expr, ReadError> {
    let arity = |n: usize, children: &Vec<Expr>| {
        if children.len() == n {
            Ok(())
        } else {
            Err(schema(
                loc,
                format!("`{op}` takes {n} operand(s), got {}", children.len()),
            ))
        }
    };
    let unary = match op {
        "neg" => Some(UnaryOp::Neg),
        "exp" => Some(UnaryOp::Exp),
        "log" => Some(UnaryOp::Log),
        "sin" => Some(UnaryOp::Sin),
        "cos" => Some(UnaryOp::Cos),
        _ => None,
    };
    if let Some(u) = unary {
        arity(1, &children)?;
        return Ok(Expr::unary(u, children.pop().unwrap()));
    }
    match op {
        "+" | "*" => {
            if children.len() < 2 {
                return Err(schema(loc, format!("`{op}` takes at least two operands")));
            }
            let bop = if op == "+" {
                BinaryOp::Add
            } else {
                BinaryOp::Mul
            };
            let mut it = children.into_iter();
            let first = it.next().unwrap();
            Ok(it.fold(first, |acc, c| Expr::binary(bop, acc, c)))
        }
        "-" | "\u{2212}" => match children.len() {
            1 => Ok(Expr::unary(UnaryOp::Neg, children.pop().unwrap())),
            2 => {
                let r = children.pop().unwrap();
                let l = children.pop().unwrap();
                Ok(Expr::binary(BinaryOp::Sub, l, r))
            }
            n => Err(schema(
                loc,
                format!("`-` takes one or two operands, got {n}"),
            )),
        },
        "/" | "^" | "pow" => {
            arity(2, &children)?;
            let r = children.pop().unwrap();
            let l = children.pop().unwrap();
            let bop = if op == "/" {
                BinaryOp::Div
            } else {
                BinaryOp::Pow
            };
            Ok(Expr::binary(bop, l, r))
        }
        _ => Err(ReadError::UnknownOperator {
            op: op.to_string(),
            location: loc.to_string(),
        }),
    }
}

fn array<'v>(v: &'v Value, loc: &str) -> Result<&'v Vec<Value>, ReadError> {
    v.as_array().ok_or_else(|| schema(loc, "expected an array"))
}

fn object<'v>(v: &'v Value, loc: &str, keys: &[&str]) -> Result<&'v Map<String, Value>, ReadError> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema(loc, "expected an object"))?;
    if let Some(k) = obj.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(schema(loc, format!("unknown key `{k}`")));
    }
    Ok(obj)
}

fn string_field(obj: &Map<String, Value>, key: &str, loc: &str) -> Result<String, ReadError> {
    obj.get(key)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| schema(loc, format!("`{key}` must be a string")))
}

fn optional_number(
    obj: &Map<String, Value>,
    key: &str,
    loc: &str,
) -> Result<Option<f64>, ReadError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .map(Some)
            .ok_or_else(|| schema(loc, format!("`{key}` must be a finite number"))),
    }
}

/// Serializes a model. With `inline`, definition references are expanded
/// into full trees and no `defined` section is written.
pub fn write_model(model: &Model, inline: bool) -> String {
    Writer::new(model, inline).document(None)
}

/// Serializes a reduced model, including its `eliminated` section and the
/// `origin` of every bound inequality.
pub fn write_reduced(reduced: &ReducedModel, inline: bool) -> String {
    Writer::new(&reduced.model, inline).document(Some(reduced))
}

struct Writer<'m> {
    model: &'m Model,
    inline: bool,
    var_names: HashMap<VarId, &'m str>,
    /// Expanded and folded definitions, filled only with `inline`.
    expanded: HashMap<DefId, Expr>,
}

impl<'m> Writer<'m> {
    fn new(model: &'m Model, inline: bool) -> Self {
        let mut w = Writer {
            model,
            inline,
            var_names: model
                .variables()
                .iter()
                .map(|v| (v.id, v.name.as_str()))
                .collect(),
            expanded: HashMap::new(),
        };
        if inline {
            // table order, so every reference is already expanded
            for d in model.defs().iter() {
                let e = w.expand(&d.expr);
                w.expanded.insert(d.id, e);
            }
        }
        w
    }

    /// `e` with definitions substituted and constants folded. Folding is
    /// skipped where it would fail, e.g. on a constant division by zero.
    fn expand(&self, e: &Expr) -> Expr {
        let e = replace_defined(e, &self.expanded);
        fold_constants(&e).unwrap_or(e)
    }

    fn document(mut self, reduced: Option<&ReducedModel>) -> String {
        let model = self.model;
        let mut out = String::from("{\n");

        let vars: Vec<String> = model.variables().iter().map(variable_entry).collect();
        section(&mut out, "variables", &vars, true);

        if !self.inline && !model.defs().is_empty() {
            let defs: Vec<String> = model
                .defs()
                .iter()
                .map(|d| {
                    let body = self.expr_json(&d.expr);
                    format!("{{\"name\":{},\"expr\":{}}}", quote(&d.name), body)
                })
                .collect();
            section(&mut out, "defined", &defs, true);
        }

        let objective = self.expr_json(model.objective());
        let _ = writeln!(out, "  \"objective\": {objective},");

        let eliminated_names: HashMap<VarId, &str> = reduced
            .map(|r| {
                r.eliminated
                    .iter()
                    .map(|e| (e.var.id, e.var.name.as_str()))
                    .collect()
            })
            .unwrap_or_default();

        let eqs: Vec<String> = model
            .equalities()
            .iter()
            .map(|c| {
                format!(
                    "{{\"name\":{},\"expr\":{}}}",
                    quote(&c.name),
                    self.expr_json(&c.expr)
                )
            })
            .collect();
        section(&mut out, "equalities", &eqs, true);

        let ineqs: Vec<String> = model
            .inequalities()
            .iter()
            .map(|c| {
                let mut s = format!(
                    "{{\"name\":{},\"expr\":{}",
                    quote(&c.name),
                    self.expr_json(&c.expr)
                );
                if let Some(o) = reduced.and_then(|r| r.origin.get(&c.id)) {
                    let var = eliminated_names.get(&o.var).copied().unwrap_or("?");
                    let _ = write!(
                        s,
                        ",\"origin\":{{\"var\":{},\"bound\":\"{}\"}}",
                        quote(var),
                        o.bound.as_str()
                    );
                }
                s.push('}');
                s
            })
            .collect();

        match reduced {
            None => section(&mut out, "inequalities", &ineqs, false),
            Some(r) => {
                section(&mut out, "inequalities", &ineqs, true);
                let elims: Vec<String> = r
                    .eliminated
                    .iter()
                    .map(|e| {
                        let mut s = format!("{{\"var\":{}", quote(&e.var.name));
                        write_bounds(&mut s, &e.var);
                        let _ = write!(s, ",\"constraint\":{}", quote(&e.con_name));
                        if self.inline {
                            let body = self.expr_json(&Expr::defined(e.def));
                            let _ = write!(s, ",\"expr\":{body}}}");
                        } else {
                            let name = model
                                .defs()
                                .get(e.def)
                                .map(|d| d.name.as_str())
                                .unwrap_or("?");
                            let _ = write!(s, ",\"def\":{}}}", quote(name));
                        }
                        s
                    })
                    .collect();
                section(&mut out, "eliminated", &elims, false);
            }
        }
        out.push_str("}\n");
        out
    }

    fn expr_json(&mut self, e: &Expr) -> String {
        let v = if self.inline {
            self.expr_value(&self.expand(e))
        } else {
            self.expr_value(e)
        };
        serde_json::to_string(&v).expect("serializing a JSON value cannot fail")
    }

    fn expr_value(&mut self, e: &Expr) -> Value {
        match e.node() {
            Node::Const(c) => Value::from(*c),
            Node::Var(x) => {
                let name = self.var_names.get(x).copied().unwrap_or("?");
                Value::Array(vec!["var".into(), name.into()])
            }
            Node::Defined(d) => {
                let name = self
                    .model
                    .defs()
                    .get(*d)
                    .map(|x| x.name.as_str())
                    .unwrap_or("?");
                Value::Array(vec!["def".into(), name.into()])
            }
            Node::Unary(op, c) => Value::Array(vec![op.name().into(), self.expr_value(c)]),
            Node::Binary(op @ (BinaryOp::Add | BinaryOp::Mul), _, _) => {
                // Left-leaning chains of + or * are written as one n-ary node.
                let mut operands = Vec::new();
                let mut cur = e.clone();
                loop {
                    match cur.node() {
                        Node::Binary(o, l, r) if o == op => {
                            operands.push(r.clone());
                            let next = l.clone();
                            cur = next;
                        }
                        _ => {
                            operands.push(cur.clone());
                            break;
                        }
                    }
                }
                let mut items = vec![Value::from(op.symbol())];
                for o in operands.iter().rev() {
                    items.push(self.expr_value(o));
                }
                Value::Array(items)
            }
            Node::Binary(op, l, r) => Value::Array(vec![
                op.symbol().into(),
                self.expr_value(l),
                self.expr_value(r),
            ]),
        }
    }
}

fn variable_entry(v: &Variable) -> String {
    let mut s = format!("{{\"name\":{}", quote(&v.name));
    write_bounds(&mut s, v);
    s.push('}');
    s
}

fn write_bounds(s: &mut String, v: &Variable) {
    if v.lb.is_finite() {
        let _ = write!(s, ",\"lb\":{}", Value::from(v.lb));
    }
    if v.ub.is_finite() {
        let _ = write!(s, ",\"ub\":{}", Value::from(v.ub));
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("serializing a string cannot fail")
}

fn section(out: &mut String, key: &str, items: &[String], trailing_comma: bool) {
    let comma = if trailing_comma { "," } else { "" };
    if items.is_empty() {
        let _ = writeln!(out, "  \"{key}\": []{comma}");
        return;
    }
    let _ = writeln!(out, "  \"{key}\": [");
    for (i, item) in items.iter().enumerate() {
        let sep = if i + 1 < items.len() { "," } else { "" };
        let _ = writeln!(out, "    {item}{sep}");
    }
    let _ = writeln!(out, "  ]{comma}");
}
