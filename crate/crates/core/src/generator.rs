//! Synthetic ladder and cycle models for tests, docs and experiments.
//!
//! Equality `c{i}` has `x{i}` with coefficient 1 as its first term, an
//! optional link to `x{i-1}`, an optional input `u{i}` that appears nowhere
//! else, and optionally a reference to some other `x{k}`. References to a
//! later `k` close cycles. Nonlinear terms are bounded functions, so values
//! stay moderate however long the elimination chains get.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::model::{Model, ModelBuilder};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Ladder,
    /// A ladder whose first rung also links to the last.
    Cycle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorConfig {
    /// Number of equality constraints.
    pub size: usize,
    /// Fraction of equalities given a nonlinear term, in `[0, 1]`.
    pub nonlinear_fraction: f64,
    pub shape: Shape,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(size: usize, nonlinear_fraction: f64, seed: u64) -> Self {
        GeneratorConfig {
            size,
            nonlinear_fraction,
            shape: Shape::Ladder,
            seed,
        }
    }
}

fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let a = rng.gen_range(lo..=hi);
    if rng.gen_bool(0.5) {
        a
    } else {
        -a
    }
}

/// A bounded nonlinear function of `x`, and of `y` for the product form.
fn bounded_term(rng: &mut ChaCha8Rng, x: &Expr, y: &Expr) -> Expr {
    let c = signed(rng, 0.1, 0.3);
    match rng.gen_range(0..4) {
        0 => c * x.clone().sin(),
        1 => c * x.clone().cos() * y.clone().sin(),
        2 => {
            let sq = x.clone().pow(2.0);
            c * sq.clone() / (sq + 1.0)
        }
        _ => c * (-(x.clone().pow(2.0))).exp(),
    }
}

pub fn generate(cfg: &GeneratorConfig) -> Model {
    let n = cfg.size;
    let p_nl = cfg.nonlinear_fraction.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut b = ModelBuilder::new();

    let mut xs = Vec::with_capacity(n);
    for i in 0..n {
        let name = format!("x{i}");
        let x = match rng.gen_range(0..10) {
            0 | 1 => b.var_bounded(&name, -rng.gen_range(1.0..4.0), rng.gen_range(1.0..4.0)),
            2 => b.var_bounded(&name, -rng.gen_range(0.0..2.0), f64::INFINITY),
            3 => b.var_bounded(&name, f64::NEG_INFINITY, rng.gen_range(0.0..2.0)),
            _ => b.var(&name),
        };
        xs.push(x);
    }

    for i in 0..n {
        let mut e = xs[i].clone();
        let fixed = rng.gen_bool(0.08);
        if fixed {
            e = e - rng.gen_range(-1.0..1.0);
        } else {
            let mut terms = 0;
            if i > 0 && rng.gen_bool(0.8) {
                let a = if rng.gen_bool(0.3) {
                    signed(&mut rng, 1.0, 1.0)
                } else {
                    signed(&mut rng, 0.2, 0.4)
                };
                e = e - a * &xs[i - 1];
                terms += 1;
            } else if i == 0 && cfg.shape == Shape::Cycle && n > 1 {
                e = e - signed(&mut rng, 0.2, 0.4) * &xs[n - 1];
                terms += 1;
            }
            let nonlinear = rng.gen_bool(p_nl);
            if nonlinear && rng.gen_bool(0.15) {
                // x{i} itself nonlinear; an input keeps the row usable
                e = e + bounded_term(&mut rng, &xs[i], &xs[i]);
            }
            let needs_input = terms == 0 || rng.gen_bool(0.5);
            if needs_input {
                let name = format!("u{i}");
                let u = if rng.gen_bool(0.2) {
                    b.var_bounded(&name, -2.0, 2.0)
                } else {
                    b.var(&name)
                };
                e = e - signed(&mut rng, 0.2, 0.3) * u;
            }
            if n > 1 {
                let k = loop {
                    let k = rng.gen_range(0..n);
                    if k != i {
                        break k;
                    }
                };
                if nonlinear {
                    let j = rng.gen_range(0..n);
                    e = e + bounded_term(&mut rng, &xs[k], &xs[j]);
                } else if rng.gen_bool(0.1) {
                    e = e - signed(&mut rng, 0.1, 0.3) * &xs[k];
                }
            }
            e = e + rng.gen_range(-0.5..0.5);
        }
        b.equality(&format!("c{i}"), e);
    }

    let n_ineq = n / 10;
    for j in 0..n_ineq {
        let a = &xs[rng.gen_range(0..n)];
        let c = &xs[rng.gen_range(0..n)];
        let e = if rng.gen_bool(p_nl) {
            a.clone().pow(2.0) + c.clone().pow(2.0) - 8.0
        } else {
            a + c - 3.0
        };
        b.inequality(&format!("h{j}"), e);
    }

    let mut picked: Vec<&Expr> = xs.iter().collect();
    picked.shuffle(&mut rng);
    let mut obj: Option<Expr> = None;
    for x in picked.into_iter().take(n.div_ceil(3)) {
        let term = if rng.gen_bool(p_nl.max(0.2)) {
            0.5 * x.clone().pow(2.0)
        } else {
            signed(&mut rng, 0.5, 2.0) * x
        };
        obj = Some(match obj {
            Some(o) => o + term,
            None => term,
        });
    }
    b.objective(obj.unwrap_or_else(|| Expr::constant(0.0)));
    b.build().expect("generated names are unique")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, Severity};

    #[test]
    fn deterministic_and_valid() {
        for shape in [Shape::Ladder, Shape::Cycle] {
            let cfg = GeneratorConfig {
                shape,
                ..GeneratorConfig::new(40, 0.3, 7)
            };
            let a = generate(&cfg);
            let b = generate(&cfg);
            assert_eq!(
                crate::model::write_model(&a, false),
                crate::model::write_model(&b, false)
            );
            assert_eq!(a.equalities().len(), 40);
            assert_eq!(a.inequalities().len(), 4);
            assert!(validate(&a).iter().all(|d| d.severity != Severity::Error));
        }
    }

    #[test]
    fn linear_when_fraction_is_zero() {
        let m = generate(&GeneratorConfig::new(60, 0.0, 3));
        let mut analyzer = crate::expr::Analyzer::new(m.defs());
        assert!(m
            .equalities()
            .iter()
            .all(|c| analyzer.summary(&c.expr).is_linear()));
    }
}
