//! Partial differentiation, treating all other variables as constants.

use std::collections::BTreeMap;

use super::{Expr, Func};
use crate::multiindex::MultiIndex;

/// Partial derivative of `e` with respect to `var`.
pub fn diff(e: &Expr, var: &str) -> Expr {
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var(v) => {
            if v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| diff(t, var)).collect()),
        Expr::Prod(fs) => {
            let mut terms = Vec::with_capacity(fs.len());
            for i in 0..fs.len() {
                let di = diff(&fs[i], var);
                if di.is_zero_const() {
                    continue;
                }
                let mut factors: Vec<Expr> = Vec::with_capacity(fs.len());
                for (j, f) in fs.iter().enumerate() {
                    factors.push(if j == i { di.clone() } else { f.clone() });
                }
                terms.push(Expr::prod(factors));
            }
            Expr::sum(terms)
        }
        Expr::Pow(b, k) => {
            let db = diff(b, var);
            if db.is_zero_const() {
                return Expr::zero();
            }
            Expr::prod(vec![Expr::int(*k as i64), Expr::pow((**b).clone(), k - 1), db])
        }
        Expr::Quot(a, b) => {
            let da = diff(a, var);
            let db = diff(b, var);
            if db.is_zero_const() {
                return Expr::quot(da, (**b).clone());
            }
            let num = Expr::prod(vec![da, (**b).clone()])
                - Expr::prod(vec![(**a).clone(), db]);
            Expr::quot(num, Expr::pow((**b).clone(), 2))
        }
        Expr::Func(f, a) => {
            let da = diff(a, var);
            if da.is_zero_const() {
                return Expr::zero();
            }
            let outer = match f {
                Func::Sin => Expr::func(Func::Cos, (**a).clone()),
                Func::Cos => Expr::func(Func::Sin, (**a).clone()).neg(),
                Func::Exp => Expr::func(Func::Exp, (**a).clone()),
                Func::Log => Expr::quot(Expr::one(), (**a).clone()),
                Func::Sqrt => Expr::quot(
                    Expr::one(),
                    Expr::prod(vec![Expr::int(2), Expr::sqrt((**a).clone())]),
                ),
            };
            Expr::prod(vec![outer, da])
        }
    }
}

/// All partial derivatives of `e` with respect to `vars` up to total order
/// `max_order`, keyed by multi-index over `vars`. Each derivative is
/// computed once from a lower-order parent.
pub fn derivative_table(
    e: &Expr,
    vars: &[String],
    max_order: u32,
) -> BTreeMap<MultiIndex, Expr> {
    let d = vars.len();
    let mut table: BTreeMap<MultiIndex, Expr> = BTreeMap::new();
    table.insert(MultiIndex::zero(d), e.clone());
    let mut frontier = vec![MultiIndex::zero(d)];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for sigma in frontier {
            let parent = table[&sigma].clone();
            for axis in 1..=d {
                let bumped = sigma.bump(axis).expect("axis within range");
                if table.contains_key(&bumped) {
                    continue;
                }
                let dv = diff(&parent, &vars[axis - 1]);
                table.insert(bumped.clone(), dv);
                next.push(bumped);
            }
        }
        frontier = next;
    }
    table
}
