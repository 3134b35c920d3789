//! Shared helpers for the integration suites: independent oracles and
//! sample generators. Everything here stays off the implementation paths
//! it is used to check.
//!
//! Each integration binary compiles this module separately and uses only
//! a slice of it.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;

use jetflag::cauchy::{CauchyChart, CauchyDatumSpec};
use jetflag::coords::{t_slope_name, u_flag_name, x_name, T_NAME};
use jetflag::expr::{derivative_table, diff, eval, Env, Expr};
use jetflag::involutive::{DistributionSpec, Form1};
use jetflag::jetspace::SectionSpec;
use jetflag::multiindex::{indices_up_to, MultiIndex};
use jetflag::variational::CurveSpec;

/// E = (x, u, p) with the contact form du - p dx.
pub fn contact_distribution_1d() -> DistributionSpec {
    DistributionSpec::new(
        vec!["x".into()],
        vec!["u".into(), "p".into()],
        vec![Form1 {
            dx: vec![jetflag::expr::parse("-p").unwrap()],
            du: vec![Expr::one(), Expr::zero()],
        }],
    )
    .unwrap()
}

/// Random polynomial section of degree at most `deg` with small rational
/// coefficients.
pub fn random_polynomial_section(
    n: usize,
    m: usize,
    deg: u32,
    rng: &mut impl Rng,
) -> SectionSpec {
    let components = (0..m)
        .map(|_| {
            let mut terms = Vec::new();
            for sigma in indices_up_to(n, deg) {
                let coeff = Expr::rational(rng.gen_range(-9i64..=9), rng.gen_range(1i64..=4));
                let mut factors = vec![coeff];
                for (axis, &e) in sigma.exponents().iter().enumerate() {
                    if e > 0 {
                        factors.push(Expr::pow(Expr::var(x_name(axis + 1)), e as i32));
                    }
                }
                terms.push(Expr::prod(factors));
            }
            Expr::sum(terms)
        })
        .collect();
    SectionSpec::new(n, components).unwrap()
}

/// Brute-force construction of the truncated Cauchy datum: build the
/// coordinate functions U_{A,l}(x) recursively from the tangency
/// condition `d_a U_{A,l} = U_{Aa,l} + (d_a f) U_{A,l+1}`, seeded by
/// U_{0,0} = g and U_{0,l} = h_l, then evaluate at the base point. This
/// iterates the one-step relation on profile functions and never touches
/// the block-partition sums.
pub fn datum_by_recursive_tangency(
    spec: &CauchyDatumSpec,
    chart: &CauchyChart,
    x0: &[f64],
) -> BTreeMap<String, f64> {
    let n = chart.n;
    let cap = chart.cap as u32;
    let xs: Vec<String> = (1..=n - 1).map(x_name).collect();
    let mut env: Env<f64> = Env::new();
    for (i, x) in xs.iter().enumerate() {
        env.insert(x.clone(), x0[i]);
    }
    let mut table: BTreeMap<(usize, MultiIndex, u32), Expr> = BTreeMap::new();
    for alpha in 1..=chart.m {
        table.insert(
            (alpha, MultiIndex::zero(n - 1), 0),
            spec.g[alpha - 1].clone(),
        );
        for l in 1..=cap {
            table.insert(
                (alpha, MultiIndex::zero(n - 1), l),
                spec.h[alpha - 1][(l - 1) as usize].clone(),
            );
        }
    }
    for order in 1..=cap {
        for a in indices_up_to(n - 1, cap) {
            if a.order() != order {
                continue;
            }
            for l in 0..=(cap - order) {
                let axis = a.lowest_axis().unwrap();
                let parent = a.unbump(axis).unwrap();
                for alpha in 1..=chart.m {
                    let u_parent = table[&(alpha, parent.clone(), l)].clone();
                    let u_normal = table[&(alpha, parent.clone(), l + 1)].clone();
                    let value = diff(&u_parent, &xs[axis - 1])
                        - diff(&spec.f, &xs[axis - 1]) * u_normal;
                    table.insert((alpha, a.clone(), l), value);
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for (i, x) in xs.iter().enumerate() {
        out.insert(x.clone(), x0[i]);
    }
    out.insert(T_NAME.to_string(), eval(&spec.f, &env).unwrap());
    let f_table = derivative_table(&spec.f, &xs, cap);
    for (b, e) in &f_table {
        if !b.is_zero() {
            out.insert(t_slope_name(b), eval(e, &env).unwrap());
        }
    }
    for ((alpha, a, l), e) in &table {
        out.insert(u_flag_name(*alpha, a, *l), eval(e, &env).unwrap());
    }
    out
}

/// Exhaustive grid search for the shortest segment between two curves;
/// the length it reports bounds the true minimum to grid resolution.
pub fn grid_search_min_length(g1: &CurveSpec, g2: &CurveSpec, resolution: usize) -> f64 {
    let sample = |c: &CurveSpec| -> Vec<[f64; 2]> {
        let (a, b) = c.domain;
        (0..resolution)
            .map(|i| {
                let s = a + (b - a) * i as f64 / (resolution - 1) as f64;
                c.point(s).unwrap()
            })
            .collect()
    };
    let p1 = sample(g1);
    let p2 = sample(g2);
    let mut best = f64::INFINITY;
    for a in &p1 {
        for b in &p2 {
            let d2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
            if d2 < best {
                best = d2;
            }
        }
    }
    best.sqrt()
}
