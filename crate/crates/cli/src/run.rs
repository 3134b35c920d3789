//! Command implementations: thin adapters from CLI payloads to library
//! calls, JSON out.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::json;

use jetflag::cauchy::{
    self, cauchy_from_profiles, inner_derivative_expand, n_of, normal_recover, p_of,
    transversality_check, CauchyChart, CauchyDatumSpec, CauchyPoint,
};
use jetflag::expr::{self, diff, eval, Env, Expr};
use jetflag::flag::{
    diagram_commutativity, flag_dim, flag_i_to_ii, flag_ii_to_i, n_project, p_project,
    peel_consistency, project_flag, q_project, FlagChart, FlagPointI, FlagPointII,
    InvPlanePoint,
};
use jetflag::involutive::{
    differential_consequence_check, involutivity_equations, involutivity_residual,
    DistributionSpec,
};
use jetflag::jetspace::{prolong_section, SectionSpec};
use jetflag::multiindex::{block_partitions, MultiIndex};
use jetflag::variational::{
    columbus_solve, cylinder_boundary_pair, cylinder_transversality, euler_lagrange,
    transversality, CurveSpec, CylinderMap, Lagrangian,
};

use crate::payload::{domain, input, parse_floats, parse_json, CliError};
use crate::svg;

type Out = Result<String, CliError>;

fn emit<T: serde::Serialize>(value: &T) -> Out {
    serde_json::to_string_pretty(value).map_err(|e| input(format!("serializing output: {e}")))
}

fn parse_expr(text: &str) -> Result<Expr, CliError> {
    expr::parse(text).map_err(domain)
}

fn parse_index(text: &str) -> Result<MultiIndex, CliError> {
    text.parse().map_err(domain)
}

pub fn mi_partitions(index: &str) -> Out {
    let b = parse_index(index)?;
    emit(&block_partitions(&b))
}

pub fn expr_diff(text: &str, var: &str) -> Out {
    let e = parse_expr(text)?;
    let d = diff(&e, var);
    let normal = expr::normalize(&d).map_err(domain)?;
    emit(&json!({"derivative": normal.to_string()}))
}

pub fn expr_eval(text: &str, env_arg: &str) -> Out {
    let e = parse_expr(text)?;
    let env: Env<f64> = parse_json(env_arg)?;
    let value = eval(&e, &env).map_err(domain)?;
    emit(&json!({"value": value}))
}

pub fn jet_prolong(n: usize, k: usize, section: &str, at: &str) -> Out {
    let components: Vec<Expr> = parse_json(section)?;
    let spec = SectionSpec::new(n, components).map_err(domain)?;
    let x0 = parse_floats(at)?;
    let theta = prolong_section::<f64>(&spec, k, &x0).map_err(domain)?;
    emit(&theta)
}

pub fn inv_eqs(dist: &str, r: usize) -> Out {
    let spec: DistributionSpec = parse_json(dist)?;
    let system = involutivity_equations(&spec, r).map_err(domain)?;
    let show = |e: &Expr| -> Result<String, CliError> {
        Ok(expr::normalize(e).map_err(domain)?.to_string())
    };
    let f1 = system
        .f1
        .iter()
        .map(|eq| Ok(json!({"form": eq.form, "i": eq.i, "expr": show(&eq.expr)?})))
        .collect::<Result<Vec<_>, CliError>>()?;
    let f2 = system
        .f2
        .iter()
        .map(|eq| Ok(json!({"form": eq.form, "i": eq.i, "j": eq.j, "expr": show(&eq.expr)?})))
        .collect::<Result<Vec<_>, CliError>>()?;
    emit(&json!({"chart": system.chart.coords(), "f1": f1, "f2": f2}))
}

pub fn inv_check(dist: &str, r: usize, point: &str, tol: f64) -> Out {
    let spec: DistributionSpec = parse_json(dist)?;
    let system = involutivity_equations(&spec, r).map_err(domain)?;
    let point: BTreeMap<String, f64> = parse_json(point)?;
    let residual = involutivity_residual(&system, &point).map_err(domain)?;
    emit(&json!({"involutive": residual <= tol, "max_residual": residual, "tol": tol}))
}

pub fn inv_consequences(dist: &str, r: usize, samples: usize, seed: u64) -> Out {
    let spec: DistributionSpec = parse_json(dist)?;
    let report = differential_consequence_check(&spec, r, samples, seed).map_err(domain)?;
    emit(&report)
}

pub fn flag_convert(n: usize, m: usize, k: usize, to: &str, point: &str) -> Out {
    let chart = FlagChart::new(n, m, k);
    let values: BTreeMap<String, f64> = parse_json(point)?;
    match to {
        "ii" => {
            let p = FlagPointI::new(chart, values).map_err(domain)?;
            emit(&flag_i_to_ii(&p))
        }
        "i" => {
            let p = FlagPointII::new(chart, values).map_err(domain)?;
            let consistency = peel_consistency(&p);
            let back = flag_ii_to_i(&p);
            emit(&json!({
                "point": back,
                "peel_consistency": consistency,
            }))
        }
        other => Err(input(format!("unknown target chart {other:?}"))),
    }
}

pub fn flag_project(n: usize, m: usize, k: usize, map: &str, point: &str) -> Out {
    let chart = FlagChart::new(n, m, k);
    let values: BTreeMap<String, f64> = parse_json(point)?;
    match map {
        "flag" => {
            let p = FlagPointI::new(chart, values).map_err(domain)?;
            emit(&project_flag(&p).map_err(domain)?)
        }
        "p" => {
            let p = FlagPointI::new(chart, values).map_err(domain)?;
            emit(&p_project(&p))
        }
        "n" => {
            let p = FlagPointI::new(chart, values).map_err(domain)?;
            emit(&n_project(&p).map_err(domain)?)
        }
        "q" => {
            let p = InvPlanePoint::new(n, m, k, values).map_err(domain)?;
            emit(&q_project(&p))
        }
        other => Err(input(format!("unknown projection {other:?}"))),
    }
}

pub fn flag_dims(n: usize, m: usize, k: usize) -> Out {
    let chart = FlagChart::new(n, m, k);
    emit(&json!({
        "flag_dim": flag_dim(n, m, k),
        "chart_i_coords": chart.coords_i().len(),
        "chart_ii_functions": if k >= 1 { Some(chart.coords_ii().len()) } else { None },
    }))
}

fn cauchy_chart(n: usize, m: usize, cap: usize) -> CauchyChart {
    CauchyChart::new(n, m, cap)
}

pub fn cauchy_expand(
    n: usize,
    m: usize,
    cap: usize,
    alpha: usize,
    a: &str,
    l: u32,
    b: &str,
) -> Out {
    let chart = cauchy_chart(n, m, cap);
    let a = normalize_spatial(a, n)?;
    let b = normalize_spatial(b, n)?;
    let e = inner_derivative_expand(&chart, alpha, &a, l, &b).map_err(domain)?;
    emit(&json!({"expr": expr::normalize(&e).map_err(domain)?.to_string()}))
}

pub fn cauchy_recover(n: usize, m: usize, cap: usize, alpha: usize, a: &str, l: u32) -> Out {
    let chart = cauchy_chart(n, m, cap);
    let a = normalize_spatial(a, n)?;
    let e = normal_recover(&chart, alpha, &a, l).map_err(domain)?;
    emit(&json!({"expr": expr::normalize(&e).map_err(domain)?.to_string()}))
}

/// Spatial indices on the command line may be given as "" for the zero
/// index of an n = 1 chart, or dot-separated otherwise.
fn normalize_spatial(text: &str, n: usize) -> Result<MultiIndex, CliError> {
    if text.is_empty() {
        return Ok(MultiIndex::zero(n - 1));
    }
    let idx = parse_index(text)?;
    if idx.len() != n - 1 {
        return Err(input(format!(
            "index {text:?} has length {}, chart wants {}",
            idx.len(),
            n - 1
        )));
    }
    Ok(idx)
}

pub fn cauchy_build(n: usize, m: usize, cap: usize, profiles: &str, at: &str) -> Out {
    let chart = cauchy_chart(n, m, cap);
    let spec: CauchyDatumSpec = parse_json(profiles)?;
    let x0 = parse_floats(at)?;
    let p = cauchy_from_profiles(&spec, &chart, &x0).map_err(domain)?;
    emit(&p)
}

pub fn cauchy_project(n: usize, m: usize, cap: usize, map: &str, point: &str) -> Out {
    let chart = cauchy_chart(n, m, cap);
    let values: BTreeMap<String, f64> = parse_json(point)?;
    let p = CauchyPoint::new(chart, values).map_err(domain)?;
    match map {
        "p" => emit(&p_of(&p)),
        "n" => emit(&n_of(&p)),
        other => Err(input(format!("unknown projection {other:?}"))),
    }
}

pub fn cauchy_transversal(
    n: usize,
    m: usize,
    cap: usize,
    profiles: &str,
    profiles2: &str,
    samples: usize,
    seed: u64,
) -> Out {
    let chart = cauchy_chart(n, m, cap);
    let spec1: CauchyDatumSpec = parse_json(profiles)?;
    let spec2: CauchyDatumSpec = parse_json(profiles2)?;
    let report = transversality_check(&spec1, &spec2, &chart, samples, seed).map_err(domain)?;
    emit(&report)
}

pub fn var_el(f: &str) -> Out {
    let lag = Lagrangian::new(parse_expr(f)?).map_err(domain)?;
    let el = expr::normalize(&euler_lagrange(&lag)).map_err(domain)?;
    emit(&json!({"euler_lagrange": el.to_string()}))
}

pub fn var_tc(f: &str) -> Out {
    let lag = Lagrangian::new(parse_expr(f)?).map_err(domain)?;
    let tc = expr::normalize(&transversality(&lag)).map_err(domain)?;
    emit(&json!({"transversality": tc.to_string()}))
}

pub fn var_tc_cylinder(f: &str, phi: &str) -> Out {
    let lag = Lagrangian::new(parse_expr(f)?).map_err(domain)?;
    let phi: CylinderMap = parse_json(phi)?;
    let full = cylinder_transversality(&lag, &phi).map_err(domain)?;
    let (at0, at1) = cylinder_boundary_pair(&lag, &phi).map_err(domain)?;
    emit(&json!({
        "boundary_expr": expr::normalize(&full).map_err(domain)?.to_string(),
        "at_xi_0": expr::normalize(&at0).map_err(domain)?.to_string(),
        "at_xi_1": expr::normalize(&at1).map_err(domain)?.to_string(),
    }))
}

pub fn var_columbus(
    g1: &str,
    g2: &str,
    init: &str,
    tol: f64,
    max_iter: usize,
    svg_path: Option<&Path>,
) -> Out {
    let g1: CurveSpec = parse_json(g1)?;
    let g2: CurveSpec = parse_json(g2)?;
    let init = parse_floats(init)?;
    if init.len() != 2 {
        return Err(input("--init wants two comma-separated parameters"));
    }
    let sol = columbus_solve::<f64>(&g1, &g2, (init[0], init[1]), tol, max_iter)
        .map_err(domain)?;
    if let Some(path) = svg_path {
        svg::write_columbus(path, &g1, &g2, &sol).map_err(|e| input(e))?;
    }
    emit(&sol)
}

pub fn check_diagram(n: usize, m: usize, k: usize, samples: usize, seed: u64) -> Out {
    let report = diagram_commutativity(n, m, k, samples, seed).map_err(domain)?;
    emit(&report)
}

pub fn check_roundtrip(n: usize, cap: usize) -> Out {
    let chart = CauchyChart::new(n, 1, cap);
    let report = cauchy::roundtrip_identity(&chart).map_err(domain)?;
    emit(&json!({
        "coordinates_checked": report.coordinates_checked,
        "all_zero": report.all_zero(),
        "failures": report.failures,
    }))
}
