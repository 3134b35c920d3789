//! First-order one-dimensional variational machinery: Euler-Lagrange
//! expressions, free-endpoint transversality in closed form and through a
//! cylinder pullback, and a damped Gauss-Newton solver for the shortest
//! segment joining two curves.
//!
//! Variable conventions: a Lagrangian density is an expression in
//! `x, y, p` with p standing for y'; the Euler-Lagrange expression adds
//! `q` for y''. Transversality expressions use `xG, yG` for the boundary
//! tangent. Cylinder maps are expressions in `xi, eta` and the pulled-back
//! boundary expression lives in `xi, eta, etap`. Curves are parametrized
//! by `s`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::Rng;

use crate::expr::{diff, eval, Env, EvalError, Expr};
use crate::numeric::solve;
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum VarError {
    #[error("expression uses variable {got:?}, allowed: {allowed}")]
    ForeignVariable { got: String, allowed: &'static str },
    #[error("cylinder map Jacobian degenerates near (xi, eta) = ({xi}, {eta})")]
    DegenerateJacobian { xi: f64, eta: f64 },
    #[error("no convergence in {iterations} iterations, residual {residual}")]
    Divergence { iterations: usize, residual: f64 },
    #[error("singular Jacobian at an iterate")]
    SingularJacobian,
    #[error("curve endpoints coincide at an iterate")]
    CoincidentEndpoints,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn check_vars(e: &Expr, allowed: &[&str], label: &'static str) -> Result<(), VarError> {
    for v in e.free_vars() {
        if !allowed.contains(&v.as_str()) {
            return Err(VarError::ForeignVariable {
                got: v,
                allowed: label,
            });
        }
    }
    Ok(())
}

/// First-order Lagrangian density f(x, y, p).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lagrangian {
    pub density: Expr,
}

impl Lagrangian {
    pub fn new(density: Expr) -> Result<Self, VarError> {
        check_vars(&density, &["x", "y", "p"], "x, y, p")?;
        Ok(Lagrangian { density })
    }
}

/// Total x-derivative on expressions in (x, y, p), adding q for y''.
fn d_x(e: &Expr) -> Expr {
    diff(e, "x")
        + Expr::var("p") * diff(e, "y")
        + Expr::var("q") * diff(e, "p")
}

/// The Euler-Lagrange expression df/dy - D_x(df/dp), in (x, y, p, q).
pub fn euler_lagrange(f: &Lagrangian) -> Expr {
    diff(&f.density, "y") - d_x(&diff(&f.density, "p"))
}

/// The free-endpoint transversality expression
/// `(f - p df/dp) xG + (df/dp) yG` against a boundary tangent (xG, yG).
pub fn transversality(f: &Lagrangian) -> Expr {
    let fp = diff(&f.density, "p");
    (f.density.clone() - Expr::var("p") * fp.clone()) * Expr::var("xG")
        + fp * Expr::var("yG")
}

/// Diffeomorphism (x, y) = phi(xi, eta) carrying the strip 0 <= xi <= 1 onto
/// a tubular chart; expressions in `xi, eta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CylinderMap {
    pub x: Expr,
    pub y: Expr,
}

impl CylinderMap {
    pub fn new(x: Expr, y: Expr) -> Result<Self, VarError> {
        check_vars(&x, &["xi", "eta"], "xi, eta")?;
        check_vars(&y, &["xi", "eta"], "xi, eta")?;
        Ok(CylinderMap { x, y })
    }

    /// Jacobian determinant expression x_xi y_eta - x_eta y_xi.
    pub fn jacobian(&self) -> Expr {
        diff(&self.x, "xi") * diff(&self.y, "eta")
            - diff(&self.x, "eta") * diff(&self.y, "xi")
    }

    fn check_nondegenerate(&self) -> Result<(), VarError> {
        let jac = self.jacobian();
        for i in 0..=4 {
            for j in -2..=2 {
                let mut env: Env<f64> = Env::new();
                let xi = i as f64 / 4.0;
                let eta = j as f64 / 2.0;
                env.insert("xi".to_string(), xi);
                env.insert("eta".to_string(), eta);
                let v = eval(&jac, &env)?;
                if v.abs() < 1e-9 {
                    return Err(VarError::DegenerateJacobian { xi, eta });
                }
            }
        }
        Ok(())
    }
}

/// Pulls the density f dx back along the cylinder map and differentiates
/// by the fiber slope: with `D = x_xi + x_eta etap`, `N = y_xi + y_eta
/// etap` and `g = f(phi, N/D) D`, returns dg/d(etap) as an expression in
/// (xi, eta, etap). Restricting to xi in {0, 1} gives the boundary
/// condition; pushing back through phi reproduces [`transversality`].
pub fn cylinder_transversality(
    f: &Lagrangian,
    phi: &CylinderMap,
) -> Result<Expr, VarError> {
    phi.check_nondegenerate()?;
    let horizontal = diff(&phi.x, "xi") + diff(&phi.x, "eta") * Expr::var("etap");
    let vertical = diff(&phi.y, "xi") + diff(&phi.y, "eta") * Expr::var("etap");
    let mut map = std::collections::BTreeMap::new();
    map.insert("x".to_string(), phi.x.clone());
    map.insert("y".to_string(), phi.y.clone());
    map.insert(
        "p".to_string(),
        Expr::quot(vertical, horizontal.clone()),
    );
    let pulled = f.density.subst(&map) * horizontal;
    Ok(diff(&pulled, "etap"))
}

/// Boundary restrictions of the cylinder expression at xi = 0 and xi = 1.
pub fn cylinder_boundary_pair(
    f: &Lagrangian,
    phi: &CylinderMap,
) -> Result<(Expr, Expr), VarError> {
    let e = cylinder_transversality(f, phi)?;
    let at = |v: i64| {
        let mut map = std::collections::BTreeMap::new();
        map.insert("xi".to_string(), Expr::int(v));
        e.subst(&map)
    };
    Ok((at(0), at(1)))
}

/// Plane curve (x(s), y(s)) with a parameter interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveSpec {
    pub x: Expr,
    pub y: Expr,
    pub domain: (f64, f64),
}

impl CurveSpec {
    pub fn new(x: Expr, y: Expr, domain: (f64, f64)) -> Result<Self, VarError> {
        check_vars(&x, &["s"], "s")?;
        check_vars(&y, &["s"], "s")?;
        Ok(CurveSpec { x, y, domain })
    }

    pub fn point<T: Scalar>(&self, s: T) -> Result<[T; 2], VarError> {
        let mut env: Env<T> = Env::new();
        env.insert("s".to_string(), s);
        Ok([eval(&self.x, &env)?, eval(&self.y, &env)?])
    }
}

/// Converged shortest-segment data: the straight segment meeting both
/// curves orthogonally.
#[derive(Debug, Clone, Serialize)]
pub struct ColumbusSolution<T> {
    pub s1: T,
    pub s2: T,
    pub p1: [T; 2],
    pub p2: [T; 2],
    pub length: T,
    /// Orthogonality defects against the two curve tangents.
    pub residuals: [T; 2],
    pub iterations: usize,
}

struct CurveEval {
    x: Expr,
    y: Expr,
    dx: Expr,
    dy: Expr,
    ddx: Expr,
    ddy: Expr,
}

impl CurveEval {
    fn new(c: &CurveSpec) -> CurveEval {
        let dx = diff(&c.x, "s");
        let dy = diff(&c.y, "s");
        CurveEval {
            ddx: diff(&dx, "s"),
            ddy: diff(&dy, "s"),
            x: c.x.clone(),
            y: c.y.clone(),
            dx,
            dy,
        }
    }

    fn at<T: Scalar>(&self, s: T) -> Result<([T; 2], [T; 2], [T; 2]), VarError> {
        let mut env: Env<T> = Env::new();
        env.insert("s".to_string(), s);
        Ok((
            [eval(&self.x, &env)?, eval(&self.y, &env)?],
            [eval(&self.dx, &env)?, eval(&self.dy, &env)?],
            [eval(&self.ddx, &env)?, eval(&self.ddy, &env)?],
        ))
    }
}

/// Damped Gauss-Newton on the orthogonality system
/// `(P2 - P1) . G1'(s1) = 0`, `(P2 - P1) . G2'(s2) = 0`. The connecting
/// segment is the extremal of arclength by construction; a Levenberg
/// term keeps the step defined when the solution family is degenerate
/// (parallel lines, concentric circles).
pub fn columbus_solve<T: Scalar>(
    g1: &CurveSpec,
    g2: &CurveSpec,
    init: (T, T),
    tol: T,
    max_iter: usize,
) -> Result<ColumbusSolution<T>, VarError> {
    let c1 = CurveEval::new(g1);
    let c2 = CurveEval::new(g2);
    let mut s1 = init.0;
    let mut s2 = init.1;
    let tiny = T::from_f64(1e-12).unwrap();

    let state = |s1: T, s2: T| -> Result<([T; 2], [T; 2]), VarError> {
        let (p1, d1, _) = c1.at(s1)?;
        let (p2, d2, _) = c2.at(s2)?;
        let gap = [p2[0] - p1[0], p2[1] - p1[1]];
        if (gap[0] * gap[0] + gap[1] * gap[1]).sqrt() < tiny {
            return Err(VarError::CoincidentEndpoints);
        }
        Ok((
            gap,
            [
                gap[0] * d1[0] + gap[1] * d1[1],
                gap[0] * d2[0] + gap[1] * d2[1],
            ],
        ))
    };
    let norm = |r: &[T; 2]| r[0].abs().max(r[1].abs());

    let (_, mut res) = state(s1, s2)?;
    let mut iterations = 0;
    while norm(&res) > tol {
        if iterations >= max_iter {
            return Err(VarError::Divergence {
                iterations,
                residual: norm(&res).to_f64().unwrap_or(f64::NAN),
            });
        }
        iterations += 1;
        let (p1, d1, dd1) = c1.at(s1)?;
        let (p2, d2, dd2) = c2.at(s2)?;
        let gap = [p2[0] - p1[0], p2[1] - p1[1]];
        let dot = |a: &[T; 2], b: &[T; 2]| a[0] * b[0] + a[1] * b[1];
        let jac = [
            [
                -dot(&d1, &d1) + dot(&gap, &dd1),
                dot(&d2, &d1),
            ],
            [
                -dot(&d1, &d2),
                dot(&d2, &d2) + dot(&gap, &dd2),
            ],
        ];
        // Levenberg-regularized normal equations; negligible for a
        // well-conditioned Jacobian, minimum-norm step otherwise.
        let jtj = [
            [
                jac[0][0] * jac[0][0] + jac[1][0] * jac[1][0],
                jac[0][0] * jac[0][1] + jac[1][0] * jac[1][1],
            ],
            [
                jac[0][1] * jac[0][0] + jac[1][1] * jac[1][0],
                jac[0][1] * jac[0][1] + jac[1][1] * jac[1][1],
            ],
        ];
        let lambda = (jtj[0][0] + jtj[1][1]) * T::from_f64(1e-14).unwrap() + tiny * tiny;
        let a = vec![
            vec![jtj[0][0] + lambda, jtj[0][1]],
            vec![jtj[1][0], jtj[1][1] + lambda],
        ];
        let rhs = [
            -(jac[0][0] * res[0] + jac[1][0] * res[1]),
            -(jac[0][1] * res[0] + jac[1][1] * res[1]),
        ];
        let step = solve(&a, &rhs, tiny * tiny).ok_or(VarError::SingularJacobian)?;
        let mut scale = T::one();
        let mut advanced = false;
        for _ in 0..20 {
            let t1 = s1 + scale * step[0];
            let t2 = s2 + scale * step[1];
            match state(t1, t2) {
                Ok((_, trial)) => {
                    if norm(&trial) < norm(&res) || norm(&trial) <= tol {
                        s1 = t1;
                        s2 = t2;
                        res = trial;
                        advanced = true;
                        break;
                    }
                }
                Err(VarError::CoincidentEndpoints) => {}
                Err(e) => return Err(e),
            }
            scale = scale * T::from_f64(0.5).unwrap();
        }
        if !advanced {
            return Err(VarError::Divergence {
                iterations,
                residual: norm(&res).to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let (p1, _, _) = c1.at(s1)?;
    let (p2, _, _) = c2.at(s2)?;
    let gap = [p2[0] - p1[0], p2[1] - p1[1]];
    Ok(ColumbusSolution {
        s1,
        s2,
        p1,
        p2,
        length: (gap[0] * gap[0] + gap[1] * gap[1]).sqrt(),
        residuals: res,
        iterations,
    })
}

/// Samples a random Lagrangian with small rational coefficients,
/// polynomial in (x, y, p); used by the seeded cross-validation checks.
pub fn sample_polynomial_lagrangian(rng: &mut impl Rng) -> Lagrangian {
    let c = |rng: &mut dyn rand::RngCore| {
        Expr::rational(rng.gen_range(-4i64..=4), rng.gen_range(1i64..=3))
    };
    let density = c(rng)
        + c(rng) * Expr::var("x")
        + c(rng) * Expr::var("y")
        + c(rng) * Expr::var("p")
        + c(rng) * Expr::var("p") * Expr::var("p")
        + c(rng) * Expr::var("x") * Expr::var("p");
    Lagrangian::new(density).expect("polynomial density is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{exprs_equal, is_zero, parse};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lagrangian(text: &str) -> Lagrangian {
        Lagrangian::new(parse(text).unwrap()).unwrap()
    }

    fn arclength() -> Lagrangian {
        lagrangian("sqrt(1 + p^2)")
    }

    #[test]
    fn euler_lagrange_of_kinetic_density() {
        let el = euler_lagrange(&lagrangian("p^2/2"));
        assert!(exprs_equal(&el, &parse("-q").unwrap()));
    }

    #[test]
    fn euler_lagrange_of_arclength() {
        // EL = -q (1 + p^2)^{-3/2}: multiply through by the cube of the
        // square root and the identity is exact.
        let el = euler_lagrange(&arclength());
        let cube = Expr::pow(parse("sqrt(1 + p^2)").unwrap(), 3);
        assert!(is_zero(&(el.clone() * cube + Expr::var("q"))));
        // Zero locus is q = 0: straight lines.
        let mut env: Env<f64> = Env::new();
        env.insert("x".into(), 0.3);
        env.insert("y".into(), -0.7);
        env.insert("p".into(), 1.9);
        env.insert("q".into(), 0.0);
        assert!(eval(&el, &env).unwrap().abs() < 1e-15);
    }

    #[test]
    fn euler_lagrange_vanishes_along_affine_extremals() {
        let el = euler_lagrange(&arclength());
        let (a, b) = (0.75, -0.4);
        for i in 0..10 {
            let x = -1.0 + 0.2 * i as f64;
            let mut env: Env<f64> = Env::new();
            env.insert("x".into(), x);
            env.insert("y".into(), a * x + b);
            env.insert("p".into(), a);
            env.insert("q".into(), 0.0);
            assert!(eval(&el, &env).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn transversality_of_arclength_is_orthogonality() {
        let tc = transversality(&arclength());
        let scaled = tc * parse("sqrt(1 + p^2)").unwrap();
        let orthogonal = parse("xG + p*yG").unwrap();
        assert!(is_zero(&(scaled - orthogonal)));
    }

    #[test]
    fn transversality_without_slope_dependence() {
        let tc = transversality(&lagrangian("x + y"));
        let mut map = std::collections::BTreeMap::new();
        map.insert("yG".to_string(), Expr::zero());
        let reduced = tc.subst(&map);
        assert!(exprs_equal(&reduced, &parse("(x + y)*xG").unwrap()));
    }

    #[test]
    fn cylinder_identity_map_gives_natural_boundary_condition() {
        let f = lagrangian("p^2/2 + x*y");
        let phi = CylinderMap::new(parse("xi").unwrap(), parse("eta").unwrap()).unwrap();
        let cyl = cylinder_transversality(&f, &phi).unwrap();
        // dg/d(etap) = df/dp with (x, y, p) renamed to (xi, eta, etap).
        let mut map = std::collections::BTreeMap::new();
        map.insert("x".to_string(), Expr::var("xi"));
        map.insert("y".to_string(), Expr::var("eta"));
        map.insert("p".to_string(), Expr::var("etap"));
        let fp = diff(&f.density, "p").subst(&map);
        assert!(is_zero(&(cyl - fp)));
    }

    #[test]
    fn cylinder_rotation_detects_orthogonal_hits() {
        // Rotated strip: boundary tangent direction is (-sin a, cos a)
        // rotated vertical; the arclength boundary expression vanishes
        // exactly on curves hitting it at a right angle.
        let (c, s) = (0.8f64.cos(), 0.8f64.sin());
        let phi = CylinderMap::new(
            parse(&format!("{}*xi - {}*eta", rat_str(c), rat_str(s))).unwrap(),
            parse(&format!("{}*xi + {}*eta", rat_str(s), rat_str(c))).unwrap(),
        )
        .unwrap();
        let cyl = cylinder_transversality(&arclength(), &phi).unwrap();
        // etap = 0 curves run along the boundary normal direction.
        let mut env: Env<f64> = Env::new();
        env.insert("xi".into(), 0.0);
        env.insert("eta".into(), 0.4);
        env.insert("etap".into(), 0.0);
        assert!(eval(&cyl, &env).unwrap().abs() < 1e-12);
        env.insert("etap".into(), 0.7);
        assert!(eval(&cyl, &env).unwrap().abs() > 1e-3);
    }

    fn rat_str(v: f64) -> String {
        // Closest rational with denominator 10^6, enough for test data.
        let num = (v * 1e6).round() as i64;
        format!("{num}/1000000")
    }

    #[test]
    fn cylinder_and_closed_form_agree_through_the_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let f = sample_polynomial_lagrangian(&mut rng);
            let phi = CylinderMap::new(
                parse("xi + 1/4*eta^2").unwrap(),
                parse("eta + 1/3*xi").unwrap(),
            )
            .unwrap();
            let cyl = cylinder_transversality(&f, &phi).unwrap();
            let tc = transversality(&f);
            for _ in 0..5 {
                let xi = if rng.gen_bool(0.5) { 0.0 } else { 1.0 };
                let eta = rng.gen_range(-0.9..0.9);
                let etap = rng.gen_range(-0.9..0.9);
                let mut env: Env<f64> = Env::new();
                env.insert("xi".into(), xi);
                env.insert("eta".into(), eta);
                env.insert("etap".into(), etap);
                let cyl_v = eval(&cyl, &env).unwrap();
                // Push the sample through phi.
                let x = xi + 0.25 * eta * eta;
                let y = eta + xi / 3.0;
                let x_eta = 0.5 * eta;
                let y_eta = 1.0;
                let d = 1.0 + x_eta * etap;
                let p = (1.0 / 3.0 + y_eta * etap) / d;
                let mut env2: Env<f64> = Env::new();
                env2.insert("x".into(), x);
                env2.insert("y".into(), y);
                env2.insert("p".into(), p);
                env2.insert("xG".into(), x_eta);
                env2.insert("yG".into(), y_eta);
                let tc_v = eval(&tc, &env2).unwrap();
                assert!(
                    (cyl_v - tc_v).abs() < 1e-10,
                    "cylinder {cyl_v} vs closed form {tc_v}"
                );
            }
        }
    }

    fn circle(radius: &str) -> CurveSpec {
        CurveSpec::new(
            parse(&format!("{radius}*cos(s)")).unwrap(),
            parse(&format!("{radius}*sin(s)")).unwrap(),
            (-3.2, 3.2),
        )
        .unwrap()
    }

    #[test]
    fn columbus_circle_to_line() {
        let g1 = circle("1");
        let g2 = CurveSpec::new(parse("3").unwrap(), parse("s").unwrap(), (-2.0, 2.0))
            .unwrap();
        let sol = columbus_solve::<f64>(&g1, &g2, (0.4, -0.3), 1e-13, 25).unwrap();
        assert!((sol.length - 2.0).abs() < 1e-10, "{sol:?}");
        assert!((sol.p1[0] - 1.0).abs() < 1e-9 && sol.p1[1].abs() < 1e-9);
        assert!((sol.p2[0] - 3.0).abs() < 1e-9 && sol.p2[1].abs() < 1e-9);
        assert!(sol.residuals[0].abs() < 1e-10 && sol.residuals[1].abs() < 1e-10);
        assert!(sol.iterations <= 25);
    }

    #[test]
    fn columbus_parallel_lines() {
        let g1 = CurveSpec::new(parse("s").unwrap(), parse("0").unwrap(), (-2.0, 2.0))
            .unwrap();
        let g2 = CurveSpec::new(parse("s").unwrap(), parse("1").unwrap(), (-2.0, 2.0))
            .unwrap();
        let sol = columbus_solve::<f64>(&g1, &g2, (0.7, -0.4), 1e-13, 25).unwrap();
        assert!((sol.length - 1.0).abs() < 1e-12, "{sol:?}");
        assert!((sol.s1 - sol.s2).abs() < 1e-10);
    }

    #[test]
    fn columbus_concentric_circles() {
        let sol =
            columbus_solve::<f64>(&circle("1"), &circle("3"), (0.3, -0.2), 1e-13, 25)
                .unwrap();
        assert!((sol.length - 2.0).abs() < 1e-10, "{sol:?}");
        // Radial segment: equal angles.
        let angle_gap = (sol.s1 - sol.s2).abs();
        assert!(angle_gap < 1e-8, "{sol:?}");
    }

    #[test]
    fn columbus_reports_divergence_when_starved_of_iterations() {
        let g1 = circle("1");
        let g2 = CurveSpec::new(parse("3").unwrap(), parse("s").unwrap(), (-2.0, 2.0))
            .unwrap();
        assert!(matches!(
            columbus_solve::<f64>(&g1, &g2, (1.4, 1.9), 1e-13, 1),
            Err(VarError::Divergence { iterations: 1, .. })
        ));
    }

    #[test]
    fn columbus_rejects_coincident_endpoints() {
        let g = circle("1");
        assert!(matches!(
            columbus_solve::<f64>(&g, &g.clone(), (0.1, 0.1), 1e-13, 25),
            Err(VarError::CoincidentEndpoints)
        ));
    }

    #[test]
    fn columbus_solutions_are_local_minima() {
        let g1 = circle("1");
        let g2 = CurveSpec::new(parse("3").unwrap(), parse("s").unwrap(), (-2.0, 2.0))
            .unwrap();
        let sol = columbus_solve::<f64>(&g1, &g2, (0.4, -0.3), 1e-13, 25).unwrap();
        let length = |s1: f64, s2: f64| {
            let p1 = g1.point(s1).unwrap();
            let p2 = g2.point(s2).unwrap();
            ((p2[0] - p1[0]).powi(2) + (p2[1] - p1[1]).powi(2)).sqrt()
        };
        let eps = 1e-3;
        for (d1, d2) in [
            (eps, 0.0),
            (-eps, 0.0),
            (0.0, eps),
            (0.0, -eps),
            (eps, eps),
            (eps, -eps),
            (-eps, eps),
            (-eps, -eps),
        ] {
            let perturbed = length(sol.s1 + d1, sol.s2 + d2);
            assert!(perturbed >= sol.length - 1e-9, "decreased by {d1},{d2}");
        }
    }
}
