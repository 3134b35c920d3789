//! Truncated jet charts J^k(E, n): section prolongation, tautological
//! planes, total derivatives, order projections and the mappable-jet test.
//!
//! Jets of n-dimensional submanifolds are represented in graph form
//! throughout: coordinates are `x1..xn` and `u{alpha}_{sigma}` for all
//! multi-indices of order at most k.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::coords::{parse_jet_coord, u_name, x_name, JetCoord};
use crate::expr::{derivative_table, diff, eval, Env, EvalError, Expr};
use crate::grassmann::{Plane, PlaneError};
use crate::multiindex::{binomial, indices_up_to, MultiIndex};
use crate::numeric::{det, norm, scale};
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum JetError {
    #[error("truncation order must be at least {need}, got {got}")]
    OrderTooLow { need: usize, got: usize },
    #[error("target order {target} exceeds source order {have}")]
    OrderTooHigh { target: usize, have: usize },
    #[error("variable {0:?} is not a coordinate of this chart")]
    ForeignVariable(String),
    #[error("axis {axis} out of range 1..={n}")]
    AxisOutOfRange { axis: usize, n: usize },
    #[error("point binds {got} coordinates, chart has {want}")]
    CoordCount { got: usize, want: usize },
    #[error("missing coordinate {0:?}")]
    MissingCoordinate(String),
    #[error("section has {got} components, chart wants {want}")]
    ComponentCount { got: usize, want: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Plane(#[from] PlaneError),
}

/// Chart of J^k(E, n) with m dependent variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JetChart {
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl JetChart {
    pub fn new(n: usize, m: usize, k: usize) -> JetChart {
        assert!(n >= 1 && m >= 1, "chart needs n >= 1 and m >= 1");
        JetChart { n, m, k }
    }

    /// Multi-indices of the chart in graded order.
    pub fn sigmas(&self) -> Vec<MultiIndex> {
        indices_up_to(self.n, self.k as u32)
    }

    /// Coordinate names: the x-block then the jets of each dependent
    /// variable.
    pub fn coords(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.coord_count());
        for i in 1..=self.n {
            out.push(x_name(i));
        }
        for alpha in 1..=self.m {
            for sigma in self.sigmas() {
                out.push(u_name(alpha, &sigma));
            }
        }
        out
    }

    /// n + m C(n + k, n).
    pub fn coord_count(&self) -> usize {
        self.n + self.m * binomial((self.n + self.k) as u64, self.n as u64) as usize
    }

    pub fn at_order(&self, k: usize) -> JetChart {
        JetChart::new(self.n, self.m, k)
    }

    /// Checks that a variable name is a coordinate of this chart.
    fn classify(&self, name: &str) -> Result<JetCoord, JetError> {
        match parse_jet_coord(name) {
            Some(JetCoord::X(i)) if i <= self.n => Ok(JetCoord::X(i)),
            Some(JetCoord::U { alpha, sigma })
                if alpha <= self.m
                    && sigma.len() == self.n
                    && sigma.order() <= self.k as u32 =>
            {
                Ok(JetCoord::U { alpha, sigma })
            }
            _ => Err(JetError::ForeignVariable(name.to_string())),
        }
    }
}

/// Numeric point of a jet chart; every coordinate bound exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct JetPoint<T> {
    chart: JetChart,
    values: BTreeMap<String, T>,
}

impl<T: Serialize> Serialize for JetPoint<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.values.serialize(serializer)
    }
}

impl<T: Clone> JetPoint<T> {
    pub fn new(chart: JetChart, values: BTreeMap<String, T>) -> Result<Self, JetError> {
        let coords = chart.coords();
        if values.len() != coords.len() {
            return Err(JetError::CoordCount {
                got: values.len(),
                want: coords.len(),
            });
        }
        for c in &coords {
            if !values.contains_key(c) {
                return Err(JetError::MissingCoordinate(c.clone()));
            }
        }
        Ok(JetPoint { chart, values })
    }

    pub fn from_fn(chart: JetChart, mut f: impl FnMut(&str) -> T) -> Self {
        let values = chart.coords().into_iter().map(|c| {
            let v = f(&c);
            (c, v)
        });
        JetPoint {
            chart,
            values: values.collect(),
        }
    }

    pub fn chart(&self) -> JetChart {
        self.chart
    }

    pub fn values(&self) -> &BTreeMap<String, T> {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<&T> {
        self.values.get(name)
    }

    pub fn x(&self, i: usize) -> T {
        self.values[&x_name(i)].clone()
    }

    pub fn u(&self, alpha: usize, sigma: &MultiIndex) -> T {
        self.values[&u_name(alpha, sigma)].clone()
    }

    /// Forgets all coordinates of order above `l`.
    pub fn project(&self, l: usize) -> Result<JetPoint<T>, JetError> {
        if l > self.chart.k {
            return Err(JetError::OrderTooHigh {
                target: l,
                have: self.chart.k,
            });
        }
        let target = self.chart.at_order(l);
        let values = target
            .coords()
            .into_iter()
            .map(|c| {
                let v = self.values[&c].clone();
                (c, v)
            })
            .collect();
        Ok(JetPoint {
            chart: target,
            values,
        })
    }
}

/// Graph-form section: m expressions in `x1..xn`.
#[derive(Debug, Clone, Serialize)]
pub struct SectionSpec {
    n: usize,
    components: Vec<Expr>,
}

impl SectionSpec {
    pub fn new(n: usize, components: Vec<Expr>) -> Result<Self, JetError> {
        for e in &components {
            for v in e.free_vars() {
                match parse_jet_coord(&v) {
                    Some(JetCoord::X(i)) if i <= n => {}
                    _ => return Err(JetError::ForeignVariable(v)),
                }
            }
        }
        Ok(SectionSpec { n, components })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }
}

fn base_env<T: Scalar>(n: usize, x0: &[T]) -> Env<T> {
    let mut env = Env::new();
    for (i, &v) in x0.iter().enumerate().take(n) {
        env.insert(x_name(i + 1), v);
    }
    env
}

/// Jet of the graph of `s` at `x0`: u^a_sigma = (d^sigma s^a)(x0).
pub fn prolong_section<T: Scalar>(
    s: &SectionSpec,
    k: usize,
    x0: &[T],
) -> Result<JetPoint<T>, JetError> {
    if x0.len() != s.n {
        return Err(JetError::ComponentCount {
            got: x0.len(),
            want: s.n,
        });
    }
    let chart = JetChart::new(s.n, s.m(), k);
    let env = base_env(s.n, x0);
    let xs: Vec<String> = (1..=s.n).map(x_name).collect();
    let mut values = BTreeMap::new();
    for (i, x) in xs.iter().enumerate() {
        values.insert(x.clone(), x0[i]);
    }
    for (alpha, comp) in s.components.iter().enumerate() {
        let table = derivative_table(comp, &xs, k as u32);
        for (sigma, e) in table {
            values.insert(u_name(alpha + 1, &sigma), eval(&e, &env)?);
        }
    }
    JetPoint::new(chart, values)
}

/// The tautological n-plane of a jet of order k >= 1, as a subspace of the
/// order-(k-1) chart: spanned by the total-derivative directions
/// `d_l + u^a_{sigma+1_l} d_{u^a_sigma}`.
pub fn r_plane<T: Scalar>(theta: &JetPoint<T>) -> Result<Plane<T>, JetError> {
    let chart = theta.chart();
    if chart.k == 0 {
        return Err(JetError::OrderTooLow { need: 1, got: 0 });
    }
    let lower = chart.at_order(chart.k - 1);
    let coords = lower.coords();
    let mut basis = Vec::with_capacity(chart.n);
    for l in 1..=chart.n {
        let mut v = Vec::with_capacity(coords.len());
        for c in &coords {
            let entry = match lower.classify(c)? {
                JetCoord::X(i) => {
                    if i == l {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
                JetCoord::U { alpha, sigma } => {
                    let bumped = sigma.bump(l).expect("axis in range");
                    theta.u(alpha, &bumped)
                }
            };
            v.push(entry);
        }
        basis.push(v);
    }
    Ok(Plane::new(coords.len(), basis)?)
}

/// Total derivative D_i on chart expressions:
/// `D_i e = d_i e + sum u^a_{sigma+1_i} de/du^a_sigma`. The result lives on
/// the order-(k+1) chart.
pub fn total_derivative(chart: &JetChart, e: &Expr, i: usize) -> Result<Expr, JetError> {
    if i == 0 || i > chart.n {
        return Err(JetError::AxisOutOfRange { axis: i, n: chart.n });
    }
    let mut terms = vec![diff(e, &x_name(i))];
    for v in e.free_vars() {
        match chart.classify(&v)? {
            JetCoord::X(_) => {}
            JetCoord::U { alpha, sigma } => {
                let bumped = sigma.bump(i).expect("axis in range");
                terms.push(Expr::prod(vec![
                    Expr::var(u_name(alpha, &bumped)),
                    diff(e, &v),
                ]));
            }
        }
    }
    Ok(Expr::sum(terms))
}

/// Map of the base manifold given by target-coordinate expressions in the
/// variables `x1..xn, u1..um` (order-0 names).
#[derive(Debug, Clone)]
pub struct MapSpec {
    pub targets: Vec<Expr>,
}

fn dep_name(alpha: usize) -> String {
    format!("u{alpha}")
}

/// Whether the n pushforwards of the tautological-plane generators under
/// the map are linearly independent: the Gram determinant of the
/// unit-normalized images must exceed 1e-12.
pub fn is_mappable<T: Scalar>(theta: &JetPoint<T>, f: &MapSpec) -> Result<bool, JetError> {
    let chart = theta.chart();
    if chart.k == 0 {
        return Err(JetError::OrderTooLow { need: 1, got: 0 });
    }
    for target in &f.targets {
        for v in target.free_vars() {
            let ok = match parse_jet_coord(&v) {
                Some(JetCoord::X(i)) => i <= chart.n,
                _ => {
                    v.strip_prefix('u')
                        .and_then(|r| r.parse::<usize>().ok())
                        .map(|alpha| alpha >= 1 && alpha <= chart.m)
                        .unwrap_or(false)
                }
            };
            if !ok {
                return Err(JetError::ForeignVariable(v));
            }
        }
    }
    let mut env: Env<T> = Env::new();
    for i in 1..=chart.n {
        env.insert(x_name(i), theta.x(i));
    }
    let zero = MultiIndex::zero(chart.n);
    for alpha in 1..=chart.m {
        env.insert(dep_name(alpha), theta.u(alpha, &zero));
    }
    // Pushforward of d_i + u^a_i d_{u^a} through the Jacobian of f.
    let mut images: Vec<Vec<T>> = Vec::with_capacity(chart.n);
    for i in 1..=chart.n {
        let e_i = MultiIndex::unit(chart.n, i).expect("axis in range");
        let mut row = Vec::with_capacity(f.targets.len());
        for target in &f.targets {
            let mut v = eval(&diff(target, &x_name(i)), &env)?;
            for alpha in 1..=chart.m {
                let slope = theta.u(alpha, &e_i);
                v = v + eval(&diff(target, &dep_name(alpha)), &env)? * slope;
            }
            row.push(v);
        }
        images.push(row);
    }
    let tiny = T::from_f64(1e-300).unwrap_or_else(T::min_positive_value);
    let mut normalized = Vec::with_capacity(images.len());
    for v in &images {
        let n = norm(v);
        if n < tiny {
            return Ok(false);
        }
        normalized.push(scale(v, T::one() / n));
    }
    let gram: Vec<Vec<T>> = normalized
        .iter()
        .map(|a| normalized.iter().map(|b| crate::numeric::dot(a, b)).collect())
        .collect();
    Ok(det(&gram).abs() > T::from_f64(1e-12).unwrap())
}

/// The order projection pi_{k,l}: forgets coordinates of order above l.
pub fn jet_map_project<T: Clone>(
    theta: &JetPoint<T>,
    l: usize,
) -> Result<JetPoint<T>, JetError> {
    theta.project(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{exprs_equal, is_zero, parse};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn section1(text: &str) -> SectionSpec {
        SectionSpec::new(1, vec![parse(text).unwrap()]).unwrap()
    }

    #[test]
    fn chart_coordinate_count() {
        for n in 1..=3 {
            for m in 1..=2 {
                for k in 0..=4 {
                    let chart = JetChart::new(n, m, k);
                    assert_eq!(chart.coords().len(), chart.coord_count());
                }
            }
        }
        // n=2, m=1, k=2: 2 + C(4,2) = 8
        assert_eq!(JetChart::new(2, 1, 2).coord_count(), 8);
    }

    #[test]
    fn prolong_polynomial_section() {
        let s = section1("x1^2");
        let theta = prolong_section::<f64>(&s, 2, &[1.0]).unwrap();
        assert_eq!(theta.x(1), 1.0);
        assert_eq!(theta.u(1, &"0".parse().unwrap()), 1.0);
        assert_eq!(theta.u(1, &"1".parse().unwrap()), 2.0);
        assert_eq!(theta.u(1, &"2".parse().unwrap()), 2.0);
    }

    #[test]
    fn prolong_constant_section() {
        let s = section1("3/2");
        let theta = prolong_section::<f64>(&s, 3, &[0.4]).unwrap();
        assert_eq!(theta.u(1, &"0".parse().unwrap()), 1.5);
        for order in 1..=3u32 {
            assert_eq!(theta.u(1, &MultiIndex::new(vec![order])), 0.0);
        }
    }

    #[test]
    fn prolong_sine_matches_finite_differences() {
        let s = section1("sin(x1)");
        let theta = prolong_section::<f64>(&s, 3, &[0.0]).unwrap();
        let expect = [0.0, 1.0, 0.0, -1.0];
        for (ord, &want) in expect.iter().enumerate() {
            let got = theta.u(1, &MultiIndex::new(vec![ord as u32]));
            assert!((got - want).abs() < 1e-12, "order {ord}");
        }
        // Third derivative against a central difference of the second.
        let h = 1e-6;
        let at = |x: f64| {
            prolong_section::<f64>(&s, 2, &[x])
                .unwrap()
                .u(1, &"2".parse().unwrap())
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let sym = theta.u(1, &"3".parse().unwrap());
        assert!((fd - sym).abs() < 1e-6);
    }

    #[test]
    fn r_plane_of_first_order_jet_is_the_slope_line() {
        let chart = JetChart::new(1, 1, 1);
        let mut values = BTreeMap::new();
        values.insert("x1".to_string(), 0.3);
        values.insert("u1_0".to_string(), 1.0);
        values.insert("u1_1".to_string(), 2.5);
        let theta = JetPoint::new(chart, values).unwrap();
        let plane = r_plane(&theta).unwrap();
        assert_eq!(plane.ambient_dim(), 2);
        assert_eq!(plane.basis(), &[vec![1.0, 2.5]]);
    }

    #[test]
    fn r_plane_is_horizontal_with_identity_x_block() {
        let s = SectionSpec::new(
            2,
            vec![parse("x1^2 + x2").unwrap(), parse("x1*x2").unwrap()],
        )
        .unwrap();
        let theta = prolong_section::<f64>(&s, 2, &[0.5, -0.3]).unwrap();
        let plane = r_plane(&theta).unwrap();
        for (l, row) in plane.basis().iter().enumerate() {
            for j in 0..2 {
                let want = if j == l { 1.0 } else { 0.0 };
                assert_eq!(row[j], want);
            }
        }
    }

    #[test]
    fn r_plane_matches_tangent_of_prolonged_graph() {
        let s = section1("sin(x1) + x1^3");
        let k = 3;
        let x0 = 0.4;
        let theta = prolong_section::<f64>(&s, k, &[x0]).unwrap();
        let plane = r_plane(&theta).unwrap();
        // Tangent of x -> j_{k-1}(s)(x) by central differences.
        let h = 1e-6;
        let plus = prolong_section::<f64>(&s, k - 1, &[x0 + h]).unwrap();
        let minus = prolong_section::<f64>(&s, k - 1, &[x0 - h]).unwrap();
        let chart = JetChart::new(1, 1, k - 1);
        let tangent: Vec<f64> = chart
            .coords()
            .iter()
            .map(|c| (plus.values()[c] - minus.values()[c]) / (2.0 * h))
            .collect();
        for (a, b) in plane.basis()[0].iter().zip(&tangent) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn r_plane_requires_positive_order() {
        let s = section1("x1");
        let theta = prolong_section::<f64>(&s, 0, &[0.0]).unwrap();
        assert!(matches!(
            r_plane(&theta),
            Err(JetError::OrderTooLow { .. })
        ));
    }

    #[test]
    fn total_derivative_of_order_zero() {
        let chart = JetChart::new(1, 1, 0);
        let d = total_derivative(&chart, &parse("u1_0").unwrap(), 1).unwrap();
        assert!(exprs_equal(&d, &parse("u1_1").unwrap()));
    }

    #[test]
    fn total_derivative_product_rule() {
        let chart = JetChart::new(1, 1, 1);
        let d = total_derivative(&chart, &parse("x1*u1_1").unwrap(), 1).unwrap();
        assert!(exprs_equal(&d, &parse("u1_1 + x1*u1_2").unwrap()));
    }

    #[test]
    fn total_derivative_rejects_foreign_variables() {
        let chart = JetChart::new(1, 1, 1);
        assert!(matches!(
            total_derivative(&chart, &parse("y + u1_1").unwrap(), 1),
            Err(JetError::ForeignVariable(v)) if v == "y"
        ));
    }

    #[test]
    fn total_derivatives_commute_symbolically() {
        let chart = JetChart::new(2, 2, 1);
        let exprs = [
            "x1*u1_1.0 + u2_0.1^2",
            "sin(u1_0.0)*x2",
            "u1_1.0*u2_1.0 + x1*x2",
        ];
        for text in exprs {
            let e = parse(text).unwrap();
            let d12 = total_derivative(
                &chart.at_order(2),
                &total_derivative(&chart, &e, 1).unwrap(),
                2,
            )
            .unwrap();
            let d21 = total_derivative(
                &chart.at_order(2),
                &total_derivative(&chart, &e, 2).unwrap(),
                1,
            )
            .unwrap();
            assert!(is_zero(&(d12 - d21)), "not commuting on {text}");
        }
    }

    #[test]
    fn total_derivative_matches_derivative_along_prolongation() {
        let s = SectionSpec::new(
            2,
            vec![parse("sin(x1)*x2 + x1^2").unwrap()],
        )
        .unwrap();
        let chart = JetChart::new(2, 1, 1);
        let e = parse("x1*u1_0.1 + u1_0.0^2").unwrap();
        let de = total_derivative(&chart, &e, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let h = 1e-5;
            let value_at = |x1: f64| -> f64 {
                let theta = prolong_section::<f64>(&s, 1, &[x1, x[1]]).unwrap();
                let mut env: Env<f64> = theta.values().clone();
                env.extend(theta.values().clone());
                eval(&e, &env).unwrap()
            };
            let fd = (value_at(x[0] + h) - value_at(x[0] - h)) / (2.0 * h);
            let theta2 = prolong_section::<f64>(&s, 2, &x).unwrap();
            let sym = eval(&de, theta2.values()).unwrap();
            assert!((fd - sym).abs() < 1e-8, "fd {fd} vs sym {sym}");
        }
    }

    #[test]
    fn identity_map_is_always_mappable() {
        let s = section1("x1^2");
        let theta = prolong_section::<f64>(&s, 1, &[0.7]).unwrap();
        let f = MapSpec {
            targets: vec![parse("x1").unwrap(), parse("u1").unwrap()],
        };
        assert!(is_mappable(&theta, &f).unwrap());
    }

    #[test]
    fn base_projection_is_mappable_on_section_jets() {
        let s = SectionSpec::new(
            2,
            vec![parse("x1*x2").unwrap()],
        )
        .unwrap();
        let theta = prolong_section::<f64>(&s, 1, &[0.3, 0.9]).unwrap();
        let f = MapSpec {
            targets: vec![parse("x1").unwrap(), parse("x2").unwrap()],
        };
        assert!(is_mappable(&theta, &f).unwrap());
    }

    #[test]
    fn constant_map_is_not_mappable() {
        let s = section1("x1");
        let theta = prolong_section::<f64>(&s, 1, &[0.0]).unwrap();
        let f = MapSpec {
            targets: vec![parse("1").unwrap(), parse("2").unwrap()],
        };
        assert!(!is_mappable(&theta, &f).unwrap());
    }

    #[test]
    fn projection_tower_composes() {
        let s = section1("sin(x1) + x1^2");
        let theta = prolong_section::<f64>(&s, 3, &[0.2]).unwrap();
        let via = jet_map_project(&jet_map_project(&theta, 2).unwrap(), 1).unwrap();
        let direct = jet_map_project(&theta, 1).unwrap();
        assert_eq!(via, direct);
        let id = jet_map_project(&theta, 3).unwrap();
        assert_eq!(id, theta);
        assert!(jet_map_project(&theta, 4).is_err());
    }
}
