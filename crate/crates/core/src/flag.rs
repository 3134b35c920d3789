//! Flag-jet coordinate systems and the structural projections.
//!
//! A flag jet of order k over n independent variables pairs an n-plane
//! with a contained (n-1)-plane. Chart I uses the jet coordinates
//! `u{a}_{A}_{l}` up to order k plus the Cauchy-surface slopes `tD_a`;
//! chart II trades the top spatial derivatives for the inner derivatives
//! `w{a}_{A}_{l}_{e_a}` at level k-1 plus the purely normal `u_{0,k}`. The
//! two are linked by `(u_{A,l})_a = u_{Aa,l} + t_a u_{A,l+1}`, which is
//! polynomial with integer coefficients, so the transform is exact over
//! rational scalars.
//!
//! Chart II lists one more function than chart I once n >= 3; the excess
//! is cut out by the compatibility relations that the curvature equations
//! impose, and [`peel_consistency`] measures the discrepancy on points
//! where they fail.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::coords::{t_slope_name, u_flag_name, u_name, w_name, x_name, T_NAME};
use crate::expr::Expr;
use crate::involutive::{DistributionSpec, Form1};
use crate::jetspace::{JetChart, JetPoint};
use crate::multiindex::{binomial, indices_up_to, MultiIndex};
use crate::{CoordScalar, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum FlagError {
    #[error("order must be at least 1 for this projection")]
    OrderZero,
    #[error("point binds {got} coordinates, chart has {want}")]
    CoordCount { got: usize, want: usize },
    #[error("missing coordinate {0:?}")]
    MissingCoordinate(String),
}

/// Derivative pairs (A, l) with |A| + l <= k, graded; A has length n - 1.
pub fn derivative_pairs(n: usize, k: usize) -> Vec<(MultiIndex, u32)> {
    indices_up_to(n, k as u32)
        .into_iter()
        .map(|sigma| {
            let e = sigma.exponents();
            (MultiIndex::new(e[..n - 1].to_vec()), e[n - 1])
        })
        .collect()
}

/// Chart bookkeeping for flag jets of order k with m dependent variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlagChart {
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl FlagChart {
    pub fn new(n: usize, m: usize, k: usize) -> FlagChart {
        assert!(n >= 1 && m >= 1, "chart needs n >= 1 and m >= 1");
        FlagChart { n, m, k }
    }

    pub fn at_order(&self, k: usize) -> FlagChart {
        FlagChart::new(self.n, self.m, k)
    }

    pub fn pairs(&self) -> Vec<(MultiIndex, u32)> {
        derivative_pairs(self.n, self.k)
    }

    /// Chart I coordinates: x-block, t, all jets, Cauchy-surface slopes.
    pub fn coords_i(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in 1..=self.n - 1 {
            out.push(x_name(a));
        }
        out.push(T_NAME.to_string());
        for alpha in 1..=self.m {
            for (a, l) in self.pairs() {
                out.push(u_flag_name(alpha, &a, l));
            }
        }
        for a in 1..=self.n - 1 {
            out.push(t_slope_name(&MultiIndex::unit(self.n - 1, a).unwrap()));
        }
        out
    }

    /// Chart II coordinates: jets up to k-1, the purely normal u_{0,k},
    /// slopes, and the level-(k-1) inner derivatives.
    pub fn coords_ii(&self) -> Vec<String> {
        assert!(self.k >= 1, "chart II needs order >= 1");
        let mut out = Vec::new();
        for a in 1..=self.n - 1 {
            out.push(x_name(a));
        }
        out.push(T_NAME.to_string());
        for alpha in 1..=self.m {
            for (a, l) in derivative_pairs(self.n, self.k - 1) {
                out.push(u_flag_name(alpha, &a, l));
            }
            out.push(u_flag_name(alpha, &MultiIndex::zero(self.n - 1), self.k as u32));
        }
        for a in 1..=self.n - 1 {
            out.push(t_slope_name(&MultiIndex::unit(self.n - 1, a).unwrap()));
        }
        for alpha in 1..=self.m {
            for (a, l) in derivative_pairs(self.n, self.k - 1) {
                if a.order() + l == (self.k - 1) as u32 {
                    for axis in 1..=self.n - 1 {
                        out.push(w_name(
                            alpha,
                            &a,
                            l,
                            &MultiIndex::unit(self.n - 1, axis).unwrap(),
                        ));
                    }
                }
            }
        }
        out
    }

    pub fn coord_count_i(&self) -> usize {
        (self.n - 1)
            + 1
            + self.m * binomial((self.n + self.k) as u64, self.n as u64) as usize
            + (self.n - 1)
    }
}

/// dim J^k(E,n,n-1) = dim J^k(E,n) + dim J^1(E_-1,n-1) - n.
pub fn flag_dim(n: usize, m: usize, k: usize) -> usize {
    let jet = n + m * binomial((n + k) as u64, n as u64) as usize;
    let lower_flag = n + (n - 1);
    jet + lower_flag - n
}

macro_rules! chart_point {
    ($(#[$doc:meta])* $name:ident, $coords:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<T> {
            chart: FlagChart,
            values: BTreeMap<String, T>,
        }

        impl<T: Serialize> Serialize for $name<T> {
            fn serialize<S: serde::Serializer>(
                &self,
                serializer: S,
            ) -> Result<S::Ok, S::Error> {
                self.values.serialize(serializer)
            }
        }

        impl<T: CoordScalar> $name<T> {
            pub fn new(
                chart: FlagChart,
                values: BTreeMap<String, T>,
            ) -> Result<Self, FlagError> {
                let coords = chart.$coords();
                if values.len() != coords.len() {
                    return Err(FlagError::CoordCount {
                        got: values.len(),
                        want: coords.len(),
                    });
                }
                for c in &coords {
                    if !values.contains_key(c) {
                        return Err(FlagError::MissingCoordinate(c.clone()));
                    }
                }
                Ok(Self { chart, values })
            }

            pub fn from_fn(chart: FlagChart, mut f: impl FnMut(&str) -> T) -> Self {
                let values = chart
                    .$coords()
                    .into_iter()
                    .map(|c| {
                        let v = f(&c);
                        (c, v)
                    })
                    .collect();
                Self { chart, values }
            }

            pub fn chart(&self) -> FlagChart {
                self.chart
            }

            pub fn values(&self) -> &BTreeMap<String, T> {
                &self.values
            }

            pub fn get(&self, name: &str) -> T {
                self.values[name].clone()
            }
        }
    };
}

chart_point!(
    /// Flag-jet point in chart I.
    FlagPointI,
    coords_i
);
chart_point!(
    /// Flag-jet point in chart II.
    FlagPointII,
    coords_ii
);

/// Point of the equation of involutive small planes sitting over the
/// order-`k` jet space: jets up to k, slopes, and the level-k inner
/// derivatives. Same coordinate lists as chart II of order k+1 minus the
/// purely normal derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct InvPlanePoint<T> {
    n: usize,
    m: usize,
    /// Jet order of the underlying point.
    pub order: usize,
    values: BTreeMap<String, T>,
}

impl<T: Serialize> Serialize for InvPlanePoint<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.values.serialize(serializer)
    }
}

impl<T: CoordScalar> InvPlanePoint<T> {
    pub fn coords(n: usize, m: usize, order: usize) -> Vec<String> {
        let mut out = Vec::new();
        for a in 1..=n - 1 {
            out.push(x_name(a));
        }
        out.push(T_NAME.to_string());
        for alpha in 1..=m {
            for (a, l) in derivative_pairs(n, order) {
                out.push(u_flag_name(alpha, &a, l));
            }
        }
        for a in 1..=n - 1 {
            out.push(t_slope_name(&MultiIndex::unit(n - 1, a).unwrap()));
        }
        for alpha in 1..=m {
            for (a, l) in derivative_pairs(n, order) {
                if a.order() + l == order as u32 {
                    for axis in 1..=n - 1 {
                        out.push(w_name(alpha, &a, l, &MultiIndex::unit(n - 1, axis).unwrap()));
                    }
                }
            }
        }
        out
    }

    pub fn new(
        n: usize,
        m: usize,
        order: usize,
        values: BTreeMap<String, T>,
    ) -> Result<Self, FlagError> {
        let coords = Self::coords(n, m, order);
        if values.len() != coords.len() {
            return Err(FlagError::CoordCount {
                got: values.len(),
                want: coords.len(),
            });
        }
        for c in &coords {
            if !values.contains_key(c) {
                return Err(FlagError::MissingCoordinate(c.clone()));
            }
        }
        Ok(InvPlanePoint {
            n,
            m,
            order,
            values,
        })
    }

    pub fn values(&self) -> &BTreeMap<String, T> {
        &self.values
    }
}

/// Chart I -> chart II: computes the top inner derivatives through
/// `(u_{A,l})_a = u_{Aa,l} + t_a u_{A,l+1}` and copies the rest.
pub fn flag_i_to_ii<T: CoordScalar>(p: &FlagPointI<T>) -> FlagPointII<T> {
    let chart = p.chart();
    assert!(chart.k >= 1, "chart II needs order >= 1");
    let mut values = BTreeMap::new();
    for c in chart.coords_ii() {
        if let Some(v) = p.values().get(&c) {
            values.insert(c, v.clone());
            continue;
        }
        // Remaining coordinates are the inner derivatives.
        let (alpha, a_idx, l, axis) = split_w_name(&c, chart.n).expect("w coordinate");
        let bumped = a_idx.bump(axis).unwrap();
        let spatial = p.get(&u_flag_name(alpha, &bumped, l));
        let slope = p.get(&t_slope_name(&MultiIndex::unit(chart.n - 1, axis).unwrap()));
        let normal = p.get(&u_flag_name(alpha, &a_idx, l + 1));
        values.insert(c, spatial + slope * normal);
    }
    FlagPointII::new(chart, values).expect("chart II coordinates complete")
}

/// Chart II -> chart I: recovers the order-k coordinates by peeling
/// `u_{Aa,l} = (u_{A,l})_a - t_a u_{A,l+1}`, ascending in |A| with the
/// lowest axis peeled first; the purely normal u_{0,k} seeds the
/// recursion.
pub fn flag_ii_to_i<T: CoordScalar>(p: &FlagPointII<T>) -> FlagPointI<T> {
    let chart = p.chart();
    let k = chart.k as u32;
    let mut values: BTreeMap<String, T> = BTreeMap::new();
    for c in chart.coords_i() {
        if let Some(v) = p.values().get(&c) {
            values.insert(c, v.clone());
        }
    }
    // Level-k pairs by ascending spatial order.
    let mut top: Vec<(MultiIndex, u32)> = derivative_pairs(chart.n, chart.k)
        .into_iter()
        .filter(|(a, l)| a.order() + l == k)
        .collect();
    top.sort_by_key(|(a, _)| a.order());
    for alpha in 1..=chart.m {
        for (b, l) in &top {
            if b.is_zero() {
                continue; // u_{0,k} is a chart II coordinate, already copied
            }
            let axis = b.lowest_axis().unwrap();
            let parent = b.unbump(axis).unwrap();
            let inner = p.get(&w_name(
                alpha,
                &parent,
                *l,
                &MultiIndex::unit(chart.n - 1, axis).unwrap(),
            ));
            let slope = p.get(&t_slope_name(&MultiIndex::unit(chart.n - 1, axis).unwrap()));
            let normal = values[&u_flag_name(alpha, &parent, l + 1)].clone();
            values.insert(u_flag_name(alpha, b, *l), inner - slope * normal);
        }
    }
    FlagPointI::new(chart, values).expect("chart I coordinates complete")
}

/// Largest discrepancy of the chart II -> I recovery across admissible
/// peel orders. Zero exactly on points satisfying the chart II
/// compatibility relations (all images of chart I); nonzero otherwise.
pub fn peel_consistency<T: Scalar>(p: &FlagPointII<T>) -> T {
    let chart = p.chart();
    let canonical = flag_ii_to_i(p);
    let k = chart.k as u32;
    let mut worst = T::zero();
    let mut top: Vec<(MultiIndex, u32)> = derivative_pairs(chart.n, chart.k)
        .into_iter()
        .filter(|(a, l)| a.order() + l == k && !a.is_zero())
        .collect();
    top.sort_by_key(|(a, _)| a.order());
    for alpha in 1..=chart.m {
        for (b, l) in &top {
            for axis in 1..=chart.n - 1 {
                let Some(parent) = b.unbump(axis) else {
                    continue;
                };
                let inner = p.get(&w_name(
                    alpha,
                    &parent,
                    *l,
                    &MultiIndex::unit(chart.n - 1, axis).unwrap(),
                ));
                let slope =
                    p.get(&t_slope_name(&MultiIndex::unit(chart.n - 1, axis).unwrap()));
                let normal = canonical.get(&u_flag_name(alpha, &parent, l + 1));
                let alt = inner - slope * normal;
                let diff = alt - canonical.get(&u_flag_name(alpha, b, *l));
                worst = worst.max(diff.abs());
            }
        }
    }
    worst
}

fn split_w_name(name: &str, n: usize) -> Option<(usize, MultiIndex, u32, usize)> {
    let rest = name.strip_prefix('w')?;
    let parts: Vec<&str> = rest.split('_').collect();
    if parts.len() != 4 {
        return None;
    }
    let alpha: usize = parts[0].parse().ok()?;
    let a: MultiIndex = parts[1].parse().ok()?;
    let l: u32 = parts[2].parse().ok()?;
    let b: MultiIndex = parts[3].parse().ok()?;
    if a.len() != n - 1 || b.order() != 1 {
        return None;
    }
    Some((alpha, a, l, b.lowest_axis()?))
}

/// The flag projection of order k to k-1: drops the top jets.
pub fn project_flag<T: CoordScalar>(p: &FlagPointI<T>) -> Result<FlagPointI<T>, FlagError> {
    let chart = p.chart();
    if chart.k == 0 {
        return Err(FlagError::OrderZero);
    }
    let target = chart.at_order(chart.k - 1);
    let values = target
        .coords_i()
        .into_iter()
        .map(|c| {
            let v = p.get(&c);
            (c, v)
        })
        .collect();
    FlagPointI::new(target, values)
}

/// Projection onto the equation of involutive small planes: chart II with
/// the purely normal derivatives forgotten. The u_{0,k} are the fiber
/// coordinates.
pub fn n_project<T: CoordScalar>(p: &FlagPointI<T>) -> Result<InvPlanePoint<T>, FlagError> {
    let chart = p.chart();
    if chart.k == 0 {
        return Err(FlagError::OrderZero);
    }
    let ii = flag_i_to_ii(p);
    let values = InvPlanePoint::<T>::coords(chart.n, chart.m, chart.k - 1)
        .into_iter()
        .map(|c| {
            let v = ii.get(&c);
            (c, v)
        })
        .collect();
    InvPlanePoint::new(chart.n, chart.m, chart.k - 1, values)
}

/// Projection from involutive small planes to flag jets one order down:
/// forgets the inner derivatives, which are the fiber coordinates.
pub fn q_project<T: CoordScalar>(p: &InvPlanePoint<T>) -> FlagPointI<T> {
    let chart = FlagChart::new(p.n, p.m, p.order);
    let values = chart
        .coords_i()
        .into_iter()
        .map(|c| {
            let v = p.values()[&c].clone();
            (c, v)
        })
        .collect();
    FlagPointI::new(chart, values).expect("flag coordinates are a subset")
}

pub(crate) fn jet_values_from_flag<T: CoordScalar>(
    n: usize,
    m: usize,
    k: usize,
    get: &dyn Fn(&str) -> T,
) -> JetPoint<T> {
    let jet = JetChart::new(n, m, k);
    let mut values = BTreeMap::new();
    for a in 1..=n - 1 {
        values.insert(x_name(a), get(&x_name(a)));
    }
    values.insert(x_name(n), get(T_NAME));
    for alpha in 1..=m {
        for (a, l) in derivative_pairs(n, k) {
            let mut sigma = a.exponents().to_vec();
            sigma.push(l);
            values.insert(
                u_name(alpha, &MultiIndex::new(sigma)),
                get(&u_flag_name(alpha, &a, l)),
            );
        }
    }
    JetPoint::new(jet, values).expect("flag jets cover the jet chart")
}

/// Projection onto the underlying jet space: drops the Cauchy-surface
/// slopes and renames (A, l) into the standard jet multi-index with
/// x^n = t.
pub fn p_project<T: CoordScalar>(p: &FlagPointI<T>) -> JetPoint<T> {
    let chart = p.chart();
    jet_values_from_flag(chart.n, chart.m, chart.k, &|name| p.get(name))
}

/// The underlying jet point of an involutive small plane, i.e. the
/// restriction of the first-order jet projection.
pub fn underlying_jet<T: CoordScalar>(p: &InvPlanePoint<T>) -> JetPoint<T> {
    jet_values_from_flag(p.n, p.m, p.order, &|name| p.values()[name].clone())
}

/// Contact forms of the order-j jet space in flag-adapted coordinates:
/// E has independent variables x^1..x^{n-1}, dependent t and the jets up
/// to order j, with forms `du_{A,l} - u_{Aa,l} dx^a - u_{A,l+1} dt` for
/// |A| + l <= j - 1.
pub fn cartan_distribution_flag(n: usize, m: usize, j: usize) -> DistributionSpec {
    assert!(n >= 2, "flag-adapted forms need a spatial direction");
    let x_vars: Vec<String> = (1..=n - 1).map(x_name).collect();
    let mut u_vars: Vec<String> = vec![T_NAME.to_string()];
    for alpha in 1..=m {
        for (a, l) in derivative_pairs(n, j) {
            u_vars.push(u_flag_name(alpha, &a, l));
        }
    }
    let mut forms = Vec::new();
    if j >= 1 {
        for alpha in 1..=m {
            for (a, l) in derivative_pairs(n, j - 1) {
                let dx = (1..=n - 1)
                    .map(|axis| Expr::var(u_flag_name(alpha, &a.bump(axis).unwrap(), l)).neg())
                    .collect();
                let target = u_flag_name(alpha, &a, l);
                let du = u_vars
                    .iter()
                    .map(|v| {
                        if *v == target {
                            Expr::one()
                        } else if v == T_NAME {
                            Expr::var(u_flag_name(alpha, &a, l + 1)).neg()
                        } else {
                            Expr::zero()
                        }
                    })
                    .collect();
                forms.push(Form1 { dx, du });
            }
        }
    }
    DistributionSpec::new(x_vars, u_vars, forms).expect("flag contact forms are well-formed")
}

/// Substitution realizing the chart relations on the slopes of the
/// flag-adapted J^1 chart over the order-j jet space: the slope of t maps
/// to `tD_a` and the slope of u_{A,l} to `u_{Aa,l} + tD_a u_{A,l+1}`. The
/// right-hand sides live on chart I of order j+1.
pub fn chart_relation_subst(n: usize, m: usize, j: usize) -> BTreeMap<String, Expr> {
    let mut map = BTreeMap::new();
    for axis in 1..=n - 1 {
        let unit = MultiIndex::unit(n - 1, axis).unwrap();
        map.insert(
            format!("{T_NAME}_{unit}"),
            Expr::var(t_slope_name(&unit)),
        );
        for alpha in 1..=m {
            for (a, l) in derivative_pairs(n, j) {
                let slope_var = format!("{}_{unit}", u_flag_name(alpha, &a, l));
                let rhs = Expr::var(u_flag_name(alpha, &a.bump(axis).unwrap(), l))
                    + Expr::var(t_slope_name(&unit))
                        * Expr::var(u_flag_name(alpha, &a, l + 1));
                map.insert(slope_var, rhs);
            }
        }
    }
    map
}

/// Residuals of the three commuting relations of the projection diagram,
/// evaluated on seeded random flag points: the flag projection factors as
/// q after n, the jet projection intertwines p with the flag projection,
/// and p after q restricts the underlying first-order projection.
#[derive(Debug, Clone, Serialize)]
pub struct DiagramReport {
    pub samples: usize,
    pub max_residual: f64,
}

pub fn diagram_commutativity(
    n: usize,
    m: usize,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<DiagramReport, FlagError> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chart = FlagChart::new(n, m, k);
    let mut max_residual = 0.0f64;
    let mut gap = |a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>| {
        for (key, v) in a {
            let d = (b[key] - v).abs();
            if d > max_residual {
                max_residual = d;
            }
        }
    };
    for _ in 0..samples {
        let p = FlagPointI::from_fn(chart, |_| rng.gen_range(-1.0..1.0));
        let via_inv = q_project(&n_project(&p)?);
        let direct = project_flag(&p)?;
        gap(via_inv.values(), direct.values());
        let left = p_project(&project_flag(&p)?);
        let right = p_project(&p).project(k - 1).expect("order in range");
        gap(left.values(), right.values());
        let ip = n_project(&p)?;
        let via_flag = p_project(&q_project(&ip));
        let restriction = underlying_jet(&ip);
        gap(via_flag.values(), restriction.values());
    }
    Ok(DiagramReport {
        samples,
        max_residual,
    })
}
