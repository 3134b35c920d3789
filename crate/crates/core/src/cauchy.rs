//! Truncated coordinates on the space of infinite-order Cauchy data, the
//! forward and signed inverse transforms between the two chart systems,
//! the structural projections p and n, construction of a datum from
//! profile functions, and the transversality check.
//!
//! Standard chart: `x^a, t, u{alpha}_{A}_{l}` for |A| + l <= K and
//! Cauchy-surface slopes `tD_B` for 1 <= |B| <= K. Alternative chart:
//! value jets `u{alpha}_{A}_{0}`, normal blocks `w{alpha}_{0}_{l}_{B}`
//! (l >= 1, l + |B| <= K) and the same slopes. The transforms are the
//! block-partition sums
//!
//! ```text
//! (u_{A,l})_B = sum  t_{B'_1}...t_{B'_s} u_{A B'', l+s}
//! u_{A,l}     = sum  (-1)^s t_{B_1}...t_{B_s} (u_{0,l+s})_{B''}
//! ```
//!
//! over set partitions of the derivative positions into unordered
//! nonempty blocks plus a remainder, with the partition count as
//! multiplicity; that count is exactly what iterating the one-step
//! relation `(u_{A,l})_a = u_{Aa,l} + t_a u_{A,l+1}` produces.
//!
//! The order-0 names of the alternative chart denote derivatives along
//! the datum: its `u{alpha}_{A}_{0}` is the inner derivative
//! `(u_{0,0})_A`, not the standard coordinate of the same name, in the
//! same way chart II of the flag charts trades spatial derivatives for
//! inner ones. On a datum these are the spatial jets of the Cauchy value,
//! which is what makes them, with the slopes, the image coordinates of
//! the n-projection.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coords::{parse_flag_coord, t_slope_name, u_flag_name, w_name, x_name, FlagCoord, T_NAME};
use crate::expr::{derivative_table, diff, eval, Env, EvalError, Expr};
use crate::flag::derivative_pairs;
use crate::jetspace::JetPoint;
use crate::multiindex::{block_partitions, indices_up_to, MultiIndex};
use crate::numeric::rank;
use crate::{CoordScalar, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum CauchyError {
    #[error("index budget |A|+l+|B| = {got} exceeds truncation K = {cap}")]
    TruncationExceeded { got: u32, cap: usize },
    #[error("normal recovery needs l >= 1")]
    OrderZeroNormal,
    #[error("point binds {got} coordinates, chart has {want}")]
    CoordCount { got: usize, want: usize },
    #[error("missing coordinate {0:?}")]
    MissingCoordinate(String),
    #[error("variable {0:?} is not a coordinate of this chart")]
    ForeignVariable(String),
    #[error("profile spec has {got} components for {what}, expected {want}")]
    ProfileArity {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("base point has {got} entries, expected {want}")]
    BasePoint { got: usize, want: usize },
    #[error("the two profile specs differ in the surface data (f, g)")]
    MismatchedValue,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Chart bookkeeping for the truncated Cauchy-data space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CauchyChart {
    pub n: usize,
    pub m: usize,
    /// Truncation order K.
    pub cap: usize,
}

pub const DEFAULT_TRUNCATION: usize = 4;

impl CauchyChart {
    pub fn new(n: usize, m: usize, cap: usize) -> CauchyChart {
        assert!(n >= 1 && m >= 1, "chart needs n >= 1 and m >= 1");
        CauchyChart { n, m, cap }
    }

    fn spatial_indices(&self) -> Vec<MultiIndex> {
        indices_up_to(self.n - 1, self.cap as u32)
    }

    /// Standard chart: x-block, t, all jets, all surface slopes.
    pub fn coords(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in 1..=self.n - 1 {
            out.push(x_name(a));
        }
        out.push(T_NAME.to_string());
        for alpha in 1..=self.m {
            for (a, l) in derivative_pairs(self.n, self.cap) {
                out.push(u_flag_name(alpha, &a, l));
            }
        }
        for b in self.spatial_indices() {
            if !b.is_zero() {
                out.push(t_slope_name(&b));
            }
        }
        out
    }

    /// Alternative chart: order-0 jets, normal blocks, surface slopes.
    pub fn coords_alt(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in 1..=self.n - 1 {
            out.push(x_name(a));
        }
        out.push(T_NAME.to_string());
        for alpha in 1..=self.m {
            for a in self.spatial_indices() {
                out.push(u_flag_name(alpha, &a, 0));
            }
            for l in 1..=self.cap as u32 {
                for b in indices_up_to(self.n - 1, self.cap as u32 - l) {
                    out.push(w_name(alpha, &MultiIndex::zero(self.n - 1), l, &b));
                }
            }
        }
        for b in self.spatial_indices() {
            if !b.is_zero() {
                out.push(t_slope_name(&b));
            }
        }
        out
    }
}

macro_rules! cauchy_point {
    ($(#[$doc:meta])* $name:ident, $coords:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<T> {
            chart: CauchyChart,
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
                chart: CauchyChart,
                values: BTreeMap<String, T>,
            ) -> Result<Self, CauchyError> {
                let coords = chart.$coords();
                if values.len() != coords.len() {
                    return Err(CauchyError::CoordCount {
                        got: values.len(),
                        want: coords.len(),
                    });
                }
                for c in &coords {
                    if !values.contains_key(c) {
                        return Err(CauchyError::MissingCoordinate(c.clone()));
                    }
                }
                Ok(Self { chart, values })
            }

            pub fn from_fn(chart: CauchyChart, mut f: impl FnMut(&str) -> T) -> Self {
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

            pub fn chart(&self) -> CauchyChart {
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

cauchy_point!(
    /// Point of the standard Cauchy chart.
    CauchyPoint,
    coords
);
cauchy_point!(
    /// Point of the alternative chart; the normal blocks are the fiber
    /// coordinates of the n-projection.
    CauchyPointAlt,
    coords_alt
);

fn check_budget(chart: &CauchyChart, total: u32) -> Result<(), CauchyError> {
    if total > chart.cap as u32 {
        return Err(CauchyError::TruncationExceeded {
            got: total,
            cap: chart.cap,
        });
    }
    Ok(())
}

/// The inner derivative (u_{A,l})_B as an expression in the standard
/// chart: the block-partition sum with multiplicities.
pub fn inner_derivative_expand(
    chart: &CauchyChart,
    alpha: usize,
    a: &MultiIndex,
    l: u32,
    b: &MultiIndex,
) -> Result<Expr, CauchyError> {
    check_budget(chart, a.order() + l + b.order())?;
    let mut terms = Vec::new();
    for part in block_partitions(b) {
        let s = part.blocks.len() as u32;
        let mut factors = vec![Expr::int(part.multiplicity as i64)];
        for blk in &part.blocks {
            factors.push(Expr::var(t_slope_name(blk)));
        }
        let spatial = a.mul(&part.remainder).expect("lengths match");
        factors.push(Expr::var(u_flag_name(alpha, &spatial, l + s)));
        terms.push(Expr::prod(factors));
    }
    Ok(Expr::sum(terms))
}

/// The jet coordinate u_{A,l} (l >= 1) as an expression in the
/// alternative chart: the signed block-partition sum.
pub fn normal_recover(
    chart: &CauchyChart,
    alpha: usize,
    a: &MultiIndex,
    l: u32,
) -> Result<Expr, CauchyError> {
    if l == 0 {
        return Err(CauchyError::OrderZeroNormal);
    }
    check_budget(chart, a.order() + l)?;
    let zero = MultiIndex::zero(chart.n - 1);
    let mut terms = Vec::new();
    for part in block_partitions(a) {
        let s = part.blocks.len() as u32;
        let sign = if s % 2 == 0 { 1 } else { -1 };
        let mut factors = vec![Expr::int(sign * part.multiplicity as i64)];
        for blk in &part.blocks {
            factors.push(Expr::var(t_slope_name(blk)));
        }
        factors.push(Expr::var(w_name(alpha, &zero, l + s, &part.remainder)));
        terms.push(Expr::prod(factors));
    }
    Ok(Expr::sum(terms))
}

/// The one-step derivation D_a on standard-chart expressions:
/// `x^b -> delta_ab`, `t -> tD_a`, `u_{A,l} -> u_{Aa,l} + tD_a u_{A,l+1}`,
/// `tD_B -> tD_{Ba}`. Leibniz through the expression tree.
pub fn cauchy_derivative(
    chart: &CauchyChart,
    e: &Expr,
    axis: usize,
) -> Result<Expr, CauchyError> {
    let unit = MultiIndex::unit(chart.n - 1, axis).expect("axis within range");
    let mut terms = Vec::new();
    for v in e.free_vars() {
        let dv = match parse_flag_coord(&v, chart.n) {
            Some(FlagCoord::X(a)) => {
                if a == axis {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Some(FlagCoord::T) => Expr::var(t_slope_name(&unit)),
            Some(FlagCoord::U { alpha, a, l }) => {
                check_budget(chart, a.order() + l + 1)?;
                Expr::var(u_flag_name(alpha, &a.bump(axis).unwrap(), l))
                    + Expr::var(t_slope_name(&unit))
                        * Expr::var(u_flag_name(alpha, &a, l + 1))
            }
            Some(FlagCoord::TSlope(b)) => {
                check_budget(chart, b.order() + 1)?;
                Expr::var(t_slope_name(&b.bump(axis).unwrap()))
            }
            _ => return Err(CauchyError::ForeignVariable(v)),
        };
        if dv.is_zero_const() {
            continue;
        }
        terms.push(Expr::prod(vec![diff(e, &v), dv]));
    }
    Ok(Expr::sum(terms))
}

fn from_count<T: CoordScalar>(c: u64) -> T {
    let mut acc = T::zero();
    for _ in 0..c {
        acc = acc + T::one();
    }
    acc
}

/// The inner derivative (u_{0,l})_B evaluated at a standard-chart point by
/// the forward block-partition sum.
fn expand_block_value<T: CoordScalar>(
    p: &CauchyPoint<T>,
    alpha: usize,
    l: u32,
    b: &MultiIndex,
) -> T {
    let mut acc = T::zero();
    for part in block_partitions(b) {
        let s = part.blocks.len() as u32;
        let mut term: T = from_count(part.multiplicity);
        for blk in &part.blocks {
            term = term * p.get(&t_slope_name(blk));
        }
        term = term * p.get(&u_flag_name(alpha, &part.remainder, l + s));
        acc = acc + term;
    }
    acc
}

/// Standard -> alternative chart, by direct evaluation of the
/// block-partition sums; the order-0 block of the target holds the inner
/// derivatives (u_{0,0})_A. Exact over rational scalars.
pub fn to_alt<T: CoordScalar>(p: &CauchyPoint<T>) -> CauchyPointAlt<T> {
    let chart = p.chart();
    let values = chart
        .coords_alt()
        .into_iter()
        .map(|c| {
            let value = match parse_flag_coord(&c, chart.n) {
                Some(FlagCoord::U { alpha, a, l: 0 }) => expand_block_value(p, alpha, 0, &a),
                Some(FlagCoord::W { alpha, l, b, .. }) => expand_block_value(p, alpha, l, &b),
                _ => p.get(&c),
            };
            (c, value)
        })
        .collect();
    CauchyPointAlt::new(chart, values).expect("alt coordinates complete")
}

/// Alternative -> standard chart, by the signed block-partition sums; the
/// level-(l+s) blocks with l + s = 0 are the value jets stored under the
/// order-0 names.
pub fn to_standard<T: CoordScalar>(p: &CauchyPointAlt<T>) -> CauchyPoint<T> {
    let chart = p.chart();
    let zero = MultiIndex::zero(chart.n - 1);
    let block = |alpha: usize, l: u32, b: &MultiIndex| -> T {
        if l == 0 {
            p.get(&u_flag_name(alpha, b, 0))
        } else {
            p.get(&w_name(alpha, &zero, l, b))
        }
    };
    let values = chart
        .coords()
        .into_iter()
        .map(|c| {
            let value = match parse_flag_coord(&c, chart.n) {
                Some(FlagCoord::U { alpha, a, l }) => {
                    let mut acc = T::zero();
                    for part in block_partitions(&a) {
                        let s = part.blocks.len() as u32;
                        let mut term: T = from_count(part.multiplicity);
                        for blk in &part.blocks {
                            term = term * p.get(&t_slope_name(blk));
                        }
                        term = term * block(alpha, l + s, &part.remainder);
                        if s % 2 == 1 {
                            term = -term;
                        }
                        acc = acc + term;
                    }
                    acc
                }
                _ => p.get(&c),
            };
            (c, value)
        })
        .collect();
    CauchyPoint::new(chart, values).expect("standard coordinates complete")
}

/// Profile functions parametrizing a truncated Cauchy datum: the surface
/// t = f(x), the values g^a(x), and the normal-derivative profiles
/// h^a_l(x) for l = 1..K.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CauchyDatumSpec {
    pub f: Expr,
    pub g: Vec<Expr>,
    pub h: Vec<Vec<Expr>>,
}

impl CauchyDatumSpec {
    fn validate(&self, chart: &CauchyChart) -> Result<(), CauchyError> {
        if self.g.len() != chart.m {
            return Err(CauchyError::ProfileArity {
                what: "g",
                got: self.g.len(),
                want: chart.m,
            });
        }
        if self.h.len() != chart.m {
            return Err(CauchyError::ProfileArity {
                what: "h",
                got: self.h.len(),
                want: chart.m,
            });
        }
        for h_alpha in &self.h {
            if h_alpha.len() < chart.cap {
                return Err(CauchyError::ProfileArity {
                    what: "h levels",
                    got: h_alpha.len(),
                    want: chart.cap,
                });
            }
        }
        for e in std::iter::once(&self.f)
            .chain(&self.g)
            .chain(self.h.iter().flatten())
        {
            for v in e.free_vars() {
                match parse_flag_coord(&v, chart.n) {
                    Some(FlagCoord::X(_)) => {}
                    _ => return Err(CauchyError::ForeignVariable(v)),
                }
            }
        }
        Ok(())
    }
}

/// Raw derivative data of the profiles at a base point: the immediate
/// parameters of a Cauchy datum. `v_jets[alpha][l]` holds the spatial
/// jets of the level-l normal profile, level 0 being the value g.
#[derive(Debug, Clone)]
pub struct ProfileJets<T> {
    pub t_jets: BTreeMap<MultiIndex, T>,
    pub v_jets: Vec<Vec<BTreeMap<MultiIndex, T>>>,
}

/// Evaluates all profile derivatives at `x0`.
pub fn profile_jets<T: Scalar>(
    spec: &CauchyDatumSpec,
    chart: &CauchyChart,
    x0: &[T],
) -> Result<ProfileJets<T>, CauchyError> {
    spec.validate(chart)?;
    if x0.len() != chart.n - 1 {
        return Err(CauchyError::BasePoint {
            got: x0.len(),
            want: chart.n - 1,
        });
    }
    let xs: Vec<String> = (1..=chart.n - 1).map(x_name).collect();
    let mut env: Env<T> = Env::new();
    for (i, x) in xs.iter().enumerate() {
        env.insert(x.clone(), x0[i]);
    }
    let table = |e: &Expr, order: u32| -> Result<BTreeMap<MultiIndex, T>, CauchyError> {
        derivative_table(e, &xs, order)
            .into_iter()
            .map(|(idx, de)| Ok((idx, eval(&de, &env)?)))
            .collect()
    };
    let cap = chart.cap as u32;
    let mut v_jets = Vec::with_capacity(chart.m);
    for alpha in 0..chart.m {
        let mut levels = vec![table(&spec.g[alpha], cap)?];
        for l in 1..=cap {
            levels.push(table(&spec.h[alpha][(l - 1) as usize], cap - l)?);
        }
        v_jets.push(levels);
    }
    Ok(ProfileJets {
        t_jets: table(&spec.f, cap)?,
        v_jets,
    })
}

/// Assembles the truncated Cauchy-datum point from raw profile
/// derivatives: `t_B` are the surface jets, and every jet coordinate
/// comes from the signed block-partition sum
/// `u_{A,l} = sum (-1)^s d^{B_1}f ... d^{B_s}f d^{B''} v_{l+s}`
/// seeded by the profile jets `(u_{0,l})_B = d^B v_l`, v_0 = g. This is
/// the unique assignment satisfying the one-step relation along the
/// datum, including at order zero: `u_{a,0} = d_a g - (d_a f) h_1`.
pub fn assemble_cauchy_point<T: CoordScalar>(
    chart: &CauchyChart,
    x0: &[T],
    jets: &ProfileJets<T>,
) -> CauchyPoint<T> {
    let mut values: BTreeMap<String, T> = BTreeMap::new();
    for (i, x) in x0.iter().enumerate() {
        values.insert(x_name(i + 1), x.clone());
    }
    let zero = MultiIndex::zero(chart.n - 1);
    values.insert(T_NAME.to_string(), jets.t_jets[&zero].clone());
    for b in chart.spatial_indices() {
        if !b.is_zero() {
            values.insert(t_slope_name(&b), jets.t_jets[&b].clone());
        }
    }
    for alpha in 1..=chart.m {
        for (a, l) in derivative_pairs(chart.n, chart.cap) {
            let mut acc = T::zero();
            for part in block_partitions(&a) {
                let s = part.blocks.len() as u32;
                let mut term: T = from_count(part.multiplicity);
                for blk in &part.blocks {
                    term = term * jets.t_jets[blk].clone();
                }
                term = term * jets.v_jets[alpha - 1][(l + s) as usize][&part.remainder].clone();
                if s % 2 == 1 {
                    term = -term;
                }
                acc = acc + term;
            }
            values.insert(u_flag_name(alpha, &a, l), acc);
        }
    }
    CauchyPoint::new(*chart, values).expect("assembled coordinates complete")
}

/// The truncated Cauchy datum of the profile spec at `x0`.
pub fn cauchy_from_profiles<T: Scalar>(
    spec: &CauchyDatumSpec,
    chart: &CauchyChart,
    x0: &[T],
) -> Result<CauchyPoint<T>, CauchyError> {
    let jets = profile_jets(spec, chart, x0)?;
    Ok(assemble_cauchy_point(chart, x0, &jets))
}

impl<T: CoordScalar> CauchyPoint<T> {
    /// Forgets all jets and surface slopes above the given truncation.
    pub fn truncate(&self, cap: usize) -> Result<CauchyPoint<T>, CauchyError> {
        if cap > self.chart.cap {
            return Err(CauchyError::TruncationExceeded {
                got: cap as u32,
                cap: self.chart.cap,
            });
        }
        let target = CauchyChart::new(self.chart.n, self.chart.m, cap);
        let values = target
            .coords()
            .into_iter()
            .map(|c| {
                let v = self.get(&c);
                (c, v)
            })
            .collect();
        CauchyPoint::new(target, values)
    }
}

/// Projection p onto the jet space J^K(E, n): keeps (x, t, u) and drops
/// the surface slopes, which are its fiber coordinates.
pub fn p_of<T: CoordScalar>(p: &CauchyPoint<T>) -> JetPoint<T> {
    let chart = p.chart();
    crate::flag::jet_values_from_flag(chart.n, chart.m, chart.cap, &|name| p.get(name))
}

/// Image of the n-projection: the K-jet of the Cauchy value, i.e. the
/// graph (t, u) over x. Keyed by the same names as the standard chart.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyValuePoint<T> {
    chart: CauchyChart,
    values: BTreeMap<String, T>,
}

impl<T: Serialize> Serialize for CauchyValuePoint<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.values.serialize(serializer)
    }
}

impl<T: CoordScalar> CauchyValuePoint<T> {
    pub fn values(&self) -> &BTreeMap<String, T> {
        &self.values
    }
}

/// Projection n onto the jet space of the Cauchy value: converts to the
/// alternative chart and keeps (x, t, u_{A,0}, tD_B), the jets of the
/// graph (t, u) over x; the normal blocks are its fiber coordinates.
pub fn n_of<T: CoordScalar>(p: &CauchyPoint<T>) -> CauchyValuePoint<T> {
    let chart = p.chart();
    let alt = to_alt(p);
    let mut values = BTreeMap::new();
    for a in 1..=chart.n - 1 {
        values.insert(x_name(a), p.get(&x_name(a)));
    }
    values.insert(T_NAME.to_string(), p.get(T_NAME));
    for alpha in 1..=chart.m {
        for a in chart.spatial_indices() {
            let name = u_flag_name(alpha, &a, 0);
            values.insert(name.clone(), alt.get(&name));
        }
    }
    for b in chart.spatial_indices() {
        if !b.is_zero() {
            let name = t_slope_name(&b);
            values.insert(name.clone(), p.get(&name));
        }
    }
    CauchyValuePoint { chart, values }
}

/// Outcome of the symbolic round trip between the chart systems.
#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub coordinates_checked: usize,
    /// Coordinates whose composition failed to reduce to the identity.
    pub failures: Vec<String>,
}

impl RoundtripReport {
    pub fn all_zero(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Certifies symbolically that expanding [`normal_recover`] through
/// [`inner_derivative_expand`] is the identity on every standard
/// coordinate, and the reverse composition the identity on every normal
/// block.
pub fn roundtrip_identity(chart: &CauchyChart) -> Result<RoundtripReport, CauchyError> {
    use crate::expr::is_zero;
    let zero = MultiIndex::zero(chart.n - 1);
    // Normal blocks in terms of the standard chart.
    let mut expand_map: BTreeMap<String, Expr> = BTreeMap::new();
    // Positive-order jets in terms of the alternative chart.
    let mut recover_map: BTreeMap<String, Expr> = BTreeMap::new();
    for alpha in 1..=chart.m {
        for l in 1..=chart.cap as u32 {
            for b in indices_up_to(chart.n - 1, chart.cap as u32 - l) {
                expand_map.insert(
                    w_name(alpha, &zero, l, &b),
                    inner_derivative_expand(chart, alpha, &zero, l, &b)?,
                );
            }
        }
        for (a, l) in derivative_pairs(chart.n, chart.cap) {
            if l >= 1 {
                recover_map.insert(
                    u_flag_name(alpha, &a, l),
                    normal_recover(chart, alpha, &a, l)?,
                );
            }
        }
    }
    let mut checked = 0;
    let mut failures = Vec::new();
    for alpha in 1..=chart.m {
        for (a, l) in derivative_pairs(chart.n, chart.cap) {
            if l == 0 {
                continue;
            }
            let name = u_flag_name(alpha, &a, l);
            let composed = normal_recover(chart, alpha, &a, l)?.subst(&expand_map);
            checked += 1;
            if !is_zero(&(composed - Expr::var(name.clone()))) {
                failures.push(name);
            }
        }
        for l in 1..=chart.cap as u32 {
            for b in indices_up_to(chart.n - 1, chart.cap as u32 - l) {
                let name = w_name(alpha, &zero, l, &b);
                let composed =
                    inner_derivative_expand(chart, alpha, &zero, l, &b)?.subst(&recover_map);
                checked += 1;
                if !is_zero(&(composed - Expr::var(name.clone()))) {
                    failures.push(name);
                }
            }
        }
    }
    Ok(RoundtripReport {
        coordinates_checked: checked,
        failures,
    })
}

/// Outcome of the transversality check: distinct normal profiles over the
/// same Cauchy value must give distinct p-images, and the p-image must be
/// parametrized with full rank by (x^a, t, h-jet values).
#[derive(Debug, Clone, Serialize)]
pub struct TransversalityReport {
    pub samples: usize,
    /// Largest per-sample coordinate gap between the two p-images.
    pub max_gap: f64,
    /// Smallest per-sample coordinate gap; distinctness holds at every
    /// sample when this exceeds the 1e-10 threshold.
    pub min_gap: f64,
    pub distinct_somewhere: bool,
    pub distinct_everywhere: bool,
    pub expected_rank: usize,
    pub full_rank_samples: usize,
    pub full_rank: bool,
}

/// Number of free normal-jet parameters per dependent variable.
pub fn h_jet_parameter_count(chart: &CauchyChart) -> usize {
    let mut count = 0;
    for l in 1..=chart.cap as u32 {
        count += indices_up_to(chart.n - 1, chart.cap as u32 - l).len();
    }
    count
}

/// Checks, at seeded sample points, that (a) the two profile specs (which
/// must share f and g) have distinct p-images and (b) the finite-difference
/// Jacobian of the p-image with respect to (x^a, t, h-jet values) has
/// full rank.
pub fn transversality_check(
    spec1: &CauchyDatumSpec,
    spec2: &CauchyDatumSpec,
    chart: &CauchyChart,
    samples: usize,
    seed: u64,
) -> Result<TransversalityReport, CauchyError> {
    use crate::expr::exprs_equal;
    if !exprs_equal(&spec1.f, &spec2.f)
        || spec1.g.len() != spec2.g.len()
        || spec1
            .g
            .iter()
            .zip(&spec2.g)
            .any(|(a, b)| !exprs_equal(a, b))
    {
        return Err(CauchyError::MismatchedValue);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let expected_rank = (chart.n - 1) + 1 + chart.m * h_jet_parameter_count(chart);
    let mut max_gap = 0.0f64;
    let mut min_gap = f64::INFINITY;
    let mut full_rank_samples = 0;
    for _ in 0..samples {
        let x0: Vec<f64> = (0..chart.n - 1)
            .map(|_| rng.gen_range(-0.8..0.8))
            .collect();
        let p1 = p_of(&cauchy_from_profiles(spec1, chart, &x0)?);
        let p2 = p_of(&cauchy_from_profiles(spec2, chart, &x0)?);
        let gap = p1
            .values()
            .iter()
            .map(|(k, v)| (p2.values()[k] - v).abs())
            .fold(0.0f64, f64::max);
        max_gap = max_gap.max(gap);
        min_gap = min_gap.min(gap);

        // An inconclusive rank test at a sample is resampled at a fresh
        // base point before it counts against full rank.
        let mut ok = false;
        let mut x_try = x0;
        for _ in 0..3 {
            if parametrization_rank(spec1, chart, &x_try)? == expected_rank {
                ok = true;
                break;
            }
            x_try = (0..chart.n - 1)
                .map(|_| rng.gen_range(-0.8..0.8))
                .collect();
        }
        if ok {
            full_rank_samples += 1;
        }
    }
    Ok(TransversalityReport {
        samples,
        max_gap,
        min_gap,
        distinct_somewhere: max_gap > 1e-10,
        distinct_everywhere: min_gap > 1e-10,
        expected_rank,
        full_rank_samples,
        full_rank: full_rank_samples == samples,
    })
}

/// Numeric rank of the p-image parametrization by (x^a, t, h-jet values)
/// at one base point, via finite differences.
fn parametrization_rank(
    spec: &CauchyDatumSpec,
    chart: &CauchyChart,
    x0: &[f64],
) -> Result<usize, CauchyError> {
    let delta = 1e-6;
    let image = |jets: &ProfileJets<f64>, x0: &[f64]| -> Vec<f64> {
        let p = assemble_cauchy_point(chart, x0, jets);
        let jp = p_of(&p);
        jp.chart()
            .coords()
            .iter()
            .map(|c| jp.values()[c])
            .collect()
    };
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for a in 0..chart.n - 1 {
        let mut plus = x0.to_vec();
        plus[a] += delta;
        let mut minus = x0.to_vec();
        minus[a] -= delta;
        let jp = image(&profile_jets(spec, chart, &plus)?, &plus);
        let jm = image(&profile_jets(spec, chart, &minus)?, &minus);
        columns.push(
            jp.iter()
                .zip(&jm)
                .map(|(p, m)| (p - m) / (2.0 * delta))
                .collect(),
        );
    }
    let jets0 = profile_jets(spec, chart, x0)?;
    let base_image = image(&jets0, x0);
    let zero_idx = MultiIndex::zero(chart.n - 1);
    {
        let mut jets = jets0.clone();
        *jets.t_jets.get_mut(&zero_idx).unwrap() += delta;
        let jt = image(&jets, x0);
        columns.push(
            jt.iter()
                .zip(&base_image)
                .map(|(p, b)| (p - b) / delta)
                .collect(),
        );
    }
    for alpha in 0..chart.m {
        for l in 1..=chart.cap as u32 {
            for b in indices_up_to(chart.n - 1, chart.cap as u32 - l) {
                let mut jets = jets0.clone();
                *jets.v_jets[alpha][l as usize].get_mut(&b).unwrap() += delta;
                let jh = image(&jets, x0);
                columns.push(
                    jh.iter()
                        .zip(&base_image)
                        .map(|(p, bb)| (p - bb) / delta)
                        .collect(),
                );
            }
        }
    }
    let jacobian: Vec<Vec<f64>> = (0..base_image.len())
        .map(|row| columns.iter().map(|c| c[row]).collect())
        .collect();
    Ok(rank(&jacobian, 1e-8))
}
