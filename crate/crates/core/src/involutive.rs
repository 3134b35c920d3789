//! Equations of involutive r-planes of a distribution given by 1-forms.
//!
//! A distribution on E = {(x^i, u^a)} is the joint kernel of forms
//! `w = w_i dx^i + w_a du^a`. An r-plane spanned by
//! `v_i = d_i + s^b_i d_b` (b running over all dependent coordinates) is
//! involutive when the forms and their differentials vanish on it. In the
//! adapted chart of J^1(E, r) that is the vanishing of
//!
//! ```text
//! f_i  = w(v_i)        = w_i + w_b s^b_i
//! f_ij = dw(v_i, v_j)  = D_i(w_j) - D_j(w_i)
//!                        + sum_b [D_i(w_b) s^b_j - D_j(w_b) s^b_i]
//! ```
//!
//! with `D_i(g) = dg/dx^i + s^b_i dg/du^b` the directional derivative along
//! `v_i`. This restriction of `dw` fixes both the grouping of the
//! antisymmetrized coefficient derivatives and the overall sign: for the
//! two-variable contact form the curvature reads `(p1)_2 - (p2)_1`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coords::{u_name, x_name};
use crate::expr::{diff, eval, Env, EvalError, Expr};
use crate::grassmann::Plane;
use crate::jetspace::JetChart;
use crate::multiindex::MultiIndex;
use crate::numeric::{gauss_newton_step, rank, solve};
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum InvError {
    #[error("form {form}: {side} coefficient list has {got} entries, expected {want}")]
    FormArity {
        form: usize,
        side: &'static str,
        got: usize,
        want: usize,
    },
    #[error("coefficient uses foreign variable {0:?}")]
    ForeignVariable(String),
    #[error("coefficient matrix rank varies across samples: {0:?}")]
    NonConstantRank(Vec<usize>),
    #[error("plane dimension {r} out of range 1..={max}")]
    PlaneDimension { r: usize, max: usize },
    #[error("plane is not horizontal over the independent variables")]
    NonHorizontal,
    #[error("prolongation system did not converge at a sample")]
    ProlongationStuck,
    #[error("plane ambient {got} does not match chart dimension {want}")]
    AmbientMismatch { got: usize, want: usize },
    #[error("point misses coordinate {0:?}")]
    MissingCoordinate(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One 1-form: coefficients of dx^i and du^a, aligned with the variable
/// lists of the owning [`DistributionSpec`].
#[derive(Debug, Clone)]
pub struct Form1 {
    pub dx: Vec<Expr>,
    pub du: Vec<Expr>,
}

/// Distribution on E as the joint kernel of expression-coefficient
/// 1-forms. Construction validates arities, variable usage and constant
/// rank of the coefficient matrix at seeded sample points.
#[derive(Debug, Clone)]
pub struct DistributionSpec {
    x_vars: Vec<String>,
    u_vars: Vec<String>,
    forms: Vec<Form1>,
}

impl DistributionSpec {
    pub fn new(
        x_vars: Vec<String>,
        u_vars: Vec<String>,
        forms: Vec<Form1>,
    ) -> Result<Self, InvError> {
        for (idx, form) in forms.iter().enumerate() {
            if form.dx.len() != x_vars.len() {
                return Err(InvError::FormArity {
                    form: idx,
                    side: "dx",
                    got: form.dx.len(),
                    want: x_vars.len(),
                });
            }
            if form.du.len() != u_vars.len() {
                return Err(InvError::FormArity {
                    form: idx,
                    side: "du",
                    got: form.du.len(),
                    want: u_vars.len(),
                });
            }
            for e in form.dx.iter().chain(&form.du) {
                for v in e.free_vars() {
                    if !x_vars.contains(&v) && !u_vars.contains(&v) {
                        return Err(InvError::ForeignVariable(v));
                    }
                }
            }
        }
        let spec = DistributionSpec {
            x_vars,
            u_vars,
            forms,
        };
        spec.check_constant_rank()?;
        Ok(spec)
    }

    pub fn x_vars(&self) -> &[String] {
        &self.x_vars
    }

    pub fn u_vars(&self) -> &[String] {
        &self.u_vars
    }

    pub fn forms(&self) -> &[Form1] {
        &self.forms
    }

    fn e_vars(&self) -> Vec<String> {
        self.x_vars.iter().chain(&self.u_vars).cloned().collect()
    }

    /// Coefficient of a form on the E-variable with global index `idx`
    /// (x-block first).
    fn coeff(&self, form: usize, idx: usize) -> &Expr {
        if idx < self.x_vars.len() {
            &self.forms[form].dx[idx]
        } else {
            &self.forms[form].du[idx - self.x_vars.len()]
        }
    }

    fn check_constant_rank(&self) -> Result<(), InvError> {
        if self.forms.is_empty() {
            return Ok(());
        }
        let vars = self.e_vars();
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
        let mut ranks = Vec::new();
        let mut attempts = 0;
        while ranks.len() < 5 && attempts < 60 {
            attempts += 1;
            let mut env: Env<f64> = Env::new();
            for v in &vars {
                env.insert(v.clone(), rng.gen_range(-1.0..1.0));
            }
            let mut matrix = Vec::with_capacity(self.forms.len());
            let mut ok = true;
            for f in 0..self.forms.len() {
                let mut row = Vec::with_capacity(vars.len());
                for idx in 0..vars.len() {
                    match eval(self.coeff(f, idx), &env) {
                        Ok(v) => row.push(v),
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    break;
                }
                matrix.push(row);
            }
            if ok {
                ranks.push(rank(&matrix, 1e-9));
            }
        }
        if ranks.windows(2).any(|w| w[0] != w[1]) {
            return Err(InvError::NonConstantRank(ranks));
        }
        Ok(())
    }
}

// JSON shape: {"vars": {"x": [...], "u": [...]},
//              "forms": [{"dx": {var: expr}, "du": {var: expr}}]}
// Coefficients left out of a form are zero.
#[derive(Serialize, Deserialize)]
struct DistJson {
    vars: VarsJson,
    forms: Vec<FormJson>,
}

#[derive(Serialize, Deserialize)]
struct VarsJson {
    x: Vec<String>,
    u: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct FormJson {
    #[serde(default)]
    dx: BTreeMap<String, Expr>,
    #[serde(default)]
    du: BTreeMap<String, Expr>,
}

impl Serialize for DistributionSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let forms = self
            .forms
            .iter()
            .map(|f| FormJson {
                dx: self
                    .x_vars
                    .iter()
                    .zip(&f.dx)
                    .filter(|(_, e)| !e.is_zero_const())
                    .map(|(v, e)| (v.clone(), e.clone()))
                    .collect(),
                du: self
                    .u_vars
                    .iter()
                    .zip(&f.du)
                    .filter(|(_, e)| !e.is_zero_const())
                    .map(|(v, e)| (v.clone(), e.clone()))
                    .collect(),
            })
            .collect();
        DistJson {
            vars: VarsJson {
                x: self.x_vars.clone(),
                u: self.u_vars.clone(),
            },
            forms,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = DistJson::deserialize(deserializer)?;
        let mut forms = Vec::with_capacity(raw.forms.len());
        for (idx, f) in raw.forms.iter().enumerate() {
            for key in f.dx.keys() {
                if !raw.vars.x.contains(key) {
                    return Err(D::Error::custom(format!(
                        "form {idx}: dx key {key:?} is not an x-variable"
                    )));
                }
            }
            for key in f.du.keys() {
                if !raw.vars.u.contains(key) {
                    return Err(D::Error::custom(format!(
                        "form {idx}: du key {key:?} is not a u-variable"
                    )));
                }
            }
            forms.push(Form1 {
                dx: raw
                    .vars
                    .x
                    .iter()
                    .map(|v| f.dx.get(v).cloned().unwrap_or_else(Expr::zero))
                    .collect(),
                du: raw
                    .vars
                    .u
                    .iter()
                    .map(|v| f.du.get(v).cloned().unwrap_or_else(Expr::zero))
                    .collect(),
            });
        }
        DistributionSpec::new(raw.vars.x, raw.vars.u, forms).map_err(D::Error::custom)
    }
}

/// Adapted chart of J^1(E, r): the first r x-variables are independent,
/// the remaining x-variables and all u-variables are dependent, and each
/// dependent variable carries r slope coordinates named
/// `{dep}_{unit multi-index}` (e.g. `u_1.0`, `p2_0.1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct J1Chart {
    pub x_vars: Vec<String>,
    pub u_vars: Vec<String>,
    pub r: usize,
}

impl J1Chart {
    pub fn new(spec: &DistributionSpec, r: usize) -> Result<Self, InvError> {
        if r == 0 || r > spec.x_vars.len() {
            return Err(InvError::PlaneDimension {
                r,
                max: spec.x_vars.len(),
            });
        }
        Ok(J1Chart {
            x_vars: spec.x_vars.clone(),
            u_vars: spec.u_vars.clone(),
            r,
        })
    }

    pub fn independents(&self) -> &[String] {
        &self.x_vars[..self.r]
    }

    /// Dependent coordinates: trailing x-variables, then u-variables. The
    /// d-th dependent sits at global E-index r + d.
    pub fn dependents(&self) -> Vec<String> {
        self.x_vars[self.r..]
            .iter()
            .chain(&self.u_vars)
            .cloned()
            .collect()
    }

    pub fn slope_name(&self, dep: &str, axis: usize) -> String {
        let sigma = MultiIndex::unit(self.r, axis).expect("axis within plane dimension");
        format!("{dep}_{sigma}")
    }

    fn slope2_name(&self, dep: &str, i: usize, j: usize) -> String {
        let sigma = MultiIndex::unit(self.r, i)
            .unwrap()
            .mul(&MultiIndex::unit(self.r, j).unwrap())
            .unwrap();
        format!("{dep}_{sigma}")
    }

    /// Base coordinates of E followed by all slopes, dependent-major.
    pub fn coords(&self) -> Vec<String> {
        let mut out: Vec<String> = self.x_vars.iter().chain(&self.u_vars).cloned().collect();
        for dep in self.dependents() {
            for i in 1..=self.r {
                out.push(self.slope_name(&dep, i));
            }
        }
        out
    }
}

/// The local equations cutting out the involutive r-planes.
#[derive(Debug, Clone)]
pub struct InvolutivitySystem {
    pub chart: J1Chart,
    /// (form, i) -> w(v_i).
    pub f1: Vec<InvEquation>,
    /// (form, i, j) with i <= j -> dw(v_i, v_j); antisymmetric in (i, j).
    pub f2: Vec<CurvatureEquation>,
}

#[derive(Debug, Clone)]
pub struct InvEquation {
    pub form: usize,
    pub i: usize,
    pub expr: Expr,
}

#[derive(Debug, Clone)]
pub struct CurvatureEquation {
    pub form: usize,
    pub i: usize,
    pub j: usize,
    pub expr: Expr,
}

/// Directional derivative of a base function along `v_i`.
fn along(chart: &J1Chart, g: &Expr, i: usize) -> Expr {
    let mut terms = vec![diff(g, &chart.x_vars[i - 1])];
    for dep in chart.dependents() {
        let dg = diff(g, &dep);
        if dg.is_zero_const() {
            continue;
        }
        terms.push(Expr::prod(vec![Expr::var(chart.slope_name(&dep, i)), dg]));
    }
    Expr::sum(terms)
}

fn pairing_expr(spec: &DistributionSpec, chart: &J1Chart, form: usize, i: usize) -> Expr {
    let mut terms = vec![spec.forms[form].dx[i - 1].clone()];
    for (d, dep) in chart.dependents().iter().enumerate() {
        let coeff = spec.coeff(form, chart.r + d);
        if coeff.is_zero_const() {
            continue;
        }
        terms.push(Expr::prod(vec![
            coeff.clone(),
            Expr::var(chart.slope_name(dep, i)),
        ]));
    }
    Expr::sum(terms)
}

/// dw(v_i, v_j), defined for arbitrary ordered (i, j).
pub fn curvature_expr(
    spec: &DistributionSpec,
    chart: &J1Chart,
    form: usize,
    i: usize,
    j: usize,
) -> Expr {
    let w_i = &spec.forms[form].dx[i - 1];
    let w_j = &spec.forms[form].dx[j - 1];
    let mut terms = vec![along(chart, w_j, i), along(chart, w_i, j).neg()];
    for (d, dep) in chart.dependents().iter().enumerate() {
        let coeff = spec.coeff(form, chart.r + d);
        let di = along(chart, coeff, i);
        let dj = along(chart, coeff, j);
        if !di.is_zero_const() {
            terms.push(Expr::prod(vec![di, Expr::var(chart.slope_name(dep, j))]));
        }
        if !dj.is_zero_const() {
            terms.push(Expr::prod(vec![dj, Expr::var(chart.slope_name(dep, i))]).neg());
        }
    }
    Expr::sum(terms)
}

/// Builds the f_i and f_ij systems on the adapted J^1(E, r) chart.
pub fn involutivity_equations(
    spec: &DistributionSpec,
    r: usize,
) -> Result<InvolutivitySystem, InvError> {
    let chart = J1Chart::new(spec, r)?;
    let mut f1 = Vec::new();
    let mut f2 = Vec::new();
    for form in 0..spec.forms.len() {
        for i in 1..=r {
            f1.push(InvEquation {
                form,
                i,
                expr: pairing_expr(spec, &chart, form, i),
            });
        }
        for i in 1..=r {
            for j in i..=r {
                f2.push(CurvatureEquation {
                    form,
                    i,
                    j,
                    expr: curvature_expr(spec, &chart, form, i, j),
                });
            }
        }
    }
    Ok(InvolutivitySystem { chart, f1, f2 })
}

/// Largest |f_i| or |f_ij| at the point; the point must bind every chart
/// coordinate.
pub fn involutivity_residual<T: Scalar>(
    system: &InvolutivitySystem,
    point: &BTreeMap<String, T>,
) -> Result<T, InvError> {
    for c in system.chart.coords() {
        if !point.contains_key(&c) {
            return Err(InvError::MissingCoordinate(c));
        }
    }
    let mut worst = T::zero();
    for eq in &system.f1 {
        worst = worst.max(eval(&eq.expr, point)?.abs());
    }
    for eq in &system.f2 {
        worst = worst.max(eval(&eq.expr, point)?.abs());
    }
    Ok(worst)
}

/// True iff all |f_i| and |f_ij| evaluate below `tol` at the point.
pub fn is_involutive<T: Scalar>(
    system: &InvolutivitySystem,
    point: &BTreeMap<String, T>,
    tol: T,
) -> Result<bool, InvError> {
    Ok(involutivity_residual(system, point)? <= tol)
}

/// Whether a plane in E-coordinates is horizontal over the first r
/// x-directions, i.e. representable in the adapted chart: the base
/// projection restricted to it must keep full rank.
pub fn plane_is_horizontal<T: Scalar>(plane: &Plane<T>, r: usize) -> bool {
    if plane.dim() != r || plane.ambient_dim() < r {
        return false;
    }
    let block: Vec<Vec<T>> = plane
        .basis()
        .iter()
        .map(|row| row[..r].to_vec())
        .collect();
    rank(&block, T::from_f64(1e-12).unwrap()) == r
}

/// Converts a plane in E-coordinates (ambient ordered as x-vars then
/// u-vars) plus base values into an adapted J^1(E, r) point. Fails with
/// [`InvError::NonHorizontal`] when the plane is not horizontal over the
/// first r x-directions; such planes are involutive-plane candidates
/// outside the adapted chart, flagged rather than silently dropped.
pub fn adapted_j1_point<T: Scalar>(
    chart: &J1Chart,
    base: &BTreeMap<String, T>,
    plane: &Plane<T>,
) -> Result<BTreeMap<String, T>, InvError> {
    let e_dim = chart.x_vars.len() + chart.u_vars.len();
    if plane.ambient_dim() != e_dim {
        return Err(InvError::AmbientMismatch {
            got: plane.ambient_dim(),
            want: e_dim,
        });
    }
    if plane.dim() != chart.r {
        return Err(InvError::PlaneDimension {
            r: plane.dim(),
            max: chart.r,
        });
    }
    let r = chart.r;
    let basis = plane.basis();
    let bx: Vec<Vec<T>> = (0..r)
        .map(|row| (0..r).map(|col| basis[row][col]).collect())
        .collect();
    let mut out = BTreeMap::new();
    for (name, value) in base {
        out.insert(name.clone(), *value);
    }
    for v in chart.x_vars.iter().chain(&chart.u_vars) {
        if !out.contains_key(v) {
            return Err(InvError::MissingCoordinate(v.clone()));
        }
    }
    let deps = chart.dependents();
    // Re-express the generators with identity x-block: generator i is
    // sum_t c_t basis_t with (B_x^T) c = e_i.
    let bxt: Vec<Vec<T>> = (0..r)
        .map(|row| (0..r).map(|col| bx[col][row]).collect())
        .collect();
    for i in 1..=r {
        let mut rhs = vec![T::zero(); r];
        rhs[i - 1] = T::one();
        let c = solve(&bxt, &rhs, T::from_f64(1e-12).unwrap())
            .ok_or(InvError::NonHorizontal)?;
        for (d, dep) in deps.iter().enumerate() {
            let col = r + d;
            let mut s = T::zero();
            for (t, &ct) in c.iter().enumerate() {
                s = s + ct * basis[t][col];
            }
            out.insert(chart.slope_name(dep, i), s);
        }
    }
    Ok(out)
}

/// Contact forms of the order-k jet chart, as a distribution on
/// E = J^k(E, n): one form per (alpha, sigma) with |sigma| <= k-1,
/// `du^a_sigma - sum_i u^a_{sigma+1_i} dx^i`.
pub fn cartan_distribution(chart: &JetChart) -> DistributionSpec {
    assert!(chart.k >= 1, "contact forms need order >= 1");
    let x_vars: Vec<String> = (1..=chart.n).map(x_name).collect();
    let u_vars: Vec<String> = chart
        .coords()
        .into_iter()
        .filter(|c| !c.starts_with('x'))
        .collect();
    let mut forms = Vec::new();
    for alpha in 1..=chart.m {
        for sigma in chart.at_order(chart.k - 1).sigmas() {
            let dx = (1..=chart.n)
                .map(|i| Expr::var(u_name(alpha, &sigma.bump(i).unwrap())).neg())
                .collect();
            let target = u_name(alpha, &sigma);
            let du = u_vars
                .iter()
                .map(|v| {
                    if *v == target {
                        Expr::one()
                    } else {
                        Expr::zero()
                    }
                })
                .collect();
            forms.push(Form1 { dx, du });
        }
    }
    DistributionSpec::new(x_vars, u_vars, forms).expect("contact forms are well-formed")
}

/// Outcome of the numeric differential-consequence check: at seeded points
/// solving f_i = 0 together with the first prolongation D_j f_i = 0, the
/// curvature functions f_ij must vanish.
#[derive(Debug, Clone, Serialize)]
pub struct ConsequenceReport {
    pub samples: usize,
    pub converged: usize,
    pub skipped: usize,
    pub max_residual: f64,
}

/// Total derivative on J^1(E, r) expressions, lifting to second-order
/// slope coordinates `{dep}_{sigma}` with |sigma| = 2.
fn j1_total_derivative(chart: &J1Chart, e: &Expr, j: usize) -> Expr {
    let mut terms = vec![diff(e, &chart.x_vars[j - 1])];
    for dep in chart.dependents() {
        let dv = diff(e, &dep);
        if !dv.is_zero_const() {
            terms.push(Expr::prod(vec![Expr::var(chart.slope_name(&dep, j)), dv]));
        }
        for i in 1..=chart.r {
            let ds = diff(e, &chart.slope_name(&dep, i));
            if !ds.is_zero_const() {
                terms.push(Expr::prod(vec![
                    Expr::var(chart.slope2_name(&dep, i, j)),
                    ds,
                ]));
            }
        }
    }
    Expr::sum(terms)
}

/// Samples points of the prolonged system {f_i = 0, D_j f_i = 0} by damped
/// Gauss-Newton over slopes and second-order coordinates, then evaluates
/// the curvature functions there. Samples where the prolongation system
/// cannot be solved are reported and skipped.
pub fn differential_consequence_check(
    spec: &DistributionSpec,
    r: usize,
    samples: usize,
    seed: u64,
) -> Result<ConsequenceReport, InvError> {
    let system = involutivity_equations(spec, r)?;
    let chart = &system.chart;
    let deps = chart.dependents();
    let mut unknowns: Vec<String> = Vec::new();
    for dep in &deps {
        for i in 1..=r {
            unknowns.push(chart.slope_name(dep, i));
        }
    }
    for dep in &deps {
        for i in 1..=r {
            for j in i..=r {
                unknowns.push(chart.slope2_name(dep, i, j));
            }
        }
    }
    let mut equations: Vec<Expr> = system.f1.iter().map(|eq| eq.expr.clone()).collect();
    for eq in &system.f1 {
        for j in 1..=r {
            equations.push(j1_total_derivative(chart, &eq.expr, j));
        }
    }
    let jacobian: Vec<Vec<Expr>> = equations
        .iter()
        .map(|e| unknowns.iter().map(|v| diff(e, v)).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut converged = 0;
    let mut skipped = 0;
    let mut max_residual = 0.0f64;
    for _ in 0..samples {
        let mut env: Env<f64> = Env::new();
        for v in chart.x_vars.iter().chain(&chart.u_vars) {
            env.insert(v.clone(), rng.gen_range(-0.9..0.9));
        }
        for v in &unknowns {
            env.insert(v.clone(), rng.gen_range(-0.5..0.5));
        }
        match newton_prolong(&equations, &jacobian, &unknowns, &mut env) {
            Ok(()) => {
                converged += 1;
                for eq in &system.f2 {
                    let v = eval(&eq.expr, &env)?.abs();
                    max_residual = max_residual.max(v);
                }
            }
            Err(InvError::Eval(e)) => return Err(InvError::Eval(e)),
            Err(_) => skipped += 1,
        }
    }
    Ok(ConsequenceReport {
        samples,
        converged,
        skipped,
        max_residual,
    })
}

fn newton_prolong(
    equations: &[Expr],
    jacobian: &[Vec<Expr>],
    unknowns: &[String],
    env: &mut Env<f64>,
) -> Result<(), InvError> {
    let residual = |env: &Env<f64>| -> Result<Vec<f64>, InvError> {
        equations.iter().map(|e| Ok(eval(e, env)?)).collect()
    };
    let norm_inf = |f: &[f64]| f.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let mut f = residual(env)?;
    for _ in 0..60 {
        if norm_inf(&f) < 1e-12 {
            return Ok(());
        }
        let jac: Vec<Vec<f64>> = jacobian
            .iter()
            .map(|row| row.iter().map(|e| eval(e, env)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let step = match gauss_newton_step(&jac, &f, 1e-12) {
            Some(s) => s,
            None => break,
        };
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let mut trial = env.clone();
            for (name, delta) in unknowns.iter().zip(&step) {
                *trial.get_mut(name).unwrap() += scale * delta;
            }
            let tf = residual(&trial)?;
            if norm_inf(&tf) < norm_inf(&f) || norm_inf(&tf) < 1e-12 {
                *env = trial;
                f = tf;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if norm_inf(&f) < 1e-12 {
        Ok(())
    } else {
        Err(InvError::ProlongationStuck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{exprs_equal, is_zero, parse};
    use crate::jetspace::{prolong_section, r_plane, SectionSpec};

    fn contact_1d() -> DistributionSpec {
        // E = (x, u, p), w = du - p dx.
        DistributionSpec::new(
            vec!["x".into()],
            vec!["u".into(), "p".into()],
            vec![Form1 {
                dx: vec![parse("-p").unwrap()],
                du: vec![Expr::one(), Expr::zero()],
            }],
        )
        .unwrap()
    }

    fn contact_2d() -> DistributionSpec {
        // E = (x1, x2, u, p1, p2), w = du - p1 dx1 - p2 dx2.
        DistributionSpec::new(
            vec!["x1".into(), "x2".into()],
            vec!["u".into(), "p1".into(), "p2".into()],
            vec![Form1 {
                dx: vec![parse("-p1").unwrap(), parse("-p2").unwrap()],
                du: vec![Expr::one(), Expr::zero(), Expr::zero()],
            }],
        )
        .unwrap()
    }

    #[test]
    fn contact_equations_in_one_variable() {
        let system = involutivity_equations(&contact_1d(), 1).unwrap();
        assert_eq!(system.f1.len(), 1);
        assert!(exprs_equal(&system.f1[0].expr, &parse("-p + u_1").unwrap()));
        assert_eq!(system.f2.len(), 1);
        assert!(is_zero(&system.f2[0].expr));
    }

    #[test]
    fn constant_coefficients_have_zero_curvature() {
        let spec = DistributionSpec::new(
            vec!["x1".into(), "x2".into()],
            vec!["u".into()],
            vec![Form1 {
                dx: vec![Expr::int(2), Expr::int(-1)],
                du: vec![Expr::int(3)],
            }],
        )
        .unwrap();
        let system = involutivity_equations(&spec, 2).unwrap();
        for eq in &system.f2 {
            assert!(is_zero(&eq.expr));
        }
    }

    #[test]
    fn contact_equations_in_two_variables() {
        let system = involutivity_equations(&contact_2d(), 2).unwrap();
        assert!(exprs_equal(
            &system.f1[0].expr,
            &parse("-p1 + u_1.0").unwrap()
        ));
        assert!(exprs_equal(
            &system.f1[1].expr,
            &parse("-p2 + u_0.1").unwrap()
        ));
        let f12 = system.f2.iter().find(|eq| eq.i == 1 && eq.j == 2).unwrap();
        assert!(exprs_equal(&f12.expr, &parse("p1_0.1 - p2_1.0").unwrap()));
    }

    #[test]
    fn curvature_is_antisymmetric() {
        for (spec, r) in [(contact_1d(), 1), (contact_2d(), 2)] {
            let chart = J1Chart::new(&spec, r).unwrap();
            for form in 0..spec.forms().len() {
                for i in 1..=r {
                    for j in 1..=r {
                        let fij = curvature_expr(&spec, &chart, form, i, j);
                        let fji = curvature_expr(&spec, &chart, form, j, i);
                        assert!(is_zero(&(fij + fji)));
                    }
                }
            }
        }
    }

    /// Numeric restriction of w to a generator, via coefficient evaluation
    /// only.
    fn numeric_pairing(
        spec: &DistributionSpec,
        chart: &J1Chart,
        point: &BTreeMap<String, f64>,
        form: usize,
        i: usize,
    ) -> f64 {
        let mut acc = eval(&spec.forms[form].dx[i - 1], point).unwrap();
        for (d, dep) in chart.dependents().iter().enumerate() {
            acc += eval(spec.coeff(form, chart.r + d), point).unwrap()
                * point[&chart.slope_name(dep, i)];
        }
        acc
    }

    /// Numeric restriction of dw: for constant extensions of the
    /// generators the bracket vanishes, so dw(v_i, v_j) reduces to
    /// directional differences of the pairings.
    fn numeric_curvature(
        spec: &DistributionSpec,
        chart: &J1Chart,
        point: &BTreeMap<String, f64>,
        form: usize,
        i: usize,
        j: usize,
    ) -> f64 {
        let h = 1e-6;
        let shift = |dir: usize, step: f64| {
            let mut q = point.clone();
            *q.get_mut(&chart.x_vars[dir - 1]).unwrap() += step;
            for dep in chart.dependents() {
                let slope = point[&chart.slope_name(&dep, dir)];
                *q.get_mut(&dep).unwrap() += step * slope;
            }
            q
        };
        let wj = |q: &BTreeMap<String, f64>| numeric_pairing(spec, chart, q, form, j);
        let wi = |q: &BTreeMap<String, f64>| numeric_pairing(spec, chart, q, form, i);
        let di_wj = (wj(&shift(i, h)) - wj(&shift(i, -h))) / (2.0 * h);
        let dj_wi = (wi(&shift(j, h)) - wi(&shift(j, -h))) / (2.0 * h);
        di_wj - dj_wi
    }

    #[test]
    fn symbolic_equations_match_numeric_restriction() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (spec, r) in [(contact_1d(), 1), (contact_2d(), 2)] {
            let system = involutivity_equations(&spec, r).unwrap();
            for _ in 0..10 {
                let mut point: BTreeMap<String, f64> = BTreeMap::new();
                for c in system.chart.coords() {
                    point.insert(c, rng.gen_range(-1.0..1.0));
                }
                for eq in &system.f1 {
                    let sym = eval(&eq.expr, &point).unwrap();
                    let num = numeric_pairing(&spec, &system.chart, &point, eq.form, eq.i);
                    assert!((sym - num).abs() < 1e-9);
                }
                for eq in &system.f2 {
                    let sym = eval(&eq.expr, &point).unwrap();
                    let num =
                        numeric_curvature(&spec, &system.chart, &point, eq.form, eq.i, eq.j);
                    assert!(
                        (sym - num).abs() < 1e-5,
                        "form {} ({}, {}): sym {sym} num {num}",
                        eq.form,
                        eq.i,
                        eq.j
                    );
                }
            }
        }
    }

    #[test]
    fn prolonged_sections_are_involutive_for_cartan_forms() {
        let s = SectionSpec::new(2, vec![parse("x1^3 + x1*x2^2").unwrap()]).unwrap();
        let k = 1;
        let theta = prolong_section::<f64>(&s, k + 1, &[0.4, -0.2]).unwrap();
        let base = theta.project(k).unwrap();
        let plane = r_plane(&theta).unwrap();
        let spec = cartan_distribution(&base.chart());
        let system = involutivity_equations(&spec, 2).unwrap();
        let point = adapted_j1_point(&system.chart, base.values(), &plane).unwrap();
        assert!(is_involutive(&system, &point, 1e-10).unwrap());
    }

    #[test]
    fn horizontality_is_detected() {
        let vertical = Plane::new(3, vec![vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(!plane_is_horizontal(&vertical, 1));
        let slanted = Plane::new(3, vec![vec![0.5, 0.2, 1.0]]).unwrap();
        assert!(plane_is_horizontal(&slanted, 1));
        let spec = contact_1d();
        let chart = J1Chart::new(&spec, 1).unwrap();
        let mut base = BTreeMap::new();
        for v in ["x", "u", "p"] {
            base.insert(v.to_string(), 0.5);
        }
        assert!(matches!(
            adapted_j1_point(&chart, &base, &vertical),
            Err(InvError::NonHorizontal)
        ));
    }

    #[test]
    fn non_horizontal_contact_slope_fails() {
        let spec = contact_1d();
        let system = involutivity_equations(&spec, 1).unwrap();
        let mut point: BTreeMap<String, f64> = BTreeMap::new();
        point.insert("x".into(), 0.0);
        point.insert("u".into(), 1.0);
        point.insert("p".into(), 0.5);
        point.insert("u_1".into(), 0.9); // u_1 != p
        point.insert("p_1".into(), 0.0);
        assert!(!is_involutive(&system, &point, 1e-10).unwrap());
    }

    #[test]
    fn involutivity_is_hereditary_for_subplanes() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let s = SectionSpec::new(2, vec![parse("sin(x1)*x2 + x2^3").unwrap()]).unwrap();
        let k = 1;
        for _ in 0..5 {
            let x0 = [rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)];
            let theta = prolong_section::<f64>(&s, k + 1, &x0).unwrap();
            let base = theta.project(k).unwrap();
            let plane = r_plane(&theta).unwrap();
            let spec = cartan_distribution(&base.chart());
            // Random 1-dimensional subplane, kept horizontal over x1.
            let c1 = rng.gen_range(0.4..1.0);
            let c2 = rng.gen_range(-1.0..1.0);
            let combo: Vec<f64> = (0..plane.ambient_dim())
                .map(|col| c1 * plane.basis()[0][col] + c2 * plane.basis()[1][col])
                .collect();
            let sub = Plane::new(plane.ambient_dim(), vec![combo]).unwrap();
            let system = involutivity_equations(&spec, 1).unwrap();
            let point = adapted_j1_point(&system.chart, base.values(), &sub).unwrap();
            assert!(is_involutive(&system, &point, 1e-10).unwrap());
        }
    }

    #[test]
    fn differential_consequences_for_contact_example() {
        let report = differential_consequence_check(&contact_1d(), 1, 10, 7).unwrap();
        assert_eq!(report.skipped, 0);
        assert!(report.max_residual < 1e-10, "{report:?}");
    }

    #[test]
    fn differential_consequences_constant_forms_exact() {
        let spec = DistributionSpec::new(
            vec!["x1".into(), "x2".into()],
            vec!["u".into()],
            vec![Form1 {
                dx: vec![Expr::int(1), Expr::int(2)],
                du: vec![Expr::int(1)],
            }],
        )
        .unwrap();
        let report = differential_consequence_check(&spec, 2, 5, 3).unwrap();
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn differential_consequences_for_cartan_forms() {
        let chart = JetChart::new(2, 1, 1);
        let spec = cartan_distribution(&chart);
        let report = differential_consequence_check(&spec, 2, 8, 11).unwrap();
        assert!(report.converged > 0);
        assert!(report.max_residual < 1e-8, "{report:?}");
    }

    #[test]
    fn json_roundtrip() {
        let spec = contact_2d();
        let text = serde_json::to_string(&spec).unwrap();
        let back: DistributionSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.x_vars(), spec.x_vars());
        assert_eq!(back.u_vars(), spec.u_vars());
        let s1 = involutivity_equations(&spec, 2).unwrap();
        let s2 = involutivity_equations(&back, 2).unwrap();
        for (a, b) in s1.f1.iter().zip(&s2.f1) {
            assert!(exprs_equal(&a.expr, &b.expr));
        }
    }
}
