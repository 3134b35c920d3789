//! Exact symbolic expressions: parsing, differentiation, evaluation and
//! polynomial-normal-form simplification.
//!
//! Constants are arbitrary-precision rationals; floating point enters only
//! at evaluation time. Simplification is limited to polynomial/rational
//! normal form with elementary-function subterms treated as opaque atoms
//! (plus the reduction `sqrt(e)^2 -> e`), so symbolic zero tests are sound
//! but incomplete for transcendental identities; [`zero_verdict`] falls
//! back to a randomized numeric check for those.

mod diff;
mod eval;
mod parse;
mod normal;

pub use diff::{derivative_table, diff};
pub use eval::{eval, Env, EvalError};
pub use normal::{exprs_equal, is_zero, normalize, zero_verdict, NormalizeError, ZeroVerdict};
pub use parse::{parse, ParseError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};

/// Exact rational scalar of the symbolic layer.
pub type Rational = BigRational;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// Elementary functions applied to a single argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

/// Symbolic expression tree over named variables with exact rational
/// constants.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Rational),
    Var(String),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    /// Integer power of the base; negative exponents are allowed and
    /// normalize into quotients.
    Pow(Box<Expr>, i32),
    Quot(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Const(rat_int(v))
    }

    pub fn rational(p: i64, q: i64) -> Expr {
        Expr::Const(rat(p, q))
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_one_const(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    /// Flattening sum constructor with constant folding.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut acc = Rational::zero();
        let mut out: Vec<Expr> = Vec::new();
        for t in terms {
            match t {
                Expr::Const(c) => acc += c,
                Expr::Sum(ts) => {
                    for s in ts {
                        match s {
                            Expr::Const(c) => acc += c,
                            other => out.push(other),
                        }
                    }
                }
                other => out.push(other),
            }
        }
        if !acc.is_zero() {
            out.insert(0, Expr::Const(acc));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Sum(out),
        }
    }

    /// Flattening product constructor; folds constants and annihilates on 0.
    pub fn prod(factors: Vec<Expr>) -> Expr {
        let mut acc = Rational::one();
        let mut out: Vec<Expr> = Vec::new();
        for f in factors {
            match f {
                Expr::Const(c) => acc *= c,
                Expr::Prod(fs) => {
                    for g in fs {
                        match g {
                            Expr::Const(c) => acc *= c,
                            other => out.push(other),
                        }
                    }
                }
                other => out.push(other),
            }
        }
        if acc.is_zero() {
            return Expr::zero();
        }
        if !acc.is_one() {
            out.insert(0, Expr::Const(acc));
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::Prod(out),
        }
    }

    pub fn pow(base: Expr, exp: i32) -> Expr {
        match exp {
            0 => Expr::one(),
            1 => base,
            _ => match base {
                Expr::Const(c) if exp > 0 => {
                    Expr::Const(num::pow::pow(c, exp as usize))
                }
                Expr::Const(c) if !c.is_zero() => {
                    Expr::Const(num::pow::pow(c.recip(), (-exp) as usize))
                }
                b => Expr::Pow(Box::new(b), exp),
            },
        }
    }

    pub fn quot(num: Expr, den: Expr) -> Expr {
        if den.is_one_const() {
            return num;
        }
        if num.is_zero_const() && !den.is_zero_const() {
            return Expr::zero();
        }
        if let (Expr::Const(a), Expr::Const(b)) = (&num, &den) {
            if !b.is_zero() {
                return Expr::Const(a / b);
            }
        }
        Expr::Quot(Box::new(num), Box::new(den))
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Box::new(arg))
    }

    pub fn sqrt(arg: Expr) -> Expr {
        Expr::func(Func::Sqrt, arg)
    }

    pub fn neg(self) -> Expr {
        Expr::prod(vec![Expr::int(-1), self])
    }

    /// Free variables of the tree, including those inside function
    /// arguments.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut vars = BTreeSet::new();
        self.collect_vars(&mut vars);
        vars
    }

    fn collect_vars(&self, vars: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                vars.insert(v.clone());
            }
            Expr::Sum(ts) | Expr::Prod(ts) => {
                for t in ts {
                    t.collect_vars(vars);
                }
            }
            Expr::Pow(b, _) => b.collect_vars(vars),
            Expr::Quot(a, b) => {
                a.collect_vars(vars);
                b.collect_vars(vars);
            }
            Expr::Func(_, a) => a.collect_vars(vars),
        }
    }

    /// Replaces variables by expressions, capture-free (replacements are
    /// not re-scanned).
    pub fn subst(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| t.subst(map)).collect()),
            Expr::Prod(ts) => Expr::prod(ts.iter().map(|t| t.subst(map)).collect()),
            Expr::Pow(b, k) => Expr::pow(b.subst(map), *k),
            Expr::Quot(a, b) => Expr::quot(a.subst(map), b.subst(map)),
            Expr::Func(f, a) => Expr::func(*f, a.subst(map)),
        }
    }
}

// Expressions serialize as their grammar text and deserialize through the
// parser, so JSON payloads stay human-readable.
impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs.neg()])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::prod(vec![self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::quot(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

// Printing follows the input grammar, so print-then-parse is the identity
// up to flattening. Negative leading constants are hoisted as a sign and
// wrapped in parentheses where the grammar wants a bare factor.

fn fmt_rational(c: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

/// Splits a leading negative constant off a term, for sum printing.
fn split_sign(e: &Expr) -> (bool, Expr) {
    match e {
        Expr::Const(c) if c.is_negative() => (true, Expr::Const(-c.clone())),
        Expr::Prod(fs) => {
            if let Some(Expr::Const(c)) = fs.first() {
                if c.is_negative() {
                    let mut rest: Vec<Expr> = fs[1..].to_vec();
                    rest.insert(0, Expr::Const(-c.clone()));
                    return (true, Expr::prod(rest));
                }
            }
            (false, e.clone())
        }
        _ => (false, e.clone()),
    }
}

fn is_signed(e: &Expr) -> bool {
    split_sign(e).0
}

fn fmt_factor(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // A factor position in the grammar: parenthesize sums, quotients,
    // nested products and signed subterms.
    match e {
        Expr::Sum(_) | Expr::Quot(..) | Expr::Prod(_) => write!(f, "({e})"),
        Expr::Const(c) if c.is_negative() => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

fn fmt_base(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // The base of a power: only variables, function calls and plain
    // non-negative integers may appear bare.
    match e {
        Expr::Var(_) | Expr::Func(..) => write!(f, "{e}"),
        Expr::Const(c) if c.is_integer() && !c.is_negative() => write!(f, "{e}"),
        _ => write!(f, "({e})"),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => fmt_rational(c, f),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Sum(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    let (neg, bare) = split_sign(t);
                    if i == 0 {
                        if neg {
                            write!(f, "-")?;
                        }
                    } else if neg {
                        write!(f, " - ")?;
                    } else {
                        write!(f, " + ")?;
                    }
                    match bare {
                        Expr::Sum(_) => write!(f, "({bare})")?,
                        _ => write!(f, "{bare}")?,
                    }
                }
                Ok(())
            }
            Expr::Prod(fs) => {
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    fmt_factor(x, f)?;
                }
                Ok(())
            }
            Expr::Pow(b, k) => {
                fmt_base(b, f)?;
                write!(f, "^{k}")
            }
            Expr::Quot(a, b) => {
                if is_signed(a) || matches!(**a, Expr::Sum(_) | Expr::Quot(..)) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, "/")?;
                match **b {
                    Expr::Sum(_) | Expr::Prod(_) | Expr::Quot(..) => write!(f, "({b})"),
                    Expr::Const(ref c) if !c.is_integer() || c.is_negative() => {
                        write!(f, "({b})")
                    }
                    _ => write!(f, "{b}"),
                }
            }
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
