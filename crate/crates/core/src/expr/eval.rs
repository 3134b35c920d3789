//! Numeric evaluation over any floating-point scalar.

use std::collections::BTreeMap;

use num::ToPrimitive;
use thiserror::Error;

use super::{Expr, Func};
use crate::Scalar;

/// Binding of variable names to scalar values.
pub type Env<T> = BTreeMap<String, T>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable {0:?}")]
    UnboundVariable(String),
    #[error("domain error: {func} of {arg}")]
    Domain { func: &'static str, arg: String },
    #[error("division by zero")]
    DivisionByZero,
}

/// Evaluates `e` in `env`; every free variable must be bound and every
/// function argument must lie in its domain.
pub fn eval<T: Scalar>(e: &Expr, env: &Env<T>) -> Result<T, EvalError> {
    match e {
        Expr::Const(c) => Ok(T::from_f64(c.to_f64().unwrap_or(f64::NAN))
            .expect("rational representable as float")),
        Expr::Var(v) => env
            .get(v)
            .copied()
            .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        Expr::Sum(ts) => {
            let mut acc = T::zero();
            for t in ts {
                acc = acc + eval(t, env)?;
            }
            Ok(acc)
        }
        Expr::Prod(fs) => {
            let mut acc = T::one();
            for f in fs {
                acc = acc * eval(f, env)?;
            }
            Ok(acc)
        }
        Expr::Pow(b, k) => {
            let v = eval(b, env)?;
            if *k < 0 && v.is_zero() {
                return Err(EvalError::DivisionByZero);
            }
            Ok(v.powi(*k))
        }
        Expr::Quot(a, b) => {
            let den = eval(b, env)?;
            if den.is_zero() {
                return Err(EvalError::DivisionByZero);
            }
            Ok(eval(a, env)? / den)
        }
        Expr::Func(f, a) => {
            let v = eval(a, env)?;
            match f {
                Func::Sin => Ok(v.sin()),
                Func::Cos => Ok(v.cos()),
                Func::Exp => Ok(v.exp()),
                Func::Log => {
                    if v <= T::zero() {
                        Err(EvalError::Domain {
                            func: "log",
                            arg: format!("{v}"),
                        })
                    } else {
                        Ok(v.ln())
                    }
                }
                Func::Sqrt => {
                    if v < T::zero() {
                        Err(EvalError::Domain {
                            func: "sqrt",
                            arg: format!("{v}"),
                        })
                    } else {
                        Ok(v.sqrt())
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn env1(name: &str, v: f64) -> Env<f64> {
        let mut env = Env::new();
        env.insert(name.to_string(), v);
        env
    }

    #[test]
    fn evaluates_sum() {
        let e = parse("x + 1").unwrap();
        assert_eq!(eval(&e, &env1("x", 2.0)).unwrap(), 3.0);
    }

    #[test]
    fn log_of_zero_is_domain_error() {
        let e = parse("log(x)").unwrap();
        assert!(matches!(
            eval(&e, &env1("x", 0.0)),
            Err(EvalError::Domain { func: "log", .. })
        ));
    }

    #[test]
    fn sqrt_of_negative_is_domain_error() {
        let e = parse("sqrt(x)").unwrap();
        assert!(matches!(
            eval(&e, &env1("x", -1.0)),
            Err(EvalError::Domain { func: "sqrt", .. })
        ));
    }

    #[test]
    fn unbound_variable_reported() {
        let e = parse("x + y").unwrap();
        assert_eq!(
            eval(&e, &env1("x", 1.0)),
            Err(EvalError::UnboundVariable("y".to_string()))
        );
    }

    #[test]
    fn works_at_f32() {
        let e = parse("x^2 + 1/2").unwrap();
        let mut env: Env<f32> = Env::new();
        env.insert("x".to_string(), 2.0f32);
        assert!((eval(&e, &env).unwrap() - 4.5f32).abs() < 1e-6);
    }
}
