use alloc::string::{String, ToString};

use super::{BinOp, Expr, Func, Params, Point, Var};
use crate::error::{Error, Result};
use crate::jet::Jet;

fn domain(e: &Expr, q: Point, reason: &'static str) -> Error {
    Error::Domain {
        expr: e.to_string(),
        point: q,
        reason,
    }
}

fn param(name: &str, params: &Params) -> Result<f64> {
    params
        .get(name)
        .copied()
        .ok_or_else(|| Error::UnboundParameter(String::from(name)))
}

fn is_integral(r: f64) -> bool {
    r == libm::trunc(r) && libm::fabs(r) < 1e9
}

/// Value of `e` at `q`.
pub fn evaluate(e: &Expr, q: Point, params: &Params) -> Result<f64> {
    let value = match e {
        Expr::Const(c) => *c,
        Expr::Var(v) => q.coord(*v),
        Expr::Param(name) => param(name, params)?,
        Expr::Neg(a) => -evaluate(a, q, params)?,
        Expr::Binary(op, a, b) => {
            let (a_val, b_val) = (evaluate(a, q, params)?, evaluate(b, q, params)?);
            match op {
                BinOp::Add => a_val + b_val,
                BinOp::Sub => a_val - b_val,
                BinOp::Mul => a_val * b_val,
                BinOp::Div => {
                    if b_val == 0.0 {
                        return Err(domain(e, q, "division by zero"));
                    }
                    a_val / b_val
                }
                BinOp::Pow => {
                    let integral = is_integral(b_val);
                    if !integral && a_val <= 0.0 {
                        return Err(domain(e, q, "non-integer power of a non-positive base"));
                    }
                    if integral && b_val < 0.0 && a_val == 0.0 {
                        return Err(domain(e, q, "negative power of zero"));
                    }
                    libm::pow(a_val, b_val)
                }
            }
        }
        Expr::Call(func, a) => {
            let t = evaluate(a, q, params)?;
            match func {
                Func::Sin => libm::sin(t),
                Func::Cos => libm::cos(t),
                Func::Tan => {
                    if libm::cos(t) == 0.0 {
                        return Err(domain(e, q, "cosine vanishes"));
                    }
                    libm::sin(t) / libm::cos(t)
                }
                Func::Exp => libm::exp(t),
                Func::Log => {
                    if t <= 0.0 {
                        return Err(domain(e, q, "logarithm of a non-positive number"));
                    }
                    libm::log(t)
                }
                Func::Sqrt => {
                    if t < 0.0 {
                        return Err(domain(e, q, "square root of a negative number"));
                    }
                    libm::sqrt(t)
                }
                Func::Abs | Func::Sign => {
                    if t == 0.0 {
                        return Err(Error::Nonsmooth {
                            expr: e.to_string(),
                            point: q,
                        });
                    }
                    if *func == Func::Abs {
                        libm::fabs(t)
                    } else if t > 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            }
        }
    };
    Ok(value)
}

/// Jet of `e` at `q`: every partial derivative up to `order`.
pub fn evaluate_jet(e: &Expr, q: Point, order: usize, params: &Params) -> Result<Jet> {
    let seeds = Var::ALL.map(|v| Jet::seed_variable(v, q, order));
    jet_rec(e, q, order, params, &seeds)
}

fn jet_rec(e: &Expr, q: Point, order: usize, params: &Params, seeds: &[Jet; 3]) -> Result<Jet> {
    // attach the failing sub-expression to errors raised by jet arithmetic
    let located = |err: Error| match err {
        Error::Domain { point, reason, .. } => Error::Domain {
            expr: e.to_string(),
            point,
            reason,
        },
        Error::Nonsmooth { point, .. } => Error::Nonsmooth {
            expr: e.to_string(),
            point,
        },
        other => other,
    };
    Ok(match e {
        Expr::Const(c) => Jet::constant(*c, q, order),
        Expr::Var(v) => seeds[v.slot()].clone(),
        Expr::Param(name) => Jet::constant(param(name, params)?, q, order),
        Expr::Neg(a) => -&jet_rec(a, q, order, params, seeds)?,
        Expr::Binary(BinOp::Pow, a, b) => {
            let base = jet_rec(a, q, order, params, seeds)?;
            if b.depends_on_chart() {
                let exponent = jet_rec(b, q, order, params, seeds)?;
                if base.value() <= 0.0 {
                    return Err(domain(e, q, "variable power of a non-positive base"));
                }
                let log = base.compose(Func::Log).map_err(located)?;
                (&exponent * &log).compose(Func::Exp).map_err(located)?
            } else {
                let r = evaluate(b, q, params)?;
                base.powf(r).map_err(located)?
            }
        }
        Expr::Binary(op, a, b) => {
            let a = jet_rec(a, q, order, params, seeds)?;
            let b = jet_rec(b, q, order, params, seeds)?;
            match op {
                BinOp::Add => &a + &b,
                BinOp::Sub => &a - &b,
                BinOp::Mul => &a * &b,
                BinOp::Div => {
                    if b.value() == 0.0 {
                        return Err(domain(e, q, "division by zero"));
                    }
                    let mut out = a.div(&b).map_err(located)?;
                    // keep the value bit-identical to scalar evaluation
                    let value = a.value() / b.value();
                    let mut coeffs = out.coeffs().to_vec();
                    coeffs[0] = value;
                    out = Jet::from_coeffs(q, out.order(), coeffs);
                    out
                }
                BinOp::Pow => unreachable!(),
            }
        }
        Expr::Call(func, a) => {
            let arg = jet_rec(a, q, order, params, seeds)?;
            let mut out = arg.compose(*func).map_err(located)?;
            if *func == Func::Tan {
                let t = arg.value();
                let mut coeffs = out.coeffs().to_vec();
                coeffs[0] = libm::sin(t) / libm::cos(t);
                out = Jet::from_coeffs(q, out.order(), coeffs);
            }
            out
        }
    })
}
