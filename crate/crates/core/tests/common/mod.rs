#![allow(dead_code)]

use bicontact_core::expr::{Expr, Func, Var};
use bicontact_core::Point;
use proptest::prelude::*;

/// Smooth expressions in `x, y, p` that are defined on all of `[-1, 1]^3`.
pub fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::var(Var::X)),
        Just(Expr::var(Var::Y)),
        Just(Expr::var(Var::P)),
        (-20i32..=20).prop_map(|k| Expr::constant(k as f64 / 10.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            // denominators bounded away from zero
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(
                a,
                Expr::add(Expr::constant(1.5), Expr::pow(b, Expr::constant(2.0)))
            )),
            (inner.clone(), 2u8..=3).prop_map(|(a, k)| Expr::pow(a, Expr::constant(k as f64))),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Cos, a)),
            inner
                .clone()
                .prop_map(|a| Expr::call(Func::Exp, Expr::mul(Expr::constant(0.3), a))),
            inner.prop_map(|a| Expr::call(
                Func::Sqrt,
                Expr::add(Expr::constant(2.0), Expr::call(Func::Sin, a))
            )),
        ]
    })
}

pub fn point(r: f64) -> impl Strategy<Value = Point> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, p)| Point::new(x, y, p))
}

/// A random pair `f = p^3 + a p + b + c x p + d y + e sin(x y)`-style
/// perturbation of a cubic, admissible near `p = 0.5` for moderate
/// coefficients.
pub fn admissible_pair_source() -> impl Strategy<Value = String> {
    (1.0f64..3.0, 0.5f64..1.0, -0.3f64..0.3, -0.3f64..0.3, -0.3f64..0.3).prop_map(
        |(a, b, c, d, e)| {
            format!("{a}*p^3 + p + {b} + {c}*x*p + {d}*y + {e}*sin(x*y*p)")
        },
    )
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
