//! Truncated Taylor expansions in the three chart variables.
//!
//! A [`Jet`] of order `n` at a base point stores every Taylor coefficient
//! `∂^μ g / μ!` with `|μ| ≤ n`, densely, in graded order. Arithmetic is
//! ordinary truncated power-series arithmetic, so every derivative carried by a
//! jet is exact up to floating point rounding.
//!
//! Binary operators between jets of different orders truncate to the smaller
//! order. Taking a partial derivative lowers the order by one, which is how the
//! available differentiation depth is tracked through long invariant chains.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::expr::{Func, Point, Var};

/// Exponents `(i, j, k)` of `x`, `y` and `p`.
pub type MultiIndex = [usize; 3];

/// Number of coefficients of a jet of the given order: `C(order + 3, 3)`.
pub const fn coeff_len(order: usize) -> usize {
    (order + 1) * (order + 2) * (order + 3) / 6
}

/// Position of a multi-index in the graded coefficient array.
#[inline]
pub const fn index_of(mu: MultiIndex) -> usize {
    let d = mu[0] + mu[1] + mu[2];
    let r = mu[1] + mu[2];
    d * (d + 1) * (d + 2) / 6 + r * (r + 1) / 2 + mu[2]
}

/// All multi-indices of total degree `≤ order`, in storage order.
pub fn multi_indices(order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(coeff_len(order));
    for d in 0..=order {
        for i in (0..=d).rev() {
            let r = d - i;
            for k in 0..=r {
                out.push([i, r - k, k]);
            }
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Binary operations accepted by [`Jet::combine`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Elementary(Func),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    order: usize,
    base: Point,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, base: Point, order: usize) -> Self {
        let mut coeffs = vec![0.0; coeff_len(order)];
        coeffs[0] = value;
        Self { order, base, coeffs }
    }

    pub fn zero(base: Point, order: usize) -> Self {
        Self::constant(0.0, base, order)
    }

    /// Jet of a coordinate function at `base`.
    pub fn seed_variable(which: Var, base: Point, order: usize) -> Self {
        let mut jet = Self::constant(base.coord(which), base, order);
        if order >= 1 {
            let mut mu = [0; 3];
            mu[which.slot()] = 1;
            jet.coeffs[index_of(mu)] = 1.0;
        }
        jet
    }

    /// Builds a jet from raw Taylor coefficients in storage order.
    pub fn from_coeffs(base: Point, order: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), coeff_len(order), "coefficient count");
        Self { order, base, coeffs }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base(&self) -> Point {
        self.base
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, mu: MultiIndex) -> Option<f64> {
        let d = mu[0] + mu[1] + mu[2];
        (d <= self.order).then(|| self.coeffs[index_of(mu)])
    }

    /// `∂^μ g` at the base point.
    pub fn derivative(&self, mu: MultiIndex) -> Result<f64> {
        self.derivative_for(mu, "derivative")
    }

    /// Like [`Jet::derivative`], naming the requesting quantity on failure.
    pub fn derivative_for(&self, mu: MultiIndex, what: &'static str) -> Result<f64> {
        let d = mu[0] + mu[1] + mu[2];
        if d > self.order {
            return Err(Error::InsufficientOrder {
                what,
                needed: d,
                available: self.order,
            });
        }
        Ok(self.coeffs[index_of(mu)] * factorial(mu[0]) * factorial(mu[1]) * factorial(mu[2]))
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        Self {
            order,
            base: self.base,
            coeffs: self.coeffs[..coeff_len(order)].to_vec(),
        }
    }

    /// Partial derivative in one chart variable; the result has one order less.
    pub fn partial(&self, var: Var) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::InsufficientOrder {
                what: "partial derivative",
                needed: 1,
                available: 0,
            });
        }
        let order = self.order - 1;
        let slot = var.slot();
        let mut coeffs = Vec::with_capacity(coeff_len(order));
        for mut mu in multi_indices(order) {
            mu[slot] += 1;
            coeffs.push(mu[slot] as f64 * self.coeffs[index_of(mu)]);
        }
        Ok(Self {
            order,
            base: self.base,
            coeffs,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            order: self.order,
            base: self.base,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add_scalar(&self, value: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    pub fn recip(&self) -> Result<Self> {
        let t = self.value();
        if t == 0.0 || !t.is_finite() {
            return Err(self.domain("recip", "division by zero"));
        }
        let mut series = Vec::with_capacity(self.order + 1);
        let mut power = 1.0 / t;
        for k in 0..=self.order {
            series.push(if k % 2 == 0 { power } else { -power });
            power /= t;
        }
        Ok(self.compose_series(&series))
    }

    pub fn div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.compose(Func::Sqrt)
    }

    /// `|g|`, defined only where the value is non-zero.
    pub fn abs(&self) -> Result<Self> {
        self.compose(Func::Abs)
    }

    /// `g^r` for a real constant exponent.
    pub fn powf(&self, r: f64) -> Result<Self> {
        let t = self.value();
        let integral = r == libm::trunc(r) && libm::fabs(r) < 1e9;
        if !integral && t <= 0.0 {
            return Err(self.domain("pow", "non-integer power of a non-positive base"));
        }
        if integral && r < 0.0 && t == 0.0 {
            return Err(self.domain("pow", "negative power of zero"));
        }
        let mut series = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                binom *= (r - (k - 1) as f64) / k as f64;
            }
            if binom == 0.0 {
                series.push(0.0);
            } else {
                series.push(binom * libm::pow(t, r - k as f64));
            }
        }
        Ok(self.compose_series(&series))
    }

    /// Composition with an elementary function of one variable.
    pub fn compose(&self, func: Func) -> Result<Self> {
        let t = self.value();
        let n = self.order;
        let series: Vec<f64> = match func {
            Func::Sin | Func::Cos => {
                let (s, c) = (libm::sin(t), libm::cos(t));
                // derivative cycle starting at sin: s, c, -s, -c
                let cycle = [s, c, -s, -c];
                let shift = if func == Func::Sin { 0 } else { 1 };
                (0..=n).map(|k| cycle[(k + shift) % 4] / factorial(k)).collect()
            }
            Func::Tan => {
                let c = self.compose(Func::Cos)?;
                if c.value() == 0.0 {
                    return Err(self.domain("tan", "cosine vanishes"));
                }
                return self.compose(Func::Sin)?.div(&c);
            }
            Func::Exp => {
                let e = libm::exp(t);
                (0..=n).map(|k| e / factorial(k)).collect()
            }
            Func::Log => {
                if t <= 0.0 {
                    return Err(self.domain("log", "logarithm of a non-positive number"));
                }
                let mut s = vec![libm::log(t)];
                let mut power = t;
                for k in 1..=n {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    s.push(sign / (k as f64 * power));
                    power *= t;
                }
                s
            }
            Func::Sqrt => {
                if t < 0.0 {
                    return Err(self.domain("sqrt", "square root of a negative number"));
                }
                if t == 0.0 {
                    if n == 0 {
                        return Ok(Self::constant(0.0, self.base, 0));
                    }
                    return Err(Error::Nonsmooth {
                        expr: "sqrt".into(),
                        point: self.base,
                    });
                }
                return self.powf(0.5);
            }
            Func::Abs | Func::Sign => {
                if t == 0.0 {
                    return Err(Error::Nonsmooth {
                        expr: func.name().into(),
                        point: self.base,
                    });
                }
                let s = if t > 0.0 { 1.0 } else { -1.0 };
                let mut out = Self::constant(s, self.base, n);
                if func == Func::Abs {
                    out = self.scale(s);
                }
                return Ok(out);
            }
        };
        Ok(self.compose_series(&series))
    }

    /// Strict form of the jet operations: operands must share base point and
    /// order.
    pub fn combine(op: JetOp, args: &[&Jet]) -> Result<Jet> {
        let expected = match op {
            JetOp::Elementary(_) => 1,
            _ => 2,
        };
        assert_eq!(args.len(), expected, "operand count for {op:?}");
        if expected == 2 {
            let (a, b) = (args[0], args[1]);
            if a.base != b.base {
                return Err(Error::BaseMismatch);
            }
            if a.order != b.order {
                return Err(Error::OrderMismatch {
                    left: a.order,
                    right: b.order,
                });
            }
        }
        match op {
            JetOp::Add => Ok(args[0] + args[1]),
            JetOp::Sub => Ok(args[0] - args[1]),
            JetOp::Mul => Ok(args[0] * args[1]),
            JetOp::Div => args[0].div(args[1]),
            JetOp::Elementary(func) => args[0].compose(func),
        }
    }

    /// `Σ_k series[k] (g - g(base))^k`, by Horner's rule.
    fn compose_series(&self, series: &[f64]) -> Self {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut acc = Self::constant(series[self.order], self.base, self.order);
        for k in (0..self.order).rev() {
            acc = &acc * &delta;
            acc.coeffs[0] += series[k];
        }
        acc
    }

    fn domain(&self, what: &str, reason: &'static str) -> Error {
        Error::Domain {
            expr: what.into(),
            point: self.base,
            reason,
        }
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.base, rhs.base, "jets based at different points");
        let order = self.order.min(rhs.order);
        let len = coeff_len(order);
        Self {
            order,
            base: self.base,
            coeffs: self.coeffs[..len]
                .iter()
                .zip(&rhs.coeffs[..len])
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }
}

fn mul_coeffs(a: &[f64], b: &[f64], order: usize) -> Vec<f64> {
    let mut out = vec![0.0; coeff_len(order)];
    for da in 0..=order {
        for ia in (0..=da).rev() {
            let ra = da - ia;
            for ka in 0..=ra {
                let ja = ra - ka;
                let av = a[index_of([ia, ja, ka])];
                if av == 0.0 {
                    continue;
                }
                for db in 0..=order - da {
                    for ib in (0..=db).rev() {
                        let rb = db - ib;
                        for kb in 0..=rb {
                            let jb = rb - kb;
                            out[index_of([ia + ib, ja + jb, ka + kb])] +=
                                av * b[index_of([ib, jb, kb])];
                        }
                    }
                }
            }
        }
    }
    out
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.base, rhs.base, "jets based at different points");
        let order = self.order.min(rhs.order);
        Jet {
            order,
            base: self.base,
            coeffs: mul_coeffs(&self.coeffs, &rhs.coeffs, order),
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}
