//! Balanced coframe, its dual frame and vector-field calculus in the
//! normalized chart `ξ = {dy = p dx}`, `ξ̃ = {dy = f dx}`.
//!
//! Two layers live here. [`FrameJets`] evaluates the whole frame at a single
//! point as jets; the invariant engine works on it directly. [`ScalarField`]
//! and [`VectorField`] wrap point evaluation in closures so that derivatives
//! and brackets can be composed lazily, each layer asking its inputs for one
//! more order than it returns.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use core::fmt;

use crate::error::{Error, Result};
use crate::expr::{evaluate_jet, parse_expression, Expr, Params, Point, Var};
use crate::jet::Jet;

/// Default cutoff for the denominators `|f - p|` and `|f_p|`.
pub const DEFAULT_EPS_DEN: f64 = 1e-6;

/// A pair of transverse contact distributions in the normalized chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPair {
    pub f: Expr,
    pub params: Params,
    pub description: String,
}

impl ContactPair {
    pub fn new(f: Expr, params: Params) -> Self {
        Self {
            f,
            params,
            description: String::new(),
        }
    }

    pub fn parse(src: &str, params: Params) -> Result<Self> {
        Ok(Self::new(parse_expression(src)?, params))
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn f_jet(&self, q: Point, order: usize) -> Result<Jet> {
        evaluate_jet(&self.f, q, order, &self.params)
    }
}

/// Whether the pair is commonly (`+`) or oppositely (`-`) oriented at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Common,
    Opposite,
}

impl Orientation {
    pub fn from_sign(value: f64) -> Self {
        if value > 0.0 {
            Orientation::Common
        } else {
            Orientation::Opposite
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Orientation::Common => 1.0,
            Orientation::Opposite => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Orientation::Common => "+",
            Orientation::Opposite => "-",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    pub point: Point,
    /// `|f - p|`
    pub transversality: f64,
    /// `|f_p|`
    pub contact: f64,
    pub transverse: bool,
    pub contact_ok: bool,
    /// Set when `f` or `f_p` could not be evaluated at all.
    pub evaluation_error: Option<String>,
}

impl Admissibility {
    pub fn passed(&self) -> bool {
        self.transverse && self.contact_ok && self.evaluation_error.is_none()
    }

    pub fn reason(&self) -> Option<String> {
        if let Some(err) = &self.evaluation_error {
            return Some(err.clone());
        }
        match (self.transverse, self.contact_ok) {
            (true, true) => None,
            (false, _) => Some(format!(
                "transversality fails: |f - p| = {:e}",
                self.transversality
            )),
            (true, false) => Some(format!("contact condition fails: |f_p| = {:e}", self.contact)),
        }
    }

    pub fn into_result(self) -> Result<()> {
        match self.reason() {
            None => Ok(()),
            Some(reason) => Err(Error::Inadmissible {
                point: self.point,
                reason,
            }),
        }
    }
}

pub fn check_admissible(pair: &ContactPair, q: Point, eps_den: f64) -> Admissibility {
    match pair.f_jet(q, 1) {
        Ok(f) => {
            let transversality = libm::fabs(f.value() - q.p);
            let contact = libm::fabs(f.coeff([0, 0, 1]).unwrap_or(0.0));
            Admissibility {
                point: q,
                transversality,
                contact,
                transverse: transversality > eps_den,
                contact_ok: contact > eps_den,
                evaluation_error: None,
            }
        }
        Err(err) => Admissibility {
            point: q,
            transversality: f64::NAN,
            contact: f64::NAN,
            transverse: false,
            contact_ok: false,
            evaluation_error: Some(err.to_string()),
        },
    }
}

/// Components of the balanced coframe at a point, on `(dx, dy, dp)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoframeEval {
    pub alpha: [f64; 3],
    pub alpha_t: [f64; 3],
    /// Coefficient of `dp` in `ds`.
    pub ds: f64,
    pub sigma: Orientation,
}

pub fn balanced_coframe(pair: &ContactPair, q: Point, eps_den: f64) -> Result<CoframeEval> {
    let frame = FrameJets::at(pair, q, 0, eps_den)?;
    Ok(CoframeEval {
        alpha: frame.alpha.each_ref().map(Jet::value),
        alpha_t: frame.alpha_t.each_ref().map(Jet::value),
        ds: frame.ds.value(),
        sigma: frame.sigma,
    })
}

/// Coefficients of a vector field on `(∂x, ∂y, ∂p)`, as jets at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorJet(pub [Jet; 3]);

impl VectorJet {
    pub fn order(&self) -> usize {
        self.0.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn values(&self) -> [f64; 3] {
        self.0.each_ref().map(Jet::value)
    }

    /// Directional derivative `V·g`; one order is consumed from `g`.
    pub fn apply(&self, g: &Jet) -> Result<Jet> {
        let mut acc: Option<Jet> = None;
        for var in Var::ALL {
            let term = &self.0[var.slot()] * &g.partial(var)?;
            acc = Some(match acc {
                None => term,
                Some(sum) => &sum + &term,
            });
        }
        Ok(acc.expect("three components"))
    }

    /// `[V, W]^i = V·W^i - W·V^i`.
    pub fn bracket(&self, other: &VectorJet) -> Result<VectorJet> {
        let mut out = [None, None, None];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = Some(&self.apply(&other.0[i])? - &other.apply(&self.0[i])?);
        }
        Ok(VectorJet(out.map(|c| c.expect("filled"))))
    }

    /// Pairing `ω(V)` with a covector given by its components.
    pub fn pair(&self, covector: &[Jet; 3]) -> Jet {
        let xy = &(&covector[0] * &self.0[0]) + &(&covector[1] * &self.0[1]);
        &xy + &(&covector[2] * &self.0[2])
    }

    pub fn scale(&self, factor: &Jet) -> VectorJet {
        VectorJet(self.0.each_ref().map(|c| c * factor))
    }

    pub fn sub(&self, other: &VectorJet) -> VectorJet {
        VectorJet([0, 1, 2].map(|i| &self.0[i] - &other.0[i]))
    }

    pub fn add(&self, other: &VectorJet) -> VectorJet {
        VectorJet([0, 1, 2].map(|i| &self.0[i] + &other.0[i]))
    }
}

/// The balanced coframe `(α, α̃, ds)`, its dual frame `(D, D̃, X)` and the
/// generating invariant `I`, all as jets at one point.
///
/// `order` is the jet order of `f`; derived quantities carry less.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameJets {
    pub point: Point,
    pub order: usize,
    pub sigma: Orientation,
    /// Whether the roles of the two distributions were swapped.
    pub relabeled: bool,
    pub f: Jet,
    pub alpha: [Jet; 3],
    pub alpha_t: [Jet; 3],
    /// `dp` coefficient of `ds`.
    pub ds: Jet,
    pub d: VectorJet,
    pub d_t: VectorJet,
    pub x: VectorJet,
    pub i: Jet,
}

impl FrameJets {
    pub fn at(pair: &ContactPair, q: Point, order: usize, eps_den: f64) -> Result<Self> {
        check_admissible(pair, q, eps_den).into_result()?;
        // f_p and f_pp are needed even for the order-0 frame
        let f_full = pair.f_jet(q, order + 2)?;
        let f = f_full.truncate(order);
        let p = Jet::seed_variable(Var::P, q, order + 2);
        let fp = f_full.partial(Var::P)?;
        let fpp = fp.partial(Var::P)?;

        let sigma = Orientation::from_sign(fp.value());
        let sep = if q.p - f.value() > 0.0 { 1.0 } else { -1.0 };
        let abs_fp = fp.scale(sigma.sign());
        let p_minus_f = &p - &f_full;
        let abs_p_minus_f = p_minus_f.scale(sep);

        let inv_sqrt_fp = abs_fp.powf(-0.5)?;
        let c = inv_sqrt_fp.scale(sep);
        let ds = abs_fp.powf(0.5)?.div(&abs_p_minus_f)?;
        let axis = (&abs_p_minus_f * &inv_sqrt_fp).truncate(order);

        let one = Jet::constant(1.0, q, order);
        let zero = Jet::zero(q, order);
        let alpha = [-&p.truncate(order), one.clone(), zero.clone()];
        let alpha_t = [-&(&f * &c), c.truncate(order), zero.clone()];

        let inv_f_minus_p = (-&p_minus_f).truncate(order).recip()?;
        let d = VectorJet([inv_f_minus_p.clone(), &f * &inv_f_minus_p, zero.clone()]);
        let ds_o = ds.truncate(order);
        let d_t = VectorJet([ds_o.clone(), &ds_o * &p, zero.clone()]);
        let x = VectorJet([zero.clone(), zero, axis]);

        // I = |f_p|^{-1/2} (1 + f_p + (p - f) f_pp / (2 f_p)) sign(p - f)
        let ratio = fpp.div(&fp)?;
        let bracket = (&fp + &(&p_minus_f * &ratio).scale(0.5)).add_scalar(1.0);
        let i = (&bracket * &c).truncate(order);

        Ok(Self {
            point: q,
            order,
            sigma,
            relabeled: false,
            f,
            alpha,
            alpha_t,
            ds: ds_o,
            d,
            d_t,
            x,
            i,
        })
    }

    /// The frame obtained by exchanging the roles of `ξ` and `ξ̃`.
    ///
    /// The new balanced pair is `(α̃, -σα)`; the axis field `X` is unchanged,
    /// the generating invariant changes sign and the dual fields become
    /// `(D̃, -σD)`.
    pub fn relabeled(&self) -> Self {
        let s = -self.sigma.sign();
        let mut out = self.clone();
        out.relabeled = !self.relabeled;
        out.alpha = self.alpha_t.clone();
        out.alpha_t = self.alpha.each_ref().map(|c| c.scale(s));
        out.d = self.d_t.clone();
        out.d_t = VectorJet(self.d.0.each_ref().map(|c| c.scale(s)));
        out.i = -&self.i;
        out
    }
}

type ScalarFn = dyn Fn(Point, usize) -> Result<Jet> + Send + Sync;

/// A function on the chart, evaluable to a jet of any requested order.
#[derive(Clone)]
pub struct ScalarField(Arc<ScalarFn>);

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarField(..)")
    }
}

impl ScalarField {
    pub fn new(eval: impl Fn(Point, usize) -> Result<Jet> + Send + Sync + 'static) -> Self {
        Self(Arc::new(eval))
    }

    pub fn from_expr(expr: Expr, params: Params) -> Self {
        Self::new(move |q, order| evaluate_jet(&expr, q, order, &params))
    }

    pub fn constant(value: f64) -> Self {
        Self::new(move |q, order| Ok(Jet::constant(value, q, order)))
    }

    pub fn eval(&self, q: Point, order: usize) -> Result<Jet> {
        let jet = (self.0)(q, order)?;
        if jet.order() < order {
            return Err(Error::InsufficientOrder {
                what: "scalar field",
                needed: order,
                available: jet.order(),
            });
        }
        Ok(jet.truncate(order))
    }

    pub fn value(&self, q: Point) -> Result<f64> {
        Ok(self.eval(q, 0)?.value())
    }
}

#[derive(Debug, Clone)]
pub struct VectorField(pub [ScalarField; 3]);

impl VectorField {
    pub fn from_exprs(components: [Expr; 3], params: &Params) -> Self {
        Self(components.map(|e| ScalarField::from_expr(e, params.clone())))
    }

    pub fn eval(&self, q: Point, order: usize) -> Result<VectorJet> {
        let [a, b, c] = &self.0;
        Ok(VectorJet([a.eval(q, order)?, b.eval(q, order)?, c.eval(q, order)?]))
    }

    pub fn values(&self, q: Point) -> Result<[f64; 3]> {
        Ok(self.eval(q, 0)?.values())
    }
}

/// `V·g` as a new scalar field.
pub fn directional_derivative(v: &VectorField, g: &ScalarField) -> ScalarField {
    let (v, g) = (v.clone(), g.clone());
    ScalarField::new(move |q, order| v.eval(q, order)?.apply(&g.eval(q, order + 1)?))
}

pub fn lie_bracket(v: &VectorField, w: &VectorField) -> VectorField {
    let component = |i: usize| {
        let (v, w) = (v.clone(), w.clone());
        ScalarField::new(move |q, order| {
            let (vj, wj) = (v.eval(q, order + 1)?, w.eval(q, order + 1)?);
            Ok(&vj.apply(&wj.0[i])? - &wj.apply(&vj.0[i])?)
        })
    };
    VectorField([component(0), component(1), component(2)])
}

/// The frame `(D, D̃, X)` dual to the balanced coframe `(α, α̃, ds)`.
pub fn dual_frame(pair: &ContactPair, eps_den: f64) -> (VectorField, VectorField, VectorField) {
    let field = |which: usize| {
        let component = |i: usize| {
            let pair = pair.clone();
            ScalarField::new(move |q, order| {
                let frame = FrameJets::at(&pair, q, order, eps_den)?;
                let v = match which {
                    0 => &frame.d,
                    1 => &frame.d_t,
                    _ => &frame.x,
                };
                Ok(v.0[i].clone())
            })
        };
        VectorField([component(0), component(1), component(2)])
    };
    (field(0), field(1), field(2))
}

/// The generating invariant `I` as a scalar field.
pub fn generating_invariant_field(pair: &ContactPair, eps_den: f64) -> ScalarField {
    let pair = pair.clone();
    ScalarField::new(move |q, order| Ok(FrameJets::at(&pair, q, order + 2, eps_den)?.i))
}

/// Coordinate function as a scalar field.
pub fn coordinate(var: Var) -> ScalarField {
    ScalarField::new(move |q, order| Ok(Jet::seed_variable(var, q, order)))
}
