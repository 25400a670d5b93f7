//! Contact lifts of plane vector fields, the infinitesimal-symmetry residual,
//! normal-form fixtures with their symmetry generators, and transforms of a
//! pair under lifted plane diffeomorphisms.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::classifier::{NormalForm, Region};
use crate::error::{Error, Result};
use crate::expr::{evaluate, evaluate_jet, parse_expression, Expr, Params, Point, Var};
use crate::frames::{check_admissible, ContactPair, Orientation, VectorField};

/// A vector field `u ∂x + v ∂y` on the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneField {
    pub u: Expr,
    pub v: Expr,
    pub params: Params,
}

impl PlaneField {
    pub fn new(u: Expr, v: Expr, params: Params) -> Result<Self> {
        for (name, e) in [("u", &u), ("v", &v)] {
            if e.depends_on(Var::P) {
                return Err(Error::InvalidParameter(format!(
                    "plane field component {name} = {e} depends on p"
                )));
            }
        }
        Ok(Self { u, v, params })
    }

    pub fn parse(u: &str, v: &str, params: Params) -> Result<Self> {
        Self::new(parse_expression(u)?, parse_expression(v)?, params)
    }

    /// `w = v_x + p v_y - p (u_x + p u_y)`, the `∂p` component of the lift.
    pub fn lift_w(&self) -> Expr {
        let p = Expr::var(Var::P);
        let (u, v) = (&self.u, &self.v);
        let u_total = Expr::add(u.derivative(Var::X), Expr::mul(p.clone(), u.derivative(Var::Y)));
        Expr::sub(
            Expr::add(v.derivative(Var::X), Expr::mul(p.clone(), v.derivative(Var::Y))),
            Expr::mul(p, u_total),
        )
    }
}

/// The lift `u ∂x + v ∂y + w ∂p`, which preserves `dy = p dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedField {
    pub u: Expr,
    pub v: Expr,
    pub w: Expr,
    pub params: Params,
}

impl LiftedField {
    pub fn to_vector_field(&self) -> VectorField {
        VectorField::from_exprs([self.u.clone(), self.v.clone(), self.w.clone()], &self.params)
    }
}

pub fn contact_lift(pf: &PlaneField) -> LiftedField {
    LiftedField {
        u: pf.u.clone(),
        v: pf.v.clone(),
        w: pf.lift_w(),
        params: pf.params.clone(),
    }
}

fn merged(a: &Params, b: &Params) -> Params {
    let mut out = a.clone();
    out.extend(b.iter().map(|(k, v)| (k.clone(), *v)));
    out
}

/// `f(v_y - f u_y) - (v f_y + w f_p) + v_x - (f u)_x` at `q`; zero exactly
/// when the lift of `pf` preserves `dy = f dx` there.
pub fn symmetry_residual(pair: &ContactPair, pf: &PlaneField, q: Point, eps_den: f64) -> Result<f64> {
    check_admissible(pair, q, eps_den).into_result()?;
    residual_unchecked(pair, pf, &pf.lift_w(), q)
}

fn residual_unchecked(pair: &ContactPair, pf: &PlaneField, w: &Expr, q: Point) -> Result<f64> {
    let params = merged(&pair.params, &pf.params);
    let f = pair.f_jet(q, 1)?;
    let u = evaluate_jet(&pf.u, q, 1, &params)?;
    let v = evaluate_jet(&pf.v, q, 1, &params)?;
    let w = evaluate(w, q, &params)?;
    let d = |j: &crate::jet::Jet, var: Var| {
        let mut mu = [0; 3];
        mu[var.slot()] = 1;
        j.coeff(mu).unwrap_or(0.0)
    };
    let fv = f.value();
    let (fx, fy, fp) = (d(&f, Var::X), d(&f, Var::Y), d(&f, Var::P));
    let (ux, uy, vx, vy) = (d(&u, Var::X), d(&u, Var::Y), d(&v, Var::X), d(&v, Var::Y));
    Ok(fv * (vy - fv * uy) - (v.value() * fy + w * fp) + vx - (fx * u.value() + fv * ux))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryCheck {
    pub max_residual: f64,
    pub worst_point: Option<Point>,
    pub passed: bool,
    /// The `∂p` component of the lift, for audit.
    pub w: Expr,
    pub checked: usize,
    pub excluded: usize,
}

pub fn verify_symmetry(
    pair: &ContactPair,
    pf: &PlaneField,
    region: &Region,
    tol: f64,
    eps_den: f64,
) -> SymmetryCheck {
    let w = pf.lift_w();
    let mut out = SymmetryCheck {
        max_residual: 0.0,
        worst_point: None,
        passed: true,
        w: w.clone(),
        checked: 0,
        excluded: 0,
    };
    for q in region.points() {
        if !check_admissible(pair, q, eps_den).passed() {
            out.excluded += 1;
            continue;
        }
        out.checked += 1;
        let r = match residual_unchecked(pair, pf, &w, q) {
            Ok(r) if r.is_finite() => libm::fabs(r),
            _ => f64::INFINITY,
        };
        if r > out.max_residual || out.worst_point.is_none() {
            out.max_residual = r.max(out.max_residual);
            out.worst_point = Some(q);
        }
    }
    out.passed = out.checked > 0 && out.max_residual <= tol;
    out
}

/// Parameters of a normal-form family.
#[derive(Debug, Clone, PartialEq)]
pub enum FixtureSpec {
    /// `f = c p`
    I1 { c: f64 },
    /// `f = -1/(p + c)` with `c^2 <= 4`
    I2 { c: f64 },
    /// `f = ∓1/(p + g(y))`; `Common` selects the upper sign.
    II1 { g: Expr, orientation: Orientation },
    /// `f = g(y) p`
    II2 { g: Expr },
    /// `dy = (p+a)/(p+b) dx`, `dy = (g(p)+a)/(g(p)+b) dx`, rewritten in the
    /// normalized chart.
    III1 { a: Expr, b: Expr, g: Expr },
    /// `f = g(p)`
    III2 { g: Expr },
    /// `f = g(y, p)`
    IV { g: Expr },
}

fn expr(src: &str) -> Expr {
    parse_expression(src).expect("built-in fixture expression")
}

impl FixtureSpec {
    pub fn kind(&self) -> NormalForm {
        match self {
            FixtureSpec::I1 { .. } => NormalForm::I1,
            FixtureSpec::I2 { .. } => NormalForm::I2,
            FixtureSpec::II1 { .. } => NormalForm::II1,
            FixtureSpec::II2 { .. } => NormalForm::II2,
            FixtureSpec::III1 { .. } => NormalForm::III1,
            FixtureSpec::III2 { .. } => NormalForm::III2,
            FixtureSpec::IV { .. } => NormalForm::IV,
        }
    }

    /// Standard representative of each family.
    ///
    /// For III₁, `g` must not be a Möbius map (the composed pair would have
    /// vanishing Schwarzian) and `b - a` must not be constant (the pair then
    /// carries the larger III₂ algebra).
    pub fn standard(kind: NormalForm) -> Self {
        match kind {
            NormalForm::I1 => FixtureSpec::I1 { c: -1.0 },
            NormalForm::I2 => FixtureSpec::I2 { c: 2.0 },
            NormalForm::II1 => FixtureSpec::II1 {
                g: expr("y+3"),
                orientation: Orientation::Common,
            },
            NormalForm::II2 => FixtureSpec::II2 { g: expr("2+y") },
            NormalForm::III1 => FixtureSpec::III1 {
                a: expr("y"),
                b: expr("1+y^2"),
                g: expr("1+2*p+p^3"),
            },
            NormalForm::III2 => FixtureSpec::III2 { g: expr("p^3") },
            NormalForm::IV => FixtureSpec::IV { g: expr("y+p^3") },
        }
    }

    pub fn default_region(&self) -> Region {
        let p = match self.kind() {
            NormalForm::I1 | NormalForm::II2 => [-1.5, -0.5],
            NormalForm::I2 | NormalForm::II1 | NormalForm::III1 => [-0.2, 0.2],
            NormalForm::III2 | NormalForm::IV => [0.3, 0.7],
        };
        Region::centered(0.2, p, 5).expect("valid default region")
    }

    fn check_expr(&self, name: &str, e: &Expr, allowed: &[Var]) -> Result<()> {
        for var in Var::ALL {
            if !allowed.contains(&var) && e.depends_on(var) {
                return Err(Error::InvalidParameter(format!(
                    "{} parameter {name} = {e} may not depend on {}",
                    self.kind(),
                    var.name()
                )));
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        match self {
            FixtureSpec::I1 { c } if !(c.is_finite() && *c != 0.0) => {
                Err(Error::InvalidParameter(format!("I1 needs c != 0, got {c}")))
            }
            FixtureSpec::I2 { c } if !(c.is_finite() && c * c <= 4.0) => {
                Err(Error::InvalidParameter(format!("I2 needs c^2 <= 4, got c = {c}")))
            }
            FixtureSpec::II1 { g, .. } | FixtureSpec::II2 { g } => {
                self.check_expr("g", g, &[Var::Y])
            }
            FixtureSpec::III1 { a, b, g } => {
                self.check_expr("a", a, &[Var::Y])?;
                self.check_expr("b", b, &[Var::Y])?;
                self.check_expr("g", g, &[Var::P])
            }
            FixtureSpec::III2 { g } => self.check_expr("g", g, &[Var::P]),
            FixtureSpec::IV { g } => self.check_expr("g", g, &[Var::Y, Var::P]),
            _ => Ok(()),
        }
    }

    /// The pair in the normalized chart.
    pub fn pair(&self) -> Result<ContactPair> {
        self.validate()?;
        let p = || Expr::var(Var::P);
        let mut params = Params::new();
        let f = match self {
            FixtureSpec::I1 { c } => {
                params.insert("c".into(), *c);
                Expr::mul(Expr::param("c"), p())
            }
            FixtureSpec::I2 { c } => {
                params.insert("c".into(), *c);
                Expr::div(Expr::neg(Expr::constant(1.0)), Expr::add(p(), Expr::param("c")))
            }
            FixtureSpec::II1 { g, orientation } => {
                let num = match orientation {
                    Orientation::Common => Expr::neg(Expr::constant(1.0)),
                    Orientation::Opposite => Expr::constant(1.0),
                };
                Expr::div(num, Expr::add(p(), g.clone()))
            }
            FixtureSpec::II2 { g } => Expr::mul(g.clone(), p()),
            FixtureSpec::III1 { a, b, g } => {
                // p = (a - b p̂)/(p̂ - 1) inverts p̂ = (p + a)/(p + b)
                let old_p = Expr::div(
                    Expr::sub(a.clone(), Expr::mul(b.clone(), p())),
                    Expr::sub(p(), Expr::constant(1.0)),
                );
                let g_old = g.substitute_vars(&|v| (v == Var::P).then(|| old_p.clone()));
                Expr::div(Expr::add(g_old.clone(), a.clone()), Expr::add(g_old, b.clone()))
            }
            FixtureSpec::III2 { g } | FixtureSpec::IV { g } => g.clone(),
        };
        Ok(ContactPair::new(f, params).with_description(self.describe()))
    }

    pub fn describe(&self) -> String {
        match self {
            FixtureSpec::I1 { c } => format!("I1 c={c}"),
            FixtureSpec::I2 { c } => format!("I2 c={c}"),
            FixtureSpec::II1 { g, orientation } => format!("II1{orientation} g={g}"),
            FixtureSpec::II2 { g } => format!("II2 g={g}"),
            FixtureSpec::III1 { a, b, g } => format!("III1 a={a} b={b} g={g}"),
            FixtureSpec::III2 { g } => format!("III2 g={g}"),
            FixtureSpec::IV { g } => format!("IV g={g}"),
        }
    }

    /// Sampled generators of the symmetry algebra.
    pub fn generators(&self) -> Vec<PlaneField> {
        let field = |u: &str, v: &str, params: &Params| {
            PlaneField::parse(u, v, params.clone()).expect("built-in generator")
        };
        let none = Params::new();
        match self {
            FixtureSpec::I1 { .. } => ["1", "x", "x^2", "sin(x)"]
                .iter()
                .map(|u| field(u, "0", &none))
                .chain(["1", "y", "y^2", "sin(y)"].iter().map(|v| field("0", v, &none)))
                .collect(),
            FixtureSpec::I2 { c } => {
                let mut params = Params::new();
                params.insert("c".into(), *c);
                // u solves u_xx + u_yy = c u_xy, dv = -u_y dx + (u_x - c u_y) dy
                let mut out = vec![
                    field("1", "0", &params),
                    field("0", "1", &params),
                    field("x", "y", &params),
                    field("y", "-x-c*y", &params),
                    field("x^2-y^2", "2*x*y+c*y^2", &params),
                    field("x*y+c/2*x^2", "(y^2-x^2)/2", &params),
                ];
                if *c == 2.0 {
                    out.push(field("sin(x+y)", "-sin(x+y)", &params));
                    out.push(field("(x-y)*exp(x+y)", "(2-x+y)*exp(x+y)", &params));
                }
                out
            }
            FixtureSpec::II2 { .. } => ["1", "x", "x^2", "sin(x)"]
                .iter()
                .map(|u| field(u, "0", &none))
                .collect(),
            FixtureSpec::III2 { .. } => vec![
                field("1", "0", &none),
                field("0", "1", &none),
                field("x", "y", &none),
            ],
            FixtureSpec::II1 { .. } | FixtureSpec::III1 { .. } | FixtureSpec::IV { .. } => {
                vec![field("1", "0", &none)]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub spec: FixtureSpec,
    pub kind: NormalForm,
    pub pair: ContactPair,
    pub generators: Vec<PlaneField>,
    pub region: Region,
    /// Orientation of the pair on its region.
    pub orientation: Orientation,
}

/// Builds a fixture and checks that it is admissible on every point of its
/// region.
pub fn make_fixture(spec: FixtureSpec, region: Option<Region>, eps_den: f64) -> Result<Fixture> {
    let region = region.unwrap_or_else(|| spec.default_region());
    region.validate()?;
    let pair = spec.pair()?;
    let mut orientation = None;
    for q in region.points() {
        let adm = check_admissible(&pair, q, eps_den);
        if let Some(reason) = adm.reason() {
            return Err(Error::InvalidParameter(format!(
                "{} is not admissible at {q}: {reason}",
                spec.describe()
            )));
        }
        let fp = pair.f_jet(q, 1)?.coeff([0, 0, 1]).unwrap_or(0.0);
        let here = Orientation::from_sign(fp);
        if orientation.is_some_and(|o| o != here) {
            return Err(Error::InvalidParameter(format!(
                "{} changes orientation on its region",
                spec.describe()
            )));
        }
        orientation = Some(here);
    }
    Ok(Fixture {
        kind: spec.kind(),
        generators: spec.generators(),
        orientation: orientation.expect("region has points"),
        pair,
        region,
        spec,
    })
}

/// A plane diffeomorphism `(x, y) -> (F, G)` with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMap {
    pub f: Expr,
    pub g: Expr,
    pub f_inv: Expr,
    pub g_inv: Expr,
}

impl PlaneMap {
    pub fn parse(f: &str, g: &str, f_inv: &str, g_inv: &str) -> Result<Self> {
        let map = Self {
            f: parse_expression(f)?,
            g: parse_expression(g)?,
            f_inv: parse_expression(f_inv)?,
            g_inv: parse_expression(g_inv)?,
        };
        for e in [&map.f, &map.g, &map.f_inv, &map.g_inv] {
            if e.depends_on(Var::P) {
                return Err(Error::InvalidParameter(format!("plane map component {e} depends on p")));
            }
        }
        Ok(map)
    }

    fn partials(&self, q: Point, params: &Params) -> Result<[f64; 4]> {
        let f = evaluate_jet(&self.f, q, 1, params)?;
        let g = evaluate_jet(&self.g, q, 1, params)?;
        let c = |j: &crate::jet::Jet, mu| j.coeff(mu).unwrap_or(0.0);
        Ok([c(&f, [1, 0, 0]), c(&f, [0, 1, 0]), c(&g, [1, 0, 0]), c(&g, [0, 1, 0])])
    }

    /// Jacobian determinant `F_x G_y - F_y G_x`.
    pub fn jacobian(&self, q: Point, params: &Params) -> Result<f64> {
        let [fx, fy, gx, gy] = self.partials(q, params)?;
        Ok(fx * gy - fy * gx)
    }

    /// Image of `q` under the contact lift.
    pub fn lift_point(&self, q: Point, params: &Params) -> Result<Point> {
        let [fx, fy, gx, gy] = self.partials(q, params)?;
        Ok(Point::new(
            evaluate(&self.f, q, params)?,
            evaluate(&self.g, q, params)?,
            (gx + gy * q.p) / (fx + fy * q.p),
        ))
    }

    /// `∂P/∂p = Δ / (F_x + F_y p)^2` along the axis.
    pub fn axis_scale(&self, q: Point, params: &Params) -> Result<f64> {
        let [fx, fy, gx, gy] = self.partials(q, params)?;
        let den = fx + fy * q.p;
        Ok((fx * gy - fy * gx) / (den * den))
    }
}

/// Rewrites `pair` in the coordinates `(X, Y, P)` given by the contact lift
/// of `map`; the result again uses the names `x, y, p`.
///
/// The map is checked on the `(x, y)` points of `region`: its Jacobian must
/// exceed `eps_den` and the inverse must undo it.
pub fn transform_pair(
    pair: &ContactPair,
    map: &PlaneMap,
    region: &Region,
    eps_den: f64,
) -> Result<ContactPair> {
    let params = &pair.params;
    for q in region.points() {
        let jac = map.jacobian(q, params)?;
        if !(libm::fabs(jac) > eps_den) {
            return Err(Error::NotInvertible {
                point: q,
                reason: format!("Jacobian {jac:e}"),
            });
        }
        let image = Point::new(evaluate(&map.f, q, params)?, evaluate(&map.g, q, params)?, q.p);
        let back = (evaluate(&map.f_inv, image, params)?, evaluate(&map.g_inv, image, params)?);
        let scale = 1.0 + libm::fabs(q.x) + libm::fabs(q.y);
        if libm::fabs(back.0 - q.x) + libm::fabs(back.1 - q.y) > 1e-9 * scale {
            return Err(Error::NotInvertible {
                point: q,
                reason: format!("inverse maps back to ({}, {})", back.0, back.1),
            });
        }
    }

    let (fx, fy) = (map.f.derivative(Var::X), map.f.derivative(Var::Y));
    let (gx, gy) = (map.g.derivative(Var::X), map.g.derivative(Var::Y));
    let big_p = Expr::var(Var::P);
    // p = (G_x - P F_x)/(P F_y - G_y)
    let old_p = Expr::div(
        Expr::sub(gx.clone(), Expr::mul(big_p.clone(), fx.clone())),
        Expr::sub(Expr::mul(big_p, fy.clone()), gy.clone()),
    );
    let f_old = pair.f.substitute_vars(&|v| (v == Var::P).then(|| old_p.clone()));
    let slope = Expr::div(
        Expr::add(gx, Expr::mul(gy, f_old.clone())),
        Expr::add(fx, Expr::mul(fy, f_old)),
    );
    let f_new = slope.substitute_vars(&|v| match v {
        Var::X => Some(map.f_inv.clone()),
        Var::Y => Some(map.g_inv.clone()),
        Var::P => None,
    });
    let description = if pair.description.is_empty() {
        String::new()
    } else {
        format!("{} (transformed)", pair.description)
    };
    Ok(ContactPair::new(f_new, pair.params.clone()).with_description(description))
}
