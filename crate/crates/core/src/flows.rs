//! Fixed-step RK4 integration along the normalized axis field
//! `X = |p - f| / |f_p|^{1/2} ∂p`, which moves `p` only.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{Point, Var};
use crate::frames::{ContactPair, FrameJets, Orientation};
use crate::invariants::Tolerances;
use crate::jet::Jet;

/// Escape threshold for Riccati solutions.
pub const BLOWUP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub s: f64,
    pub point: Point,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub samples: Vec<FlowSample>,
    pub step: f64,
    pub method: &'static str,
    /// Why integration stopped before `s_end`, if it did.
    pub breach: Option<Error>,
}

impl FlowResult {
    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("flow has an initial sample")
    }

    pub fn completed(&self) -> bool {
        self.breach.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralCheck {
    /// `½ ∫ S(X, X) ds`
    pub lhs: f64,
    /// `I(end) - I(start)`
    pub rhs: f64,
    pub gap: f64,
    pub flow: FlowResult,
}

/// Axis speed `dp/ds` at `q`, or the reason the point is not admissible.
fn speed(pair: &ContactPair, q: Point, eps_den: f64) -> Result<(f64, Jet)> {
    let f = pair.f_jet(q, 1)?;
    let sep = libm::fabs(q.p - f.value());
    let fp = libm::fabs(f.coeff([0, 0, 1]).unwrap_or(0.0));
    if !(sep > eps_den && fp > eps_den) {
        return Err(Error::Inadmissible {
            point: q,
            reason: format!("|p - f| = {sep:e}, |f_p| = {fp:e}"),
        });
    }
    Ok((sep / libm::sqrt(fp), f))
}

fn steps(s_end: f64, step: f64) -> Result<(usize, f64)> {
    if !(step.is_finite() && step > 0.0 && s_end.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "flow needs a positive step and finite end, got step {step}, end {s_end}"
        )));
    }
    let n = libm::ceil(libm::fabs(s_end) / step - 1e-9).max(0.0) as usize;
    Ok((n, if n == 0 { 0.0 } else { s_end / n as f64 }))
}

type Rhs<'a, const N: usize> = dyn Fn(&[f64; N]) -> Result<[f64; N]> + 'a;

fn rk4_step<const N: usize>(rhs: &Rhs<'_, N>, y: &[f64; N], h: f64) -> Result<[f64; N]> {
    let shift = |base: &[f64; N], k: &[f64; N], c: f64| {
        let mut out = *base;
        for i in 0..N {
            out[i] += c * k[i];
        }
        out
    };
    let k1 = rhs(y)?;
    let k2 = rhs(&shift(y, &k1, h / 2.0))?;
    let k3 = rhs(&shift(y, &k2, h / 2.0))?;
    let k4 = rhs(&shift(y, &k3, h))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Integrates `state' = rhs(state)` from `s = 0` to `s_end`; `state[0]` is
/// always `p`. `record` maps a state to its optional `rho` column.
fn integrate<const N: usize>(
    q0: Point,
    init: [f64; N],
    s_end: f64,
    step: f64,
    rhs: &Rhs<'_, N>,
    rho_slot: Option<usize>,
) -> Result<(FlowResult, [f64; N])> {
    let (n, h) = steps(s_end, step)?;
    let sample = |s: f64, y: &[f64; N]| FlowSample {
        s,
        point: Point::new(q0.x, q0.y, y[0]),
        rho: rho_slot.map(|i| y[i]),
    };
    let mut state = init;
    let mut result = FlowResult {
        samples: alloc::vec![sample(0.0, &state)],
        step: h,
        method: "rk4",
        breach: None,
    };
    for k in 1..=n {
        let s = s_end * k as f64 / n as f64;
        let last_good_s = result.last().s;
        match rk4_step(rhs, &state, h) {
            Ok(next) if next.iter().all(|v| v.is_finite()) => {
                state = next;
                result.samples.push(sample(s, &state));
                if let Some(i) = rho_slot {
                    if libm::fabs(state[i]) > BLOWUP {
                        result.breach = Some(Error::Blowup { s });
                        break;
                    }
                }
            }
            Ok(_) => {
                result.breach = Some(Error::FlowBreach {
                    last_good_s,
                    point: result.last().point,
                    reason: "non-finite state".into(),
                });
                break;
            }
            Err(err) => {
                let (point, reason) = match err {
                    Error::Inadmissible { point, reason } => (point, reason),
                    other => (result.last().point, format!("{other}")),
                };
                result.breach = Some(Error::FlowBreach {
                    last_good_s,
                    point,
                    reason,
                });
                break;
            }
        }
    }
    Ok((result, state))
}

fn at(q0: Point, p: f64) -> Point {
    Point::new(q0.x, q0.y, p)
}

pub fn integrate_axis_flow(
    pair: &ContactPair,
    q0: Point,
    s_end: f64,
    step: f64,
    tol: &Tolerances,
) -> Result<FlowResult> {
    speed(pair, q0, tol.den)?;
    let rhs = |y: &[f64; 1]| Ok([speed(pair, at(q0, y[0]), tol.den)?.0]);
    Ok(integrate(q0, [q0.p], s_end, step, &rhs, None)?.0)
}

fn generating(pair: &ContactPair, q: Point, tol: &Tolerances) -> Result<f64> {
    Ok(FrameJets::at(pair, q, 0, tol.den)?.i.value())
}

fn schwarzian_coef(f: &Jet) -> Result<f64> {
    let fp = f.partial(Var::P)?;
    let ratio = fp.partial(Var::P)?.div(&fp)?;
    Ok(ratio.partial(Var::P)?.value() - 0.5 * ratio.value() * ratio.value())
}

/// Compares `½ ∫ S(X, X) ds` along the flow with the change of `I`.
pub fn schwartz_integral_check(
    pair: &ContactPair,
    q0: Point,
    s_end: f64,
    step: f64,
    tol: &Tolerances,
) -> Result<IntegralCheck> {
    let start = generating(pair, q0, tol)?;
    let rhs = |y: &[f64; 2]| {
        let q = at(q0, y[0]);
        let (v, _) = speed(pair, q, tol.den)?;
        let s = schwarzian_coef(&pair.f_jet(q, 3)?)?;
        Ok([v, 0.5 * s * v * v])
    };
    let (flow, state) = integrate(q0, [q0.p, 0.0], s_end, step, &rhs, None)?;
    if let Some(err) = &flow.breach {
        return Err(err.clone());
    }
    let rhs_value = generating(pair, flow.last().point, tol)? - start;
    Ok(IntegralCheck {
        lhs: state[1],
        rhs: rhs_value,
        gap: libm::fabs(state[1] - rhs_value),
        flow,
    })
}

/// Solves `ρ' = 1 + Iρ + σρ^2` along the axis flow from `ρ(0) = rho0`.
pub fn solve_ricatti(
    pair: &ContactPair,
    q0: Point,
    rho0: f64,
    s_end: f64,
    step: f64,
    tol: &Tolerances,
) -> Result<FlowResult> {
    let (_, f0) = speed(pair, q0, tol.den)?;
    let sigma = Orientation::from_sign(f0.coeff([0, 0, 1]).unwrap_or(0.0)).sign();
    let rhs = |y: &[f64; 2]| {
        let q = at(q0, y[0]);
        let (v, _) = speed(pair, q, tol.den)?;
        let i = generating(pair, q, tol)?;
        let rho = y[1];
        Ok([v, 1.0 + i * rho + sigma * rho * rho])
    };
    Ok(integrate(q0, [q0.p, rho0], s_end, step, &rhs, Some(1))?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;

    fn pair(src: &str) -> ContactPair {
        ContactPair::parse(src, Params::new()).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn exponential_axis_flow() {
        let r = integrate_axis_flow(&pair("-p"), Point::new(0.0, 0.0, 1.0), 0.5, 1e-3, &tol())
            .unwrap();
        assert!(r.completed());
        assert_eq!(r.samples.len(), 501);
        assert!((r.last().point.p - core::f64::consts::E).abs() < 1e-8);
        assert!(r.samples.iter().all(|s| s.point.x == 0.0 && s.point.y == 0.0));

        let r = integrate_axis_flow(&pair("-p"), Point::new(0.0, 0.0, -1.0), 0.3, 1e-3, &tol())
            .unwrap();
        assert!((r.last().point.p + libm::exp(-0.6)).abs() < 1e-8);
    }

    #[test]
    fn flow_increases_p_for_the_reciprocal_pair() {
        let r = integrate_axis_flow(&pair("-1/(p+2)"), Point::new(0.0, 0.0, 0.0), 0.1, 1e-2, &tol())
            .unwrap();
        assert!(r.samples.windows(2).all(|w| w[1].point.p > w[0].point.p));
    }

    #[test]
    fn breach_reports_last_good_s() {
        // f_p = 3p^2 vanishes at p = 0, which the flow reaches in finite time
        // f_p = 2p vanishes at p = 0
        let r = integrate_axis_flow(&pair("p^3+2"), Point::new(0.0, 0.0, -0.5), 5.0, 1e-2, &tol())
            .unwrap();
        match &r.breach {
            Some(Error::FlowBreach { last_good_s, .. }) => {
                assert_eq!(*last_good_s, r.last().s);
                assert!(*last_good_s > 0.0 && *last_good_s < 5.0);
            }
            other => panic!("{other:?} {:?}", r.last()),
        }
    }

    #[test]
    fn integral_identity() {
        let c = schwartz_integral_check(&pair("-p"), Point::new(0.0, 0.0, 1.0), 0.2, 1e-3, &tol())
            .unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.rhs.abs() < 1e-12 && c.gap < 1e-12);
        let c = schwartz_integral_check(&pair("p^3"), Point::new(0.0, 0.0, 0.4), 0.2, 1e-3, &tol())
            .unwrap();
        assert!(c.gap < 1e-6, "{c:?}");
        assert!(c.rhs.abs() > 1e-3);
        let c = schwartz_integral_check(&pair("y+p^3"), Point::new(0.1, 0.1, 0.5), 0.1, 1e-3, &tol())
            .unwrap();
        assert!(c.gap < 1e-6, "{c:?}");
    }

    #[test]
    fn ricatti_solutions() {
        let r = solve_ricatti(&pair("-p"), Point::new(0.0, 0.0, 1.0), 0.0, 1.0, 1e-3, &tol())
            .unwrap();
        assert!((r.last().rho.unwrap() - libm::tanh(1.0)).abs() < 1e-8);
        let r = solve_ricatti(&pair("-p"), Point::new(0.0, 0.0, 1.0), 1.0, 1.0, 1e-3, &tol())
            .unwrap();
        assert!(r.samples.iter().all(|s| (s.rho.unwrap() - 1.0).abs() < 1e-10));
        let r = solve_ricatti(&pair("-1/(p+2)"), Point::new(0.0, 0.0, 0.0), -1.0, 1.0, 1e-3, &tol())
            .unwrap();
        assert!(r.samples.iter().all(|s| (s.rho.unwrap() + 1.0).abs() < 1e-10));
    }

    #[test]
    fn ricatti_blowup_is_reported() {
        // I = 2.5, σ = +1: ρ' = 1 + 2.5ρ + ρ^2 escapes from ρ = 1
        let r = solve_ricatti(&pair("4*p"), Point::new(0.0, 0.0, -1.0), 1.0, 5.0, 1e-3, &tol())
            .unwrap();
        assert!(matches!(r.breach, Some(Error::Blowup { .. })), "{:?}", r.breach);
    }
}
