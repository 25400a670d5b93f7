//! Pointwise invariants of a contact pair and the identities linking them.
//!
//! Everything is computed from a single [`FrameJets`] evaluation. The frame
//! is built so that `f` carries jet order `order`; each frame derivative then
//! costs one order, and every quantity below states how many derivatives of
//! `f` it consumes (its depth).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use crate::error::{Error, Result};
use crate::expr::{Point, Var};
use crate::frames::{check_admissible, ContactPair, FrameJets, Orientation, VectorJet};
use crate::jet::Jet;

/// Jet order of `f` used when nothing else is requested; enough for every
/// branch.
pub const DEFAULT_ORDER: usize = 8;

/// Derivatives of `f` consumed by each quantity.
pub mod depth {
    pub const GENERATING: usize = 2;
    pub const SCHWARZIAN: usize = 3;
    pub const FIRST_DERIVATIVES: usize = 3;
    pub const DEPENDENCE: usize = 4;
    pub const J_PRIME: usize = 4;
    pub const G: usize = 6;
    pub const LAMBDA: usize = 5;
    pub const DETERMINANTS: usize = 8;
    pub const BRANCH_IV: usize = 6;
}

/// Names of the entries of [`InvariantRecord::defects`].
///
/// Zero tests are stored magnitude-normalized; the classifier compares them
/// with `ε_zero` directly.
pub mod defect {
    pub const SCHWARZIAN: &str = "S";
    pub const SCHWARZIAN_IDENTITY: &str = "S-2I'ds^2";
    pub const DI: &str = "dI";
    pub const J_PRIME: &str = "J'";
    pub const J_RICCATI: &str = "J'-(1+IJ+σJ^2)";
    pub const G: &str = "G";
    pub const DEPENDENCE: &str = "dI^dI'";
    pub const LAMBDA_SQ: &str = "lambda^2";
    pub const DETS: [&str; 4] = ["det1", "det2", "det3", "det4"];
    pub const N1_M2: &str = "n1-m2-2";
    /// `n_1 - m_2 + 2 sign(Y·h̃ + Ỹ·h)`, which also covers positive `Λ`.
    pub const N1_M2_SIGNED: &str = "n1-m2+2sgn";
    pub const K_RICCATI: &str = "K'-(1+IK+σK^2)";
    pub const K_K1: &str = "KK1-K2";
    pub const K_H1: &str = "KH1-H2";
    pub const L_IDENTITY: &str = "KL1-L2-(1+KI+σK^2-K')";
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub zero: f64,
    pub den: f64,
    /// Fraction of admissible points that must agree on a region type.
    pub unanimity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero: 1e-8,
            den: 1e-6,
            unanimity: 0.95,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.zero) || !positive(self.den) {
            return Err(Error::InvalidParameter(
                "tolerances must be positive and finite".to_string(),
            ));
        }
        if !(self.unanimity > 0.0 && self.unanimity <= 1.0) {
            return Err(Error::InvalidParameter(
                "unanimity must lie in (0, 1]".to_string(),
            ));
        }
        Ok(())
    }
}

/// `|v| / max(1, |t_1|, ..)`: the zero test used throughout.
pub fn normalized(v: f64, terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(1.0_f64, |m, t| m.max(libm::fabs(*t)));
    libm::fabs(v) / scale
}

fn det(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    (a * d - b * c, normalized(a * d - b * c, &[a * d, b * c]))
}

fn require(order: usize, needed: usize, what: &'static str) -> Result<()> {
    if order < needed {
        return Err(Error::InsufficientOrder {
            what,
            needed,
            available: order,
        });
    }
    Ok(())
}

/// Frame with `f` at jet order `order`.
fn frame(pair: &ContactPair, q: Point, order: usize, tol: &Tolerances) -> Result<FrameJets> {
    require(order, depth::GENERATING, "generating invariant")?;
    FrameJets::at(pair, q, order - depth::GENERATING, tol.den)
}

/// Coefficient of `(dp)^2` of the Schwarzian invariant, with the larger of
/// its two terms for normalization.
fn schwarzian_parts(pair: &ContactPair, q: Point) -> Result<(f64, f64)> {
    let f = pair.f_jet(q, depth::SCHWARZIAN)?;
    let fp = f.partial(Var::P)?;
    let ratio = fp.partial(Var::P)?.div(&fp)?;
    let d_ratio = ratio.partial(Var::P)?.value();
    let half_sq = 0.5 * ratio.value() * ratio.value();
    Ok((d_ratio - half_sq, libm::fabs(d_ratio).max(half_sq)))
}

/// Coefficient of `(dp)^2` of the Schwarzian invariant at `q`.
///
/// Only the contact condition `f_p ≠ 0` is required; the formula does not
/// involve `f - p`.
pub fn schwarzian(pair: &ContactPair, q: Point, tol: &Tolerances) -> Result<f64> {
    let adm = check_admissible(pair, q, tol.den);
    if let Some(err) = adm.evaluation_error {
        return Err(Error::Inadmissible { point: q, reason: err });
    }
    if !adm.contact_ok {
        return Err(Error::Inadmissible {
            point: q,
            reason: format!("contact condition fails: |f_p| = {:e}", adm.contact),
        });
    }
    Ok(schwarzian_parts(pair, q)?.0)
}

/// `(I, I')` with `I' = X·I`.
pub fn generating_invariant(
    pair: &ContactPair,
    q: Point,
    order: usize,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    require(order, depth::FIRST_DERIVATIVES, "I'")?;
    let fr = frame(pair, q, order, tol)?;
    Ok((fr.i.value(), fr.x.apply(&fr.i)?.value()))
}

/// First-order data of `I` in the balanced frame.
#[derive(Debug, Clone)]
struct Differentials {
    i: Jet,
    di: Jet,
    dti: Jet,
    ip: Jet,
}

impl Differentials {
    fn new(fr: &FrameJets) -> Result<Self> {
        Ok(Self {
            i: fr.i.clone(),
            di: fr.d.apply(&fr.i)?,
            dti: fr.d_t.apply(&fr.i)?,
            ip: fr.x.apply(&fr.i)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchII {
    pub j1: f64,
    pub j2: f64,
    pub j: f64,
    pub j_prime: f64,
    /// `1 + IJ + σJ^2`, the value `J'` must take.
    pub riccati: f64,
    /// `H, F, G, H_1, H_2`; only computed when `J' ≠ 0`.
    pub h: Option<f64>,
    pub f: Option<f64>,
    /// Reported as `σ(J H_1 - H_2)/J'`.
    pub g: Option<f64>,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub relabeled: bool,
    /// Normalized size of `J'` used for the zero test.
    pub j_prime_test: f64,
    /// Normalized size of `J H_1 - H_2` used for the zero test.
    pub g_test: Option<f64>,
    pub order_used: usize,
}

pub fn branch_ii_invariants(
    pair: &ContactPair,
    q: Point,
    order: usize,
    tol: &Tolerances,
) -> Result<BranchII> {
    require(order, depth::J_PRIME, "J'")?;
    let mut fr = frame(pair, q, order, tol)?;
    let mut dif = Differentials::new(&fr)?;
    if libm::fabs(dif.di.value()) < libm::fabs(dif.dti.value()) {
        fr = fr.relabeled();
        dif = Differentials::new(&fr)?;
    }
    let j1 = dif.di.value();
    if libm::fabs(j1) <= tol.den {
        return Err(indeterminate(q, "D·I vanishes for both labelings"));
    }
    let sigma = fr.sigma.sign();
    let jj = dif.dti.div(&dif.di)?;
    let jp = fr.x.apply(&jj)?;
    let (i, j, j_prime) = (dif.i.value(), jj.value(), jp.value());
    let riccati = 1.0 + i * j + sigma * j * j;
    let j_prime_test = normalized(j_prime, &[1.0, i * j, j * j]);

    let mut out = BranchII {
        j1,
        j2: dif.dti.value(),
        j,
        j_prime,
        riccati,
        h: None,
        f: None,
        g: None,
        h1: None,
        h2: None,
        relabeled: fr.relabeled,
        j_prime_test,
        g_test: None,
        order_used: depth::J_PRIME,
    };
    if j_prime_test <= tol.zero || order < depth::G {
        return Ok(out);
    }
    if libm::fabs(j_prime) <= tol.den {
        return Err(indeterminate(q, "J' too small to normalize the frame"));
    }

    let dj = fr.d.apply(&jj)?;
    let dtj = fr.d_t.apply(&jj)?;
    let denom = (&jp * &dif.di).recip()?;
    let x1 = fr.d.scale(&jp).sub(&fr.x.scale(&dj)).scale(&denom);
    let x2 = fr.d_t.scale(&jp).sub(&fr.x.scale(&dtj)).scale(&denom);
    let bracket = x1.bracket(&x2)?;
    let h = &(-&(&dif.di * &bracket.pair(&fr.alpha_t))) + &jj.div(&jp)?;
    let (h1, h2) = (x1.apply(&h)?.value(), x2.apply(&h)?.value());

    let f = ((i * j / 2.0 + 1.0) * h1 + (sigma * j + i / 2.0) * h2) / j_prime;
    let g = sigma * (j * h1 - h2) / j_prime;
    out.h = Some(h.value());
    out.f = Some(f);
    out.g = Some(g);
    out.h1 = Some(h1);
    out.h2 = Some(h2);
    out.g_test = Some(normalized(j * h1 - h2, &[j * h1, h2]));
    out.order_used = depth::G;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchIII {
    /// `Y·h̃ + Ỹ·h`, whose absolute value is `λ^2`.
    pub lambda_sq: f64,
    pub lambda: f64,
    pub lambda_sq_test: f64,
    /// Present when `λ ≠ 0`.
    pub frame_data: Option<BranchIIIFrame>,
    pub order_used: usize,
}

/// `m`, `n` and their derivatives along `Y_1`, `Y_2` (`f_ij = Y_j(Y_i f)`).
#[derive(Debug, Clone, PartialEq)]
pub struct BranchIIIFrame {
    pub m: f64,
    pub n: f64,
    pub m1: f64,
    pub m2: f64,
    pub n1: f64,
    pub n2: f64,
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
    pub n21: f64,
    pub n22: f64,
    pub dets: [f64; 4],
    pub det_tests: [f64; 4],
    /// `n_1 - m_2 - 2`
    pub consistency: f64,
    /// `n_1 - m_2 + 2 sign(Y·h̃ + Ỹ·h)`
    pub signed_consistency: f64,
}

pub fn branch_iii_invariants(
    pair: &ContactPair,
    q: Point,
    order: usize,
    tol: &Tolerances,
) -> Result<BranchIII> {
    require(order, depth::LAMBDA, "lambda")?;
    let fr = frame(pair, q, order, tol)?;
    let dif = Differentials::new(&fr)?;
    if libm::fabs(dif.ip.value()) <= tol.den {
        return Err(indeterminate(q, "I' vanishes"));
    }
    let inv_ip = dif.ip.recip()?;
    let y = fr.d.sub(&fr.x.scale(&(&dif.di * &inv_ip)));
    let yt = fr.d_t.sub(&fr.x.scale(&(&dif.dti * &inv_ip)));
    let b = y.bracket(&yt)?;
    let h = -&b.pair(&fr.alpha_t);
    let ht = -&b.pair(&fr.alpha);
    let (a, c) = (y.apply(&ht)?, yt.apply(&h)?);
    let lam_sq = &a + &c;
    let lambda_sq = lam_sq.value();
    let lambda_sq_test = normalized(lambda_sq, &[a.value(), c.value()]);
    let mut out = BranchIII {
        lambda_sq,
        lambda: libm::sqrt(libm::fabs(lambda_sq)),
        lambda_sq_test,
        frame_data: None,
        order_used: depth::LAMBDA,
    };
    if lambda_sq_test <= tol.zero || order < depth::DETERMINANTS {
        return Ok(out);
    }
    if out.lambda <= tol.den {
        return Err(indeterminate(q, "lambda too small to normalize the frame"));
    }

    let lam = if lambda_sq > 0.0 { lam_sq } else { -&lam_sq }.sqrt()?;
    let inv_lam = lam.recip()?;
    let (y1, y2) = (y.scale(&inv_lam), yt.scale(&inv_lam));
    let b12 = y1.bracket(&y2)?;
    let m = (&lam * &b12.pair(&fr.alpha_t)).scale(-2.0);
    let n = (&lam * &b12.pair(&fr.alpha)).scale(2.0);
    let (m1, m2) = (y1.apply(&m)?, y2.apply(&m)?);
    let (n1, n2) = (y1.apply(&n)?.value(), y2.apply(&n)?);
    let (m11, m12) = (y1.apply(&m1)?.value(), y2.apply(&m1)?.value());
    let (m21, m22) = (y1.apply(&m2)?.value(), y2.apply(&m2)?.value());
    let (n21, n22) = (y1.apply(&n2)?.value(), y2.apply(&n2)?.value());
    let (m1, m2, n2) = (m1.value(), m2.value(), n2.value());

    let parts = [
        det(m1, m2, n1, n2),
        det(m1, m2, n21, n22),
        det(m1, m2, m21, m22),
        det(m1, m2, m11, m12),
    ];
    out.frame_data = Some(BranchIIIFrame {
        m: m.value(),
        n: n.value(),
        m1,
        m2,
        n1,
        n2,
        m11,
        m12,
        m21,
        m22,
        n21,
        n22,
        dets: parts.map(|d| d.0),
        det_tests: parts.map(|d| d.1),
        consistency: n1 - m2 - 2.0,
        signed_consistency: n1 - m2 + 2.0 * libm::copysign(1.0, lambda_sq),
    });
    out.order_used = depth::DETERMINANTS;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchIV {
    pub k: f64,
    pub k_prime: f64,
    pub k1: f64,
    pub k2: f64,
    pub h: f64,
    pub h1: f64,
    pub h2: f64,
    pub l1: f64,
    pub l2: f64,
    pub relabeled: bool,
    /// Normalized `K' - (1 + IK + σK^2)`, `K K_1 - K_2`, `K H_1 - H_2`.
    pub symmetry_tests: [f64; 3],
    /// Normalized `K L_1 - L_2 - (1 + KI + σK^2 - K')`.
    pub l_identity: f64,
}

fn iv_denominators(fr: &FrameJets) -> Result<(Differentials, Jet, Jet, Jet, Jet, Jet)> {
    let dif = Differentials::new(fr)?;
    let ipp = fr.x.apply(&dif.ip)?;
    let dip = fr.d.apply(&dif.ip)?;
    let dtip = fr.d_t.apply(&dif.ip)?;
    let k1 = &(&dif.ip * &dip) - &(&ipp * &dif.di);
    let k2 = &(&dif.ip * &dtip) - &(&ipp * &dif.dti);
    Ok((dif, ipp, dip, dtip, k1, k2))
}

pub fn branch_iv_invariants(
    pair: &ContactPair,
    q: Point,
    order: usize,
    tol: &Tolerances,
) -> Result<BranchIV> {
    require(order, depth::BRANCH_IV, "branch IV invariants")?;
    let mut fr = frame(pair, q, order, tol)?;
    let mut parts = iv_denominators(&fr)?;
    if libm::fabs(parts.4.value()) < libm::fabs(parts.5.value()) {
        fr = fr.relabeled();
        parts = iv_denominators(&fr)?;
    }
    let (dif, ipp, dip, _dtip, k1, k2) = parts;
    if libm::fabs(k1.value()) <= tol.den || libm::fabs(dif.ip.value()) <= tol.den {
        return Err(indeterminate(q, "I'(D·I') - I''(D·I) vanishes for both labelings"));
    }
    let sigma = fr.sigma.sign();
    let inv_k1 = k1.recip()?;
    let x1 = fr.d.scale(&dif.ip).sub(&fr.x.scale(&dif.di)).scale(&inv_k1);
    let x2 = fr.d_t.scale(&dif.ip).sub(&fr.x.scale(&dif.dti)).scale(&inv_k1);
    let kk = &k2 * &inv_k1;
    // D·I' - (I''/I') D·I = k1 / I'
    let coeff = &dip - &(&ipp.div(&dif.ip)? * &dif.di);
    let h = -&(&coeff * &x1.bracket(&x2)?.pair(&fr.alpha_t));

    let v = |field: &VectorJet, g: &Jet| -> Result<f64> { Ok(field.apply(g)?.value()) };
    let (k, i) = (kk.value(), dif.i.value());
    let k_prime = v(&fr.x, &kk)?;
    let (kd1, kd2) = (v(&x1, &kk)?, v(&x2, &kk)?);
    let (h1, h2) = (v(&x1, &h)?, v(&x2, &h)?);
    let (l1, l2) = (v(&x1, &ipp)?, v(&x2, &ipp)?);

    let riccati = 1.0 + i * k + sigma * k * k;
    let symmetry_tests = [
        normalized(k_prime - riccati, &[k_prime, 1.0, i * k, k * k]),
        normalized(k * kd1 - kd2, &[k * kd1, kd2]),
        normalized(k * h1 - h2, &[k * h1, h2]),
    ];
    let l_identity = normalized(
        k * l1 - l2 - (riccati - k_prime),
        &[k * l1, l2, riccati, k_prime],
    );
    Ok(BranchIV {
        k,
        k_prime,
        k1: kd1,
        k2: kd2,
        h: h.value(),
        h1,
        h2,
        l1,
        l2,
        relabeled: fr.relabeled,
        symmetry_tests,
        l_identity,
    })
}

/// Scaled size of `dI ∧ dI'`: the largest normalized 2×2 minor of the
/// component matrix of `(dI, dI')` in the balanced coframe.
pub fn dependence_defect(
    pair: &ContactPair,
    q: Point,
    order: usize,
    tol: &Tolerances,
) -> Result<f64> {
    require(order, depth::DEPENDENCE, "dependence defect")?;
    let fr = frame(pair, q, order, tol)?;
    let (dif, ipp, dip, dtip, _, _) = iv_denominators(&fr)?;
    let (a, b, c) = (dif.di.value(), dif.dti.value(), dif.ip.value());
    let (da, db, dc) = (dip.value(), dtip.value(), ipp.value());
    let minors = [det(a, b, da, db).1, det(a, c, da, dc).1, det(b, c, db, dc).1];
    Ok(minors.into_iter().fold(0.0, f64::max))
}

fn indeterminate(q: Point, reason: &str) -> Error {
    Error::Inadmissible {
        point: q,
        reason: format!("indeterminate: {reason}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BranchTag {
    IConst,
    II,
    IIIDep,
    IVIndep,
    Inadmissible,
}

impl BranchTag {
    pub fn name(self) -> &'static str {
        match self {
            BranchTag::IConst => "I-const",
            BranchTag::II => "II",
            BranchTag::IIIDep => "III-dep",
            BranchTag::IVIndep => "IV-indep",
            BranchTag::Inadmissible => "inadmissible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    None,
    II(BranchII),
    III(BranchIII),
    IV(BranchIV),
}

/// Whether the record could be completed, and why not.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Complete,
    /// The point fails admissibility or an expression is undefined there.
    Inadmissible(String),
    /// Admissible, but a denominator or the jet order was insufficient.
    Indeterminate(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantRecord {
    pub q: Point,
    pub sigma: Option<Orientation>,
    pub s: f64,
    pub i: f64,
    pub i_prime: f64,
    /// `dp` coefficient of `ds`.
    pub ds: f64,
    /// `(D·I, D̃·I)`
    pub di: (f64, f64),
    pub branch: BranchTag,
    pub payload: Payload,
    pub defects: BTreeMap<String, f64>,
    pub order_used: usize,
    pub status: Status,
}

impl InvariantRecord {
    fn empty(q: Point) -> Self {
        Self {
            q,
            sigma: None,
            s: f64::NAN,
            i: f64::NAN,
            i_prime: f64::NAN,
            ds: f64::NAN,
            di: (f64::NAN, f64::NAN),
            branch: BranchTag::Inadmissible,
            payload: Payload::None,
            defects: BTreeMap::new(),
            order_used: 0,
            status: Status::Complete,
        }
    }

    /// Evaluates every invariant the decision tree needs at `q`. Never fails:
    /// problems are reported through [`InvariantRecord::status`].
    pub fn compute(pair: &ContactPair, q: Point, order: usize, tol: &Tolerances) -> Self {
        let mut rec = Self::empty(q);
        if let Some(reason) = check_admissible(pair, q, tol.den).reason() {
            rec.status = Status::Inadmissible(reason);
            return rec;
        }
        if let Err(err) = rec.fill(pair, order, tol) {
            rec.status = match err {
                Error::InsufficientOrder { .. } => {
                    Status::Indeterminate(format!("order: {err}"))
                }
                Error::Inadmissible { reason, .. } if reason.starts_with("indeterminate") => {
                    Status::Indeterminate(reason)
                }
                other => {
                    rec.branch = BranchTag::Inadmissible;
                    rec.payload = Payload::None;
                    Status::Inadmissible(other.to_string())
                }
            };
            return rec;
        }
        if let Some(name) = rec.first_non_finite() {
            rec.branch = BranchTag::Inadmissible;
            rec.payload = Payload::None;
            rec.status = Status::Inadmissible(format!("non-finite value of {name}"));
        }
        rec
    }

    fn defect(&mut self, name: &str, value: f64) {
        self.defects.insert(name.to_string(), value);
    }

    fn fill(&mut self, pair: &ContactPair, order: usize, tol: &Tolerances) -> Result<()> {
        let q = self.q;
        require(order, depth::FIRST_DERIVATIVES, "dI")?;
        let fr = frame(pair, q, order, tol)?;
        let dif = Differentials::new(&fr)?;
        let (s, s_scale) = schwarzian_parts(pair, q)?;
        self.sigma = Some(fr.sigma);
        self.s = s;
        self.i = dif.i.value();
        self.i_prime = dif.ip.value();
        self.ds = fr.ds.value();
        self.di = (dif.di.value(), dif.dti.value());
        self.order_used = depth::FIRST_DERIVATIVES;

        let identity = 2.0 * self.i_prime * self.ds * self.ds;
        self.defect(defect::SCHWARZIAN, normalized(s, &[s_scale]));
        self.defect(
            defect::SCHWARZIAN_IDENTITY,
            normalized(s - identity, &[s, identity]),
        );

        if self.defects[defect::SCHWARZIAN] <= tol.zero {
            let di_test = [self.di.0, self.di.1, self.i_prime]
                .into_iter()
                .fold(0.0, |m: f64, v| m.max(normalized(v, &[self.i])));
            self.defect(defect::DI, di_test);
            if di_test <= tol.zero {
                self.branch = BranchTag::IConst;
                return Ok(());
            }
            self.branch = BranchTag::II;
            let ii = branch_ii_invariants(pair, q, order, tol)?;
            self.defect(defect::J_PRIME, ii.j_prime_test);
            self.defect(
                defect::J_RICCATI,
                normalized(ii.j_prime - ii.riccati, &[ii.j_prime, ii.riccati]),
            );
            self.order_used = ii.order_used;
            let needs_g = ii.j_prime_test > tol.zero;
            if let Some(g) = ii.g_test {
                self.defect(defect::G, g);
            }
            self.payload = Payload::II(ii);
            if needs_g {
                require(order, depth::G, "G")?;
            }
            return Ok(());
        }

        let dependence = dependence_defect(pair, q, order, tol)?;
        self.defect(defect::DEPENDENCE, dependence);
        self.order_used = depth::DEPENDENCE;
        if dependence <= tol.zero {
            self.branch = BranchTag::IIIDep;
            let iii = branch_iii_invariants(pair, q, order, tol)?;
            self.defect(defect::LAMBDA_SQ, iii.lambda_sq_test);
            self.order_used = iii.order_used;
            let needs_dets = iii.lambda_sq_test > tol.zero;
            if let Some(fd) = &iii.frame_data {
                for (name, value) in defect::DETS.iter().zip(fd.det_tests) {
                    self.defect(name, value);
                }
                self.defect(
                    defect::N1_M2,
                    normalized(fd.consistency, &[fd.n1, fd.m2, 2.0]),
                );
                self.defect(
                    defect::N1_M2_SIGNED,
                    normalized(fd.signed_consistency, &[fd.n1, fd.m2, 2.0]),
                );
            }
            self.payload = Payload::III(iii);
            if needs_dets {
                require(order, depth::DETERMINANTS, "branch III determinants")?;
            }
            return Ok(());
        }

        self.branch = BranchTag::IVIndep;
        let iv = branch_iv_invariants(pair, q, order, tol)?;
        self.defect(defect::K_RICCATI, iv.symmetry_tests[0]);
        self.defect(defect::K_K1, iv.symmetry_tests[1]);
        self.defect(defect::K_H1, iv.symmetry_tests[2]);
        self.defect(defect::L_IDENTITY, iv.l_identity);
        self.order_used = depth::BRANCH_IV;
        self.payload = Payload::IV(iv);
        Ok(())
    }

    /// Named scalar entries of the record and its payload, in a fixed order.
    pub fn values(&self) -> alloc::vec::Vec<(&'static str, f64)> {
        let mut out = alloc::vec![
            ("S", self.s),
            ("I", self.i),
            ("I'", self.i_prime),
            ("ds", self.ds),
            ("D.I", self.di.0),
            ("D~.I", self.di.1),
        ];
        let opt = |out: &mut alloc::vec::Vec<_>, name, v: Option<f64>| {
            if let Some(v) = v {
                out.push((name, v));
            }
        };
        match &self.payload {
            Payload::None => {}
            Payload::II(ii) => {
                out.extend([
                    ("j1", ii.j1),
                    ("j2", ii.j2),
                    ("J", ii.j),
                    ("J'", ii.j_prime),
                ]);
                opt(&mut out, "H", ii.h);
                opt(&mut out, "F", ii.f);
                opt(&mut out, "G", ii.g);
                opt(&mut out, "H1", ii.h1);
                opt(&mut out, "H2", ii.h2);
            }
            Payload::III(iii) => {
                out.extend([("lambda", iii.lambda), ("lambda^2", iii.lambda_sq)]);
                if let Some(fd) = &iii.frame_data {
                    out.extend([
                        ("m", fd.m),
                        ("n", fd.n),
                        ("m1", fd.m1),
                        ("m2", fd.m2),
                        ("n1", fd.n1),
                        ("n2", fd.n2),
                        ("det1", fd.dets[0]),
                        ("det2", fd.dets[1]),
                        ("det3", fd.dets[2]),
                        ("det4", fd.dets[3]),
                    ]);
                }
            }
            Payload::IV(iv) => out.extend([
                ("K", iv.k),
                ("K'", iv.k_prime),
                ("K1", iv.k1),
                ("K2", iv.k2),
                ("H", iv.h),
                ("H1", iv.h1),
                ("H2", iv.h2),
                ("L1", iv.l1),
                ("L2", iv.l2),
            ]),
        }
        out
    }

    pub fn relabeled(&self) -> bool {
        match &self.payload {
            Payload::II(ii) => ii.relabeled,
            Payload::IV(iv) => iv.relabeled,
            _ => false,
        }
    }

    fn first_non_finite(&self) -> Option<String> {
        self.values()
            .into_iter()
            .find(|(_, v)| !v.is_finite())
            .map(|(name, _)| name.to_string())
            .or_else(|| {
                self.defects
                    .iter()
                    .find(|(_, v)| !v.is_finite())
                    .map(|(name, _)| name.clone())
            })
    }
}
