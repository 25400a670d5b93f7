//! Pointwise normal-form decision tree and its aggregation over a grid.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::expr::Point;
use crate::frames::{ContactPair, Orientation};
use crate::invariants::{defect, BranchTag, InvariantRecord, Payload, Status, Tolerances};

/// A closed box `[x0,x1] × [y0,y1] × [p0,p1]` sampled on a regular grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub p: [f64; 2],
    pub counts: [usize; 3],
}

impl Region {
    pub fn new(x: [f64; 2], y: [f64; 2], p: [f64; 2], counts: [usize; 3]) -> Result<Self> {
        let region = Self { x, y, p, counts };
        region.validate()?;
        Ok(region)
    }

    /// `[-r, r]^2 × p` with `n` samples per axis.
    pub fn centered(r: f64, p: [f64; 2], n: usize) -> Result<Self> {
        Self::new([-r, r], [-r, r], p, [n; 3])
    }

    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [("x", self.x), ("y", self.y), ("p", self.p)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidRegion(format!(
                    "{name} interval [{lo}, {hi}] is empty or not finite"
                )));
            }
        }
        if self.counts.contains(&0) {
            return Err(Error::InvalidRegion("grid counts must be at least 1".to_string()));
        }
        Ok(())
    }

    fn axis([lo, hi]: [f64; 2], n: usize) -> Vec<f64> {
        if n == 1 {
            return alloc::vec![0.5 * (lo + hi)];
        }
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    }

    /// Grid points with `x` outermost and `p` innermost.
    pub fn points(&self) -> Vec<Point> {
        let xs = Self::axis(self.x, self.counts[0]);
        let ys = Self::axis(self.y, self.counts[1]);
        let ps = Self::axis(self.p, self.counts[2]);
        let mut out = Vec::with_capacity(xs.len() * ys.len() * ps.len());
        for &x in &xs {
            for &y in &ys {
                for &p in &ps {
                    out.push(Point::new(x, y, p));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The local normal forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NormalForm {
    I1,
    I2,
    II1,
    II2,
    III1,
    III2,
    IV,
}

impl NormalForm {
    pub const ALL: [NormalForm; 7] = [
        NormalForm::I1,
        NormalForm::I2,
        NormalForm::II1,
        NormalForm::II2,
        NormalForm::III1,
        NormalForm::III2,
        NormalForm::IV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NormalForm::I1 => "I1",
            NormalForm::I2 => "I2",
            NormalForm::II1 => "II1",
            NormalForm::II2 => "II2",
            NormalForm::III1 => "III1",
            NormalForm::III2 => "III2",
            NormalForm::IV => "IV",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name().eq_ignore_ascii_case(name))
    }

    pub fn symmetry_dim(self) -> SymmetryDim {
        match self {
            NormalForm::I1 | NormalForm::I2 | NormalForm::II2 => SymmetryDim::Infinite,
            NormalForm::III2 => SymmetryDim::Finite(3),
            NormalForm::II1 | NormalForm::III1 | NormalForm::IV => SymmetryDim::Finite(1),
        }
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryDim {
    Finite(u32),
    Infinite,
}

impl fmt::Display for SymmetryDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymmetryDim::Finite(n) => write!(f, "{n}"),
            SymmetryDim::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Type(NormalForm),
    /// Admissible, but none of the symmetric normal forms.
    None,
    Inadmissible(String),
    Indeterminate(String),
}

impl Verdict {
    /// Histogram key; `None` for inadmissible points.
    pub fn tag(&self) -> Option<&'static str> {
        match self {
            Verdict::Type(t) => Some(t.name()),
            Verdict::None => Some("none"),
            Verdict::Indeterminate(_) => Some("indeterminate"),
            Verdict::Inadmissible(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointVerdict {
    pub q: Point,
    pub verdict: Verdict,
    /// `|I^2 - 4| < ε_zero` at a constant-`I` point.
    pub parabolic_boundary: bool,
    pub record: InvariantRecord,
}

impl PointVerdict {
    pub fn sigma(&self) -> Option<Orientation> {
        self.record.sigma
    }
}

/// Reads the decision tree off a computed record.
pub fn verdict_from_record(rec: &InvariantRecord, tol: &Tolerances) -> (Verdict, bool) {
    match &rec.status {
        Status::Inadmissible(reason) => return (Verdict::Inadmissible(reason.clone()), false),
        Status::Indeterminate(reason) => return (Verdict::Indeterminate(reason.clone()), false),
        Status::Complete => {}
    }
    let zero = |name: &str| rec.defects.get(name).is_some_and(|v| *v <= tol.zero);
    let verdict = match (&rec.branch, &rec.payload) {
        (BranchTag::IConst, _) => {
            let i_sq = rec.i * rec.i;
            let parabolic = libm::fabs(i_sq - 4.0) < tol.zero;
            let common = rec.sigma == Some(Orientation::Common);
            let form = if common && i_sq <= 4.0 + tol.zero {
                NormalForm::I2
            } else {
                NormalForm::I1
            };
            return (Verdict::Type(form), parabolic);
        }
        (BranchTag::II, Payload::II(_)) => {
            if zero(defect::J_PRIME) {
                Verdict::Type(NormalForm::II2)
            } else if zero(defect::G) {
                Verdict::Type(NormalForm::II1)
            } else {
                Verdict::None
            }
        }
        (BranchTag::IIIDep, Payload::III(_)) => {
            if zero(defect::LAMBDA_SQ) {
                Verdict::Type(NormalForm::III2)
            } else if defect::DETS.iter().all(|d| zero(d)) {
                Verdict::Type(NormalForm::III1)
            } else {
                Verdict::None
            }
        }
        (BranchTag::IVIndep, Payload::IV(_)) => {
            if zero(defect::K_RICCATI) && zero(defect::K_K1) && zero(defect::K_H1) {
                Verdict::Type(NormalForm::IV)
            } else {
                Verdict::None
            }
        }
        (branch, _) => Verdict::Indeterminate(format!("incomplete {} record", branch.name())),
    };
    (verdict, false)
}

pub fn classify_point(pair: &ContactPair, q: Point, order: usize, tol: &Tolerances) -> PointVerdict {
    let record = InvariantRecord::compute(pair, q, order, tol);
    let (verdict, parabolic_boundary) = verdict_from_record(&record, tol);
    PointVerdict {
        q,
        verdict,
        parabolic_boundary,
        record,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Type(NormalForm),
    None,
    Mixed,
    Indeterminate,
}

impl Aggregate {
    pub fn name(&self) -> &'static str {
        match self {
            Aggregate::Type(t) => t.name(),
            Aggregate::None => "none",
            Aggregate::Mixed => "mixed",
            Aggregate::Indeterminate => "indeterminate",
        }
    }

    pub fn symmetry_dim(&self) -> Option<SymmetryDim> {
        match self {
            Aggregate::Type(t) => Some(t.symmetry_dim()),
            Aggregate::None => Some(SymmetryDim::Finite(0)),
            Aggregate::Mixed | Aggregate::Indeterminate => None,
        }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrientationSummary {
    Uniform(Orientation),
    Mixed,
}

impl fmt::Display for OrientationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrientationSummary::Uniform(o) => write!(f, "{o}"),
            OrientationSummary::Mixed => f.write_str("mixed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub points: Vec<PointVerdict>,
    pub aggregate: Aggregate,
    pub orientation: OrientationSummary,
    pub symmetry_dim: Option<SymmetryDim>,
    /// Share of admissible points carrying the most common verdict.
    pub unanimity: f64,
    pub histogram: BTreeMap<String, usize>,
    pub excluded: Vec<(Point, String)>,
    /// Largest value of each defect over the admissible points.
    pub max_defects: BTreeMap<String, f64>,
    pub parabolic_boundary: bool,
    pub tolerances: Tolerances,
    pub order: usize,
}

impl ClassificationReport {
    pub fn admissible(&self) -> usize {
        self.points.len() - self.excluded.len()
    }
}

/// Combines per-point verdicts, given in grid order.
pub fn aggregate(
    points: Vec<PointVerdict>,
    order: usize,
    tol: &Tolerances,
) -> Result<ClassificationReport> {
    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut max_defects: BTreeMap<String, f64> = BTreeMap::new();
    let mut orientations = (false, false);
    let mut parabolic_boundary = false;
    for pv in &points {
        let Some(tag) = pv.verdict.tag() else {
            if let Verdict::Inadmissible(reason) = &pv.verdict {
                excluded.push((pv.q, reason.clone()));
            }
            continue;
        };
        *histogram.entry(tag.to_string()).or_default() += 1;
        parabolic_boundary |= pv.parabolic_boundary;
        match pv.sigma() {
            Some(Orientation::Common) => orientations.0 = true,
            Some(Orientation::Opposite) => orientations.1 = true,
            None => {}
        }
        for (name, value) in &pv.record.defects {
            let slot = max_defects.entry(name.clone()).or_insert(0.0);
            *slot = slot.max(*value);
        }
    }
    let admissible = points.len() - excluded.len();
    if admissible == 0 {
        let (point, reason) = excluded
            .first()
            .cloned()
            .unwrap_or((Point::new(f64::NAN, f64::NAN, f64::NAN), "no points".to_string()));
        return Err(Error::EmptyRegion { point, reason });
    }
    // ties resolve to the first tag in name order, keeping reports stable
    let (top, count) = histogram
        .iter()
        .fold(("", 0usize), |best, (k, v)| if *v > best.1 { (k, *v) } else { best });
    let unanimity = count as f64 / admissible as f64;
    let aggregate = if unanimity + 1e-12 < tol.unanimity {
        Aggregate::Mixed
    } else {
        match top {
            "none" => Aggregate::None,
            "indeterminate" => Aggregate::Indeterminate,
            name => NormalForm::from_name(name).map_or(Aggregate::Mixed, Aggregate::Type),
        }
    };
    let orientation = match orientations {
        (true, false) => OrientationSummary::Uniform(Orientation::Common),
        (false, true) => OrientationSummary::Uniform(Orientation::Opposite),
        _ => OrientationSummary::Mixed,
    };
    Ok(ClassificationReport {
        points,
        aggregate,
        orientation,
        symmetry_dim: aggregate.symmetry_dim(),
        unanimity,
        histogram,
        excluded,
        max_defects,
        parabolic_boundary,
        tolerances: *tol,
        order,
    })
}

/// Sequential grid classification; see the CLI for the parallel driver.
pub fn classify_region(
    pair: &ContactPair,
    region: &Region,
    order: usize,
    tol: &Tolerances,
) -> Result<ClassificationReport> {
    region.validate()?;
    tol.validate()?;
    let points = region
        .points()
        .into_iter()
        .map(|q| classify_point(pair, q, order, tol))
        .collect();
    aggregate(points, order, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expression, Params};
    use crate::invariants::DEFAULT_ORDER;

    fn pair(src: &str) -> ContactPair {
        ContactPair::new(parse_expression(src).unwrap(), Params::new())
    }

    fn point_type(src: &str, q: Point) -> PointVerdict {
        classify_point(&pair(src), q, DEFAULT_ORDER, &Tolerances::default())
    }

    #[test]
    fn grid_layout() {
        let r = Region::new([0.0, 1.0], [2.0, 2.0], [-1.0, 1.0], [2, 1, 3]).unwrap();
        let pts = r.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], Point::new(0.0, 2.0, -1.0));
        assert_eq!(pts[1], Point::new(0.0, 2.0, 0.0));
        assert_eq!(pts[5], Point::new(1.0, 2.0, 1.0));
        assert!(Region::new([1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [1, 1, 1]).is_err());
        assert!(Region::new([0.0, 1.0], [0.0, 1.0], [0.0, 1.0], [1, 0, 1]).is_err());
    }

    #[test]
    fn point_examples() {
        let v = point_type("-p", Point::new(0.0, 0.0, 1.0));
        assert_eq!(v.verdict, Verdict::Type(NormalForm::I1));
        assert_eq!(v.sigma(), Some(Orientation::Opposite));
        assert_eq!(v.record.i, 0.0);

        let v = point_type("-1/(p+2)", Point::new(0.0, 0.0, 0.0));
        assert_eq!(v.verdict, Verdict::Type(NormalForm::I2));
        assert_eq!(v.sigma(), Some(Orientation::Common));
        assert!(v.parabolic_boundary);

        let v = point_type("y+p^3", Point::new(0.0, 0.0, 0.5));
        assert_eq!(v.verdict, Verdict::Type(NormalForm::IV));

        let v = point_type("p", Point::new(0.0, 0.0, 0.5));
        assert!(matches!(v.verdict, Verdict::Inadmissible(_)));
    }

    #[test]
    fn region_examples() {
        let tol = Tolerances::default();
        let r = Region::centered(0.2, [-1.5, -0.5], 5).unwrap();
        let rep = classify_region(&pair("(2+y)*p"), &r, DEFAULT_ORDER, &tol).unwrap();
        assert_eq!(rep.aggregate, Aggregate::Type(NormalForm::II2));
        assert_eq!(rep.unanimity, 1.0);
        assert_eq!(rep.symmetry_dim, Some(SymmetryDim::Infinite));

        let r = Region::centered(0.2, [-0.2, 0.2], 5).unwrap();
        let rep = classify_region(&pair("-1/(p+y+3)"), &r, DEFAULT_ORDER, &tol).unwrap();
        assert_eq!(rep.aggregate, Aggregate::Type(NormalForm::II1), "{:?}", rep.histogram);

        let r = Region::centered(0.2, [0.3, 0.7], 5).unwrap();
        let rep = classify_region(&pair("p^3"), &r, DEFAULT_ORDER, &tol).unwrap();
        assert_eq!(rep.aggregate, Aggregate::Type(NormalForm::III2));
        assert_eq!(rep.symmetry_dim.unwrap().to_string(), "3");
    }

    #[test]
    fn all_inadmissible_names_the_first_failure() {
        let r = Region::centered(0.1, [0.2, 0.4], 2).unwrap();
        match classify_region(&pair("p"), &r, DEFAULT_ORDER, &Tolerances::default()) {
            Err(Error::EmptyRegion { point, reason }) => {
                assert_eq!(point, Point::new(-0.1, -0.1, 0.2));
                assert!(reason.contains("transversality"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mixed_regions_are_not_guessed() {
        // σ changes sign across p = 0
        let r = Region::centered(0.1, [-0.5, 0.5], 4).unwrap();
        let rep = classify_region(&pair("p^2+1"), &r, DEFAULT_ORDER, &Tolerances::default())
            .unwrap();
        assert_eq!(rep.orientation, OrientationSummary::Mixed);
    }
}
