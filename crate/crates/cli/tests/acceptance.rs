//! Acceptance criteria 1-8. Each criterion prints one `PASS`/`FAIL` line
//! with the measured quantities; the test fails if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;

use bicontact_core::classifier::{classify_point, NormalForm, Region};
use bicontact_core::expr::Expr;
use bicontact_core::flows::{integrate_axis_flow, schwartz_integral_check, solve_ricatti};
use bicontact_core::invariants::{
    defect, schwarzian, InvariantRecord, Payload, Tolerances, DEFAULT_ORDER,
};
use bicontact_core::jet::multi_indices;
use bicontact_core::symmetry::{
    make_fixture, verify_symmetry, transform_pair, Fixture, FixtureSpec, PlaneField, PlaneMap,
};
use bicontact_core::{evaluate, evaluate_jet, parse_expression, ContactPair, Params, Point, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

const SEED: u64 = 0x5eed_b1c0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn tol() -> Tolerances {
    Tolerances { zero: 1e-7, ..Default::default() }
}

fn pair(src: &str) -> ContactPair {
    ContactPair::parse(src, Params::new()).unwrap()
}

fn expr(src: &str) -> Expr {
    parse_expression(src).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// The seven fixtures as listed in the criteria, as `(label, cli args)`.
const LISTED: [(&str, &[&str]); 8] = [
    ("I1 c=-1", &["I1", "--c=-1"]),
    ("I1 c=4", &["I1", "--c=4"]),
    ("I2 c=2", &["I2", "--c=2"]),
    ("II1 g=y+3", &["II1", "--g=y+3"]),
    ("II2 g=2+y", &["II2", "--g=2+y"]),
    ("III1 a=y b=y+1 g=p+1", &["III1", "--a=y", "--b=y+1", "--g=p+1"]),
    ("III2 g=p^3", &["III2", "--g=p^3"]),
    ("IV g=y+p^3", &["IV", "--g=y+p^3"]),
];

fn spec_of(args: &[&str]) -> FixtureSpec {
    let kind = NormalForm::from_name(args[0]).unwrap();
    let get = |key: &str| {
        args.iter()
            .find_map(|a| a.strip_prefix(&format!("--{key}=")))
            .map(str::to_string)
    };
    match kind {
        NormalForm::I1 => FixtureSpec::I1 { c: get("c").unwrap().parse().unwrap() },
        NormalForm::I2 => FixtureSpec::I2 { c: get("c").unwrap().parse().unwrap() },
        NormalForm::II1 => FixtureSpec::II1 {
            g: expr(&get("g").unwrap()),
            orientation: bicontact_core::Orientation::Common,
        },
        NormalForm::II2 => FixtureSpec::II2 { g: expr(&get("g").unwrap()) },
        NormalForm::III1 => FixtureSpec::III1 {
            a: expr(&get("a").unwrap()),
            b: expr(&get("b").unwrap()),
            g: expr(&get("g").unwrap()),
        },
        NormalForm::III2 => FixtureSpec::III2 { g: expr(&get("g").unwrap()) },
        NormalForm::IV => FixtureSpec::IV { g: expr(&get("g").unwrap()) },
    }
}

/// Listed fixtures plus the library's standard III1 representative.
fn all_fixtures() -> Vec<(String, Fixture)> {
    let mut out: Vec<(String, Fixture)> = LISTED
        .iter()
        .map(|(label, args)| (label.to_string(), make_fixture(spec_of(args), None, 1e-6).unwrap()))
        .collect();
    let std_iii1 = FixtureSpec::standard(NormalForm::III1);
    out.push((std_iii1.describe(), make_fixture(std_iii1, None, 1e-6).unwrap()));
    out
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bicontact"))
}

fn classify_via_cli(pair_file: &Path, extra: &[&str]) -> (i32, Vec<u8>) {
    let out = bin()
        .args(["classify", "--json", "--tol-zero", "1e-7"])
        .args(extra)
        .arg(pair_file)
        .output()
        .unwrap();
    (out.status.code().unwrap(), out.stdout)
}

fn c1_fixture_round_trip(dir: &Path) -> Outcome {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for (label, args) in LISTED {
        let out_dir = dir.join(label.replace([' ', '=', '^', '+'], "_"));
        let status = bin().arg("fixture").args(args).arg("--out").arg(&out_dir).status().unwrap();
        assert!(status.success(), "fixture {label}");
        let (_, stdout) = classify_via_cli(&out_dir.join(format!("{}.pair.json", args[0])), &[]);
        let report: serde_json::Value = serde_json::from_slice(&stdout).unwrap();
        let unanimity: f64 = report["unanimity"].to_string().parse().unwrap();
        let got = report["type"].as_str().unwrap().to_string();
        notes.push(format!("{label}->{got}({unanimity:.2})"));
        if got != args[0] || unanimity < 0.95 {
            failures.push(format!("{label} classified {got}"));
        }
    }
    let std_iii1 = make_fixture(FixtureSpec::standard(NormalForm::III1), None, 1e-6).unwrap();
    let report = bicontact_core::classifier::classify_region(
        &std_iii1.pair,
        &std_iii1.region,
        DEFAULT_ORDER,
        &tol(),
    )
    .unwrap();
    notes.push(format!("[{}->{}({:.2})]", std_iii1.spec.describe(), report.aggregate, report.unanimity));
    let detail = if failures.is_empty() {
        notes.join(", ")
    } else {
        format!("{}; {}", failures.join("; "), notes.join(", "))
    };
    Outcome::new(failures.is_empty(), detail)
}

fn c2_known_values() -> Outcome {
    let cases = [
        ("-p", Point::new(0.0, 0.0, 1.0), 0.0),
        ("-1/(p+2)", Point::new(0.0, 0.0, 0.0), 2.0),
        ("4*p", Point::new(0.0, 0.0, -1.0), 2.5),
    ];
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (src, q, expected) in cases {
        let rec = InvariantRecord::compute(&pair(src), q, 4, &Tolerances::default());
        worst = worst.max((rec.i - expected).abs());
        detail.push(format!("I({src})={:.12}", rec.i));
    }
    Outcome::new(worst < 1e-9, format!("{}; max abs err {worst:.1e}", detail.join(", ")))
}

#[derive(Default)]
struct Identities {
    points: usize,
    schwarzian: f64,
    riccati: (usize, f64),
    n1m2: (usize, f64),
    l_identity: (usize, f64),
}

impl Identities {
    fn absorb(&mut self, rec: &InvariantRecord) {
        if rec.sigma.is_none() {
            return;
        }
        self.points += 1;
        self.schwarzian = self.schwarzian.max(rec.defects[defect::SCHWARZIAN_IDENTITY]);
        let take = |slot: &mut (usize, f64), key: &str| {
            if let Some(v) = rec.defects.get(key) {
                slot.0 += 1;
                slot.1 = slot.1.max(*v);
            }
        };
        take(&mut self.riccati, defect::J_RICCATI);
        take(&mut self.l_identity, defect::L_IDENTITY);
        if let Payload::III(iii) = &rec.payload {
            if let Some(fd) = &iii.frame_data {
                self.n1m2.0 += 1;
                self.n1m2.1 = self.n1m2.1.max(rel(fd.n1 - fd.m2, 2.0));
            }
        }
    }
}

fn random_admissible_source(rng: &mut ChaCha8Rng) -> String {
    let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.4..0.4));
    let a = rng.gen_range(1.0..2.5);
    match rng.gen_range(0..3) {
        0 => format!("{a}*p^3 + p + 0.8 + {}*x*p + {}*y + {}*sin(x*y*p)", c[0], c[1], c[2]),
        1 => format!("exp({}*x + {}*y)*({a}*p^3 + 0.7) + {}*y^2", c[0], c[1], c[2]),
        _ => format!("-(1 + {}*x^2)/(p + 2 + {}*y) + {}*x*y", c[0], c[1], c[2]),
    }
}

fn c3_identities() -> Outcome {
    let mut acc = Identities::default();
    for (_, fx) in all_fixtures() {
        for q in fx.region.points() {
            acc.absorb(&InvariantRecord::compute(&fx.pair, q, DEFAULT_ORDER, &tol()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let region = Region::centered(0.3, [0.3, 0.7], 3).unwrap();
    for _ in 0..10 {
        let src = random_admissible_source(&mut rng);
        let p = pair(&src);
        for q in region.points() {
            acc.absorb(&InvariantRecord::compute(&p, q, DEFAULT_ORDER, &tol()));
        }
    }
    let pass = acc.schwarzian < 1e-9
        && acc.riccati.1 < 1e-8
        && acc.n1m2.1 < 1e-6
        && acc.l_identity.1 < 1e-7
        && acc.riccati.0 > 0
        && acc.n1m2.0 > 0
        && acc.l_identity.0 > 0;
    Outcome::new(
        pass,
        format!(
            "{} points: S-2I'ds^2 {:.1e}; J Riccati {:.1e} ({} pts); n1-m2-2 {:.1e} ({} pts); L-identity {:.1e} ({} pts)",
            acc.points,
            acc.schwarzian,
            acc.riccati.1,
            acc.riccati.0,
            acc.n1m2.1,
            acc.n1m2.0,
            acc.l_identity.1,
            acc.l_identity.0
        ),
    )
}

fn c4_symmetry_residuals() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut failed = Vec::new();
    for (label, fx) in all_fixtures() {
        for g in &fx.generators {
            let check = verify_symmetry(&fx.pair, g, &fx.region, 1e-10, 1e-6);
            count += 1;
            worst = worst.max(check.max_residual);
            if !check.passed {
                failed.push(format!("{label}: ({}, {})", g.u, g.v));
            }
        }
    }
    let ii2 = make_fixture(spec_of(&["II2", "--g=2+y"]), None, 1e-6).unwrap();
    let dy = PlaneField::parse("0", "1", Params::new()).unwrap();
    let control1 = verify_symmetry(&ii2.pair, &dy, &ii2.region, 1e-10, 1e-6).max_residual;
    let perturbed = pair("y+p^3+0.1*x*p");
    let region = Region::centered(0.2, [0.3, 0.7], 5).unwrap();
    let control2 = region
        .points()
        .into_iter()
        .map(|q| {
            let rec = InvariantRecord::compute(&perturbed, q, DEFAULT_ORDER, &tol());
            [defect::K_RICCATI, defect::K_K1, defect::K_H1]
                .iter()
                .filter_map(|k| rec.defects.get(*k))
                .fold(0.0f64, |a, b| a.max(*b))
        })
        .fold(0.0f64, f64::max);
    let pass = failed.is_empty() && worst <= 1e-10 && control1 > 1e-3 && control2 > 1e-3;
    Outcome::new(
        pass,
        format!(
            "{count} generators, max residual {worst:.1e}{}; controls: d/dy on (2+y)p {control1:.2e}, y+p^3+0.1xp defect {control2:.2e}",
            if failed.is_empty() { String::new() } else { format!(" failed {failed:?}") }
        ),
    )
}

/// Random smooth expressions as source text, defined on `[-1, 1]^3`.
fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => "x".into(),
            1 => "y".into(),
            2 => "p".into(),
            _ => format!("{:.2}", rng.gen_range(-2.0..2.0)),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_expr(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => format!("({} + {})", sub(rng), sub(rng)),
        1 => format!("({} - {})", sub(rng), sub(rng)),
        2 => format!("({} * {})", sub(rng), sub(rng)),
        3 => format!("({} / (1.5 + ({})^2))", sub(rng), sub(rng)),
        4 => format!("({})^{}", sub(rng), rng.gen_range(2..4)),
        5 => format!("sin({})", sub(rng)),
        6 => format!("cos({})", sub(rng)),
        7 => format!("exp(0.3*{})", sub(rng)),
        _ => format!("sqrt(2 + sin({}))", sub(rng)),
    }
}

const VARS: [Var; 3] = [Var::X, Var::Y, Var::P];

/// Five-point central difference in one variable.
fn central(e: &Expr, q: Point, var: Var, h: f64) -> f64 {
    let params = Params::new();
    let at = |t: f64| {
        let mut r = q;
        match var {
            Var::X => r.x += t,
            Var::Y => r.y += t,
            Var::P => r.p += t,
        }
        evaluate(e, r, &params).unwrap()
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

fn c5_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let params = Params::new();
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for _ in 0..20 {
        let e = expr(&random_expr(&mut rng, 4));
        for _ in 0..10 {
            let q = Point::new(
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
            );
            let jet = evaluate_jet(&e, q, 3, &params).unwrap();
            for mu in multi_indices(3).into_iter().skip(1) {
                // the last derivative by differences, the others exactly
                let last = (0..3).rev().find(|&i| mu[i] > 0).unwrap();
                let mut lower = e.clone();
                for (i, var) in VARS.into_iter().enumerate() {
                    for _ in 0..mu[i] - usize::from(i == last) {
                        lower = lower.derivative(var);
                    }
                }
                let fd = central(&lower, q, VARS[last], 1e-3);
                worst = worst.max(rel(jet.derivative(mu).unwrap(), fd));
                compared += 1;
            }
        }
    }
    Outcome::new(
        worst <= 1e-6,
        format!("20 expressions x 10 points, {compared} partials of order 1-3, max rel err {worst:.1e}"),
    )
}

fn c6_diffeo_invariance() -> Outcome {
    let maps = [
        PlaneMap::parse("2*x + 0.1", "x + y", "(x - 0.1)/2", "y - (x - 0.1)/2").unwrap(),
        PlaneMap::parse("x + 0.1*y", "0.2 - y", "x - 0.1*(0.2 - y)", "0.2 - y").unwrap(),
        PlaneMap::parse("-x", "3*y + x", "-x", "(y + x)/3").unwrap(),
    ];
    let params = Params::new();
    let (mut points, mut mismatched, mut err_i, mut err_s) = (0, Vec::new(), 0.0f64, 0.0f64);
    for (label, fx) in all_fixtures() {
        for map in &maps {
            let moved = transform_pair(&fx.pair, map, &fx.region, 1e-6)
                .unwrap_or_else(|e| panic!("{label} under {}: {e}", map.f));
            for q in fx.region.points() {
                let big_q = map.lift_point(q, &params).unwrap();
                let sign = map.jacobian(q, &params).unwrap().signum();
                let mu = map.axis_scale(q, &params).unwrap();
                let a = classify_point(&fx.pair, q, DEFAULT_ORDER, &tol());
                let b = classify_point(&moved, big_q, DEFAULT_ORDER, &tol());
                points += 1;
                if a.verdict.tag() != b.verdict.tag() {
                    mismatched.push(format!("{label} at {q}"));
                }
                err_i = err_i.max(rel(b.record.i, sign * a.record.i));
                let s = schwarzian(&fx.pair, q, &tol()).unwrap();
                let s_moved = schwarzian(&moved, big_q, &tol()).unwrap();
                err_s = err_s.max(rel(s_moved * mu * mu, s));
            }
        }
    }
    let pass = mismatched.is_empty() && err_i < 1e-8 && err_s < 1e-8;
    Outcome::new(
        pass,
        format!(
            "3 affine lifts x {points} points: {} tag mismatches{}, I rel err {err_i:.1e}, S mu^2 rel err {err_s:.1e}",
            mismatched.len(),
            mismatched.first().map_or(String::new(), |m| format!(" (first {m})"))
        ),
    )
}

fn c7_flows() -> Outcome {
    let t = Tolerances::default();
    let anosov = pair("-p");
    let q0 = Point::new(0.0, 0.0, 1.0);
    let p_end = integrate_axis_flow(&anosov, q0, 0.5, 1e-3, &t).unwrap().last().point.p;
    let err_e = (p_end - std::f64::consts::E).abs();
    let rho = solve_ricatti(&anosov, q0, 0.0, 1.0, 1e-3, &t).unwrap();
    let err_tanh = rho
        .samples
        .iter()
        .map(|s| (s.rho.unwrap() - s.s.tanh()).abs())
        .fold(0.0f64, f64::max);
    let gap = schwartz_integral_check(&pair("p^3"), Point::new(0.0, 0.0, 0.4), 0.5, 1e-3, &t)
        .unwrap()
        .gap;
    let err = |h: f64| {
        let p = integrate_axis_flow(&anosov, q0, 0.5, h, &t).unwrap().last().point.p;
        (p - std::f64::consts::E).abs()
    };
    let order = (err(0.05) / err(0.025)).log2();
    let pass = err_e < 1e-8 && err_tanh < 1e-8 && gap < 1e-6 && (3.5..=4.5).contains(&order);
    Outcome::new(
        pass,
        format!(
            "|p(0.5)-e| {err_e:.1e}, |rho-tanh| {err_tanh:.1e}, integral gap on p^3 {gap:.1e}, observed order {order:.3}"
        ),
    )
}

fn c8_determinism(dir: &Path) -> Outcome {
    let mut runs = 0;
    let mut differing = Vec::new();
    for (kind, args) in [("IV", vec!["IV"]), ("III1", vec!["III1"]), ("II1", vec!["II1"])] {
        let out_dir = dir.join(format!("det_{kind}"));
        bin().arg("fixture").args(&args).arg("--out").arg(&out_dir).status().unwrap();
        let file = out_dir.join(format!("{kind}.pair.json"));
        let mut reports = Vec::new();
        for threads in ["1", "4", "1", "8"] {
            let (code, out) = classify_via_cli(&file, &["--threads", threads]);
            assert_eq!(code, 0);
            reports.push(out);
            runs += 1;
        }
        if !reports.windows(2).all(|w| w[0] == w[1]) {
            differing.push(kind);
        }
        let _ = fs::remove_dir_all(&out_dir);
    }
    Outcome::new(
        differing.is_empty(),
        format!("{runs} classify runs over 3 fixtures with --threads 1/4/1/8; differing: {differing:?}"),
    )
}

#[test]
fn acceptance() {
    let dir = TempDir::new().unwrap();
    let criteria: [(&str, &str, Box<dyn Fn() -> Outcome>); 8] = [
        ("1", "fixture round-trip", Box::new(|| c1_fixture_round_trip(dir.path()))),
        ("2", "known invariant values", Box::new(c2_known_values)),
        ("3", "identity suite", Box::new(c3_identities)),
        ("4", "symmetry residuals", Box::new(c4_symmetry_residuals)),
        ("5", "jet oracle", Box::new(c5_oracle)),
        ("6", "diffeomorphism invariance", Box::new(c6_diffeo_invariance)),
        ("7", "flow checks", Box::new(c7_flows)),
        ("8", "determinism", Box::new(|| c8_determinism(dir.path()))),
    ];
    let mut failed = Vec::new();
    for (id, title, run) in criteria.iter() {
        let outcome = run();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id} ({title}): {}", outcome.detail);
        if !outcome.pass {
            failed.push(*id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
