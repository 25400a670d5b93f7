mod files;
mod report;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use bicontact_core::classifier::{aggregate, classify_point, Aggregate, NormalForm};
use bicontact_core::flows::{integrate_axis_flow, schwartz_integral_check, solve_ricatti, FlowResult};
use bicontact_core::invariants::{InvariantRecord, Status, Tolerances, DEFAULT_ORDER};
use bicontact_core::symmetry::{make_fixture, verify_symmetry, FixtureSpec};
use bicontact_core::{parse_expression, Orientation, Point};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use files::{FieldFile, Num, PairFile, RegionSpec, ToleranceSpec, CHART};

/// Invariants, normal forms and symmetries of transverse contact pairs
/// `dy = p dx`, `dy = f(x, y, p) dx`.
#[derive(Debug, Parser)]
#[command(name = "bicontact", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Zero-test tolerance on normalized quantities [default: 1e-8].
    #[arg(long, global = true, allow_hyphen_values = true)]
    tol_zero: Option<f64>,
    /// Denominator cutoff [default: 1e-6].
    #[arg(long, global = true, allow_hyphen_values = true)]
    tol_den: Option<f64>,
    /// Jet order of f [default: 8].
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Print JSON instead of the text summary.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a pair over the region of its pair file.
    Classify {
        /// Pair file.
        pair: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print every invariant at one point.
    Invariants {
        /// Pair file.
        pair: PathBuf,
        /// Point as `x,y,p`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        at: Point,
    },
    /// Test a plane vector field for being a symmetry of the pair.
    CheckSymmetry {
        /// Pair file.
        pair: PathBuf,
        /// Field file with `u` and `v`.
        field: PathBuf,
        /// Largest accepted residual.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a normal-form pair file and its generator files.
    Fixture(FixtureArgs),
    /// Integrate the axis flow (and optionally a Riccati solution) to CSV.
    Flow {
        /// Pair file.
        pair: PathBuf,
        /// Start point as `x,y,p`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        from: Point,
        /// Final value of the flow parameter; may be negative.
        #[arg(long, allow_hyphen_values = true)]
        s_end: f64,
        /// Largest RK4 step.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Initial value of the Riccati solution.
        #[arg(long, allow_hyphen_values = true)]
        rho0: Option<f64>,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct FixtureArgs {
    /// One of I1, I2, II1, II2, III1, III2, IV.
    kind: String,
    /// Constant of an I1 or I2 pair.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Function a(y) of a III1 pair.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Function b(y) of a III1 pair.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// Profile function of a II or III or IV pair.
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    /// Orientation of a II1 pair, `+` or `-`.
    #[arg(long, allow_hyphen_values = true)]
    orientation: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_point(s: &str) -> Result<Point, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, p] if parts.iter().all(|v| v.is_finite()) => Ok(Point::new(x, y, p)),
        _ => Err(format!("expected three finite numbers x,y,p, got {s:?}")),
    }
}

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_UNDECIDED: u8 = 2;

impl Global {
    fn overrides(&self) -> ToleranceSpec {
        ToleranceSpec {
            zero: self.tol_zero.map(Num),
            den: self.tol_den.map(Num),
            unanimity: None,
        }
    }

    fn order(&self, file: &PairFile) -> usize {
        self.order.or(file.order).unwrap_or(DEFAULT_ORDER)
    }

    fn tolerances(&self, file: &PairFile) -> Result<Tolerances> {
        file.tolerances(&self.overrides())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .context("starting worker threads")
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(global: &Global, json: &serde_json::Value, table: impl FnOnce() -> String) {
    if global.json {
        print!("{}", report::to_text(json));
    } else {
        print!("{}", table());
    }
}

fn classify(global: &Global, path: &Path, out: Option<&Path>) -> Result<u8> {
    let file = PairFile::load(path)?;
    let pair = file.pair()?;
    let region = file.region()?;
    let tol = global.tolerances(&file)?;
    let order = global.order(&file);
    let points = global.pool()?.install(|| {
        region
            .points()
            .into_par_iter()
            .map(|q| classify_point(&pair, q, order, &tol))
            .collect::<Vec<_>>()
    });
    let report = aggregate(points, order, &tol)?;
    let json = report::classification(&pair, &RegionSpec::from_region(&region), &report);
    if let Some(out) = out {
        write_file(out, &report::to_text(&json))?;
    }
    emit(global, &json, || report::classification_table(&report));
    Ok(match report.aggregate {
        Aggregate::Type(_) => EXIT_OK,
        _ => EXIT_UNDECIDED,
    })
}

fn invariants(global: &Global, path: &Path, q: Point) -> Result<u8> {
    let file = PairFile::load(path)?;
    let pair = file.pair()?;
    let rec = InvariantRecord::compute(&pair, q, global.order(&file), &global.tolerances(&file)?);
    if let Status::Inadmissible(reason) = &rec.status {
        bail!("point {q} is not admissible: {reason}");
    }
    emit(global, &report::record(&rec), || report::record_table(&rec));
    Ok(match rec.status {
        Status::Complete => EXIT_OK,
        _ => EXIT_UNDECIDED,
    })
}

fn check_symmetry(
    global: &Global,
    pair_path: &Path,
    field_path: &Path,
    tol: f64,
    out: Option<&Path>,
) -> Result<u8> {
    let file = PairFile::load(pair_path)?;
    let pair = file.pair()?;
    let region = file.region()?;
    let field_file = FieldFile::load(field_path)?;
    let field = field_file.field()?;
    if !(tol.is_finite() && tol > 0.0) {
        bail!("--tol must be positive");
    }
    let eps_den = global.tolerances(&file)?.den;
    let check = verify_symmetry(&pair, &field, &region, tol, eps_den);
    if check.checked == 0 {
        bail!("no admissible point in the region");
    }
    let json = report::symmetry(&pair, &field_file, &check, tol);
    if let Some(out) = out {
        write_file(out, &report::to_text(&json))?;
    }
    emit(global, &json, || {
        let verdict = if check.passed { "symmetry" } else { "not a symmetry" };
        let worst = check.worst_point.map_or("-".into(), |q| q.to_string());
        format!(
            "{verdict}: max residual {:.6e} at {worst} over {} points ({} excluded)\nlift w = {}\n",
            check.max_residual, check.checked, check.excluded, check.w
        )
    });
    Ok(if check.passed { EXIT_OK } else { EXIT_UNDECIDED })
}

fn expr_arg(value: &Option<String>, name: &str) -> Result<Option<bicontact_core::expr::Expr>> {
    value
        .as_deref()
        .map(|s| parse_expression(s).with_context(|| format!("in --{name}")))
        .transpose()
}

fn fixture_spec(args: &FixtureArgs) -> Result<FixtureSpec> {
    let kind = NormalForm::from_name(&args.kind)
        .ok_or_else(|| anyhow!("unknown normal form {:?}", args.kind))?;
    let (a, b, g) = (expr_arg(&args.a, "a")?, expr_arg(&args.b, "b")?, expr_arg(&args.g, "g")?);
    let unused = |names: &[(&str, bool)]| -> Result<()> {
        match names.iter().find(|(_, given)| *given) {
            Some((name, _)) => bail!("--{name} does not apply to {kind}"),
            None => Ok(()),
        }
    };
    let orientation = match args.orientation.as_deref() {
        None | Some("+") => Orientation::Common,
        Some("-") => Orientation::Opposite,
        Some(other) => bail!("orientation must be + or -, got {other:?}"),
    };
    let spec = match (FixtureSpec::standard(kind), args.c) {
        (FixtureSpec::I1 { c }, over) => {
            unused(&[("a", a.is_some()), ("b", b.is_some()), ("g", g.is_some())])?;
            FixtureSpec::I1 { c: over.unwrap_or(c) }
        }
        (FixtureSpec::I2 { c }, over) => {
            unused(&[("a", a.is_some()), ("b", b.is_some()), ("g", g.is_some())])?;
            FixtureSpec::I2 { c: over.unwrap_or(c) }
        }
        (FixtureSpec::II1 { g: g0, .. }, c) => {
            unused(&[("c", c.is_some()), ("a", a.is_some()), ("b", b.is_some())])?;
            FixtureSpec::II1 { g: g.unwrap_or(g0), orientation }
        }
        (FixtureSpec::II2 { g: g0 }, c) => {
            unused(&[("c", c.is_some()), ("a", a.is_some()), ("b", b.is_some())])?;
            FixtureSpec::II2 { g: g.unwrap_or(g0) }
        }
        (FixtureSpec::III1 { a: a0, b: b0, g: g0 }, c) => {
            unused(&[("c", c.is_some())])?;
            FixtureSpec::III1 {
                a: a.unwrap_or(a0),
                b: b.unwrap_or(b0),
                g: g.unwrap_or(g0),
            }
        }
        (FixtureSpec::III2 { g: g0 }, c) => {
            unused(&[("c", c.is_some()), ("a", a.is_some()), ("b", b.is_some())])?;
            FixtureSpec::III2 { g: g.unwrap_or(g0) }
        }
        (FixtureSpec::IV { g: g0 }, c) => {
            unused(&[("c", c.is_some()), ("a", a.is_some()), ("b", b.is_some())])?;
            FixtureSpec::IV { g: g.unwrap_or(g0) }
        }
    };
    if args.orientation.is_some() && kind != NormalForm::II1 {
        bail!("--orientation only applies to II1");
    }
    Ok(spec)
}

fn fixture(global: &Global, args: &FixtureArgs) -> Result<u8> {
    let spec = fixture_spec(args)?;
    let eps_den = global.tol_den.unwrap_or(Tolerances::default().den);
    let fx = make_fixture(spec, None, eps_den)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let name = fx.kind.name();
    let tolerances = (global.tol_zero.is_some() || global.tol_den.is_some()).then(|| global.overrides());
    let file = PairFile {
        chart: CHART.into(),
        f: fx.pair.f.to_string(),
        params: fx.pair.params.iter().map(|(k, v)| (k.clone(), Num(*v))).collect(),
        region: Some(RegionSpec::from_region(&fx.region)),
        tolerances,
        order: global.order,
    };
    let mut written = vec![args.out.join(format!("{name}.pair.json"))];
    write_file(&written[0], &(serde_json::to_string_pretty(&file)? + "\n"))?;
    for (k, g) in fx.generators.iter().enumerate() {
        let path = args.out.join(format!("{name}.gen{}.field.json", k + 1));
        write_file(&path, &(serde_json::to_string_pretty(&FieldFile::from_field(g))? + "\n"))?;
        written.push(path);
    }
    let summary = serde_json::json!({
        "type": name,
        "description": fx.spec.describe(),
        "f": file.f,
        "orientation": fx.orientation.symbol(),
        "files": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    emit(global, &summary, || {
        let mut out = format!("{} ({}), f = {}\n", fx.spec.describe(), fx.orientation, file.f);
        for p in &written {
            out += &format!("wrote {}\n", p.display());
        }
        out
    });
    Ok(EXIT_OK)
}

fn write_csv(out: &mut dyn std::io::Write, flow: &FlowResult, with_rho: bool) -> std::io::Result<()> {
    writeln!(out, "{}", if with_rho { "s,x,y,p,rho" } else { "s,x,y,p" })?;
    for s in &flow.samples {
        write!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", s.s, s.point.x, s.point.y, s.point.p)?;
        match s.rho {
            Some(rho) if with_rho => writeln!(out, ",{rho:.16e}")?,
            _ => writeln!(out)?,
        }
    }
    Ok(())
}

fn flow(
    global: &Global,
    path: &Path,
    from: Point,
    s_end: f64,
    step: f64,
    rho0: Option<f64>,
    out: Option<&Path>,
) -> Result<u8> {
    let file = PairFile::load(path)?;
    let pair = file.pair()?;
    let tol = global.tolerances(&file)?;
    let result = match rho0 {
        Some(rho0) => solve_ricatti(&pair, from, rho0, s_end, step, &tol)?,
        None => integrate_axis_flow(&pair, from, s_end, step, &tol)?,
    };
    let mut text = Vec::new();
    write_csv(&mut text, &result, rho0.is_some())?;
    let code = match &result.breach {
        Some(err) => {
            writeln!(text, "# stopped: {err}")?;
            EXIT_UNDECIDED
        }
        None => {
            let check = schwartz_integral_check(&pair, from, s_end, step, &tol)?;
            writeln!(
                text,
                "# lhs={:.16e} rhs={:.16e} gap={:.16e}",
                check.lhs, check.rhs, check.gap
            )?;
            EXIT_OK
        }
    };
    match out {
        Some(p) => fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&text)?,
    }
    Ok(code)
}

fn run(cli: Cli) -> Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Classify { pair, report } => classify(g, pair, report.as_deref()),
        Command::Invariants { pair, at } => invariants(g, pair, *at),
        Command::CheckSymmetry { pair, field, tol, report } => {
            check_symmetry(g, pair, field, *tol, report.as_deref())
        }
        Command::Fixture(args) => fixture(g, args),
        Command::Flow { pair, from, s_end, step, rho0, out } => {
            flow(g, pair, *from, *s_end, *step, *rho0, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    // usage errors share the input-error exit code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
