mod problem_file;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use problem_file::{Boundary, FileError, ProblemFile};
use report::{AssumptionEcho, AuxRow, ProblemEcho, RunReport, Settings};
use tsbvp::bounds::certify;
use tsbvp::problem::DEFAULT_MEMBERSHIP_TOL;
use tsbvp::{
    brouwer_1d, solve, verify_solution, AuxProblem, BVProblem, BoundsPair, Execution, Expr, GridFunction, MEstimation,
    Method, MonotoneSamplingSpec,
};

/// Solve and certify discrete second-order boundary value problems on non-uniform grids.
#[derive(Parser)]
#[command(name = "tsbvp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the bounds, solve, verify, and write the solution table.
    Solve(SolveArgs),
    /// Check the lower/upper solution certificates and their ordering only.
    CheckBounds(CheckArgs),
    /// Tabulate f and the clipped nonlinearity over an x-sweep at one index.
    AuxTable(AuxArgs),
    /// Fixed point of a self-map of [0, 1] by bisection.
    DemoFixedPoint(DemoArgs),
    /// Scan constant functions for lower and upper solutions.
    SuggestBounds(SuggestArgs),
    /// Re-run verification on the solution embedded in a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct A2Mode {
    /// Treat a failed monotonicity-in-y check as fatal.
    #[arg(long, conflicts_with = "advisory_a2")]
    strict_a2: bool,
    /// Report a failed monotonicity-in-y check as a warning only.
    #[arg(long)]
    advisory_a2: bool,
}

impl A2Mode {
    fn strict(&self, default: bool) -> bool {
        if self.strict_a2 {
            true
        } else if self.advisory_a2 {
            false
        } else {
            default
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    /// Solution CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Fixed-point residual target.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    method: Option<Method>,
    #[command(flatten)]
    a2: A2Mode,
    /// Seed for all sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record and print the residual of every iteration.
    #[arg(long)]
    trace: bool,
    /// Tolerance for the certificate inequalities.
    #[arg(long, default_value_t = DEFAULT_MEMBERSHIP_TOL)]
    cert_tol: f64,
    /// Run multistart and sampling on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    /// Tolerance for the certificate inequalities.
    #[arg(long, default_value_t = DEFAULT_MEMBERSHIP_TOL)]
    tol: f64,
    #[command(flatten)]
    a2: A2Mode,
}

#[derive(Args)]
struct AuxArgs {
    file: PathBuf,
    /// Interior index i in 1..=n+1.
    #[arg(long)]
    index: usize,
    #[arg(long, allow_hyphen_values = true)]
    x_from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_to: Option<f64>,
    #[arg(long, default_value_t = 101)]
    steps: usize,
    /// Previous value u(t_{i-1}); defaults to the band midpoint there.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    /// Expression in x mapping [0, 1] into itself.
    expr: String,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args)]
struct SuggestArgs {
    file: PathBuf,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 201)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_MEMBERSHIP_TOL)]
    tol: f64,
}

#[derive(Args)]
struct VerifyArgs {
    file: PathBuf,
    /// JSON report written by `solve --json`.
    #[arg(long)]
    report: PathBuf,
}

/// Outcomes other than success, each with its exit code.
enum Failure {
    Usage(String),
    Certificate(String),
    NonConvergence(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Certificate(_) => 2,
            Failure::NonConvergence(_) => 3,
            Failure::Verification(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Certificate(m) | Failure::NonConvergence(m) | Failure::Verification(m) => m,
        }
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Failure {
        Failure::Usage(e.to_string())
    }
}

impl From<tsbvp::Error> for Failure {
    fn from(e: tsbvp::Error) -> Failure {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn write_or_print(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(file: &Path) -> Result<(ProblemFile, BVProblem, BoundsPair), Failure> {
    let pf = ProblemFile::read(file)?;
    let resolved = pf.resolve()?;
    let bounds = resolved.bounds.ok_or_else(|| Failure::Usage("this command needs a [bounds] section".into()))?;
    Ok((pf, resolved.problem, bounds))
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn assumptions(
    problem: &BVProblem,
    bounds: &BoundsPair,
    strict: bool,
    exec: Execution,
) -> Result<tsbvp::AssumptionReport, Failure> {
    let spec = MonotoneSamplingSpec { exec, ..Default::default() };
    let report = problem.check_assumptions(Some(bounds), &spec)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if strict && !report.a2_holds() {
        let witness = report
            .a2
            .witnesses
            .first()
            .map(|v| format!(" (t = {}, x = {}, f({}) = {} < f({}) = {})", v.t, v.x, v.y1, v.f1, v.y2, v.f2))
            .unwrap_or_default();
        return Err(Failure::Certificate(format!(
            "f is not non-increasing in y on the sampled box{witness}; rerun with --advisory-a2 to proceed"
        )));
    }
    Ok(report)
}

fn print_certificate(cert: &tsbvp::BoundsCertificate) {
    for r in [&cert.lower, &cert.upper] {
        let kind = match r.kind {
            tsbvp::CertificateKind::Lower => "lower",
            tsbvp::CertificateKind::Upper => "upper",
        };
        let (worst, at) = r
            .interior_defects
            .iter()
            .enumerate()
            .map(|(k, &d)| (if r.kind == tsbvp::CertificateKind::Lower { -d } else { d }, k + 1))
            .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
        println!(
            "{kind}: {}  left_defect = {}  right_defect = {}  worst interior slack = {} at i = {at}",
            if r.pass { "pass" } else { "FAIL" },
            report::num(r.left_defect),
            report::num(r.right_defect),
            report::num(-worst),
        );
        for v in r.violations() {
            println!("  {v}");
        }
    }
    let o = &cert.ordering;
    println!(
        "ordering: {}  worst alpha - beta = {}  terminal point ordered: {}",
        if o.ordered { "pass" } else { "FAIL" },
        report::num(o.worst_gap),
        o.terminal_ordered
    );
    if let Some(i) = o.first_violation {
        println!("  alpha > beta at i = {i}");
    }
}

fn echo(pf: &ProblemFile, problem: &BVProblem) -> ProblemEcho {
    ProblemEcho {
        points: problem.grid().points().to_vec(),
        f: pf.f.clone(),
        g_right: problem.g_right(),
        g: match &pf.boundary {
            Boundary::Expr(s) => Some(s.clone()),
            Boundary::Value(_) => None,
        },
        alpha: pf.alpha.clone().unwrap_or_default(),
        beta: pf.beta.clone().unwrap_or_default(),
    }
}

fn cmd_solve(args: &SolveArgs) -> Outcome {
    let (pf, problem, bounds) = load(&args.file)?;
    let exec = exec(args.sequential);
    let mut opts = pf.solve_options();
    if let Some(tol) = args.tol {
        opts.tol = tol;
    }
    if let Some(m) = args.method {
        opts.method = m;
    }
    opts.trace = args.trace;
    opts.exec = exec;
    opts.validate()?;

    let strict = args.a2.strict(true);
    let assumed = assumptions(&problem, &bounds, strict, exec)?;
    let cert = certify(&problem, &bounds, args.cert_tol)?;
    if !cert.pass() {
        print_certificate(&cert);
        return Err(Failure::Certificate(format!("bounds do not certify: {}", cert.summary())));
    }
    let est = MEstimation { seed: args.seed, exec, ..Default::default() };
    let echoed = echo(&pf, &problem);
    let ap = AuxProblem::new(problem, bounds, &est, args.cert_tol)?;
    let report = solve(&ap, &opts)?;

    if let Some(trace) = &report.trace {
        for (k, r) in trace.iter().enumerate() {
            eprintln!("iter {k:>6}  residual {}", report::num(*r));
        }
    }
    write_or_print(args.out.as_deref(), &report::solution_csv(ap.base(), &report.solution))?;
    let run = RunReport::new(
        echoed,
        Settings::new(&opts, args.seed),
        AssumptionEcho::new(&assumed, strict),
        cert,
        ap.m(),
        &report,
    );
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&run).map_err(|e| Failure::Usage(e.to_string()))?;
        write_or_print(Some(path), &(text + "\n"))?;
    }
    eprintln!(
        "method {:?}, {} iterations, fp residual {:e}, M = {}, r = {}",
        report.method_used,
        report.iterations,
        report.fp_residual,
        ap.m(),
        report.radius
    );
    if !report.alternates.is_empty() {
        eprintln!("{} further distinct fixed point(s) found", report.alternates.len());
    }
    if !report.converged {
        return Err(Failure::NonConvergence(format!(
            "no convergence: best fp residual {:e} after {} iterations",
            report.fp_residual, report.iterations
        )));
    }
    match &report.verification {
        Some(v) if v.pass() => Ok(()),
        Some(v) => Err(Failure::Verification(verification_summary(v))),
        None => Err(Failure::Verification("verification was not run".into())),
    }
}

fn verification_summary(v: &tsbvp::VerificationReport) -> String {
    let mut failed = Vec::new();
    if !v.boundary_ok {
        failed.push(format!("boundary defects {:e}, {:e}", v.left_defect, v.right_defect));
    }
    if !v.aux_ok {
        failed.push(format!("auxiliary residual {:e} at i = {}", v.aux_residual_max, v.aux_residual_argmax));
    }
    if !v.inclusion_ok {
        failed.push(format!("bounds violated by {:e}", v.worst_violation));
    }
    if !v.equivalence_ok {
        failed.push(format!("original-equation residual {:?}", v.eq_residual_max));
    }
    if !v.within_ball {
        failed.push(format!("outside the ball of radius {}", v.radius));
    }
    format!("verification failed: {}", failed.join("; "))
}

fn cmd_check_bounds(args: &CheckArgs) -> Outcome {
    let (_, problem, bounds) = load(&args.file)?;
    assumptions(&problem, &bounds, args.a2.strict(false), Execution::default())?;
    let cert = certify(&problem, &bounds, args.tol)?;
    print_certificate(&cert);
    println!("i,t,alpha,beta,lower_defect,upper_defect");
    let grid = problem.grid();
    for i in 0..grid.len() {
        let (lo, hi) = if (1..=grid.n() + 1).contains(&i) {
            (Some(cert.lower.interior_defects[i - 1]), Some(cert.upper.interior_defects[i - 1]))
        } else {
            (None, None)
        };
        println!(
            "{i},{},{},{},{},{}",
            report::num(grid.t(i)),
            report::num(bounds.alpha().at(i)),
            report::num(bounds.beta().at(i)),
            lo.map(report::num).unwrap_or_default(),
            hi.map(report::num).unwrap_or_default()
        );
    }
    if cert.pass() {
        Ok(())
    } else {
        Err(Failure::Certificate(format!("bounds do not certify: {}", cert.summary())))
    }
}

fn cmd_aux_table(args: &AuxArgs) -> Outcome {
    let (_, problem, bounds) = load(&args.file)?;
    let grid = problem.grid().clone();
    let i = args.index;
    if i == 0 || i > grid.n() + 1 {
        return Err(Failure::Usage(format!("--index must lie in 1..={}", grid.n() + 1)));
    }
    if args.steps < 2 {
        return Err(Failure::Usage("--steps must be at least 2".into()));
    }
    let (lo, hi) = (bounds.alpha().at(i), bounds.beta().at(i));
    let width = (hi - lo).max(1.0);
    let x_from = args.x_from.unwrap_or(lo - width);
    let x_to = args.x_to.unwrap_or(hi + width);
    let z = args.z.unwrap_or(0.5 * (bounds.alpha().at(i - 1) + bounds.beta().at(i - 1)));
    let h = grid.h(i - 1);
    // the table never uses M; any positive value will do
    let ap = AuxProblem::from_parts(problem, bounds, 1.0)?;
    let rows: Vec<AuxRow> = (0..args.steps)
        .map(|k| {
            let x =
                if k + 1 == args.steps { x_to } else { x_from + (x_to - x_from) * k as f64 / (args.steps - 1) as f64 };
            AuxRow { x, f: ap.base().eval_f(i, x, (x - z) / h).ok(), f_tilde: ap.aux_f(i, x, z).ok() }
        })
        .collect();
    write_or_print(args.out.as_deref(), &report::aux_csv(&rows))
}

fn cmd_demo(args: &DemoArgs) -> Outcome {
    let e = Expr::parse(&args.expr, &["x"]).map_err(|e| Failure::Usage(format!("{}: {e}", args.expr)))?;
    let x = brouwer_1d(&e, args.tol)?;
    let residual = e.eval(&[x]).map(|v| v - x).map_err(tsbvp::Error::from)?;
    println!("{}", report::num(x));
    eprintln!("fn(x) - x = {residual:e}");
    Ok(())
}

fn cmd_suggest(args: &SuggestArgs) -> Outcome {
    let pf = ProblemFile::read(&args.file)?;
    let problem = pf.resolve()?.problem;
    if args.steps < 2 || args.from.partial_cmp(&args.to) != Some(std::cmp::Ordering::Less) {
        return Err(Failure::Usage("need --from < --to and --steps >= 2".into()));
    }
    let grid = problem.grid().clone();
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for k in 0..args.steps {
        let c = args.from + (args.to - args.from) * k as f64 / (args.steps - 1) as f64;
        let w = GridFunction::constant(grid.clone(), c)?;
        // candidates where f cannot be evaluated are simply skipped
        if tsbvp::check_lower(&problem, &w, args.tol).is_ok_and(|r| r.pass) {
            lowers.push(c);
        }
        if tsbvp::check_upper(&problem, &w, args.tol).is_ok_and(|r| r.pass) {
            uppers.push(c);
        }
    }
    println!("constant lower solutions: {}", lowers.len());
    println!("constant upper solutions: {}", uppers.len());
    // tightest ordered pair: the largest lower that still has an upper above it
    let pair =
        lowers.iter().rev().find_map(|&a| uppers.iter().copied().filter(|&b| b >= a).reduce(f64::min).map(|b| (a, b)));
    match pair {
        Some((a, b)) => {
            println!("[bounds]");
            println!("alpha = {a}");
            println!("beta = {b}");
            Ok(())
        }
        None => Err(Failure::Certificate("no ordered pair of constant bounds in the scanned range".into())),
    }
}

fn cmd_verify(args: &VerifyArgs) -> Outcome {
    let (_, problem, bounds) = load(&args.file)?;
    let text = std::fs::read_to_string(&args.report)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.report.display())))?;
    let run: RunReport = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad report: {e}")))?;
    if run.problem.points != problem.grid().points() {
        return Err(Failure::Usage("report and problem file use different grids".into()));
    }
    let grid = problem.grid().clone();
    let ap = AuxProblem::from_parts(problem, bounds, run.m)?;
    let u = GridFunction::new(grid, run.solution.clone())?;
    let tol = run.verification.as_ref().map(|v| v.tol).unwrap_or(10.0 * run.settings.tol);
    let fresh = verify_solution(&ap, &u, tol)?;
    let verdicts =
        |v: &tsbvp::VerificationReport| [v.boundary_ok, v.aux_ok, v.inclusion_ok, v.equivalence_ok, v.within_ball];
    println!(
        "boundary {}  aux {}  inclusion {}  equivalence {}  ball {}",
        fresh.boundary_ok, fresh.aux_ok, fresh.inclusion_ok, fresh.equivalence_ok, fresh.within_ball
    );
    if let Some(stored) = &run.verification {
        if verdicts(stored) != verdicts(&fresh) {
            return Err(Failure::Verification("verdicts differ from the stored report".into()));
        }
        println!("verdicts match the stored report");
    }
    if fresh.pass() {
        Ok(())
    } else {
        Err(Failure::Verification(verification_summary(&fresh)))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::CheckBounds(a) => cmd_check_bounds(a),
        Command::AuxTable(a) => cmd_aux_table(a),
        Command::DemoFixedPoint(a) => cmd_demo(a),
        Command::SuggestBounds(a) => cmd_suggest(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
