//! The `qsylv` command-line harness.
//!
//! `qsylv run` solves one problem instance with one or more methods and
//! `qsylv sweep` repeats that over a grid of sizes. Both emit CSV with the header
//!
//! ```text
//! problem,n,method,time_s,residual,qs_rank,iterations,memory_bytes,flops,status[,oracle_error]
//! ```
//!
//! Reals are printed with 17 significant digits. `status` is `ok` or
//! `failed:<reason>`. A sweep ends with one `fit` row per method. In it, `n` is
//! `fit`, `time_s` holds the least-squares exponent `α` of `time ≈ c·n^α`,
//! and `flops` holds the same for the flop count.
//!
//! Exit codes: 0 on success, 2 if any solver failed, 64 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::residual_generalized;
use crate::hodlr::{deserialize, serialize, HodlrConfig, HodlrMatrix};
use crate::linalg::DenseMatrix;
use crate::solvers::{
    self, cg_matrix_solve, dense_sylvester_oracle, generalized_kronecker_oracle, integral_solve,
    neumann_generalized_solve, sign_solve, smw_generalized_solve, CgOptions, GeneralizedProblem, InnerSolver,
    IntegralOptions, Method, NeumannOptions, SignOptions, SolverReport, SylvesterProblem,
};
use crate::{problems, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER_FAILURE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Largest `n` for which the `n² × n²` Kronecker oracle is attempted.
const KRONECKER_LIMIT: usize = 64;

pub const CSV_HEADER: &str = "problem,n,method,time_s,residual,qs_rank,iterations,memory_bytes,flops,status";

#[derive(Parser, Debug)]
#[command(name = "qsylv", version, about = "Rank-structured Sylvester and Lyapunov solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem instance with the requested methods.
    Run(RunArgs),
    /// Solve over a grid of sizes and fit complexity exponents.
    Sweep(SweepArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    LaplaceLog,
    Heat,
    Integro,
    Test1,
    Test2,
    Test3,
    Test4,
    RandomSpd,
}

impl ProblemKind {
    fn name(self) -> &'static str {
        match self {
            ProblemKind::LaplaceLog => "laplace-log",
            ProblemKind::Heat => "heat",
            ProblemKind::Integro => "integro",
            ProblemKind::Test1 => "test1",
            ProblemKind::Test2 => "test2",
            ProblemKind::Test3 => "test3",
            ProblemKind::Test4 => "test4",
            ProblemKind::RandomSpd => "random-spd",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Sign,
    Expint,
    Cg,
    Dense,
    Smw,
    Neumann,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Sign => Method::Sign,
            MethodArg::Expint => Method::Expint,
            MethodArg::Cg => Method::Cg,
            MethodArg::Dense => Method::Dense,
            MethodArg::Smw => Method::Smw,
            MethodArg::Neumann => Method::Neumann,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, value_enum)]
    problem: ProblemKind,
    /// Repeatable; one CSV row per method.
    #[arg(long = "method", value_enum, required = true)]
    methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 1e-12)]
    threshold: f64,
    #[arg(long, default_value_t = 256)]
    block_size: usize,
    #[arg(long, default_value_t = 32)]
    quad_points: usize,
    #[arg(long = "quad-L", default_value_t = 100.0)]
    quad_l: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluate quadrature terms concurrently.
    #[arg(long)]
    parallel: bool,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Add a column with the relative Frobenius distance to the dense oracle.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Matrix size (grid points).
    #[arg(long)]
    n: Option<usize>,
    /// Cell count for the heat problem (matrix size 6m).
    #[arg(long)]
    m: Option<usize>,
    /// Save each solution as a HODLR file (`PATH`, or `PATH.<method>` for several methods).
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Evaluate a stored solution instead of solving; reported as method `loaded`.
    #[arg(long)]
    load: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated sizes (cell counts for heat).
    #[arg(long = "n-grid", value_delimiter = ',', required = true, num_args = 1..)]
    grid: Vec<usize>,
}

/// A generated instance.
pub enum Instance {
    Sylvester(SylvesterProblem),
    Generalized(GeneralizedProblem),
}

impl Instance {
    pub fn n(&self) -> usize {
        match self {
            Instance::Sylvester(p) => p.n(),
            Instance::Generalized(p) => p.n(),
        }
    }
}

/// Builds a named problem; `size` is `m` for heat and `n` otherwise.
pub fn build_problem(kind: ProblemKind, size: usize, tau: f64, seed: u64, cfg: &HodlrConfig) -> Result<Instance> {
    Ok(match kind {
        ProblemKind::LaplaceLog => Instance::Sylvester(problems::laplace_log(size, tau, cfg)?),
        ProblemKind::Heat => Instance::Sylvester(problems::heat_haber(size, cfg)?),
        ProblemKind::Integro => Instance::Generalized(problems::integro_pde(size, cfg)?),
        ProblemKind::Test1 => Instance::Sylvester(problems::structure_tests(1, size, seed, cfg)?),
        ProblemKind::Test2 => Instance::Sylvester(problems::structure_tests(2, size, seed, cfg)?),
        ProblemKind::Test3 => Instance::Sylvester(problems::structure_tests(3, size, seed, cfg)?),
        ProblemKind::Test4 => Instance::Sylvester(problems::structure_tests(4, size, seed, cfg)?),
        ProblemKind::RandomSpd => Instance::Sylvester(problems::random_spd(size, seed, cfg)?),
    })
}

struct Settings {
    cfg: HodlrConfig,
    integral: IntegralOptions,
}

impl Settings {
    fn from(common: &Common) -> Result<Self> {
        let cfg = HodlrConfig::new(common.threshold, common.block_size)?;
        let integral = IntegralOptions {
            points: common.quad_points,
            l: common.quad_l,
            parallel: common.parallel,
            ..IntegralOptions::default()
        };
        Ok(Settings { cfg, integral })
    }
}

/// Solves `inst` with `method`.
///
/// For the generalized problem `sign`/`expint` run the SMW solver with that
/// inner solver, `smw` and `neumann` use the sign iteration inside, and
/// `dense` uses the Kronecker oracle (small `n` only). For Sylvester problems
/// `smw`/`neumann` see an empty list of correction terms.
fn solve(inst: &Instance, method: Method, s: &Settings) -> Result<(HodlrMatrix, SolverReport)> {
    let cfg = &s.cfg;
    match inst {
        Instance::Sylvester(p) => match method {
            Method::Sign => sign_solve(p, cfg, &SignOptions::default()),
            Method::Expint => integral_solve(p, cfg, &s.integral),
            Method::Cg => cg_matrix_solve(p, cfg, &CgOptions::default()),
            Method::Dense => solvers::dense_solve(p, cfg),
            Method::Smw | Method::Neumann => {
                let g = GeneralizedProblem::new(p.a.clone(), p.c.clone(), Vec::new(), p.name.clone())?;
                if !p.is_lyapunov() {
                    return Err(Error::invalid("generalized solvers need B = A"));
                }
                solve(&Instance::Generalized(g), method, s)
            }
        },
        Instance::Generalized(g) => match method {
            Method::Sign | Method::Smw => smw_generalized_solve(g, cfg, &InnerSolver::Sign(SignOptions::default())),
            Method::Expint => smw_generalized_solve(g, cfg, &InnerSolver::Expint(s.integral)),
            Method::Neumann => neumann_generalized_solve(g, cfg, &NeumannOptions::default()),
            Method::Dense => {
                let start = std::time::Instant::now();
                let (x, flops) = crate::flops::measure(|| generalized_oracle(g));
                let x = HodlrMatrix::from_dense(&x?, cfg)?;
                let elapsed = start.elapsed().as_secs_f64();
                let residual = residual_generalized(g, &x)?.value;
                let n2 = g.n() * g.n();
                let report = SolverReport {
                    method,
                    iterations: 1,
                    residual,
                    qs_rank: x.hodlr_rank(),
                    elapsed,
                    memory_bytes: 8 * n2 * n2,
                    flops,
                };
                Ok((x, report))
            }
            Method::Cg => Err(Error::invalid("cg does not handle generalized problems")),
        },
    }
}

fn generalized_oracle(g: &GeneralizedProblem) -> Result<DenseMatrix> {
    if g.n() > KRONECKER_LIMIT {
        return Err(Error::invalid(format!("Kronecker oracle limited to n <= {KRONECKER_LIMIT}")));
    }
    let ms: Vec<DenseMatrix> = g.terms.iter().map(|t| t.to_dense()).collect();
    generalized_kronecker_oracle(&g.a.to_dense(), &ms, &g.c.to_dense())
}

fn oracle_solution(inst: &Instance) -> Option<DenseMatrix> {
    match inst {
        Instance::Sylvester(p) => {
            let (a, b, c) = p.to_dense();
            dense_sylvester_oracle(&a, &b, &c).ok()
        }
        Instance::Generalized(g) => generalized_oracle(g).ok(),
    }
}

fn residual_of(inst: &Instance, x: &HodlrMatrix) -> Result<f64> {
    match inst {
        Instance::Sylvester(p) => crate::bounds::residual_sylvester(&p.a, &p.b, &p.c, x),
        Instance::Generalized(g) => Ok(residual_generalized(g, x)?.value),
    }
}

/// Real formatted with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn status_of(e: &Error) -> String {
    let reason = match e {
        Error::InvalidInput(_) => "invalid-input",
        Error::Singular { .. } => "singular",
        Error::SingularPencil { .. } => "singular-pencil",
        Error::NoConvergence { .. } => "no-convergence",
        Error::Divergence { .. } => "divergence",
        Error::Numerical(_) => "numerical",
        Error::UndefinedResidual(_) => "undefined-residual",
        Error::Format { .. } => "format",
        Error::Io(_) => "io",
    };
    format!("failed:{reason}")
}

struct Row {
    problem: &'static str,
    n: usize,
    method: String,
    report: Option<SolverReport>,
    status: String,
    oracle_error: Option<f64>,
}

impl Row {
    fn csv(&self, with_oracle: bool) -> String {
        let mut fields = vec![self.problem.to_string(), self.n.to_string(), self.method.clone()];
        match &self.report {
            Some(r) => fields.extend([
                fmt_real(r.elapsed),
                fmt_real(r.residual),
                r.qs_rank.to_string(),
                r.iterations.to_string(),
                r.memory_bytes.to_string(),
                r.flops.to_string(),
            ]),
            None => fields.extend(std::iter::repeat_n(String::new(), 6)),
        }
        fields.push(self.status.clone());
        if with_oracle {
            fields.push(self.oracle_error.map(fmt_real).unwrap_or_default());
        }
        fields.join(",")
    }
}

fn header(with_oracle: bool) -> String {
    if with_oracle {
        format!("{CSV_HEADER},oracle_error")
    } else {
        CSV_HEADER.to_string()
    }
}

fn dump_path(base: &Path, method: Method, several: bool) -> PathBuf {
    if several {
        let mut s = base.as_os_str().to_owned();
        s.push(format!(".{method}"));
        PathBuf::from(s)
    } else {
        base.to_path_buf()
    }
}

/// Runs all methods on one instance.
fn run_cell(
    kind: ProblemKind,
    inst: &Instance,
    methods: &[Method],
    s: &Settings,
    with_oracle: bool,
    dump: Option<&Path>,
) -> Result<Vec<Row>> {
    let oracle = if with_oracle { oracle_solution(inst) } else { None };
    let mut rows = Vec::new();
    for &method in methods {
        let (report, status, x) = match solve(inst, method, s) {
            Ok((x, r)) => (Some(r), "ok".to_string(), Some(x)),
            Err(e) => {
                eprintln!("qsylv: {} n={} {method}: {e}", kind.name(), inst.n());
                (None, status_of(&e), None)
            }
        };
        if let (Some(x), Some(base)) = (&x, dump) {
            let path = dump_path(base, method, methods.len() > 1);
            serialize(x, BufWriter::new(File::create(&path)?))?;
        }
        let oracle_error = match (&x, &oracle) {
            (Some(x), Some(xo)) => Some((x.to_dense() - xo).norm() / xo.norm()),
            _ => None,
        };
        rows.push(Row { problem: kind.name(), n: inst.n(), method: method.to_string(), report, status, oracle_error });
    }
    Ok(rows)
}

fn loaded_row(kind: ProblemKind, inst: &Instance, path: &Path, with_oracle: bool) -> Result<Row> {
    let x = deserialize(io::BufReader::new(File::open(path)?))?;
    if x.rows() != inst.n() || x.cols() != inst.n() {
        return Err(Error::invalid(format!("{} holds a {}x{} matrix, problem has n = {}", path.display(), x.rows(), x.cols(), inst.n())));
    }
    let residual = residual_of(inst, &x)?;
    let oracle_error = if with_oracle {
        oracle_solution(inst).map(|xo| (x.to_dense() - &xo).norm() / xo.norm())
    } else {
        None
    };
    let report = SolverReport {
        method: Method::Dense,
        iterations: 0,
        residual,
        qs_rank: x.hodlr_rank(),
        elapsed: 0.0,
        memory_bytes: x.bytes(),
        flops: 0,
    };
    Ok(Row {
        problem: kind.name(),
        n: inst.n(),
        method: "loaded".into(),
        report: Some(report),
        status: "ok".into(),
        oracle_error,
    })
}

/// Least-squares slope `α` of `log(y / log^β n) = log c + α log n`.
pub fn fit_exponent(ns: &[f64], ys: &[f64], log_power: f64) -> f64 {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0 && y.is_finite())
        .map(|(&n, &y)| (n.ln(), (y / n.ln().powf(log_power)).ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn fit_rows(rows: &[Row], methods: &[Method], problem: &'static str, with_oracle: bool) -> Vec<String> {
    methods
        .iter()
        .map(|m| {
            let ok: Vec<&SolverReport> = rows
                .iter()
                .filter(|r| r.method == m.name())
                .filter_map(|r| r.report.as_ref())
                .collect();
            let ns: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == m.name() && r.report.is_some())
                .map(|r| r.n as f64)
                .collect();
            let time = fit_exponent(&ns, &ok.iter().map(|r| r.elapsed).collect::<Vec<_>>(), 0.0);
            let flops = fit_exponent(&ns, &ok.iter().map(|r| r.flops as f64).collect::<Vec<_>>(), 0.0);
            let mut f = vec![
                problem.to_string(),
                "fit".into(),
                m.to_string(),
                fmt_real(time),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                fmt_real(flops),
                "fit".into(),
            ];
            if with_oracle {
                f.push(String::new());
            }
            f.join(",")
        })
        .collect()
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let c = &args.common;
            let s = Settings::from(c)?;
            let size = match c.problem {
                ProblemKind::Heat => args.m.or(args.n),
                _ => args.n.or(args.m),
            }
            .ok_or_else(|| Error::invalid("run needs --n (or --m for heat)"))?;
            let inst = build_problem(c.problem, size, c.tau, c.seed, &s.cfg)?;
            let methods: Vec<Method> = c.methods.iter().map(|&m| m.into()).collect();
            let rows = match &args.load {
                Some(path) => vec![loaded_row(c.problem, &inst, path, c.oracle)?],
                None => run_cell(c.problem, &inst, &methods, &s, c.oracle, args.dump.as_deref())?,
            };
            let mut out = open_output(c.output.as_deref())?;
            writeln!(out, "{}", header(c.oracle))?;
            for r in &rows {
                writeln!(out, "{}", r.csv(c.oracle))?;
            }
            out.flush()?;
            Ok(if rows.iter().all(|r| r.report.is_some()) { EXIT_OK } else { EXIT_SOLVER_FAILURE })
        }
        Command::Sweep(args) => {
            let c = &args.common;
            if args.grid.is_empty() {
                return Err(Error::invalid("empty --n-grid"));
            }
            let s = Settings::from(c)?;
            let methods: Vec<Method> = c.methods.iter().map(|&m| m.into()).collect();
            let mut out = open_output(c.output.as_deref())?;
            writeln!(out, "{}", header(c.oracle))?;
            let mut rows = Vec::new();
            for &size in &args.grid {
                let inst = build_problem(c.problem, size, c.tau, c.seed, &s.cfg)?;
                for r in run_cell(c.problem, &inst, &methods, &s, c.oracle, None)? {
                    writeln!(out, "{}", r.csv(c.oracle))?;
                    out.flush()?;
                    rows.push(r);
                }
            }
            for line in fit_rows(&rows, &methods, c.problem.name(), c.oracle) {
                writeln!(out, "{line}")?;
            }
            out.flush()?;
            Ok(if rows.iter().all(|r| r.report.is_some()) { EXIT_OK } else { EXIT_SOLVER_FAILURE })
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e @ Error::InvalidInput(_)) => {
            eprintln!("qsylv: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("qsylv: {e}");
            EXIT_SOLVER_FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &str, out: &Path) -> (i32, String) {
        let mut v: Vec<String> = format!("qsylv {args}").split_whitespace().map(String::from).collect();
        v.push("--output".into());
        v.push(out.display().to_string());
        let code = run_cli(v);
        (code, std::fs::read_to_string(out).unwrap_or_default())
    }

    #[test]
    fn run_emits_one_row_per_method() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o.csv");
        let (code, csv) = run("run --problem heat --m 8 --block-size 16 --method sign --method expint --method cg", &out);
        assert_eq!(code, 0);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        for l in &lines[1..] {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 10);
            assert_eq!(f[1], "48");
            assert_eq!(f[9], "ok");
            assert!(f[4].parse::<f64>().unwrap() < if f[2] == "expint" { 1e-7 } else { 1e-9 });
            assert_eq!(f[4].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
        }
    }

    #[test]
    fn defaults_match_explicit_flags_and_dump_load() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        let dump = dir.path().join("x.hodlr");
        let (_, ca) = run(&format!("run --problem laplace-log --n 64 --method expint --dump {}", dump.display()), &a);
        let (_, cb) = run("run --problem laplace-log --n 64 --method expint --quad-points 32 --quad-L 100", &b);
        let strip = |s: &str| -> Vec<String> {
            s.lines().map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                [f[0], f[1], f[2], f[4], f[5], f[6], f[8], f[9]].join(",")
            }).collect()
        };
        assert_eq!(strip(&ca), strip(&cb));
        let l = dir.path().join("l.csv");
        let (code, cl) = run(&format!("run --problem laplace-log --n 64 --method sign --load {}", dump.display()), &l);
        assert_eq!(code, 0);
        let row: Vec<&str> = cl.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[2], "loaded");
        assert_eq!(row[4], ca.lines().nth(1).unwrap().split(',').nth(4).unwrap());
    }

    #[test]
    fn sweep_with_oracle_and_fit_row() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s.csv");
        let (code, csv) = run("sweep --problem laplace-log --n-grid 64,128 --block-size 32 --method sign --oracle", &out);
        assert_eq!(code, 0);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].ends_with(",oracle_error"));
        assert_eq!(lines.len(), 4);
        for l in &lines[1..3] {
            let err: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
            assert!(err <= 1e-8);
        }
        let fit: Vec<&str> = lines[3].split(',').collect();
        assert_eq!((fit[1], fit[9]), ("fit", "fit"));
        assert!(fit[8].parse::<f64>().unwrap() > 0.5);
    }

    #[test]
    fn usage_and_solver_errors() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("e.csv");
        assert_eq!(run("run --problem nope --n 8 --method sign", &out).0, EXIT_USAGE);
        assert_eq!(run("run --problem heat --m 4 --method magic", &out).0, EXIT_USAGE);
        assert_eq!(run("run --problem heat --m 4 --method sign --bogus", &out).0, EXIT_USAGE);
        assert_eq!(run("sweep --problem heat --method sign", &out).0, EXIT_USAGE);
        assert_eq!(run("sweep --problem heat --n-grid= --method sign", &out).0, EXIT_USAGE);
        let (code, csv) = run("run --problem test2 --n 32 --method sign --method dense", &out);
        assert_eq!(code, EXIT_SOLVER_FAILURE);
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert!(rows[0].ends_with("failed:invalid-input"));
        assert!(rows[1].ends_with(",ok"));
    }

    #[test]
    fn fit_recovers_exponents() {
        let ns = [512.0, 1024.0, 2048.0, 4096.0];
        let ys: Vec<f64> = ns.iter().map(|n: &f64| 3.0 * n.powf(1.1) * n.ln().powi(2)).collect();
        assert!((fit_exponent(&ns, &ys, 2.0) - 1.1).abs() < 1e-12);
        assert!(fit_exponent(&ns[..1], &ys[..1], 0.0).is_nan());
    }
}
