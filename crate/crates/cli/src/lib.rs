//! The `brp` command line: `bound`, `solve`, `generate` and `bench`.
//!
//! Exit codes: 0 success, 1 usage, 2 unreadable or malformed input,
//! 3 infeasible instance.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use brp_core::bench::{self, Algorithm, BenchConfig, RunSettings};
use brp_core::bounds::{lb1, lb3, lb4_bruteforce, lb_ubalb, BoundBreakdown, BoundError};
use brp_core::instance::{self, generate_lbri_manifest, generate_manifest, Manifest};
use brp_core::{solve_bbs, solve_exact, Beta, ExactStatus, LbKind, Move, PolicyId, UbPolicy, Yard};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Restricted block relocation: lower bounds, heuristics and exact search.
#[derive(Parser, Debug)]
#[command(name = "brp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a lower bound and its per-retrieval breakdown
    Bound(BoundArgs),
    /// Solve one instance
    Solve(SolveArgs),
    /// Write random instances and a manifest
    Generate(GenerateArgs),
    /// Run algorithms over a manifest and summarise
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Lb1,
    Lb3,
    Ubalb,
    #[value(name = "lb4-bf")]
    Lb4Bf,
}

#[derive(Args, Debug)]
struct BoundArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "ubalb")]
    method: Method,
}

/// Solver flags shared by `solve` and `bench`.
#[derive(Args, Debug)]
struct SolverFlags {
    /// Seconds, or `none`
    #[arg(long, default_value = "1.0", value_parser = parse_time_limit)]
    time_limit: TimeLimit,
    /// Beam width: `auto`, `inf` or a positive integer
    #[arg(long, default_value = "auto", value_parser = parse_beta)]
    beta: Beta,
    /// Upper-bound policy of the beam: `auto` or a policy name
    #[arg(long, default_value = "auto", value_parser = parse_ub)]
    ub: UbPolicy,
    /// Bound used for pruning
    #[arg(long, default_value = "ubalb", value_parser = parse_lb)]
    lb: LbKind,
}

impl SolverFlags {
    fn settings(&self) -> RunSettings {
        RunSettings {
            time_limit: self.time_limit.0,
            beta: self.beta,
            ub_policy: self.ub,
            lb_kind: self.lb,
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    file: PathBuf,
    /// `bbs`, `exact` or `greedy:<policy>`
    #[arg(long, default_value = "bbs", value_parser = parse_algo)]
    algo: Algorithm,
    #[command(flatten)]
    solver: SolverFlags,
    /// Print the move sequence, one move per line
    #[arg(long)]
    emit_moves: bool,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, required_unless_present = "lbri", conflicts_with = "lbri")]
    w: Option<usize>,
    #[arg(long, required_unless_present = "lbri", conflicts_with = "lbri")]
    h: Option<usize>,
    #[arg(long, required_unless_present = "lbri", conflicts_with = "lbri")]
    n: Option<usize>,
    /// Instances per configuration
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// The large-instance set: 84 configurations, 100 instances each by default
    #[arg(long)]
    lbri: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated list of `bbs`, `exact`, `greedy:<policy>`
    #[arg(long, value_delimiter = ',', default_value = "bbs", value_parser = parse_algo)]
    algos: Vec<Algorithm>,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Worker threads, 0 for one per core
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Also run the exact solver and report optimality
    #[arg(long)]
    exact_reference: bool,
    /// Time limit of the exact reference, seconds or `none`
    #[arg(long, default_value = "60", value_parser = parse_time_limit)]
    exact_time_limit: TimeLimit,
}

/// `None` means no limit.
#[derive(Clone, Copy, Debug)]
struct TimeLimit(Option<Duration>);

fn parse_time_limit(s: &str) -> Result<TimeLimit, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(TimeLimit(None));
    }
    let secs: f64 = s
        .parse()
        .map_err(|_| format!("not a number of seconds: {s}"))?;
    Duration::try_from_secs_f64(secs)
        .map(|d| TimeLimit(Some(d)))
        .map_err(|_| format!("invalid duration: {s}"))
}

fn parse_beta(s: &str) -> Result<Beta, String> {
    match s {
        "auto" => Ok(Beta::Auto),
        "inf" | "unbounded" => Ok(Beta::Unbounded),
        _ => match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(Beta::Width(k)),
            _ => Err(format!("expected auto, inf or a positive integer, got {s}")),
        },
    }
}

fn parse_ub(s: &str) -> Result<UbPolicy, String> {
    if s == "auto" {
        return Ok(UbPolicy::Auto);
    }
    s.parse::<PolicyId>()
        .map(UbPolicy::Fixed)
        .map_err(|e| e.to_string())
}

fn parse_lb(s: &str) -> Result<LbKind, String> {
    s.parse()
        .map_err(|e: brp_core::bounds::ParseLbKindError| e.to_string())
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse()
        .map_err(|e: bench::ParseAlgorithmError| e.to_string())
}

/// A failed command: message and exit code.
struct Failure(i32, String);

type CmdResult = Result<(), Failure>;

fn io_failure(e: io::Error) -> Failure {
    Failure(EXIT_USAGE, format!("write failed: {e}"))
}

fn load(path: &Path) -> Result<Yard, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    instance::read_instance(&text)
        .map(|(y, _)| y)
        .map_err(|e| Failure(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn cmd_bound(args: &BoundArgs, out: &mut dyn Write) -> CmdResult {
    let yard = load(&args.file)?;
    let result: Result<BoundBreakdown, BoundError> = match args.method {
        Method::Lb1 => {
            // Every relaxation term is zero.
            let mut b = lb3(&yard);
            b.steps.iter_mut().for_each(|s| s.relax = 0);
            b.total = lb1(&yard);
            Ok(b)
        }
        Method::Lb3 => Ok(lb3(&yard)),
        Method::Ubalb => lb_ubalb(&yard),
        Method::Lb4Bf => lb4_bruteforce(&yard),
    };
    let breakdown = result.map_err(|e| match e {
        BoundError::TooLarge { .. } => Failure(EXIT_USAGE, format!("lb4-bf: {e}")),
        _ => Failure(EXIT_INFEASIBLE, format!("infeasible: {e}")),
    })?;
    let name = args
        .method
        .to_possible_value()
        .map(|v| v.get_name().to_string());
    (|| -> io::Result<()> {
        writeln!(out, "method {}", name.unwrap_or_default())?;
        writeln!(out, "total {}", breakdown.total)?;
        writeln!(out, "target blockers relax")?;
        for s in &breakdown.steps {
            writeln!(out, "{} {} {}", s.target, s.blockers, s.relax)?;
        }
        Ok(())
    })()
    .map_err(io_failure)
}

struct Report {
    status: &'static str,
    reshuffles: Option<usize>,
    elapsed: Duration,
    optimal: bool,
    moves: Vec<Move>,
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> CmdResult {
    let yard = load(&args.file)?;
    let settings = args.solver.settings();
    let start = Instant::now();
    let report = match args.algo {
        Algorithm::Bbs => {
            let s = solve_bbs(&yard, &settings.beam_config());
            Report {
                status: if s.is_feasible() { "ok" } else { "infeasible" },
                reshuffles: s.is_feasible().then_some(s.reshuffles),
                elapsed: s.elapsed,
                optimal: s.is_feasible() && s.proven_optimal,
                moves: s.moves,
            }
        }
        Algorithm::Greedy(p) => {
            let run = brp_core::playout(p, &yard, None);
            Report {
                status: if run.completed { "ok" } else { "infeasible" },
                reshuffles: run.completed.then_some(run.reshuffles),
                elapsed: start.elapsed(),
                optimal: false,
                moves: if run.completed { run.moves } else { Vec::new() },
            }
        }
        Algorithm::Exact => {
            let r = solve_exact(&yard, settings.lb_kind, settings.time_limit, None);
            let status = match (r.status, &r.best) {
                (ExactStatus::Infeasible, _) => "infeasible",
                (ExactStatus::Timeout, None) => "timeout",
                _ => "ok",
            };
            Report {
                status,
                reshuffles: r.best.as_ref().map(|s| s.reshuffles),
                elapsed: start.elapsed(),
                optimal: r.status == ExactStatus::Optimal,
                moves: r.best.map(|s| s.moves).unwrap_or_default(),
            }
        }
    };
    (|| -> io::Result<()> {
        writeln!(out, "algorithm {}", args.algo)?;
        writeln!(out, "status {}", report.status)?;
        match report.reshuffles {
            Some(r) => writeln!(out, "reshuffles {r}")?,
            None => writeln!(out, "reshuffles -")?,
        }
        writeln!(out, "elapsed_s {:.6}", report.elapsed.as_secs_f64())?;
        writeln!(out, "optimal {}", report.optimal)?;
        if args.emit_moves {
            for m in &report.moves {
                writeln!(out, "{m}")?;
            }
        }
        Ok(())
    })()
    .map_err(io_failure)?;
    if report.status == "infeasible" {
        return Err(Failure(EXIT_INFEASIBLE, "instance is infeasible".into()));
    }
    Ok(())
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> CmdResult {
    let manifest = if args.lbri {
        generate_lbri_manifest(&args.out_dir, args.count.unwrap_or(100), args.seed)
    } else {
        let (w, h, n) = (args.w.unwrap(), args.h.unwrap(), args.n.unwrap());
        generate_manifest(
            &args.out_dir,
            &[(w, h, n)],
            args.count.unwrap_or(1),
            args.seed,
            "inst",
        )
    }
    .map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
    writeln!(
        out,
        "wrote {} instances and {}",
        manifest.entries.len(),
        args.out_dir.join(instance::MANIFEST_FILE).display()
    )
    .map_err(io_failure)
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let manifest = Manifest::read(&args.manifest)
        .map_err(|e| Failure(EXIT_PARSE, format!("{}: {e}", args.manifest.display())))?;
    let config = BenchConfig {
        algorithms: args.algos.clone(),
        settings: args.solver.settings(),
        parallel: args.parallel,
        exact_reference: args
            .exact_reference
            .then(|| args.exact_time_limit.0.unwrap_or(Duration::MAX)),
    };
    let records = bench::run_bench(&manifest.entries, &config)
        .map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
    for r in records.iter().filter(|r| r.reshuffles.is_none()) {
        let _ = writeln!(err, "{} {}: {}", r.instance, r.algorithm, r.status);
    }
    let file = fs::File::create(&args.out)
        .map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", args.out.display())))?;
    bench::write_csv(io::BufWriter::new(file), &records)
        .map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;

    let reread = fs::File::open(&args.out)
        .map_err(io_failure)
        .and_then(|f| bench::read_csv(f).map_err(|e| Failure(EXIT_USAGE, e.to_string())))?;
    write!(out, "{}", bench::render_summary(&bench::summarize(&reread))).map_err(io_failure)?;
    writeln!(out, "wrote {} rows to {}", reread.len(), args.out.display()).map_err(io_failure)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match &cli.command {
        Command::Bound(a) => cmd_bound(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Generate(a) => cmd_generate(a, out),
        Command::Bench(a) => cmd_bench(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}
