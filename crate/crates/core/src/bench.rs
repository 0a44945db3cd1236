//! Batch runs over a manifest: one CSV row per (instance, algorithm) and a
//! per-group summary recomputed from the rows.

use std::fmt;
use std::io;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::{solve_bbs, BeamConfig, Beta, UbPolicy};
use crate::bounds::{lower_bound, LbKind};
use crate::exact::{solve_exact, ExactStatus};
use crate::instance::ManifestEntry;
use crate::policies::{playout, PolicyId};
use crate::yard::Yard;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Bbs,
    Greedy(PolicyId),
    Exact,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Bbs => f.write_str("bbs"),
            Algorithm::Greedy(p) => write!(f, "greedy:{p}"),
            Algorithm::Exact => f.write_str("exact"),
        }
    }
}

#[derive(Debug, Clone, Error)]
#[error("unknown algorithm {0:?}; expected bbs, exact or greedy:<policy>")]
pub struct ParseAlgorithmError(String);

impl FromStr for Algorithm {
    type Err = ParseAlgorithmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bbs" => Ok(Algorithm::Bbs),
            "exact" => Ok(Algorithm::Exact),
            _ => s
                .strip_prefix("greedy:")
                .and_then(|p| p.parse().ok())
                .map(Algorithm::Greedy)
                .ok_or_else(|| ParseAlgorithmError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Timeout,
    Infeasible,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Ok => "ok",
            RunStatus::Timeout => "timeout",
            RunStatus::Infeasible => "infeasible",
        })
    }
}

/// Name used for rows produced by the exact reference run.
pub const EXACT_REFERENCE: &str = "exact-ref";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub w: usize,
    pub h: usize,
    pub n: usize,
    pub algorithm: String,
    /// Empty when no solution was found.
    pub reshuffles: Option<usize>,
    pub time_s: f64,
    pub status: RunStatus,
    pub lb: usize,
    /// Empty unless an exact reference proved the optimum.
    pub optimal: Option<bool>,
}

/// Solver settings shared by every run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub time_limit: Option<Duration>,
    pub beta: Beta,
    pub ub_policy: UbPolicy,
    pub lb_kind: LbKind,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            time_limit: Some(Duration::from_secs(1)),
            beta: Beta::Auto,
            ub_policy: UbPolicy::Auto,
            lb_kind: LbKind::Ubalb,
        }
    }
}

impl RunSettings {
    pub fn beam_config(&self) -> BeamConfig {
        BeamConfig {
            beta: self.beta,
            ub_policy: self.ub_policy,
            lb_kind: self.lb_kind,
            time_limit: self.time_limit,
            dedup: false,
        }
    }
}

/// Result of one solver run, before it is attached to an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub reshuffles: Option<usize>,
    pub elapsed: Duration,
    pub status: RunStatus,
    pub proven_optimal: bool,
}

pub fn run_algorithm(algo: Algorithm, yard: &Yard, settings: &RunSettings) -> RunOutcome {
    let start = Instant::now();
    match algo {
        Algorithm::Bbs => {
            let s = solve_bbs(yard, &settings.beam_config());
            RunOutcome {
                reshuffles: s.is_feasible().then_some(s.reshuffles),
                elapsed: start.elapsed(),
                status: if s.is_feasible() {
                    RunStatus::Ok
                } else {
                    RunStatus::Infeasible
                },
                proven_optimal: s.proven_optimal,
            }
        }
        Algorithm::Greedy(p) => {
            let run = playout(p, yard, None);
            RunOutcome {
                reshuffles: run.completed.then_some(run.reshuffles),
                elapsed: start.elapsed(),
                status: if run.completed {
                    RunStatus::Ok
                } else {
                    RunStatus::Infeasible
                },
                proven_optimal: false,
            }
        }
        Algorithm::Exact => {
            let r = solve_exact(yard, settings.lb_kind, settings.time_limit, None);
            let status = match r.status {
                ExactStatus::Optimal | ExactStatus::FeasibleBound => RunStatus::Ok,
                ExactStatus::Infeasible => RunStatus::Infeasible,
                ExactStatus::Timeout if r.best.is_some() => RunStatus::Ok,
                ExactStatus::Timeout => RunStatus::Timeout,
            };
            RunOutcome {
                reshuffles: r.best.as_ref().map(|s| s.reshuffles),
                elapsed: start.elapsed(),
                status,
                proven_optimal: r.status == ExactStatus::Optimal,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub algorithms: Vec<Algorithm>,
    pub settings: RunSettings,
    /// Worker threads; 0 lets rayon decide.
    pub parallel: usize,
    /// Time limit of the exact reference run, `None` to skip it.
    pub exact_reference: Option<Duration>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn failed_row(entry: &ManifestEntry, algorithm: String) -> BenchRecord {
    BenchRecord {
        instance: entry.id.clone(),
        w: entry.w,
        h: entry.h,
        n: entry.n,
        algorithm,
        reshuffles: None,
        time_s: 0.0,
        status: RunStatus::Infeasible,
        lb: 0,
        optimal: None,
    }
}

fn bench_instance(entry: &ManifestEntry, config: &BenchConfig) -> Vec<BenchRecord> {
    let mut names: Vec<String> = config.algorithms.iter().map(|a| a.to_string()).collect();
    if config.exact_reference.is_some() {
        names.push(EXACT_REFERENCE.to_string());
    }
    let Ok(yard) = entry.load() else {
        return names.into_iter().map(|a| failed_row(entry, a)).collect();
    };
    let lb = lower_bound(LbKind::Ubalb, &yard).unwrap_or(0);

    let optimum = config.exact_reference.map(|limit| {
        let settings = RunSettings {
            time_limit: Some(limit),
            ..config.settings.clone()
        };
        run_algorithm(Algorithm::Exact, &yard, &settings)
    });
    let proven = optimum
        .as_ref()
        .filter(|o| o.proven_optimal)
        .and_then(|o| o.reshuffles);

    let row = |algorithm: String, out: &RunOutcome| BenchRecord {
        instance: entry.id.clone(),
        w: entry.w,
        h: entry.h,
        n: entry.n,
        algorithm,
        reshuffles: out.reshuffles,
        time_s: out.elapsed.as_secs_f64(),
        status: out.status,
        lb,
        optimal: proven.map(|opt| out.reshuffles == Some(opt)),
    };
    let mut rows: Vec<BenchRecord> = config
        .algorithms
        .iter()
        .map(|&a| row(a.to_string(), &run_algorithm(a, &yard, &config.settings)))
        .collect();
    if let Some(o) = &optimum {
        rows.push(row(EXACT_REFERENCE.to_string(), o));
    }
    rows
}

/// Runs every algorithm on every manifest entry. Rows come back in manifest
/// order regardless of `parallel`. Unreadable instances yield failed rows.
pub fn run_bench(
    entries: &[ManifestEntry],
    config: &BenchConfig,
) -> Result<Vec<BenchRecord>, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallel)
        .build()?;
    let rows: Vec<Vec<BenchRecord>> = pool.install(|| {
        entries
            .par_iter()
            .map(|e| bench_instance(e, config))
            .collect()
    });
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_csv<W: io::Write>(out: W, records: &[BenchRecord]) -> Result<(), BenchError> {
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<BenchRecord>, BenchError> {
    let mut reader = csv::Reader::from_reader(input);
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoSummary {
    pub algorithm: String,
    /// Mean over rows with a solution.
    pub avg_reshuffles: f64,
    pub avg_time_s: f64,
    pub wins: usize,
    pub solved: usize,
    pub runs: usize,
    /// Rows matching the proven optimum, when a reference exists.
    pub optimal: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub w: usize,
    pub h: usize,
    pub n: usize,
    pub instances: usize,
    pub algorithms: Vec<AlgoSummary>,
    /// Mean proven optimum over the instances where the reference finished.
    pub avg_optimum: Option<f64>,
}

/// Aggregates rows by `(w, h, n)`. Ties for the per-instance minimum credit a
/// win to every tied algorithm. Reference rows take part in the Opt column
/// only.
pub fn summarize(records: &[BenchRecord]) -> Vec<GroupSummary> {
    use std::collections::BTreeMap;

    let mut groups: BTreeMap<(usize, usize, usize), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.w, r.h, r.n)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((w, h, n), rows) in groups {
        let mut algos: Vec<String> = Vec::new();
        let mut instances: Vec<&str> = Vec::new();
        for r in &rows {
            if r.algorithm != EXACT_REFERENCE && !algos.contains(&r.algorithm) {
                algos.push(r.algorithm.clone());
            }
            if !instances.contains(&r.instance.as_str()) {
                instances.push(&r.instance);
            }
        }

        let mut wins: BTreeMap<&str, usize> = BTreeMap::new();
        let mut optima = Vec::new();
        for inst in &instances {
            let of_inst: Vec<&&BenchRecord> = rows.iter().filter(|r| r.instance == *inst).collect();
            let best = of_inst
                .iter()
                .filter(|r| r.algorithm != EXACT_REFERENCE)
                .filter_map(|r| r.reshuffles)
                .min();
            if let Some(best) = best {
                for r in of_inst.iter().filter(|r| r.algorithm != EXACT_REFERENCE) {
                    if r.reshuffles == Some(best) {
                        *wins.entry(r.algorithm.as_str()).or_default() += 1;
                    }
                }
            }
            if let Some(r) = of_inst.iter().find(|r| r.algorithm == EXACT_REFERENCE) {
                if r.optimal == Some(true) {
                    optima.push(r.reshuffles.unwrap_or(0) as f64);
                }
            }
        }

        let algorithms = algos
            .iter()
            .map(|a| {
                let mine: Vec<&&BenchRecord> = rows.iter().filter(|r| &r.algorithm == a).collect();
                let solved: Vec<f64> = mine
                    .iter()
                    .filter_map(|r| r.reshuffles)
                    .map(|x| x as f64)
                    .collect();
                let with_ref: Vec<bool> = mine.iter().filter_map(|r| r.optimal).collect();
                AlgoSummary {
                    algorithm: a.clone(),
                    avg_reshuffles: mean(&solved),
                    avg_time_s: mean(&mine.iter().map(|r| r.time_s).collect::<Vec<_>>()),
                    wins: wins.get(a.as_str()).copied().unwrap_or(0),
                    solved: solved.len(),
                    runs: mine.len(),
                    optimal: (!with_ref.is_empty())
                        .then(|| with_ref.iter().filter(|&&o| o).count()),
                }
            })
            .collect();
        out.push(GroupSummary {
            w,
            h,
            n,
            instances: instances.len(),
            algorithms,
            avg_optimum: (!optima.is_empty()).then(|| mean(&optima)),
        });
    }
    out
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Plain-text rendering of [`summarize`].
pub fn render_summary(groups: &[GroupSummary]) -> String {
    use std::fmt::Write as _;

    let mut out = String::new();
    for g in groups {
        let _ = write!(
            out,
            "w={} h={} n={} instances={}",
            g.w, g.h, g.n, g.instances
        );
        if let Some(opt) = g.avg_optimum {
            let _ = write!(out, " Opt={opt:.2}");
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "  {:<24} {:>8} {:>9} {:>6} {:>7}",
            "algorithm", "Resh", "Time", "#wins", "solved"
        );
        for a in &g.algorithms {
            let _ = write!(
                out,
                "  {:<24} {:>8.2} {:>9.3} {:>6} {:>3}/{:<3}",
                a.algorithm, a.avg_reshuffles, a.avg_time_s, a.wins, a.solved, a.runs
            );
            if let Some(k) = a.optimal {
                let _ = write!(out, " opt={k}");
            }
            out.push('\n');
        }
    }
    out
}
