//! The `dpdp` command-line front end.
//!
//! Four subcommands: `solve` runs the solver over a set of instances and
//! writes a report plus one solution file per instance; `generate` writes
//! random instances; `verify` compares solver results against the exact
//! oracles; `bench` sweeps configurations and summarizes each one.
//!
//! Exit codes: 0 on success, 1 when a solve fails or disagrees with the
//! oracle, 2 on usage errors.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::{full_tsp_beam, solve, Outcome, SolverConfig};
use crate::heatmap::{Heatmap, Sparsity, DEFAULT_THRESHOLD};
use crate::instance::{generate_tsp, generate_tsptw, generate_vrp, Instance, ProblemKind};
use crate::oracle::exact_dp;
use crate::policy::PolicyKind;
use crate::solution::{Solution, TOLERANCE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dpdp", version, about = "Deep Policy Dynamic Programming solver for TSP, CVRP and TSPTW")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve instances and write a report and solution files.
    Solve(SolveArgs),
    /// Write random instances.
    Generate(GenerateArgs),
    /// Compare solver results with the exact oracles.
    Verify(VerifyArgs),
    /// Sweep solver configurations and summarize each.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn is_on(self) -> bool {
        self == OnOff::On
    }
}

/// Where instances come from: files, or generated on the fly.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    #[arg(long)]
    pub problem: ProblemKind,
    /// Instance file, or directory of `.json` instance files.
    #[arg(long, conflicts_with = "n")]
    pub instances: Option<PathBuf>,
    /// Generate instances of this size instead (customers for VRP, nodes
    /// otherwise).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Seed of the first generated instance; instance k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum time-window width for generated TSPTW instances.
    #[arg(long, default_value_t = 100.0)]
    pub max_window: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    /// Directory of `<id>.heatmap` files; without it the cost heuristic is used.
    #[arg(long)]
    pub heatmap_dir: Option<PathBuf>,
    #[arg(long, default_value = "heat-potential")]
    pub policy: PolicyKind,
    /// Use 1 - c_ij / max_k c_ik as the cost heuristic.
    #[arg(long)]
    pub invert_cost_heat: bool,
    #[arg(long, value_enum, default_value = "on")]
    pub dominance: OnOff,
    #[arg(long, value_enum, default_value = "off")]
    pub score_bound_prefilter: OnOff,
}

#[derive(Debug, Clone, Args)]
pub struct SparsityArgs {
    /// Keep edges with heat at least this value (default 1e-5).
    #[arg(long, conflicts_with = "knn")]
    pub threshold: Option<f64>,
    /// Keep each node's k nearest neighbours instead.
    #[arg(long)]
    pub knn: Option<usize>,
}

impl SparsityArgs {
    fn sparsity(&self) -> Sparsity {
        match (self.threshold, self.knn) {
            (_, Some(k)) => Sparsity::Knn(k),
            (Some(t), None) => Sparsity::Threshold(t),
            (None, None) => Sparsity::Threshold(DEFAULT_THRESHOLD),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Worker threads for solving instances concurrently.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// CSV of `id,cost` reference costs for gap reporting.
    #[arg(long)]
    pub ref_costs: Option<PathBuf>,
    /// Output directory for reports and solution files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub sparsity: SparsityArgs,
    #[arg(long, default_value_t = 1000)]
    pub beam_size: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub problem: ProblemKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100.0)]
    pub max_window: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub sparsity: SparsityArgs,
    /// Defaults to n * 2^n for TSP and 10^6 otherwise.
    #[arg(long)]
    pub beam_size: Option<usize>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub heatmap_dir: Option<PathBuf>,
    #[arg(long)]
    pub invert_cost_heat: bool,
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    pub beam_sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "heat-potential")]
    pub policies: Vec<PolicyKind>,
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub knn: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "on")]
    pub dominance: Vec<OnOff>,
    #[arg(long, value_enum, default_value = "off")]
    pub score_bound_prefilter: OnOff,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A usage error: reported with exit code 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// One instance of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub problem: String,
    /// `solved`, `no-solution` or `error`.
    pub status: String,
    pub cost: Option<f64>,
    pub feasible: bool,
    pub beam_size: usize,
    pub policy: String,
    pub sparsification: String,
    pub dominance: bool,
    pub solve_time_s: f64,
    pub heatmap_time_s: f64,
    pub gap: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub instances: usize,
    pub solved: usize,
    /// Mean over solved instances.
    pub mean_cost: Option<f64>,
    /// Mean of `(cost - ref) / ref` over instances with a reference cost.
    pub mean_gap: Option<f64>,
    pub total_solve_time_s: f64,
    pub total_heatmap_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    pub aggregate: Aggregate,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl Aggregate {
    pub fn from_rows(rows: &[ReportRow]) -> Self {
        Aggregate {
            instances: rows.len(),
            solved: rows.iter().filter(|r| r.status == "solved").count(),
            mean_cost: mean(rows.iter().filter_map(|r| r.cost)),
            mean_gap: mean(rows.iter().filter_map(|r| r.gap)),
            total_solve_time_s: rows.iter().map(|r| r.solve_time_s).sum(),
            total_heatmap_time_s: rows.iter().map(|r| r.heatmap_time_s).sum(),
        }
    }
}

impl RunReport {
    pub fn new(rows: Vec<ReportRow>) -> Self {
        let aggregate = Aggregate::from_rows(&rows);
        RunReport { rows, aggregate }
    }

    pub fn to_csv(&self) -> String {
        to_csv(&self.rows)
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

/// Reads `id,cost` lines; a header line is allowed.
pub fn read_ref_costs(path: &Path) -> anyhow::Result<HashMap<String, f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read reference costs {}", path.display()))?;
    let mut out = HashMap::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: bad CSV", path.display()))?;
        if rec.len() != 2 {
            bail!("{}:{}: expected 'id,cost'", path.display(), k + 1);
        }
        match rec[1].parse::<f64>() {
            Ok(c) => {
                out.insert(rec[0].to_string(), c);
            }
            Err(_) if k == 0 => {}
            Err(_) => bail!("{}:{}: bad cost '{}'", path.display(), k + 1, &rec[1]),
        }
    }
    Ok(out)
}

/// Loads or generates the instances, sorted by id.
pub fn load_instances(src: &SourceArgs) -> anyhow::Result<Vec<(String, Instance)>> {
    let mut out = Vec::new();
    if let Some(path) = &src.instances {
        let files: Vec<PathBuf> = if path.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .with_context(|| format!("cannot list {}", path.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .collect();
            files.sort();
            files
        } else if path.is_file() {
            vec![path.clone()]
        } else {
            return Err(usage(format!("no such instance path: {}", path.display())));
        };
        for file in files {
            let id = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let inst = Instance::read(&file).map_err(|e| usage(e.to_string()))?;
            if inst.kind() != src.problem {
                return Err(usage(format!(
                    "{} is a {} instance, expected {}",
                    file.display(),
                    inst.kind(),
                    src.problem
                )));
            }
            out.push((id, inst));
        }
    } else if let Some(n) = src.n {
        for k in 0..src.count as u64 {
            let seed = src.seed + k;
            let inst = generate(src.problem, n, seed, src.max_window).map_err(|e| usage(e.to_string()))?;
            out.push((instance_id(src.problem, n, seed), inst));
        }
    } else {
        return Err(usage("either --instances or --n is required"));
    }
    if out.is_empty() {
        return Err(usage("no instances found"));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn generate(problem: ProblemKind, n: usize, seed: u64, max_window: f64) -> crate::Result<Instance> {
    match problem {
        ProblemKind::Tsp => generate_tsp(n, seed),
        ProblemKind::Vrp => generate_vrp(n, seed),
        ProblemKind::Tsptw => generate_tsptw(n, seed, max_window),
    }
}

fn instance_id(problem: ProblemKind, n: usize, seed: u64) -> String {
    format!("{problem}_n{n}_s{seed:06}")
}

fn solver_config(beam_size: usize, policy: &PolicyArgs, sparsity: Sparsity) -> anyhow::Result<SolverConfig> {
    if beam_size == 0 {
        return Err(usage("--beam-size must be at least 1"));
    }
    if let Sparsity::Threshold(t) = sparsity {
        if !(0.0..1.0).contains(&t) {
            return Err(usage(format!("--threshold must be in [0, 1), got {t}")));
        }
    }
    Ok(SolverConfig {
        beam_size,
        policy: policy.policy,
        invert_cost_heat: policy.invert_cost_heat,
        sparsity,
        dominance: policy.dominance.is_on(),
        score_bound_prefilter: policy.score_bound_prefilter.is_on(),
    })
}

/// Loads `<dir>/<id>.heatmap` when the policy reads an external heatmap.
fn load_heatmap(dir: Option<&Path>, id: &str, instance: &Instance, policy: PolicyKind) -> crate::Result<Option<Heatmap>> {
    match dir {
        Some(dir) if !policy.uses_cost_heat() => {
            Heatmap::read(dir.join(format!("{id}.heatmap")), instance.len()).map(Some)
        }
        _ => Ok(None),
    }
}

/// Solves one instance and describes the result as a report row.
pub fn solve_row(
    id: &str,
    instance: &Instance,
    config: &SolverConfig,
    heatmap_dir: Option<&Path>,
    reference: Option<f64>,
) -> (ReportRow, Option<Solution>) {
    let mut row = ReportRow {
        id: id.to_string(),
        problem: instance.kind().to_string(),
        status: "error".into(),
        cost: None,
        feasible: false,
        beam_size: config.beam_size,
        policy: config.policy.to_string(),
        sparsification: config.sparsity.label(),
        dominance: config.dominance,
        solve_time_s: 0.0,
        heatmap_time_s: 0.0,
        gap: None,
        message: String::new(),
    };
    let t0 = Instant::now();
    let heatmap = load_heatmap(heatmap_dir, id, instance, config.policy);
    row.heatmap_time_s = t0.elapsed().as_secs_f64();
    let heatmap = match heatmap {
        Ok(h) => h,
        Err(e) => {
            row.message = e.to_string();
            return (row, None);
        }
    };
    let t0 = Instant::now();
    let result = solve(instance, heatmap.as_ref(), config);
    row.solve_time_s = t0.elapsed().as_secs_f64();
    match result {
        Err(e) => {
            row.message = e.to_string();
            (row, None)
        }
        Ok(r) => match r.outcome {
            Outcome::NoSolution { step } => {
                row.status = "no-solution".into();
                row.message = format!("beam emptied at step {step}");
                (row, None)
            }
            Outcome::Solved(sol) => {
                row.status = "solved".into();
                row.cost = Some(sol.cost);
                row.feasible = sol.feasible;
                row.gap = reference.map(|r| (sol.cost - r) / r);
                (row, Some(sol))
            }
        },
    }
}

fn pool(jobs: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    if jobs == Some(0) {
        return Err(usage("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .context("cannot start worker threads")
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn json_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn row_ok(row: &ReportRow) -> bool {
    row.status == "solved" || (row.status == "no-solution" && row.problem == ProblemKind::Tsptw.as_str())
}

fn summary_line(a: &Aggregate) -> String {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
    format!(
        "instances={} solved={} mean_cost={} mean_gap={} solve_time={:.3}s heatmap_time={:.3}s",
        a.instances,
        a.solved,
        opt(a.mean_cost),
        opt(a.mean_gap),
        a.total_solve_time_s,
        a.total_heatmap_time_s
    )
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let config = solver_config(args.beam_size, &args.policy, args.sparsity.sparsity())?;
    let refs = match &args.output.ref_costs {
        Some(p) => read_ref_costs(p).map_err(|e| usage(e.to_string()))?,
        None => HashMap::new(),
    };
    let instances = load_instances(&args.source)?;
    let heatmap_dir = args.policy.heatmap_dir.as_deref();
    let results: Vec<(ReportRow, Option<Solution>)> = pool(args.output.jobs)?.install(|| {
        instances
            .par_iter()
            .map(|(id, inst)| solve_row(id, inst, &config, heatmap_dir, refs.get(id).copied()))
            .collect()
    });

    let report = RunReport::new(results.iter().map(|(r, _)| r.clone()).collect());
    let body = if args.output.json {
        json_pretty(&report.rows)
    } else {
        report.to_csv()
    };
    if let Some(dir) = &args.output.out {
        for (row, sol) in &results {
            if let Some(sol) = sol {
                write_file(&dir.join("solutions").join(format!("{}.json", row.id)), &json_pretty(sol))?;
            }
        }
        let name = if args.output.json { "report.json" } else { "report.csv" };
        write_file(&dir.join(name), &body)?;
        write_file(&dir.join("summary.json"), &json_pretty(&report.aggregate))?;
    }
    out.write_all(body.as_bytes())?;
    for row in report.rows.iter().filter(|r| !row_ok(r)) {
        writeln!(err, "{}: {} {}", row.id, row.status, row.message)?;
    }
    writeln!(err, "{}", summary_line(&report.aggregate))?;
    Ok(if report.rows.iter().all(row_ok) {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    if args.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    for k in 0..args.count as u64 {
        let seed = args.seed + k;
        let inst = generate(args.problem, args.n, seed, args.max_window).map_err(|e| usage(e.to_string()))?;
        let path = args.out.join(format!("{}.json", instance_id(args.problem, args.n, seed)));
        write_file(&path, &inst.to_json())?;
        writeln!(out, "{}", path.display())?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct Verdict {
    id: String,
    solver: Option<f64>,
    oracle: Option<f64>,
    pass: bool,
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let instances = load_instances(&args.source)?;
    let sparsity = args.sparsity.sparsity();
    let heatmap_dir = args.policy.heatmap_dir.as_deref();
    let verdicts: Vec<anyhow::Result<Verdict>> = pool(args.jobs)?.install(|| {
        instances
            .par_iter()
            .map(|(id, inst)| {
                let beam_size = args.beam_size.unwrap_or(match inst.kind() {
                    ProblemKind::Tsp => full_tsp_beam(inst.len()),
                    _ => 1_000_000,
                });
                let config = solver_config(beam_size, &args.policy, sparsity)?;
                let oracle = exact_dp(inst).map_err(|e| usage(format!("{id}: {e}")))?;
                let (row, _) = solve_row(id, inst, &config, heatmap_dir, None);
                if row.status == "error" {
                    bail!("{id}: {}", row.message);
                }
                let pass = match (row.cost, oracle.optimal_cost) {
                    (Some(c), Some(o)) => row.feasible && (c - o).abs() <= TOLERANCE,
                    (None, None) => true,
                    _ => false,
                };
                Ok(Verdict {
                    id: id.clone(),
                    solver: row.cost,
                    oracle: oracle.optimal_cost,
                    pass,
                })
            })
            .collect()
    });
    let verdicts: Vec<Verdict> = verdicts.into_iter().collect::<anyhow::Result<_>>()?;

    let show = |v: Option<f64>| v.map_or("infeasible".to_string(), |c| format!("{c:.9}"));
    for v in &verdicts {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {} solver={} oracle={}", v.id, show(v.solver), show(v.oracle))?;
    }
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id.as_str()).collect();
    writeln!(
        out,
        "verify: {}/{} passed",
        verdicts.len() - failed.len(),
        verdicts.len()
    )?;
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        writeln!(out, "mismatches: {}", failed.join(" "))?;
        Ok(EXIT_FAILURE)
    }
}

/// One line of the bench summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub config: String,
    pub beam_size: usize,
    pub policy: String,
    pub sparsification: String,
    pub dominance: bool,
    pub instances: usize,
    pub solved: usize,
    pub mean_cost: Option<f64>,
    pub mean_gap: Option<f64>,
    pub mean_time_s: f64,
}

fn config_label(c: &SolverConfig) -> String {
    format!(
        "B={} policy={} sparsity={} dominance={}",
        c.beam_size,
        c.policy,
        c.sparsity.label(),
        if c.dominance { "on" } else { "off" }
    )
}

fn bench_configs(args: &BenchArgs) -> anyhow::Result<Vec<SolverConfig>> {
    let mut sparsities: Vec<Sparsity> = args.thresholds.iter().map(|&t| Sparsity::Threshold(t)).collect();
    sparsities.extend(args.knn.iter().map(|&k| Sparsity::Knn(k)));
    if sparsities.is_empty() {
        sparsities.push(Sparsity::default());
    }
    let mut configs = Vec::new();
    for &b in &args.beam_sizes {
        for &policy in &args.policies {
            for &sparsity in &sparsities {
                for &dom in &args.dominance {
                    let pa = PolicyArgs {
                        heatmap_dir: None,
                        policy,
                        invert_cost_heat: args.invert_cost_heat,
                        dominance: dom,
                        score_bound_prefilter: args.score_bound_prefilter,
                    };
                    configs.push(solver_config(b, &pa, sparsity)?);
                }
            }
        }
    }
    Ok(configs)
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let configs = bench_configs(args)?;
    let refs = match &args.output.ref_costs {
        Some(p) => read_ref_costs(p).map_err(|e| usage(e.to_string()))?,
        None => HashMap::new(),
    };
    let instances = load_instances(&args.source)?;
    let heatmap_dir = args.heatmap_dir.as_deref();
    let pool = pool(args.output.jobs)?;

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for config in &configs {
        let block: Vec<ReportRow> = pool.install(|| {
            instances
                .par_iter()
                .map(|(id, inst)| solve_row(id, inst, config, heatmap_dir, refs.get(id).copied()).0)
                .collect()
        });
        let agg = Aggregate::from_rows(&block);
        summary.push(BenchSummary {
            config: config_label(config),
            beam_size: config.beam_size,
            policy: config.policy.to_string(),
            sparsification: config.sparsity.label(),
            dominance: config.dominance,
            instances: agg.instances,
            solved: agg.solved,
            mean_cost: agg.mean_cost,
            mean_gap: agg.mean_gap,
            mean_time_s: agg.total_solve_time_s / agg.instances as f64,
        });
        rows.extend(block);
    }

    report_beam_trend(&summary, err)?;
    let (body, rows_body) = if args.output.json {
        (json_pretty(&summary), json_pretty(&rows))
    } else {
        (to_csv(&summary), to_csv(&rows))
    };
    if let Some(dir) = &args.output.out {
        let ext = if args.output.json { "json" } else { "csv" };
        write_file(&dir.join(format!("rows.{ext}")), &rows_body)?;
        write_file(&dir.join(format!("summary.{ext}")), &body)?;
    }
    out.write_all(body.as_bytes())?;
    Ok(if rows.iter().all(row_ok) {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

/// Notes on stderr whether mean cost falls as the beam grows, for each
/// configuration that differs only in beam size.
fn report_beam_trend(summary: &[BenchSummary], err: &mut dyn Write) -> anyhow::Result<()> {
    let mut series: BTreeMap<(String, String, bool), Vec<(usize, Option<f64>)>> = BTreeMap::new();
    for s in summary {
        series
            .entry((s.policy.clone(), s.sparsification.clone(), s.dominance))
            .or_default()
            .push((s.beam_size, s.mean_cost));
    }
    for ((policy, sparsity, dom), mut pts) in series {
        if pts.len() < 2 {
            continue;
        }
        pts.sort_by_key(|p| p.0);
        let monotone = pts.windows(2).all(|w| match (w[0].1, w[1].1) {
            (Some(a), Some(b)) => b <= a + TOLERANCE,
            _ => true,
        });
        writeln!(
            err,
            "policy={policy} sparsity={sparsity} dominance={}: mean cost {} in beam size",
            if dom { "on" } else { "off" },
            if monotone { "non-increasing" } else { "NOT monotone" }
        )?;
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, out, err),
        Command::Generate(a) => cmd_generate(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Bench(a) => cmd_bench(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}

/// Entry point of the `dpdp` binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
