//! `bridgelab`: generation, grading, query-model simulation and scaling
//! analytics from one binary.
//!
//! Exit codes: 0 success, 1 I/O or internal error, 2 usage or input-format
//! error, 3 constraint violation (restricted-model breach, refusing to
//! overwrite an output).

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use bridgelab_core::analytics::{curves_csv, dfs_corpus, empirical_grid, Aggregation, TaskSamples};
use bridgelab_core::codec::Codec;
use bridgelab_core::dataset::{
    corpus_from_generations, gen_dataset, gen_tasks, grade_file, read_jsonl, write_jsonl, DatasetError, DatasetRecord,
    GenerationRecord, TokenBudget,
};
use bridgelab_core::vqm::{estimate_success, theorem_bounds, PolicyKind, VqmError, VqmRequest};
use bridgelab_core::{Exec, Family, Strategy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "bridgelab", version, about = "Graph-connectivity test-time scaling lab")]
struct Cli {
    /// Worker threads; 1 runs sequentially. Defaults to available parallelism.
    #[arg(long, global = true, env = "BRIDGELAB_WORKERS")]
    workers: Option<usize>,
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = "BRIDGELAB_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Write `<output>.manifest.json` with the resolved configuration.
    #[arg(long, global = true)]
    manifest: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Task-only dataset records.
    GenTasks(GenTasksArgs),
    /// (task, chain of thought, decision) training examples.
    GenDataset(GenDatasetArgs),
    /// Grade a generations file against its tasks file.
    Grade(GradeArgs),
    /// Monte Carlo vertex-query simulation.
    Vqm(VqmArgs),
    /// Closed-form query bounds for doubled Bridge(d, l, 2l, 0).
    Bounds(BoundsArgs),
    /// Closed-form best-of-n and majority-vote curves.
    Curves(CurvesArgs),
    /// Empirical accuracy grid over (budget, sample count).
    Grid(GridArgs),
}

#[derive(Args, Debug, Serialize)]
struct FamilyArgs {
    /// Family literal, e.g. `bridge(3,3,5,3)` or `two-path(5)` (edges).
    #[arg(long, conflicts_with_all = ["depth", "path_vertices"])]
    family: Option<String>,
    /// Bridge depth (number of segments).
    #[arg(long, conflicts_with = "path_vertices")]
    depth: Option<usize>,
    #[arg(long, default_value_t = 3)]
    short: usize,
    #[arg(long, default_value_t = 5)]
    long: usize,
    #[arg(long, default_value_t = 3)]
    deadend: usize,
    /// Two-path family with this many vertices per path.
    #[arg(long)]
    path_vertices: Option<usize>,
}

impl FamilyArgs {
    fn resolve(&self) -> CliResult<Family> {
        if let Some(s) = &self.family {
            return s.parse().map_err(input);
        }
        if let Some(d) = self.depth {
            return Family::bridge(d, self.short, self.long, self.deadend).map_err(input);
        }
        if let Some(l) = self.path_vertices {
            return Family::two_path_vertices(l).map_err(input);
        }
        Err(input(anyhow!(
            "one of --family, --depth or --path-vertices is required"
        )))
    }
}

#[derive(Args, Debug, Serialize)]
struct OutArg {
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct GenTasksArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    /// Added to every label when rendering text.
    #[arg(long, default_value_t = 0)]
    label_offset: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct GenDatasetArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Shortest-Path, Path, DFS, DFS-BT or Walk-<L>.
    #[arg(long)]
    strategy: String,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    /// `none`, `shortest-path` (match the Shortest-Path dataset over the
    /// same tasks) or a token count.
    #[arg(long, default_value = "none")]
    token_budget: String,
    #[arg(long, default_value_t = 0)]
    label_offset: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct GradeArgs {
    #[arg(long)]
    tasks: PathBuf,
    #[arg(long)]
    generations: PathBuf,
    /// Comma-separated budgets in chain-of-thought nodes; `inf` for none.
    #[arg(long, value_delimiter = ',', default_value = "inf", value_parser = parse_budget)]
    budgets: Vec<Option<usize>>,
    /// Group name for every sample, overriding the tasks' strategy field.
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value_t = 0)]
    label_offset: usize,
    /// Also write one JSON verdict per (generation, budget).
    #[arg(long)]
    verdicts: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct VqmArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// `scan`, `dfs` or `bridge-<l>`.
    #[arg(long)]
    policy: String,
    /// Comma-separated query budgets; `inf` for none.
    #[arg(long, value_delimiter = ',', default_value = "inf", value_parser = parse_budget)]
    budgets: Vec<Option<usize>>,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    /// Allow queries of vertices no earlier answer returned.
    #[arg(long)]
    unrestricted: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct BoundsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    depth: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    segment_len: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    delta: Vec<f64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug, Serialize)]
struct CurvesArgs {
    /// Per-sample verification probabilities for best-of-n.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.0013020833333333333,0.020833333333333332,0.16666666666666666"
    )]
    p: Vec<f64>,
    /// Per-sample decision accuracies for majority vote.
    #[arg(long, value_delimiter = ',', default_value = "0.55,0.6,0.75")]
    q: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64,128,256")]
    n: Vec<u64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum AggregationArg {
    BestOfN,
    Majority,
    Both,
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    /// Tasks file; use with --generations.
    #[arg(long, requires = "generations", conflicts_with = "simulate_dfs")]
    tasks: Option<PathBuf>,
    #[arg(long, requires = "tasks")]
    generations: Option<PathBuf>,
    /// Build the corpus from randomized-DFS traces instead of files.
    #[arg(long, requires_all = ["seed", "samples", "count"])]
    simulate_dfs: bool,
    #[command(flatten)]
    family: FamilyArgs,
    /// Tasks in the simulated corpus.
    #[arg(long)]
    count: Option<usize>,
    /// Samples per task in the simulated corpus.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "inf", value_parser = parse_budget)]
    budgets: Vec<Option<usize>>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    n: Vec<usize>,
    #[arg(long, value_enum, default_value = "both")]
    aggregation: AggregationArg,
    #[arg(long, default_value_t = 0)]
    label_offset: usize,
    #[command(flatten)]
    out: OutArg,
}

fn parse_budget(s: &str) -> Result<Option<usize>, String> {
    match s.trim() {
        "inf" | "none" => Ok(None),
        t => t
            .parse()
            .map(Some)
            .map_err(|_| format!("budget {t:?} is neither an integer nor `inf`")),
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    err: anyhow::Error,
}

type CliResult<T> = Result<T, Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure { code: 2, err: e.into() }
}

fn constraint<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure { code: 3, err: e.into() }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: 1, err }
    }
}

impl From<io::Error> for Failure {
    fn from(err: io::Error) -> Self {
        Failure {
            code: 1,
            err: err.into(),
        }
    }
}

fn dataset_failure(e: DatasetError) -> Failure {
    match e {
        DatasetError::Io(e) => e.into(),
        other => input(other),
    }
}

fn vqm_failure(e: VqmError) -> Failure {
    match e {
        VqmError::RestrictedViolation { .. } => constraint(e),
        VqmError::Task(_) => input(e),
        other => Failure {
            code: 1,
            err: other.into(),
        },
    }
}

struct Ctx {
    exec: Exec,
    out_dir: Option<PathBuf>,
    force: bool,
    manifest: bool,
    written: Vec<PathBuf>,
}

impl Ctx {
    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Writes to `path`, or stdout when `None`.
    fn emit(&mut self, path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
        let Some(p) = path else {
            io::stdout().write_all(bytes)?;
            return Ok(());
        };
        let p = self.resolve(p);
        if p.exists() && !self.force {
            return Err(constraint(anyhow!("{} exists; pass --force to overwrite", p.display())));
        }
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        self.written.push(p);
        Ok(())
    }
}

fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(BufReader::new(f))
        .map_err(dataset_failure)
        .map_err(|f| Failure {
            code: f.code,
            err: f.err.context(path.display().to_string()),
        })
}

fn jsonl<T: Serialize>(records: &[T]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_jsonl(records, &mut buf).map_err(dataset_failure)?;
    Ok(buf)
}

fn opt(x: Option<usize>) -> String {
    x.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a Command,
    family: Option<String>,
    outputs: Vec<String>,
    notes: Vec<String>,
}

fn run(cli: &Cli, ctx: &mut Ctx) -> CliResult<Vec<String>> {
    let mut notes = Vec::new();
    match &cli.command {
        Command::GenTasks(a) => {
            let family = a.family.resolve()?;
            let codec = Codec::new(a.label_offset);
            let recs = gen_tasks(family, a.count, a.seed, &codec, ctx.exec).map_err(input)?;
            ctx.emit(a.out.out.as_deref(), &jsonl(&recs)?)?;
        }
        Command::GenDataset(a) => {
            let family = a.family.resolve()?;
            let strategy: Strategy = a.strategy.parse().map_err(input)?;
            let budget = match a.token_budget.as_str() {
                "none" => TokenBudget::Unlimited,
                "shortest-path" => TokenBudget::MatchShortestPath,
                t => TokenBudget::Fixed(t.parse().map_err(|_| input(anyhow!("invalid --token-budget {t:?}")))?),
            };
            let codec = Codec::new(a.label_offset);
            let ds = gen_dataset(family, strategy, a.count, a.seed, budget, &codec, ctx.exec).map_err(input)?;
            for (id, e) in &ds.failures {
                eprintln!("warning: task {id}: {e}");
            }
            notes.push(format!("records={}", ds.records.len()));
            notes.push(format!("tokens={}", ds.total_tokens()));
            notes.push(format!("failures={}", ds.failures.len()));
            if let Some(cap) = ds.token_cap {
                notes.push(format!("token_cap={cap}"));
            }
            eprintln!("{}", notes.join(" "));
            ctx.emit(a.out.out.as_deref(), &jsonl(&ds.records)?)?;
        }
        Command::Grade(a) => {
            let tasks: Vec<DatasetRecord> = read_records(&a.tasks)?;
            let gens: Vec<GenerationRecord> = read_records(&a.generations)?;
            let codec = Codec::new(a.label_offset);
            let rep =
                grade_file(&tasks, &gens, &codec, &a.budgets, a.label.as_deref(), ctx.exec).map_err(dataset_failure)?;
            if rep.unmatched > 0 {
                eprintln!("warning: skipped {} generations with unknown ids", rep.unmatched);
            }
            notes.push(format!("unmatched={}", rep.unmatched));
            if let Some(v) = &a.verdicts {
                ctx.emit(Some(v), &jsonl(&rep.samples)?)?;
            }
            ctx.emit(a.out.out.as_deref(), rep.metrics_csv().as_bytes())?;
        }
        Command::Vqm(a) => {
            let family = a.family.resolve()?;
            let policy: PolicyKind = a.policy.parse().map_err(|e: String| input(anyhow!(e)))?;
            let mut csv = String::from(
                "family,policy,budget,trials,success,ci_low,ci_high,mean_queries,p50_queries,p95_queries,max_queries\n",
            );
            for &budget in &a.budgets {
                let req = VqmRequest {
                    policy,
                    family,
                    budget,
                    trials: a.trials,
                    seed: a.seed,
                    restricted: !a.unrestricted,
                };
                let est = estimate_success(&req, ctx.exec).map_err(vqm_failure)?;
                if req.restricted && !est.all_legal {
                    return Err(constraint(anyhow!("a transcript broke the restricted query rule")));
                }
                let _ = writeln!(
                    csv,
                    "\"{family}\",{policy},{},{},{:.6},{:.6},{:.6},{:.4},{},{},{}",
                    opt(budget),
                    est.trials,
                    est.success,
                    est.ci.low,
                    est.ci.high,
                    est.mean_queries,
                    est.p50_queries,
                    est.p95_queries,
                    est.max_queries
                );
            }
            ctx.emit(a.out.out.as_deref(), csv.as_bytes())?;
        }
        Command::Bounds(a) => {
            let mut csv = String::from(
                "depth,segment_len,delta,seq_budget,seq_success_lb,seq_success_lb_proof,par_budget,par_success_ub,par_runs_needed\n",
            );
            for &d in &a.depth {
                for &l in &a.segment_len {
                    for &delta in &a.delta {
                        if !(delta > 0.0 && delta < 1.0) {
                            return Err(input(anyhow!("delta must lie in (0, 1), got {delta}")));
                        }
                        let b = theorem_bounds(d, l, delta);
                        let _ = writeln!(
                            csv,
                            "{d},{l},{delta},{},{:.6},{:.6},{},{:.6},{}",
                            b.seq_budget,
                            b.seq_success_lb,
                            b.seq_success_lb_proof,
                            b.par_budget,
                            b.par_success_ub,
                            b.par_runs_needed.map_or(String::new(), |n| n.to_string())
                        );
                    }
                }
            }
            ctx.emit(a.out.out.as_deref(), csv.as_bytes())?;
        }
        Command::Curves(a) => {
            if a.p.iter().chain(&a.q).any(|x| !(0.0..=1.0).contains(x)) {
                return Err(input(anyhow!("probabilities must lie in [0, 1]")));
            }
            ctx.emit(a.out.out.as_deref(), curves_csv(&a.p, &a.q, &a.n).as_bytes())?;
        }
        Command::Grid(a) => {
            let corpus: Vec<TaskSamples> = if a.simulate_dfs {
                let family = a.family.resolve()?;
                let (count, samples, seed) = (a.count.unwrap_or(0), a.samples.unwrap_or(0), a.seed.unwrap_or(0));
                dfs_corpus(family, count, samples, seed, ctx.exec).map_err(input)?
            } else {
                let (Some(t), Some(g)) = (&a.tasks, &a.generations) else {
                    return Err(input(anyhow!("pass --tasks and --generations, or --simulate-dfs")));
                };
                let tasks: Vec<DatasetRecord> = read_records(t)?;
                let gens: Vec<GenerationRecord> = read_records(g)?;
                let (corpus, unmatched) = corpus_from_generations(&tasks, &gens, &Codec::new(a.label_offset), ctx.exec)
                    .map_err(dataset_failure)?;
                if unmatched > 0 {
                    eprintln!("warning: skipped {unmatched} generations with unknown ids");
                }
                corpus
            };
            let aggs: &[Aggregation] = match a.aggregation {
                AggregationArg::BestOfN => &[Aggregation::BestOfN],
                AggregationArg::Majority => &[Aggregation::Majority],
                AggregationArg::Both => &[Aggregation::BestOfN, Aggregation::Majority],
            };
            let grid = empirical_grid(&corpus, &a.budgets, &a.n, aggs, ctx.exec).map_err(input)?;
            ctx.emit(a.out.out.as_deref(), grid.to_csv().as_bytes())?;
        }
    }
    Ok(notes)
}

fn configure_workers(workers: Option<usize>) -> CliResult<Exec> {
    match workers {
        Some(0) => Err(input(anyhow!("--workers must be at least 1"))),
        Some(1) => Ok(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| anyhow!("configuring {n} workers: {e}"))?;
            Ok(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Exec::Sequential),
        None => Ok(Exec::default()),
    }
}

fn family_of(cmd: &Command) -> Option<String> {
    let fam = match cmd {
        Command::GenTasks(a) => &a.family,
        Command::GenDataset(a) => &a.family,
        Command::Vqm(a) => &a.family,
        Command::Grid(a) if a.simulate_dfs => &a.family,
        _ => return None,
    };
    fam.resolve().ok().map(|f| f.to_string())
}

fn main_inner(cli: Cli) -> CliResult<()> {
    let mut ctx = Ctx {
        exec: configure_workers(cli.workers)?,
        out_dir: cli.out_dir.clone(),
        force: cli.force,
        manifest: cli.manifest,
        written: Vec::new(),
    };
    let notes = run(&cli, &mut ctx)?;
    if ctx.manifest {
        let Some(primary) = ctx.written.last().cloned() else {
            return Err(input(anyhow!("--manifest needs an output file (--out)")));
        };
        let m = Manifest {
            tool: "bridgelab",
            version: env!("CARGO_PKG_VERSION"),
            command: &cli.command,
            family: family_of(&cli.command),
            outputs: ctx.written.iter().map(|p| p.display().to_string()).collect(),
            notes,
        };
        let mut text = serde_json::to_string_pretty(&m).context("serializing manifest")?;
        text.push('\n');
        let mut path = primary.into_os_string();
        path.push(".manifest.json");
        let path = PathBuf::from(path);
        if path.exists() && !ctx.force {
            return Err(constraint(anyhow!(
                "{} exists; pass --force to overwrite",
                path.display()
            )));
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
