//! `lifebench`: run, score and inspect lifelong-learning experiments.
//!
//! Exit codes: 0 success, 1 the command ran but something failed (a
//! lifetime, or validation findings), 2 bad usage or unreadable input.

use std::io::{self, BufReader};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use log::info;

use lifebench::agent::{AgentFactory, BuiltinAgent};
use lifebench::curriculum::{
    self, load_curriculum_file, single_task, BuiltinCurriculum, CurriculumError,
    DEFAULT_EVAL_EPISODES, DEFAULT_LEARN_EPISODES,
};
use lifebench::eventlog::LifetimeStatus;
use lifebench::gridworld::{make_env, Params, TaskKind};
use lifebench::metrics::{self, SteStore};
use lifebench::protocol::{run_agent_loop, ProtocolAgentFactory, Transport};
use lifebench::runner::{self, CurriculumSource, ExperimentConfig, LifetimeContext};

#[derive(Parser)]
#[command(
    name = "lifebench",
    version,
    about = "Reproducible lifelong-learning experiments on gridworld curricula"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment: every lifetime trains a fresh agent on the curriculum.
    Run(RunArgs),
    /// Train a single-task expert and store its log for RP/SE.
    Ste(SteArgs),
    /// Compute metrics from logs; writes report.json and report.csv.
    Metrics(MetricsArgs),
    /// Check a curriculum file; exit 0 iff it has no findings.
    Validate { file: PathBuf },
    /// Write a built-in curriculum as a JSON file.
    ExportCurriculum(ExportArgs),
    /// Emit per-task eval performance per eval block as CSV.
    CurveData {
        #[arg(long)]
        log_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the layout a task variant generates for a seed.
    Layout(LayoutArgs),
    /// Serve a built-in agent over the wire protocol (stdio, or TCP with --tcp).
    AgentServe(ServeArgs),
}

#[derive(Args)]
struct AgentArgs {
    /// `random`, `qlearn`, `exec:<command>` or `tcp:<host:port>`.
    #[arg(long)]
    agent: String,
    /// Seconds to wait for each reply from an external agent.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
}

impl AgentArgs {
    fn factory(&self) -> Result<Box<dyn AgentFactory>, String> {
        if let Some(builtin) = BuiltinAgent::parse(&self.agent) {
            return Ok(Box::new(builtin));
        }
        let transport: Transport = self
            .agent
            .parse()
            .map_err(|e| format!("unknown agent {:?}: {e}", self.agent))?;
        Ok(Box::new(
            ProtocolAgentFactory::new(transport).with_timeout(Duration::from_secs(self.timeout)),
        ))
    }
}

#[derive(Args)]
struct RunArgs {
    /// `condensed`, `dispersed`, or a curriculum JSON file.
    #[arg(long)]
    curriculum: String,
    #[command(flatten)]
    agent: AgentArgs,
    #[arg(long, default_value_t = 1)]
    lifetimes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    log_dir: PathBuf,
    /// Overrides the curriculum's number of parallel environments.
    #[arg(long)]
    parallel_envs: Option<usize>,
    /// Episodes per learning block of a built-in curriculum.
    #[arg(long, default_value_t = DEFAULT_LEARN_EPISODES)]
    episodes_per_lb: u64,
    /// Episodes per variant in each eval block of a built-in curriculum.
    #[arg(long, default_value_t = DEFAULT_EVAL_EPISODES)]
    eval_episodes: u64,
    /// Run directory name; derived from the inputs by default.
    #[arg(long)]
    run_name: Option<String>,
}

#[derive(Args)]
struct SteArgs {
    #[arg(long)]
    task: String,
    #[command(flatten)]
    agent: AgentArgs,
    /// Training episodes per variant of the task.
    #[arg(long)]
    episodes: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    ste_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    parallel_envs: usize,
}

#[derive(Args)]
struct MetricsArgs {
    /// A run directory or a single lifetime directory.
    #[arg(long)]
    log_dir: PathBuf,
    #[arg(long)]
    ste_dir: Option<PathBuf>,
    /// Output directory for report.json and report.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LEARN_EPISODES)]
    episodes_per_lb: u64,
    #[arg(long, default_value_t = DEFAULT_EVAL_EPISODES)]
    eval_episodes: u64,
}

#[derive(Args)]
struct LayoutArgs {
    #[arg(long)]
    task: String,
    /// A named variant such as `S6`; defaults to the task's first variant.
    #[arg(long, conflicts_with = "param")]
    variant: Option<String>,
    /// Explicit parameter, repeatable: `--param size=8`.
    #[arg(long)]
    param: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ServeArgs {
    /// `random` or `qlearn`.
    #[arg(long)]
    agent: String,
    /// Listen on this address instead of using stdio; prints the bound
    /// address on the first line of stdout.
    #[arg(long)]
    tcp: Option<String>,
    /// Exit after serving this many connections (TCP only).
    #[arg(long)]
    connections: Option<usize>,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("HARNESS_LOG_LEVEL", "warn"),
    )
    .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Ste(args) => ste(args),
        Command::Metrics(args) => metrics_cmd(args),
        Command::Validate { file } => validate(&file),
        Command::ExportCurriculum(args) => export(args),
        Command::CurveData { log_dir, out } => curve_data(&log_dir, &out),
        Command::Layout(args) => layout(args),
        Command::AgentServe(args) => serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn curriculum_source(args: &RunArgs) -> Result<CurriculumSource, Failure> {
    if let Ok(kind) = args.curriculum.parse::<BuiltinCurriculum>() {
        return Ok(CurriculumSource::Builtin {
            kind,
            episodes_per_lb: args.episodes_per_lb,
            eval_episodes: args.eval_episodes,
        });
    }
    let path = Path::new(&args.curriculum);
    if !path.exists() {
        return Err(usage(format!(
            "unknown curriculum {:?}: not a built-in name or an existing file",
            args.curriculum
        )));
    }
    load_curriculum_file(path)
        .map(CurriculumSource::Fixed)
        .map_err(|e| usage(e.to_string()))
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let source = curriculum_source(&args)?;
    let agent = args.agent.factory().map_err(usage)?;
    if args.parallel_envs == Some(0) {
        return Err(usage("--parallel-envs must be at least 1"));
    }
    let cfg = ExperimentConfig {
        curriculum: source,
        agent,
        num_lifetimes: args.lifetimes,
        master_seed: args.seed,
        log_root: args.log_dir,
        run_name: args.run_name,
        num_parallel_envs: args.parallel_envs,
    };
    let summary = runner::run_experiment(&cfg).map_err(|e| usage(e.to_string()))?;
    println!("{}", summary.run_dir.display());
    for l in &summary.lifetimes {
        match &l.error {
            None => println!("lifetime {}: ok ({} episodes)", l.index, l.stats.episodes),
            Some(e) => println!("lifetime {}: failed: {e}", l.index),
        }
    }
    if summary.all_ok() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: String::new(),
        })
    }
}

fn ste(args: SteArgs) -> Result<(), Failure> {
    let kind: TaskKind = args.task.parse().map_err(|e| usage(format!("{e}")))?;
    let agent = args.agent.factory().map_err(usage)?;
    if args.episodes == 0 || args.parallel_envs == 0 {
        return Err(usage("--episodes and --parallel-envs must be at least 1"));
    }
    let mut curriculum = single_task(kind, args.episodes);
    curriculum.num_parallel_envs = args.parallel_envs;
    let dir = SteStore::run_dir(&args.ste_dir, kind.name(), args.seed);
    if dir.exists() {
        return Err(usage(format!("{} already exists", dir.display())));
    }
    let outcome = runner::run_lifetime_in_dir(
        &curriculum,
        agent.as_ref(),
        LifetimeContext::new(args.seed, 0),
        &dir,
    )
    .map_err(|e| usage(e.to_string()))?;
    println!("{}", dir.display());
    match outcome.status {
        LifetimeStatus::Ok => {
            println!("ok ({} episodes)", outcome.stats.episodes);
            Ok(())
        }
        LifetimeStatus::Failed => Err(Failure {
            code: 1,
            message: outcome.error.unwrap_or_default(),
        }),
    }
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "absent".to_string(), |v| format!("{v}"))
}

fn metrics_cmd(args: MetricsArgs) -> Result<(), Failure> {
    let ste = args
        .ste_dir
        .as_deref()
        .map(SteStore::load)
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    let report =
        metrics::run_report(&args.log_dir, ste.as_ref()).map_err(|e| usage(e.to_string()))?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| usage(format!("{}: {e}", args.out.display())))?;
    let json = args.out.join("report.json");
    let csv = args.out.join("report.csv");
    metrics::write_report_json(&report, &json).map_err(|e| usage(e.to_string()))?;
    metrics::write_report_csv(&report, &csv).map_err(|e| usage(e.to_string()))?;
    for (name, stat) in report.aggregate.entries() {
        let std = stat.std.map(|s| format!(" ± {s}")).unwrap_or_default();
        println!(
            "{name:>3}: {}{std} (n={})",
            fmt_metric(stat.mean),
            stat.count
        );
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    info!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

fn validate(file: &Path) -> Result<(), Failure> {
    match load_curriculum_file(file) {
        Ok(c) => {
            println!(
                "{}: ok ({} blocks, {} variants)",
                file.display(),
                c.blocks.len(),
                c.variants().count()
            );
            Ok(())
        }
        Err(CurriculumError::Invalid { findings }) => {
            for f in &findings {
                println!("{}: {f}", file.display());
            }
            Err(Failure {
                code: 1,
                message: format!("{} finding(s)", findings.len()),
            })
        }
        Err(e @ (CurriculumError::Schema { .. } | CurriculumError::Resolution { .. })) => {
            println!("{}: {e}", file.display());
            Err(Failure {
                code: 1,
                message: "1 finding(s)".into(),
            })
        }
        Err(e) => Err(usage(format!("{}: {e}", file.display()))),
    }
}

fn export(args: ExportArgs) -> Result<(), Failure> {
    let kind: BuiltinCurriculum = args.name.parse().map_err(usage)?;
    let c = kind.generate(args.episodes_per_lb, args.eval_episodes, args.seed);
    curriculum::save_curriculum_file(&c, &args.out).map_err(|e| usage(e.to_string()))?;
    println!("{}", args.out.display());
    Ok(())
}

fn curve_data(log_dir: &Path, out: &Path) -> Result<(), Failure> {
    let rows = metrics::run_curve_rows(log_dir).map_err(|e| usage(e.to_string()))?;
    metrics::write_curve_csv(&rows, out).map_err(|e| usage(e.to_string()))?;
    println!("{} rows -> {}", rows.len(), out.display());
    Ok(())
}

fn layout(args: LayoutArgs) -> Result<(), Failure> {
    let kind: TaskKind = args.task.parse().map_err(|e| usage(format!("{e}")))?;
    let params: Params = if args.param.is_empty() {
        let variant = args
            .variant
            .unwrap_or_else(|| kind.default_variants()[0].0.to_string());
        kind.variant_params(&variant)
            .ok_or_else(|| usage(format!("{kind} has no variant {variant:?}")))?
    } else {
        args.param
            .iter()
            .map(|p| {
                let (k, v) = p
                    .split_once('=')
                    .ok_or_else(|| usage(format!("expected name=value, got {p:?}")))?;
                let v = v
                    .parse()
                    .map_err(|_| usage(format!("{k}: {v:?} is not an integer")))?;
                Ok((k.to_string(), v))
            })
            .collect::<Result<_, Failure>>()?
    };
    let mut env =
        make_env(kind.name(), &params, false, args.seed).map_err(|e| usage(e.to_string()))?;
    env.reset();
    print!("{}", env.render_ascii());
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), Failure> {
    let builtin = BuiltinAgent::parse(&args.agent)
        .ok_or_else(|| usage(format!("unknown built-in agent {:?}", args.agent)))?;
    let make = |init: &lifebench::agent::AgentInit| builtin.build(init);
    let failed = |e: lifebench::protocol::ProtocolError| Failure {
        code: 1,
        message: e.to_string(),
    };
    let Some(addr) = args.tcp else {
        let stdin = io::stdin();
        return run_agent_loop(stdin.lock(), io::stdout().lock(), make).map_err(failed);
    };
    let listener = TcpListener::bind(&addr).map_err(|e| usage(format!("{addr}: {e}")))?;
    let bound = listener.local_addr().map_err(|e| usage(e.to_string()))?;
    println!("{bound}");
    let mut served = 0;
    while args.connections.is_none_or(|n| served < n) {
        let (stream, peer) = listener.accept().map_err(|e| usage(e.to_string()))?;
        info!("serving {peer}");
        // Requests and replies alternate, so Nagle batching only adds latency.
        stream.set_nodelay(true).map_err(|e| usage(e.to_string()))?;
        let reader = BufReader::new(stream.try_clone().map_err(|e| usage(e.to_string()))?);
        run_agent_loop(reader, stream, make).map_err(failed)?;
        served += 1;
    }
    Ok(())
}
