//! Experiment execution.
//!
//! An experiment runs a fresh agent through the curriculum once per
//! lifetime. Within a lifetime the runner walks blocks, task blocks and task
//! variants in order; each variant gets its own lazily built set of parallel
//! environments that are stepped in lockstep until the variant's experience
//! limit is spent exactly.
//!
//! Seeds derive from the master seed:
//!
//! ```text
//! lifetime_seed   = split(master_seed, lifetime_index)
//! curriculum_seed = split(lifetime_seed, 1)
//! agent_seed      = split(lifetime_seed, 2)
//! variant seed j  = split(lifetime_seed, 3 + j)   (j-th variant run in the lifetime)
//! slot env seed   = split(variant_seed, slot)
//! ```

use std::cell::Cell;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use thiserror::Error;

use crate::agent::{Agent, AgentError, AgentEvent, AgentFactory, AgentInit, Transition};
use crate::curriculum::{
    self, validate_curriculum, BlockType, BuiltinCurriculum, Curriculum, ExperienceLimit,
    TaskVariantSpec,
};
use crate::eventlog::{
    self, EpisodeRecord, LifetimeLog, LifetimeMetadata, LifetimeStatus, LifetimeSummary, LogError,
    RunMetadata,
};
use crate::gridworld::{make_env, Action, EnvError, GridWorld, Observation};
use crate::prng::split;
use crate::HARNESS_VERSION;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("environment error in {task}/{variant}: {source}")]
    Env {
        task: String,
        variant: String,
        source: EnvError,
    },
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("invalid curriculum: {0}")]
    Curriculum(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Where each lifetime's curriculum comes from.
#[derive(Debug, Clone)]
pub enum CurriculumSource {
    /// The same curriculum for every lifetime.
    Fixed(Curriculum),
    /// A built-in curriculum regenerated per lifetime from its curriculum seed.
    Builtin {
        kind: BuiltinCurriculum,
        episodes_per_lb: u64,
        eval_episodes: u64,
    },
}

impl CurriculumSource {
    pub fn name(&self) -> String {
        match self {
            CurriculumSource::Fixed(c) => c.name.clone(),
            CurriculumSource::Builtin { kind, .. } => kind.name().to_string(),
        }
    }

    pub fn for_lifetime(&self, curriculum_seed: u64) -> Curriculum {
        match self {
            CurriculumSource::Fixed(c) => c.clone(),
            CurriculumSource::Builtin {
                kind,
                episodes_per_lb,
                eval_episodes,
            } => kind.generate(*episodes_per_lb, *eval_episodes, curriculum_seed),
        }
    }

    fn describe(&self) -> serde_json::Value {
        match self {
            CurriculumSource::Fixed(c) => {
                serde_json::from_str(&curriculum::to_json_string(c)).expect("valid json")
            }
            CurriculumSource::Builtin {
                kind,
                episodes_per_lb,
                eval_episodes,
            } => serde_json::json!({
                "builtin": kind.name(),
                "episodes_per_lb": episodes_per_lb,
                "eval_episodes": eval_episodes,
            }),
        }
    }
}

pub struct ExperimentConfig {
    pub curriculum: CurriculumSource,
    pub agent: Box<dyn AgentFactory>,
    pub num_lifetimes: usize,
    pub master_seed: u64,
    pub log_root: PathBuf,
    /// Directory name under `log_root`; derived from the inputs when absent.
    pub run_name: Option<String>,
    pub num_parallel_envs: Option<usize>,
}

/// Seeds and counters for one lifetime.
#[derive(Debug)]
pub struct LifetimeContext {
    pub lifetime_index: usize,
    pub master_seed: u64,
    pub lifetime_seed: u64,
    pub curriculum_seed: u64,
    pub agent_seed: u64,
    next_variant_ordinal: u64,
    gauge: EnvGauge,
}

impl LifetimeContext {
    pub fn new(master_seed: u64, lifetime_index: usize) -> Self {
        let lifetime_seed = split(master_seed, lifetime_index as u64);
        LifetimeContext {
            lifetime_index,
            master_seed,
            lifetime_seed,
            curriculum_seed: split(lifetime_seed, 1),
            agent_seed: split(lifetime_seed, 2),
            next_variant_ordinal: 0,
            gauge: EnvGauge::default(),
        }
    }

    /// Seed for the next task variant instantiated in this lifetime.
    pub fn next_variant_seed(&mut self) -> u64 {
        let seed = split(self.lifetime_seed, 3 + self.next_variant_ordinal);
        self.next_variant_ordinal += 1;
        seed
    }

    pub fn live_envs(&self) -> usize {
        self.gauge.live.get()
    }

    pub fn peak_live_envs(&self) -> usize {
        self.gauge.peak.get()
    }
}

#[derive(Debug, Default)]
struct EnvGauge {
    live: Cell<usize>,
    peak: Cell<usize>,
}

/// An environment counted by the lifetime's live-environment gauge.
struct LiveEnv<'g> {
    env: GridWorld,
    gauge: &'g EnvGauge,
}

impl<'g> LiveEnv<'g> {
    fn open(env: GridWorld, gauge: &'g EnvGauge) -> Self {
        let live = gauge.live.get() + 1;
        gauge.live.set(live);
        gauge.peak.set(gauge.peak.get().max(live));
        LiveEnv { env, gauge }
    }
}

impl Drop for LiveEnv<'_> {
    fn drop(&mut self) {
        self.gauge.live.set(self.gauge.live.get() - 1);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LifetimeStats {
    pub episodes: u64,
    pub steps: u64,
    pub peak_live_envs: usize,
}

#[derive(Debug, Clone)]
pub struct LifetimeOutcome {
    pub index: usize,
    pub dir: PathBuf,
    pub status: LifetimeStatus,
    pub error: Option<String>,
    pub stats: LifetimeStats,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub run_dir: PathBuf,
    pub lifetimes: Vec<LifetimeOutcome>,
}

impl ExperimentSummary {
    pub fn all_ok(&self) -> bool {
        self.lifetimes
            .iter()
            .all(|l| l.status == LifetimeStatus::Ok)
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// A directory under `root` named `base`, suffixed if it already exists.
fn fresh_run_dir(root: &Path, base: &str) -> PathBuf {
    let mut candidate = root.join(base);
    let mut n = 2;
    while candidate.exists() {
        candidate = root.join(format!("{base}-{n}"));
        n += 1;
    }
    candidate
}

/// Runs every lifetime in sequence. A failed lifetime is recorded and the
/// next one still runs; only run-level I/O problems return `Err`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary, RunError> {
    if let CurriculumSource::Fixed(c) = &cfg.curriculum {
        let findings = validate_curriculum(c);
        if !findings.is_empty() {
            let text = findings.iter().map(|f| f.to_string()).collect::<Vec<_>>();
            return Err(RunError::Curriculum(text.join("; ")));
        }
    }
    // Explicit names are sanitized too, so they cannot leave `log_root`.
    let base = sanitize(&cfg.run_name.clone().unwrap_or_else(|| {
        format!(
            "{}_{}_seed{}",
            cfg.curriculum.name(),
            cfg.agent.name(),
            cfg.master_seed
        )
    }));
    let run_dir = fresh_run_dir(&cfg.log_root, &base);
    fs::create_dir_all(&run_dir).map_err(|source| RunError::Io {
        path: run_dir.clone(),
        source,
    })?;

    let mut meta = RunMetadata {
        run_name: run_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or(base),
        harness_version: HARNESS_VERSION.to_string(),
        curriculum: cfg.curriculum.describe(),
        agent: cfg.agent.name(),
        num_lifetimes: cfg.num_lifetimes,
        master_seed: cfg.master_seed,
        num_parallel_envs: cfg.num_parallel_envs,
        started_at: now(),
        finished_at: None,
        lifetimes: Vec::new(),
    };
    let meta_path = run_dir.join(eventlog::RUN_METADATA_FILE);
    eventlog::write_json(&meta_path, &meta)?;

    let mut lifetimes = Vec::with_capacity(cfg.num_lifetimes);
    for index in 0..cfg.num_lifetimes {
        let ctx = LifetimeContext::new(cfg.master_seed, index);
        let mut curriculum = cfg.curriculum.for_lifetime(ctx.curriculum_seed);
        if let Some(k) = cfg.num_parallel_envs {
            curriculum.num_parallel_envs = k;
        }
        let dir = run_dir.join(eventlog::lifetime_dir_name(index));
        let outcome = run_lifetime_in_dir(&curriculum, cfg.agent.as_ref(), ctx, &dir)?;
        match &outcome.error {
            None => info!("lifetime {index}: ok ({} episodes)", outcome.stats.episodes),
            Some(e) => warn!("lifetime {index} failed: {e}"),
        }
        meta.lifetimes.push(LifetimeSummary {
            index,
            dir: eventlog::lifetime_dir_name(index),
            status: outcome.status,
            error: outcome.error.clone(),
        });
        lifetimes.push(outcome);
    }
    meta.finished_at = Some(now());
    eventlog::write_json(&meta_path, &meta)?;
    Ok(ExperimentSummary { run_dir, lifetimes })
}

/// Runs one lifetime into `dir`, writing its curriculum and metadata.
///
/// Agent, environment and log failures mark the lifetime failed; `Err` is
/// reserved for being unable to write the lifetime directory at all.
pub fn run_lifetime_in_dir(
    curriculum: &Curriculum,
    factory: &dyn AgentFactory,
    mut ctx: LifetimeContext,
    dir: &Path,
) -> Result<LifetimeOutcome, RunError> {
    let started_at = now();
    let mut log = LifetimeLog::create(dir)?;
    curriculum::save_curriculum_file(curriculum, &dir.join(eventlog::CURRICULUM_FILE))
        .map_err(|e| RunError::Curriculum(e.to_string()))?;

    let init = AgentInit {
        agent_seed: ctx.agent_seed,
        num_envs: curriculum.num_parallel_envs,
    };
    let mut agent_name = factory.name();
    let result = factory
        .create(&init)
        .map_err(RunError::from)
        .and_then(|mut agent| {
            agent_name = agent.name();
            let walked = run_lifetime(curriculum, agent.as_mut(), &mut ctx, &mut log);
            let closed = agent.shutdown().map_err(RunError::from);
            walked.and_then(|stats| closed.map(|_| stats))
        });
    let flushed = log.flush();
    let result = result.and_then(|stats| flushed.map(|_| stats).map_err(RunError::from));

    let (status, error, stats) = match result {
        Ok(stats) => (LifetimeStatus::Ok, None, stats),
        Err(e) => (
            LifetimeStatus::Failed,
            Some(e.to_string()),
            LifetimeStats {
                episodes: log.episodes(),
                steps: 0,
                peak_live_envs: ctx.peak_live_envs(),
            },
        ),
    };
    let meta = LifetimeMetadata {
        lifetime_index: ctx.lifetime_index,
        master_seed: ctx.master_seed,
        lifetime_seed: ctx.lifetime_seed,
        curriculum_seed: ctx.curriculum_seed,
        agent_seed: ctx.agent_seed,
        curriculum_name: curriculum.name.clone(),
        agent_name,
        harness_version: HARNESS_VERSION.to_string(),
        started_at,
        finished_at: now(),
        status,
        error: error.clone(),
    };
    eventlog::write_json(&dir.join(eventlog::LIFETIME_METADATA_FILE), &meta)?;
    Ok(LifetimeOutcome {
        index: ctx.lifetime_index,
        dir: dir.to_path_buf(),
        status,
        error,
        stats,
    })
}

/// Walks blocks, task blocks and variants, delivering events around each.
pub fn run_lifetime(
    curriculum: &Curriculum,
    agent: &mut dyn Agent,
    ctx: &mut LifetimeContext,
    log: &mut LifetimeLog,
) -> Result<LifetimeStats, RunError> {
    let mut stats = LifetimeStats::default();
    for (block_num, block) in curriculum.blocks.iter().enumerate() {
        agent.on_event(&AgentEvent::BlockStart {
            is_learning_allowed: block.block_type.is_learning_allowed(),
        })?;
        for tb in &block.task_blocks {
            agent.on_event(&AgentEvent::TaskStart {
                task_name: tb.task_name.clone(),
            })?;
            for spec in &tb.variants {
                agent.on_event(&AgentEvent::TaskVariantStart {
                    task_name: spec.task_name.clone(),
                    variant_name: spec.variant_name.clone(),
                    limit: spec.limit,
                })?;
                let unit = VariantUnit {
                    block_num,
                    block_type: block.block_type,
                    spec,
                };
                let (episodes, steps) =
                    run_task_variant(&unit, agent, curriculum.num_parallel_envs, ctx, log)?;
                stats.episodes += episodes;
                stats.steps += steps;
                agent.on_event(&AgentEvent::TaskVariantEnd)?;
            }
            agent.on_event(&AgentEvent::TaskEnd)?;
        }
        agent.on_event(&AgentEvent::BlockEnd)?;
        log.flush()?;
    }
    stats.peak_live_envs = ctx.peak_live_envs();
    Ok(stats)
}

/// A task variant in its block.
pub struct VariantUnit<'a> {
    pub block_num: usize,
    pub block_type: BlockType,
    pub spec: &'a TaskVariantSpec,
}

struct Slot<'g> {
    env: Option<LiveEnv<'g>>,
    env_seed: u64,
    obs: Option<Observation>,
    steps: u64,
    reward: f64,
}

fn contract(msg: String) -> RunError {
    RunError::Agent(AgentError::ContractViolation(msg))
}

/// Lockstep interaction with one task variant until its limit is spent.
///
/// Episode limits: a finished environment is only reset while
/// `completed + in_flight < limit`, so exactly `limit` episodes complete.
/// Step limits: each round steps at most `remaining` environments, lowest
/// slot first; episodes still running when the budget ends are logged as
/// truncated. Rewards are withheld from the agent in evaluation blocks.
///
/// Returns the number of logged episodes and environment steps.
pub fn run_task_variant(
    unit: &VariantUnit<'_>,
    agent: &mut dyn Agent,
    k_envs: usize,
    ctx: &mut LifetimeContext,
    log: &mut LifetimeLog,
) -> Result<(u64, u64), RunError> {
    let spec = unit.spec;
    let hide_rewards = unit.block_type == BlockType::Eval;
    let limit = spec.limit;
    let amount = limit.amount();
    let variant_seed = ctx.next_variant_seed();
    let env_err = |source| RunError::Env {
        task: spec.task_name.clone(),
        variant: spec.variant_name.clone(),
        source,
    };

    let n_slots = (k_envs as u64).min(amount) as usize;
    let gauge = &ctx.gauge;
    let mut slots = Vec::with_capacity(n_slots);
    for slot in 0..n_slots {
        let env_seed = split(variant_seed, slot as u64);
        let env = make_env(&spec.task_name, &spec.params, spec.fixed_layout, env_seed)
            .map_err(env_err)?;
        let mut env = LiveEnv::open(env, gauge);
        let obs = env.env.reset();
        slots.push(Slot {
            env: Some(env),
            env_seed,
            obs: Some(obs),
            steps: 0,
            reward: 0.0,
        });
    }

    let mut completed: u64 = 0;
    let mut in_flight = n_slots as u64;
    let mut remaining_steps = amount;
    let mut total_steps: u64 = 0;
    let mut logged: u64 = 0;

    let mut record = |log: &mut LifetimeLog, slot: &Slot<'_>, truncated: bool| {
        let rec = EpisodeRecord {
            block_num: unit.block_num,
            block_type: unit.block_type,
            task_name: spec.task_name.clone(),
            variant_name: spec.variant_name.clone(),
            episode_id: log.episodes(),
            steps: slot.steps,
            reward: slot.reward,
            truncated,
            env_seed: slot.env_seed,
        };
        logged += 1;
        log.append_episode(&rec)
    };

    loop {
        let mut stepping: Vec<bool> = slots.iter().map(|s| s.obs.is_some()).collect();
        if let ExperienceLimit::Steps(_) = limit {
            let mut budget = remaining_steps;
            for on in stepping.iter_mut().filter(|on| **on) {
                if budget == 0 {
                    *on = false;
                } else {
                    budget -= 1;
                }
            }
        }
        if !stepping.iter().any(|&on| on) {
            break;
        }

        let mut observations: Vec<Option<Observation>> = vec![None; k_envs];
        for (i, slot) in slots.iter().enumerate() {
            if stepping[i] {
                observations[i] = slot.obs.clone();
            }
        }
        let actions = agent.choose_actions(&observations)?;
        if actions.len() != k_envs {
            return Err(contract(format!(
                "choose_actions returned {} actions for {k_envs} observations",
                actions.len()
            )));
        }
        for (i, (o, a)) in observations.iter().zip(&actions).enumerate() {
            match (o, a) {
                (Some(_), None) => return Err(contract(format!("no action for active slot {i}"))),
                (None, Some(_)) => return Err(contract(format!("action for masked slot {i}"))),
                (Some(_), Some(a)) if *a as usize >= Action::COUNT => {
                    return Err(contract(format!(
                        "action {a} for slot {i} is outside 0..=6"
                    )))
                }
                _ => {}
            }
        }

        let mut transitions: Vec<Option<Transition>> = vec![None; k_envs];
        for (i, slot) in slots.iter_mut().enumerate() {
            if !stepping[i] {
                continue;
            }
            let action = actions[i].expect("checked above");
            let env = slot.env.as_mut().expect("stepping slot has an env");
            let result = env.env.step(action).map_err(env_err)?;
            slot.steps += 1;
            slot.reward += result.reward;
            total_steps += 1;
            remaining_steps = remaining_steps.saturating_sub(1);
            let before = slot.obs.take().expect("stepping slot has an observation");
            transitions[i] = Some(Transition {
                observation: before,
                action,
                reward: (!hide_rewards).then_some(result.reward),
                done: result.done,
                next_observation: result.observation.clone(),
            });
            if !result.done {
                slot.obs = Some(result.observation);
                continue;
            }
            record(log, slot, false)?;
            completed += 1;
            in_flight -= 1;
            let restart = match limit {
                ExperienceLimit::Episodes(n) => completed + in_flight < n,
                ExperienceLimit::Steps(_) => remaining_steps > 0,
            };
            slot.steps = 0;
            slot.reward = 0.0;
            if restart {
                let env = slot.env.as_mut().expect("finished slot still has its env");
                slot.obs = Some(env.env.reset());
                in_flight += 1;
            } else {
                slot.env = None;
            }
        }
        agent.receive_transitions(&transitions)?;

        if matches!(limit, ExperienceLimit::Steps(_)) && remaining_steps == 0 {
            break;
        }
    }

    for slot in &slots {
        if slot.obs.is_some() && slot.steps > 0 {
            record(log, slot, true)?;
        }
    }
    drop(slots);
    Ok((logged, total_steps))
}
