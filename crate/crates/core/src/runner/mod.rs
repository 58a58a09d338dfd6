//! Episode loop, benchmark suites, trajectory logs and plots.
//!
//! One waypoint: capture the panorama, parse each captured sector, summarize,
//! decide (memory-gated), push the summary, then run one controller leg.
//! The episode ends on Stop or when the step budget is spent.

mod bench;
mod log;
mod svg;

pub use bench::{ablation_suite, deadlock_suite, run_benchmark, BenchReport, Condition, ConditionReport, EpisodeRow, SuiteSpec};
pub use log::{replay_log, LogHeader, LogRecord, SectorDigest, StepRecord, TrajectoryLog, WaypointRecord, LOG_FORMAT, LOG_VERSION};
pub use svg::{crossing_count, render_trajectory_svg};

use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{execute_leg, ControllerConfig, LegEnd};
use crate::decision::{decide, memory_penalty, DecisionError, HeuristicPolicy, LikelihoodPolicy, Policy, PriorWeights, RemotePolicy};
use crate::llm_client::{
    ClientError, EndpointConfig, HttpTransport, LlmClient, PromptMode, ReplayTransport, RequestTemplate, RetryPolicy,
    Transcript, Transport,
};
use crate::memory::{MemoryError, MemoryQueue, DEFAULT_CAPACITY};
use crate::metrics::EpisodeResult;
use crate::perception::{
    capture_panorama, scaffold, select_views, OracleParser, ParserBackend, PerceptionConfig, PerceptionError, RemoteParser,
    ViewMode,
};
use crate::priors::PriorTable;
use crate::world::{generate_world_with, load_world, Cell, GeneratorParams, GridWorld, Heading, Pose, WorldError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid episode: {0}")]
    InvalidEpisode(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("trajectory log: {0}")]
    Log(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// 1 for invalid input, 2 for backend or transport failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Client(_) | Self::Perception(PerceptionError::Remote(_)) | Self::Decision(DecisionError::Remote(_)) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Ground-truth parsing, likelihood-ranked decisions.
    Oracle,
    /// Ground-truth parsing, prior-weighted decisions.
    Heuristic,
    /// Model-backed decisions (and optionally parsing).
    Remote,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "heuristic" => Ok(Self::Heuristic),
            "remote" => Ok(Self::Remote),
            _ => Err(format!("unknown backend `{s}` (oracle, heuristic, remote)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorldSource {
    File { path: PathBuf },
    Generated {
        seed: u64,
        #[serde(default)]
        params: GeneratorParams,
    },
}

impl Default for WorldSource {
    fn default() -> Self {
        Self::Generated {
            seed: 0,
            params: GeneratorParams::default(),
        }
    }
}

impl WorldSource {
    pub fn load(&self, priors: &PriorTable) -> Result<GridWorld, RunError> {
        match self {
            Self::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
                Ok(load_world(&text)?)
            }
            Self::Generated { seed, params } => Ok(generate_world_with(*seed, params, priors)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Falls back to the endpoint environment variable.
    pub endpoint: Option<String>,
    pub llm_model: Option<String>,
    pub mllm_model: Option<String>,
    pub prompt_mode: PromptMode,
    /// Also parse sectors with the model instead of the oracle parser.
    pub remote_parsing: bool,
    pub temperature: f64,
    pub timeout_secs: f64,
    pub retry: RetryPolicy,
    /// Append every request and reply here.
    pub transcript: Option<PathBuf>,
    /// Answer requests from this transcript instead of the network.
    pub replay: Option<PathBuf>,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            llm_model: None,
            mllm_model: None,
            prompt_mode: PromptMode::Decoupled,
            remote_parsing: false,
            temperature: 0.0,
            timeout_secs: 60.0,
            retry: RetryPolicy::default(),
            transcript: None,
            replay: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub world: WorldSource,
    /// Overrides the world's target category.
    pub target: Option<String>,
    pub backend: Backend,
    pub memory: bool,
    pub capacity: usize,
    /// 6 (panorama) or 3 (forward sectors).
    pub views: u8,
    pub leg_length: u32,
    pub max_steps: u32,
    /// Geodesic meters.
    pub success_threshold: f64,
    /// Geodesic meters from the start beyond which an episode counts as escaped.
    pub escape_radius: f64,
    pub seed: u64,
    /// Draw the start cell and heading from `seed` within the start room.
    pub start_jitter: bool,
    pub weights: PriorWeights,
    pub perception: PerceptionConfig,
    pub remote: RemoteConfig,
    /// Prior table file; the shipped table when absent.
    pub priors: Option<PathBuf>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            world: WorldSource::default(),
            target: None,
            backend: Backend::Heuristic,
            memory: true,
            capacity: DEFAULT_CAPACITY,
            views: 6,
            leg_length: 5,
            max_steps: 500,
            success_threshold: 1.0,
            escape_radius: 3.0,
            seed: 0,
            start_jitter: false,
            weights: PriorWeights::default(),
            perception: PerceptionConfig::default(),
            remote: RemoteConfig::default(),
            priors: None,
        }
    }
}

impl EpisodeConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: Self = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if ViewMode::from_count(self.views).is_none() {
            return bad(format!("views must be 6 or 3, got {}", self.views));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if self.capacity == 0 {
            return bad("queue capacity must be at least 1".into());
        }
        if self.leg_length == 0 {
            return bad("leg_length must be at least 1".into());
        }
        if !(self.success_threshold >= 0.0 && self.escape_radius >= 0.0) {
            return bad("distances must be non-negative".into());
        }
        let w = &self.weights;
        if [w.w_like, w.w_prior, w.w_rich, w.w_mem].iter().any(|x| !x.is_finite() || *x < 0.0) {
            return bad("weights must be finite and non-negative".into());
        }
        Ok(())
    }

    pub fn view_mode(&self) -> ViewMode {
        ViewMode::from_count(self.views).unwrap_or(ViewMode::Panorama)
    }

    pub fn controller(&self) -> ControllerConfig {
        ControllerConfig {
            leg_length: self.leg_length,
            success_threshold: self.success_threshold,
            max_range: self.perception.max_range,
        }
    }

    pub fn load_priors(&self) -> Result<PriorTable, RunError> {
        match &self.priors {
            Some(path) => PriorTable::load(path).map_err(|e| RunError::Config(e.to_string())),
            None => Ok(PriorTable::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutput {
    pub result: EpisodeResult,
    pub log: TrajectoryLog,
}

/// Applies the target override and start jitter.
pub fn prepare_world(world: &GridWorld, cfg: &EpisodeConfig) -> Result<GridWorld, RunError> {
    let mut world = match &cfg.target {
        Some(t) => world.with_target(t.clone()),
        None => world.clone(),
    };
    if world.instances_of(world.target_category()).next().is_none() {
        return Err(RunError::InvalidEpisode(format!("no `{}` in the world", world.target_category())));
    }
    if cfg.start_jitter {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let start = world.start();
        let room = world.room_at(start.cell).map(|r| r.id);
        let field = world.target_field(world.target_category())?;
        let occupied: Vec<Cell> = world.objects().iter().map(|o| o.position).collect();
        let in_room: Vec<(Cell, f64)> = world
            .free_cells()
            .filter(|c| world.room_at(*c).map(|r| r.id) == room && !occupied.contains(c))
            .filter_map(|c| field.meters(c, world.cell_size()).map(|d| (c, d)))
            .collect();
        // Prefer starts from which reaching the target means leaving the
        // escape radius.
        let far = cfg.escape_radius + cfg.success_threshold;
        let mut cells: Vec<Cell> = in_room.iter().filter(|(_, d)| *d > far).map(|(c, _)| *c).collect();
        if cells.is_empty() {
            cells = in_room.iter().filter(|(_, d)| *d > cfg.success_threshold).map(|(c, _)| *c).collect();
        }
        let cell = *cells.choose(&mut rng).unwrap_or(&start.cell);
        let heading = Heading::wrapping(30 * rng.gen_range(0..12));
        world = world.with_start(Pose::new(cell, heading))?;
    }
    Ok(world)
}

fn resolve_endpoint(cfg: &RemoteConfig) -> Result<EndpointConfig, RunError> {
    if cfg.replay.is_some() {
        // No network in replay; endpoint and models only shape the requests.
        return Ok(EndpointConfig {
            endpoint: cfg.endpoint.clone().unwrap_or_else(|| "replay".into()),
            api_key: None,
            llm_model: cfg.llm_model.clone().unwrap_or_else(|| EndpointConfig::DEFAULT_LLM_MODEL.into()),
            mllm_model: cfg.mllm_model.clone().unwrap_or_else(|| EndpointConfig::DEFAULT_MLLM_MODEL.into()),
        });
    }
    Ok(EndpointConfig::resolve(cfg.endpoint.as_deref(), cfg.llm_model.as_deref(), cfg.mllm_model.as_deref())?)
}

fn remote_client(cfg: &RemoteConfig, endpoint: &EndpointConfig) -> Result<LlmClient, RunError> {
    let transport: Box<dyn Transport> = match &cfg.replay {
        Some(path) => {
            let t = Transcript::load(path).map_err(|e| RunError::io(path, e))?;
            Box::new(ReplayTransport::new(&t))
        }
        None => Box::new(HttpTransport::new(endpoint.api_key.clone()).map_err(|error| ClientError::Transport { error, attempts: 0 })?),
    };
    let transcript = match &cfg.transcript {
        Some(path) => Transcript::append_to(path).map_err(|e| RunError::io(path, e))?,
        None => Transcript::in_memory(),
    };
    Ok(LlmClient::new(transport, cfg.retry.clone(), transcript))
}

fn request_template(cfg: &RemoteConfig, endpoint: &EndpointConfig, model: &str) -> RequestTemplate {
    RequestTemplate {
        endpoint: endpoint.endpoint.clone(),
        model: model.to_string(),
        temperature: cfg.temperature,
        timeout_secs: cfg.timeout_secs,
    }
}

/// Runs one episode with the backends named in `cfg`.
pub fn run_episode(world: &GridWorld, cfg: &EpisodeConfig, priors: &Arc<PriorTable>) -> Result<EpisodeOutput, RunError> {
    cfg.validate()?;
    let world = prepare_world(world, cfg)?;
    let target = world.target_category().to_string();
    let oracle = OracleParser::new(priors.clone(), cfg.perception.clone());
    match cfg.backend {
        Backend::Oracle => run_episode_with(&world, cfg, &mut oracle.clone(), &mut LikelihoodPolicy::new(cfg.weights)),
        Backend::Heuristic => run_episode_with(&world, cfg, &mut oracle.clone(), &mut HeuristicPolicy::new(target, priors.clone(), cfg.weights)),
        Backend::Remote => {
            let endpoint = resolve_endpoint(&cfg.remote)?;
            let fallback = HeuristicPolicy::new(target.clone(), priors.clone(), cfg.weights);
            let mut policy = RemotePolicy::new(
                remote_client(&cfg.remote, &endpoint)?,
                request_template(&cfg.remote, &endpoint, &endpoint.llm_model),
                cfg.remote.prompt_mode,
                target,
                fallback,
            );
            if cfg.remote.remote_parsing {
                let mut parser = RemoteParser::new(
                    remote_client(&cfg.remote, &endpoint)?,
                    request_template(&cfg.remote, &endpoint, &endpoint.mllm_model),
                    oracle,
                );
                run_episode_with(&world, cfg, &mut parser, &mut policy)
            } else {
                run_episode_with(&world, cfg, &mut oracle.clone(), &mut policy)
            }
        }
    }
}

/// Scores a finished trajectory. Shared by live runs and log replay so both
/// produce identical numbers.
pub(crate) fn score_episode(
    world: &GridWorld,
    header: &LogHeader,
    end: &Pose,
    moves: u32,
    steps: u32,
    waypoints: u32,
    stopped: bool,
) -> Result<EpisodeResult, RunError> {
    let start = header.start;
    let shortest_path = world.distance_to_nearest_target(&start, &header.target)?;
    let final_dts = world.distance_to_nearest_target(end, &header.target)?;
    let start_final_geodesic = world.shortest_path_length(start.cell, end.cell)?;
    Ok(EpisodeResult {
        success: stopped && final_dts <= header.success_threshold,
        path_length: moves as f64 * world.cell_size(),
        shortest_path,
        final_dts,
        start_final_geodesic,
        escaped: start_final_geodesic > header.escape_radius,
        steps,
        waypoints,
    })
}

/// Runs one episode with caller-supplied parser and policy. `world` is used
/// as given (no jitter or target override).
pub fn run_episode_with(
    world: &GridWorld,
    cfg: &EpisodeConfig,
    parser: &mut dyn ParserBackend,
    policy: &mut dyn Policy,
) -> Result<EpisodeOutput, RunError> {
    cfg.validate()?;
    let target = world.target_category().to_string();
    let start = world.start();
    let shortest = world
        .distance_to_nearest_target(&start, &target)
        .map_err(|e| RunError::InvalidEpisode(e.to_string()))?;
    if shortest <= 0.0 {
        return Err(RunError::InvalidEpisode("episode starts on a target instance".into()));
    }
    let header = LogHeader::new(world, cfg);
    let controller = cfg.controller();
    let mode = cfg.view_mode();
    let mut queue = MemoryQueue::new(cfg.capacity)?;
    let mut records = Vec::new();
    let mut pose = start;
    let (mut steps, mut moves, mut timestep) = (0u32, 0u32, 0u32);
    let mut stopped = false;

    while steps < cfg.max_steps && !stopped {
        timestep += 1;
        let views = select_views(capture_panorama(world, &pose, &cfg.perception), mode);
        let mut locals = Vec::with_capacity(views.len());
        for view in &views {
            locals.push(match view {
                Some(v) => Some(parser.parse_local(v, &scaffold(v, &cfg.perception), &target)?),
                None => None,
            });
        }
        let summary = parser.summarize(timestep, &locals)?;
        let memory_used = cfg.memory && queue.is_full();
        let decision = if cfg.memory {
            decide(policy, &locals, &summary, &queue)?
        } else {
            policy.decide_without_memory(&locals, &summary)?
        };
        let snapshot = queue.snapshot();
        let chosen_similarity = match locals.iter().flatten().find(|ld| ld.sector == decision.sector) {
            Some(ld) if !snapshot.is_empty() => Some(memory_penalty(ld, &snapshot, &cfg.weights)?),
            _ => None,
        };
        records.push(LogRecord::Waypoint(WaypointRecord {
            timestep,
            pose,
            locals: locals.iter().flatten().map(SectorDigest::from).collect(),
            summary: summary.clone(),
            queue: snapshot,
            memory_used,
            decision: decision.clone(),
            chosen_similarity,
        }));
        queue.push(summary)?;

        let leg = execute_leg(world, pose, &decision, &controller, cfg.max_steps - steps)?;
        for s in &leg.steps {
            steps += 1;
            moves += u32::from(s.outcome.moved);
            records.push(LogRecord::Step(StepRecord {
                step: steps,
                action: s.action,
                pose: s.pose,
                outcome: s.outcome,
            }));
        }
        pose = leg.end_pose;
        stopped = leg.stopped();
        if leg.terminated == LegEnd::Budget {
            break;
        }
    }

    let result = score_episode(world, &header, &pose, moves, steps, timestep, stopped)?;
    Ok(EpisodeOutput {
        result,
        log: TrajectoryLog { header, records },
    })
}
