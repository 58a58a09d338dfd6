//! Line-delimited JSON trajectory logs. The first line is a versioned
//! header; every following line is one waypoint or one step record.

use serde::{Deserialize, Serialize};

use super::{score_episode, Backend, EpisodeConfig, RunError};
use crate::controller::{execute_leg, ControllerConfig};
use crate::decision::DecisionResult;
use crate::metrics::EpisodeResult;
use crate::perception::{GlobalSummary, LocalDescription};
use crate::world::{Action, GridWorld, Pose, StepOutcome};

pub const LOG_FORMAT: &str = "panonav-trajectory";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub world_size: [usize; 2],
    pub target: String,
    pub start: Pose,
    pub backend: Backend,
    pub memory: bool,
    pub capacity: usize,
    pub views: u8,
    pub leg_length: u32,
    pub max_steps: u32,
    pub success_threshold: f64,
    pub escape_radius: f64,
    pub max_range: f64,
    pub seed: u64,
}

impl LogHeader {
    pub fn new(world: &GridWorld, cfg: &EpisodeConfig) -> Self {
        Self {
            format: LOG_FORMAT.into(),
            version: LOG_VERSION,
            world_size: [world.width(), world.height()],
            target: world.target_category().to_string(),
            start: world.start(),
            backend: cfg.backend,
            memory: cfg.memory,
            capacity: cfg.capacity,
            views: cfg.views,
            leg_length: cfg.leg_length,
            max_steps: cfg.max_steps,
            success_threshold: cfg.success_threshold,
            escape_radius: cfg.escape_radius,
            max_range: cfg.perception.max_range,
            seed: cfg.seed,
        }
    }

    fn controller(&self) -> ControllerConfig {
        ControllerConfig {
            leg_length: self.leg_length,
            success_threshold: self.success_threshold,
            max_range: self.max_range,
        }
    }
}

/// Compact form of a local description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorDigest {
    pub sector: u8,
    pub room: String,
    pub likelihood: f64,
    pub richness: f64,
    pub categories: Vec<String>,
}

impl From<&LocalDescription> for SectorDigest {
    fn from(ld: &LocalDescription) -> Self {
        Self {
            sector: ld.sector,
            room: ld.room_type_guess.clone(),
            likelihood: ld.target_likelihood,
            richness: ld.richness,
            categories: ld.entities.iter().map(|e| e.category.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointRecord {
    pub timestep: u32,
    pub pose: Pose,
    pub locals: Vec<SectorDigest>,
    pub summary: GlobalSummary,
    /// Queue contents before this waypoint's push.
    pub queue: Vec<GlobalSummary>,
    /// Whether the decision read the queue.
    pub memory_used: bool,
    pub decision: DecisionResult,
    /// Visit similarity of the chosen sector against the queue, when non-empty.
    pub chosen_similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub action: Action,
    pub pose: Pose,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Waypoint(WaypointRecord),
    Step(StepRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub header: LogHeader,
    pub records: Vec<LogRecord>,
}

impl TrajectoryLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, RunError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| RunError::Log("empty log".into()))?;
        let header: LogHeader = serde_json::from_str(first).map_err(|e| RunError::Log(format!("header: {e}")))?;
        if header.format != LOG_FORMAT || header.version != LOG_VERSION {
            return Err(RunError::Log(format!("unsupported log {} v{}", header.format, header.version)));
        }
        let records = lines
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| RunError::Log(format!("line {}: {e}", i + 1))))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, records })
    }

    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Step(s) => Some(s),
            LogRecord::Waypoint(_) => None,
        })
    }

    pub fn waypoints(&self) -> impl Iterator<Item = &WaypointRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Waypoint(w) => Some(w),
            LogRecord::Step(_) => None,
        })
    }

    /// Start pose followed by the pose after every step.
    pub fn poses(&self) -> Vec<Pose> {
        std::iter::once(self.header.start).chain(self.steps().map(|s| s.pose)).collect()
    }
}

fn mismatch(what: String) -> RunError {
    RunError::Log(format!("log does not match world: {what}"))
}

/// Re-executes a log against `world` without any policy: every step must
/// reproduce its logged pose and outcome, and every logged decision fed to
/// the controller must reproduce the steps that follow it. Returns the
/// episode result recomputed from the trajectory.
pub fn replay_log(world: &GridWorld, log: &TrajectoryLog) -> Result<EpisodeResult, RunError> {
    let h = &log.header;
    if h.world_size != [world.width(), world.height()] {
        return Err(mismatch(format!("size {:?} vs {}x{}", h.world_size, world.width(), world.height())));
    }
    world.validate_pose(&h.start).map_err(|e| mismatch(e.to_string()))?;
    let controller = h.controller();

    let mut pose = h.start;
    let (mut steps, mut moves, mut waypoints) = (0u32, 0u32, 0u32);
    let mut stopped = false;
    let mut i = 0;
    while i < log.records.len() {
        let LogRecord::Waypoint(wp) = &log.records[i] else {
            return Err(mismatch(format!("record {i}: step without a waypoint")));
        };
        if wp.pose != pose {
            return Err(mismatch(format!("waypoint {} pose", wp.timestep)));
        }
        waypoints += 1;
        let leg = execute_leg(world, pose, &wp.decision, &controller, h.max_steps - steps).map_err(|e| mismatch(e.to_string()))?;
        i += 1;
        let mut legged = leg.steps.iter();
        while let Some(LogRecord::Step(s)) = log.records.get(i) {
            let (next, outcome) = world.step(pose, s.action).map_err(|e| mismatch(e.to_string()))?;
            if next != s.pose || outcome != s.outcome {
                return Err(mismatch(format!("step {}", s.step)));
            }
            match legged.next() {
                Some(expected) if expected.action == s.action => {}
                _ => return Err(mismatch(format!("step {} does not follow from the logged decision", s.step))),
            }
            steps += 1;
            moves += u32::from(outcome.moved);
            stopped = s.action == crate::world::Action::Stop;
            pose = next;
            i += 1;
        }
        if legged.next().is_some() {
            return Err(mismatch(format!("waypoint {} leg is truncated", wp.timestep)));
        }
    }
    score_episode(world, h, &pose, moves, steps, waypoints, stopped)
}
