//! Waypoint controller: turns a decision into primitive actions.
//!
//! An exploring leg rotates to the chosen sector's center and then advances
//! up to `leg_length` cells, ending early when blocked. An approach leg
//! (target found) follows a shortest path to the nearest sighted target
//! instance, re-sighting after every move, and stops once inside the
//! success threshold.

use serde::{Deserialize, Serialize};

use crate::decision::DecisionResult;
use crate::perception::{instance_visible, sector_center};
use crate::world::{Action, Cell, GridWorld, Heading, Pose, StepOutcome, WorldError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// MoveAhead actions per exploring leg.
    pub leg_length: u32,
    /// Geodesic meters.
    pub success_threshold: f64,
    /// Sighting range in meters.
    pub max_range: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            leg_length: 5,
            success_threshold: 1.0,
            max_range: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LegEnd {
    WaypointReached,
    Blocked,
    StoppedAtTarget,
    /// Stop issued away from any sighted instance.
    Stopped,
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegStep {
    pub action: Action,
    /// Pose after the action.
    pub pose: Pose,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegResult {
    pub end_pose: Pose,
    pub steps: Vec<LegStep>,
    pub terminated: LegEnd,
}

impl LegResult {
    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }

    pub fn moves(&self) -> usize {
        self.steps.iter().filter(|s| s.outcome.moved).count()
    }

    pub fn path_length(&self, cell_size: f64) -> f64 {
        self.moves() as f64 * cell_size
    }

    pub fn stopped(&self) -> bool {
        self.steps.last().is_some_and(|s| s.action == Action::Stop)
    }
}

/// Turns from `from` to `to`, fewest first; a half turn goes left.
pub fn rotation(from: Heading, to: Heading) -> Vec<Action> {
    let diff = (to.degrees() as i32 - from.degrees() as i32).rem_euclid(360);
    let left = diff / Heading::STEP as i32;
    let right = (360 - diff) % 360 / Heading::STEP as i32;
    if left <= right {
        vec![Action::TurnLeft; left as usize]
    } else {
        vec![Action::TurnRight; right as usize]
    }
}

fn heading_towards(from: Cell, to: Cell) -> Heading {
    let d = match (to.x - from.x, to.y - from.y) {
        (1, 0) => 0,
        (0, -1) => 90,
        (-1, 0) => 180,
        _ => 270,
    };
    Heading::wrapping(d)
}

struct Leg<'a> {
    world: &'a GridWorld,
    pose: Pose,
    steps: Vec<LegStep>,
    budget: u32,
}

impl Leg<'_> {
    fn exhausted(&self) -> bool {
        self.steps.len() as u32 >= self.budget
    }

    fn act(&mut self, action: Action) -> Result<StepOutcome, WorldError> {
        let (pose, outcome) = self.world.step(self.pose, action)?;
        self.pose = pose;
        self.steps.push(LegStep { action, pose, outcome });
        Ok(outcome)
    }

    /// Runs `actions`, returning false if the budget ran out first.
    fn turn(&mut self, actions: Vec<Action>) -> Result<bool, WorldError> {
        for a in actions {
            if self.exhausted() {
                return Ok(false);
            }
            self.act(a)?;
        }
        Ok(true)
    }

    fn finish(self, terminated: LegEnd) -> LegResult {
        LegResult {
            end_pose: self.pose,
            steps: self.steps,
            terminated,
        }
    }
}

/// Nearest (geodesic, then index) visible instance of `category`.
fn sight(world: &GridWorld, cell: Cell, category: &str, max_range: f64) -> Option<(Cell, u32)> {
    let here = world.distance_field(&[cell]);
    world
        .instances_of(category)
        .filter(|(i, _)| instance_visible(world, cell, *i, max_range))
        .filter_map(|(_, o)| here.hops(o.position).map(|h| (o.position, h)))
        .min_by_key(|&(_, h)| h)
}

pub fn execute_leg(
    world: &GridWorld,
    pose: Pose,
    decision: &DecisionResult,
    cfg: &ControllerConfig,
    budget: u32,
) -> Result<LegResult, WorldError> {
    world.validate_pose(&pose)?;
    let mut leg = Leg {
        world,
        pose,
        steps: Vec::new(),
        budget,
    };
    if budget == 0 {
        return Ok(leg.finish(LegEnd::Budget));
    }

    if decision.found {
        return approach(leg, world.target_category(), cfg);
    }

    let goal = Heading::wrapping(sector_center(pose.heading.degrees(), decision.sector) as i32);
    if !leg.turn(rotation(pose.heading, goal))? {
        return Ok(leg.finish(LegEnd::Budget));
    }
    for _ in 0..cfg.leg_length {
        if leg.exhausted() {
            return Ok(leg.finish(LegEnd::Budget));
        }
        if leg.act(Action::MoveAhead)?.blocked {
            return Ok(leg.finish(LegEnd::Blocked));
        }
    }
    Ok(leg.finish(LegEnd::WaypointReached))
}

fn approach(mut leg: Leg<'_>, category: &str, cfg: &ControllerConfig) -> Result<LegResult, WorldError> {
    let world = leg.world;
    let threshold_hops = (cfg.success_threshold / world.cell_size() + 1e-9).floor() as u32;
    let mut goal: Option<Cell> = None;
    loop {
        if let Some((cell, _)) = sight(world, leg.pose.cell, category, cfg.max_range) {
            goal = Some(cell);
        }
        let Some(goal_cell) = goal else {
            // Nothing of the category in view: honour the stop request.
            leg.act(Action::Stop)?;
            return Ok(leg.finish(LegEnd::Stopped));
        };
        let field = world.distance_field(&[goal_cell]);
        let hops = field.hops(leg.pose.cell).ok_or(WorldError::Unreachable(leg.pose.cell, goal_cell))?;
        if hops <= threshold_hops {
            if leg.exhausted() {
                return Ok(leg.finish(LegEnd::Budget));
            }
            leg.act(Action::Stop)?;
            return Ok(leg.finish(LegEnd::StoppedAtTarget));
        }
        let next = field.downhill(leg.pose.cell).expect("reachable cell above zero hops has a downhill neighbour");
        if !leg.turn(rotation(leg.pose.heading, heading_towards(leg.pose.cell, next)))? || leg.exhausted() {
            return Ok(leg.finish(LegEnd::Budget));
        }
        leg.act(Action::MoveAhead)?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor(target_at: Option<i32>) -> GridWorld {
        let rows = ["##########", "#........#", "##########"];
        let objects: Vec<(&str, Cell)> = match target_at {
            Some(x) => vec![("sofa", Cell::new(x, 1))],
            None => vec![("lamp", Cell::new(8, 1))],
        };
        let target = if target_at.is_some() { "sofa" } else { "lamp" };
        GridWorld::from_ascii(&rows, &[('.', "hallway")], &objects, Pose::new(Cell::new(1, 1), Heading::wrapping(0)), target).unwrap()
    }

    fn explore(sector: u8) -> DecisionResult {
        DecisionResult {
            sector,
            found: false,
            rationale: String::new(),
        }
    }

    #[test]
    fn straight_leg() {
        let w = corridor(None);
        let leg = execute_leg(&w, w.start(), &explore(1), &ControllerConfig::default(), 100).unwrap();
        assert_eq!(leg.actions(), vec![Action::MoveAhead; 5]);
        assert_eq!(leg.terminated, LegEnd::WaypointReached);
        assert_eq!(leg.end_pose.cell, Cell::new(6, 1));
        assert_eq!(leg.path_length(w.cell_size()), 1.25);
    }

    #[test]
    fn half_turn_is_six_lefts() {
        let w = corridor(None);
        let start = Pose::new(Cell::new(8, 1), Heading::wrapping(0));
        let leg = execute_leg(&w, start, &explore(4), &ControllerConfig::default(), 100).unwrap();
        assert_eq!(&leg.actions()[..6], &[Action::TurnLeft; 6]);
        assert_eq!(leg.actions()[6], Action::MoveAhead);
        assert_eq!(leg.end_pose.heading.degrees(), 180);
    }

    #[test]
    fn blocked_leg_ends_early() {
        let w = corridor(None);
        let start = Pose::new(Cell::new(7, 1), Heading::wrapping(0));
        let leg = execute_leg(&w, start, &explore(1), &ControllerConfig::default(), 100).unwrap();
        assert_eq!(leg.actions(), vec![Action::MoveAhead, Action::MoveAhead]);
        assert_eq!(leg.terminated, LegEnd::Blocked);
        assert_eq!(leg.moves(), 1);
    }

    #[test]
    fn budget_caps_actions() {
        let w = corridor(None);
        let leg = execute_leg(&w, w.start(), &explore(1), &ControllerConfig::default(), 3).unwrap();
        assert_eq!(leg.steps.len(), 3);
        assert_eq!(leg.terminated, LegEnd::Budget);
    }

    #[test]
    fn found_within_threshold_stops() {
        let w = corridor(Some(3));
        let d = DecisionResult {
            sector: 1,
            found: true,
            rationale: String::new(),
        };
        let leg = execute_leg(&w, w.start(), &d, &ControllerConfig::default(), 100).unwrap();
        assert_eq!(leg.actions(), vec![Action::Stop]);
        assert_eq!(leg.terminated, LegEnd::StoppedAtTarget);
    }

    #[test]
    fn found_approaches_then_stops() {
        let w = corridor(Some(8));
        let start = Pose::new(Cell::new(1, 1), Heading::wrapping(180));
        let d = DecisionResult {
            sector: 4,
            found: true,
            rationale: String::new(),
        };
        let leg = execute_leg(&w, start, &d, &ControllerConfig::default(), 100).unwrap();
        assert_eq!(leg.terminated, LegEnd::StoppedAtTarget);
        assert_eq!(leg.end_pose.cell, Cell::new(4, 1));
        assert_eq!(leg.moves(), 3);
        assert_eq!(leg.steps.iter().filter(|s| s.action == Action::TurnLeft).count(), 6);
    }

    #[test]
    fn rotation_is_minimal() {
        for from in (0..360).step_by(30) {
            for to in (0..360).step_by(30) {
                let turns = rotation(Heading::wrapping(from), Heading::wrapping(to));
                assert!(turns.len() <= 6);
                let net: i32 = turns.iter().map(|a| if *a == Action::TurnLeft { 30 } else { -30 }).sum();
                assert_eq!((from + net).rem_euclid(360), to);
            }
        }
    }
}
