use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PerceptionConfig;
use crate::world::{Cell, CellKind, GridWorld, Pose};

pub const SECTORS: usize = 6;
pub const SECTOR_SPAN: i32 = 60;

/// Which sectors are captured at a waypoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViewMode {
    /// All six sectors.
    Panorama,
    /// Forward-facing sectors 6, 1 and 2 only.
    Forward,
}

impl ViewMode {
    pub fn from_count(views: u8) -> Option<Self> {
        match views {
            6 => Some(Self::Panorama),
            3 => Some(Self::Forward),
            _ => None,
        }
    }

    pub fn count(self) -> u8 {
        match self {
            Self::Panorama => 6,
            Self::Forward => 3,
        }
    }

    /// Whether 1-based `sector` is captured in this mode.
    pub fn includes(self, sector: u8) -> bool {
        match self {
            Self::Panorama => (1..=6).contains(&sector),
            Self::Forward => matches!(sector, 6 | 1 | 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleEntity {
    pub category: String,
    /// Meters between cell centers.
    pub range: f64,
    /// Degrees from the sector center, positive to the right, in `[-30, 30)`.
    pub bearing: f64,
    /// Simulator handle of the object instance.
    pub instance: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalView {
    /// 1..=6; sector 1 is centered on the agent heading.
    pub sector: u8,
    pub center_heading: u16,
    pub entities: Vec<VisibleEntity>,
    /// Distance to the center of the first wall cell along the sector
    /// center, `None` when open out to the visibility range.
    pub wall_distance_ahead: Option<f64>,
    /// Visible free-cell counts per room type.
    pub room_cells: BTreeMap<String, u32>,
}

impl DirectionalView {
    fn empty(sector: u8, center_heading: u16) -> Self {
        Self {
            sector,
            center_heading,
            entities: Vec::new(),
            wall_distance_ahead: None,
            room_cells: BTreeMap::new(),
        }
    }
}

/// Center heading of 1-based `sector` for an agent facing `heading`.
pub fn sector_center(heading: u16, sector: u8) -> u16 {
    ((heading as i32 + SECTOR_SPAN * (sector as i32 - 1)).rem_euclid(360)) as u16
}

fn wrap180(deg: f64) -> f64 {
    deg - 360.0 * ((deg + 180.0) / 360.0).floor()
}

/// World-frame direction from `from` to `to`, degrees counterclockwise from east.
fn direction_deg(from: Cell, to: Cell) -> f64 {
    let dx = (to.x - from.x) as f64;
    let dy = (from.y - to.y) as f64;
    dy.atan2(dx).to_degrees()
}

/// Sector (1-based) and bearing of a world direction for an agent heading.
pub fn locate(heading: u16, direction: f64) -> (u8, f64) {
    let mut best = (1u8, f64::INFINITY);
    for sector in 1..=SECTORS as u8 {
        let b = wrap180(sector_center(heading, sector) as f64 - direction);
        if (-30.0..30.0).contains(&b) {
            return (sector, b);
        }
        if b.abs() < best.1.abs() {
            best = (sector, b);
        }
    }
    best
}

/// True when no wall lies strictly between `from` and `to` on the
/// Bresenham line joining them.
pub fn line_of_sight(world: &GridWorld, from: Cell, to: Cell) -> bool {
    world.line_of_sight(from, to)
}

fn euclid(world: &GridWorld, a: Cell, b: Cell) -> f64 {
    let dx = (a.x - b.x) as f64;
    let dy = (a.y - b.y) as f64;
    (dx * dx + dy * dy).sqrt() * world.cell_size()
}

fn wall_distance(world: &GridWorld, origin: Cell, heading: u16, max_range: f64) -> Option<f64> {
    let rad = (heading as f64).to_radians();
    let (ux, uy) = (rad.cos(), -rad.sin());
    let step = 0.05;
    let max_cells = max_range / world.cell_size();
    let mut t = step;
    while t <= max_cells + 1e-9 {
        let c = Cell::new(
            (origin.x as f64 + ux * t).round() as i32,
            (origin.y as f64 + uy * t).round() as i32,
        );
        if world.kind(c) == CellKind::Wall {
            return Some(euclid(world, origin, c));
        }
        t += step;
    }
    None
}

/// Whether object `instance` is visible from `cell` within `max_range`.
pub fn instance_visible(world: &GridWorld, cell: Cell, instance: usize, max_range: f64) -> bool {
    let Some(obj) = world.objects().get(instance) else {
        return false;
    };
    euclid(world, cell, obj.position) <= max_range + 1e-9 && line_of_sight(world, cell, obj.position)
}

/// Six directional views around `pose`. Sector 1 is centered on the
/// heading and sectors advance counterclockwise in 60° steps. An object on
/// the agent's own cell has no direction of its own; it is reported at range 0
/// toward world east so the views still rotate with the heading.
pub fn capture_panorama(world: &GridWorld, pose: &Pose, cfg: &PerceptionConfig) -> Vec<DirectionalView> {
    let heading = pose.heading.degrees();
    let origin = pose.cell;
    let mut views: Vec<DirectionalView> = (1..=SECTORS as u8)
        .map(|s| {
            let center = sector_center(heading, s);
            let mut v = DirectionalView::empty(s, center);
            v.wall_distance_ahead = wall_distance(world, origin, center, cfg.max_range);
            v
        })
        .collect();

    for (instance, obj) in world.objects().iter().enumerate() {
        let range = euclid(world, origin, obj.position);
        if range > cfg.max_range + 1e-9 || !line_of_sight(world, origin, obj.position) {
            continue;
        }
        let direction = if obj.position == origin { 0.0 } else { direction_deg(origin, obj.position) };
        let (sector, bearing) = locate(heading, direction);
        views[sector as usize - 1].entities.push(VisibleEntity {
            category: obj.category.clone(),
            range,
            bearing,
            instance,
        });
    }

    let reach = (cfg.max_range / world.cell_size()).ceil() as i32;
    for y in origin.y - reach..=origin.y + reach {
        for x in origin.x - reach..=origin.x + reach {
            let c = Cell::new(x, y);
            if c == origin || !world.is_free(c) {
                continue;
            }
            if euclid(world, origin, c) > cfg.max_range + 1e-9 || !line_of_sight(world, origin, c) {
                continue;
            }
            let Some(room) = world.room_at(c) else { continue };
            let (sector, _) = locate(heading, direction_deg(origin, c));
            *views[sector as usize - 1]
                .room_cells
                .entry(room.room_type.clone())
                .or_insert(0) += 1;
        }
    }
    views
}

/// Keeps only the sectors captured under `mode`; the result always has six slots.
pub fn select_views(views: Vec<DirectionalView>, mode: ViewMode) -> Vec<Option<DirectionalView>> {
    views
        .into_iter()
        .map(|v| if mode.includes(v.sector) { Some(v) } else { None })
        .collect()
}
