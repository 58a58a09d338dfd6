//! Symbolic multi-room grid world.
//!
//! The world is a 4-connected occupancy grid whose cells match the
//! `MoveAhead` stride. Headings are measured counterclockwise from east
//! (increasing column); 90° points toward decreasing row index ("north" on
//! a top-down rendering).

mod file;
mod generator;
mod geodesic;

pub use file::{load_world, save_world, WorldFile};
pub use generator::{generate_world, generate_world_with, GeneratorParams};
pub use geodesic::DistanceField;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default edge length of a grid cell, in meters.
pub const DEFAULT_CELL_SIZE: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("no path between {0} and {1}")]
    Unreachable(Cell, Cell),
    #[error("no instance of category `{0}` in world")]
    NoSuchCategory(String),
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
    #[error("world file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn neighbours(self) -> [Cell; 4] {
        [
            self.offset(1, 0),
            self.offset(0, -1),
            self.offset(-1, 0),
            self.offset(0, 1),
        ]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Free,
    Wall,
}

/// Heading in degrees, always a multiple of 30 in `0..360`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub struct Heading(u16);

impl Heading {
    pub const STEP: u16 = 30;

    pub fn new(degrees: u16) -> Result<Self, WorldError> {
        if degrees < 360 && degrees.is_multiple_of(Self::STEP) {
            Ok(Self(degrees))
        } else {
            Err(WorldError::InvalidPose(format!(
                "heading {degrees} is not a multiple of 30 in [0, 360)"
            )))
        }
    }

    /// Wraps any integer number of degrees that is a multiple of 30.
    pub fn wrapping(degrees: i32) -> Self {
        let d = degrees.rem_euclid(360) as u16;
        debug_assert_eq!(d % Self::STEP, 0);
        Self(d - d % Self::STEP)
    }

    pub fn degrees(self) -> u16 {
        self.0
    }

    pub fn left(self) -> Self {
        Self::wrapping(self.0 as i32 + Self::STEP as i32)
    }

    pub fn right(self) -> Self {
        Self::wrapping(self.0 as i32 - Self::STEP as i32)
    }

    /// Grid displacement of one `MoveAhead`: the dominant axis of the
    /// heading vector. Multiples of 30° never tie.
    pub fn stride(self) -> (i32, i32) {
        match self.0 / Self::STEP {
            11 | 0 | 1 => (1, 0),
            2..=4 => (0, -1),
            5..=7 => (-1, 0),
            _ => (0, 1),
        }
    }
}

impl TryFrom<u16> for Heading {
    type Error = WorldError;
    fn try_from(value: u16) -> Result<Self, Self::Error> {
        Heading::new(value)
    }
}

impl From<Heading> for u16 {
    fn from(h: Heading) -> u16 {
        h.0
    }
}

/// Camera pitch, one of −30, 0, +30 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "i16", into = "i16")]
pub struct Pitch(i16);

impl Pitch {
    pub fn new(degrees: i16) -> Result<Self, WorldError> {
        match degrees {
            -30 | 0 | 30 => Ok(Self(degrees)),
            _ => Err(WorldError::InvalidPose(format!("pitch {degrees} not in {{-30, 0, 30}}"))),
        }
    }

    pub fn degrees(self) -> i16 {
        self.0
    }

    fn up(self) -> Self {
        Self((self.0 + 30).min(30))
    }

    fn down(self) -> Self {
        Self((self.0 - 30).max(-30))
    }
}

impl TryFrom<i16> for Pitch {
    type Error = WorldError;
    fn try_from(value: i16) -> Result<Self, Self::Error> {
        Pitch::new(value)
    }
}

impl From<Pitch> for i16 {
    fn from(p: Pitch) -> i16 {
        p.0
    }
}

/// Agent pose. The position is held as a grid cell; metric coordinates are
/// `cell * cell_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub cell: Cell,
    pub heading: Heading,
    #[serde(default)]
    pub pitch: Pitch,
}

impl Pose {
    pub fn new(cell: Cell, heading: Heading) -> Self {
        Self {
            cell,
            heading,
            pitch: Pitch::default(),
        }
    }

    pub fn position_m(&self, cell_size: f64) -> (f64, f64) {
        (self.cell.x as f64 * cell_size, self.cell.y as f64 * cell_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Stop,
    MoveAhead,
    TurnLeft,
    TurnRight,
    LookUp,
    LookDown,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::Stop,
        Action::MoveAhead,
        Action::TurnLeft,
        Action::TurnRight,
        Action::LookUp,
        Action::LookDown,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepOutcome {
    pub moved: bool,
    pub blocked: bool,
    pub stopped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub id: u32,
    pub room_type: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub category: String,
    pub position: Cell,
    pub room_id: u32,
}

/// Static environment. Immutable after construction; all invariants are
/// checked by [`GridWorld::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    cell_size: f64,
    width: usize,
    height: usize,
    cells: Vec<CellKind>,
    rooms: Vec<Room>,
    objects: Vec<ObjectInstance>,
    start: Pose,
    target_category: String,
    // Index into `rooms` for every Free cell.
    room_index: Vec<Option<usize>>,
}

impl GridWorld {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cell_size: f64,
        width: usize,
        height: usize,
        cells: Vec<CellKind>,
        rooms: Vec<Room>,
        objects: Vec<ObjectInstance>,
        start: Pose,
        target_category: impl Into<String>,
    ) -> Result<Self, WorldError> {
        let invalid = |m: String| Err(WorldError::InvalidWorld(m));
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return invalid(format!("cell size {cell_size} must be positive"));
        }
        if width < 3 || height < 3 {
            return invalid(format!("grid {width}x{height} too small"));
        }
        if cells.len() != width * height {
            return invalid("cell count does not match dimensions".into());
        }
        let mut world = Self {
            cell_size,
            width,
            height,
            cells,
            rooms,
            objects,
            start,
            target_category: target_category.into(),
            room_index: Vec::new(),
        };
        for x in 0..width as i32 {
            for y in [0, height as i32 - 1] {
                if world.is_free(Cell::new(x, y)) {
                    return invalid(format!("boundary cell {} is not a wall", Cell::new(x, y)));
                }
            }
        }
        for y in 0..height as i32 {
            for x in [0, width as i32 - 1] {
                if world.is_free(Cell::new(x, y)) {
                    return invalid(format!("boundary cell {} is not a wall", Cell::new(x, y)));
                }
            }
        }

        let mut room_index = vec![None; width * height];
        let mut seen_ids = BTreeMap::new();
        for (ri, room) in world.rooms.iter().enumerate() {
            if room.room_type.trim().is_empty() {
                return invalid(format!("room {} has an empty type", room.id));
            }
            if seen_ids.insert(room.id, ri).is_some() {
                return invalid(format!("duplicate room id {}", room.id));
            }
            if room.cells.is_empty() {
                return invalid(format!("room {} has no cells", room.id));
            }
            for &c in &room.cells {
                if !world.is_free(c) {
                    return invalid(format!("room {} claims non-free cell {c}", room.id));
                }
                let slot = &mut room_index[world.index(c)];
                if slot.is_some() {
                    return invalid(format!("cell {c} belongs to more than one room"));
                }
                *slot = Some(ri);
            }
            if !cells_connected(&room.cells) {
                return invalid(format!("room {} cells are not 4-connected", room.id));
            }
        }
        for (i, kind) in world.cells.iter().enumerate() {
            if *kind == CellKind::Free && room_index[i].is_none() {
                let c = Cell::new((i % width) as i32, (i / width) as i32);
                return invalid(format!("free cell {c} belongs to no room"));
            }
        }
        for obj in &world.objects {
            if !world.is_free(obj.position) {
                return invalid(format!("object {} on non-free cell", obj.category));
            }
            let ri = room_index[world.index(obj.position)].expect("free cell has a room");
            if world.rooms[ri].id != obj.room_id {
                return invalid(format!(
                    "object {} at {} tagged room {} but lies in room {}",
                    obj.category, obj.position, obj.room_id, world.rooms[ri].id
                ));
            }
        }
        if !world.is_free(start.cell) {
            return invalid(format!("start cell {} is not free", start.cell));
        }
        world.room_index = room_index;
        Ok(world)
    }

    /// Builds a world from row strings. `#` is a wall; every other
    /// character must appear in `legend`, which maps it to a room type.
    /// Rooms get ids in legend order. Objects are `(category, cell)` pairs.
    pub fn from_ascii(
        rows: &[&str],
        legend: &[(char, &str)],
        objects: &[(&str, Cell)],
        start: Pose,
        target_category: &str,
    ) -> Result<Self, WorldError> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut cells = Vec::with_capacity(width * height);
        let mut rooms: Vec<Room> = legend
            .iter()
            .enumerate()
            .map(|(i, (_, ty))| Room {
                id: i as u32,
                room_type: ty.to_string(),
                cells: Vec::new(),
            })
            .collect();
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(WorldError::Format(format!("row {y} has the wrong width")));
            }
            for (x, ch) in row.chars().enumerate() {
                if ch == '#' {
                    cells.push(CellKind::Wall);
                    continue;
                }
                let ri = legend
                    .iter()
                    .position(|(c, _)| *c == ch)
                    .ok_or_else(|| WorldError::Format(format!("character `{ch}` not in legend")))?;
                cells.push(CellKind::Free);
                rooms[ri].cells.push(Cell::new(x as i32, y as i32));
            }
        }
        rooms.retain(|r| !r.cells.is_empty());
        let mut objs = Vec::new();
        for &(category, position) in objects {
            let room_id = rooms
                .iter()
                .find(|r| r.cells.contains(&position))
                .map(|r| r.id)
                .ok_or_else(|| WorldError::InvalidWorld(format!("object {category} at {position} is not in a room")))?;
            objs.push(ObjectInstance {
                category: category.to_string(),
                position,
                room_id,
            });
        }
        Self::new(DEFAULT_CELL_SIZE, width, height, cells, rooms, objs, start, target_category)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rooms(&self) -> &[Room] {
        &self.rooms
    }

    pub fn objects(&self) -> &[ObjectInstance] {
        &self.objects
    }

    pub fn start(&self) -> Pose {
        self.start
    }

    pub fn target_category(&self) -> &str {
        &self.target_category
    }

    /// Same world with a different start pose.
    pub fn with_start(&self, start: Pose) -> Result<Self, WorldError> {
        if !self.is_free(start.cell) {
            return Err(WorldError::InvalidPose(format!("start cell {} is not free", start.cell)));
        }
        let mut w = self.clone();
        w.start = start;
        Ok(w)
    }

    pub fn with_target(&self, category: impl Into<String>) -> Self {
        let mut w = self.clone();
        w.target_category = category.into();
        w
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    fn index(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    pub fn kind(&self, c: Cell) -> CellKind {
        if self.in_bounds(c) {
            self.cells[self.index(c)]
        } else {
            CellKind::Wall
        }
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.kind(c) == CellKind::Free
    }

    /// True when no wall lies strictly between `from` and `to` on the
    /// Bresenham line joining them.
    pub fn line_of_sight(&self, from: Cell, to: Cell) -> bool {
        clear_line(from, to, |c| self.kind(c) == CellKind::Wall)
    }

    pub fn room_at(&self, c: Cell) -> Option<&Room> {
        if !self.in_bounds(c) {
            return None;
        }
        self.room_index[self.index(c)].map(|ri| &self.rooms[ri])
    }

    pub fn room_by_id(&self, id: u32) -> Option<&Room> {
        self.rooms.iter().find(|r| r.id == id)
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height as i32)
            .flat_map(move |y| (0..self.width as i32).map(move |x| Cell::new(x, y)))
            .filter(move |&c| self.is_free(c))
    }

    pub fn instances_of<'a>(&'a self, category: &'a str) -> impl Iterator<Item = (usize, &'a ObjectInstance)> + 'a {
        self.objects
            .iter()
            .enumerate()
            .filter(move |(_, o)| o.category == category)
    }

    pub fn validate_pose(&self, pose: &Pose) -> Result<(), WorldError> {
        if !self.in_bounds(pose.cell) {
            return Err(WorldError::InvalidPose(format!("cell {} is off the grid", pose.cell)));
        }
        if !self.is_free(pose.cell) {
            return Err(WorldError::InvalidPose(format!("cell {} is a wall", pose.cell)));
        }
        Ok(())
    }

    /// Applies one action. Pure: the world is not modified.
    pub fn step(&self, pose: Pose, action: Action) -> Result<(Pose, StepOutcome), WorldError> {
        self.validate_pose(&pose)?;
        let mut next = pose;
        let mut outcome = StepOutcome::default();
        match action {
            Action::Stop => outcome.stopped = true,
            Action::MoveAhead => {
                let (dx, dy) = pose.heading.stride();
                let dest = pose.cell.offset(dx, dy);
                if self.is_free(dest) {
                    next.cell = dest;
                    outcome.moved = true;
                } else {
                    outcome.blocked = true;
                }
            }
            Action::TurnLeft => next.heading = pose.heading.left(),
            Action::TurnRight => next.heading = pose.heading.right(),
            Action::LookUp => next.pitch = pose.pitch.up(),
            Action::LookDown => next.pitch = pose.pitch.down(),
        }
        Ok((next, outcome))
    }

    /// Geodesic (4-connected) distance field from a set of source cells.
    pub fn distance_field(&self, sources: &[Cell]) -> DistanceField {
        DistanceField::compute(self, sources)
    }

    /// Shortest 4-connected path length between two free cells, in meters.
    pub fn shortest_path_length(&self, a: Cell, b: Cell) -> Result<f64, WorldError> {
        for c in [a, b] {
            if !self.is_free(c) {
                return Err(WorldError::InvalidPose(format!("cell {c} is not free")));
            }
        }
        match self.distance_field(&[a]).hops(b) {
            Some(h) => Ok(h as f64 * self.cell_size),
            None => Err(WorldError::Unreachable(a, b)),
        }
    }

    /// Distance field seeded at every instance of `category`.
    pub fn target_field(&self, category: &str) -> Result<DistanceField, WorldError> {
        let sources: Vec<Cell> = self.instances_of(category).map(|(_, o)| o.position).collect();
        if sources.is_empty() {
            return Err(WorldError::NoSuchCategory(category.to_string()));
        }
        Ok(self.distance_field(&sources))
    }

    /// Geodesic distance from `pose` to the nearest instance of `category`.
    pub fn distance_to_nearest_target(&self, pose: &Pose, category: &str) -> Result<f64, WorldError> {
        self.validate_pose(pose)?;
        let field = self.target_field(category)?;
        match field.hops(pose.cell) {
            Some(h) => Ok(h as f64 * self.cell_size),
            None => {
                let first = self.instances_of(category).next().expect("non-empty").1.position;
                Err(WorldError::Unreachable(pose.cell, first))
            }
        }
    }
}

pub(crate) fn cells_connected(cells: &[Cell]) -> bool {
    let Some(&first) = cells.first() else {
        return true;
    };
    let set: std::collections::HashSet<Cell> = cells.iter().copied().collect();
    let mut seen = std::collections::HashSet::from([first]);
    let mut queue = VecDeque::from([first]);
    while let Some(c) = queue.pop_front() {
        for n in c.neighbours() {
            if set.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == set.len()
}

/// Bresenham walk between two cells, endpoints excluded. The walk always
/// starts from the smaller endpoint so visibility is symmetric.
pub(crate) fn clear_line(from: Cell, to: Cell, is_wall: impl Fn(Cell) -> bool) -> bool {
    let (from, to) = if from <= to { (from, to) } else { (to, from) };
    let (mut x, mut y) = (from.x, from.y);
    let dx = (to.x - from.x).abs();
    let dy = -(to.y - from.y).abs();
    let sx = if from.x < to.x { 1 } else { -1 };
    let sy = if from.y < to.y { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x == to.x && y == to.y {
            return true;
        }
        if (x, y) != (from.x, from.y) && is_wall(Cell::new(x, y)) {
            return false;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}
