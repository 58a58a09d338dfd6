//! Procedural multi-room floor plans.
//!
//! The interior is partitioned by repeated axis-aligned splits into
//! rectangular rooms that share one-cell walls. Doorways are cut along a
//! random spanning tree of the room adjacency graph (plus optional extra
//! doors), so every free cell is reachable. Objects are drawn per room from
//! the prior table.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Cell, CellKind, GridWorld, Heading, ObjectInstance, Pose, Room, WorldError, DEFAULT_CELL_SIZE};
use crate::priors::PriorTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    pub width: usize,
    pub height: usize,
    pub rooms: usize,
    /// Minimum interior side of a room, in cells.
    pub min_room_side: usize,
    pub door_width: usize,
    /// Doors added beyond the spanning tree.
    pub extra_doors: usize,
    pub target: String,
    /// Start in the room type with the highest prior for the target, which
    /// holds the type's companion objects but no target; the target goes to
    /// a neighbouring room, out of sight of the start room.
    pub deceptive: bool,
    /// Room types to draw from; empty means every type in the prior table.
    pub room_types: Vec<String>,
    pub min_objects: usize,
    pub max_objects: usize,
    /// Lower bound on the start-to-target geodesic, meters.
    pub min_start_distance: f64,
    pub cell_size: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            width: 32,
            height: 24,
            rooms: 5,
            min_room_side: 5,
            door_width: 2,
            extra_doors: 1,
            target: "sofa".into(),
            deceptive: false,
            room_types: Vec::new(),
            min_objects: 2,
            max_objects: 5,
            min_start_distance: 2.0,
            cell_size: DEFAULT_CELL_SIZE,
        }
    }
}

/// Rectangle in wall-line coordinates: the border rows/columns are walls,
/// the interior is `x0+1..x1`, `y0+1..y1`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
}

impl Rect {
    fn inner_w(&self) -> i32 {
        self.x1 - self.x0 - 1
    }

    fn inner_h(&self) -> i32 {
        self.y1 - self.y0 - 1
    }

    fn interior(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.y0 + 1..self.y1).flat_map(move |y| (self.x0 + 1..self.x1).map(move |x| Cell::new(x, y)))
    }
}

#[derive(Debug, Clone)]
struct Door {
    a: usize,
    b: usize,
    cells: Vec<Cell>,
}

fn split(rect: Rect, min: i32, rng: &mut ChaCha8Rng) -> Option<(Rect, Rect)> {
    let can_x = rect.inner_w() > 2 * min;
    let can_y = rect.inner_h() > 2 * min;
    let vertical = match (can_x, can_y) {
        (false, false) => return None,
        (true, false) => true,
        (false, true) => false,
        (true, true) => {
            if rect.inner_w() == rect.inner_h() {
                rng.gen_bool(0.5)
            } else {
                rect.inner_w() > rect.inner_h()
            }
        }
    };
    if vertical {
        let s = rng.gen_range(rect.x0 + min + 1..=rect.x1 - min - 1);
        Some((Rect { x1: s, ..rect }, Rect { x0: s, ..rect }))
    } else {
        let s = rng.gen_range(rect.y0 + min + 1..=rect.y1 - min - 1);
        Some((Rect { y1: s, ..rect }, Rect { y0: s, ..rect }))
    }
}

fn partition(params: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<Vec<Rect>, WorldError> {
    let min = params.min_room_side as i32;
    let mut rects = vec![Rect {
        x0: 0,
        y0: 0,
        x1: params.width as i32 - 1,
        y1: params.height as i32 - 1,
    }];
    if rects[0].inner_w() < min || rects[0].inner_h() < min {
        return Err(WorldError::Infeasible(format!(
            "{}x{} grid cannot hold a {min}-cell room",
            params.width, params.height
        )));
    }
    while rects.len() < params.rooms {
        let mut order: Vec<usize> = (0..rects.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse((rects[i].inner_w() * rects[i].inner_h(), std::cmp::Reverse(i))));
        let mut done = false;
        for i in order {
            if let Some((a, b)) = split(rects[i], min, rng) {
                rects[i] = a;
                rects.push(b);
                done = true;
                break;
            }
        }
        if !done {
            return Err(WorldError::Infeasible(format!(
                "{} rooms of side {min} do not fit in {}x{}",
                params.rooms, params.width, params.height
            )));
        }
    }
    Ok(rects)
}

/// Candidate doorway spans between every pair of rooms sharing a wall.
fn adjacency(rects: &[Rect], door_width: i32) -> Vec<(usize, usize, bool, i32, i32, i32)> {
    let mut out = Vec::new();
    for a in 0..rects.len() {
        for b in a + 1..rects.len() {
            let (ra, rb) = (rects[a], rects[b]);
            // Shared vertical wall line.
            for (line, touching) in [(ra.x1, ra.x1 == rb.x0), (ra.x0, ra.x0 == rb.x1)] {
                if touching {
                    let lo = ra.y0.max(rb.y0) + 1;
                    let hi = ra.y1.min(rb.y1) - 1;
                    if hi - lo + 1 >= door_width {
                        out.push((a, b, true, line, lo, hi));
                    }
                }
            }
            for (line, touching) in [(ra.y1, ra.y1 == rb.y0), (ra.y0, ra.y0 == rb.y1)] {
                if touching {
                    let lo = ra.x0.max(rb.x0) + 1;
                    let hi = ra.x1.min(rb.x1) - 1;
                    if hi - lo + 1 >= door_width {
                        out.push((a, b, false, line, lo, hi));
                    }
                }
            }
        }
    }
    out
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut i = i;
    while parent[i] != r {
        let next = parent[i];
        parent[i] = r;
        i = next;
    }
    r
}

fn doors(rects: &[Rect], params: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<Vec<Door>, WorldError> {
    let width = params.door_width.max(1) as i32;
    let mut edges = adjacency(rects, width);
    edges.shuffle(rng);
    let mut parent: Vec<usize> = (0..rects.len()).collect();
    let mut chosen = Vec::new();
    let mut spare = Vec::new();
    for e in edges {
        let (ra, rb) = (find(&mut parent, e.0), find(&mut parent, e.1));
        if ra != rb {
            parent[ra] = rb;
            chosen.push(e);
        } else {
            spare.push(e);
        }
    }
    let root = find(&mut parent, 0);
    if (0..rects.len()).any(|i| find(&mut parent, i) != root) {
        return Err(WorldError::Infeasible("rooms cannot be connected with the requested door width".into()));
    }
    let mut used: BTreeSet<(usize, usize)> = chosen.iter().map(|e| (e.0, e.1)).collect();
    for e in spare {
        if chosen.len() >= rects.len() - 1 + params.extra_doors {
            break;
        }
        if used.insert((e.0, e.1)) {
            chosen.push(e);
        }
    }
    Ok(chosen
        .into_iter()
        .map(|(a, b, vertical, line, lo, hi)| {
            let start = rng.gen_range(lo..=hi - width + 1);
            let cells = (start..start + width)
                .map(|t| if vertical { Cell::new(line, t) } else { Cell::new(t, line) })
                .collect();
            Door { a, b, cells }
        })
        .collect())
}

fn room_graph_hops(n: usize, doors: &[Door], from: usize) -> Vec<usize> {
    let mut hops = vec![usize::MAX; n];
    hops[from] = 0;
    let mut q = VecDeque::from([from]);
    while let Some(r) = q.pop_front() {
        for d in doors {
            let other = if d.a == r {
                d.b
            } else if d.b == r {
                d.a
            } else {
                continue;
            };
            if hops[other] == usize::MAX {
                hops[other] = hops[r] + 1;
                q.push_back(other);
            }
        }
    }
    hops
}

/// Cells of `candidates` with no clear line from any of `viewers`.
fn hidden_from(viewers: &[Cell], candidates: &[Cell], cells: &[CellKind], width: usize) -> Vec<Cell> {
    let height = (cells.len() / width) as i32;
    let is_wall = |c: Cell| {
        c.x < 0 || c.y < 0 || c.x >= width as i32 || c.y >= height || cells[c.y as usize * width + c.x as usize] == CellKind::Wall
    };
    candidates
        .iter()
        .copied()
        .filter(|&c| viewers.iter().all(|&s| !super::clear_line(s, c, is_wall)))
        .collect()
}

/// Builds a world deterministically from `(seed, params)` using the shipped
/// prior table.
pub fn generate_world(seed: u64, params: &GeneratorParams) -> Result<GridWorld, WorldError> {
    generate_world_with(seed, params, &PriorTable::default())
}

pub fn generate_world_with(seed: u64, params: &GeneratorParams, priors: &PriorTable) -> Result<GridWorld, WorldError> {
    if params.rooms == 0 {
        return Err(WorldError::Infeasible("room count must be at least 1".into()));
    }
    if params.min_room_side < 2 {
        return Err(WorldError::Infeasible("rooms need an interior side of at least 2".into()));
    }
    if params.max_objects < params.min_objects {
        return Err(WorldError::Infeasible("max_objects < min_objects".into()));
    }
    if params.deceptive && params.rooms < 2 {
        return Err(WorldError::Infeasible("a deceptive layout needs at least 2 rooms".into()));
    }
    if params.width > 512 || params.height > 512 {
        return Err(WorldError::Infeasible("grid larger than 512x512".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rects = partition(params, &mut rng)?;
    let doors = doors(&rects, params, &mut rng)?;

    let (w, h) = (params.width, params.height);
    let mut cells = vec![CellKind::Wall; w * h];
    let mut room_cells: Vec<Vec<Cell>> = rects.iter().map(|r| r.interior().collect()).collect();
    for c in room_cells.iter().flatten() {
        cells[c.y as usize * w + c.x as usize] = CellKind::Free;
    }
    let mut door_cells = BTreeSet::new();
    for d in &doors {
        for &c in &d.cells {
            cells[c.y as usize * w + c.x as usize] = CellKind::Free;
            room_cells[d.a.min(d.b)].push(c);
            door_cells.insert(c);
        }
    }

    let palette: Vec<String> = if params.room_types.is_empty() {
        priors.room_types().into_iter().map(String::from).collect()
    } else {
        params.room_types.clone()
    };
    if palette.is_empty() {
        return Err(WorldError::Infeasible("no room types available".into()));
    }
    let n = rects.len();
    let target = params.target.as_str();

    let mut types: Vec<String> = Vec::with_capacity(n);
    let start_room;
    let target_room;
    if params.deceptive {
        let ranked = priors.rooms_for(target);
        let lure = ranked[0].0.to_string();
        let hidden = ranked
            .iter()
            .find(|(r, _)| *r != lure)
            .map(|(r, _)| r.to_string())
            .unwrap_or_else(|| lure.clone());
        start_room = rng.gen_range(0..n);
        let hops = room_graph_hops(n, &doors, start_room);
        let neighbours: Vec<usize> = (0..n).filter(|&r| hops[r] == 1).collect();
        let concealed: Vec<usize> = neighbours
            .iter()
            .copied()
            .filter(|&r| !hidden_from(&room_cells[start_room], &rects[r].interior().collect::<Vec<_>>(), &cells, w).is_empty())
            .collect();
        let candidates = if concealed.is_empty() { &neighbours } else { &concealed };
        target_room = *candidates.choose(&mut rng).expect("non-empty");
        let others: Vec<&String> = palette.iter().filter(|t| **t != lure && **t != hidden).collect();
        for r in 0..n {
            types.push(if r == start_room {
                lure.clone()
            } else if r == target_room || others.is_empty() {
                hidden.clone()
            } else {
                (*others.choose(&mut rng).expect("non-empty")).clone()
            });
        }
    } else {
        for _ in 0..n {
            types.push(palette.choose(&mut rng).expect("non-empty").clone());
        }
        // Target room drawn in proportion to each room's prior for the target.
        let weights: Vec<f64> = types.iter().map(|t| priors.prior(t, target) + 0.02).collect();
        let total: f64 = weights.iter().sum();
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = n - 1;
        for (i, wgt) in weights.iter().enumerate() {
            if pick < *wgt {
                chosen = i;
                break;
            }
            pick -= wgt;
        }
        target_room = chosen;
        start_room = usize::MAX;
    }

    let mut objects: Vec<(String, Cell, usize)> = Vec::new();
    let mut occupied = door_cells.clone();
    // In a deceptive layout the lure room's furniture sits in the half of
    // the room away from the doorway that leads to the target.
    let exit: Vec<Cell> = if params.deceptive {
        doors
            .iter()
            .filter(|d| (d.a, d.b) == (start_room, target_room) || (d.b, d.a) == (start_room, target_room))
            .flat_map(|d| d.cells.iter().copied())
            .collect()
    } else {
        Vec::new()
    };
    let far_side: BTreeSet<Cell> = if exit.is_empty() {
        BTreeSet::new()
    } else {
        let gap = |c: &Cell| exit.iter().map(|e| (e.x - c.x).abs() + (e.y - c.y).abs()).min().unwrap_or(0);
        let mut by_gap: Vec<Cell> = rects[start_room].interior().collect();
        by_gap.sort_by_key(|c| std::cmp::Reverse(gap(c)));
        by_gap.truncate(by_gap.len().div_ceil(2));
        by_gap.into_iter().collect()
    };
    let mut place = |cat: &str, room: usize, rng: &mut ChaCha8Rng, occupied: &mut BTreeSet<Cell>| -> bool {
        let free: Vec<Cell> = rects[room]
            .interior()
            .filter(|c| !occupied.contains(c) && (room != start_room || far_side.is_empty() || far_side.contains(c)))
            .collect();
        match free.choose(rng) {
            Some(&c) => {
                occupied.insert(c);
                objects.push((cat.to_string(), c, room));
                true
            }
            None => false,
        }
    };
    for room in 0..n {
        let pal: Vec<(&str, f64)> = priors
            .palette(&types[room])
            .into_iter()
            .filter(|(c, _)| *c != target)
            .collect();
        let mut picked: Vec<&str> = Vec::new();
        if params.deceptive && room == start_room {
            // Companion objects that make the lure room look right.
            picked.extend(pal.iter().take(2).map(|(c, _)| *c));
        }
        for (cat, p) in &pal {
            if picked.len() >= params.max_objects {
                break;
            }
            if !picked.contains(cat) && rng.gen_bool(*p) {
                picked.push(cat);
            }
        }
        for (cat, _) in &pal {
            if picked.len() >= params.min_objects {
                break;
            }
            if !picked.contains(cat) {
                picked.push(cat);
            }
        }
        for cat in picked {
            place(cat, room, &mut rng, &mut occupied);
        }
    }
    let placed = if params.deceptive {
        // Prefer cells that no start-room cell, doorways included, can see.
        let free: Vec<Cell> = rects[target_room].interior().filter(|c| !occupied.contains(c)).collect();
        let hidden = hidden_from(&room_cells[start_room], &free, &cells, w);
        match (if hidden.is_empty() { &free } else { &hidden }).choose(&mut rng) {
            Some(&c) => {
                occupied.insert(c);
                objects.push((target.to_string(), c, target_room));
                true
            }
            None => false,
        }
    } else {
        place(target, target_room, &mut rng, &mut occupied)
    };
    if !placed {
        return Err(WorldError::Infeasible("no free cell left for the target".into()));
    }
    let target_cell = objects.last().expect("just placed").1;

    let rooms: Vec<Room> = types
        .iter()
        .zip(room_cells)
        .enumerate()
        .map(|(i, (t, mut cells))| {
            cells.sort_by_key(|c| (c.y, c.x));
            Room {
                id: i as u32,
                room_type: t.clone(),
                cells,
            }
        })
        .collect();
    let objects: Vec<ObjectInstance> = objects
        .into_iter()
        .map(|(category, position, room)| ObjectInstance {
            category,
            position,
            room_id: room as u32,
        })
        .collect();

    let heading = Heading::wrapping(30 * rng.gen_range(0..12));
    let placeholder = Pose::new(target_cell, heading);
    let mut world = GridWorld::new(params.cell_size, w, h, cells, rooms, objects, placeholder, target)?;

    let field = world.target_field(target)?;
    let object_cells: BTreeSet<Cell> = world.objects().iter().map(|o| o.position).collect();
    let far_enough = |c: &Cell| {
        !object_cells.contains(c)
            && !door_cells.contains(c)
            && field
                .meters(*c, params.cell_size)
                .is_some_and(|d| d >= params.min_start_distance)
    };
    let candidates: Vec<Cell> = if params.deceptive {
        rects[start_room].interior().filter(|c| far_enough(c)).collect()
    } else {
        let away: Vec<Cell> = (0..n)
            .filter(|&r| r != target_room)
            .flat_map(|r| rects[r].interior())
            .filter(|c| far_enough(c))
            .collect();
        if away.is_empty() {
            world.free_cells().filter(|c| far_enough(c)).collect()
        } else {
            away
        }
    };
    let start = *candidates
        .choose(&mut rng)
        .ok_or_else(|| WorldError::Infeasible("no start cell satisfies the distance bound".into()))?;
    world = world.with_start(Pose::new(start, heading))?;
    Ok(world)
}
