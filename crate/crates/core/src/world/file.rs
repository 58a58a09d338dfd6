//! World file: a JSON document with a fixed line layout.
//!
//! ```text
//! {
//!   "version": 1,
//!   "cell_size": 0.25,
//!   "grid": [
//!     "#####",
//!     "#...#",
//!     "#####"
//!   ],
//!   "rooms": [
//!     {"id":0,"type":"hallway","cells":[[1,1],[2,1],[3,1]]}
//!   ],
//!   "objects": [
//!     {"category":"chair","cell":[2,1],"room":0}
//!   ],
//!   "start": {"cell":[1,1],"heading":0},
//!   "target": "chair"
//! }
//! ```
//!
//! Any JSON layout loads; [`save_world`] always emits the layout above, so
//! `save(load(save(w))) == save(w)` byte for byte.

use serde::{Deserialize, Serialize};

use super::{Cell, CellKind, GridWorld, Heading, ObjectInstance, Pose, Room, WorldError};

pub const WORLD_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldFile {
    pub version: u32,
    pub cell_size: f64,
    pub grid: Vec<String>,
    pub rooms: Vec<RoomRecord>,
    pub objects: Vec<ObjectRecord>,
    pub start: StartRecord,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomRecord {
    pub id: u32,
    #[serde(rename = "type")]
    pub room_type: String,
    pub cells: Vec<[i32; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub category: String,
    pub cell: [i32; 2],
    pub room: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub cell: [i32; 2],
    pub heading: u16,
}

impl From<&GridWorld> for WorldFile {
    fn from(w: &GridWorld) -> Self {
        let grid = (0..w.height())
            .map(|y| {
                (0..w.width())
                    .map(|x| match w.kind(Cell::new(x as i32, y as i32)) {
                        CellKind::Wall => '#',
                        CellKind::Free => '.',
                    })
                    .collect()
            })
            .collect();
        Self {
            version: WORLD_FILE_VERSION,
            cell_size: w.cell_size(),
            grid,
            rooms: w
                .rooms()
                .iter()
                .map(|r| RoomRecord {
                    id: r.id,
                    room_type: r.room_type.clone(),
                    cells: r.cells.iter().map(|c| [c.x, c.y]).collect(),
                })
                .collect(),
            objects: w
                .objects()
                .iter()
                .map(|o| ObjectRecord {
                    category: o.category.clone(),
                    cell: [o.position.x, o.position.y],
                    room: o.room_id,
                })
                .collect(),
            start: StartRecord {
                cell: [w.start().cell.x, w.start().cell.y],
                heading: w.start().heading.degrees(),
            },
            target: w.target_category().to_string(),
        }
    }
}

impl TryFrom<WorldFile> for GridWorld {
    type Error = WorldError;

    fn try_from(f: WorldFile) -> Result<Self, Self::Error> {
        if f.version != WORLD_FILE_VERSION {
            return Err(WorldError::Format(format!("unsupported version {}", f.version)));
        }
        let height = f.grid.len();
        let width = f.grid.first().map_or(0, |r| r.len());
        let mut cells = Vec::with_capacity(width * height);
        for (y, row) in f.grid.iter().enumerate() {
            if row.len() != width {
                return Err(WorldError::Format(format!("grid row {y} has length {}", row.len())));
            }
            for ch in row.chars() {
                cells.push(match ch {
                    '#' => CellKind::Wall,
                    '.' => CellKind::Free,
                    other => return Err(WorldError::Format(format!("unknown grid character `{other}`"))),
                });
            }
        }
        let rooms = f
            .rooms
            .into_iter()
            .map(|r| Room {
                id: r.id,
                room_type: r.room_type,
                cells: r.cells.into_iter().map(|[x, y]| Cell::new(x, y)).collect(),
            })
            .collect();
        let objects = f
            .objects
            .into_iter()
            .map(|o| ObjectInstance {
                category: o.category,
                position: Cell::new(o.cell[0], o.cell[1]),
                room_id: o.room,
            })
            .collect();
        let start = Pose::new(Cell::new(f.start.cell[0], f.start.cell[1]), Heading::new(f.start.heading)?);
        GridWorld::new(f.cell_size, width, height, cells, rooms, objects, start, f.target)
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("world records serialize")
}

fn push_list(out: &mut String, key: &str, items: &[String], last: bool) {
    if items.is_empty() {
        out.push_str(&format!("  \"{key}\": []"));
    } else {
        out.push_str(&format!("  \"{key}\": [\n"));
        for (i, item) in items.iter().enumerate() {
            out.push_str("    ");
            out.push_str(item);
            if i + 1 < items.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("  ]");
    }
    out.push_str(if last { "\n" } else { ",\n" });
}

/// Serializes a world in the canonical line layout.
pub fn save_world(world: &GridWorld) -> String {
    let f = WorldFile::from(world);
    let mut out = String::from("{\n");
    out.push_str(&format!("  \"version\": {},\n", f.version));
    out.push_str(&format!("  \"cell_size\": {},\n", json(&f.cell_size)));
    let grid: Vec<String> = f.grid.iter().map(json).collect();
    push_list(&mut out, "grid", &grid, false);
    let rooms: Vec<String> = f.rooms.iter().map(json).collect();
    push_list(&mut out, "rooms", &rooms, false);
    let objects: Vec<String> = f.objects.iter().map(json).collect();
    push_list(&mut out, "objects", &objects, false);
    out.push_str(&format!("  \"start\": {},\n", json(&f.start)));
    out.push_str(&format!("  \"target\": {}\n", json(&f.target)));
    out.push_str("}\n");
    out
}

pub fn load_world(text: &str) -> Result<GridWorld, WorldError> {
    let f: WorldFile = serde_json::from_str(text).map_err(|e| WorldError::Format(e.to_string()))?;
    GridWorld::try_from(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r########"{
  "version": 1,
  "cell_size": 0.25,
  "grid": [
    "#######",
    "#...#.#",
    "#.....#",
    "#######"
  ],
  "rooms": [
    {"id":0,"type":"living_room","cells":[[1,1],[2,1],[3,1],[1,2],[2,2],[3,2]]},
    {"id":1,"type":"hallway","cells":[[5,1],[4,2],[5,2]]}
  ],
  "objects": [
    {"category":"table","cell":[2,1],"room":0},
    {"category":"sofa","cell":[5,1],"room":1}
  ],
  "start": {"cell":[1,2],"heading":90},
  "target": "sofa"
}
"########;

    #[test]
    fn sample_round_trips_bit_exact() {
        let w = load_world(SAMPLE).unwrap();
        assert_eq!(w.rooms().len(), 2);
        assert_eq!(w.start().heading.degrees(), 90);
        assert_eq!(save_world(&w), SAMPLE);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(load_world("{").is_err());
        let bad_version = SAMPLE.replace("\"version\": 1", "\"version\": 7");
        assert!(matches!(load_world(&bad_version), Err(WorldError::Format(_))));
        let bad_char = SAMPLE.replace("#...#.#", "#..X#.#");
        assert!(load_world(&bad_char).is_err());
        let bad_heading = SAMPLE.replace("\"heading\":90", "\"heading\":45");
        assert!(load_world(&bad_heading).is_err());
    }

    #[test]
    fn empty_object_list_layout() {
        let text = SAMPLE
            .replace(
                "  \"objects\": [\n    {\"category\":\"table\",\"cell\":[2,1],\"room\":0},\n    {\"category\":\"sofa\",\"cell\":[5,1],\"room\":1}\n  ],",
                "  \"objects\": [],",
            );
        let w = load_world(&text).unwrap();
        assert!(w.objects().is_empty());
        assert_eq!(save_world(&w), text);
    }
}
