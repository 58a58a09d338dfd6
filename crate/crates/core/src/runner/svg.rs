use std::collections::HashSet;
use std::fmt::Write as _;

use super::{replay_log, RunError, TrajectoryLog};
use crate::world::{Cell, GridWorld};

const PX: i32 = 16;

fn tint(room_type: &str) -> &'static str {
    match room_type {
        "living_room" => "#f6e3b4",
        "kitchen" => "#cfe8cf",
        "dining_room" => "#f3d1c1",
        "bedroom" => "#d6d8f2",
        "bathroom" => "#c9e7ef",
        "hallway" => "#e6e6e6",
        "office" => "#eadcf0",
        _ => "#f2f2f2",
    }
}

fn center(c: Cell) -> (i32, i32) {
    (c.x * PX + PX / 2, c.y * PX + PX / 2)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Number of moves that re-enter a cell the path already visited.
pub fn crossing_count(log: &TrajectoryLog) -> usize {
    let mut seen = HashSet::from([log.header.start.cell]);
    log.steps().filter(|s| s.outcome.moved && !seen.insert(s.pose.cell)).count()
}

/// Top-down plot of `log` over `world`. The log is replayed first, so a
/// log from another world is rejected.
pub fn render_trajectory_svg(world: &GridWorld, log: &TrajectoryLog) -> Result<String, RunError> {
    replay_log(world, log)?;
    let (w, h) = (world.width() as i32 * PX, world.height() as i32 * PX);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#3a3a3a"/>"##);

    s.push_str("<g id=\"rooms\">\n");
    for room in world.rooms() {
        let _ = writeln!(s, r#"<g class="room" data-type="{}" fill="{}">"#, escape(&room.room_type), tint(&room.room_type));
        for c in &room.cells {
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{PX}" height="{PX}"/>"#, c.x * PX, c.y * PX);
        }
        s.push_str("</g>\n");
    }
    s.push_str("</g>\n<g id=\"objects\">\n");
    for o in world.objects() {
        let (x, y) = center(o.position);
        let is_target = o.category == log.header.target;
        let _ = writeln!(
            s,
            r##"<circle cx="{x}" cy="{y}" r="{}" fill="{}" stroke="#222" stroke-width="1"><title>{}</title></circle>"##,
            if is_target { PX / 2 - 1 } else { PX / 3 },
            if is_target { "#d62728" } else { "#7f7f7f" },
            escape(&o.category)
        );
    }
    s.push_str("</g>\n");

    let poses = log.poses();
    let mut cells: Vec<Cell> = Vec::with_capacity(poses.len());
    for p in &poses {
        if cells.last() != Some(&p.cell) {
            cells.push(p.cell);
        }
    }
    if cells.len() > 1 {
        let points: Vec<String> = cells
            .iter()
            .map(|&c| {
                let (x, y) = center(c);
                format!("{x},{y}")
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline id="path" points="{}" fill="none" stroke="#1f77b4" stroke-width="2" stroke-linejoin="round"/>"##,
            points.join(" ")
        );
    }
    s.push_str("<g id=\"waypoints\">\n");
    for wp in log.waypoints() {
        let (x, y) = center(wp.pose.cell);
        let _ = writeln!(s, r##"<circle cx="{x}" cy="{y}" r="2.5" fill="#1f77b4"/>"##);
    }
    s.push_str("</g>\n");

    let (sx, sy) = center(log.header.start.cell);
    let _ = writeln!(s, r##"<circle id="start" cx="{sx}" cy="{sy}" r="5" fill="#2ca02c" stroke="#fff" stroke-width="1"/>"##);
    if let Some(last) = log.steps().last() {
        let (ex, ey) = center(last.pose.cell);
        let d = PX / 3;
        let _ = writeln!(
            s,
            r##"<rect id="end" x="{}" y="{}" width="{}" height="{}" fill="#ff7f0e" stroke="#fff" stroke-width="1"/>"##,
            ex - d,
            ey - d,
            2 * d,
            2 * d
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
