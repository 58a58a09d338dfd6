#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use panonav_core::llm_client::{ChatRequest, RequestTemplate, Role, ScriptedTransport};
use panonav_core::perception::{GlobalSummary, LocalDescription, SpatialRelationGraph, VisibleEntity};
use panonav_core::world::{Cell, CellKind, GridWorld, Heading, ObjectInstance, Pose, Room};
use rand::seq::SliceRandom;
use rand::Rng;

pub const ROOMS: [&str; 7] = ["living_room", "kitchen", "dining_room", "bedroom", "bathroom", "hallway", "office"];
pub const CATEGORIES: [&str; 10] = ["sofa", "tv", "table", "chair", "lamp", "plant", "bed", "sink", "desk", "cabinet"];

pub fn template() -> RequestTemplate {
    RequestTemplate {
        endpoint: "http://fake.invalid/v1/chat/completions".into(),
        model: "fake-llm".into(),
        temperature: 0.0,
        timeout_secs: 5.0,
    }
}

fn value_after(text: &str, key: &str) -> Option<f64> {
    let rest = &text[text.find(key)? + key.len()..];
    let num: String = rest.trim_start().chars().take_while(|c| c.is_ascii_digit() || *c == '.').collect();
    num.trim_end_matches('.').parse().ok()
}

fn direction_lines(text: &str) -> Vec<(u8, &str)> {
    text.lines()
        .filter_map(|l| {
            let rest = l.strip_prefix("- Direction ")?;
            let (n, body) = rest.split_once(':')?;
            Some((n.trim().parse().ok()?, body.trim()))
        })
        .collect()
}

/// A deterministic stand-in for a chat model that understands the shipped
/// prompt templates well enough to give sensible answers.
pub fn fake_reply(user: &str) -> String {
    let target = user
        .lines()
        .find_map(|l| l.strip_prefix("Target object: "))
        .unwrap_or("")
        .trim()
        .to_string();

    if user.contains("Directional descriptions:") || user.contains("Raw observations:") {
        let decoupled = user.contains("Directional descriptions:");
        let history: Vec<&str> = user
            .split("Exploration history (oldest first):")
            .nth(1)
            .map(|h| {
                h.lines()
                    .filter(|l| l.split_once(". ").is_some_and(|(n, _)| n.parse::<u32>().is_ok()))
                    .collect()
            })
            .unwrap_or_default();
        let mut best: Option<(u8, f64, bool)> = None;
        for (sector, body) in direction_lines(user) {
            let (score, found) = if decoupled {
                let like = value_after(body, &format!("Likelihood of {target}:")).unwrap_or(0.0);
                let room = body.split("looks like a ").nth(1).and_then(|r| r.split('.').next()).unwrap_or("");
                let seen_before = !room.is_empty() && history.iter().any(|h| h.contains(room));
                (like - if seen_before { 0.5 } else { 0.0 }, like >= 1.0)
            } else {
                let found = body.contains(&format!("{target} at"));
                let objects = if body.contains("nothing detected") { 0 } else { body.matches(" at ").count() };
                (if found { 10.0 } else { objects as f64 }, found)
            };
            if best.is_none_or(|(_, s, _)| score > s) {
                best = Some((sector, score, found));
            }
        }
        let (sector, _, found) = best.unwrap_or((1, 0.0, false));
        let body = format!(r#"{{"sector": {sector}, "found": {found}, "reason": "best looking direction"}}"#);
        // Exercise the reply ladder: some answers arrive fenced.
        return if sector % 2 == 0 { format!("Here you go:\n```json\n{body}\n```") } else { body };
    }

    if let Some((head, obs)) = user.split_once(" observation:\n") {
        let sector = head.rsplit(' ').next().unwrap_or("1");
        let obs = obs.split("\n\nReply").next().unwrap_or(obs);
        let room = obs
            .split("Visible floor by area type: ")
            .nth(1)
            .and_then(|floors| {
                floors
                    .trim_end_matches('.')
                    .split(", ")
                    .filter_map(|f| {
                        let (name, n) = f.rsplit_once(' ')?;
                        Some((n.trim_end_matches('.').parse::<u32>().ok()?, name.to_string()))
                    })
                    .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
                    .map(|(_, name)| name)
            })
            .unwrap_or_else(|| "unknown".into());
        let objects = obs.matches(" m, bearing").count();
        let like = if !target.is_empty() && obs.contains(&format!("{target} at")) { 1.0 } else { 0.2 };
        let rich = (objects as f64 / 8.0).min(1.0);
        return format!(
            r#"{{"room_type": "{room}", "target_likelihood": {like}, "richness": {rich}, "description": "Direction {sector} looks like a {}. Likelihood of {target}: {like:.2}."}}"#,
            room.replace('_', " ")
        );
    }

    // Summary request.
    let mut counts: Vec<(String, usize)> = Vec::new();
    for part in user.split("looks like a ").skip(1) {
        let room = part.split('.').next().unwrap_or("").trim().replace(' ', "_");
        match counts.iter_mut().find(|(r, _)| *r == room) {
            Some(c) => c.1 += 1,
            None => counts.push((room, 1)),
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let room = counts.first().map(|c| c.0.clone()).unwrap_or_else(|| "unknown".into());
    format!(r#"{{"room_type": "{room}", "summary": "The robot seems to be in a {}."}}"#, room.replace('_', " "))
}

pub fn fake_model(req: &ChatRequest) -> String {
    let user = req.messages.iter().rev().find(|m| m.role == Role::User).map(|m| m.content.as_str()).unwrap_or("");
    fake_reply(user)
}

pub fn fake_transport() -> ScriptedTransport {
    ScriptedTransport::from_fn(|req| Ok(fake_model(req)))
}

/// Minimal HTTP/1.1 server on a loopback port. `handler` gets the request
/// index and body and returns a status and body.
pub struct FakeServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
}

impl FakeServer {
    pub fn start(handler: impl Fn(usize, &str) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    if let Some((k, v)) = line.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            length = v.trim().parse().unwrap_or(0);
                        }
                    }
                }
                let mut body = vec![0u8; length];
                if reader.read_exact(&mut body).is_err() {
                    continue;
                }
                let n = counter.fetch_add(1, Ordering::SeqCst);
                let (status, reply) = handler(n, &String::from_utf8_lossy(&body));
                let head = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                    reply.len()
                );
                let _ = stream.write_all(head.as_bytes());
                let _ = stream.write_all(reply.as_bytes());
            }
        });
        Self { url, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

/// Chat-completions response carrying `text`.
pub fn completion(text: &str) -> String {
    serde_json::json!({
        "choices": [{"index": 0, "message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 11, "completion_tokens": 7}
    })
    .to_string()
}

/// Server that answers every chat request with [`fake_reply`].
pub fn fake_model_server() -> FakeServer {
    FakeServer::start(|_, body| {
        let v: serde_json::Value = serde_json::from_str(body).unwrap_or_default();
        let user = v["messages"]
            .as_array()
            .and_then(|m| m.iter().rev().find(|m| m["role"] == "user"))
            .and_then(|m| m["content"].as_str())
            .unwrap_or("");
        (200, completion(&fake_reply(user)))
    })
}

/// Random walled grid; each connected free region becomes a room.
pub fn random_world(rng: &mut impl Rng, width: usize, height: usize, wall_p: f64, objects: usize) -> GridWorld {
    let mut cells = vec![CellKind::Wall; width * height];
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            if !rng.gen_bool(wall_p) {
                cells[y * width + x] = CellKind::Free;
            }
        }
    }
    // Guarantee at least one free cell.
    cells[width + 1] = CellKind::Free;
    let free = |c: Cell, cells: &[CellKind]| {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < width && (c.y as usize) < height && cells[c.y as usize * width + c.x as usize] == CellKind::Free
    };
    let mut label = vec![usize::MAX; width * height];
    let mut rooms: Vec<Room> = Vec::new();
    for y in 0..height as i32 {
        for x in 0..width as i32 {
            let c = Cell::new(x, y);
            if !free(c, &cells) || label[y as usize * width + x as usize] != usize::MAX {
                continue;
            }
            let id = rooms.len();
            let mut members = Vec::new();
            let mut queue = VecDeque::from([c]);
            label[y as usize * width + x as usize] = id;
            while let Some(p) = queue.pop_front() {
                members.push(p);
                for n in p.neighbours() {
                    if free(n, &cells) && label[n.y as usize * width + n.x as usize] == usize::MAX {
                        label[n.y as usize * width + n.x as usize] = id;
                        queue.push_back(n);
                    }
                }
            }
            rooms.push(Room {
                id: id as u32,
                room_type: ROOMS.choose(rng).unwrap().to_string(),
                cells: members,
            });
        }
    }
    let free_cells: Vec<Cell> = rooms.iter().flat_map(|r| r.cells.iter().copied()).collect();
    let objs: Vec<ObjectInstance> = (0..objects)
        .map(|_| {
            let c = *free_cells.choose(rng).unwrap();
            ObjectInstance {
                category: CATEGORIES.choose(rng).unwrap().to_string(),
                position: c,
                room_id: label[c.y as usize * width + c.x as usize] as u32,
            }
        })
        .collect();
    let target = objs.first().map(|o| o.category.clone()).unwrap_or_else(|| "sofa".into());
    let start = Pose::new(*free_cells.choose(rng).unwrap(), Heading::wrapping(30 * rng.gen_range(0..12)));
    GridWorld::new(0.25, width, height, cells, rooms, objs, start, target).expect("random world is valid")
}

pub fn ld(sector: u8, room: &str, likelihood: f64, richness: f64, cats: &[&str]) -> LocalDescription {
    LocalDescription {
        sector,
        entities: cats
            .iter()
            .enumerate()
            .map(|(i, c)| VisibleEntity {
                category: c.to_string(),
                range: 1.0 + i as f64,
                bearing: 0.0,
                instance: i,
            })
            .collect(),
        relations: SpatialRelationGraph::default(),
        room_type_guess: room.to_string(),
        target_likelihood: likelihood,
        richness,
        text: format!("Direction {sector} looks like a {}. Likelihood of sofa: {likelihood:.2}.", room.replace('_', " ")),
    }
}

pub fn gs(timestep: u32, room: &str, inventory: &[&str]) -> GlobalSummary {
    let inventory: BTreeSet<String> = inventory.iter().map(|s| s.to_string()).collect();
    GlobalSummary {
        timestep,
        room_type: room.to_string(),
        text: format!("A {} with {}.", room.replace('_', " "), inventory.iter().cloned().collect::<Vec<_>>().join(", ")),
        inventory,
    }
}

pub fn random_categories(rng: &mut impl Rng) -> Vec<&'static str> {
    let n = rng.gen_range(0..4);
    let mut cats: Vec<&str> = CATEGORIES.choose_multiple(rng, n).copied().collect();
    cats.sort();
    cats
}

/// Six sector slots, some possibly absent, at least one present.
pub fn random_locals(rng: &mut impl Rng, allow_sighting: bool) -> Vec<Option<LocalDescription>> {
    loop {
        let locals: Vec<Option<LocalDescription>> = (1..=6u8)
            .map(|s| {
                if rng.gen_bool(0.15) {
                    return None;
                }
                let like = if allow_sighting && rng.gen_bool(0.1) {
                    1.0
                } else {
                    [0.05, 0.1, 0.2, 0.3, 0.6, 0.8][rng.gen_range(0..6)]
                };
                let rich = rng.gen_range(0..=8) as f64 / 8.0;
                Some(ld(s, ROOMS.choose(rng).unwrap(), like, rich, &random_categories(rng)))
            })
            .collect();
        if locals.iter().any(Option::is_some) {
            return locals;
        }
    }
}

pub fn random_summary(rng: &mut impl Rng, timestep: u32) -> GlobalSummary {
    let cats = random_categories(rng);
    gs(timestep, ROOMS.choose(rng).unwrap(), &cats)
}
