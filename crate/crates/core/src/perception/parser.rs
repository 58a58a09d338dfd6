use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{parse_spatial_relations, DirectionalView, PerceptionConfig, PerceptionError, ScaffoldGrid, SpatialRelationGraph, VisibleEntity, SECTORS};
use crate::priors::{PriorTable, UNKNOWN_ROOM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDescription {
    pub sector: u8,
    pub entities: Vec<VisibleEntity>,
    pub relations: SpatialRelationGraph,
    pub room_type_guess: String,
    pub target_likelihood: f64,
    pub richness: f64,
    pub text: String,
}

impl LocalDescription {
    pub fn categories(&self) -> BTreeSet<&str> {
        self.entities.iter().map(|e| e.category.as_str()).collect()
    }

    pub fn sees(&self, category: &str) -> bool {
        self.entities.iter().any(|e| e.category == category)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSummary {
    pub timestep: u32,
    pub room_type: String,
    pub inventory: BTreeSet<String>,
    pub text: String,
}

/// Seam between the ground-truth parser and model-backed parsers.
pub trait ParserBackend {
    fn parse_local(
        &mut self,
        view: &DirectionalView,
        scaffold: &ScaffoldGrid,
        target: &str,
    ) -> Result<LocalDescription, PerceptionError>;

    /// `locals` holds one slot per sector; absent sectors are `None`.
    fn summarize(&mut self, timestep: u32, locals: &[Option<LocalDescription>]) -> Result<GlobalSummary, PerceptionError>;
}

fn side(bearing: f64) -> &'static str {
    if bearing < -10.0 {
        "left"
    } else if bearing > 10.0 {
        "right"
    } else {
        "ahead"
    }
}

/// Renders the prose form of a local description.
pub fn render_local_text(
    view: &DirectionalView,
    relations: &SpatialRelationGraph,
    room: &str,
    target: &str,
    likelihood: f64,
    richness: f64,
) -> String {
    let mut s = format!("Direction {} looks like a {}.", view.sector, room.replace('_', " "));
    if view.entities.is_empty() {
        s.push_str(" No objects visible.");
    } else {
        let items: Vec<String> = view
            .entities
            .iter()
            .map(|e| format!("{} {:.1} m {}", e.category, e.range, side(e.bearing)))
            .collect();
        let _ = write!(s, " Objects: {}.", items.join(", "));
        if !relations.edges.is_empty() {
            let rels: Vec<String> = relations
                .edges
                .iter()
                .map(|e| format!("{} {} {}", relations.nodes[e.a], e.kind.phrase(), relations.nodes[e.b]))
                .collect();
            let _ = write!(s, " Relations: {}.", rels.join("; "));
        }
    }
    match view.wall_distance_ahead {
        Some(d) => {
            let _ = write!(s, " Wall ahead at {d:.1} m.");
        }
        None => s.push_str(" Open ahead."),
    }
    let _ = write!(s, " Likelihood of {target}: {likelihood:.2}. Richness: {richness:.2}.");
    s
}

/// Plain listing of what a view contains, without interpretation.
pub fn render_observation(view: &DirectionalView, scaffold: &ScaffoldGrid) -> String {
    let mut s = String::new();
    if view.entities.is_empty() {
        s.push_str("No objects detected.");
    }
    for (i, e) in view.entities.iter().enumerate() {
        let anchor = scaffold.anchor(i).map(|a| format!(" anchor ({}, {})", a.row, a.col)).unwrap_or_default();
        let _ = write!(s, "{}{} at {:.2} m, bearing {:+.0} deg{anchor}.", if i == 0 { "" } else { " " }, e.category, e.range, e.bearing);
    }
    match view.wall_distance_ahead {
        Some(d) => {
            let _ = write!(s, " Wall ahead at {d:.2} m.");
        }
        None => s.push_str(" Open ahead."),
    }
    if !view.room_cells.is_empty() {
        let floors: Vec<String> = view.room_cells.iter().map(|(k, n)| format!("{k} {n}")).collect();
        let _ = write!(s, " Visible floor by area type: {}.", floors.join(", "));
    }
    s
}

pub fn render_global_text(room: &str, inventory: &BTreeSet<String>) -> String {
    let objects = if inventory.is_empty() {
        "nothing notable".to_string()
    } else {
        inventory.iter().cloned().collect::<Vec<_>>().join(", ")
    };
    format!("The surroundings look like a {}. Objects around: {objects}.", room.replace('_', " "))
}

/// Majority label with lexicographic tie-break.
pub(crate) fn majority<'a>(votes: impl IntoIterator<Item = (&'a str, u32)>) -> Option<&'a str> {
    let mut tally: BTreeMap<&str, u32> = BTreeMap::new();
    for (label, n) in votes {
        *tally.entry(label).or_insert(0) += n;
    }
    let mut best: Option<(&str, u32)> = None;
    for (label, n) in tally {
        if n > 0 && best.is_none_or(|(_, b)| n > b) {
            best = Some((label, n));
        }
    }
    best.map(|(l, _)| l)
}

/// Global summary from sector descriptions: union inventory, majority room
/// type over sector guesses (ties go to the lexicographically smallest;
/// `unknown` only when no sector has a guess).
pub fn summarize_global(timestep: u32, locals: &[Option<LocalDescription>]) -> Result<GlobalSummary, PerceptionError> {
    if locals.len() != SECTORS {
        return Err(PerceptionError::Arity {
            expected: SECTORS,
            got: locals.len(),
        });
    }
    let present = || locals.iter().flatten();
    let inventory: BTreeSet<String> = present().flat_map(|ld| ld.entities.iter().map(|e| e.category.clone())).collect();
    let room_type = majority(
        present()
            .filter(|ld| ld.room_type_guess != UNKNOWN_ROOM)
            .map(|ld| (ld.room_type_guess.as_str(), 1)),
    )
    .unwrap_or(UNKNOWN_ROOM)
    .to_string();
    let text = render_global_text(&room_type, &inventory);
    Ok(GlobalSummary {
        timestep,
        room_type,
        inventory,
        text,
    })
}

/// Ground-truth parser: reads the symbolic view directly.
#[derive(Debug, Clone)]
pub struct OracleParser {
    priors: Arc<PriorTable>,
    cfg: PerceptionConfig,
}

impl OracleParser {
    pub fn new(priors: Arc<PriorTable>, cfg: PerceptionConfig) -> Self {
        Self { priors, cfg }
    }

    pub fn describe(&self, view: &DirectionalView, scaffold: &ScaffoldGrid, target: &str) -> LocalDescription {
        let relations = parse_spatial_relations(view, scaffold);
        let room = majority(view.room_cells.iter().map(|(k, &v)| (k.as_str(), v)))
            .unwrap_or(UNKNOWN_ROOM)
            .to_string();
        let target_likelihood = if view.entities.iter().any(|e| e.category == target) {
            1.0
        } else {
            self.priors.prior(&room, target)
        };
        let richness = (view.entities.len() as f64 / self.cfg.richness_cap as f64).min(1.0);
        let text = render_local_text(view, &relations, &room, target, target_likelihood, richness);
        LocalDescription {
            sector: view.sector,
            entities: view.entities.clone(),
            relations,
            room_type_guess: room,
            target_likelihood,
            richness,
            text,
        }
    }
}

impl ParserBackend for OracleParser {
    fn parse_local(
        &mut self,
        view: &DirectionalView,
        scaffold: &ScaffoldGrid,
        target: &str,
    ) -> Result<LocalDescription, PerceptionError> {
        Ok(self.describe(view, scaffold, target))
    }

    fn summarize(&mut self, timestep: u32, locals: &[Option<LocalDescription>]) -> Result<GlobalSummary, PerceptionError> {
        summarize_global(timestep, locals)
    }
}
