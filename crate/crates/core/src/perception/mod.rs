//! Panoramic scene parsing.
//!
//! A waypoint observation is six [`DirectionalView`]s. Each view gets a
//! scaffold anchor grid, a spatial relation graph built from range
//! (distance relations) and anchors (planar relations), and a
//! [`LocalDescription`]; the six descriptions reduce to one
//! [`GlobalSummary`].

mod parser;
mod relations;
mod remote;
mod scaffold;
mod view;

pub use parser::{
    render_global_text, render_local_text, render_observation, summarize_global, GlobalSummary, LocalDescription, OracleParser,
    ParserBackend,
};
pub use relations::{parse_spatial_relations, RelationEdge, RelationKind, SpatialRelationGraph};
pub use remote::RemoteParser;
pub use scaffold::{quantize, scaffold, Anchor, ScaffoldGrid};
pub use view::{
    capture_panorama, instance_visible, line_of_sight, locate, sector_center, select_views, DirectionalView,
    ViewMode, VisibleEntity, SECTORS, SECTOR_SPAN,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("expected {expected} sector slots, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("remote parser: {0}")]
    Remote(#[from] crate::llm_client::ClientError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    /// Visibility range in meters.
    pub max_range: f64,
    pub scaffold_rows: usize,
    pub scaffold_cols: usize,
    /// Entity count at which richness saturates.
    pub richness_cap: usize,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self {
            max_range: 5.0,
            scaffold_rows: 6,
            scaffold_cols: 6,
            richness_cap: 8,
        }
    }
}
