use serde::{Deserialize, Serialize};

use super::{DirectionalView, PerceptionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Anchor {
    pub row: usize,
    pub col: usize,
}

/// Dot-matrix overlay for one view: a coarse (range, bearing) lattice.
/// Row 0 is the farthest band; column 0 is the leftmost bearing band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaffoldGrid {
    pub rows: usize,
    pub cols: usize,
    /// `anchors[i]` belongs to `view.entities[i]`.
    pub anchors: Vec<Anchor>,
}

impl ScaffoldGrid {
    pub fn anchor(&self, entity: usize) -> Option<Anchor> {
        self.anchors.get(entity).copied()
    }
}

pub fn quantize(range: f64, bearing: f64, cfg: &PerceptionConfig) -> Anchor {
    let (rows, cols) = (cfg.scaffold_rows, cfg.scaffold_cols);
    let band = ((range / cfg.max_range) * rows as f64).floor().max(0.0) as usize;
    let row = rows - 1 - band.min(rows - 1);
    let col = (((bearing + 30.0) / 60.0) * cols as f64).floor().max(0.0) as usize;
    Anchor {
        row,
        col: col.min(cols - 1),
    }
}

pub fn scaffold(view: &DirectionalView, cfg: &PerceptionConfig) -> ScaffoldGrid {
    ScaffoldGrid {
        rows: cfg.scaffold_rows,
        cols: cfg.scaffold_cols,
        anchors: view
            .entities
            .iter()
            .map(|e| quantize(e.range, e.bearing, cfg))
            .collect(),
    }
}
