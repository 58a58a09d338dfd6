use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{DirectionalView, ScaffoldGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    CloserThan,
    FartherThan,
    LeftOf,
    RightOf,
    Above,
    Below,
}

impl RelationKind {
    pub fn inverse(self) -> Self {
        match self {
            Self::CloserThan => Self::FartherThan,
            Self::FartherThan => Self::CloserThan,
            Self::LeftOf => Self::RightOf,
            Self::RightOf => Self::LeftOf,
            Self::Above => Self::Below,
            Self::Below => Self::Above,
        }
    }

    pub fn is_geometric(self) -> bool {
        matches!(self, Self::CloserThan | Self::FartherThan)
    }

    pub fn phrase(self) -> &'static str {
        match self {
            Self::CloserThan => "is closer than",
            Self::FartherThan => "is farther than",
            Self::LeftOf => "is left of",
            Self::RightOf => "is right of",
            Self::Above => "is above",
            Self::Below => "is below",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub a: usize,
    pub b: usize,
    pub kind: RelationKind,
    /// Range difference in meters for geometric edges.
    pub magnitude: Option<f64>,
}

/// Entities of one view as nodes; one edge per (pair, relation family),
/// emitted with `a < b`. The inverse relation is implied.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpatialRelationGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<RelationEdge>,
}

impl SpatialRelationGraph {
    /// Whether `kind(a, b)` holds, directly or through the inverse edge.
    pub fn holds(&self, kind: RelationKind, a: usize, b: usize) -> bool {
        self.edges.iter().any(|e| {
            (e.a == a && e.b == b && e.kind == kind) || (e.a == b && e.b == a && e.kind == kind.inverse())
        })
    }

    /// Canonical triples with the lower index first, for comparison.
    pub fn canonical(&self) -> BTreeSet<(usize, usize, RelationKind)> {
        self.edges.iter().map(|e| canonical(e.a, e.b, e.kind)).collect()
    }
}

pub(crate) fn canonical(a: usize, b: usize, kind: RelationKind) -> (usize, usize, RelationKind) {
    if a <= b {
        (a, b, kind)
    } else {
        (b, a, kind.inverse())
    }
}

/// Distance relations from ranges.
fn geometric(view: &DirectionalView) -> Vec<RelationEdge> {
    let mut out = Vec::new();
    let ents = &view.entities;
    for a in 0..ents.len() {
        for b in a + 1..ents.len() {
            let (ra, rb) = (ents[a].range, ents[b].range);
            let kind = if ra < rb {
                RelationKind::CloserThan
            } else if ra > rb {
                RelationKind::FartherThan
            } else {
                continue;
            };
            out.push(RelationEdge {
                a,
                b,
                kind,
                magnitude: Some((rb - ra).abs()),
            });
        }
    }
    out
}

/// Planar relations from scaffold anchors: columns decide left/right; rows
/// decide above/below only within the same column.
fn planar(m: &ScaffoldGrid) -> Vec<RelationEdge> {
    let mut out = Vec::new();
    for a in 0..m.anchors.len() {
        for b in a + 1..m.anchors.len() {
            let (pa, pb) = (m.anchors[a], m.anchors[b]);
            let kind = if pa.col < pb.col {
                RelationKind::LeftOf
            } else if pa.col > pb.col {
                RelationKind::RightOf
            } else if pa.row < pb.row {
                RelationKind::Above
            } else if pa.row > pb.row {
                RelationKind::Below
            } else {
                continue;
            };
            out.push(RelationEdge {
                a,
                b,
                kind,
                magnitude: None,
            });
        }
    }
    out
}

pub fn parse_spatial_relations(view: &DirectionalView, m: &ScaffoldGrid) -> SpatialRelationGraph {
    let mut seen = BTreeSet::new();
    let mut edges: Vec<RelationEdge> = geometric(view)
        .into_iter()
        .chain(planar(m))
        .filter(|e| seen.insert(canonical(e.a, e.b, e.kind)))
        .collect();
    edges.sort_by_key(|e| (e.a, e.b, e.kind.is_geometric() as u8 ^ 1, e.kind));
    SpatialRelationGraph {
        nodes: view.entities.iter().map(|e| e.category.clone()).collect(),
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::{scaffold, PerceptionConfig, VisibleEntity};
    use std::collections::BTreeMap;

    fn view(entities: &[(&str, f64, f64)]) -> DirectionalView {
        DirectionalView {
            sector: 1,
            center_heading: 0,
            entities: entities
                .iter()
                .enumerate()
                .map(|(i, &(c, range, bearing))| VisibleEntity {
                    category: c.into(),
                    range,
                    bearing,
                    instance: i,
                })
                .collect(),
            wall_distance_ahead: None,
            room_cells: BTreeMap::new(),
        }
    }

    #[test]
    fn near_left_pair() {
        let v = view(&[("A", 1.0, -20.0), ("B", 3.0, 10.0)]);
        let g = parse_spatial_relations(&v, &scaffold(&v, &PerceptionConfig::default()));
        let kinds: Vec<_> = g.edges.iter().map(|e| (e.a, e.b, e.kind)).collect();
        assert_eq!(kinds, vec![(0, 1, RelationKind::CloserThan), (0, 1, RelationKind::LeftOf)]);
        assert!(g.holds(RelationKind::FartherThan, 1, 0));
        assert!(g.holds(RelationKind::RightOf, 1, 0));
        assert_eq!(g.edges[0].magnitude, Some(2.0));
    }

    #[test]
    fn single_entity_no_edges() {
        let v = view(&[("A", 1.0, 0.0)]);
        assert!(parse_spatial_relations(&v, &scaffold(&v, &PerceptionConfig::default())).edges.is_empty());
    }

    #[test]
    fn coincident_entities_no_edges() {
        let v = view(&[("A", 2.0, 5.0), ("B", 2.0, 5.0)]);
        assert!(parse_spatial_relations(&v, &scaffold(&v, &PerceptionConfig::default())).edges.is_empty());
    }

    #[test]
    fn same_column_uses_rows() {
        let v = view(&[("A", 4.5, 1.0), ("B", 0.5, 2.0)]);
        let g = parse_spatial_relations(&v, &scaffold(&v, &PerceptionConfig::default()));
        assert!(g.holds(RelationKind::Above, 0, 1));
        assert!(g.holds(RelationKind::FartherThan, 0, 1));
        assert!(!g.edges.iter().any(|e| e.a == e.b));
    }
}
