//! Object-room prior table.
//!
//! Delimited text with a header row `room_type,category,prior`. Pairs that
//! are not listed fall back to [`DEFAULT_PRIOR`], which is also what the
//! `unknown` room type resolves to.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_PRIOR: f64 = 0.05;
pub const UNKNOWN_ROOM: &str = "unknown";

const SHIPPED: &str = include_str!("../data/priors.csv");

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("prior table: {0}")]
    Csv(#[from] csv::Error),
    #[error("prior table: {0}")]
    Io(#[from] std::io::Error),
    #[error("prior for ({room}, {category}) = {value} is outside [0, 1]")]
    OutOfRange {
        room: String,
        category: String,
        value: f64,
    },
}

#[derive(Debug, Deserialize)]
struct Row {
    room_type: String,
    category: String,
    prior: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorTable {
    entries: BTreeMap<(String, String), f64>,
}

impl Default for PriorTable {
    fn default() -> Self {
        Self::parse(SHIPPED).expect("shipped prior table is valid")
    }
}

impl PriorTable {
    pub fn parse(text: &str) -> Result<Self, PriorError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut entries = BTreeMap::new();
        for row in reader.deserialize() {
            let Row {
                room_type,
                category,
                prior,
            } = row?;
            if !(0.0..=1.0).contains(&prior) {
                return Err(PriorError::OutOfRange {
                    room: room_type,
                    category,
                    value: prior,
                });
            }
            entries.insert((room_type, category), prior);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, PriorError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn prior(&self, room_type: &str, category: &str) -> f64 {
        self.entries
            .get(&(room_type.to_string(), category.to_string()))
            .copied()
            .unwrap_or(DEFAULT_PRIOR)
    }

    pub fn room_types(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.entries.keys().map(|(r, _)| r.as_str()).collect();
        set.into_iter().collect()
    }

    /// Categories listed for a room type, highest prior first (name order on ties).
    pub fn palette(&self, room_type: &str) -> Vec<(&str, f64)> {
        let mut out: Vec<(&str, f64)> = self
            .entries
            .iter()
            .filter(|((r, _), _)| r == room_type)
            .map(|((_, c), &p)| (c.as_str(), p))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        out
    }

    /// Room types ranked by prior for `category`, highest first.
    pub fn rooms_for(&self, category: &str) -> Vec<(&str, f64)> {
        let mut out: Vec<(&str, f64)> = self
            .room_types()
            .into_iter()
            .map(|r| (r, self.prior(r, category)))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        out
    }
}
