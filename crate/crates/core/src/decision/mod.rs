//! Direction selection at a waypoint.
//!
//! [`decide`] gates memory: a policy sees queue entries only once the queue
//! has filled. Scoring policies pick the highest-scoring present sector with
//! ties going to the smallest sector index, and any sector with a direct
//! sighting (likelihood 1.0) wins outright.

mod remote;

pub use remote::RemotePolicy;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm_client::ClientError;
use crate::memory::MemoryQueue;
use crate::perception::{GlobalSummary, LocalDescription, SECTORS};
use crate::priors::PriorTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecisionError {
    #[error("expected {SECTORS} sector slots, got {0}")]
    Arity(usize),
    #[error("no sector has a description")]
    NoSectors,
    #[error("memory-guided scoring needs at least one queue entry")]
    EmptyMemory,
    #[error("remote policy: {0}")]
    Remote(#[from] ClientError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionResult {
    /// 1..=6.
    pub sector: u8,
    pub found: bool,
    pub rationale: String,
}

pub trait Policy {
    fn decide_without_memory(
        &mut self,
        locals: &[Option<LocalDescription>],
        summary: &GlobalSummary,
    ) -> Result<DecisionResult, DecisionError>;

    fn decide_with_memory(
        &mut self,
        locals: &[Option<LocalDescription>],
        summary: &GlobalSummary,
        memory: &[GlobalSummary],
    ) -> Result<DecisionResult, DecisionError>;
}

/// Routes to the memory-aware path only when the queue is full; otherwise
/// the queue is not read.
pub fn decide(
    policy: &mut dyn Policy,
    locals: &[Option<LocalDescription>],
    summary: &GlobalSummary,
    queue: &MemoryQueue,
) -> Result<DecisionResult, DecisionError> {
    check_arity(locals)?;
    if queue.is_full() {
        policy.decide_with_memory(locals, summary, &queue.snapshot())
    } else {
        policy.decide_without_memory(locals, summary)
    }
}

fn check_arity(locals: &[Option<LocalDescription>]) -> Result<(), DecisionError> {
    if locals.len() != SECTORS {
        return Err(DecisionError::Arity(locals.len()));
    }
    if locals.iter().all(Option::is_none) {
        return Err(DecisionError::NoSectors);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorWeights {
    pub w_like: f64,
    pub w_prior: f64,
    pub w_rich: f64,
    pub w_mem: f64,
    /// Share of the visit similarity carried by inventory overlap; the rest
    /// is room-type agreement.
    pub overlap_share: f64,
}

impl Default for PriorWeights {
    fn default() -> Self {
        Self {
            w_like: 1.0,
            w_prior: 0.6,
            w_rich: 0.2,
            w_mem: 0.8,
            overlap_share: 0.5,
        }
    }
}

impl PriorWeights {
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            w_like: self.w_like * k,
            w_prior: self.w_prior * k,
            w_rich: self.w_rich * k,
            w_mem: self.w_mem * k,
            overlap_share: self.overlap_share,
        }
    }
}

pub fn prior_policy_score(ld: &LocalDescription, target: &str, priors: &PriorTable, w: &PriorWeights) -> f64 {
    w.w_like * ld.target_likelihood + w.w_prior * priors.prior(&ld.room_type_guess, target) + w.w_rich * ld.richness
}

/// Jaccard index; two empty sets count as identical.
pub fn jaccard(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Highest visit similarity between a sector and any remembered waypoint.
pub fn memory_penalty(ld: &LocalDescription, entries: &[GlobalSummary], w: &PriorWeights) -> Result<f64, DecisionError> {
    if entries.is_empty() {
        return Err(DecisionError::EmptyMemory);
    }
    let cats = ld.categories();
    let share = w.overlap_share.clamp(0.0, 1.0);
    Ok(entries
        .iter()
        .map(|e| {
            let inv: BTreeSet<&str> = e.inventory.iter().map(String::as_str).collect();
            let room = if e.room_type == ld.room_type_guess { 1.0 } else { 0.0 };
            share * jaccard(&cats, &inv) + (1.0 - share) * room
        })
        .fold(0.0, f64::max))
}

/// Smallest sector with a direct sighting.
pub fn sighted_sector(locals: &[Option<LocalDescription>]) -> Option<u8> {
    locals.iter().flatten().filter(|ld| ld.target_likelihood >= 1.0).map(|ld| ld.sector).min()
}

/// Argmax over present sectors, ascending sector order, strict improvement
/// only.
fn argmax(locals: &[Option<LocalDescription>], mut score: impl FnMut(&LocalDescription) -> Result<f64, DecisionError>) -> Result<(u8, f64), DecisionError> {
    let mut present: Vec<&LocalDescription> = locals.iter().flatten().collect();
    present.sort_by_key(|ld| ld.sector);
    let mut best: Option<(u8, f64)> = None;
    for ld in present {
        let s = score(ld)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((ld.sector, s));
        }
    }
    best.ok_or(DecisionError::NoSectors)
}

fn sighting(sector: u8) -> DecisionResult {
    DecisionResult {
        sector,
        found: true,
        rationale: format!("target sighted in direction {sector}"),
    }
}

/// Prior-driven scoring policy.
#[derive(Debug, Clone)]
pub struct HeuristicPolicy {
    target: String,
    priors: Arc<PriorTable>,
    weights: PriorWeights,
}

impl HeuristicPolicy {
    pub fn new(target: impl Into<String>, priors: Arc<PriorTable>, weights: PriorWeights) -> Self {
        Self {
            target: target.into(),
            priors,
            weights,
        }
    }

    fn pick(&self, locals: &[Option<LocalDescription>], memory: Option<&[GlobalSummary]>) -> Result<DecisionResult, DecisionError> {
        check_arity(locals)?;
        if let Some(sector) = sighted_sector(locals) {
            return Ok(sighting(sector));
        }
        let (sector, score) = argmax(locals, |ld| {
            let base = prior_policy_score(ld, &self.target, &self.priors, &self.weights);
            Ok(match memory {
                Some(entries) => base - self.weights.w_mem * memory_penalty(ld, entries, &self.weights)?,
                None => base,
            })
        })?;
        Ok(DecisionResult {
            sector,
            found: false,
            rationale: format!(
                "direction {sector} scores {score:.3}{}",
                if memory.is_some() { " after memory penalty" } else { "" }
            ),
        })
    }
}

impl Policy for HeuristicPolicy {
    fn decide_without_memory(&mut self, locals: &[Option<LocalDescription>], _: &GlobalSummary) -> Result<DecisionResult, DecisionError> {
        self.pick(locals, None)
    }

    fn decide_with_memory(
        &mut self,
        locals: &[Option<LocalDescription>],
        _: &GlobalSummary,
        memory: &[GlobalSummary],
    ) -> Result<DecisionResult, DecisionError> {
        if memory.is_empty() {
            return Err(DecisionError::EmptyMemory);
        }
        self.pick(locals, Some(memory))
    }
}

/// Prior-free policy: ranks sectors by target likelihood, then novelty
/// against memory, then richness.
#[derive(Debug, Clone, Default)]
pub struct LikelihoodPolicy {
    weights: PriorWeights,
}

impl LikelihoodPolicy {
    pub fn new(weights: PriorWeights) -> Self {
        Self { weights }
    }

    fn pick(&self, locals: &[Option<LocalDescription>], memory: Option<&[GlobalSummary]>) -> Result<DecisionResult, DecisionError> {
        check_arity(locals)?;
        if let Some(sector) = sighted_sector(locals) {
            return Ok(sighting(sector));
        }
        let mut present: Vec<&LocalDescription> = locals.iter().flatten().collect();
        present.sort_by_key(|ld| ld.sector);
        let mut best: Option<(u8, [f64; 3])> = None;
        for ld in present {
            let novelty = match memory {
                Some(entries) => 1.0 - memory_penalty(ld, entries, &self.weights)?,
                None => 1.0,
            };
            let key = [ld.target_likelihood, novelty, ld.richness];
            if best.is_none_or(|(_, b)| key.partial_cmp(&b) == Some(std::cmp::Ordering::Greater)) {
                best = Some((ld.sector, key));
            }
        }
        let (sector, key) = best.ok_or(DecisionError::NoSectors)?;
        Ok(DecisionResult {
            sector,
            found: false,
            rationale: format!("direction {sector}: likelihood {:.2}, novelty {:.2}, richness {:.2}", key[0], key[1], key[2]),
        })
    }
}

impl Policy for LikelihoodPolicy {
    fn decide_without_memory(&mut self, locals: &[Option<LocalDescription>], _: &GlobalSummary) -> Result<DecisionResult, DecisionError> {
        self.pick(locals, None)
    }

    fn decide_with_memory(
        &mut self,
        locals: &[Option<LocalDescription>],
        _: &GlobalSummary,
        memory: &[GlobalSummary],
    ) -> Result<DecisionResult, DecisionError> {
        if memory.is_empty() {
            return Err(DecisionError::EmptyMemory);
        }
        self.pick(locals, Some(memory))
    }
}
