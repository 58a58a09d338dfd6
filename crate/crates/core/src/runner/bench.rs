use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_episode, Backend, EpisodeConfig, RunError, WorldSource};
use crate::metrics::{EpisodeResult, MetricsReport};
use crate::priors::PriorTable;
use crate::world::{GeneratorParams, GridWorld};

/// Per-condition overrides of the suite's base configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Condition {
    pub label: String,
    pub memory: Option<bool>,
    pub views: Option<u8>,
    pub backend: Option<Backend>,
}

impl Condition {
    fn apply(&self, base: &EpisodeConfig) -> EpisodeConfig {
        let mut cfg = base.clone();
        if let Some(m) = self.memory {
            cfg.memory = m;
        }
        if let Some(v) = self.views {
            cfg.views = v;
        }
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub name: String,
    #[serde(default)]
    pub base: EpisodeConfig,
    pub worlds: Vec<WorldSource>,
    pub seeds: Vec<u64>,
    pub conditions: Vec<Condition>,
}

impl SuiteSpec {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn cells(&self) -> usize {
        self.worlds.len() * self.seeds.len() * self.conditions.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub world: usize,
    pub seed: u64,
    pub result: EpisodeResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub label: String,
    /// Absent when every episode was invalid.
    pub metrics: Option<MetricsReport>,
    pub episodes: Vec<EpisodeRow>,
    /// `(world, seed, error)` of excluded episodes.
    pub invalid: Vec<(usize, u64, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub suite: String,
    pub conditions: Vec<ConditionReport>,
}

impl BenchReport {
    pub fn invalid_count(&self) -> usize {
        self.conditions.iter().map(|c| c.invalid.len()).sum()
    }

    /// Comparison table, one row per condition.
    pub fn table(&self) -> String {
        let mut out = format!("condition,{}\n", MetricsReport::CSV_HEADER);
        for c in &self.conditions {
            let row = c.metrics.as_ref().map(MetricsReport::csv_row).unwrap_or_else(|| "0,,,,".into());
            out.push_str(&format!("{},{row}\n", c.label));
        }
        out
    }

    /// Per-episode rows for spreadsheet use.
    pub fn episode_table(&self) -> String {
        let mut out = String::from("condition,world,seed,success,path_length,shortest_path,final_dts,start_final_geodesic,escaped,steps,waypoints\n");
        for c in &self.conditions {
            for e in &c.episodes {
                let r = &e.result;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    c.label,
                    e.world,
                    e.seed,
                    u8::from(r.success),
                    r.path_length,
                    r.shortest_path,
                    r.final_dts,
                    r.start_final_geodesic,
                    u8::from(r.escaped),
                    r.steps,
                    r.waypoints
                ));
            }
        }
        out
    }
}

/// Runs every (condition, world, seed) cell, episodes in parallel.
/// Transport failures abort the suite; invalid episodes are excluded and
/// reported.
pub fn run_benchmark(spec: &SuiteSpec, priors: &Arc<PriorTable>) -> Result<BenchReport, RunError> {
    if spec.cells() == 0 {
        return Err(RunError::Config(format!("suite `{}` has no cells", spec.name)));
    }
    spec.base.validate()?;
    let worlds: Vec<GridWorld> = spec.worlds.iter().map(|w| w.load(priors)).collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize, u64)> = (0..spec.conditions.len())
        .flat_map(|c| (0..worlds.len()).flat_map(move |w| spec.seeds.iter().map(move |&s| (c, w, s))))
        .collect();
    let outcomes: Vec<Result<EpisodeResult, RunError>> = jobs
        .par_iter()
        .map(|&(c, w, seed)| {
            let mut cfg = spec.conditions[c].apply(&spec.base);
            cfg.seed = seed;
            run_episode(&worlds[w], &cfg, priors).map(|o| o.result)
        })
        .collect();

    let mut conditions: Vec<ConditionReport> = spec
        .conditions
        .iter()
        .map(|c| ConditionReport {
            label: c.label.clone(),
            metrics: None,
            episodes: Vec::new(),
            invalid: Vec::new(),
        })
        .collect();
    for (&(c, world, seed), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(result) => conditions[c].episodes.push(EpisodeRow { world, seed, result }),
            Err(e) if e.exit_code() == 2 => return Err(e),
            Err(e) => conditions[c].invalid.push((world, seed, e.to_string())),
        }
    }
    for c in &mut conditions {
        let results: Vec<EpisodeResult> = c.episodes.iter().map(|e| e.result.clone()).collect();
        c.metrics = MetricsReport::compute(&results).ok();
    }
    Ok(BenchReport {
        suite: spec.name.clone(),
        conditions,
    })
}

fn generated(seeds: &[u64], params: &GeneratorParams) -> Vec<WorldSource> {
    seeds
        .iter()
        .map(|&seed| WorldSource::Generated {
            seed,
            params: params.clone(),
        })
        .collect()
}

/// Five deceptive worlds: the agent starts in the room type most associated
/// with the target, which holds everything but the target. Ten start
/// jitters per world, memory on and off.
pub fn deadlock_suite() -> SuiteSpec {
    let params = GeneratorParams {
        deceptive: true,
        ..GeneratorParams::default()
    };
    SuiteSpec {
        name: "deadlock".into(),
        base: EpisodeConfig {
            backend: Backend::Heuristic,
            start_jitter: true,
            ..EpisodeConfig::default()
        },
        worlds: generated(&[1, 2, 3, 4, 5], &params),
        seeds: (0..10).collect(),
        conditions: vec![
            Condition {
                label: "memory".into(),
                memory: Some(true),
                ..Condition::default()
            },
            Condition {
                label: "no_memory".into(),
                memory: Some(false),
                ..Condition::default()
            },
        ],
    }
}

/// Fifty episodes on ordinary generated worlds with the full panorama and
/// with the three forward sectors only.
pub fn ablation_suite() -> SuiteSpec {
    SuiteSpec {
        name: "ablation".into(),
        base: EpisodeConfig {
            backend: Backend::Heuristic,
            start_jitter: true,
            ..EpisodeConfig::default()
        },
        worlds: generated(&(101..111).collect::<Vec<_>>(), &GeneratorParams::default()),
        seeds: (0..5).collect(),
        conditions: vec![
            Condition {
                label: "views6".into(),
                views: Some(6),
                ..Condition::default()
            },
            Condition {
                label: "views3".into(),
                views: Some(3),
                ..Condition::default()
            },
        ],
    }
}
