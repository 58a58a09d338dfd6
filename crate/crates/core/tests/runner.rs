mod common;

use std::sync::Arc;

use panonav_core::priors::PriorTable;
use panonav_core::runner::{
    crossing_count, render_trajectory_svg, replay_log, run_benchmark, run_episode, Backend, EpisodeConfig, LogRecord, RunError,
    SuiteSpec, TrajectoryLog, WorldSource,
};
use panonav_core::world::{save_world, Action, Cell, GridWorld, Heading, Pose};

fn two_rooms() -> GridWorld {
    GridWorld::from_ascii(
        &[
            "#############",
            "#kkkkk#lllll#",
            "#kkkkk#lllll#",
            "#kkkkkllllll#",
            "#kkkkk#lllll#",
            "#############",
        ],
        &[('k', "kitchen"), ('l', "living_room")],
        &[("sink", Cell::new(1, 1)), ("tv", Cell::new(11, 4)), ("sofa", Cell::new(10, 1))],
        Pose::new(Cell::new(2, 3), Heading::new(180).unwrap()),
        "sofa",
    )
    .unwrap()
}

fn priors() -> Arc<PriorTable> {
    Arc::new(PriorTable::default())
}

#[test]
fn heuristic_agent_finds_the_sofa_next_door() {
    let w = two_rooms();
    let out = run_episode(&w, &EpisodeConfig::default(), &priors()).unwrap();
    assert!(out.result.success, "{:?}", out.result);
    assert!(out.result.path_length >= out.result.shortest_path - 1.0);
    assert!(out.log.steps().last().is_some_and(|s| s.action == Action::Stop));
    let first = out.log.waypoints().next().unwrap();
    assert!(!first.memory_used && first.queue.is_empty());
}

#[test]
fn logs_round_trip_and_replay() {
    let w = two_rooms();
    let out = run_episode(&w, &EpisodeConfig::default(), &priors()).unwrap();
    let text = out.log.to_jsonl();
    let back = TrajectoryLog::from_jsonl(&text).unwrap();
    assert_eq!(back, out.log);
    assert_eq!(replay_log(&w, &back).unwrap(), out.result);
}

#[test]
fn tampered_logs_are_rejected() {
    let w = two_rooms();
    let out = run_episode(&w, &EpisodeConfig::default(), &priors()).unwrap();
    let mut log = out.log.clone();
    let wp = log
        .records
        .iter_mut()
        .find_map(|r| match r {
            LogRecord::Waypoint(wp) => Some(wp),
            _ => None,
        })
        .unwrap();
    wp.decision.sector = wp.decision.sector % 6 + 1;
    assert!(matches!(replay_log(&w, &log), Err(RunError::Log(_))));
    assert!(TrajectoryLog::from_jsonl("{not json").is_err());
}

#[test]
fn svg_draws_the_path_and_rejects_foreign_logs() {
    let w = two_rooms();
    let out = run_episode(&w, &EpisodeConfig::default(), &priors()).unwrap();
    let svg = render_trajectory_svg(&w, &out.log).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polyline"));
    assert!(svg.contains(r#"data-type="kitchen""#));
    // A straight walk to the sofa never revisits a cell.
    assert_eq!(crossing_count(&out.log), 0);
    let other = panonav_core::world::generate_world(1, &Default::default()).unwrap();
    assert!(render_trajectory_svg(&other, &out.log).is_err());
}

#[test]
fn starting_on_the_target_is_invalid() {
    let w = two_rooms().with_start(Pose::new(Cell::new(10, 1), Heading::new(0).unwrap())).unwrap();
    let e = run_episode(&w, &EpisodeConfig::default(), &priors()).unwrap_err();
    assert!(matches!(e, RunError::InvalidEpisode(_)));
    assert_eq!(e.exit_code(), 1);
}

#[test]
fn missing_target_category_is_invalid() {
    let cfg = EpisodeConfig {
        target: Some("piano".into()),
        ..EpisodeConfig::default()
    };
    assert!(matches!(run_episode(&two_rooms(), &cfg, &priors()), Err(RunError::InvalidEpisode(_))));
}

#[test]
fn config_validation() {
    assert!(EpisodeConfig::from_toml("views = 4").is_err());
    assert!(EpisodeConfig::from_toml("capacity = 0").is_err());
    assert!(EpisodeConfig::from_toml("[weights]\nw_mem = -1.0").is_err());
    let cfg = EpisodeConfig::from_toml("backend = \"oracle\"\nmemory = false\nviews = 3\n[world]\nkind = \"generated\"\nseed = 4").unwrap();
    assert_eq!(cfg.backend, Backend::Oracle);
    assert!(!cfg.memory);
    assert!(matches!(cfg.world, WorldSource::Generated { seed: 4, .. }));
}

#[test]
fn remote_without_endpoint_fails_before_running() {
    std::env::remove_var(panonav_core::llm_client::ENV_ENDPOINT);
    let cfg = EpisodeConfig {
        backend: Backend::Remote,
        ..EpisodeConfig::default()
    };
    let e = run_episode(&two_rooms(), &cfg, &priors()).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn unreachable_endpoint_is_a_backend_failure() {
    let mut cfg = EpisodeConfig {
        backend: Backend::Remote,
        ..EpisodeConfig::default()
    };
    cfg.remote.endpoint = Some("http://127.0.0.1:9/v1/chat/completions".into());
    cfg.remote.retry.max_retries = 0;
    let e = run_episode(&two_rooms(), &cfg, &priors()).unwrap_err();
    assert_eq!(e.exit_code(), 2, "{e}");
}

#[test]
fn suite_from_toml_runs_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let world_path = dir.path().join("two_rooms.json");
    std::fs::write(&world_path, save_world(&two_rooms())).unwrap();
    let text = format!(
        r#"
name = "tiny"
seeds = [0, 1, 2]

[base]
backend = "heuristic"
start_jitter = true

[[worlds]]
kind = "file"
path = "{}"

[[worlds]]
kind = "generated"
seed = 7

[[conditions]]
label = "six"
views = 6

[[conditions]]
label = "three"
views = 3
"#,
        world_path.display()
    );
    let spec = SuiteSpec::from_toml(&text).unwrap();
    assert_eq!(spec.cells(), 12);
    let report = run_benchmark(&spec, &priors()).unwrap();
    assert_eq!(report.conditions.len(), 2);
    for c in &report.conditions {
        assert_eq!(c.episodes.len() + c.invalid.len(), 6);
    }
    assert_eq!(report.table().lines().count(), 3);
    assert!(report.table().starts_with("condition,N,SR,SPL,DTS_f,ER"));
    assert_eq!(report.episode_table().lines().count(), 1 + report.conditions.iter().map(|c| c.episodes.len()).sum::<usize>());
    assert_eq!(run_benchmark(&spec, &priors()).unwrap(), report);
}

#[test]
fn empty_suite_is_a_config_error() {
    let spec = SuiteSpec::from_toml("name = \"none\"\nworlds = []\nseeds = []\nconditions = []").unwrap();
    assert!(matches!(run_benchmark(&spec, &priors()), Err(RunError::Config(_))));
}

#[test]
fn remote_episode_against_a_loopback_model() {
    let server = common::fake_model_server();
    let mut cfg = EpisodeConfig {
        backend: Backend::Remote,
        ..EpisodeConfig::default()
    };
    cfg.remote.endpoint = Some(server.url.clone());
    let out = run_episode(&two_rooms(), &cfg, &priors()).unwrap();
    assert!(server.hits() > 0);
    assert!(out.result.success, "{:?}", out.result);
}
