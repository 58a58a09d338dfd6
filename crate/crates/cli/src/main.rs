use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use panonav_core::metrics::MetricsReport;
use panonav_core::runner::{
    ablation_suite, deadlock_suite, render_trajectory_svg, replay_log, run_benchmark, run_episode, Backend,
    EpisodeConfig, RunError, SuiteSpec, TrajectoryLog, WorldSource,
};
use panonav_core::world::{generate_world_with, load_world, save_world, GeneratorParams};

#[derive(Parser)]
#[command(name = "panonav", version, about = "Mapless panoramic object-goal navigation on generated grid worlds")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Episode configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// oracle, heuristic or remote.
    #[arg(long, global = true)]
    backend: Option<Backend>,
    #[arg(long, global = true, overrides_with = "no_memory")]
    memory: bool,
    #[arg(long, global = true)]
    no_memory: bool,
    #[arg(long, global = true, value_parser = ["6", "3"])]
    views: Option<String>,
    /// Memory queue capacity.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate world files.
    Gen {
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Generator parameters (TOML).
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        deceptive: bool,
        #[arg(long)]
        target: Option<String>,
    },
    /// Run one episode.
    Run {
        /// World file; otherwise the configured or generated world.
        #[arg(long)]
        world: Option<PathBuf>,
        #[arg(long)]
        target: Option<String>,
    },
    /// Run a benchmark suite: `deadlock`, `ablation` or a suite TOML file.
    Bench {
        #[arg(long, default_value = "deadlock")]
        suite: String,
    },
    /// Render a trajectory log as SVG.
    Plot {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        log: PathBuf,
    },
    /// Recompute metrics from trajectory logs.
    Replay {
        #[arg(long)]
        world: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        log: Vec<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

impl Global {
    fn episode_config(&self) -> Result<EpisodeConfig, RunError> {
        let mut cfg = match &self.config {
            Some(p) => EpisodeConfig::from_toml(&read(p)?)?,
            None => EpisodeConfig::default(),
        };
        self.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&self, cfg: &mut EpisodeConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if self.memory {
            cfg.memory = true;
        }
        if self.no_memory {
            cfg.memory = false;
        }
        if let Some(v) = &self.views {
            cfg.views = v.parse().expect("validated by clap");
        }
        if let Some(n) = self.n {
            cfg.capacity = n;
        }
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    let g = &cli.global;
    match cli.command {
        Command::Gen {
            count,
            params,
            deceptive,
            target,
        } => {
            let mut p = match params {
                Some(path) => toml::from_str::<GeneratorParams>(&read(&path)?).map_err(|e| RunError::Config(e.to_string()))?,
                None => GeneratorParams::default(),
            };
            p.deceptive |= deceptive;
            if let Some(t) = target {
                p.target = t;
            }
            let priors = g.episode_config()?.load_priors()?;
            let first = g.seed.unwrap_or(0);
            for seed in first..first + count {
                let world = generate_world_with(seed, &p, &priors)?;
                let path = g.out.join(format!("world_{seed}.json"));
                write(&path, &save_world(&world))?;
                println!("{}", path.display());
            }
        }
        Command::Run { world, target } => {
            let mut cfg = g.episode_config()?;
            if let Some(w) = world {
                cfg.world = WorldSource::File { path: w };
            }
            if target.is_some() {
                cfg.target = target;
            }
            let priors = Arc::new(cfg.load_priors()?);
            let world = cfg.world.load(&priors)?;
            let out = run_episode(&world, &cfg, &priors)?;
            let svg = render_trajectory_svg(&world, &out.log)?;
            write(&g.out.join("world.json"), &save_world(&world))?;
            write(&g.out.join("trajectory.jsonl"), &out.log.to_jsonl())?;
            write(&g.out.join("trajectory.svg"), &svg)?;
            println!("{}", serde_json::to_string_pretty(&out.result).expect("result serializes"));
        }
        Command::Bench { suite } => {
            let mut spec = match suite.as_str() {
                "deadlock" => deadlock_suite(),
                "ablation" => ablation_suite(),
                path => SuiteSpec::from_toml(&read(Path::new(path))?)?,
            };
            if let Some(p) = &g.config {
                let base = EpisodeConfig::from_toml(&read(p)?)?;
                spec.base = EpisodeConfig {
                    start_jitter: spec.base.start_jitter,
                    ..base
                };
            }
            g.apply(&mut spec.base);
            let priors = Arc::new(spec.base.load_priors()?);
            let report = run_benchmark(&spec, &priors)?;
            write(&g.out.join(format!("{}_metrics.csv", spec.name)), &report.table())?;
            write(&g.out.join(format!("{}_episodes.csv", spec.name)), &report.episode_table())?;
            write(
                &g.out.join(format!("{}_report.json", spec.name)),
                &serde_json::to_string_pretty(&report).expect("report serializes"),
            )?;
            print!("{}", report.table());
            for c in &report.conditions {
                for (w, s, e) in &c.invalid {
                    eprintln!("invalid episode {} world {w} seed {s}: {e}", c.label);
                }
            }
            if report.invalid_count() > 0 {
                return Err(RunError::InvalidEpisode(format!("{} episodes excluded", report.invalid_count())));
            }
        }
        Command::Plot { world, log } => {
            let world = load_world(&read(&world)?)?;
            let log = TrajectoryLog::from_jsonl(&read(&log)?)?;
            let path = g.out.join("trajectory.svg");
            write(&path, &render_trajectory_svg(&world, &log)?)?;
            println!("{}", path.display());
        }
        Command::Replay { world, log } => {
            let world = load_world(&read(&world)?)?;
            let mut results = Vec::new();
            for path in &log {
                results.push(replay_log(&world, &TrajectoryLog::from_jsonl(&read(path)?)?)?);
            }
            let report = MetricsReport::compute(&results).map_err(|e| RunError::Log(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            println!("{}\n{}", MetricsReport::CSV_HEADER, report.csv_row());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
