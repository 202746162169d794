//! `swarmlink`: run relay-chain simulations, batch experiments, statistics,
//! and topology exports from the command line.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 runtime error,
//! 4 I/O error.

mod artifacts;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swarmlink_core::error::Error;
use swarmlink_core::experiment::{
    self, records_from_csv, records_to_csv, ArenaSize, ExperimentPlan, RunRecord, RunStatus, Tail,
};
use swarmlink_core::export::{parse_snapshot_stem, to_dot_with, DotOptions, SnapshotPolicy};
use swarmlink_core::neat::Genome;
use swarmlink_core::sim::Simulation;
use swarmlink_core::{ControllerKind, SimConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "swarmlink",
    version,
    about = "Deterministic relay-swarm simulator with three controllers: \
             random walk, preprogrammed chain building, and decentralized \
             online neuroevolution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write manifest, record CSV, trace, and
    /// (odNEAT) event log plus topology snapshots
    Run(RunArgs),
    /// Execute an experiment plan and write records plus summaries
    Batch(BatchArgs),
    /// Summarize a records CSV, or compare two with a Welch t-test
    Stats(StatsArgs),
    /// Re-emit DOT topology files from a run's genome snapshots
    ExportTopology(ExportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (TOML); built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed (overrides the config's rng_seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, env = "SWARMLINK_OUT", default_value = "swarmlink-out")]
    out: PathBuf,
    /// Controller: random_walk | preprogrammed | odneat
    #[arg(long)]
    controller: Option<ControllerKind>,
    /// Number of robots
    #[arg(long)]
    robots: Option<u32>,
    /// Arena dimensions WxH in meters, e.g. 4x4 or 2x5
    #[arg(long)]
    arena: Option<ArenaSize>,
    /// Step cutoff
    #[arg(long)]
    max_steps: Option<u64>,
    /// Skip the per-step trace file
    #[arg(long)]
    no_trace: bool,
    /// Also snapshot topologies every N steps (odNEAT; start and end are
    /// always captured)
    #[arg(long, default_value_t = 0)]
    snapshot_every: u64,
}

#[derive(Args)]
struct BatchArgs {
    /// Experiment plan (TOML)
    #[arg(long)]
    plan: PathBuf,
    /// Output directory
    #[arg(long, env = "SWARMLINK_OUT", default_value = "swarmlink-out")]
    out: PathBuf,
    /// Worker threads (0 = one per CPU)
    #[arg(long, default_value_t = 0)]
    parallel: usize,
    /// Override the plan's base seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct StatsArgs {
    /// Records CSV produced by `run` or `batch`
    #[arg(long = "in")]
    input: PathBuf,
    /// Second CSV: Welch-test its metric against the first instead of
    /// summarizing
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Metric for --compare: steps | distance
    #[arg(long, default_value = "steps")]
    metric: String,
    /// Tail for --compare: two | greater | less
    #[arg(long, default_value = "two")]
    tail: String,
    /// Also write the summary as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Run directory containing *.genome.json snapshots
    #[arg(long)]
    run: PathBuf,
    /// Robot id to export
    #[arg(long)]
    robot: u32,
    /// Specific step (all snapshots of the robot when omitted)
    #[arg(long)]
    step: Option<u64>,
    /// Output directory (next to the snapshots when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit disabled connections instead of dashing them
    #[arg(long)]
    hide_disabled: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Stats(args) => cmd_stats(args),
        Command::ExportTopology(args) => cmd_export(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Config(_) | Error::SpawnFailure { .. } | Error::Stats(_) | Error::Serde(_) => {
            EXIT_CONFIG
        }
        Error::Io(_) => EXIT_IO,
        Error::Timeout { .. } | Error::RunsFailed { .. } => EXIT_RUNTIME,
    }
}

fn load_config(args: &RunArgs) -> Result<SimConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => SimConfig::from_file(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.arena.rng_seed = seed;
    }
    if let Some(kind) = args.controller {
        cfg.controller.kind = kind;
    }
    if let Some(robots) = args.robots {
        cfg.arena.n_robots = robots;
    }
    if let Some(arena) = args.arena {
        cfg.arena.width = arena.width;
        cfg.arena.height = arena.height;
    }
    if let Some(max_steps) = args.max_steps {
        cfg.arena.max_steps = max_steps;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Error> {
    let cfg = load_config(&args)?;
    let seed = cfg.arena.rng_seed;
    let out = &args.out;
    std::fs::create_dir_all(out)?;
    artifacts::write_manifest(out, "run", seed, &cfg, None)?;

    let odneat = cfg.controller_kind() == ControllerKind::OdNeat;
    let mut sim = Simulation::new(&cfg, seed)?;
    if !args.no_trace {
        sim = sim.with_trace();
    }
    if odneat {
        sim = sim.with_events().with_snapshots(SnapshotPolicy {
            start: true,
            end: true,
            every_n_steps: args.snapshot_every,
        });
    }
    let outcome = sim.run();

    let record = RunRecord {
        config_id: 0,
        controller: cfg.controller_kind(),
        arena_width: cfg.arena.width,
        arena_height: cfg.arena.height,
        n_robots: cfg.arena.n_robots,
        run_index: 0,
        seed,
        steps_to_connectivity: outcome.steps_to_connectivity,
        connected: outcome.connected,
        total_distance: outcome.total_distance,
        replacements: outcome.replacements,
        genome_stats: outcome
            .genome_stats
            .iter()
            .map(|(n, c)| format!("{n}:{c}"))
            .collect::<Vec<_>>()
            .join("|"),
        status: RunStatus::Ok,
    };
    std::fs::write(out.join("record.csv"), records_to_csv(&[record])?)?;
    if !args.no_trace {
        artifacts::write_ndjson(&out.join("trace.ndjson"), &sim.trace)?;
    }
    if odneat {
        artifacts::write_ndjson(&out.join("events.ndjson"), &sim.events)?;
        artifacts::write_snapshots(out, &sim.snapshots)?;
    }
    println!(
        "run finished: connected={} steps={} distance={:.2} m (artifacts in {})",
        outcome.connected,
        outcome.steps_to_connectivity,
        outcome.total_distance,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_batch(args: BatchArgs) -> Result<ExitCode, Error> {
    let mut plan = ExperimentPlan::from_file(&args.plan)?;
    if let Some(seed) = args.seed {
        plan.base_seed = seed;
    }
    std::fs::create_dir_all(&args.out)?;
    artifacts::write_manifest(
        &args.out,
        "batch",
        plan.base_seed,
        &plan.base,
        Some(&plan),
    )?;

    let records = experiment::run_experiment(&plan, args.parallel)?;
    std::fs::write(args.out.join("records.csv"), records_to_csv(&records)?)?;
    let report = experiment::summarize(&records)?;
    let text = experiment::render_summary(&report);
    std::fs::write(args.out.join("summary.txt"), &text)?;
    std::fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&report).map_err(|e| Error::Serde(e.to_string()))?,
    )?;
    print!("{text}");

    let failed = records.iter().filter(|r| r.status != RunStatus::Ok).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} runs failed", records.len());
        return Err(Error::RunsFailed {
            failed,
            total: records.len(),
        });
    }
    println!(
        "batch finished: {} records (artifacts in {})",
        records.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn metric_values(records: &[RunRecord], metric: &str) -> Result<Vec<f64>, Error> {
    let values = match metric {
        "steps" => records
            .iter()
            .filter(|r| r.status == RunStatus::Ok)
            .map(|r| r.steps_to_connectivity as f64)
            .collect(),
        "distance" => records
            .iter()
            .filter(|r| r.status == RunStatus::Ok)
            .map(|r| r.total_distance)
            .collect(),
        other => {
            return Err(Error::Config(format!(
                "unknown metric '{other}' (expected steps | distance)"
            )))
        }
    };
    Ok(values)
}

fn cmd_stats(args: StatsArgs) -> Result<ExitCode, Error> {
    let records = records_from_csv(&std::fs::read_to_string(&args.input)?)?;
    if records.is_empty() {
        return Err(Error::Stats("input CSV contains no records".into()));
    }

    if let Some(compare) = &args.compare {
        let other = records_from_csv(&std::fs::read_to_string(compare)?)?;
        let xs = metric_values(&records, &args.metric)?;
        let ys = metric_values(&other, &args.metric)?;
        let tail = match args.tail.as_str() {
            "two" => Tail::TwoSided,
            "greater" => Tail::Greater,
            "less" => Tail::Less,
            other => {
                return Err(Error::Config(format!(
                    "unknown tail '{other}' (expected two | greater | less)"
                )))
            }
        };
        let result = experiment::welch_t_test_tailed(&xs, &ys, tail)?;
        println!(
            "welch {} ({} vs {} runs): t={:.6} df={:.4} p={:.6}{}",
            args.metric,
            result.n_x,
            result.n_y,
            result.t_statistic,
            result.degrees_of_freedom,
            result.p_value,
            if result.degenerate { " (degenerate)" } else { "" },
        );
        if let Some(path) = &args.json {
            std::fs::write(
                path,
                serde_json::to_string_pretty(&result).map_err(|e| Error::Serde(e.to_string()))?,
            )?;
        }
        return Ok(ExitCode::SUCCESS);
    }

    let report = experiment::summarize(&records)?;
    print!("{}", experiment::render_summary(&report));
    if let Some(path) = &args.json {
        std::fs::write(
            path,
            serde_json::to_string_pretty(&report).map_err(|e| Error::Serde(e.to_string()))?,
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(args: ExportArgs) -> Result<ExitCode, Error> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(&args.run)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_suffix(".genome.json") else {
            continue;
        };
        let Ok((robot, step)) = parse_snapshot_stem(stem) else {
            continue;
        };
        if robot == args.robot && args.step.map_or(true, |s| s == step) {
            found.push((step, path));
        }
    }
    if found.is_empty() {
        return Err(Error::Config(format!(
            "no genome snapshots for robot {} in {} (snapshots are only written by odneat runs)",
            args.robot,
            args.run.display()
        )));
    }
    found.sort();

    let out_dir = args.out.clone().unwrap_or_else(|| args.run.clone());
    std::fs::create_dir_all(&out_dir)?;
    let options = DotOptions {
        show_disabled: !args.hide_disabled,
    };
    for (step, path) in found {
        let genome = Genome::from_json(&std::fs::read_to_string(&path)?)?;
        let dot = to_dot_with(&genome, &options);
        let target = out_dir.join(format!("r{}_{}.dot", args.robot, step));
        std::fs::write(&target, dot)?;
        println!("{}", target.display());
    }
    Ok(ExitCode::SUCCESS)
}
