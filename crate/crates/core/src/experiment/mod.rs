//! Seeded batch experiments and their statistics.
//!
//! A plan is the cross product controllers x group sizes x arenas, each
//! cell run `runs_per_config` times. Every run's seed derives from
//! (base_seed, config index, run index) through a stable mixing hash, so a
//! plan reproduces bit-for-bit without storing per-run seeds, and results
//! are independent of the parallelism degree.

pub mod stats;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::controllers::ControllerKind;
use crate::error::{Error, Result};
use crate::seed;
use crate::sim::Simulation;
pub use stats::{welch_t_test, welch_t_test_tailed, Tail, WelchResult};

/// Arena dimensions, written `WxH` in plans and flags (e.g. "2x5").
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArenaSize {
    pub width: f64,
    pub height: f64,
}

impl ArenaSize {
    pub fn label(&self) -> String {
        format!("{}x{}", self.width, self.height)
    }
}

impl std::str::FromStr for ArenaSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Config(format!("arena '{s}' is not of the form WxH")))?;
        let parse = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("arena dimension '{v}' is not a number")))
        };
        Ok(ArenaSize {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

/// The full experimental protocol.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub controllers: Vec<ControllerKind>,
    pub group_sizes: Vec<u32>,
    pub arenas: Vec<ArenaSize>,
    pub runs_per_config: u32,
    pub base_seed: u64,
    /// Optional wall-clock budget per run; a breach marks the run failed.
    pub run_timeout_secs: Option<u64>,
    /// Template configuration; controller/robots/arena are overridden per
    /// config cell.
    pub base: SimConfig,
}

impl ExperimentPlan {
    /// Three controllers, group sizes 10/15/20, arenas 2x5 and 4x4,
    /// 30 runs each: 18 configurations, 540 runs.
    pub fn full_protocol(base_seed: u64) -> ExperimentPlan {
        ExperimentPlan {
            controllers: vec![
                ControllerKind::RandomWalk,
                ControllerKind::Preprogrammed,
                ControllerKind::OdNeat,
            ],
            group_sizes: vec![10, 15, 20],
            arenas: vec![
                ArenaSize { width: 2.0, height: 5.0 },
                ArenaSize { width: 4.0, height: 4.0 },
            ],
            runs_per_config: 30,
            base_seed,
            run_timeout_secs: None,
            base: SimConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<ExperimentPlan> {
        let file: PlanFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid plan: {e}")))?;
        let plan = ExperimentPlan {
            controllers: file
                .controllers
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_>>()?,
            group_sizes: file.group_sizes,
            arenas: file
                .arenas
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_>>()?,
            runs_per_config: file.runs_per_config,
            base_seed: file.base_seed,
            run_timeout_secs: file.run_timeout_secs,
            base: file.config,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_file(path: &Path) -> Result<ExperimentPlan> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.controllers.is_empty() || self.group_sizes.is_empty() || self.arenas.is_empty() {
            return Err(Error::Config(
                "plan needs at least one controller, group size, and arena".into(),
            ));
        }
        if self.runs_per_config == 0 {
            return Err(Error::Config("runs_per_config must be >= 1".into()));
        }
        self.base.validate()
    }

    /// Configuration cells in a fixed order: controllers, then group
    /// sizes, then arenas.
    pub fn configs(&self) -> Vec<ConfigCell> {
        let mut cells = Vec::new();
        let mut id = 0;
        for &controller in &self.controllers {
            for &n_robots in &self.group_sizes {
                for &arena in &self.arenas {
                    cells.push(ConfigCell {
                        config_id: id,
                        controller,
                        n_robots,
                        arena,
                    });
                    id += 1;
                }
            }
        }
        cells
    }

    /// The seed of one run, stable across executions and platforms.
    pub fn run_seed(&self, config_id: u32, run_index: u32) -> u64 {
        seed::mix3(self.base_seed, config_id.into(), run_index.into())
    }

    pub fn sim_config(&self, cell: &ConfigCell) -> SimConfig {
        let mut cfg = self.base.clone();
        cfg.controller.kind = cell.controller;
        cfg.arena.n_robots = cell.n_robots;
        cfg.arena.width = cell.arena.width;
        cfg.arena.height = cell.arena.height;
        cfg
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PlanFile {
    controllers: Vec<String>,
    group_sizes: Vec<u32>,
    arenas: Vec<String>,
    runs_per_config: u32,
    base_seed: u64,
    run_timeout_secs: Option<u64>,
    config: SimConfig,
}

impl Default for PlanFile {
    fn default() -> Self {
        PlanFile {
            controllers: vec![
                "random_walk".into(),
                "preprogrammed".into(),
                "odneat".into(),
            ],
            group_sizes: vec![10, 15, 20],
            arenas: vec!["2x5".into(), "4x4".into()],
            runs_per_config: 30,
            base_seed: 1,
            run_timeout_secs: None,
            config: SimConfig::default(),
        }
    }
}

/// One cell of the plan's cross product.
#[derive(Debug, Clone, Copy)]
pub struct ConfigCell {
    pub config_id: u32,
    pub controller: ControllerKind,
    pub n_robots: u32,
    pub arena: ArenaSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Panicked,
    TimedOut,
}

/// Per-run outcome, one CSV row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_id: u32,
    pub controller: ControllerKind,
    pub arena_width: f64,
    pub arena_height: f64,
    pub n_robots: u32,
    pub run_index: u32,
    pub seed: u64,
    /// Steps until connectivity, or max_steps when the run was cut off.
    pub steps_to_connectivity: u64,
    pub connected: bool,
    pub total_distance: f64,
    /// Controller replacements (odNEAT only, 0 otherwise).
    pub replacements: u64,
    /// Final deployed `nodes:connections` per robot, '|'-separated
    /// (odNEAT only, empty otherwise).
    pub genome_stats: String,
    pub status: RunStatus,
}

impl RunRecord {
    pub fn arena_label(&self) -> String {
        format!("{}x{}", self.arena_width, self.arena_height)
    }
}

/// Execute every run of the plan, `parallelism` runs at a time. Output
/// order and content are independent of the parallelism degree; a panic
/// inside one run marks that record failed and the batch continues.
pub fn run_experiment(plan: &ExperimentPlan, parallelism: usize) -> Result<Vec<RunRecord>> {
    plan.validate()?;
    let mut tasks = Vec::new();
    for cell in plan.configs() {
        let cfg = plan.sim_config(&cell);
        cfg.validate()?;
        for run_index in 0..plan.runs_per_config {
            tasks.push((cell, cfg.clone(), run_index));
        }
    }
    let timeout = plan.run_timeout_secs.map(Duration::from_secs);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("could not build thread pool: {e}")))?;
    let records: Vec<RunRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(cell, cfg, run_index)| {
                let seed = plan.run_seed(cell.config_id, *run_index);
                execute_one(cell, cfg, *run_index, seed, timeout)
            })
            .collect()
    });
    Ok(records)
}

fn execute_one(
    cell: &ConfigCell,
    cfg: &SimConfig,
    run_index: u32,
    seed: u64,
    timeout: Option<Duration>,
) -> RunRecord {
    let mut record = RunRecord {
        config_id: cell.config_id,
        controller: cell.controller,
        arena_width: cell.arena.width,
        arena_height: cell.arena.height,
        n_robots: cell.n_robots,
        run_index,
        seed,
        steps_to_connectivity: 0,
        connected: false,
        total_distance: 0.0,
        replacements: 0,
        genome_stats: String::new(),
        status: RunStatus::Ok,
    };
    let deadline = timeout.map(|t| Instant::now() + t);
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let mut sim = Simulation::new(cfg, seed)?;
        sim.run_with_deadline(deadline)
    }));
    match outcome {
        Ok(Ok(run)) => {
            record.steps_to_connectivity = run.steps_to_connectivity;
            record.connected = run.connected;
            record.total_distance = run.total_distance;
            record.replacements = run.replacements;
            record.genome_stats = run
                .genome_stats
                .iter()
                .map(|(n, c)| format!("{n}:{c}"))
                .collect::<Vec<_>>()
                .join("|");
        }
        Ok(Err(Error::Timeout { step })) => {
            record.status = RunStatus::TimedOut;
            record.steps_to_connectivity = step;
        }
        Ok(Err(_)) | Err(_) => record.status = RunStatus::Panicked,
    }
    record
}

pub fn records_to_csv(records: &[RunRecord]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for record in records {
        writer
            .serialize(record)
            .map_err(|e| Error::Serde(format!("csv: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Serde(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Serde(format!("csv: {e}")))
}

pub fn records_from_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Serde(format!("csv: {e}"))))
        .collect()
}

/// min / q1 / median / q3 / max / mean of a sample (linear-interpolation
/// quantiles).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiveNum {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn five_num(values: &[f64]) -> FiveNum {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    FiveNum {
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        mean: stats::mean(values),
    }
}

/// Linear interpolation between order statistics: rank h = (n-1)p.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - h.floor()) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub config_id: u32,
    pub controller: ControllerKind,
    pub arena: String,
    pub n_robots: u32,
    pub runs: usize,
    pub failed_runs: usize,
    /// Fraction of runs that connected before the cutoff.
    pub success_rate: f64,
    pub steps: FiveNum,
    pub distance: FiveNum,
}

/// Welch comparison of two controllers' steps-to-connectivity at one
/// (group size, arena) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub arena: String,
    pub n_robots: u32,
    pub controller_a: ControllerKind,
    pub controller_b: ControllerKind,
    pub welch: WelchResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryReport {
    pub configs: Vec<ConfigSummary>,
    pub comparisons: Vec<Comparison>,
}

/// Per-config distributions plus odNEAT-vs-preprogrammed Welch tests for
/// every (group size, arena) cell that has both.
pub fn summarize(records: &[RunRecord]) -> Result<SummaryReport> {
    if records.is_empty() {
        return Err(Error::Stats("no records to summarize".into()));
    }
    let mut by_config: std::collections::BTreeMap<u32, Vec<&RunRecord>> = Default::default();
    for record in records {
        by_config.entry(record.config_id).or_default().push(record);
    }

    let mut configs = Vec::new();
    for (config_id, group) in &by_config {
        let ok: Vec<&&RunRecord> = group.iter().filter(|r| r.status == RunStatus::Ok).collect();
        if ok.is_empty() {
            return Err(Error::Stats(format!("config {config_id} has no successful runs")));
        }
        let steps: Vec<f64> = ok.iter().map(|r| r.steps_to_connectivity as f64).collect();
        let distance: Vec<f64> = ok.iter().map(|r| r.total_distance).collect();
        let first = group[0];
        configs.push(ConfigSummary {
            config_id: *config_id,
            controller: first.controller,
            arena: first.arena_label(),
            n_robots: first.n_robots,
            runs: group.len(),
            failed_runs: group.len() - ok.len(),
            success_rate: ok.iter().filter(|r| r.connected).count() as f64 / ok.len() as f64,
            steps: five_num(&steps),
            distance: five_num(&distance),
        });
    }

    let mut comparisons = Vec::new();
    let mut cells: Vec<(String, u32)> = configs
        .iter()
        .map(|c| (c.arena.clone(), c.n_robots))
        .collect();
    cells.sort();
    cells.dedup();
    for (arena, n_robots) in cells {
        let sample = |kind: ControllerKind| -> Vec<f64> {
            records
                .iter()
                .filter(|r| {
                    r.status == RunStatus::Ok
                        && r.controller == kind
                        && r.arena_label() == arena
                        && r.n_robots == n_robots
                })
                .map(|r| r.steps_to_connectivity as f64)
                .collect()
        };
        let odneat = sample(ControllerKind::OdNeat);
        let preprogrammed = sample(ControllerKind::Preprogrammed);
        if odneat.len() >= 2 && preprogrammed.len() >= 2 {
            comparisons.push(Comparison {
                arena: arena.clone(),
                n_robots,
                controller_a: ControllerKind::OdNeat,
                controller_b: ControllerKind::Preprogrammed,
                welch: welch_t_test(&odneat, &preprogrammed)?,
            });
        }
    }
    Ok(SummaryReport {
        configs,
        comparisons,
    })
}

/// Human-readable rendering of a summary report.
pub fn render_summary(report: &SummaryReport) -> String {
    let mut out = String::new();
    out.push_str(
        "config controller     arena  robots  runs  success  steps(min/med/max)        distance(med)\n",
    );
    for c in &report.configs {
        out.push_str(&format!(
            "{:>6} {:<14} {:<6} {:>6}  {:>4}  {:>6.0}%  {:>7.0}/{:>7.0}/{:>7.0}   {:>10.2}\n",
            c.config_id,
            c.controller.as_str(),
            c.arena,
            c.n_robots,
            c.runs,
            c.success_rate * 100.0,
            c.steps.min,
            c.steps.median,
            c.steps.max,
            c.distance.median,
        ));
    }
    if !report.comparisons.is_empty() {
        out.push_str("\nWelch two-sample t-tests on steps-to-connectivity:\n");
        for cmp in &report.comparisons {
            out.push_str(&format!(
                "  {} @ {} robots: {} vs {}: t={:.4}, df={:.2}, p={:.5}{}\n",
                cmp.arena,
                cmp.n_robots,
                cmp.controller_a.as_str(),
                cmp.controller_b.as_str(),
                cmp.welch.t_statistic,
                cmp.welch.degrees_of_freedom,
                cmp.welch.p_value,
                if cmp.welch.degenerate { " (degenerate)" } else { "" },
            ));
        }
    }
    out
}
