//! Output files: manifests, NDJSON logs, topology snapshots.
//!
//! Every artifact-producing command writes `manifest.toml` before any
//! stepping starts; the manifest carries the tool version, base seed, and
//! the fully resolved configuration, which is enough to reproduce the run
//! bit for bit (`created_unix` is the one field excluded from that claim).

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use swarmlink_core::error::Error;
use swarmlink_core::experiment::ExperimentPlan;
use swarmlink_core::export::{to_dot, TopologySnapshot};
use swarmlink_core::SimConfig;

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    created_unix: u64,
    command: &'a str,
    base_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    plan: Option<PlanEcho>,
    config: &'a SimConfig,
}

#[derive(Serialize)]
struct PlanEcho {
    controllers: Vec<String>,
    group_sizes: Vec<u32>,
    arenas: Vec<String>,
    runs_per_config: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    run_timeout_secs: Option<u64>,
}

pub fn write_manifest(
    dir: &Path,
    command: &str,
    base_seed: u64,
    cfg: &SimConfig,
    plan: Option<&ExperimentPlan>,
) -> Result<(), Error> {
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        command,
        base_seed,
        plan: plan.map(|p| PlanEcho {
            controllers: p.controllers.iter().map(|c| c.as_str().into()).collect(),
            group_sizes: p.group_sizes.clone(),
            arenas: p.arenas.iter().map(|a| a.label()).collect(),
            runs_per_config: p.runs_per_config,
            run_timeout_secs: p.run_timeout_secs,
        }),
        config: cfg,
    };
    let text = toml::to_string_pretty(&manifest).map_err(|e| Error::Serde(e.to_string()))?;
    std::fs::write(dir.join("manifest.toml"), text)?;
    Ok(())
}

pub fn write_ndjson<T: Serialize>(path: &Path, items: &[T]) -> Result<(), Error> {
    let file = std::fs::File::create(path)?;
    let mut writer = std::io::BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| Error::Serde(e.to_string()))?;
        writeln!(writer, "{line}")?;
    }
    writer.flush()?;
    Ok(())
}

/// One `<robot>_<step>.dot` plus `<robot>_<step>.genome.json` per snapshot.
pub fn write_snapshots(dir: &Path, snapshots: &[TopologySnapshot]) -> Result<(), Error> {
    for snapshot in snapshots {
        let stem = snapshot.file_stem();
        std::fs::write(dir.join(format!("{stem}.dot")), to_dot(&snapshot.genome))?;
        std::fs::write(
            dir.join(format!("{stem}.genome.json")),
            snapshot.genome.to_canonical_json(),
        )?;
    }
    Ok(())
}
