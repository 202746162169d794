//! Graphviz DOT emission of network topologies and run-time snapshots.
//!
//! Output is byte-stable for a given genome: node statements are emitted
//! in id order, edges in innovation order, weights rounded to three
//! decimals. Inputs (and the bias) rank at the top, outputs at the bottom,
//! hidden nodes float in between, which renders arbitrary evolved
//! topologies legibly.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neat::{Genome, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DotOptions {
    /// Render disabled connections dashed instead of omitting them;
    /// disabled history shows how a topology evolved.
    pub show_disabled: bool,
}

impl Default for DotOptions {
    fn default() -> Self {
        DotOptions { show_disabled: true }
    }
}

/// Render a genome as a DOT digraph.
pub fn to_dot(genome: &Genome) -> String {
    to_dot_with(genome, &DotOptions::default())
}

pub fn to_dot_with(genome: &Genome, options: &DotOptions) -> String {
    let mut nodes = genome.nodes.clone();
    nodes.sort_by_key(|n| n.id);
    let mut edges = genome.connections.clone();
    edges.sort_by_key(|g| g.innovation);

    let mut out = String::new();
    out.push_str("digraph genome {\n");
    out.push_str("  rankdir=TB;\n");
    out.push_str("  node [fontsize=10];\n");

    let rank_line = |kinds: &[NodeKind]| {
        let ids: Vec<String> = nodes
            .iter()
            .filter(|n| kinds.contains(&n.kind))
            .map(|n| format!("n{}", n.id))
            .collect();
        ids.join("; ")
    };
    let _ = writeln!(
        out,
        "  {{ rank=min; {}; }}",
        rank_line(&[NodeKind::Input, NodeKind::Bias])
    );
    let _ = writeln!(out, "  {{ rank=max; {}; }}", rank_line(&[NodeKind::Output]));

    for node in &nodes {
        let shape = match node.kind {
            NodeKind::Input => "box",
            NodeKind::Output => "doublecircle",
            NodeKind::Hidden => "circle",
            NodeKind::Bias => "diamond",
        };
        let _ = writeln!(
            out,
            "  n{} [label=\"{} {}\", shape={}];",
            node.id,
            node.id,
            node.kind.short(),
            shape
        );
    }
    for edge in &edges {
        if !edge.enabled && !options.show_disabled {
            continue;
        }
        let style = if edge.enabled { "" } else { ", style=dashed" };
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{:.3}\"{}];",
            edge.from, edge.to, edge.weight, style
        );
    }
    out.push_str("}\n");
    out
}

/// One captured topology: which robot, at which step, carrying what genome.
#[derive(Debug, Clone)]
pub struct TopologySnapshot {
    pub robot: u32,
    pub step: u64,
    pub genome: Genome,
}

impl TopologySnapshot {
    /// `<robot>_<step>` file stem used for both .dot and .genome.json.
    pub fn file_stem(&self) -> String {
        format!("r{}_{}", self.robot, self.step)
    }
}

/// When to capture topology snapshots during an odNEAT run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnapshotPolicy {
    pub start: bool,
    pub end: bool,
    /// Additionally snapshot every n steps; 0 disables periodic capture.
    pub every_n_steps: u64,
}

impl Default for SnapshotPolicy {
    fn default() -> Self {
        SnapshotPolicy {
            start: true,
            end: true,
            every_n_steps: 0,
        }
    }
}

impl SnapshotPolicy {
    /// Periodic/start captures, decided while the run progresses; the end
    /// capture happens when the run finishes.
    pub fn due_during_run(&self, step: u64) -> bool {
        if step == 0 {
            return self.start;
        }
        self.every_n_steps > 0 && step % self.every_n_steps == 0
    }
}

/// Parse a snapshot file stem of the form `r<robot>_<step>`.
pub fn parse_snapshot_stem(stem: &str) -> Result<(u32, u64)> {
    let rest = stem
        .strip_prefix('r')
        .ok_or_else(|| Error::Config(format!("not a snapshot file stem: {stem}")))?;
    let (robot, step) = rest
        .split_once('_')
        .ok_or_else(|| Error::Config(format!("not a snapshot file stem: {stem}")))?;
    Ok((
        robot
            .parse()
            .map_err(|_| Error::Config(format!("bad robot id in {stem}")))?,
        step.parse()
            .map_err(|_| Error::Config(format!("bad step in {stem}")))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neat::{minimal_genome, mutate, InnovationRegistry, NeatParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_genome(grow: usize) -> Genome {
        let mut registry = InnovationRegistry::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = NeatParams::default();
        let mut g = minimal_genome(&mut registry, &mut rng, &params, 0);
        for _ in 0..grow {
            g = mutate(&g, &mut registry, &mut rng, &params);
        }
        g
    }

    /// Tiny independent DOT checker: validates the statement shapes this
    /// emitter may produce and returns (node statements, edge statements).
    fn check_dot_grammar(text: &str) -> (usize, usize) {
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("digraph genome {"));
        let mut nodes = 0;
        let mut edges = 0;
        let mut closed = false;
        for line in lines {
            let line = line.trim();
            if line == "}" {
                closed = true;
                continue;
            }
            assert!(!closed, "statement after closing brace");
            if line.starts_with("{ rank=") {
                assert!(line.ends_with("; }"), "malformed rank block: {line}");
                continue;
            }
            assert!(line.ends_with(';'), "unterminated statement: {line}");
            if line.starts_with("rankdir") || line.starts_with("node ") {
                continue;
            }
            if line.contains("->") {
                let (tail, attrs) = line.split_once('[').expect("edge attrs");
                let parts: Vec<&str> = tail.split("->").collect();
                assert_eq!(parts.len(), 2, "edge with one arrow: {line}");
                for p in parts {
                    let p = p.trim();
                    assert!(p.starts_with('n') && p[1..].chars().all(|c| c.is_ascii_digit()));
                }
                assert!(attrs.contains("label=\""));
                edges += 1;
            } else if line.starts_with('n') {
                assert!(line.contains("[label=\"") && line.contains("shape="));
                nodes += 1;
            } else {
                panic!("unrecognized statement: {line}");
            }
        }
        assert!(closed, "digraph never closed");
        (nodes, edges)
    }

    #[test]
    fn minimal_genome_statement_counts() {
        let g = sample_genome(0);
        let dot = to_dot(&g);
        let (nodes, edges) = check_dot_grammar(&dot);
        assert_eq!(nodes, 10);
        assert_eq!(edges, 16);
    }

    #[test]
    fn output_is_byte_stable() {
        let g = sample_genome(25);
        assert_eq!(to_dot(&g), to_dot(&g));
        // and stable under gene reordering of an equal genome
        let mut shuffled = g.clone();
        shuffled.connections.reverse();
        shuffled.nodes.reverse();
        assert_eq!(to_dot(&g), to_dot(&shuffled));
    }

    #[test]
    fn evolved_genome_parses_and_roundtrips_counts() {
        let g = sample_genome(40);
        let dot = to_dot(&g);
        let (nodes, edges) = check_dot_grammar(&dot);
        assert_eq!(nodes, g.nodes.len());
        assert_eq!(edges, g.connections.len());
    }

    #[test]
    fn disabled_edges_can_be_omitted() {
        let mut g = sample_genome(0);
        g.connections[3].enabled = false;
        g.connections[9].enabled = false;
        let dashed = to_dot(&g);
        assert_eq!(dashed.matches("style=dashed").count(), 2);
        let omitted = to_dot_with(&g, &DotOptions { show_disabled: false });
        let (_, edges) = check_dot_grammar(&omitted);
        assert_eq!(edges, 14);
        assert!(!omitted.contains("style=dashed"));
    }

    #[test]
    fn snapshot_policy_schedule() {
        let p = SnapshotPolicy::default();
        assert!(p.due_during_run(0));
        assert!(!p.due_during_run(50));

        let periodic = SnapshotPolicy {
            start: true,
            end: true,
            every_n_steps: 25,
        };
        assert!(periodic.due_during_run(0));
        assert!(periodic.due_during_run(25));
        assert!(periodic.due_during_run(50));
        assert!(!periodic.due_during_run(26));

        let no_start = SnapshotPolicy {
            start: false,
            end: true,
            every_n_steps: 0,
        };
        assert!(!no_start.due_during_run(0));
    }

    #[test]
    fn snapshot_stem_roundtrip() {
        let snap = TopologySnapshot {
            robot: 12,
            step: 9_950,
            genome: sample_genome(0),
        };
        assert_eq!(snap.file_stem(), "r12_9950");
        assert_eq!(parse_snapshot_stem("r12_9950").unwrap(), (12, 9_950));
        assert!(parse_snapshot_stem("x1_2").is_err());
        assert!(parse_snapshot_stem("r1-2").is_err());
    }
}
