//! NEAT-style genome encoding and operators.
//!
//! Genomes encode feed-forward networks with a fixed interface: seven
//! proximity inputs (node ids 0-6), two wheel outputs (ids 7-8), and an
//! optional bias source (id 9). Structural genes carry innovation ids from
//! a per-robot [`InnovationRegistry`], so the same structural change made
//! twice by one robot aligns in crossover. Networks only grow: mutation
//! adds nodes and connections but never removes them, and acyclicity is
//! maintained over all genes (disabled ones included) so re-enabling a
//! gene can never create a cycle.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::fnv1a64;

pub const N_INPUTS: usize = 7;
pub const N_OUTPUTS: usize = 2;
pub const OUTPUT_IDS: [u32; 2] = [7, 8];
pub const BIAS_ID: u32 = 9;
pub const FIRST_HIDDEN_ID: u32 = 10;
const GENOME_FORMAT_VERSION: u32 = 1;
const ADD_CONNECTION_ATTEMPTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Input,
    Output,
    Hidden,
    Bias,
}

impl NodeKind {
    pub fn short(&self) -> &'static str {
        match self {
            NodeKind::Input => "in",
            NodeKind::Output => "out",
            NodeKind::Hidden => "hidden",
            NodeKind::Bias => "bias",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: u32,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub innovation: u64,
    pub from: u32,
    pub to: u32,
    pub weight: f64,
    pub enabled: bool,
}

/// Evolvable controller encoding: node genes plus weighted connection
/// genes with innovation ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
    /// Current fitness estimate (mean energy over deployment).
    pub fitness: f64,
    /// Id of the robot that created this genome.
    pub owner: u32,
}

/// Weight, mutation, and compatibility settings; defaults follow common
/// NEAT practice.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NeatParams {
    pub use_bias: bool,
    pub weight_bound: f64,
    pub sigmoid_slope: f64,
    pub weight_perturb_prob: f64,
    pub weight_sigma: f64,
    pub weight_reset_prob: f64,
    pub add_connection_prob: f64,
    pub add_node_prob: f64,
    pub reenable_prob: f64,
    pub compat_excess: f64,
    pub compat_disjoint: f64,
    pub compat_weight: f64,
}

impl Default for NeatParams {
    fn default() -> Self {
        NeatParams {
            use_bias: true,
            weight_bound: 5.0,
            sigmoid_slope: 4.9,
            weight_perturb_prob: 0.8,
            weight_sigma: 0.25,
            weight_reset_prob: 0.1,
            add_connection_prob: 0.1,
            add_node_prob: 0.05,
            reenable_prob: 0.25,
            compat_excess: 1.0,
            compat_disjoint: 1.0,
            compat_weight: 0.4,
        }
    }
}

impl NeatParams {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("weight_perturb_prob", self.weight_perturb_prob),
            ("weight_reset_prob", self.weight_reset_prob),
            ("add_connection_prob", self.add_connection_prob),
            ("add_node_prob", self.add_node_prob),
            ("reenable_prob", self.reenable_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0, 1]")));
            }
        }
        if self.weight_perturb_prob + self.weight_reset_prob > 1.0 {
            return Err(Error::Config(
                "weight_perturb_prob + weight_reset_prob must not exceed 1".into(),
            ));
        }
        if !(self.weight_bound > 0.0) || !(self.weight_sigma > 0.0) || !(self.sigmoid_slope > 0.0)
        {
            return Err(Error::Config(
                "weight_bound, weight_sigma, sigmoid_slope must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-robot bookkeeping of structural changes: the same change always
/// receives the same ids within one registry's lifetime.
#[derive(Debug, Clone)]
pub struct InnovationRegistry {
    connection_ids: HashMap<(u32, u32), u64>,
    split_ids: HashMap<(u32, u32), (u32, u64, u64)>,
    next_innovation: u64,
    next_node_id: u32,
}

impl Default for InnovationRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl InnovationRegistry {
    pub fn new() -> Self {
        InnovationRegistry {
            connection_ids: HashMap::new(),
            split_ids: HashMap::new(),
            next_innovation: 0,
            next_node_id: FIRST_HIDDEN_ID,
        }
    }

    /// Innovation id for adding connection (from, to).
    pub fn connection_innovation(&mut self, from: u32, to: u32) -> u64 {
        if let Some(&id) = self.connection_ids.get(&(from, to)) {
            return id;
        }
        let id = self.next_innovation;
        self.next_innovation += 1;
        self.connection_ids.insert((from, to), id);
        id
    }

    /// (new node id, incoming innovation, outgoing innovation) for
    /// splitting connection (from, to).
    pub fn node_split(&mut self, from: u32, to: u32) -> (u32, u64, u64) {
        if let Some(&ids) = self.split_ids.get(&(from, to)) {
            return ids;
        }
        let ids = self.alloc_split();
        self.split_ids.insert((from, to), ids);
        ids
    }

    /// Uncached split ids, for the rare second split of the same connection
    /// within one genome (the cached node id would collide).
    pub fn node_split_fresh(&mut self) -> (u32, u64, u64) {
        self.alloc_split()
    }

    /// Uncached innovation id. Needed when the cached id for a change
    /// collides with a gene the genome received from another robot's
    /// registry; ids stay unique within the genome at the cost of cache
    /// alignment for that one gene.
    pub fn fresh_innovation(&mut self) -> u64 {
        let id = self.next_innovation;
        self.next_innovation += 1;
        id
    }

    fn alloc_split(&mut self) -> (u32, u64, u64) {
        let node = self.next_node_id;
        self.next_node_id += 1;
        let into = self.next_innovation;
        let out = self.next_innovation + 1;
        self.next_innovation += 2;
        (node, into, out)
    }
}

/// Simplest possible topology: every input (and the bias) connected to
/// both outputs, weights uniform in [-1, 1], no hidden nodes.
pub fn minimal_genome<R: Rng>(
    registry: &mut InnovationRegistry,
    rng: &mut R,
    params: &NeatParams,
    owner: u32,
) -> Genome {
    let mut nodes: Vec<NodeGene> = (0..N_INPUTS as u32)
        .map(|id| NodeGene {
            id,
            kind: NodeKind::Input,
        })
        .collect();
    for id in OUTPUT_IDS {
        nodes.push(NodeGene {
            id,
            kind: NodeKind::Output,
        });
    }
    let mut sources: Vec<u32> = (0..N_INPUTS as u32).collect();
    if params.use_bias {
        nodes.push(NodeGene {
            id: BIAS_ID,
            kind: NodeKind::Bias,
        });
        sources.push(BIAS_ID);
    }
    let mut connections = Vec::with_capacity(sources.len() * N_OUTPUTS);
    for &from in &sources {
        for to in OUTPUT_IDS {
            connections.push(ConnectionGene {
                innovation: registry.connection_innovation(from, to),
                from,
                to,
                weight: rng.gen_range(-1.0..=1.0),
                enabled: true,
            });
        }
    }
    Genome {
        nodes,
        connections,
        fitness: 0.0,
        owner,
    }
}

impl Genome {
    /// Structural sanity for freshly built or received genomes: fixed
    /// interface, unique ids, no edges into sources, acyclic over all genes.
    pub fn validate(&self, params: &NeatParams) -> std::result::Result<(), String> {
        let mut inputs = 0;
        let mut outputs = 0;
        let mut bias = 0;
        let mut ids = std::collections::HashSet::new();
        for node in &self.nodes {
            if !ids.insert(node.id) {
                return Err(format!("duplicate node id {}", node.id));
            }
            match node.kind {
                NodeKind::Input => {
                    inputs += 1;
                    if node.id as usize >= N_INPUTS {
                        return Err(format!("input node id {} outside 0..7", node.id));
                    }
                }
                NodeKind::Output => {
                    outputs += 1;
                    if !OUTPUT_IDS.contains(&node.id) {
                        return Err(format!("output node id {} not in 7..9", node.id));
                    }
                }
                NodeKind::Bias => {
                    bias += 1;
                    if node.id != BIAS_ID {
                        return Err(format!("bias node id {} != {BIAS_ID}", node.id));
                    }
                }
                NodeKind::Hidden => {
                    if node.id < FIRST_HIDDEN_ID {
                        return Err(format!("hidden node id {} collides with interface", node.id));
                    }
                }
            }
        }
        if inputs != N_INPUTS || outputs != N_OUTPUTS {
            return Err(format!("interface must be 7 inputs / 2 outputs, got {inputs}/{outputs}"));
        }
        let expected_bias = if params.use_bias { 1 } else { 0 };
        if bias != expected_bias {
            return Err(format!("expected {expected_bias} bias node(s), got {bias}"));
        }

        let kind_of: HashMap<u32, NodeKind> =
            self.nodes.iter().map(|n| (n.id, n.kind)).collect();
        let mut innovations = std::collections::HashSet::new();
        let mut enabled_pairs = std::collections::HashSet::new();
        for gene in &self.connections {
            if !innovations.insert(gene.innovation) {
                return Err(format!("duplicate innovation id {}", gene.innovation));
            }
            if gene.enabled && !enabled_pairs.insert((gene.from, gene.to)) {
                return Err(format!("duplicate enabled pair {}->{}", gene.from, gene.to));
            }
            match kind_of.get(&gene.to) {
                None => return Err(format!("connection into unknown node {}", gene.to)),
                Some(NodeKind::Input) | Some(NodeKind::Bias) => {
                    return Err(format!("connection into source node {}", gene.to));
                }
                _ => {}
            }
            if !kind_of.contains_key(&gene.from) {
                return Err(format!("connection from unknown node {}", gene.from));
            }
            if !gene.weight.is_finite() {
                return Err("non-finite weight".into());
            }
        }
        if self.topological_order().is_none() {
            return Err("connection genes form a cycle".into());
        }
        Ok(())
    }

    /// Kahn's algorithm over all connection genes; `None` on a cycle.
    fn topological_order(&self) -> Option<Vec<u32>> {
        let index: HashMap<u32, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let mut in_degree = vec![0usize; self.nodes.len()];
        let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for gene in &self.connections {
            let (Some(&f), Some(&t)) = (index.get(&gene.from), index.get(&gene.to)) else {
                return None;
            };
            in_degree[t] += 1;
            out_edges[f].push(t);
        }
        let mut ready: Vec<usize> = (0..self.nodes.len()).filter(|&i| in_degree[i] == 0).collect();
        ready.sort_by_key(|&i| self.nodes[i].id);
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(i) = ready.pop() {
            order.push(self.nodes[i].id);
            for &t in &out_edges[i] {
                in_degree[t] -= 1;
                if in_degree[t] == 0 {
                    ready.push(t);
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    /// True if adding edge from->to would close a cycle (path to->from
    /// exists over any genes) or duplicate an existing pair.
    fn edge_is_legal(&self, from: u32, to: u32) -> bool {
        if from == to {
            return false;
        }
        if self.connections.iter().any(|g| g.from == from && g.to == to) {
            return false;
        }
        // DFS from `to` looking for `from`
        let mut stack = vec![to];
        let mut seen = std::collections::HashSet::new();
        while let Some(n) = stack.pop() {
            if n == from {
                return false;
            }
            if !seen.insert(n) {
                continue;
            }
            for gene in &self.connections {
                if gene.from == n {
                    stack.push(gene.to);
                }
            }
        }
        true
    }

    /// Structure signature ignoring weights: sorted (innovation, from, to,
    /// enabled) tuples. Used to detect topology changes in tests.
    pub fn topology_signature(&self) -> Vec<(u64, u32, u32, bool)> {
        let mut sig: Vec<_> = self
            .connections
            .iter()
            .map(|g| (g.innovation, g.from, g.to, g.enabled))
            .collect();
        sig.sort_unstable();
        sig
    }

    pub fn hidden_node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Hidden).count()
    }

    pub fn enabled_connection_count(&self) -> usize {
        self.connections.iter().filter(|g| g.enabled).count()
    }

    /// Canonical, versioned, byte-stable serialization: nodes sorted by id,
    /// connections by innovation id.
    pub fn to_canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.nodes.sort_by_key(|n| n.id);
        copy.connections.sort_by_key(|g| g.innovation);
        let file = GenomeFile {
            version: GENOME_FORMAT_VERSION,
            genome: copy,
        };
        serde_json::to_string(&file).expect("genome serializes")
    }

    pub fn from_json(text: &str) -> Result<Genome> {
        let file: GenomeFile =
            serde_json::from_str(text).map_err(|e| Error::Serde(format!("genome: {e}")))?;
        if file.version != GENOME_FORMAT_VERSION {
            return Err(Error::Serde(format!(
                "unsupported genome format version {}",
                file.version
            )));
        }
        Ok(file.genome)
    }

    /// Content fingerprint for event logs.
    pub fn content_hash(&self) -> u64 {
        fnv1a64(self.to_canonical_json().as_bytes())
    }
}

#[derive(Serialize, Deserialize)]
struct GenomeFile {
    version: u32,
    genome: Genome,
}

/// Apply weight and structural mutations with the configured probabilities.
/// Structural changes consult the registry so repeats align by innovation.
pub fn mutate<R: Rng>(
    genome: &Genome,
    registry: &mut InnovationRegistry,
    rng: &mut R,
    params: &NeatParams,
) -> Genome {
    let mut child = genome.clone();

    // per-gene: perturb, reset, or leave, from a single draw
    let normal = Normal::new(0.0, params.weight_sigma).expect("sigma validated positive");
    for gene in &mut child.connections {
        let u: f64 = rng.gen();
        if u < params.weight_perturb_prob {
            gene.weight += normal.sample(rng);
        } else if u < params.weight_perturb_prob + params.weight_reset_prob {
            gene.weight = rng.gen_range(-1.0..=1.0);
        }
        gene.weight = gene.weight.clamp(-params.weight_bound, params.weight_bound);
    }

    if rng.gen::<f64>() < params.add_connection_prob {
        add_random_connection(&mut child, registry, rng);
    }

    if rng.gen::<f64>() < params.add_node_prob {
        split_random_connection(&mut child, registry, rng);
    }

    child
}

/// Add one random legal (acyclic, non-duplicate) connection; silently skip
/// when no legal pair turns up within the attempt budget.
fn add_random_connection<R: Rng>(
    genome: &mut Genome,
    registry: &mut InnovationRegistry,
    rng: &mut R,
) {
    let targets: Vec<u32> = genome
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Output | NodeKind::Hidden))
        .map(|n| n.id)
        .collect();
    for _ in 0..ADD_CONNECTION_ATTEMPTS {
        let from = genome.nodes[rng.gen_range(0..genome.nodes.len())].id;
        let to = targets[rng.gen_range(0..targets.len())];
        if !genome.edge_is_legal(from, to) {
            continue;
        }
        let mut innovation = registry.connection_innovation(from, to);
        while genome.connections.iter().any(|g| g.innovation == innovation) {
            // id taken by a gene from another robot's registry
            innovation = registry.fresh_innovation();
        }
        genome.connections.push(ConnectionGene {
            innovation,
            from,
            to,
            weight: rng.gen_range(-1.0..=1.0),
            enabled: true,
        });
        return;
    }
}

/// Split a random enabled connection: the old gene is disabled, the
/// incoming half gets weight 1.0, the outgoing half inherits the weight.
fn split_random_connection<R: Rng>(
    genome: &mut Genome,
    registry: &mut InnovationRegistry,
    rng: &mut R,
) {
    let enabled: Vec<usize> = genome
        .connections
        .iter()
        .enumerate()
        .filter(|(_, g)| g.enabled)
        .map(|(i, _)| i)
        .collect();
    if enabled.is_empty() {
        return;
    }
    let pick = enabled[rng.gen_range(0..enabled.len())];
    let (from, to, weight) = {
        let gene = &mut genome.connections[pick];
        gene.enabled = false;
        (gene.from, gene.to, gene.weight)
    };
    let (mut node_id, mut innov_in, mut innov_out) = registry.node_split(from, to);
    let collides = |g: &Genome, node: u32, a: u64, b: u64| {
        g.nodes.iter().any(|n| n.id == node)
            || g.connections
                .iter()
                .any(|c| c.innovation == a || c.innovation == b)
    };
    while collides(genome, node_id, innov_in, innov_out) {
        // repeated split of the same connection, or ids taken by genes from
        // another robot's registry; allocate fresh until clear
        (node_id, innov_in, innov_out) = registry.node_split_fresh();
    }
    genome.nodes.push(NodeGene {
        id: node_id,
        kind: NodeKind::Hidden,
    });
    genome.connections.push(ConnectionGene {
        innovation: innov_in,
        from,
        to: node_id,
        weight: 1.0,
        enabled: true,
    });
    genome.connections.push(ConnectionGene {
        innovation: innov_out,
        from: node_id,
        to,
        weight,
        enabled: true,
    });
}

/// Recombine two genomes. Matching genes (same innovation id and endpoints)
/// take their weight from either parent uniformly; disjoint and excess
/// genes come from the fitter parent (ties favor `a`). A gene disabled in
/// either parent is re-enabled in the child with probability
/// `reenable_prob`.
pub fn crossover<R: Rng>(a: &Genome, b: &Genome, rng: &mut R, params: &NeatParams) -> Genome {
    let (fitter, other) = if b.fitness > a.fitness { (b, a) } else { (a, b) };
    let other_by_innovation: HashMap<u64, &ConnectionGene> =
        other.connections.iter().map(|g| (g.innovation, g)).collect();

    let mut connections = Vec::with_capacity(fitter.connections.len());
    for gene in &fitter.connections {
        let mut child_gene = *gene;
        match other_by_innovation.get(&gene.innovation) {
            Some(og) if og.from == gene.from && og.to == gene.to => {
                if rng.gen::<bool>() {
                    child_gene.weight = og.weight;
                }
                let disabled_in_either = !gene.enabled || !og.enabled;
                child_gene.enabled =
                    !disabled_in_either || rng.gen::<f64>() < params.reenable_prob;
            }
            _ => {
                if !child_gene.enabled {
                    child_gene.enabled = rng.gen::<f64>() < params.reenable_prob;
                }
            }
        }
        connections.push(child_gene);
    }
    Genome {
        nodes: fitter.nodes.clone(),
        connections,
        fitness: 0.0,
        owner: fitter.owner,
    }
}

/// NEAT compatibility distance:
/// `(c1*excess + c2*disjoint) / N + c3 * mean_weight_diff`, with N the
/// larger connection-gene count, taken as 1 while both genomes have fewer
/// than 20 genes. Genes match when innovation id and endpoints agree;
/// colliding ids from different registries count as disjoint.
pub fn compatibility(a: &Genome, b: &Genome, params: &NeatParams) -> f64 {
    let a_by: HashMap<u64, &ConnectionGene> =
        a.connections.iter().map(|g| (g.innovation, g)).collect();
    let b_by: HashMap<u64, &ConnectionGene> =
        b.connections.iter().map(|g| (g.innovation, g)).collect();
    let max_a = a.connections.iter().map(|g| g.innovation).max();
    let max_b = b.connections.iter().map(|g| g.innovation).max();

    let mut matching = 0usize;
    let mut weight_diff = 0.0;
    let mut disjoint = 0usize;
    let mut excess = 0usize;
    for gene in &a.connections {
        match b_by.get(&gene.innovation) {
            Some(og) if og.from == gene.from && og.to == gene.to => {
                matching += 1;
                weight_diff += (gene.weight - og.weight).abs();
            }
            _ => {
                if max_b.is_none() || gene.innovation > max_b.unwrap() {
                    excess += 1;
                } else {
                    disjoint += 1;
                }
            }
        }
    }
    for gene in &b.connections {
        match a_by.get(&gene.innovation) {
            Some(og) if og.from == gene.from && og.to == gene.to => {}
            _ => {
                if max_a.is_none() || gene.innovation > max_a.unwrap() {
                    excess += 1;
                } else {
                    disjoint += 1;
                }
            }
        }
    }

    let n = if a.connections.len() < 20 && b.connections.len() < 20 {
        1.0
    } else {
        a.connections.len().max(b.connections.len()) as f64
    };
    let mean_diff = if matching > 0 {
        weight_diff / matching as f64
    } else {
        0.0
    };
    (params.compat_excess * excess as f64 + params.compat_disjoint * disjoint as f64) / n
        + params.compat_weight * mean_diff
}

/// Single feed-forward pass. Non-source nodes apply the steepened sigmoid
/// `1 / (1 + e^(-slope * x))` to their weighted input sum; a node with no
/// enabled incoming connection reads sigmoid(0) = 0.5. Returns the two
/// output activations.
pub fn activate(genome: &Genome, inputs: &[f64; N_INPUTS], params: &NeatParams) -> [f64; 2] {
    let index: HashMap<u32, usize> =
        genome.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let n = genome.nodes.len();

    // incoming enabled connections per node, summed in innovation order
    let mut incoming: Vec<Vec<&ConnectionGene>> = vec![Vec::new(); n];
    let mut in_degree = vec![0usize; n];
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for gene in genome.connections.iter().filter(|g| g.enabled) {
        let f = index[&gene.from];
        let t = index[&gene.to];
        incoming[t].push(gene);
        in_degree[t] += 1;
        out_edges[f].push(t);
    }
    for list in &mut incoming {
        list.sort_by_key(|g| g.innovation);
    }

    let mut values = vec![0.0_f64; n];
    let mut ready: Vec<usize> = (0..n).filter(|&i| in_degree[i] == 0).collect();
    let mut processed = 0usize;
    while let Some(i) = ready.pop() {
        processed += 1;
        values[i] = match genome.nodes[i].kind {
            NodeKind::Input => inputs[genome.nodes[i].id as usize],
            NodeKind::Bias => 1.0,
            NodeKind::Hidden | NodeKind::Output => {
                let sum: f64 = incoming[i]
                    .iter()
                    .map(|g| g.weight * values[index[&g.from]])
                    .sum();
                steepened_sigmoid(sum, params.sigmoid_slope)
            }
        };
        for &t in &out_edges[i] {
            in_degree[t] -= 1;
            if in_degree[t] == 0 {
                ready.push(t);
            }
        }
    }
    debug_assert_eq!(processed, n, "genome invariant guarantees acyclicity");

    let mut outputs = [0.0; 2];
    for (k, id) in OUTPUT_IDS.iter().enumerate() {
        outputs[k] = values[index[id]];
    }
    outputs
}

pub fn steepened_sigmoid(x: f64, slope: f64) -> f64 {
    1.0 / (1.0 + (-slope * x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (InnovationRegistry, ChaCha8Rng, NeatParams) {
        (
            InnovationRegistry::new(),
            ChaCha8Rng::seed_from_u64(seed),
            NeatParams::default(),
        )
    }

    #[test]
    fn minimal_genome_shape() {
        let (mut registry, mut rng, params) = setup(1);
        let g = minimal_genome(&mut registry, &mut rng, &params, 0);
        assert_eq!(g.nodes.len(), 10);
        assert_eq!(g.connections.len(), 16);
        assert!(g.connections.iter().all(|c| c.enabled));
        assert!(g.connections.iter().all(|c| (-1.0..=1.0).contains(&c.weight)));
        assert_eq!(g.hidden_node_count(), 0);
        g.validate(&params).unwrap();
    }

    #[test]
    fn minimal_genome_without_bias() {
        let (mut registry, mut rng, mut params) = setup(1);
        params.use_bias = false;
        let g = minimal_genome(&mut registry, &mut rng, &params, 0);
        assert_eq!(g.nodes.len(), 9);
        assert_eq!(g.connections.len(), 14);
        g.validate(&params).unwrap();
    }

    #[test]
    fn same_registry_reuses_innovations() {
        let (mut registry, mut rng, params) = setup(2);
        let a = minimal_genome(&mut registry, &mut rng, &params, 0);
        let b = minimal_genome(&mut registry, &mut rng, &params, 0);
        let innov = |g: &Genome| g.connections.iter().map(|c| c.innovation).collect::<Vec<_>>();
        assert_eq!(innov(&a), innov(&b));
        assert_ne!(
            a.connections.iter().map(|c| c.weight).collect::<Vec<_>>(),
            b.connections.iter().map(|c| c.weight).collect::<Vec<_>>()
        );
    }

    #[test]
    fn activate_zero_weights_centers() {
        let (mut registry, mut rng, params) = setup(3);
        let mut g = minimal_genome(&mut registry, &mut rng, &params, 0);
        for c in &mut g.connections {
            c.weight = 0.0;
        }
        let out = activate(&g, &[0.3, 0.1, 0.9, 0.0, 0.5, 0.2, 0.7], &params);
        assert_eq!(out, [0.5, 0.5]);
    }

    #[test]
    fn activate_zero_inputs_reads_bias_only() {
        // hand evaluation: with all sensor inputs 0 only the bias
        // contributes, so output k = sigmoid(slope * w_bias_k)
        let (mut registry, mut rng, params) = setup(4);
        let g = minimal_genome(&mut registry, &mut rng, &params, 0);
        let out = activate(&g, &[0.0; 7], &params);
        for (k, &out_id) in OUTPUT_IDS.iter().enumerate() {
            let w_bias = g
                .connections
                .iter()
                .find(|c| c.from == BIAS_ID && c.to == out_id)
                .unwrap()
                .weight;
            let expected = 1.0 / (1.0 + (-4.9 * w_bias).exp());
            assert_abs_diff_eq!(out[k], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn activate_matches_hand_computed_two_layer_sum() {
        let (mut registry, mut rng, params) = setup(5);
        let mut g = minimal_genome(&mut registry, &mut rng, &params, 0);
        for (i, c) in g.connections.iter_mut().enumerate() {
            c.weight = 0.1 * (i as f64 + 1.0) * if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let inputs = [1.0; 7];
        let out = activate(&g, &inputs, &params);
        let mut sums = [0.0_f64; 2];
        for c in &g.connections {
            let v = if c.from == BIAS_ID { 1.0 } else { inputs[c.from as usize] };
            let k = if c.to == OUTPUT_IDS[0] { 0 } else { 1 };
            sums[k] += c.weight * v;
        }
        for k in 0..2 {
            assert_abs_diff_eq!(out[k], 1.0 / (1.0 + (-4.9 * sums[k]).exp()), epsilon = 1e-12);
        }
    }

    #[test]
    fn add_node_splits_by_the_book() {
        let (mut registry, mut rng, mut params) = setup(6);
        let g = minimal_genome(&mut registry, &mut rng, &params, 0);
        // force exactly one add-node and nothing else
        params.weight_perturb_prob = 0.0;
        params.weight_reset_prob = 0.0;
        params.add_connection_prob = 0.0;
        params.add_node_prob = 1.0;
        let child = mutate(&g, &mut registry, &mut rng, &params);
        assert_eq!(child.nodes.len(), 11);
        assert_eq!(child.connections.len(), 18);
        assert_eq!(child.enabled_connection_count(), 17);
        child.validate(&params).unwrap();
        let split = child.connections.iter().find(|c| !c.enabled).unwrap();
        let incoming = child
            .connections
            .iter()
            .find(|c| c.from == split.from && c.to >= FIRST_HIDDEN_ID)
            .unwrap();
        let outgoing = child
            .connections
            .iter()
            .find(|c| c.from == incoming.to && c.to == split.to)
            .unwrap();
        assert_eq!(incoming.weight, 1.0);
        assert_eq!(outgoing.weight, split.weight);
    }

    #[test]
    fn weight_only_mutation_keeps_topology() {
        let (mut registry, mut rng, mut params) = setup(7);
        let g = minimal_genome(&mut registry, &mut rng, &params, 0);
        params.add_connection_prob = 0.0;
        params.add_node_prob = 0.0;
        let child = mutate(&g, &mut registry, &mut rng, &params);
        assert_eq!(child.topology_signature(), g.topology_signature());
        assert_ne!(
            child.connections.iter().map(|c| c.weight).collect::<Vec<_>>(),
            g.connections.iter().map(|c| c.weight).collect::<Vec<_>>()
        );
    }

    #[test]
    fn self_crossover_preserves_topology() {
        let (mut registry, mut rng, params) = setup(8);
        let g = minimal_genome(&mut registry, &mut rng, &params, 0);
        let child = crossover(&g, &g, &mut rng, &params);
        assert_eq!(child.topology_signature(), g.topology_signature());
        assert_eq!(
            child.connections.iter().map(|c| c.weight).collect::<Vec<_>>(),
            g.connections.iter().map(|c| c.weight).collect::<Vec<_>>()
        );
    }

    #[test]
    fn crossover_picks_weights_from_either_parent() {
        let (mut registry, mut rng, params) = setup(9);
        let mut a = minimal_genome(&mut registry, &mut rng, &params, 0);
        let mut b = a.clone();
        for c in &mut a.connections {
            c.weight = 1.0;
        }
        for c in &mut b.connections {
            c.weight = -1.0;
        }
        a.fitness = 1.0;
        b.fitness = 2.0;
        let child = crossover(&a, &b, &mut rng, &params);
        assert_eq!(child.topology_signature(), a.topology_signature());
        assert!(child.connections.iter().all(|c| c.weight == 1.0 || c.weight == -1.0));
        assert!(child.connections.iter().any(|c| c.weight == 1.0));
        assert!(child.connections.iter().any(|c| c.weight == -1.0));
    }

    #[test]
    fn fitter_parent_contributes_excess_genes() {
        let (mut registry, mut rng, mut params) = setup(10);
        let base = minimal_genome(&mut registry, &mut rng, &params, 0);
        params.weight_perturb_prob = 0.0;
        params.weight_reset_prob = 0.0;
        params.add_connection_prob = 0.0;
        params.add_node_prob = 1.0;
        let mut a = mutate(&base, &mut registry, &mut rng, &params);
        a.fitness = 2.0;
        let mut b = base.clone();
        b.fitness = 1.0;
        let child = crossover(&a, &b, &mut rng, &params);
        assert_eq!(child.topology_signature().len(), 18);
        // and when the plain parent is fitter, the excess is dropped
        a.fitness = 0.5;
        let child = crossover(&a, &b, &mut rng, &params);
        assert_eq!(child.topology_signature().len(), 16);
    }

    #[test]
    fn compatibility_basics() {
        let (mut registry, mut rng, params) = setup(11);
        let g = minimal_genome(&mut registry, &mut rng, &params, 0);
        assert_eq!(compatibility(&g, &g, &params), 0.0);

        let mut shifted = g.clone();
        for c in &mut shifted.connections {
            c.weight += 0.5;
        }
        let delta = compatibility(&g, &shifted, &params);
        assert_abs_diff_eq!(delta, 0.5 * params.compat_weight, epsilon = 1e-12);
    }

    #[test]
    fn compatibility_counts_excess_and_disjoint() {
        let (mut registry, mut rng, mut params) = setup(12);
        let base = minimal_genome(&mut registry, &mut rng, &params, 0);
        params.weight_perturb_prob = 0.0;
        params.weight_reset_prob = 0.0;
        params.add_connection_prob = 0.0;
        params.add_node_prob = 1.0;
        let grown = mutate(&base, &mut registry, &mut rng, &params);
        // two new genes beyond base's max innovation, both genomes < 20 genes
        let delta = compatibility(&base, &grown, &params);
        assert_abs_diff_eq!(delta, 2.0 * params.compat_excess, epsilon = 1e-12);
        assert_abs_diff_eq!(
            compatibility(&grown, &base, &params),
            delta,
            epsilon = 1e-12
        );
    }

    #[test]
    fn compatibility_symmetry_fuzz() {
        let (mut registry, mut rng, params) = setup(13);
        let mut genomes = vec![minimal_genome(&mut registry, &mut rng, &params, 0)];
        for _ in 0..30 {
            let pick = rng.gen_range(0..genomes.len());
            let g = mutate(&genomes[pick].clone(), &mut registry, &mut rng, &params);
            genomes.push(g);
        }
        for i in 0..genomes.len() {
            for j in 0..genomes.len() {
                let d_ij = compatibility(&genomes[i], &genomes[j], &params);
                let d_ji = compatibility(&genomes[j], &genomes[i], &params);
                assert!((d_ij - d_ji).abs() <= 1e-12);
                assert!(d_ij >= 0.0);
            }
        }
    }

    #[test]
    fn mutation_chain_preserves_invariants() {
        let (mut registry, mut rng, params) = setup(14);
        let mut g = minimal_genome(&mut registry, &mut rng, &params, 0);
        for step in 0..500 {
            g = mutate(&g, &mut registry, &mut rng, &params);
            if let Err(e) = g.validate(&params) {
                panic!("invariant broken at step {step}: {e}");
            }
        }
        assert!(g.connections.len() >= 16);
    }

    #[test]
    fn cross_registry_mutation_stays_valid() {
        // Mutating genomes received from other robots must keep innovation
        // ids unique even though the local registry never issued them.
        let params = NeatParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut maker = InnovationRegistry::new();
        let mut local = InnovationRegistry::new();
        // skew the foreign registry so its ids collide with local choices
        let mut foreign = minimal_genome(&mut maker, &mut rng, &params, 1);
        for _ in 0..20 {
            foreign = mutate(&foreign, &mut maker, &mut rng, &params);
        }
        let mut g = foreign;
        for step in 0..200 {
            g = mutate(&g, &mut local, &mut rng, &params);
            if let Err(e) = g.validate(&params) {
                panic!("cross-registry invariant broken at step {step}: {e}");
            }
        }
    }

    #[test]
    fn mutation_replay_is_deterministic() {
        let params = NeatParams::default();
        let run = || {
            let mut registry = InnovationRegistry::new();
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let mut g = minimal_genome(&mut registry, &mut rng, &params, 3);
            for _ in 0..50 {
                g = mutate(&g, &mut registry, &mut rng, &params);
            }
            g.to_canonical_json()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn canonical_json_roundtrips_and_is_stable() {
        let (mut registry, mut rng, params) = setup(15);
        let mut g = minimal_genome(&mut registry, &mut rng, &params, 2);
        for _ in 0..10 {
            g = mutate(&g, &mut registry, &mut rng, &params);
        }
        let text = g.to_canonical_json();
        assert_eq!(text, g.to_canonical_json());
        let back = Genome::from_json(&text).unwrap();
        back.validate(&params).unwrap();
        assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn hidden_id_relabeling_does_not_change_outputs() {
        let (mut registry, mut rng, mut params) = setup(16);
        params.weight_perturb_prob = 0.0;
        params.weight_reset_prob = 0.0;
        params.add_connection_prob = 0.0;
        params.add_node_prob = 1.0;
        let base = minimal_genome(&mut registry, &mut rng, &params, 0);
        let mut g = mutate(&base, &mut registry, &mut rng, &params);
        g = mutate(&g, &mut registry, &mut rng, &params);
        assert_eq!(g.hidden_node_count(), 2);

        let hidden: Vec<u32> = g
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Hidden)
            .map(|n| n.id)
            .collect();
        let swap = |id: u32| {
            if id == hidden[0] {
                hidden[1]
            } else if id == hidden[1] {
                hidden[0]
            } else {
                id
            }
        };
        let mut relabeled = g.clone();
        for n in &mut relabeled.nodes {
            n.id = swap(n.id);
        }
        for c in &mut relabeled.connections {
            c.from = swap(c.from);
            c.to = swap(c.to);
        }
        let inputs = [0.9, 0.1, 0.4, 0.0, 0.3, 0.8, 0.6];
        assert_eq!(activate(&g, &inputs, &params), activate(&relabeled, &inputs, &params));
    }

    #[test]
    fn malformed_genomes_fail_validation() {
        let (mut registry, mut rng, params) = setup(17);
        let g = minimal_genome(&mut registry, &mut rng, &params, 0);

        let mut dup_innov = g.clone();
        dup_innov.connections[1].innovation = dup_innov.connections[0].innovation;
        assert!(dup_innov.validate(&params).is_err());

        let mut into_input = g.clone();
        into_input.connections[0].to = 0;
        assert!(into_input.validate(&params).is_err());

        let mut cyclic = g.clone();
        cyclic.nodes.push(NodeGene { id: 10, kind: NodeKind::Hidden });
        cyclic.nodes.push(NodeGene { id: 11, kind: NodeKind::Hidden });
        cyclic.connections.push(ConnectionGene {
            innovation: 100,
            from: 10,
            to: 11,
            weight: 0.1,
            enabled: true,
        });
        cyclic.connections.push(ConnectionGene {
            innovation: 101,
            from: 11,
            to: 10,
            weight: 0.1,
            enabled: false, // disabled cycles are still rejected
        });
        assert!(cyclic.validate(&params).is_err());
    }
}
