//! Communication graph and distributed route learning.
//!
//! Every step the graph is rebuilt from positions: nodes are the robots
//! plus the two stationary endpoints, edges connect pairs within
//! `comm_range` (closed ball). Each robot keeps a home route and a sink
//! route: ordered node lists from the endpoint to itself whose consecutive
//! elements were adjacent when the route was last validated. Routes spread
//! one hop per step (a neighbor has to hold a route during one round for
//! it to be adopted in the next), which keeps the learning decentralized
//! and makes chain breaks recover observably rather than instantly.

use serde::{Deserialize, Serialize};

use crate::arena::World;
use crate::error::{Error, Result};

/// A node of the communication graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Home,
    Sink,
    Robot(u32),
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NodeId::Home => write!(f, "home"),
            NodeId::Sink => write!(f, "sink"),
            NodeId::Robot(i) => write!(f, "r{i}"),
        }
    }
}

/// Tuning for the chain-membership spacing interval, as fractions of
/// `comm_range`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ConnectivityParams {
    pub optimal_range_min_frac: f64,
    pub optimal_range_max_frac: f64,
}

impl Default for ConnectivityParams {
    fn default() -> Self {
        ConnectivityParams {
            optimal_range_min_frac: 0.5,
            optimal_range_max_frac: 0.9,
        }
    }
}

impl ConnectivityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.optimal_range_min_frac > 0.0)
            || !(self.optimal_range_min_frac <= self.optimal_range_max_frac)
            || !(self.optimal_range_max_frac <= 1.0)
        {
            return Err(Error::Config(
                "optimal range fractions must satisfy 0 < min <= max <= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Undirected proximity graph over robots and endpoints, rebuilt per step.
#[derive(Debug, Clone)]
pub struct CommGraph {
    n_robots: usize,
    adjacency: Vec<bool>,
    neighbors: Vec<Vec<NodeId>>,
}

impl CommGraph {
    /// Edge (i, j) iff distance(i, j) <= comm_range; no self-edges.
    pub fn build(world: &World) -> CommGraph {
        let n = world.robots.len();
        let mut points: Vec<[f64; 2]> = Vec::with_capacity(n + 2);
        points.push(world.home);
        points.push(world.sink);
        points.extend(world.robots.iter().map(|r| [r.pose.x, r.pose.y]));
        let total = n + 2;
        let range_sq = world.cfg.comm_range * world.cfg.comm_range;

        let mut adjacency = vec![false; total * total];
        let mut neighbors = vec![Vec::new(); total];
        for a in 0..total {
            for b in a + 1..total {
                let dx = points[a][0] - points[b][0];
                let dy = points[a][1] - points[b][1];
                if dx * dx + dy * dy <= range_sq {
                    adjacency[a * total + b] = true;
                    adjacency[b * total + a] = true;
                    neighbors[a].push(Self::node_of(b));
                    neighbors[b].push(Self::node_of(a));
                }
            }
        }
        CommGraph {
            n_robots: n,
            adjacency,
            neighbors,
        }
    }

    fn node_of(index: usize) -> NodeId {
        match index {
            0 => NodeId::Home,
            1 => NodeId::Sink,
            i => NodeId::Robot((i - 2) as u32),
        }
    }

    fn index_of(&self, node: NodeId) -> usize {
        match node {
            NodeId::Home => 0,
            NodeId::Sink => 1,
            NodeId::Robot(i) => 2 + i as usize,
        }
    }

    pub fn n_robots(&self) -> usize {
        self.n_robots
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        let total = self.n_robots + 2;
        self.adjacency[self.index_of(a) * total + self.index_of(b)]
    }

    /// Neighbors of a node in ascending node order.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.neighbors[self.index_of(node)]
    }
}

/// Ordered node list from an endpoint to the owning robot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    nodes: Vec<NodeId>,
}

impl Route {
    pub fn new(nodes: Vec<NodeId>) -> Route {
        debug_assert!(nodes.len() >= 2);
        Route { nodes }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn hop_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn owner(&self) -> NodeId {
        *self.nodes.last().expect("route is nonempty")
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.nodes.contains(&node)
    }

    pub fn extended(&self, node: NodeId) -> Route {
        let mut nodes = self.nodes.clone();
        nodes.push(node);
        Route { nodes }
    }

    /// A route survives only while all its consecutive pairs stay adjacent.
    pub fn valid_in(&self, graph: &CommGraph) -> bool {
        self.nodes
            .windows(2)
            .all(|pair| graph.adjacent(pair[0], pair[1]))
    }
}

/// One distance-vector relaxation round for both endpoints: drop routes
/// broken by movement, then let each robot adopt the best neighbor offer
/// seen during the previous round.
pub fn propagate_routes(world: &mut World, graph: &CommGraph) {
    for robot in &mut world.robots {
        if let Some(route) = &robot.home_route {
            if !route.valid_in(graph) {
                robot.home_route = None;
            }
        }
        if let Some(route) = &robot.sink_route {
            if !route.valid_in(graph) {
                robot.sink_route = None;
            }
        }
    }

    let home_now: Vec<Option<Route>> = world.robots.iter().map(|r| r.home_route.clone()).collect();
    let sink_now: Vec<Option<Route>> = world.robots.iter().map(|r| r.sink_route.clone()).collect();
    let home_next = adoption_round(graph, NodeId::Home, &home_now);
    let sink_next = adoption_round(graph, NodeId::Sink, &sink_now);
    for (robot, (home, sink)) in world
        .robots
        .iter_mut()
        .zip(home_next.into_iter().zip(sink_next))
    {
        robot.home_route = home;
        robot.sink_route = sink;
    }
}

/// Synchronous adoption: candidates come from the snapshot `current`, so a
/// route advances exactly one hop per round. A robot adjacent to the
/// endpoint takes the direct route; otherwise it adopts the minimal-hop
/// neighbor offer (ties to the lexicographically smallest node sequence)
/// only if strictly shorter than what it already holds.
fn adoption_round(
    graph: &CommGraph,
    endpoint: NodeId,
    current: &[Option<Route>],
) -> Vec<Option<Route>> {
    (0..current.len())
        .map(|i| {
            let me = NodeId::Robot(i as u32);
            if graph.adjacent(endpoint, me) {
                return Some(Route::new(vec![endpoint, me]));
            }
            let mut offer: Option<Route> = None;
            for &neighbor in graph.neighbors(me) {
                let NodeId::Robot(j) = neighbor else { continue };
                let Some(neighbor_route) = &current[j as usize] else {
                    continue;
                };
                if neighbor_route.contains(me) {
                    continue;
                }
                let candidate = neighbor_route.extended(me);
                let improves_current = match &current[i] {
                    None => true,
                    Some(held) => candidate.hop_count() < held.hop_count(),
                };
                if !improves_current {
                    continue;
                }
                let better_offer = match &offer {
                    None => true,
                    Some(best) => {
                        (candidate.hop_count(), candidate.nodes())
                            < (best.hop_count(), best.nodes())
                    }
                };
                if better_offer {
                    offer = Some(candidate);
                }
            }
            offer.or_else(|| current[i].clone())
        })
        .collect()
}

/// Longest home route plus the per-robot flags controllers consume.
#[derive(Debug, Clone)]
pub struct ChainStatus {
    /// The maximal-hop home route; `None` while no robot has one.
    pub lhr: Option<Route>,
    /// Robot is a node of the longest home route.
    pub member: Vec<bool>,
    /// Every adjacent chain member sits inside [r_min, r_max].
    pub in_optimal_range: Vec<bool>,
}

/// Pick the maximal-hop home route (ties: lexicographically smallest node
/// sequence) and evaluate the spacing rule for every robot against the
/// chain members adjacent to it.
pub fn compute_longest_home_route(
    world: &World,
    graph: &CommGraph,
    params: &ConnectivityParams,
) -> ChainStatus {
    let n = world.robots.len();
    let mut lhr: Option<&Route> = None;
    for robot in &world.robots {
        let Some(route) = &robot.home_route else {
            continue;
        };
        lhr = Some(match lhr {
            None => route,
            Some(best) => {
                if (route.hop_count(), std::cmp::Reverse(route.nodes()))
                    > (best.hop_count(), std::cmp::Reverse(best.nodes()))
                {
                    route
                } else {
                    best
                }
            }
        });
    }

    let mut member = vec![false; n];
    if let Some(route) = lhr {
        for node in route.nodes() {
            if let NodeId::Robot(i) = node {
                member[*i as usize] = true;
            }
        }
    }

    let r_min = params.optimal_range_min_frac * world.cfg.comm_range;
    let r_max = params.optimal_range_max_frac * world.cfg.comm_range;
    let mut in_optimal_range = vec![true; n];
    for i in 0..n {
        let me = NodeId::Robot(i as u32);
        for &neighbor in graph.neighbors(me) {
            let NodeId::Robot(j) = neighbor else { continue };
            if !member[j as usize] {
                continue;
            }
            let d = world.robots[i].pose.distance_to(&world.robots[j as usize].pose);
            if d < r_min || d > r_max {
                in_optimal_range[i] = false;
                break;
            }
        }
    }

    ChainStatus {
        lhr: lhr.cloned(),
        member,
        in_optimal_range,
    }
}

/// True iff home and sink lie in the same connected component.
pub fn full_connection(graph: &CommGraph) -> bool {
    let total = graph.n_robots + 2;
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for a in 0..total {
        for b in a + 1..total {
            if graph.adjacency[a * total + b] {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }
    find(&mut parent, 0) == find(&mut parent, 1)
}
