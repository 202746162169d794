//! One simulation run, start to finish.
//!
//! Step pipeline (all robots in id order, single-writer world):
//!
//! 1. Rebuild the communication graph from current positions, run one
//!    route-propagation round, compute the chain status and
//!    full-connectivity flag.
//! 2. Controllers: odNEAT engines broadcast/admit genomes, then every
//!    controller turns its view (chain flags, sensors) into wheel commands.
//! 3. Move all robots, clamping to contact and flagging collisions.
//! 4. odNEAT engines absorb the outcome: energy update from this step's
//!    collision and chain flags, then the replacement check.
//! 5. Outboxes are delivered to inboxes for the next step (genomes travel
//!    one step boundary, keeping admission order deterministic).
//!
//! The run ends when home and sink connect or at the step cutoff.
//! Connectivity first visible exactly at the cutoff step is reported as
//! not connected, so `connected == false` exactly when the cutoff value is
//! reported.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::arena::World;
use crate::config::SimConfig;
use crate::connectivity::{
    compute_longest_home_route, full_connection, propagate_routes, ChainStatus, CommGraph,
};
use crate::controllers::{
    odneat_controller_step, preprogrammed_step, random_walk_step, ControlView, ControllerKind,
    WalkState,
};
use crate::error::{Error, Result};
use crate::export::{SnapshotPolicy, TopologySnapshot};
use crate::odneat::{EnergyEvents, EventRecord, GenomeMessage, OdNeatEngine};
use crate::seed;

/// One line of the per-step trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub full_connection: bool,
    /// Node ids of the longest home route, e.g. ["home", "r3", "r7"].
    pub lhr: Vec<String>,
}

/// Final metrics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Steps until home and sink first connected; the cutoff value when
    /// they never did.
    pub steps_to_connectivity: u64,
    pub connected: bool,
    /// Swarm-total path length, meters.
    pub total_distance: f64,
    /// Controller replacements across all robots (odNEAT only).
    pub replacements: u64,
    /// Per-robot (node count, connection count) of the final deployed
    /// genomes (odNEAT only).
    pub genome_stats: Vec<(usize, usize)>,
}

enum ControllerSlot {
    RandomWalk(WalkState),
    Preprogrammed(WalkState),
    OdNeat(Box<OdNeatEngine>),
}

/// A single deterministic run: world, controllers, and collected outputs.
pub struct Simulation {
    pub world: World,
    cfg: SimConfig,
    controllers: Vec<ControllerSlot>,
    inboxes: Vec<Vec<GenomeMessage>>,
    chain: ChainStatus,
    connected: bool,
    /// Per-step trace, kept only when enabled.
    pub trace: Vec<TraceRecord>,
    record_trace: bool,
    /// Evolution event log, kept only when enabled.
    pub events: Vec<EventRecord>,
    record_events: bool,
    snapshot_policy: Option<SnapshotPolicy>,
    pub snapshots: Vec<TopologySnapshot>,
}

impl Simulation {
    pub fn new(cfg: &SimConfig, run_seed: u64) -> Result<Simulation> {
        cfg.validate()?;
        let world = World::spawn(&cfg.arena, run_seed)?;
        let n = world.robots.len();
        let mut events = Vec::new();
        let controllers: Vec<ControllerSlot> = (0..n as u32)
            .map(|robot| match cfg.controller.kind {
                ControllerKind::RandomWalk => {
                    ControllerSlot::RandomWalk(WalkState::new(seed::mix3(run_seed, robot.into(), 1)))
                }
                ControllerKind::Preprogrammed => ControllerSlot::Preprogrammed(WalkState::new(
                    seed::mix3(run_seed, robot.into(), 1),
                )),
                ControllerKind::OdNeat => ControllerSlot::OdNeat(Box::new(OdNeatEngine::new(
                    robot,
                    seed::mix3(run_seed, robot.into(), 2),
                    cfg.neat.clone(),
                    cfg.odneat.clone(),
                    &mut events,
                ))),
            })
            .collect();
        Ok(Simulation {
            cfg: cfg.clone(),
            inboxes: vec![Vec::new(); n],
            chain: ChainStatus {
                lhr: None,
                member: vec![false; n],
                in_optimal_range: vec![false; n],
            },
            connected: false,
            trace: Vec::new(),
            record_trace: false,
            events,
            record_events: false,
            snapshot_policy: None,
            snapshots: Vec::new(),
            world,
            controllers,
        })
    }

    /// Keep the per-step trace in memory (the CLI writes it out).
    pub fn with_trace(mut self) -> Simulation {
        self.record_trace = true;
        self
    }

    /// Keep the evolution event log (odNEAT runs).
    pub fn with_events(mut self) -> Simulation {
        self.record_events = true;
        self
    }

    pub fn with_snapshots(mut self, policy: SnapshotPolicy) -> Simulation {
        self.snapshot_policy = Some(policy);
        self
    }

    pub fn run(&mut self) -> RunOutcome {
        self.run_with_deadline(None)
            .expect("no deadline configured")
    }

    /// Run to completion, optionally bounded by a wall-clock deadline
    /// (checked between steps; a breach aborts the run).
    pub fn run_with_deadline(&mut self, deadline: Option<Instant>) -> Result<RunOutcome> {
        let max_steps = self.cfg.arena.max_steps;
        loop {
            self.refresh_connectivity();
            self.record_step();
            // cutoff first: a connection first visible at the cutoff step
            // is reported as the cutoff itself
            if self.world.step >= max_steps {
                return Ok(self.finish(max_steps, false));
            }
            if self.connected {
                let step = self.world.step;
                return Ok(self.finish(step, true));
            }
            if let Some(deadline) = deadline {
                if Instant::now() >= deadline {
                    return Err(Error::Timeout {
                        step: self.world.step,
                    });
                }
            }
            self.advance();
        }
    }

    fn refresh_connectivity(&mut self) {
        let graph = CommGraph::build(&self.world);
        propagate_routes(&mut self.world, &graph);
        self.chain = compute_longest_home_route(&self.world, &graph, &self.cfg.connectivity);
        self.connected = full_connection(&graph);
    }

    fn record_step(&mut self) {
        if self.record_trace {
            self.trace.push(TraceRecord {
                step: self.world.step,
                full_connection: self.connected,
                lhr: self
                    .chain
                    .lhr
                    .as_ref()
                    .map(|r| r.nodes().iter().map(|n| n.to_string()).collect())
                    .unwrap_or_default(),
            });
        }
        if let Some(policy) = self.snapshot_policy {
            if policy.due_during_run(self.world.step) {
                self.capture_snapshots();
            }
        }
    }

    fn capture_snapshots(&mut self) {
        let step = self.world.step;
        for slot in &self.controllers {
            if let ControllerSlot::OdNeat(engine) = slot {
                self.snapshots.push(TopologySnapshot {
                    robot: engine.robot_id,
                    step,
                    genome: engine.deployed().clone(),
                });
            }
        }
    }

    /// One full step: communicate + act, move, settle, deliver.
    fn advance(&mut self) {
        let step = self.world.step;
        let n = self.world.robots.len();
        let vmax = self.cfg.arena.max_wheel_speed;
        let mut commands = Vec::with_capacity(n);
        let mut outbox: Vec<(u32, crate::neat::Genome)> = Vec::new();

        for i in 0..n {
            let view = ControlView {
                full_connection: self.connected,
                on_longest_home_route: self.chain.member[i],
                in_optimal_range: self.chain.in_optimal_range[i],
                sensors: match self.cfg.controller.kind {
                    ControllerKind::OdNeat => Some(self.world.sense(i as u32)),
                    _ => None,
                },
            };
            let command = match &mut self.controllers[i] {
                ControllerSlot::RandomWalk(walk) => {
                    random_walk_step(walk, &view, &self.cfg.controller, vmax)
                }
                ControllerSlot::Preprogrammed(walk) => {
                    preprogrammed_step(walk, &view, &self.cfg.controller, vmax)
                }
                ControllerSlot::OdNeat(engine) => {
                    let inbox = std::mem::take(&mut self.inboxes[i]);
                    if let Some(genome) = engine.communicate(step, inbox, &mut self.events) {
                        outbox.push((i as u32, genome));
                    }
                    odneat_controller_step(engine.deployed(), &view, &self.cfg.neat, vmax)
                }
            };
            commands.push((command.left, command.right));
        }

        self.world.apply_commands(&commands);

        for i in 0..n {
            if let ControllerSlot::OdNeat(engine) = &mut self.controllers[i] {
                let events = EnergyEvents {
                    collided: self.world.robots[i].collided,
                    on_lhr: self.chain.member[i],
                    in_optimal_range: self.chain.in_optimal_range[i],
                };
                engine.absorb_outcome(step, events, &mut self.events);
            }
        }

        // genomes broadcast this step arrive next step
        for (sender, genome) in outbox {
            let from = self.world.robots[sender as usize].pose;
            for j in 0..n {
                if j as u32 == sender {
                    continue;
                }
                if from.distance_to(&self.world.robots[j].pose)
                    <= self.cfg.odneat.broadcast_range
                {
                    self.inboxes[j].push(GenomeMessage {
                        sender,
                        genome: genome.clone(),
                    });
                }
            }
        }
        if !self.record_events {
            self.events.clear();
        }
        self.world.step += 1;
    }

    fn finish(&mut self, steps: u64, connected: bool) -> RunOutcome {
        if let Some(policy) = self.snapshot_policy {
            let already = self
                .snapshots
                .last()
                .is_some_and(|s| s.step == self.world.step);
            if policy.end && !already {
                self.capture_snapshots();
            }
        }
        let mut replacements = 0;
        let mut genome_stats = Vec::new();
        for slot in &self.controllers {
            if let ControllerSlot::OdNeat(engine) = slot {
                replacements += engine.replacements;
                genome_stats.push((
                    engine.deployed().nodes.len(),
                    engine.deployed().connections.len(),
                ));
            }
        }
        RunOutcome {
            steps_to_connectivity: steps,
            connected,
            total_distance: self.world.swarm_distance,
            replacements,
            genome_stats,
        }
    }

    pub fn chain(&self) -> &ChainStatus {
        &self.chain
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// The deployed genome of one robot (odNEAT runs).
    pub fn deployed_genome(&self, robot: u32) -> Option<&crate::neat::Genome> {
        match &self.controllers[robot as usize] {
            ControllerSlot::OdNeat(engine) => Some(engine.deployed()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: ControllerKind) -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.controller.kind = kind;
        cfg
    }

    #[test]
    fn identical_seeds_reproduce_runs_exactly() {
        for kind in [
            ControllerKind::RandomWalk,
            ControllerKind::Preprogrammed,
            ControllerKind::OdNeat,
        ] {
            let mut cfg = config(kind);
            cfg.arena.max_steps = 300;
            cfg.arena.n_robots = 6;
            let run = |seed| {
                let mut sim = Simulation::new(&cfg, seed).unwrap().with_trace();
                let outcome = sim.run();
                let poses: Vec<_> = sim.world.robots.iter().map(|r| r.pose).collect();
                (outcome, poses, sim.trace.len())
            };
            let (a, pa, ta) = run(42);
            let (b, pb, tb) = run(42);
            assert_eq!(a, b, "{kind}");
            assert_eq!(pa, pb, "{kind}");
            assert_eq!(ta, tb, "{kind}");
            let (c, pc, _) = run(43);
            assert!(c != a || pc != pa, "{kind}: different seed, same run");
        }
    }

    #[test]
    fn containment_and_speed_bound_hold_throughout() {
        let mut cfg = config(ControllerKind::RandomWalk);
        cfg.arena.max_steps = 400;
        cfg.arena.n_robots = 8;
        let mut sim = Simulation::new(&cfg, 7).unwrap();
        let half_w = cfg.arena.width / 2.0 - cfg.arena.robot_radius;
        let half_h = cfg.arena.height / 2.0 - cfg.arena.robot_radius;
        let cap = cfg.arena.max_wheel_speed * cfg.arena.dt + 1e-12;
        let mut last_distance = 0.0;
        for _ in 0..cfg.arena.max_steps {
            let before: Vec<_> = sim.world.robots.iter().map(|r| r.pose).collect();
            sim.refresh_connectivity();
            if sim.is_connected() {
                break;
            }
            sim.advance();
            for (robot, old) in sim.world.robots.iter().zip(&before) {
                assert!(robot.pose.x.abs() <= half_w + 1e-12);
                assert!(robot.pose.y.abs() <= half_h + 1e-12);
                assert!(robot.pose.distance_to(old) <= cap);
            }
            assert!(sim.world.swarm_distance >= last_distance);
            last_distance = sim.world.swarm_distance;
        }
    }

    #[test]
    fn connected_spawn_reports_zero_steps() {
        let mut cfg = config(ControllerKind::RandomWalk);
        // home and sink in a 1 m arena sit ~0.57 m apart: directly in
        // range of each other, so the world is connected at step 0
        cfg.arena.width = 1.0;
        cfg.arena.height = 1.0;
        cfg.arena.n_robots = 4;
        cfg.arena.spawn_radius = 0.5;
        let mut sim = Simulation::new(&cfg, 5).unwrap();
        let outcome = sim.run();
        assert!(outcome.connected);
        assert_eq!(outcome.steps_to_connectivity, 0);
        assert_eq!(outcome.total_distance, 0.0);
    }

    #[test]
    fn cutoff_reports_max_steps_and_not_connected() {
        let mut cfg = config(ControllerKind::RandomWalk);
        cfg.arena.max_steps = 50;
        cfg.arena.n_robots = 2;
        let mut sim = Simulation::new(&cfg, 9).unwrap().with_trace();
        let outcome = sim.run();
        assert!(!outcome.connected);
        assert_eq!(outcome.steps_to_connectivity, 50);
        // trace covers steps 0..=50
        assert_eq!(sim.trace.len(), 51);
        assert_eq!(sim.trace.last().unwrap().step, 50);
    }

    #[test]
    fn odneat_run_produces_audit_events_and_snapshots() {
        let mut cfg = config(ControllerKind::OdNeat);
        cfg.arena.max_steps = 120;
        cfg.arena.n_robots = 5;
        let mut sim = Simulation::new(&cfg, 3)
            .unwrap()
            .with_events()
            .with_snapshots(SnapshotPolicy::default());
        let outcome = sim.run();
        // one init deploy per robot
        let init_deploys = sim
            .events
            .iter()
            .filter(|e| {
                matches!(
                    e.kind,
                    crate::odneat::EventKind::Deploy {
                        origin: crate::odneat::DeployOrigin::Init,
                        ..
                    }
                )
            })
            .count();
        assert_eq!(init_deploys, 5);
        // start + end snapshots for every robot
        assert_eq!(sim.snapshots.len(), 10);
        assert!(sim.snapshots[..5].iter().all(|s| s.step == 0));
        assert!(sim.snapshots[..5]
            .iter()
            .all(|s| s.genome.hidden_node_count() == 0));
        assert_eq!(outcome.genome_stats.len(), 5);
    }

    #[test]
    fn route_soundness_holds_under_movement() {
        let mut cfg = config(ControllerKind::Preprogrammed);
        cfg.arena.max_steps = 250;
        cfg.arena.n_robots = 8;
        let mut sim = Simulation::new(&cfg, 11).unwrap();
        for _ in 0..cfg.arena.max_steps {
            sim.refresh_connectivity();
            // every stored route is a valid path in the current graph,
            // starting at its endpoint and ending at its owner
            let graph = CommGraph::build(&sim.world);
            for (i, robot) in sim.world.robots.iter().enumerate() {
                for (route, endpoint) in [
                    (&robot.home_route, crate::connectivity::NodeId::Home),
                    (&robot.sink_route, crate::connectivity::NodeId::Sink),
                ] {
                    if let Some(route) = route {
                        assert!(route.valid_in(&graph));
                        assert_eq!(route.nodes()[0], endpoint);
                        assert_eq!(
                            route.owner(),
                            crate::connectivity::NodeId::Robot(i as u32)
                        );
                    }
                }
            }
            if sim.is_connected() {
                break;
            }
            sim.advance();
        }
    }

    #[test]
    fn broadcast_range_limits_delivery() {
        let mut cfg = config(ControllerKind::OdNeat);
        cfg.arena.max_steps = 2;
        cfg.arena.n_robots = 3;
        cfg.odneat.broadcast_range = 0.0; // nobody in range
        let mut sim = Simulation::new(&cfg, 21).unwrap().with_events();
        sim.run();
        let receipts = sim
            .events
            .iter()
            .filter(|e| {
                matches!(
                    e.kind,
                    crate::odneat::EventKind::InboxAccept { .. }
                        | crate::odneat::EventKind::InboxReject { .. }
                )
            })
            .count();
        assert_eq!(receipts, 0);
    }
}
