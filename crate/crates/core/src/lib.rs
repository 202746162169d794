//! Deterministic 2D swarm-robotics simulator for relay-chain connectivity
//! between two stationary endpoints, with three pluggable robot controllers:
//! a random walk, a preprogrammed chain builder, and a decentralized online
//! neuroevolution engine that evolves neural controllers on the robots
//! while they are deployed.
//!
//! The crate is organized around the simulation pipeline:
//!
//! - [`arena`]: walled 2D world, differential-drive kinematics, IR-style
//!   proximity sensing, collision clamping.
//! - [`connectivity`]: communication graph over robots and endpoints,
//!   distributed shortest-path-first route learning, longest-home-route
//!   chain tracking, full-connectivity detection.
//! - [`neat`]: genome encoding with innovation bookkeeping, mutation,
//!   crossover, compatibility distance, and feed-forward evaluation.
//! - [`odneat`]: the per-robot embodied evolution engine (energy-driven
//!   controller lifecycle, internal speciated population, tabu admission,
//!   genome broadcast/reception).
//! - [`controllers`]: the three controller behaviors.
//! - [`sim`]: the per-step orchestration of one simulation run.
//! - [`experiment`]: seeded batch runner, CSV records, summaries, and the
//!   Welch two-sample t-test.
//! - [`export`]: Graphviz DOT emission and topology snapshots.
//!
//! Everything is deterministic: a run is a pure function of its
//! configuration and seed, bit-for-bit.

pub mod arena;
pub mod config;
pub mod connectivity;
pub mod controllers;
pub mod error;
pub mod experiment;
pub mod export;
pub mod neat;
pub mod odneat;
pub mod seed;
pub mod sim;

pub use arena::{Pose, RobotState, SensorArray, World, WorldConfig};
pub use config::SimConfig;
pub use connectivity::{ChainStatus, CommGraph, NodeId, Route};
pub use controllers::{ControllerKind, WheelCommand};
pub use error::Error;
pub use experiment::{ExperimentPlan, RunRecord, WelchResult};
pub use neat::{Genome, InnovationRegistry, NeatParams};
pub use odneat::{OdNeatEngine, OdNeatParams};
pub use sim::{RunOutcome, Simulation};
