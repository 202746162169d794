//! The three per-robot controllers.
//!
//! All of them share the same outer guard: once home and sink are
//! connected every robot stops, freezing the chain. The preprogrammed and
//! neural controllers additionally stop while they are a member of the
//! longest home route with all adjacent members correctly spaced; anything
//! else falls through to free movement (random walk, or the evolved
//! network's wheel outputs).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arena::SensorArray;
use crate::error::{Error, Result};
use crate::neat::{activate, Genome, NeatParams};

/// Which controller every robot in a run is equipped with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    #[default]
    RandomWalk,
    Preprogrammed,
    #[serde(rename = "odneat")]
    OdNeat,
}

impl ControllerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::RandomWalk => "random_walk",
            ControllerKind::Preprogrammed => "preprogrammed",
            ControllerKind::OdNeat => "odneat",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_walk" => Ok(ControllerKind::RandomWalk),
            "preprogrammed" => Ok(ControllerKind::Preprogrammed),
            "odneat" => Ok(ControllerKind::OdNeat),
            other => Err(Error::Config(format!(
                "unknown controller '{other}' (expected random_walk | preprogrammed | odneat)"
            ))),
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How left/right random-walk draws drive the wheels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TurnStyle {
    /// One wheel stopped: the robot arcs, turning partially.
    #[default]
    Arc,
    /// Wheels counter-rotate: the robot spins in place.
    InPlace,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerParams {
    pub kind: ControllerKind,
    /// A new random direction is drawn every this many steps.
    pub redraw_period: u64,
    pub turn_style: TurnStyle,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            kind: ControllerKind::RandomWalk,
            redraw_period: 10,
            turn_style: TurnStyle::Arc,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<()> {
        if self.redraw_period == 0 {
            return Err(Error::Config("redraw_period must be >= 1".into()));
        }
        Ok(())
    }
}

/// Left/right wheel speeds in m/s, bounded by `max_wheel_speed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelCommand {
    pub left: f64,
    pub right: f64,
}

impl WheelCommand {
    pub const STOP: WheelCommand = WheelCommand { left: 0.0, right: 0.0 };
}

/// Everything a controller may consult in one step.
#[derive(Debug, Clone)]
pub struct ControlView {
    pub full_connection: bool,
    pub on_longest_home_route: bool,
    pub in_optimal_range: bool,
    /// Proximity readings; only the neural controller consumes them.
    pub sensors: Option<SensorArray>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Backward,
    Left,
    Right,
}

/// Per-robot random-walk state: the held direction and its own RNG stream.
#[derive(Debug, Clone)]
pub struct WalkState {
    rng: ChaCha8Rng,
    direction: Direction,
    steps_since_draw: u64,
}

impl WalkState {
    pub fn new(seed: u64) -> WalkState {
        WalkState {
            rng: ChaCha8Rng::seed_from_u64(seed),
            direction: Direction::Forward,
            steps_since_draw: 0,
        }
    }

    /// Draw a fresh direction every `redraw_period` walking steps and hold
    /// it in between. Guarded steps (stops) do not advance the schedule.
    fn walk(&mut self, params: &ControllerParams, max_speed: f64) -> WheelCommand {
        if self.steps_since_draw % params.redraw_period == 0 {
            self.direction = match self.rng.gen_range(0..4u8) {
                0 => Direction::Forward,
                1 => Direction::Backward,
                2 => Direction::Left,
                _ => Direction::Right,
            };
            self.steps_since_draw = 0;
        }
        self.steps_since_draw += 1;
        let v = max_speed;
        match (self.direction, params.turn_style) {
            (Direction::Forward, _) => WheelCommand { left: v, right: v },
            (Direction::Backward, _) => WheelCommand { left: -v, right: -v },
            (Direction::Left, TurnStyle::Arc) => WheelCommand { left: 0.0, right: v },
            (Direction::Right, TurnStyle::Arc) => WheelCommand { left: v, right: 0.0 },
            (Direction::Left, TurnStyle::InPlace) => WheelCommand { left: -v, right: v },
            (Direction::Right, TurnStyle::InPlace) => WheelCommand { left: v, right: -v },
        }
    }
}

/// Random walk: stop once fully connected, otherwise wander.
pub fn random_walk_step(
    state: &mut WalkState,
    view: &ControlView,
    params: &ControllerParams,
    max_speed: f64,
) -> WheelCommand {
    if view.full_connection {
        return WheelCommand::STOP;
    }
    state.walk(params, max_speed)
}

/// Chain builder: stop when fully connected, stop while a correctly spaced
/// chain member, otherwise wander like the random walk.
pub fn preprogrammed_step(
    state: &mut WalkState,
    view: &ControlView,
    params: &ControllerParams,
    max_speed: f64,
) -> WheelCommand {
    if view.full_connection {
        return WheelCommand::STOP;
    }
    if view.on_longest_home_route && view.in_optimal_range {
        return WheelCommand::STOP;
    }
    state.walk(params, max_speed)
}

/// Neural controller: same stop rules, otherwise the genome's two outputs
/// in (0, 1) map affinely onto the wheels: wheel = (2*o - 1) * max_speed.
pub fn odneat_controller_step(
    genome: &Genome,
    view: &ControlView,
    neat: &NeatParams,
    max_speed: f64,
) -> WheelCommand {
    if view.full_connection {
        return WheelCommand::STOP;
    }
    if view.on_longest_home_route && view.in_optimal_range {
        return WheelCommand::STOP;
    }
    let sensors = view.sensors.as_ref().expect("neural controller needs sensors");
    let outputs = activate(genome, &sensors.readings, neat);
    map_outputs_to_wheels(outputs, max_speed)
}

/// Affine map from network outputs to wheel speeds; output 0 drives the
/// left wheel, output 1 the right.
pub fn map_outputs_to_wheels(outputs: [f64; 2], max_speed: f64) -> WheelCommand {
    WheelCommand {
        left: (2.0 * outputs[0] - 1.0) * max_speed,
        right: (2.0 * outputs[1] - 1.0) * max_speed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neat::{minimal_genome, InnovationRegistry};
    use rand::SeedableRng;

    fn view(full: bool, on_lhr: bool, in_range: bool) -> ControlView {
        ControlView {
            full_connection: full,
            on_longest_home_route: on_lhr,
            in_optimal_range: in_range,
            sensors: Some(SensorArray { readings: [0.0; 7] }),
        }
    }

    fn params() -> ControllerParams {
        ControllerParams::default()
    }

    #[test]
    fn all_controllers_freeze_on_full_connection() {
        let mut walk = WalkState::new(1);
        let v = view(true, false, false);
        assert_eq!(random_walk_step(&mut walk, &v, &params(), 0.2), WheelCommand::STOP);
        assert_eq!(preprogrammed_step(&mut walk, &v, &params(), 0.2), WheelCommand::STOP);
        let mut registry = InnovationRegistry::new();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let neat = NeatParams::default();
        let genome = minimal_genome(&mut registry, &mut rng, &neat, 0);
        assert_eq!(
            odneat_controller_step(&genome, &v, &neat, 0.2),
            WheelCommand::STOP
        );
    }

    #[test]
    fn forward_drives_both_wheels_at_max() {
        let mut walk = WalkState::new(0);
        walk.direction = Direction::Forward;
        walk.steps_since_draw = 1; // mid-hold: no redraw
        let cmd = random_walk_step(&mut walk, &view(false, false, false), &params(), 0.20);
        assert_eq!(cmd, WheelCommand { left: 0.20, right: 0.20 });
    }

    #[test]
    fn direction_held_between_draws() {
        let mut walk = WalkState::new(3);
        let p = params();
        let v = view(false, false, false);
        let first = random_walk_step(&mut walk, &v, &p, 0.2);
        for _ in 1..p.redraw_period {
            assert_eq!(random_walk_step(&mut walk, &v, &p, 0.2), first);
        }
    }

    #[test]
    fn direction_frequencies_are_uniform() {
        let mut walk = WalkState::new(42);
        let mut p = params();
        p.redraw_period = 1; // fresh draw every step
        let v = view(false, false, false);
        let mut counts = [0u32; 4];
        let n = 100_000;
        for _ in 0..n {
            let cmd = random_walk_step(&mut walk, &v, &p, 0.2);
            let idx = match (cmd.left, cmd.right) {
                (l, r) if l > 0.0 && r > 0.0 => 0,
                (l, r) if l < 0.0 && r < 0.0 => 1,
                (l, _) if l == 0.0 => 2,
                _ => 3,
            };
            counts[idx] += 1;
        }
        for c in counts {
            let freq = f64::from(c) / f64::from(n);
            assert!((freq - 0.25).abs() < 0.01, "direction frequency {freq}");
        }
    }

    #[test]
    fn preprogrammed_branches() {
        let p = params();
        let mut walk = WalkState::new(5);
        // correctly spaced chain member stops
        assert_eq!(
            preprogrammed_step(&mut walk, &view(false, true, true), &p, 0.2),
            WheelCommand::STOP
        );
        // spacing violated: walks
        let cmd = preprogrammed_step(&mut walk, &view(false, true, false), &p, 0.2);
        assert_ne!(cmd, WheelCommand::STOP);
        // off the chain: walks
        let cmd = preprogrammed_step(&mut walk, &view(false, false, true), &p, 0.2);
        assert_ne!(cmd, WheelCommand::STOP);
    }

    #[test]
    fn wheel_map_endpoints_and_center() {
        assert_eq!(map_outputs_to_wheels([0.5, 0.5], 0.2), WheelCommand::STOP);
        let spin = map_outputs_to_wheels([1.0, 0.0], 0.2);
        assert_eq!(spin, WheelCommand { left: 0.2, right: -0.2 });
    }

    #[test]
    fn neural_outputs_stay_bounded() {
        let mut registry = InnovationRegistry::new();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let neat = NeatParams::default();
        let mut genome = minimal_genome(&mut registry, &mut rng, &neat, 0);
        for c in &mut genome.connections {
            c.weight = 5.0; // saturate
        }
        let v = ControlView {
            full_connection: false,
            on_longest_home_route: false,
            in_optimal_range: false,
            sensors: Some(SensorArray { readings: [1.0; 7] }),
        };
        let cmd = odneat_controller_step(&genome, &v, &neat, 0.2);
        assert!(cmd.left.abs() <= 0.2 && cmd.right.abs() <= 0.2);
        assert!(cmd.left > 0.19); // deeply saturated sigmoid
    }

    #[test]
    fn lhr_stop_overrides_genome() {
        let mut registry = InnovationRegistry::new();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let neat = NeatParams::default();
        let genome = minimal_genome(&mut registry, &mut rng, &neat, 0);
        let cmd = odneat_controller_step(&genome, &view(false, true, true), &neat, 0.2);
        assert_eq!(cmd, WheelCommand::STOP);
    }
}
