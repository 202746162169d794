//! Walled 2D arena with differential-drive robots.
//!
//! Coordinates are centered on the arena: x in [-width/2, width/2], y in
//! [-height/2, height/2]. Robots are circles of `robot_radius`; their
//! centers must stay inside the walls inset by that radius. Motion is
//! explicit Euler over `dt`; a move that would penetrate a wall or another
//! robot body is clamped to contact and raises that robot's collision flag
//! for the step.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::connectivity::Route;
use crate::error::{Error, Result};
use crate::seed;

/// Candidate draws per robot before spawn placement gives up.
const SPAWN_ATTEMPTS_PER_ROBOT: u32 = 10_000;

/// Sensor mount angles relative to heading, front-left-to-right then
/// back-left, back-right (Thymio II layout: five front, two back).
pub const SENSOR_MOUNT_DEG: [f64; 7] = [40.0, 20.0, 0.0, -20.0, -40.0, 150.0, -150.0];

/// Arena geometry, robot dimensions, and run bounds.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    /// Arena width in meters.
    pub width: f64,
    /// Arena height in meters.
    pub height: f64,
    /// Number of mobile robots.
    pub n_robots: u32,
    /// Communication range between nodes, meters.
    pub comm_range: f64,
    /// Proximity sensor range, meters (measured from the body surface).
    pub sensor_range: f64,
    /// Robot body radius, meters.
    pub robot_radius: f64,
    /// Wheel separation, meters.
    pub wheel_base: f64,
    /// Wheel speed limit, m/s.
    pub max_wheel_speed: f64,
    /// Seconds per simulation step.
    pub dt: f64,
    /// Step cutoff for one run.
    pub max_steps: u64,
    /// Home endpoint position; `None` places it in the lower-left corner
    /// area, 0.3 m from each wall.
    pub home_pos: Option<[f64; 2]>,
    /// Sink endpoint position; `None` places it opposite home.
    pub sink_pos: Option<[f64; 2]>,
    /// Robots start uniformly at random within this radius of home.
    pub spawn_radius: f64,
    /// Run seed; the CLI `--seed` flag overrides it.
    pub rng_seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            width: 4.0,
            height: 4.0,
            n_robots: 10,
            comm_range: 0.75,
            sensor_range: 0.15,
            robot_radius: 0.08,
            wheel_base: 0.095,
            max_wheel_speed: 0.20,
            dt: 0.1,
            max_steps: 10_000,
            home_pos: None,
            sink_pos: None,
            spawn_radius: 0.7,
            rng_seed: 0,
        }
    }
}

impl WorldConfig {
    pub fn home(&self) -> [f64; 2] {
        self.home_pos
            .unwrap_or([-self.width / 2.0 + 0.3, -self.height / 2.0 + 0.3])
    }

    pub fn sink(&self) -> [f64; 2] {
        self.sink_pos
            .unwrap_or([self.width / 2.0 - 0.3, self.height / 2.0 - 0.3])
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.width > 0.0) {
            problems.push("width must be > 0".to_string());
        }
        if !(self.height > 0.0) {
            problems.push("height must be > 0".to_string());
        }
        if !(self.comm_range > 2.0 * self.robot_radius) {
            problems.push("comm_range must exceed 2*robot_radius".to_string());
        }
        for v in [
            ("sensor_range", self.sensor_range),
            ("robot_radius", self.robot_radius),
            ("wheel_base", self.wheel_base),
            ("max_wheel_speed", self.max_wheel_speed),
            ("dt", self.dt),
            ("spawn_radius", self.spawn_radius),
        ] {
            if !(v.1 > 0.0) || !v.1.is_finite() {
                problems.push(format!("{} must be a positive finite number", v.0));
            }
        }
        if self.n_robots == 0 {
            problems.push("n_robots must be >= 1".to_string());
        }
        for (name, [x, y]) in [("home_pos", self.home()), ("sink_pos", self.sink())] {
            if x.abs() > self.width / 2.0 - self.robot_radius
                || y.abs() > self.height / 2.0 - self.robot_radius
            {
                problems.push(format!(
                    "{name} must lie strictly inside the walls by at least robot_radius"
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Planar position plus heading, heading normalized to [-pi, pi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Wrap an angle into [-pi, pi).
pub fn normalize_angle(mut a: f64) -> f64 {
    use std::f64::consts::PI;
    a = a.rem_euclid(2.0 * PI);
    if a >= PI {
        a -= 2.0 * PI;
    }
    a
}

/// Seven proximity readings in [0, 1]: five front sensors left-to-right,
/// then back-left and back-right. 0 = nothing within range, 1 = contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorArray {
    pub readings: [f64; 7],
}

impl SensorArray {
    pub fn mount_angles() -> [f64; 7] {
        SENSOR_MOUNT_DEG.map(|d| d.to_radians())
    }
}

/// One robot's mutable simulation state.
#[derive(Debug, Clone)]
pub struct RobotState {
    pub id: u32,
    pub pose: Pose,
    /// Raised when the most recent move was clamped against a wall or body.
    pub collided: bool,
    /// Wheel commands beyond max_wheel_speed are clamped and counted.
    pub clamp_warnings: u64,
    /// Path length traveled so far, meters.
    pub distance: f64,
    pub home_route: Option<Route>,
    pub sink_route: Option<Route>,
}

/// The mutable world: configuration, robots, endpoints, step counter.
#[derive(Debug, Clone)]
pub struct World {
    pub cfg: WorldConfig,
    pub robots: Vec<RobotState>,
    pub home: [f64; 2],
    pub sink: [f64; 2],
    pub step: u64,
    pub swarm_distance: f64,
    pub seed: u64,
}

impl World {
    /// Place `cfg.n_robots` robots uniformly at random (seeded) within
    /// `spawn_radius` of home, non-overlapping and inside the walls, with
    /// uniform random headings.
    pub fn spawn(cfg: &WorldConfig, run_seed: u64) -> Result<World> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed::mix2(run_seed, 0xA5EA));
        let home = cfg.home();
        let sink = cfg.sink();
        let half_w = cfg.width / 2.0 - cfg.robot_radius;
        let half_h = cfg.height / 2.0 - cfg.robot_radius;
        let min_sep = 2.0 * cfg.robot_radius;

        let mut robots: Vec<RobotState> = Vec::with_capacity(cfg.n_robots as usize);
        for id in 0..cfg.n_robots {
            let mut placed = false;
            for _ in 0..SPAWN_ATTEMPTS_PER_ROBOT {
                // uniform over the spawn disk via rejection from its bounding square
                let dx = rng.gen_range(-cfg.spawn_radius..=cfg.spawn_radius);
                let dy = rng.gen_range(-cfg.spawn_radius..=cfg.spawn_radius);
                if dx * dx + dy * dy > cfg.spawn_radius * cfg.spawn_radius {
                    continue;
                }
                let (x, y) = (home[0] + dx, home[1] + dy);
                if x.abs() > half_w || y.abs() > half_h {
                    continue;
                }
                if robots
                    .iter()
                    .any(|r| (r.pose.x - x).powi(2) + (r.pose.y - y).powi(2) <= min_sep * min_sep)
                {
                    continue;
                }
                let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                robots.push(RobotState {
                    id,
                    pose: Pose::new(x, y, heading),
                    collided: false,
                    clamp_warnings: 0,
                    distance: 0.0,
                    home_route: None,
                    sink_route: None,
                });
                placed = true;
                break;
            }
            if !placed {
                return Err(Error::SpawnFailure {
                    requested: cfg.n_robots,
                    placed: id,
                    spawn_radius: cfg.spawn_radius,
                });
            }
        }
        Ok(World {
            cfg: cfg.clone(),
            robots,
            home,
            sink,
            step: 0,
            swarm_distance: 0.0,
            seed: run_seed,
        })
    }

    /// Apply one step of wheel commands to every robot, in robot-id order,
    /// clamping each move to first contact. Updates collision flags and
    /// accumulates per-robot and swarm travel distance. Returns swarm total.
    pub fn apply_commands(&mut self, commands: &[(f64, f64)]) -> f64 {
        assert_eq!(commands.len(), self.robots.len());
        for i in 0..self.robots.len() {
            let (mut left, mut right) = commands[i];
            let vmax = self.cfg.max_wheel_speed;
            if left.abs() > vmax || right.abs() > vmax {
                left = left.clamp(-vmax, vmax);
                right = right.clamp(-vmax, vmax);
                self.robots[i].clamp_warnings += 1;
            }
            let start = self.robots[i].pose;
            let target = integrate_pose(&start, left, right, self.cfg.wheel_base, self.cfg.dt);
            let (end, collided) = self.resolve_move(i, &start, &target);
            let moved = start.distance_to(&end);
            let robot = &mut self.robots[i];
            robot.pose = end;
            robot.collided = collided;
            robot.distance += moved;
            self.swarm_distance += moved;
        }
        self.swarm_distance
    }

    /// Clamp robot `i`'s move from `start` toward `target` to first contact
    /// with a wall or another robot body.
    fn resolve_move(&self, i: usize, start: &Pose, target: &Pose) -> (Pose, bool) {
        let half_w = self.cfg.width / 2.0 - self.cfg.robot_radius;
        let half_h = self.cfg.height / 2.0 - self.cfg.robot_radius;
        let mut collided = false;

        // Walls: per-axis clamp, so contact slides along the wall.
        let mut x = target.x;
        let mut y = target.y;
        if x.abs() > half_w {
            x = x.clamp(-half_w, half_w);
            collided = true;
        }
        if y.abs() > half_h {
            y = y.clamp(-half_h, half_h);
            collided = true;
        }

        // Other robot bodies: back off along the (wall-clamped) segment to
        // the earliest contact. Robots already in contact may still move
        // apart.
        let dx = x - start.x;
        let dy = y - start.y;
        let min_sep = 2.0 * self.cfg.robot_radius;
        let mut t_stop = 1.0_f64;
        if dx != 0.0 || dy != 0.0 {
            for (j, other) in self.robots.iter().enumerate() {
                if j == i {
                    continue;
                }
                let ox = start.x - other.pose.x;
                let oy = start.y - other.pose.y;
                let dist0_sq = ox * ox + oy * oy;
                let toward = dx * ox + dy * oy; // < 0 means approaching
                if dist0_sq <= min_sep * min_sep {
                    if toward < 0.0 {
                        t_stop = 0.0;
                        collided = true;
                    }
                    continue;
                }
                // |o + t*d|^2 = min_sep^2, smallest root in (0, 1]
                let a = dx * dx + dy * dy;
                let b = 2.0 * toward;
                let c = dist0_sq - min_sep * min_sep;
                let disc = b * b - 4.0 * a * c;
                if disc <= 0.0 {
                    continue;
                }
                let t_hit = (-b - disc.sqrt()) / (2.0 * a);
                if t_hit >= 0.0 && t_hit < t_stop {
                    t_stop = t_hit;
                    collided = true;
                }
            }
        }
        let pose = Pose {
            x: start.x + dx * t_stop,
            y: start.y + dy * t_stop,
            heading: target.heading,
        };
        (pose, collided)
    }

    /// Seven-ray proximity scan for one robot against walls and all other
    /// robot bodies. Readings are 1 at body contact, 0 beyond sensor range,
    /// linear in between.
    pub fn sense(&self, robot_id: u32) -> SensorArray {
        let robot = &self.robots[robot_id as usize];
        let mut readings = [0.0_f64; 7];
        for (k, mount) in SensorArray::mount_angles().iter().enumerate() {
            let angle = robot.pose.heading + mount;
            let (dir_x, dir_y) = (angle.cos(), angle.sin());
            let mut nearest = f64::INFINITY;

            if let Some(t) = ray_box_exit(
                robot.pose.x,
                robot.pose.y,
                dir_x,
                dir_y,
                self.cfg.width / 2.0,
                self.cfg.height / 2.0,
            ) {
                nearest = t;
            }
            for other in &self.robots {
                if other.id == robot.id {
                    continue;
                }
                if let Some(t) = ray_circle(
                    robot.pose.x,
                    robot.pose.y,
                    dir_x,
                    dir_y,
                    other.pose.x,
                    other.pose.y,
                    self.cfg.robot_radius,
                ) {
                    if t < nearest {
                        nearest = t;
                    }
                }
            }
            // distance beyond the robot's own body surface
            let d = nearest - self.cfg.robot_radius;
            if d <= self.cfg.sensor_range {
                readings[k] = (1.0 - d / self.cfg.sensor_range).clamp(0.0, 1.0);
            }
        }
        SensorArray { readings }
    }

}

/// Differential-drive kinematics integrated by explicit Euler: linear speed
/// is the wheel mean, turn rate is the wheel difference over the wheel base.
pub fn integrate_pose(pose: &Pose, left: f64, right: f64, wheel_base: f64, dt: f64) -> Pose {
    let v = (left + right) / 2.0;
    let omega = (right - left) / wheel_base;
    Pose::new(
        pose.x + v * pose.heading.cos() * dt,
        pose.y + v * pose.heading.sin() * dt,
        pose.heading + omega * dt,
    )
}

/// Distance from a point inside the box [-hw, hw] x [-hh, hh] to the wall
/// along direction (dx, dy). Returns `None` for a degenerate direction.
fn ray_box_exit(px: f64, py: f64, dx: f64, dy: f64, hw: f64, hh: f64) -> Option<f64> {
    let mut t_exit = f64::INFINITY;
    if dx > 0.0 {
        t_exit = t_exit.min((hw - px) / dx);
    } else if dx < 0.0 {
        t_exit = t_exit.min((-hw - px) / dx);
    }
    if dy > 0.0 {
        t_exit = t_exit.min((hh - py) / dy);
    } else if dy < 0.0 {
        t_exit = t_exit.min((-hh - py) / dy);
    }
    if t_exit.is_finite() {
        Some(t_exit.max(0.0))
    } else {
        None
    }
}

/// Nearest positive intersection of a ray with a circle of radius `r`
/// centered at (cx, cy).
fn ray_circle(px: f64, py: f64, dx: f64, dy: f64, cx: f64, cy: f64, r: f64) -> Option<f64> {
    let ox = px - cx;
    let oy = py - cy;
    let b = 2.0 * (dx * ox + dy * oy);
    let c = ox * ox + oy * oy - r * r;
    let disc = b * b - 4.0 * c; // a == 1 for a unit direction
    if disc < 0.0 {
        return None;
    }
    let sqrt_disc = disc.sqrt();
    let t0 = (-b - sqrt_disc) / 2.0;
    let t1 = (-b + sqrt_disc) / 2.0;
    if t0 >= 0.0 {
        Some(t0)
    } else if t1 >= 0.0 {
        Some(t1)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg() -> WorldConfig {
        WorldConfig::default()
    }

    #[test]
    fn straight_line_advance() {
        let p = integrate_pose(&Pose::new(0.0, 0.0, 0.0), 0.20, 0.20, 0.095, 0.1);
        assert_abs_diff_eq!(p.x, 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.heading, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pure_rotation_keeps_position() {
        let p0 = Pose::new(0.3, -0.2, 0.5);
        let p = integrate_pose(&p0, -0.1, 0.1, 0.095, 0.1);
        assert_eq!((p.x, p.y), (p0.x, p0.y));
        assert_abs_diff_eq!(p.heading, 0.5 + (0.1 - (-0.1)) / 0.095 * 0.1, epsilon = 1e-15);
    }

    #[test]
    fn heading_normalization_wraps() {
        use std::f64::consts::PI;
        assert_abs_diff_eq!(normalize_angle(PI), -PI, epsilon = 1e-12);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI + 0.1), -PI + 0.1, epsilon = 1e-12);
        assert!(normalize_angle(-PI) >= -PI && normalize_angle(-PI) < PI);
    }

    #[test]
    fn wall_clamp_sets_flag() {
        // Desk-scale oracle: wall inset is width/2 - robot_radius = 1.92.
        // Starting 0.01 m short of it and commanding a 0.02 m straight move
        // must clamp exactly at 1.92 and flag the collision.
        let mut world = World::spawn(&cfg(), 1).unwrap();
        world.robots.truncate(1);
        world.robots[0].pose = Pose::new(1.91, 0.0, 0.0);
        let mut commands = vec![(0.20, 0.20)];
        world.apply_commands(&commands);
        assert_abs_diff_eq!(world.robots[0].pose.x, 1.92, epsilon = 1e-12);
        assert!(world.robots[0].collided);
        // moving away from the wall is allowed again
        world.robots[0].pose.heading = std::f64::consts::PI;
        commands[0] = (0.20, 0.20);
        world.apply_commands(&commands);
        assert!(!world.robots[0].collided);
        assert_abs_diff_eq!(world.robots[0].pose.x, 1.90, epsilon = 1e-12);
    }

    #[test]
    fn body_contact_stops_and_flags() {
        let mut world = World::spawn(&cfg(), 1).unwrap();
        world.robots.truncate(2);
        world.robots[0].pose = Pose::new(0.0, 0.0, 0.0);
        world.robots[1].pose = Pose::new(0.17, 0.0, 0.0);
        world.apply_commands(&[(0.20, 0.20), (0.0, 0.0)]);
        // 0.02 m requested, only 0.01 available before contact at 0.16
        assert_abs_diff_eq!(world.robots[0].pose.x, 0.01, epsilon = 1e-12);
        assert!(world.robots[0].collided);
        assert!(!world.robots[1].collided);
    }

    #[test]
    fn spawn_postconditions_hold() {
        let world = World::spawn(&cfg(), 1).unwrap();
        assert_eq!(world.robots.len(), 10);
        let home = world.home;
        for r in &world.robots {
            let d = ((r.pose.x - home[0]).powi(2) + (r.pose.y - home[1]).powi(2)).sqrt();
            assert!(d <= world.cfg.spawn_radius + 1e-12);
            assert!(r.pose.x.abs() <= world.cfg.width / 2.0 - world.cfg.robot_radius);
        }
        for a in &world.robots {
            for b in &world.robots {
                if a.id != b.id {
                    assert!(a.pose.distance_to(&b.pose) > 2.0 * world.cfg.robot_radius);
                }
            }
        }
        assert_eq!(world.step, 0);
    }

    #[test]
    fn spawn_is_deterministic() {
        let mut c = cfg();
        c.width = 2.0;
        c.height = 5.0;
        c.n_robots = 20;
        let a = World::spawn(&c, 7).unwrap();
        let b = World::spawn(&c, 7).unwrap();
        for (ra, rb) in a.robots.iter().zip(&b.robots) {
            assert_eq!(ra.pose, rb.pose);
        }
    }

    #[test]
    fn spawn_too_tight_is_config_error() {
        let mut c = cfg();
        c.n_robots = 20;
        c.spawn_radius = c.robot_radius;
        match World::spawn(&c, 3) {
            Err(Error::SpawnFailure { requested: 20, .. }) => {}
            other => panic!("expected spawn failure, got {other:?}"),
        }
    }

    #[test]
    fn sense_all_clear_in_center() {
        let mut world = World::spawn(&cfg(), 1).unwrap();
        world.robots.truncate(1);
        world.robots[0].pose = Pose::new(0.0, 0.0, 0.3);
        assert_eq!(world.sense(0).readings, [0.0; 7]);
    }

    #[test]
    fn sense_wall_at_half_range_reads_half() {
        // Ray-cast oracle: body surface sensor_range/2 = 0.075 m from the
        // wall, front-center ray perpendicular to it.
        let mut world = World::spawn(&cfg(), 1).unwrap();
        world.robots.truncate(1);
        let x = 2.0 - world.cfg.robot_radius - 0.075;
        world.robots[0].pose = Pose::new(x, 0.0, 0.0);
        let s = world.sense(0);
        assert_abs_diff_eq!(s.readings[2], 0.5, epsilon = 1e-12);
        // off-center front rays hit the wall obliquely, reading less
        assert!(s.readings[1] < 0.5);
        assert_eq!(s.readings[5], 0.0);
    }

    #[test]
    fn sense_contact_saturates_both() {
        let mut world = World::spawn(&cfg(), 1).unwrap();
        world.robots.truncate(2);
        world.robots[0].pose = Pose::new(0.0, 0.0, 0.0);
        world.robots[1].pose = Pose::new(0.16, 0.0, std::f64::consts::PI);
        assert_abs_diff_eq!(world.sense(0).readings[2], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(world.sense(1).readings[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn distance_accumulates_linearly() {
        let mut world = World::spawn(&cfg(), 1).unwrap();
        world.robots.truncate(1);
        world.robots[0].pose = Pose::new(-1.0, 0.0, 0.0);
        for _ in 0..10 {
            world.apply_commands(&[(0.20, 0.20)]);
        }
        assert_abs_diff_eq!(world.swarm_distance, 0.20, epsilon = 1e-12);
        // stopped robots add nothing; spinning in place adds nothing
        world.apply_commands(&[(0.0, 0.0)]);
        world.apply_commands(&[(-0.20, 0.20)]);
        assert_abs_diff_eq!(world.swarm_distance, 0.20, epsilon = 1e-12);
    }

    #[test]
    fn sensor_mirror_symmetry() {
        // Mirroring the obstacle across the heading axis swaps left/right.
        let mut world = World::spawn(&cfg(), 1).unwrap();
        world.robots.truncate(2);
        world.robots[0].pose = Pose::new(0.0, 0.0, 0.0);
        for &(ox, oy) in &[(0.15, 0.05), (0.1, -0.08), (-0.12, 0.07)] {
            world.robots[1].pose = Pose::new(ox, oy, 0.0);
            let up = world.sense(0).readings;
            world.robots[1].pose = Pose::new(ox, -oy, 0.0);
            let down = world.sense(0).readings;
            for (a, b) in [(0, 4), (1, 3), (5, 6)] {
                assert_abs_diff_eq!(up[a], down[b], epsilon = 1e-12);
                assert_abs_diff_eq!(up[b], down[a], epsilon = 1e-12);
            }
            assert_abs_diff_eq!(up[2], down[2], epsilon = 1e-12);
        }
    }

    #[test]
    fn overspeed_commands_clamp_and_count() {
        let mut world = World::spawn(&cfg(), 1).unwrap();
        world.robots.truncate(1);
        world.robots[0].pose = Pose::new(0.0, 0.0, 0.0);
        world.apply_commands(&[(0.5, 0.5)]);
        assert_eq!(world.robots[0].clamp_warnings, 1);
        assert_abs_diff_eq!(world.robots[0].pose.x, 0.02, epsilon = 1e-12);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Containment, per-step speed bound, and distance monotonicity
            /// hold under arbitrary command sequences.
            #[test]
            fn motion_invariants(
                seed in 0u64..1000,
                commands in proptest::collection::vec((-0.3f64..0.3, -0.3f64..0.3), 1..60),
            ) {
                let c = cfg();
                let mut world = World::spawn(&c, seed).unwrap();
                let half_w = c.width / 2.0 - c.robot_radius;
                let half_h = c.height / 2.0 - c.robot_radius;
                let cap = c.max_wheel_speed * c.dt + 1e-12;
                let mut last_total = 0.0;
                for (left, right) in commands {
                    let before: Vec<Pose> = world.robots.iter().map(|r| r.pose).collect();
                    let all: Vec<(f64, f64)> =
                        world.robots.iter().map(|_| (left, right)).collect();
                    let total = world.apply_commands(&all);
                    for (robot, old) in world.robots.iter().zip(&before) {
                        prop_assert!(robot.pose.x.abs() <= half_w + 1e-12);
                        prop_assert!(robot.pose.y.abs() <= half_h + 1e-12);
                        prop_assert!(robot.pose.distance_to(old) <= cap);
                        prop_assert!((-std::f64::consts::PI..std::f64::consts::PI)
                            .contains(&robot.pose.heading));
                    }
                    prop_assert!(total >= last_total);
                    last_total = total;
                }
            }

            /// Readings stay in [0, 1] for any pose.
            #[test]
            fn sensor_readings_bounded(
                x in -1.9f64..1.9,
                y in -1.9f64..1.9,
                heading in -3.1f64..3.1,
                ox in -1.9f64..1.9,
                oy in -1.9f64..1.9,
            ) {
                let mut world = World::spawn(&cfg(), 1).unwrap();
                world.robots.truncate(2);
                world.robots[0].pose = Pose::new(x, y, heading);
                world.robots[1].pose = Pose::new(ox, oy, 0.0);
                for reading in world.sense(0).readings {
                    prop_assert!((0.0..=1.0).contains(&reading));
                }
            }
        }
    }
}
