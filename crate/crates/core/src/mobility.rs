//! Seeded random-waypoint mobility.
//!
//! Every user owns an independent ChaCha8 substream keyed by `(seed, user id)`,
//! so a user's trajectory depends only on the master seed, its id, the room
//! and the time step, never on how many other users exist or the order in
//! which they are stepped.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BodyCylinder, Room};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityParams {
    pub velocity_mean: f64,
    /// Half-width of the uniform speed interval.
    pub velocity_span: f64,
    /// Dwell time at each waypoint, s.
    pub pause_s: f64,
    /// Height of the user's device, m.
    pub device_height: f64,
    /// Half-width of the uniform body-height interval around `device_height`.
    pub body_height_span: f64,
    /// Body width (cylinder diameter), m.
    pub user_width: f64,
    pub rate_min_bps: f64,
    pub rate_max_bps: f64,
}

impl MobilityParams {
    pub fn table1() -> Self {
        Self {
            velocity_mean: 1.0,
            velocity_span: 0.5,
            pause_s: 0.0,
            device_height: 1.5,
            body_height_span: 0.2,
            user_width: 0.2,
            rate_min_bps: 1e9,
            rate_max_bps: 10e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.velocity_mean >= 0.0 && self.velocity_span >= 0.0 && self.velocity_span <= self.velocity_mean) {
            return Err(Error::config(
                "velocity_mps_mean",
                format!(
                    "speed interval [{} - {}, {} + {}] must be non-negative",
                    self.velocity_mean, self.velocity_span, self.velocity_mean, self.velocity_span
                ),
            ));
        }
        if !(self.pause_s >= 0.0) {
            return Err(Error::config("pause_s", "must be >= 0"));
        }
        if !(self.device_height > 0.0) {
            return Err(Error::config("user_height_m", "must be > 0"));
        }
        if !(self.body_height_span >= 0.0 && self.body_height_span < self.device_height) {
            return Err(Error::config("body_height_span_m", "must be in [0, user_height_m)"));
        }
        if !(self.user_width > 0.0) {
            return Err(Error::config("user_width_m", "must be > 0"));
        }
        if !(self.rate_min_bps > 0.0 && self.rate_max_bps >= self.rate_min_bps) {
            return Err(Error::config("rate_min_gbps", "demand range must satisfy 0 < min <= max"));
        }
        Ok(())
    }
}

/// Deterministic random stream for one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw from `[lo, hi)`; returns `lo` for an empty interval.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi > lo {
            self.rng.gen_range(lo..hi)
        } else {
            lo
        }
    }

    fn point(&mut self, room: &Room) -> [f64; 2] {
        [self.uniform(0.0, room.length), self.uniform(0.0, room.width)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub id: usize,
    pub position: [f64; 2],
    /// Current speed, m/s.
    pub velocity: f64,
    pub waypoint: [f64; 2],
    pub body: BodyCylinder,
    /// Demanded rate R*, bit/s.
    pub demand_bps: f64,
    pub pause_remaining_s: f64,
}

impl UserState {
    /// A user standing still at `position` with a default body.
    pub fn stationary(id: usize, position: [f64; 2], demand_bps: f64, params: &MobilityParams) -> Self {
        Self {
            id,
            position,
            velocity: 0.0,
            waypoint: position,
            body: BodyCylinder { center: position, radius: params.user_width / 2.0, height: params.device_height },
            demand_bps,
            pause_remaining_s: 0.0,
        }
    }
}

/// Users plus the random streams that drive them.
#[derive(Debug, Clone)]
pub struct Crowd {
    pub users: Vec<UserState>,
    streams: Vec<RngStream>,
}

impl Crowd {
    /// Wraps externally constructed users; their streams are derived from
    /// `seed` and each user's id.
    pub fn from_users(users: Vec<UserState>, seed: u64) -> Self {
        let streams = users.iter().map(|u| RngStream::new(seed, u.id as u64)).collect();
        Self { users, streams }
    }

    pub fn step(&mut self, room: &Room, dt: f64, params: &MobilityParams) {
        for (u, rng) in self.users.iter_mut().zip(self.streams.iter_mut()) {
            *u = step_user(u, room, dt, rng, params);
        }
    }

    pub fn bodies(&self) -> Vec<BodyCylinder> {
        self.users.iter().map(|u| u.body).collect()
    }
}

/// Draws `m` users uniformly over the floor with speeds, demands and body
/// heights from `params`.
pub fn init_users(room: &Room, m: usize, seed: u64, params: &MobilityParams) -> Crowd {
    let mut users = Vec::with_capacity(m);
    let mut streams = Vec::with_capacity(m);
    for id in 0..m {
        let mut rng = RngStream::new(seed, id as u64);
        let position = rng.point(room);
        let waypoint = rng.point(room);
        let velocity = draw_velocity(&mut rng, params);
        let demand_bps = rng.uniform(params.rate_min_bps, params.rate_max_bps);
        let height = rng.uniform(
            params.device_height - params.body_height_span,
            params.device_height + params.body_height_span,
        );
        users.push(UserState {
            id,
            position,
            velocity,
            waypoint,
            body: BodyCylinder { center: position, radius: params.user_width / 2.0, height },
            demand_bps,
            pause_remaining_s: 0.0,
        });
        streams.push(rng);
    }
    Crowd { users, streams }
}

fn draw_velocity(rng: &mut RngStream, params: &MobilityParams) -> f64 {
    rng.uniform(params.velocity_mean - params.velocity_span, params.velocity_mean + params.velocity_span)
}

/// Advances one user by `dt` towards its waypoint. A user that would reach
/// the waypoint within the step stops on it and draws a new waypoint and
/// speed. A user with zero speed never moves and draws nothing.
pub fn step_user(u: &UserState, room: &Room, dt: f64, rng: &mut RngStream, params: &MobilityParams) -> UserState {
    let mut next = u.clone();
    if u.velocity <= 0.0 {
        return next;
    }
    if next.pause_remaining_s > 0.0 {
        next.pause_remaining_s = (next.pause_remaining_s - dt).max(0.0);
        return next;
    }
    let travel = u.velocity * dt;
    let (dx, dy) = (u.waypoint[0] - u.position[0], u.waypoint[1] - u.position[1]);
    let dist = dx.hypot(dy);
    if dist <= travel {
        next.position = u.waypoint;
        next.waypoint = rng.point(room);
        next.velocity = draw_velocity(rng, params);
        next.pause_remaining_s = params.pause_s;
    } else {
        next.position = [u.position[0] + dx / dist * travel, u.position[1] + dy / dist * travel];
    }
    next.position = [next.position[0].clamp(0.0, room.length), next.position[1].clamp(0.0, room.width)];
    next.body.center = next.position;
    next
}
